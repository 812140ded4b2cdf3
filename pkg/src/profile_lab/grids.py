"""Numerical representation of non-decreasing profile functions.

A :class:`GridFunction` stores a profile G in three zones:

* an analytic exponential tail ``coeff * exp(rate * (x - x_min))`` on
  ``(-inf, x_min]``,
* sampled values on a uniform grid over ``[x_min, 0]``, interpreted as the
  piecewise-linear interpolant (the stored value at 0 is the left limit
  G(0)),
* an ordered list of analytic :class:`Piece` objects on ``(0, inf)``, each a
  constant plus a sum of exponentials on a half-open interval ``(lo, hi]``.

All integrals are endpoint-corrected trapezoid sums on the grid zone (see
:func:`cumulative_integral`) and closed forms on the two analytic zones, so
the quadrature error comes only from the grid zone.

The grid step is snapped so that an integer number of steps spans one unit;
shifts by one unit (the delayed argument x+1 in the profile equations) are
then exact index shifts and never drift off the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Piece", "GridFunction", "make_grid", "GridSpec", "cumulative_integral"]


def cumulative_integral(values: np.ndarray, h: float,
                        kinks: tuple[int, ...] = ()) -> np.ndarray:
    """Cumulative integral of grid samples with endpoint-corrected trapezoid.

    Composite trapezoid plus the Euler-Maclaurin h^2 endpoint term
    -(h^2/12) (f'(b) - f'(a)), with one-sided three-point difference
    stencils for the derivatives.  ``kinks`` lists interior node indices
    where the integrand has a derivative jump; the correction is applied
    per smooth segment, i.e. each kink contributes its one-sided
    derivative difference.  For smooth integrands this is O(h^4) accurate;
    undeclared kinks degrade it gracefully to the trapezoid's O(h^2).

    Every composite weight remains non-negative (the corrections shift node
    weights by at most h/8 + h/6 against a base of h/2 or h), so
    integration preserves pointwise order between integrands - a property
    the profile operator relies on.

    The first three entries skip the correction: their stencils would
    overlap, and windows start deep enough that nothing measurable lives
    there.
    """
    v = np.asarray(values, dtype=float)
    out = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * h)))
    n = v.size
    if n < 4:
        return out
    c = h * h / 12.0
    back = np.empty_like(v)
    back[2:] = (3.0 * v[2:] - 4.0 * v[1:-1] + v[:-2]) / (2.0 * h)
    d0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[3:] -= c * (back[3:] - d0)
    for k in kinks:
        if k < 3 or k > n - 3:
            continue
        # split the correction at the kink: add the one-sided derivative
        # difference; at row k+1 the base endpoint stencil also straddles
        # the kink and the two fixes collapse to back[k+1] - back[k]
        # (all touched nodes stay at or below the integration endpoint,
        # keeping every composite weight non-negative)
        fwd_k = (-3.0 * v[k] + 4.0 * v[k + 1] - v[k + 2]) / (2.0 * h)
        out[k + 2:] += c * (fwd_k - back[k])
        out[k + 1] += c * (back[k + 1] - back[k])
    return out


@dataclass(frozen=True)
class Piece:
    """Analytic segment ``level + sum_k a_k exp(r_k (x - x0_k))`` on (lo, hi]."""

    lo: float
    hi: float  # math.inf for the last segment
    level: float = 0.0
    terms: tuple[tuple[float, float, float], ...] = ()  # (a, rate, anchor)

    @staticmethod
    def constant(level: float, lo: float, hi: float) -> "Piece":
        return Piece(lo=lo, hi=hi, level=level)

    @staticmethod
    def exponential(a: float, rate: float, anchor: float,
                    lo: float, hi: float) -> "Piece":
        return Piece(lo=lo, hi=hi, terms=((a, rate, anchor),))

    def value(self, x):
        out = np.full_like(np.asarray(x, dtype=float), self.level)
        for a, r, x0 in self.terms:
            out = out + a * np.exp(r * (np.asarray(x, dtype=float) - x0))
        return out if out.ndim else float(out)

    def integral(self, a: float, b: float) -> float:
        """Exact integral over [a, b] intersected with (lo, hi]."""
        a = max(a, self.lo)
        b = min(b, self.hi)
        if b <= a:
            return 0.0
        total = self.level * (b - a)
        for c, r, x0 in self.terms:
            total += (c / r) * (math.exp(r * (b - x0)) - math.exp(r * (a - x0)))
        return total

    def crossing(self, target: float) -> float | None:
        """Smallest x in (lo, hi] with value(x) >= target, or None.

        Assumes the piece is non-decreasing.  Single-exponential pieces are
        inverted in closed form; sums fall back to bisection.
        """
        lo_val = self.value(np.nextafter(self.lo, math.inf))
        if lo_val >= target:
            return self.lo
        hi = self.hi
        if math.isinf(hi):
            hi = self.lo + 1.0
            while self.value(hi) < target:
                hi = 2.0 * hi - self.lo + 1.0
        elif self.value(hi) < target:
            return None
        if self.level == 0.0 and len(self.terms) == 1:
            a, r, x0 = self.terms[0]
            return min(max(x0 + math.log(target / a) / r, self.lo), hi)
        lo = self.lo
        for _ in range(200):
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if self.value(mid) < target:
                lo = mid
            else:
                hi = mid
        return hi


@dataclass(frozen=True)
class GridSpec:
    """Snapped uniform grid over [x_min, 0]: positions (i - m) * h, i = 0..m."""

    x_min: float
    h: float
    m: int            # number of steps, position index of x = 0
    steps_per_unit: int

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.m + 1) - self.m) * self.h


def make_grid(x_min: float, h: float) -> GridSpec:
    if h <= 0 or x_min >= 0:
        raise ValueError(f"need h > 0 and x_min < 0, got h={h}, x_min={x_min}")
    n = round(1.0 / h)
    if n < 8:
        raise ValueError(f"grid step {h} too coarse: fewer than 8 steps per unit")
    h = 1.0 / n
    m = round(-x_min / h)
    if m < n:
        raise ValueError(f"window [{x_min}, 0] must span at least one unit")
    return GridSpec(x_min=-m * h, h=h, m=m, steps_per_unit=n)


@dataclass
class GridFunction:
    """A non-decreasing profile on the real line; immutable after creation.

    ``kink_nodes`` lists grid indices where the stored function has a
    derivative jump (profiles built from the delayed integral equation kink
    at x = -1 when the right part jumps at 0); integrals split the
    quadrature correction there.  Between nodes the function is modelled as
    a monotone cubic Hermite interpolant, so point evaluation, level
    crossings, and partial-cell integrals are all fourth-order accurate on
    smooth stretches.
    """

    grid: GridSpec
    left_values: np.ndarray
    right_pieces: tuple[Piece, ...]
    tail_rate: float
    tail_coeff: float | None = None  # defaults to left_values[0]
    kink_nodes: tuple[int, ...] = ()

    _cum: np.ndarray = field(init=False, repr=False)
    _slope_right: np.ndarray = field(init=False, repr=False)
    _slope_left: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.left_values = np.asarray(self.left_values, dtype=float)
        if self.left_values.shape != (self.grid.m + 1,):
            raise ValueError("left_values length does not match the grid")
        if self.tail_coeff is None:
            self.tail_coeff = float(self.left_values[0])
        # corrected cumulative integral over the grid zone,
        # _cum[i] = int_{x_min}^{x_i}
        self._cum = cumulative_integral(self.left_values, self.grid.h,
                                        kinks=self.kink_nodes)
        self._slope_right, self._slope_left = self._fit_slopes()

    @staticmethod
    def _segment_slopes(v: np.ndarray, h: float) -> np.ndarray:
        """Fourth-order derivative stencils on one smooth segment."""
        n = v.size
        d = np.empty_like(v)
        if n >= 5:
            d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
        if n >= 3:
            d[1] = (v[2] - v[0]) / (2.0 * h)
            d[-2] = (v[-1] - v[-3]) / (2.0 * h)
            d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        else:
            d[:] = (v[-1] - v[0]) / ((n - 1) * h) if n > 1 else 0.0
        return d

    def _fit_slopes(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell node derivatives, fitted per smooth segment.

        Returns (d_right, d_left): the slope to use at a node as the left
        end of its right cell, and as the right end of its left cell.  They
        differ only at declared kink nodes, where each side is fitted from
        its own segment.  Slopes are capped at three times the adjacent
        secants (Fritsch-Carlson condition), which never binds on smooth
        exponential data but keeps the Hermite model monotone.
        """
        v, h = self.left_values, self.grid.h
        n = v.size
        bounds = sorted({0, n - 1} | {k for k in self.kink_nodes
                                      if 0 < k < n - 1})
        d_right = np.empty_like(v)
        d_left = np.empty_like(v)
        for a, b in zip(bounds[:-1], bounds[1:]):
            seg = self._segment_slopes(v[a:b + 1], h)
            d_right[a:b + 1] = seg
            d_left[a + 1:b + 1] = seg[1:]
        d_left[0] = d_right[0]
        sec = np.diff(v) / h
        cap_r = 3.0 * np.concatenate((sec, [sec[-1]]))
        cap_l = 3.0 * np.concatenate(([sec[0]], sec))
        return (np.clip(d_right, 0.0, np.maximum(cap_r, 0.0)),
                np.clip(d_left, 0.0, np.maximum(cap_l, 0.0)))

    # -- basic geometry -------------------------------------------------

    @property
    def x_min(self) -> float:
        return self.grid.x_min

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def tail_mass(self) -> float:
        """Closed-form mass below x_min: coeff / rate."""
        if self.tail_coeff == 0.0:
            return 0.0
        return self.tail_coeff / self.tail_rate

    def tail_value(self, x):
        return self.tail_coeff * np.exp(self.tail_rate * (np.asarray(x, float) - self.x_min))

    def right_value_at_zero(self) -> float:
        """Right limit G(0+), from the first analytic piece."""
        first = self.right_pieces[0]
        return float(first.value(np.nextafter(0.0, 1.0)))

    # -- evaluation ------------------------------------------------------

    def _hermite(self, x: np.ndarray) -> np.ndarray:
        """Cubic Hermite model on the grid zone; x within (x_min, 0]."""
        t = (x - self.x_min) / self.h
        i = np.clip(t.astype(int), 0, self.grid.m - 1)
        u = t - i
        p0 = self.left_values[i]
        p1 = self.left_values[i + 1]
        m0 = self._slope_right[i] * self.h
        m1 = self._slope_left[i + 1] * self.h
        u2 = u * u
        u3 = u2 * u
        return ((2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0
                + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1)

    def _hermite_cell_integral(self, i: int, u: float) -> float:
        """Integral of the Hermite model over [x_i, x_i + u h], u in [0, 1]."""
        p0 = self.left_values[i]
        p1 = self.left_values[i + 1]
        m0 = self._slope_right[i] * self.h
        m1 = self._slope_left[i + 1] * self.h
        u2 = u * u
        u3 = u2 * u
        u4 = u3 * u
        val = ((0.5 * u4 - u3 + u) * p0 + (0.25 * u4 - 2.0 * u3 / 3.0 + 0.5 * u2) * m0
               + (-0.5 * u4 + u3) * p1 + (0.25 * u4 - u3 / 3.0) * m1)
        return val * self.h

    def value(self, x):
        """Evaluate G(x); left-continuous, vectorized.

        At grid nodes the stored value is returned (at x = 0 this is the
        left limit); between nodes the monotone cubic Hermite model.
        """
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        xa = np.atleast_1d(xa).copy()
        out = np.empty_like(xa)
        tail = xa <= self.x_min
        mid = (xa > self.x_min) & (xa <= 0.0)
        if tail.any():
            out[tail] = self.tail_value(xa[tail])
        if mid.any():
            out[mid] = self._hermite(xa[mid])
        rest = xa > 0.0
        if rest.any():
            xr = xa[rest]
            res = np.empty_like(xr)
            res.fill(np.nan)
            for piece in self.right_pieces:
                sel = (xr > piece.lo) & (xr <= piece.hi)
                if sel.any():
                    res[sel] = piece.value(xr[sel])
            out[rest] = res
        return float(out[0]) if scalar else out

    def integral_to(self, x: float) -> float:
        """A(x) = integral of G over (-inf, x]; exact for the stored model."""
        if x <= self.x_min:
            if self.tail_coeff == 0.0:
                return 0.0
            return float(self.tail_mass * math.exp(self.tail_rate * (x - self.x_min)))
        total = self.tail_mass
        if x <= 0.0:
            pos = (x - self.x_min) / self.h
            i = min(int(pos), self.grid.m - 1)
            total += self._cum[i]
            u = pos - i
            if u > 0.0:
                total += self._hermite_cell_integral(i, u)
            return float(total)
        total += self._cum[self.grid.m]
        for piece in self.right_pieces:
            if x <= piece.lo:
                break
            total += piece.integral(piece.lo, x)
        return float(total)

    def tau(self, target: float) -> float:
        """sup { t : G(t) < target } for target > 0.

        Supremum semantics: a plateau at a value below ``target`` is included
        up to its right end; points where G equals ``target`` are excluded.
        """
        if target <= 0.0:
            raise ValueError("tau requires a positive target")
        v = self.left_values
        if target <= self.tail_coeff or (self.tail_coeff == 0.0 and target <= v[0]):
            if self.tail_coeff == 0.0 or target <= 0.0:
                return -math.inf
            return self.x_min + math.log(target / self.tail_coeff) / self.tail_rate
        if target <= v[-1]:
            i = int(np.searchsorted(v, target, side="left"))
            if i == 0:
                # a stored tail below the first grid value: the whole grid
                # already sits at or above the target
                return self.x_min
            # v[i-1] < target <= v[i]; crossing inside cell (i-1, i]
            lo = self.grid.positions[i - 1]
            hi = self.grid.positions[i]
            if v[i] == v[i - 1]:
                return hi
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if float(self._hermite(np.array([mid]))[0]) < target:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-16 * max(1.0, abs(hi)):
                    break
            return hi
        x = 0.0
        for piece in self.right_pieces:
            c = piece.crossing(target)
            if c is not None:
                return c
            x = piece.hi
        return x  # unreachable for profiles whose right part grows without bound

    # -- invariants -------------------------------------------------------

    def is_monotone(self, tol: float = 0.0) -> bool:
        if np.any(np.diff(self.left_values) < -tol):
            return False
        prev = float(self.left_values[-1])
        for piece in self.right_pieces:
            lo_val = float(piece.value(np.nextafter(piece.lo, math.inf)))
            if lo_val < prev - tol:
                return False
            hi = piece.hi if not math.isinf(piece.hi) else piece.lo + 50.0
            xs = np.linspace(piece.lo + 1e-12, hi, 257)
            vals = piece.value(xs)
            if np.any(np.diff(vals) < -tol * max(1.0, float(np.max(np.abs(vals))))):
                return False
            prev = float(vals[-1])
        return True

    def is_nonnegative(self) -> bool:
        """No negative values anywhere; underflowed-to-zero tails allowed."""
        return bool(np.all(self.left_values >= 0.0)) and self.tail_coeff >= 0.0 \
            and float(self.left_values[-1]) > 0.0

    def is_strictly_positive(self) -> bool:
        return bool(np.all(self.left_values > 0.0)) and self.tail_coeff > 0.0
