"""Profile (de)serialization.

Profiles are stored as a self-describing JSON document.  All reals are
emitted as shortest round-trip decimals (Python's float repr), so a
save/load cycle reproduces every stored value bit-exactly.  Unbounded piece
ends are encoded as null.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .bidding import BiddingProfile
from .excursion import ExcursionProfile
from .grids import GridFunction, Piece, make_grid

__all__ = ["profile_to_dict", "profile_from_dict", "save_profile",
           "load_profile"]


def _piece_to_dict(p: Piece) -> dict[str, Any]:
    return {
        "lo": p.lo,
        "hi": None if math.isinf(p.hi) else p.hi,
        "level": p.level,
        "terms": [list(t) for t in p.terms],
    }


def _piece_from_dict(d: dict[str, Any]) -> Piece:
    return Piece(lo=d["lo"], hi=math.inf if d["hi"] is None else d["hi"],
                 level=d["level"],
                 terms=tuple(tuple(t) for t in d["terms"]))


def _grid_function_to_dict(g: GridFunction) -> dict[str, Any]:
    return {
        "left_values": [float(v) for v in g.left_values],
        "right_pieces": [_piece_to_dict(p) for p in g.right_pieces],
        "left_tail": {"coeff": g.tail_coeff, "rate": g.tail_rate},
        "kink_nodes": list(g.kink_nodes),
    }


def _grid_function_from_dict(d: dict[str, Any], x_min: float,
                             h: float) -> GridFunction:
    grid = make_grid(x_min, h)
    values = np.asarray(d["left_values"], dtype=float)
    if values.size != grid.m + 1:
        raise ValueError("left_values length inconsistent with x_min and h")
    return GridFunction(
        grid=grid, left_values=values,
        right_pieces=tuple(_piece_from_dict(p) for p in d["right_pieces"]),
        tail_rate=d["left_tail"]["rate"], tail_coeff=d["left_tail"]["coeff"],
        kink_nodes=tuple(d.get("kink_nodes", ())))


def profile_to_dict(p: BiddingProfile | ExcursionProfile) -> dict[str, Any]:
    if isinstance(p, BiddingProfile):
        return {
            "problem": "bidding",
            "s": p.s, "rho": p.rho, "chi": p.chi,
            "x_min": p.g.x_min, "h": p.g.h,
            **_grid_function_to_dict(p.g),
        }
    if isinstance(p, ExcursionProfile):
        return {
            "problem": "linsearch",
            "s": p.s, "rho": p.rho, "chi": p.chi, "K": p.K, "M": p.M,
            "x_min": p.g_plus.x_min, "h": p.g_plus.h,
            "g_plus": _grid_function_to_dict(p.g_plus),
            "g_minus": _grid_function_to_dict(p.g_minus),
        }
    raise TypeError(f"not a profile: {type(p)!r}")


def profile_from_dict(d: dict[str, Any]) -> BiddingProfile | ExcursionProfile:
    problem = d.get("problem")
    if problem == "bidding":
        g = _grid_function_from_dict(d, d["x_min"], d["h"])
        return BiddingProfile(s=d["s"], rho=d["rho"], chi=d["chi"], g=g)
    if problem == "linsearch":
        return ExcursionProfile(
            s=d["s"], rho=d["rho"], chi=d["chi"], K=d["K"], M=d["M"],
            g_plus=_grid_function_from_dict(d["g_plus"], d["x_min"], d["h"]),
            g_minus=_grid_function_from_dict(d["g_minus"], d["x_min"], d["h"]))
    raise ValueError(f"unknown profile kind: {problem!r}")


def save_profile(p: BiddingProfile | ExcursionProfile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile_to_dict(p), fh)
        fh.write("\n")


def load_profile(path: str) -> BiddingProfile | ExcursionProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return profile_from_dict(json.load(fh))
