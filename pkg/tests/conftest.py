import pytest

from profile_lab import (build_excursion_profile, build_profile, solve_sK,
                         s_star)


@pytest.fixture(scope="session")
def bidding_profiles():
    """Built bidding profiles at the default grid, keyed by s."""
    return {s: build_profile(s) for s in (0.3, 0.5, 0.8, 1.0)}


@pytest.fixture(scope="session")
def excursion_profiles():
    """Built excursion profiles at the default grid, keyed by s."""
    svals = (0.2, solve_sK(), 0.9, s_star())
    return {s: build_excursion_profile(s) for s in svals}
