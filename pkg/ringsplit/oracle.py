"""
Closed-form revival, width and fringe formulas for a wavepacket on the ring.

Times are in 1/omega_perp and lengths in a_perp. Species 2 is slowed by the
mass ratio m2/m1 because its kinetic prefactor is m1/(2 m2). The interference
maxima themselves carry unspecified proportionality constants, so they enter
only through their consequences below.
"""

import math
from typing import List, Tuple

from ringsplit.config import DEFAULT_M1, DEFAULT_M2
from ringsplit.exceptions import ModelError


def _mass_scale(species: int, m1: float, m2: float) -> float:
    if species == 1:
        return 1.0
    if species == 2:
        return m2 / m1
    raise ModelError(f"species must be 1 or 2, got {species}")


def analytic_revival_time(r0: float, species: int, p: int = 1,
                          m1: float = DEFAULT_M1, m2: float = DEFAULT_M2) -> float:
    """T_R = pi r0^2 p for species 1 and (m2/m1) pi r0^2 p for species 2."""
    if not r0 > 0:
        raise ModelError(f"r0 must be positive, got {r0}")
    if p < 1:
        raise ModelError(f"winding number p must be >= 1, got {p}")
    return _mass_scale(species, m1, m2) * math.pi * r0 ** 2 * p


def analytic_revival_difference(r0: float, m1: float = DEFAULT_M1, m2: float = DEFAULT_M2) -> float:
    """Delta T_R = (m2/m1 - 1) pi r0^2 for non-interacting species."""
    if not r0 > 0:
        raise ModelError(f"r0 must be positive, got {r0}")
    return (m2 / m1 - 1.0) * math.pi * r0 ** 2


def free_width(w_i: float, t: float, species: int,
               m1: float = DEFAULT_M1, m2: float = DEFAULT_M2) -> float:
    """Waist of a freely spreading Gaussian psi ~ exp(-r^2 / w^2) after time ``t``."""
    if not w_i > 0 or t < 0:
        raise ModelError(f"need w_i > 0 and t >= 0, got w_i={w_i}, t={t}")
    spread = 2.0 * t / (_mass_scale(species, m1, m2) * w_i)
    return math.sqrt(w_i ** 2 + spread ** 2)


def fringe_separation(t: float, D: float, species: int,
                      m1: float = DEFAULT_M1, m2: float = DEFAULT_M2) -> float:
    """Effective fringe spacing 4 pi t / D (scaled by m1/m2 for species 2)."""
    if not D > 0:
        raise ModelError(f"initial separation D must be positive, got {D}")
    return 4.0 * math.pi * t / (_mass_scale(species, m1, m2) * D)


def fringe_revival_time(r0: float, species: int, p: int = 1,
                        m1: float = DEFAULT_M1, m2: float = DEFAULT_M2) -> float:
    """Time at which the fringe spacing equals 2 pi r0 p for D = 2 pi r0."""
    D = 2.0 * math.pi * r0
    per_unit_time = fringe_separation(1.0, D, species, m1, m2)
    return 2.0 * math.pi * r0 * p / per_unit_time


def fractional_revival_times(r0: float, species: int, max_denominator: int = 4,
                             m1: float = DEFAULT_M1, m2: float = DEFAULT_M2) -> List[Tuple[int, int, float]]:
    """``(p, q, T_R p/q)`` for coprime p <= q <= max_denominator, sorted by time."""
    revival = analytic_revival_time(r0, species, 1, m1, m2)
    schedule = {}
    for q in range(1, max_denominator + 1):
        for p in range(1, q + 1):
            if math.gcd(p, q) == 1:
                schedule[(p, q)] = revival * p / q
    return sorted(((p, q, t) for (p, q), t in schedule.items()), key=lambda item: (item[2], item[1]))
