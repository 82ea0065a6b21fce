"""Deterministic path loss, link budgets, and Rician fading gains.

All path-loss math works in dB; fading gains are linear power factors
applied multiplicatively on top of the deterministic link budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0

# 20*log10(f_MHz) + 20*log10(d_km) + 32.44 is the km/MHz form of FSPL.
FSPL_CONSTANT_DB = 32.44


class DomainError(ValueError):
    """Raised when an operation is called outside its physical domain."""


@dataclass(frozen=True)
class RadioEnvironment:
    """Carrier, antenna geometry, and fading configuration for one channel."""

    frequency_mhz: float = 5900.0
    pathloss_exponent: float = 2.0
    tx_antenna_height_m: float = 1.5
    rx_antenna_height_m: float = 1.5
    rician_k: float = 3.0
    fading_enabled: bool = True

    def __post_init__(self) -> None:
        if self.frequency_mhz <= 0:
            raise DomainError(f"frequency_mhz must be positive, got {self.frequency_mhz}")
        if self.tx_antenna_height_m <= 0 or self.rx_antenna_height_m <= 0:
            raise DomainError("antenna heights must be positive")
        if self.rician_k < 0:
            raise DomainError(f"rician_k must be >= 0, got {self.rician_k}")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / (self.frequency_mhz * 1e6)


@dataclass(frozen=True)
class LinkBudget:
    """One directed radio link: powers and gains in dB(m), distance in meters."""

    tx_power_dbm: float
    tx_gain_dbi: float
    rx_gain_dbi: float
    distance_m: float

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise DomainError(f"distance_m must be positive, got {self.distance_m}")


def fspl_db(distance_m: float, frequency_mhz: float, pathloss_exponent: float = 2.0) -> float:
    """Free-space path loss in dB at the given distance and carrier.

    A non-default exponent generalizes the distance term to
    10*n*log10(d); n = 2.0 reproduces plain FSPL.
    """
    if distance_m <= 0:
        raise DomainError(f"distance_m must be positive, got {distance_m}")
    if frequency_mhz <= 0:
        raise DomainError(f"frequency_mhz must be positive, got {frequency_mhz}")
    distance_km = distance_m / 1000.0
    return (
        10.0 * pathloss_exponent * math.log10(distance_km)
        + 20.0 * math.log10(frequency_mhz)
        + FSPL_CONSTANT_DB
    )


def cross_distance_m(env: RadioEnvironment) -> float:
    """Distance beyond which the two-ray ground model supersedes free space."""
    return 4.0 * math.pi * env.tx_antenna_height_m * env.rx_antenna_height_m / env.wavelength_m


def two_ray_pathloss_db(distance_m: float, env: RadioEnvironment) -> float:
    """Far-field two-ray ground path loss; valid only beyond the cross distance."""
    d_c = cross_distance_m(env)
    if distance_m < d_c:
        raise DomainError(
            f"two-ray model invalid below the cross distance ({distance_m:.1f} < {d_c:.1f} m)"
        )
    return (
        40.0 * math.log10(distance_m)
        - 20.0 * math.log10(env.tx_antenna_height_m)
        - 20.0 * math.log10(env.rx_antenna_height_m)
    )


def pathloss_db(distance_m: float, env: RadioEnvironment) -> float:
    """Piecewise path loss: free space inside the cross distance, two-ray beyond."""
    if distance_m <= 0:
        raise DomainError(f"distance_m must be positive, got {distance_m}")
    if distance_m < cross_distance_m(env):
        return fspl_db(distance_m, env.frequency_mhz, env.pathloss_exponent)
    return two_ray_pathloss_db(distance_m, env)


def pathloss_db_array(distance_m: np.ndarray, env: RadioEnvironment) -> np.ndarray:
    """Vectorized :func:`pathloss_db` for the simulation hot path."""
    d = np.asarray(distance_m, dtype=float)
    logd = np.log10(d, out=np.full_like(d, -np.inf), where=d > 0)
    fspl = (
        10.0 * env.pathloss_exponent * (logd - 3.0)
        + 20.0 * math.log10(env.frequency_mhz)
        + FSPL_CONSTANT_DB
    )
    two_ray = (
        40.0 * logd
        - 20.0 * math.log10(env.tx_antenna_height_m)
        - 20.0 * math.log10(env.rx_antenna_height_m)
    )
    return np.where(d < cross_distance_m(env), fspl, two_ray)


def rx_power_dbm(budget: LinkBudget, env: RadioEnvironment) -> float:
    """Deterministic (non-faded) received power from the link budget."""
    return (
        budget.tx_power_dbm
        + budget.tx_gain_dbi
        + budget.rx_gain_dbi
        - pathloss_db(budget.distance_m, env)
    )


def sample_fading_gain(
    env: RadioEnvironment,
    rng: np.random.Generator,
    size: int | None = None,
) -> float | np.ndarray:
    """Rician block-fading power gain(s), normalized to unit mean power.

    The K factor is the linear LOS-to-scatter power ratio; K = 0 degenerates
    to Rayleigh fading. One i.i.d. sample applies per (frame, receiver).
    """
    if not env.fading_enabled:
        return 1.0 if size is None else np.ones(size)
    k = env.rician_k
    los = math.sqrt(k / (k + 1.0))
    sigma = math.sqrt(1.0 / (2.0 * (k + 1.0)))
    n = 1 if size is None else size
    inphase = rng.normal(los, sigma, n)
    quadrature = rng.normal(0.0, sigma, n)
    gain = inphase * inphase + quadrature * quadrature
    return float(gain[0]) if size is None else gain


def crossover_distance_m(
    tx_power_dbm: float,
    total_gain_dbi: float,
    rx_sensitivity_dbm: float,
    env: RadioEnvironment,
) -> float:
    """Distance where the deterministic rx power equals the sensitivity.

    Inverts the active path-loss model in closed form; returns ``inf``
    when no crossover exists within the two-ray validity range.
    """
    budget_db = tx_power_dbm + total_gain_dbi - rx_sensitivity_dbm
    if budget_db <= 0:
        raise DomainError("link budget never exceeds the sensitivity at any distance")
    # Free-space inversion first.
    exponent = (
        budget_db - 20.0 * math.log10(env.frequency_mhz) - FSPL_CONSTANT_DB
    ) / (10.0 * env.pathloss_exponent)
    d_free = 1000.0 * 10.0 ** exponent
    d_c = cross_distance_m(env)
    if d_free < d_c:
        return d_free
    # Crossover lies in the two-ray regime.
    d_two_ray = 10.0 ** (
        (
            budget_db
            + 20.0 * math.log10(env.tx_antenna_height_m)
            + 20.0 * math.log10(env.rx_antenna_height_m)
        )
        / 40.0
    )
    if d_two_ray < d_c:
        # Budget clears the sensitivity at d_c under two-ray but not free
        # space: switch point itself is the crossover.
        return d_c
    if not math.isfinite(d_two_ray):
        return math.inf
    return d_two_ray
