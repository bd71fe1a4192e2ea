"""Saturable magnetizing branch of a single-phase transformer.

The core is a two-slope piecewise-linear flux/current characteristic: the
unsaturated inductance below the knee and a much smaller saturated
inductance above it. Remnant flux only sets the initial condition; there is
no hysteresis loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SaturableCore:
    """Two-slope magnetizing characteristic with remnant flux.

    Attributes
    ----------
    l_unsat : float
        Unsaturated magnetizing inductance (H).
    l_sat : float
        Deep-saturation inductance (H).
    flux_knee : float
        Flux linkage at the saturation knee (Wb-turns).
    remnant_flux : float
        Core flux at the energization instant (Wb-turns).
    core_loss_r : float
        Shunt core-loss resistance (ohm). ``math.inf`` gives a lossless core.
    """

    l_unsat: float
    l_sat: float
    flux_knee: float
    remnant_flux: float = 0.0
    core_loss_r: float = math.inf

    def __post_init__(self):
        if not self.l_sat > 0:
            raise ValueError(f"l_sat must be positive, got {self.l_sat}")
        if not self.l_unsat >= self.l_sat:
            raise ValueError("l_unsat must not be below l_sat")
        if not self.flux_knee > 0:
            raise ValueError(f"flux_knee must be positive, got {self.flux_knee}")
        if abs(self.remnant_flux) > self.flux_knee:
            raise ValueError("|remnant_flux| must not exceed flux_knee")
        if not self.core_loss_r > 0:
            raise ValueError(f"core_loss_r must be positive, got {self.core_loss_r}")

    @property
    def knee_current(self) -> float:
        return self.flux_knee / self.l_unsat

    def segment(self, flux: float) -> tuple[float, float]:
        """Return ``(slope, offset)`` of the linear piece containing ``flux``.

        On that piece ``magnetizing_current(flux) == slope * flux + offset``.
        """
        if flux > self.flux_knee:
            return 1.0 / self.l_sat, self.flux_knee * (1.0 / self.l_unsat - 1.0 / self.l_sat)
        if flux < -self.flux_knee:
            return 1.0 / self.l_sat, -self.flux_knee * (1.0 / self.l_unsat - 1.0 / self.l_sat)
        return 1.0 / self.l_unsat, 0.0


@dataclass(frozen=True)
class NameplateParams:
    """Rated transformer data as tabulated on a nameplate/test report."""

    rated_va: float
    v_primary: float
    v_secondary: float
    series_z_real: float
    series_z_imag: float
    x_m: float
    r_c: float
    f0: float = 50.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"nameplate field {name} must be positive, got {value}")

    @property
    def v_peak(self) -> float:
        return math.sqrt(2.0) * self.v_primary

    @property
    def rated_flux(self) -> float:
        """Peak flux linkage at rated sinusoidal voltage."""
        return self.v_peak / (2.0 * math.pi * self.f0)

    @property
    def winding_l(self) -> float:
        return self.series_z_imag / (2.0 * math.pi * self.f0)


def magnetizing_current(core: SaturableCore, flux: float) -> float:
    """Magnetizing current drawn at flux linkage ``flux``.

    Odd, continuous and strictly increasing in ``flux``.
    """
    a = abs(flux)
    if a <= core.flux_knee:
        return flux / core.l_unsat
    i = core.flux_knee / core.l_unsat + (a - core.flux_knee) / core.l_sat
    return math.copysign(i, flux)


def incremental_inductance(core: SaturableCore, flux: float) -> float:
    """Slope dflux/di at ``flux``; the knee itself reports ``l_sat``."""
    if abs(flux) < core.flux_knee:
        return core.l_unsat
    return core.l_sat


def core_from_nameplate(
    np_: NameplateParams,
    knee_pu: float = 1.15,
    sat_ratio: float = 0.01,
    remnant_pu: float = 0.0,
) -> SaturableCore:
    """Build a :class:`SaturableCore` from nameplate data.

    Flux quantities are given per unit of the rated peak flux
    ``sqrt(2) * v_primary / (2 pi f0)``; ``sat_ratio`` is ``l_sat / l_unsat``.
    ``sat_ratio = 1`` yields a linear core.
    """
    if not knee_pu >= 1.0:
        raise ValueError(f"knee_pu must be >= 1, got {knee_pu}")
    if not 0.0 < sat_ratio <= 1.0:
        raise ValueError(f"sat_ratio must lie in (0, 1], got {sat_ratio}")
    if abs(remnant_pu) > knee_pu:
        raise ValueError("|remnant_pu| must not exceed knee_pu")
    omega = 2.0 * math.pi * np_.f0
    l_unsat = np_.x_m / omega
    base = np_.rated_flux
    return SaturableCore(
        l_unsat=l_unsat,
        l_sat=sat_ratio * l_unsat,
        flux_knee=knee_pu * base,
        remnant_flux=remnant_pu * base,
        core_loss_r=np_.r_c,
    )
