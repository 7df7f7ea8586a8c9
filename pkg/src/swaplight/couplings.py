"""Atomic-physics inputs, coupling constants, and temporal-mode shapes.

Translates vapour-cell parameters (polarizabilities, photon flux, geometry,
detuning) into the swap rate and squeezing ratio that drive all dynamics,
and computes output temporal-mode envelopes including time-dependent drive
shaping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from .gaussian import RegimeError

CHI_CONSISTENCY_RTOL = 1e-12
MODE_NORM_TOL = 1e-9


@dataclass(frozen=True)
class AtomicConfig:
    """Physical parameters of the driven two-cell vapour system.

    Polarizabilities a1 (vector) and a2 (tensor) are dimensionless inputs
    taken from calibration or literature tables; they are not derived here.
    The scalar polarizability a0 only produces a constant phase and is
    accepted but ignored by the dynamics.
    """

    a1: float                    # vector polarizability, dimensionless
    a2: float                    # tensor polarizability, dimensionless
    photon_flux_per_s: float     # probe photon flux
    atom_count: float            # atoms per cell
    beam_area_m2: float
    detuning_Hz: float           # probe detuning from resonance
    linewidth_Hz: float          # natural linewidth
    wavelength_m: float
    larmor_Hz: float             # Zeeman splitting of the ground state
    cell_length_m: float
    a0: float = 0.0              # accepted for completeness, unused

    def __post_init__(self):
        required_positive = {
            "photon_flux_per_s": self.photon_flux_per_s,
            "atom_count": self.atom_count,
            "beam_area_m2": self.beam_area_m2,
            "linewidth_Hz": self.linewidth_Hz,
            "wavelength_m": self.wavelength_m,
            "larmor_Hz": self.larmor_Hz,
            "cell_length_m": self.cell_length_m,
        }
        for name, value in required_positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if self.detuning_Hz == 0:
            raise ValueError("detuning_Hz must be nonzero")
        if self.a1 <= 0:
            raise ValueError("a1 must be positive")
        ratio = 14.0 * self.a2 / self.a1
        if not 0.0 < ratio < 1.0:
            raise RegimeError(
                f"14 a2/a1 = {ratio:.4g} outside (0, 1): imaginary squeezing ratio, "
                "the light-atom entanglement regime is out of scope"
            )

    @property
    def xi_squared(self) -> float:
        return 14.0 * self.a2 / self.a1


@dataclass(frozen=True)
class SwapParams:
    """Coupling set driving the two-cell dynamics.

    chi_a and chi_p are the Stokes / anti-Stokes coupling amplitudes; they
    satisfy chi_a = sqrt(gamma_sw/2)(1/xi - xi), chi_p = sqrt(gamma_sw/2)
    (1/xi + xi), hence gamma_sw = (chi_p^2 - chi_a^2)/2.
    """

    gamma_sw_per_s: float
    xi: float
    pulse_T_s: float
    larmor_Hz: float = 322e3
    gamma_dec_per_s: float = 0.0
    chi_a: float = None  # type: ignore[assignment]
    chi_p: float = None  # type: ignore[assignment]

    def __post_init__(self):
        # gamma_sw = 0 is the fully decoupled limit used for references
        if self.gamma_sw_per_s < 0:
            raise ValueError("gamma_sw_per_s must be nonnegative")
        if not 0.0 < self.xi < 1.0:
            raise RegimeError(f"xi = {self.xi:.4g} outside (0, 1)")
        if self.pulse_T_s <= 0:
            raise ValueError("pulse_T_s must be positive")
        if self.larmor_Hz <= 0:
            raise ValueError("larmor_Hz must be positive")
        if self.gamma_dec_per_s < 0:
            raise ValueError("gamma_dec_per_s must be nonnegative")
        root = np.sqrt(self.gamma_sw_per_s / 2.0)
        chi_a = root * (1.0 / self.xi - self.xi)
        chi_p = root * (1.0 / self.xi + self.xi)
        for name, given, expected in (("chi_a", self.chi_a, chi_a), ("chi_p", self.chi_p, chi_p)):
            if given is None:
                object.__setattr__(self, name, expected)
            elif abs(given - expected) > CHI_CONSISTENCY_RTOL * abs(expected):
                raise ValueError(
                    f"{name} = {given!r} inconsistent with gamma_sw and xi "
                    f"(expected {expected!r})"
                )

    @property
    def gamma_total_per_s(self) -> float:
        """Relaxation rate of the collective atomic quadratures."""
        return self.gamma_sw_per_s + self.gamma_dec_per_s

    def with_decoherence(self, gamma_dec_per_s: float) -> "SwapParams":
        return replace(self, gamma_dec_per_s=gamma_dec_per_s)


@dataclass(frozen=True)
class ModeFunction:
    """Real temporal mode on a uniform grid, optionally L2-normalized."""

    samples: NDArray[np.float64]
    dt: float
    normalized: bool = True

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("samples must be a 1-d vector with at least 2 points")
        if self.normalized:
            norm = np.sum(samples**2) * self.dt
            if abs(norm - 1.0) > MODE_NORM_TOL:
                raise ValueError(f"mode is not L2-normalized: integral {norm!r}")

    @property
    def times(self) -> NDArray[np.float64]:
        return self.dt * np.arange(self.samples.size)

    def overlap(self, other: "ModeFunction") -> float:
        if other.samples.size != self.samples.size:
            raise ValueError("mode grids differ")
        return float(np.sum(self.samples * other.samples) * self.dt)


def couplings_from_physics(cfg: AtomicConfig, pulse_T_s: float = 0.015) -> SwapParams:
    """Compute the swap rate and squeezing ratio from atomic parameters.

    gamma_sw = 14 a1 a2 (Phi N_a / A^2) (gamma lambda^2 / (16 pi Delta))^2
    and xi = sqrt(14 a2 / a1). The detuning enters squared, so red/blue
    detuning produce the same rate; sign handling beyond the validity check
    is out of scope.
    """
    xi = float(np.sqrt(cfg.xi_squared))
    single_photon = (
        cfg.linewidth_Hz / (8.0 * cfg.detuning_Hz) * cfg.wavelength_m**2 / (2.0 * np.pi)
    )
    gamma_sw = (
        14.0
        * cfg.a1
        * cfg.a2
        * cfg.photon_flux_per_s
        * cfg.atom_count
        / cfg.beam_area_m2**2
        * single_photon**2
    )
    return SwapParams(
        gamma_sw_per_s=float(gamma_sw),
        xi=xi,
        pulse_T_s=pulse_T_s,
        larmor_Hz=cfg.larmor_Hz,
        gamma_dec_per_s=0.0,
    )


def mean_output(
    t: float | NDArray[np.float64],
    params: SwapParams,
    x_atom_0: float,
    p_atom_0: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Expected mean of the output light quadratures for displaced atoms.

    For a coherent evolution (no extra decoherence) with initial atomic means
    (x_atom_0, p_atom_0):

        <x_L(t)> = + sqrt(2 gamma_sw) / xi * exp(-gamma_sw t) * p_atom_0
        <p_L(t)> = - sqrt(2 gamma_sw) * xi * exp(-gamma_sw t) * x_atom_0
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > params.pulse_T_s):
        raise ValueError("t must lie within [0, pulse_T_s]")
    g = params.gamma_sw_per_s
    envelope = np.sqrt(2.0 * g) * np.exp(-g * t)
    return envelope / params.xi * p_atom_0, -envelope * params.xi * x_atom_0


def output_mode_shape(
    gamma_profile: NDArray[np.float64], dt: float
) -> ModeFunction:
    """Output temporal mode for a (possibly time-dependent) drive profile.

    The envelope is proportional to gamma(t) * exp(-integral_0^t gamma), with
    the cumulative integral evaluated by the trapezoid rule on the grid and
    the result L2-normalized. A constant profile gives the exponentially
    falling mode; the profile gamma0 / (1 - gamma0 t) gives a flat top.
    """
    gamma = np.asarray(gamma_profile, dtype=float)
    if gamma.ndim != 1 or gamma.size < 2:
        raise ValueError("gamma_profile must be a 1-d vector with at least 2 points")
    if np.any(gamma < 0):
        raise ValueError("gamma_profile must be nonnegative")
    if not np.any(gamma > 0):
        raise ValueError("gamma_profile is identically zero")
    accumulated = np.concatenate(
        ([0.0], np.cumsum(0.5 * (gamma[1:] + gamma[:-1]) * dt))
    )
    u = gamma * np.exp(-accumulated)
    u = u / np.sqrt(np.sum(u**2) * dt)
    return ModeFunction(u, dt, normalized=True)


def duan_combination(var_pc: float, var_ps: float) -> float:
    """Joint sideband-quadrature variance combination certifying entanglement.

    Both inputs are variances of the cosine / sine channel modes expressed as
    ratios to the vacuum level. Vacuum gives exactly 2; values below 2
    certify quadrature entanglement between the upper and lower sidebands.
    """
    if var_pc < 0 or var_ps < 0:
        raise ValueError("variances must be nonnegative")
    return float(var_pc + var_ps)
