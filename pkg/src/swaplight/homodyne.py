"""Stochastic homodyne record synthesis for the two-cell swap system.

Each acquisition cycle produces demodulated cosine and sine channel time
series of one light quadrature. Per channel the measured quadrature obeys

    y(t) = n(t) + q Z(t),
    dZ/dt = -(gamma_sw + gamma_dec) Z + w n(t) + sqrt(2 gamma_dec) m(t),

where n, m are independent vacuum white noises with intensity 1/2, Z is the
relevant collective atomic quadrature, and (w, q) encode the cascade
couplings for the selected quadrature. Records are the exact per-sample bin
averages of y (integrating A/D converter), produced by an exact joint
discretization of (Z, integral of y) over each bin, then passed through a
linear-phase Gaussian FIR model of the lock-in detection bandwidth.

Cycle streams use counter-based RNG: cycle i of a run is bit-reproducible
from (seed, domain, i) alone, independent of batching or execution order.

The module also carries the closed-form record covariance, which serves as
the deterministic oracle for spectra and temporal-mode tests,

    C(t,t') = (1/2) delta(t-t')
              + s * [gamma_dec e^{-g|t-t'|} + gamma_sw e^{-g(t+t')}],

with g the total atomic relaxation rate and s = -gamma_sw (1-xi^2)/g for the
squeezed quadrature (P) or the same magnitude scaled by +1/xi^2 for the
antisqueezed one (X). With gamma_dec = 0 this is white noise plus a single
rank-one squeezed exponential mode, the closed-form input-output result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm
from scipy.ndimage import convolve1d

from .couplings import SwapParams
from .gaussian import GaussianState, vacuum_state

ACCURACY_GUARD = 0.1  # max relaxation-rate * dt accepted by the simulator

DOMAIN_SIGNAL = 0
DOMAIN_REFERENCE = 1

Quadrature = Literal["X", "P"]


@dataclass(frozen=True)
class AcquisitionConfig:
    """Acquisition and detection-chain parameters for one run."""

    sample_rate_Hz: float = 12500.0
    pulse_T_s: float = 0.015
    n_cycles: int = 10000
    rng_seed: int = 0
    detection_bandwidth_Hz: float | None = 600.0
    shot_noise_ref_cycles: int = 10000
    detection_efficiency: float = 1.0

    def __post_init__(self):
        if self.sample_rate_Hz <= 0 or self.pulse_T_s <= 0:
            raise ValueError("sample_rate_Hz and pulse_T_s must be positive")
        if self.sample_rate_Hz * self.pulse_T_s < 8:
            raise ValueError("pulse must cover at least 8 samples")
        if self.n_cycles < 2:
            raise ValueError("n_cycles must be at least 2")
        if self.shot_noise_ref_cycles < 2:
            raise ValueError("shot_noise_ref_cycles must be at least 2")
        if self.detection_bandwidth_Hz is not None and not (
            0 < self.detection_bandwidth_Hz < self.sample_rate_Hz / 2
        ):
            raise ValueError("detection bandwidth must lie below Nyquist")
        if not 0 < self.detection_efficiency <= 1:
            raise ValueError("detection_efficiency must be in (0, 1]")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_Hz

    @property
    def n_samples(self) -> int:
        return int(np.floor(self.sample_rate_Hz * self.pulse_T_s + 1e-9))

    @property
    def times(self) -> NDArray[np.float64]:
        """Bin-center time stamps of the record samples."""
        return (np.arange(self.n_samples) + 0.5) * self.dt


@dataclass(frozen=True)
class HomodyneRecord:
    """One cycle of demodulated quadrature samples (cosine and sine)."""

    pc: NDArray[np.float64]
    ps: NDArray[np.float64]
    dt: float
    cycle_id: int
    calibration: float = 1.0

    def __post_init__(self):
        pc = np.asarray(self.pc, dtype=float)
        ps = np.asarray(self.ps, dtype=float)
        object.__setattr__(self, "pc", pc)
        object.__setattr__(self, "ps", ps)
        if pc.shape != ps.shape or pc.ndim != 1:
            raise ValueError("pc and ps must be 1-d vectors of equal length")
        if not (np.isfinite(pc).all() and np.isfinite(ps).all()):
            raise ValueError("record contains non-finite samples")


@dataclass(frozen=True)
class RecordEnsemble:
    """Cycle-major stack of records plus the provenance needed to re-run."""

    pc: NDArray[np.float64]          # (n_cycles, n_samples)
    ps: NDArray[np.float64]
    acq: AcquisitionConfig
    seed: int
    domain: int = DOMAIN_SIGNAL
    quadrature: Quadrature = "P"
    params: SwapParams | None = None
    initial_state: GaussianState | None = None
    atoms_initial: NDArray[np.float64] | None = None   # (n_cycles, 2) c/s channel
    atoms_final: NDArray[np.float64] | None = None
    calibration: float = 1.0

    @property
    def n_cycles(self) -> int:
        return self.pc.shape[0]

    @property
    def n_samples(self) -> int:
        return self.pc.shape[1]

    @property
    def dt(self) -> float:
        return self.acq.dt

    def cycle(self, i: int) -> HomodyneRecord:
        return HomodyneRecord(self.pc[i], self.ps[i], self.dt, i, self.calibration)

    def channel(self, name: str) -> NDArray[np.float64]:
        if name in ("cosine", "c", "pc"):
            return self.pc
        if name in ("sine", "s", "ps"):
            return self.ps
        raise ValueError(f"unknown channel {name!r}")


def displaced_css(cell: int, dx: float, dp: float) -> GaussianState:
    """Two-cell collective state after an RF mean displacement on one cell.

    The displacement of a single cell's spins by (dx, dp) splits between the
    symmetric (cosine) and antisymmetric (sine) collective modes; the state
    stays CSS apart from the means.
    """
    if cell not in (1, 2):
        raise ValueError("cell must be 1 or 2")
    r = 1.0 / np.sqrt(2.0)
    if cell == 1:
        mean = np.array([dx * r, dp * r, dp * r, -dx * r])
    else:
        mean = np.array([dx * r, dp * r, -dp * r, dx * r])
    base = vacuum_state(2, labels=("atoms_c", "atoms_s"))
    return GaussianState(base.labels, mean, base.cov)


# ---------------------------------------------------------------------------
# detection filter


def detection_kernel(acq: AcquisitionConfig) -> NDArray[np.float64] | None:
    """Linear-phase FIR with Gaussian magnitude response, unit DC gain.

    The single-sided bandwidth is the -3 dB point of the power response.
    Returns None when filtering is disabled.
    """
    if acq.detection_bandwidth_Hz is None:
        return None
    sigma_f = acq.detection_bandwidth_Hz / np.sqrt(np.log(2.0))
    sigma_t = 1.0 / (2.0 * np.pi * sigma_f)
    sigma_samples = sigma_t * acq.sample_rate_Hz
    half = int(np.ceil(4.0 * sigma_samples))
    if half == 0:
        return None
    taps = np.arange(-half, half + 1)
    h = np.exp(-0.5 * (taps / sigma_samples) ** 2)
    return h / h.sum()


def apply_detection_filter(
    samples: NDArray[np.float64], kernel: NDArray[np.float64] | None
) -> NDArray[np.float64]:
    """Zero-padded same-length convolution along the last axis."""
    if kernel is None:
        return samples
    return convolve1d(samples, kernel, axis=-1, mode="constant", cval=0.0)


def filter_matrix(acq: AcquisitionConfig) -> NDArray[np.float64]:
    """Matrix form of the detection filter acting on one record."""
    n = acq.n_samples
    kernel = detection_kernel(acq)
    if kernel is None:
        return np.eye(n)
    return apply_detection_filter(np.eye(n), kernel).T


# ---------------------------------------------------------------------------
# exact per-bin discretization


def _channel_couplings(params: SwapParams | None, quadrature: Quadrature):
    """(gamma_total, drive w, output q, gamma_dec) for one channel."""
    if params is None:
        return 0.0, 0.0, 0.0, 0.0
    c_sum = params.chi_p + params.chi_a
    c_diff = params.chi_p - params.chi_a
    if quadrature == "P":
        w, q = c_sum, -c_diff      # Z is the atomic X quadrature
    elif quadrature == "X":
        w, q = -c_diff, c_sum      # Z is the atomic P quadrature
    else:
        raise ValueError(f"quadrature must be 'X' or 'P', got {quadrature!r}")
    return params.gamma_total_per_s, w, q, params.gamma_dec_per_s


def _psd_factor(mat: NDArray[np.float64]) -> NDArray[np.float64]:
    """Deterministic square-root factor L with L L^T = mat (PSD input)."""
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass(frozen=True)
class _StepOperators:
    phi_zz: float
    phi_yz: float
    noise_factor: NDArray[np.float64]  # 2x2, maps standard normals to (Z, Y) innovations


def _step_operators(params: SwapParams | None, acq: AcquisitionConfig,
                    quadrature: Quadrature) -> _StepOperators:
    """Exact one-bin transition of the joint (Z, integral of y) system."""
    gamma_t, w, q, gamma_dec = _channel_couplings(params, quadrature)
    dt = acq.dt
    if gamma_t * dt > ACCURACY_GUARD or (params is not None and
                                         params.gamma_sw_per_s * dt > ACCURACY_GUARD):
        raise ValueError(
            f"sample interval too coarse: relaxation rate * dt exceeds {ACCURACY_GUARD}"
        )
    F = np.array([[-gamma_t, 0.0], [q, 0.0]])
    B = np.array([[w, np.sqrt(2.0 * gamma_dec)], [1.0, 0.0]])
    W = 0.5 * (B @ B.T)  # both noises have vacuum intensity 1/2
    # Van Loan block construction of the exact process-noise covariance
    block = np.zeros((4, 4))
    block[:2, :2] = -F
    block[:2, 2:] = W
    block[2:, 2:] = F.T
    G = expm(block * dt)
    phi = G[2:, 2:].T
    Q = phi @ G[:2, 2:]
    return _StepOperators(
        phi_zz=float(phi[0, 0]),
        phi_yz=float(phi[1, 0]),
        noise_factor=_psd_factor(Q),
    )


def _initial_channel_moments(
    initial_atoms: GaussianState | None, quadrature: Quadrature
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mean and factor of the measured atomic quadrature pair (cosine, sine)."""
    state = initial_atoms if initial_atoms is not None else vacuum_state(2)
    if state.n_modes != 2:
        raise ValueError("initial atomic state must have the (cosine, sine) mode pair")
    idx = [0, 2] if quadrature == "P" else [1, 3]
    mean = state.mean[idx]
    cov = state.cov[np.ix_(idx, idx)]
    return mean, _psd_factor(cov)


def stream_generator(seed: int, domain: int, cycle: int) -> np.random.Generator:
    """Counter-based stream: disjoint by construction across (domain, cycle)."""
    counter = (int(domain) << 192) + (int(cycle) << 128)
    return np.random.Generator(np.random.Philox(key=int(seed), counter=counter))


def _simulate_batch(
    cycles: NDArray[np.int64],
    ops: _StepOperators,
    z_mean: NDArray[np.float64],
    z_factor: NDArray[np.float64],
    acq: AcquisitionConfig,
    seed: int,
    domain: int,
    kernel: NDArray[np.float64] | None,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Simulate a batch of cycles; returns (y[(B,2,N)], z0[(B,2)], zT[(B,2)])."""
    n = acq.n_samples
    dt = acq.dt
    eta = acq.detection_efficiency
    n_extra = n if eta < 1.0 else 0
    batch = len(cycles)

    z0n = np.empty((batch, 2))
    eps = np.empty((batch, 2, n, 2))
    eta_eps = np.empty((batch, 2, n_extra))
    for i, cycle in enumerate(cycles):
        gen = stream_generator(seed, domain, int(cycle))
        z0n[i] = gen.standard_normal(2)
        eps[i] = gen.standard_normal((2, n, 2))
        if n_extra:
            eta_eps[i] = gen.standard_normal((2, n_extra))

    z0 = z_mean[None, :] + z0n @ z_factor.T
    zeta = eps @ ops.noise_factor.T  # (..., [Z, Y]) innovations

    y = np.empty((batch, 2, n))
    z = z0.copy()
    for k in range(n):
        y[:, :, k] = (ops.phi_yz * z + zeta[:, :, k, 1]) / dt
        z = ops.phi_zz * z + zeta[:, :, k, 0]

    if n_extra:
        y = np.sqrt(eta) * y + np.sqrt((1.0 - eta) / (2.0 * dt)) * eta_eps
    return apply_detection_filter(y, kernel), z0, z


def simulate_ensemble(
    params: SwapParams | None,
    acq: AcquisitionConfig,
    *,
    n_cycles: int | None = None,
    quadrature: Quadrature = "P",
    initial_atoms: GaussianState | None = None,
    seed: int | None = None,
    domain: int = DOMAIN_SIGNAL,
    chunk_size: int = 4096,
) -> RecordEnsemble:
    """Generate an ensemble of homodyne records.

    `params=None` simulates the decoupled detection chain (shot noise only).
    Cycles are generated in fixed chunks but each cycle's samples depend only
    on (seed, domain, cycle index), so any batching yields identical records.
    """
    n_cycles = acq.n_cycles if n_cycles is None else int(n_cycles)
    if n_cycles < 1:
        raise ValueError("n_cycles must be positive")
    seed = acq.rng_seed if seed is None else int(seed)
    ops = _step_operators(params, acq, quadrature)
    z_mean, z_factor = _initial_channel_moments(initial_atoms, quadrature)
    kernel = detection_kernel(acq)

    n = acq.n_samples
    pc = np.empty((n_cycles, n))
    ps = np.empty((n_cycles, n))
    z0_all = np.empty((n_cycles, 2))
    zT_all = np.empty((n_cycles, 2))
    for start in range(0, n_cycles, chunk_size):
        cycles = np.arange(start, min(start + chunk_size, n_cycles))
        y, z0, zT = _simulate_batch(cycles, ops, z_mean, z_factor, acq, seed, domain, kernel)
        pc[cycles] = y[:, 0, :]
        ps[cycles] = y[:, 1, :]
        z0_all[cycles] = z0
        zT_all[cycles] = zT

    return RecordEnsemble(
        pc=pc,
        ps=ps,
        acq=acq,
        seed=seed,
        domain=domain,
        quadrature=quadrature,
        params=params,
        initial_state=initial_atoms,
        atoms_initial=z0_all,
        atoms_final=zT_all,
    )


def simulate_cycle(
    params: SwapParams | None,
    acq: AcquisitionConfig,
    cycle: int,
    initial_atoms: GaussianState | None = None,
    quadrature: Quadrature = "P",
    seed: int | None = None,
) -> HomodyneRecord:
    """Generate the single record for one cycle index.

    Bit-identical to the corresponding row of `simulate_ensemble` for the
    same (seed, cycle, configuration).
    """
    if not 0 <= cycle < acq.n_cycles:
        raise ValueError(f"cycle index {cycle} outside [0, {acq.n_cycles})")
    seed = acq.rng_seed if seed is None else int(seed)
    ops = _step_operators(params, acq, quadrature)
    z_mean, z_factor = _initial_channel_moments(initial_atoms, quadrature)
    kernel = detection_kernel(acq)
    y, _, _ = _simulate_batch(
        np.array([cycle]), ops, z_mean, z_factor, acq, seed, DOMAIN_SIGNAL, kernel
    )
    return HomodyneRecord(y[0, 0, :], y[0, 1, :], acq.dt, cycle)


def shot_noise_reference(
    acq: AcquisitionConfig,
    *,
    n_cycles: int | None = None,
    seed: int | None = None,
) -> RecordEnsemble:
    """Reference ensemble with the atoms decoupled from the light.

    Same detection chain and sampling as a signal run; used downstream to
    normalize variances and spectra to the shot-noise level.
    """
    n_cycles = acq.shot_noise_ref_cycles if n_cycles is None else n_cycles
    return simulate_ensemble(
        None, acq, n_cycles=n_cycles, seed=seed, domain=DOMAIN_REFERENCE
    )


# ---------------------------------------------------------------------------
# closed-form record statistics (oracles and calibration)


def record_mean(
    params: SwapParams,
    acq: AcquisitionConfig,
    initial_atoms: GaussianState,
    quadrature: Quadrature = "P",
) -> NDArray[np.float64]:
    """Expected filtered record (2, n_samples) for both channels."""
    gamma_t, _, q, _ = _channel_couplings(params, quadrature)
    z_mean, _ = _initial_channel_moments(initial_atoms, quadrature)
    dt = acq.dt
    edges = dt * np.arange(acq.n_samples)
    if gamma_t > 0:
        g_bin = np.exp(-gamma_t * edges) * -np.expm1(-gamma_t * dt) / (gamma_t * dt)
    else:
        g_bin = np.ones_like(edges)
    mean = np.sqrt(acq.detection_efficiency) * q * z_mean[:, None] * g_bin[None, :]
    return apply_detection_filter(mean, detection_kernel(acq))


def analytic_record_covariance(
    params: SwapParams | None,
    acq: AcquisitionConfig,
    quadrature: Quadrature = "P",
    *,
    filtered: bool = True,
) -> NDArray[np.float64]:
    """Exact single-channel covariance of the bin-averaged record.

    Derived from the continuous-time output covariance with the atoms
    starting in the CSS, then integrated over the A/D bins. Identical for
    the cosine and sine channels.
    """
    n, dt = acq.n_samples, acq.dt
    cov = np.zeros((n, n))
    np.fill_diagonal(cov, 1.0 / (2.0 * dt))
    if params is not None and params.gamma_sw_per_s > 0:
        g = params.gamma_total_per_s
        gsw, gdec = params.gamma_sw_per_s, params.gamma_dec_per_s
        strength = gsw * (1.0 - params.xi**2) / g
        sign = -strength if quadrature == "P" else strength / params.xi**2

        edges = dt * np.arange(n)
        g_bin = np.exp(-g * edges) * -np.expm1(-g * dt) / (g * dt)
        cov += (sign * gsw) * np.outer(g_bin, g_bin)

        if gdec > 0:
            lag = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
            gd = g * dt
            off = 2.0 * (np.cosh(gd) - 1.0) / gd**2
            toeplitz = np.exp(-g * dt * lag) * off
            np.fill_diagonal(toeplitz, 2.0 / gd * (1.0 + np.expm1(-gd) / gd))
            cov += (sign * gdec) * toeplitz

    eta = acq.detection_efficiency
    if eta < 1.0:
        cov = eta * cov + (1.0 - eta) / (2.0 * dt) * np.eye(n)
    if filtered:
        H = filter_matrix(acq)
        cov = H @ cov @ H.T
    return 0.5 * (cov + cov.T)


def simulator_implied_covariance(
    params: SwapParams | None,
    acq: AcquisitionConfig,
    quadrature: Quadrature = "P",
) -> NDArray[np.float64]:
    """Covariance implied by the discrete recursion the simulator executes.

    Propagates second moments through the exact per-bin transition instead
    of sampling; agreement with `analytic_record_covariance` validates both
    derivations. Assumes CSS initial atoms, no filtering.
    """
    ops = _step_operators(params, acq, quadrature)
    n, dt = acq.n_samples, acq.dt
    Q = ops.noise_factor @ ops.noise_factor.T
    cov = np.zeros((n, n))
    v = 0.5  # CSS variance of the measured atomic quadrature
    for k in range(n):
        cov[k, k] = (ops.phi_yz**2 * v + Q[1, 1]) / dt**2
        c_next = (ops.phi_yz * ops.phi_zz * v + Q[0, 1]) / dt  # Cov(y_k, Z_{k+1})
        decay = c_next * ops.phi_zz ** np.arange(n - k - 1)
        cov[k, k + 1:] = ops.phi_yz * decay / dt
        cov[k + 1:, k] = cov[k, k + 1:]
        v = ops.phi_zz**2 * v + Q[0, 0]
    eta = acq.detection_efficiency
    if eta < 1.0:
        cov = eta * cov + (1.0 - eta) / (2.0 * dt) * np.eye(n)
    return cov


# ---------------------------------------------------------------------------
# power spectra


@dataclass(frozen=True)
class SpectrumResult:
    """Averaged demodulated power spectrum relative to shot noise."""

    freq_offset_Hz: NDArray[np.float64]
    power_db: NDArray[np.float64]
    signal_power: NDArray[np.float64]
    reference_power: NDArray[np.float64]
    n_cycles: int
    n_reference_cycles: int


def _mean_periodogram(pc: NDArray[np.float64], ps: NDArray[np.float64],
                      dt: float) -> NDArray[np.float64]:
    n = pc.shape[1]
    scale = dt / n
    power = np.mean(np.abs(np.fft.fft(pc, axis=1)) ** 2, axis=0)
    power += np.mean(np.abs(np.fft.fft(ps, axis=1)) ** 2, axis=0)
    return np.fft.fftshift(power) * scale


def power_spectrum(records: RecordEnsemble, reference: RecordEnsemble) -> SpectrumResult:
    """Cycle-averaged periodogram of both channels, shot-noise normalized.

    The frequency axis is the demodulated baseband, i.e. the offset from the
    Larmor frequency.
    """
    if records.acq != reference.acq and (
        records.acq.sample_rate_Hz != reference.acq.sample_rate_Hz
        or records.acq.pulse_T_s != reference.acq.pulse_T_s
        or records.acq.detection_bandwidth_Hz != reference.acq.detection_bandwidth_Hz
    ):
        raise ValueError("records and reference acquisition configs differ")
    if records.n_cycles < 2 or reference.n_cycles < 2:
        raise ValueError("need at least 2 cycles per ensemble")
    dt = records.dt
    signal = _mean_periodogram(records.pc, records.ps, dt)
    ref = _mean_periodogram(reference.pc, reference.ps, dt)
    freq = np.fft.fftshift(np.fft.fftfreq(records.n_samples, dt))
    return SpectrumResult(
        freq_offset_Hz=freq,
        power_db=10.0 * np.log10(signal / ref),
        signal_power=signal,
        reference_power=ref,
        n_cycles=records.n_cycles,
        n_reference_cycles=reference.n_cycles,
    )


def expected_periodogram(cov: NDArray[np.float64], dt: float,
                         mean: NDArray[np.float64] | None = None) -> NDArray[np.float64]:
    """Expected single-channel periodogram of a Gaussian record."""
    n = cov.shape[0]
    W = np.fft.fft(np.eye(n), axis=1)
    power = np.einsum("ki,ij,kj->k", W, cov, W.conj()).real
    if mean is not None:
        power = power + np.abs(W @ mean) ** 2
    return np.fft.fftshift(power) * dt / n


def expected_power_spectrum(
    params: SwapParams, acq: AcquisitionConfig, quadrature: Quadrature = "P"
) -> SpectrumResult:
    """Deterministic counterpart of `power_spectrum` for CSS-initial runs."""
    sig_cov = analytic_record_covariance(params, acq, quadrature)
    ref_cov = analytic_record_covariance(None, acq, quadrature)
    signal = 2.0 * expected_periodogram(sig_cov, acq.dt)
    ref = 2.0 * expected_periodogram(ref_cov, acq.dt)
    freq = np.fft.fftshift(np.fft.fftfreq(acq.n_samples, acq.dt))
    return SpectrumResult(
        freq_offset_Hz=freq,
        power_db=10.0 * np.log10(signal / ref),
        signal_power=signal,
        reference_power=ref,
        n_cycles=0,
        n_reference_cycles=0,
    )
