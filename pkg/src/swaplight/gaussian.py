"""Gaussian-state algebra for quadrature dynamics.

States are described by a mean vector and covariance matrix over an ordered
list of bosonic modes, with quadrature ordering (X1, P1, X2, P2, ...) and
vacuum variance 1/2 per quadrature ([X, P] = i). All transformations are
symplectic maps plus displacements; everything here is a pure function over
immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

SYMPLECTIC_TOL = 1e-10       # absolute, entrywise, on S^T Omega S - Omega
SYMMETRY_RTOL = 1e-12        # relative, on cov asymmetry
HEISENBERG_FLOOR = 0.5 - 1e-9
VACUUM_VAR = 0.5


class RegimeError(ValueError):
    """Parameters outside the passive-dominant (real squeezing ratio) regime."""


class QndLimitError(ValueError):
    """Raised when xi = 0: the coupling formula degenerates to the QND limit.

    The swap coupling constant is undefined there; QND-type runs should use
    the cascade generators directly with equal Stokes/anti-Stokes rates.
    """


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Return the symplectic form Omega for the (X1, P1, ...) ordering."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), block)


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix over labeled modes.

    Attributes
    ----------
    labels:
        Ordered mode identifiers, one per (X, P) pair.
    mean:
        Length-2M vector of quadrature means, dimensionless.
    cov:
        2M x 2M symmetric covariance matrix; vacuum is 0.5 * identity.
    """

    labels: tuple[str, ...]
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        n = 2 * len(self.labels)
        if len(self.labels) < 1:
            raise ValueError("state needs at least one mode")
        if mean.shape != (n,):
            raise ValueError(f"mean has shape {mean.shape}, expected ({n},)")
        if cov.shape != (n, n):
            raise ValueError(f"cov has shape {cov.shape}, expected ({n}, {n})")
        scale = max(np.abs(cov).max(), 1.0)
        if np.abs(cov - cov.T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10 * scale:
            raise ValueError("covariance matrix is not positive semidefinite")
        nu_min = min(_symplectic_spectrum(cov))
        if nu_min < HEISENBERG_FLOOR:
            raise ValueError(
                f"state violates the Heisenberg bound: min symplectic eigenvalue {nu_min:.3e}"
            )

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def as_dict(self) -> dict:
        """JSON-ready form used by report and sidecar files."""
        return {
            "labels": list(self.labels),
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GaussianState":
        return cls(
            tuple(payload["labels"]),
            np.asarray(payload["mean"], dtype=float),
            np.asarray(payload["cov"], dtype=float),
        )


@dataclass(frozen=True)
class SymplecticMap:
    """Linear quadrature transformation x -> S x + d preserving commutators."""

    matrix: NDArray[np.float64]
    displacement: NDArray[np.float64] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ValueError("symplectic matrix must be square with even dimension")
        d = self.displacement
        d = np.zeros(S.shape[0]) if d is None else np.asarray(d, dtype=float)
        if d.shape != (S.shape[0],):
            raise ValueError("displacement length does not match matrix dimension")
        omega = symplectic_form(S.shape[0] // 2)
        defect = np.abs(S.T @ omega @ S - omega).max()
        if defect > SYMPLECTIC_TOL:
            raise ValueError(f"matrix is not symplectic: defect {defect:.3e}")
        object.__setattr__(self, "matrix", S)
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


def vacuum_state(n_modes: int, labels: Sequence[str] | None = None) -> GaussianState:
    """Vacuum (or coherent-spin-state equivalent) over `n_modes` modes."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if labels is None:
        labels = tuple(f"mode{i}" for i in range(n_modes))
    elif len(labels) != n_modes:
        raise ValueError("labels length must equal n_modes")
    n = 2 * n_modes
    return GaussianState(tuple(labels), np.zeros(n), VACUUM_VAR * np.eye(n))


def apply_map(state: GaussianState, smap: SymplecticMap) -> GaussianState:
    """Propagate a Gaussian state through a symplectic map."""
    if smap.n_modes != state.n_modes:
        raise ValueError(
            f"map acts on {smap.n_modes} modes but state has {state.n_modes}"
        )
    S, d = smap.matrix, smap.displacement
    mean = S @ state.mean + d
    cov = S @ state.cov @ S.T
    cov = 0.5 * (cov + cov.T)
    return GaussianState(state.labels, mean, cov)


def compose(second: SymplecticMap, first: SymplecticMap) -> SymplecticMap:
    """Map equivalent to applying `first` then `second`."""
    if second.n_modes != first.n_modes:
        raise ValueError("cannot compose maps of different mode counts")
    return SymplecticMap(
        second.matrix @ first.matrix,
        second.matrix @ first.displacement + second.displacement,
    )


def phase_rotation(theta: float, n_modes: int = 1) -> SymplecticMap:
    """Uniform phase-space rotation by angle theta on every mode."""
    c, s = np.cos(theta), np.sin(theta)
    block = np.array([[c, s], [-s, c]])
    return SymplecticMap(np.kron(np.eye(n_modes), block))


def kappa(gamma_sw: float, xi: float, T: float) -> float:
    """Dimensionless swap coupling after a pulse of duration T.

    kappa = (1/xi) * sqrt(1 - exp(-2 gamma_sw T)); monotone in T, with the
    full-swap limit kappa -> 1/xi (so xi^2 kappa^2 -> 1) as T -> infinity.
    """
    if xi == 0:
        raise QndLimitError("xi = 0: coupling constant undefined in the QND limit")
    if not 0 < xi * xi < 1:
        raise RegimeError(f"xi^2 = {xi * xi:.4g} outside (0, 1)")
    if gamma_sw <= 0:
        raise ValueError("gamma_sw must be positive")
    if T < 0:
        raise ValueError("pulse duration must be nonnegative")
    return np.sqrt(-np.expm1(-2.0 * gamma_sw * T)) / xi


def swap_io_map(xi: float, kappa_value: float) -> SymplecticMap:
    """Input-output map of the two-cell swap interaction.

    Acts on the mode pair (atoms, light) in the quadrature ordering
    (X_A, P_A, X_L, P_L):

        X_A' = t X_A + kappa P_L        X_L' = t X_L + kappa P_A
        P_A' = t P_A - xi^2 kappa X_L   P_L' = t P_L - xi^2 kappa X_A

    with t = sqrt(1 - xi^2 kappa^2). At xi^2 kappa^2 = 1 the atomic state is
    squeezed by 1/xi and fully mapped onto the light, and vice versa.
    """
    s2 = xi * xi * kappa_value * kappa_value
    if not 0 <= s2 <= 1 + 1e-12:
        raise RegimeError(f"xi^2 kappa^2 = {s2:.6g} outside [0, 1]")
    t = np.sqrt(max(1.0 - s2, 0.0))
    k, xxk = kappa_value, xi * xi * kappa_value
    S = np.array(
        [
            [t, 0.0, 0.0, k],
            [0.0, t, -xxk, 0.0],
            [0.0, k, t, 0.0],
            [-xxk, 0.0, 0.0, t],
        ]
    )
    return SymplecticMap(S)


def _symplectic_spectrum(cov: NDArray[np.float64]) -> NDArray[np.float64]:
    omega = symplectic_form(cov.shape[0] // 2)
    ev = np.linalg.eigvals(omega @ cov)
    nus = np.sort(np.abs(ev.imag))
    # eigenvalues come in +/- i nu pairs; keep one of each
    return nus[1::2]


def symplectic_eigenvalues(state: GaussianState) -> list[float]:
    """Symplectic spectrum of the state's covariance (all 1/2 for pure states)."""
    return [float(nu) for nu in _symplectic_spectrum(state.cov)]
