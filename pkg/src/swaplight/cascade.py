"""Continuous-time linear system for the two-cell cascade.

After sending the probe through both cells the cosine and sine sideband
combinations each obey the same linear system: the collective atomic
quadratures relax at the swap rate while being driven by the input light,
and the output light is the input plus the atomic contribution,

    dX_b/dt = (chi_p + chi_a) p_in - gamma_sw X_b
    dP_b/dt = -(chi_p - chi_a) x_in - gamma_sw P_b
    x_out   = x_in + (chi_p + chi_a) P_b
    p_out   = p_in - (chi_p - chi_a) X_b

Projecting the in/out light onto exponentially rising/falling temporal modes
turns this into the closed-form swap/squeeze input-output map; integrating
the system numerically and comparing against that map is the main
correctness oracle for the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from .couplings import ModeFunction, SwapParams
from .gaussian import SymplecticMap, kappa, swap_io_map


@dataclass(frozen=True)
class CascadeSystem:
    """State-space form (A, B, C, D) of one demodulation channel.

    State (X_b, P_b), input (x_in, p_in), output (x_out, p_out); the direct
    feedthrough D is the identity (light crosses the cells within a sample).
    """

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]
    D: NDArray[np.float64]


def cell_cascade_generators(params: SwapParams) -> CascadeSystem:
    """Build the per-channel linear system for the given couplings.

    Only the coherent swap dynamics enter here; extra decoherence is a
    property of the stochastic simulation layer.
    """
    g = params.gamma_sw_per_s
    c_sum = params.chi_p + params.chi_a    # drives X_b from p_in, x_out from P_b
    c_diff = params.chi_p - params.chi_a   # drives P_b from x_in, p_out from X_b
    A = np.array([[-g, 0.0], [0.0, -g]])
    B = np.array([[0.0, c_sum], [-c_diff, 0.0]])
    C = np.array([[0.0, c_sum], [-c_diff, 0.0]])
    D = np.eye(2)
    return CascadeSystem(A, B, C, D)


def input_mode(params: SwapParams, dt: float, n_samples: int) -> ModeFunction:
    """Exponentially rising input mode, L2-normalized on [0, T]."""
    g, T = params.gamma_sw_per_s, params.pulse_T_s
    t = dt * np.arange(n_samples)
    # stable form of N_in exp(gamma t): amplitude referenced to the pulse end
    u = np.sqrt(2.0 * g / -np.expm1(-2.0 * g * T)) * np.exp(g * (t - T))
    u = u / np.sqrt(np.sum(u**2) * dt)
    return ModeFunction(u, dt)


def output_mode(params: SwapParams, dt: float, n_samples: int) -> ModeFunction:
    """Exponentially falling output mode, L2-normalized on [0, T]."""
    g = params.gamma_sw_per_s
    t = dt * np.arange(n_samples)
    u = np.sqrt(2.0 * g / -np.expm1(-2.0 * g * params.pulse_T_s)) * np.exp(-g * t)
    u = u / np.sqrt(np.sum(u**2) * dt)
    return ModeFunction(u, dt)


def integrated_io_matrix(params: SwapParams, rtol: float = 1e-12) -> NDArray[np.float64]:
    """Input-output matrix obtained by integrating the cascade equations.

    Runs four unit-response integrations of the channel system over the pulse,
    driving either an initial atomic quadrature or the rising input mode, and
    projects the output light onto the falling mode. Returns the resulting
    4x4 matrix over (X_A, P_A, X_L, P_L), which should reproduce the
    closed-form map to high accuracy. Kept independent of the closed form so
    it can serve as an oracle.
    """
    g, T = params.gamma_sw_per_s, params.pulse_T_s
    sys = cell_cascade_generators(params)
    norm_in = np.sqrt(2.0 * g / -np.expm1(-2.0 * g * T))
    norm_out = norm_in  # both exponentials share the same L2 normalization

    def u_in(t):
        return norm_in * np.exp(g * (t - T))

    def u_out(t):
        return norm_out * np.exp(-g * t)

    def rhs(t, y, alpha_x, alpha_p):
        xb, pb = y[0], y[1]
        x_in = alpha_x * u_in(t)
        p_in = alpha_p * u_in(t)
        dxb, dpb = sys.A @ (xb, pb) + sys.B @ (x_in, p_in)
        x_out = x_in + sys.C[0, 1] * pb
        p_out = p_in + sys.C[1, 0] * xb
        return [dxb, dpb, u_out(t) * x_out, u_out(t) * p_out]

    columns = []
    for x_a, p_a, alpha_x, alpha_p in (
        (1.0, 0.0, 0.0, 0.0),
        (0.0, 1.0, 0.0, 0.0),
        (0.0, 0.0, 1.0, 0.0),
        (0.0, 0.0, 0.0, 1.0),
    ):
        sol = solve_ivp(
            rhs,
            (0.0, T),
            [x_a, p_a, 0.0, 0.0],
            args=(alpha_x, alpha_p),
            method="DOP853",
            rtol=rtol,
            atol=1e-16,
        )
        columns.append(sol.y[:, -1])
    return np.array(columns).T


def closed_form_io_map(params: SwapParams) -> SymplecticMap:
    """Closed-form swap map at this parameter set's pulse duration."""
    k = kappa(params.gamma_sw_per_s, params.xi, params.pulse_T_s)
    return swap_io_map(params.xi, k)
