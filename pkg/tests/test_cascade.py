import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import solve_continuous_lyapunov

from swaplight import (
    SwapParams,
    cell_cascade_generators,
    closed_form_io_map,
    input_mode,
    integrated_io_matrix,
    kappa,
    mean_output,
    output_mode,
)

XI = 1.0 / np.sqrt(6.3)
GAMMA = 1.0 / 5.7e-3


def params(gamma=GAMMA, xi=XI, T=0.015, gdec=0.0):
    return SwapParams(gamma_sw_per_s=gamma, xi=xi, pulse_T_s=T, gamma_dec_per_s=gdec)


def test_generator_structure():
    p = params()
    sys = cell_cascade_generators(p)
    c_sum = np.sqrt(2 * p.gamma_sw_per_s) / p.xi
    c_diff = np.sqrt(2 * p.gamma_sw_per_s) * p.xi
    assert np.allclose(sys.A, -p.gamma_sw_per_s * np.eye(2))
    assert abs(sys.B[0, 1] - c_sum) < 1e-9
    assert abs(sys.B[1, 0] + c_diff) < 1e-9
    assert np.allclose(sys.C, sys.B)
    assert np.allclose(sys.D, np.eye(2))


def test_qnd_limit_structure():
    # as xi -> 0 the couplings become equal, the p channel is undisturbed,
    # and the swap relaxation rate vanishes
    p = SwapParams(gamma_sw_per_s=1e-8, xi=1e-4, pulse_T_s=0.015)
    sys = cell_cascade_generators(p)
    assert abs(sys.C[1, 0]) < 1e-5  # p_out barely touched by atoms
    assert abs(sys.A[0, 0]) < 1e-7


def test_steady_state_lyapunov_oracle():
    """Stationary atomic variances from the Lyapunov equation match the
    antisqueezed/squeezed values of the completed swap."""
    p = params()
    sys = cell_cascade_generators(p)
    # white-noise inputs with vacuum intensity 1/2 per quadrature
    diffusion = 0.5 * (sys.B @ sys.B.T)
    V = solve_continuous_lyapunov(sys.A, -diffusion)
    assert abs(V[0, 0] - 1.0 / (2.0 * p.xi**2)) < 1e-9 / p.xi**2
    assert abs(V[1, 1] - p.xi**2 / 2.0) < 1e-9
    assert abs(V[0, 1]) < 1e-12


@pytest.mark.parametrize("gamma,xi,T", [
    (GAMMA, XI, 0.015),
    (60.0, 0.7, 0.03),
    (400.0, 0.25, 0.004),
])
def test_integration_reproduces_closed_form(gamma, xi, T):
    p = params(gamma, xi, T)
    S_num = integrated_io_matrix(p)
    S = closed_form_io_map(p).matrix
    scale = np.abs(S).max()
    assert np.abs(S_num - S).max() < 1e-9 * scale


def test_exponential_modes_normalized():
    p = params()
    for mode in (input_mode(p, 1e-5, 1500), output_mode(p, 1e-5, 1500)):
        assert abs(np.sum(mode.samples**2) * mode.dt - 1.0) < 1e-9


def test_mean_output_projection_consistency():
    """Projecting the time-domain mean on the falling mode reproduces the
    closed-form map's atomic-to-light transfer kappa."""
    p = params()
    g, T = p.gamma_sw_per_s, p.pulse_T_s
    p_atom = 1.3
    norm_out = np.sqrt(2.0 * g / -np.expm1(-2.0 * g * T))

    def integrand(t):
        x_mean, _ = mean_output(t, p, 0.0, p_atom)
        return norm_out * np.exp(-g * t) * x_mean

    projected, _ = quad(integrand, 0.0, T, epsabs=1e-13, epsrel=1e-12)
    expected = kappa(g, p.xi, T) * p_atom
    assert abs(projected - expected) < 1e-8 * abs(expected)
