import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import loggamma

from conftest import BENCH_GRID, coulomb, free, screened, state
from phaseamp.amplitude import WRONSKIAN, solve_amplitude
from phaseamp.errors import ConfigurationError, DomainError
from phaseamp.oracle import coulomb_asymptotic, oracle_origin_value, regular_solution
from phaseamp.phase import build_inner_mesh, build_phase, find_r_pi, phase_eval, solve_inner_regular


def test_inner_free_s_wave_ratio():
    inner = solve_inner_regular(free(0))
    assert inner.psi(0.0) == 0.0
    assert inner(math.pi / 2) / inner(1.0) == pytest.approx(1 / math.sin(1.0), abs=1e-12)


def test_inner_free_p_wave_ratio():
    inner = solve_inner_regular(free(1))
    j = lambda r: math.sin(r) / r - math.cos(r)
    assert inner(2.0) / inner(1.0) == pytest.approx(j(2.0) / j(1.0), rel=1e-12)


def test_inner_coulomb_matches_oracle():
    inner = solve_inner_regular(coulomb(0))
    ref = regular_solution(coulomb(0), 3.0)
    slope = oracle_origin_value(coulomb(0))
    r = np.linspace(0.05, 3.0, 30)
    np.testing.assert_allclose(inner(r) / inner(0.0, 1), ref(r)[0] / slope, rtol=1e-10)


def test_inner_mesh_and_extension():
    mesh = build_inner_mesh(free(0), 5.0)
    assert mesh.breakpoints[0] == 0 and mesh.breakpoints[-1] == 5.0
    assert np.max(np.diff(mesh.breakpoints)) <= math.pi / 8 + 1e-15
    # deliberately short r_end must be extended until a node is found
    inner = solve_inner_regular(free(0), r_end=1.0)
    assert inner.r_end >= math.pi


def test_r_pi_free():
    assert find_r_pi(solve_inner_regular(free(0))) == pytest.approx(math.pi, abs=1e-13)
    assert find_r_pi(solve_inner_regular(free(1))) == pytest.approx(4.493409457909064, abs=1e-12)


def test_r_pi_coulomb_matches_oracle_root():
    r_pi = find_r_pi(solve_inner_regular(coulomb(0)))
    ref = regular_solution(coulomb(0), 5.0)
    root = brentq(lambda r: float(ref(np.array([r]))[0][0]), 1.0, 2.5, xtol=1e-15, rtol=1e-15)
    assert r_pi == pytest.approx(root, rel=1e-11)


def test_phase_free_is_r():
    st = state(free(0))
    assert np.max(np.abs(st.phase(BENCH_GRID) - BENCH_GRID)) <= 1e-12
    assert st.phase(st.r_pi) == math.pi


def test_phase_free_p_wave_closed_form():
    st = state(free(1))
    r = np.geomspace(1e-3, 300, 200)
    np.testing.assert_allclose(st.phase(r), r - np.arctan(r), rtol=1e-10, atol=1e-13)


def test_phase_coulomb_asymptotics():
    st = state(coulomb(0))
    r = 300.0
    sigma0 = float(np.imag(loggamma(1 - 1j)))
    theta = r + math.log(2 * r) + sigma0
    # leading asymptotic phase, then the full asymptotic series (mod 2 pi)
    assert abs(st.phase(r) - theta) < 1e-2
    F, _, G, _ = coulomb_asymptotic(0, -1.0, r)
    full = math.atan2(F, G)
    diff = (st.phase(r) - full + math.pi) % (2 * math.pi) - math.pi
    assert abs(diff) <= 1e-10


def test_phase_derivative_and_monotone():
    st = state(coulomb(2))
    r = np.geomspace(st.r_min, 300, 400)
    np.testing.assert_allclose(st.phase.derivative(r), WRONSKIAN / st.amp.value(r), rtol=1e-15)
    h = 1e-4
    r = np.array([0.5, 3.0, 40.0])
    fd = (st.phase(r + h) - st.phase(r - h)) / (2 * h)
    np.testing.assert_allclose(fd, st.phase.derivative(r), rtol=1e-6)


def test_synchronisation_and_node_spacing():
    st = state(coulomb(1))
    assert math.sin(st.phase(st.r_pi)) == pytest.approx(0.0, abs=1e-15)
    e = 1e-6
    assert st.regular(st.r_pi - e) > 0 > st.regular(st.r_pi + e)
    # the next node of S is where the phase reaches 2 pi
    r2 = brentq(lambda r: st.regular(r), st.r_pi + 0.3, st.r_pi + 4.0, xtol=1e-14)
    assert st.phase(r2) - st.phase(st.r_pi) == pytest.approx(math.pi, abs=1e-10)


def test_quadrature_self_consistency():
    st = state(screened("scp", 0.3, 1))
    doubled = build_phase(st.amp, st.r_pi, quad_order=2 * st.phase.quad_order)
    assert abs(doubled(300.0) - st.phase(300.0)) <= 1e-12


def test_phase_preconditions():
    amp = solve_amplitude(free(0), 4.0)
    with pytest.raises(ConfigurationError, match="r_pi"):
        build_phase(amp, math.pi)
    amp = solve_amplitude(free(0), 0.01)
    ph = build_phase(amp, math.pi)
    with pytest.raises(DomainError):
        phase_eval(ph, 0.001)
    assert phase_eval(ph, math.pi) == math.pi
