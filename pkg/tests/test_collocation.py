import math

import numpy as np
import pytest

from phaseamp.collocation import (
    CollocationProblem,
    Mesh,
    legendre_nodes,
    map_to_element,
    propagate,
    propagate_linear,
    solve_element_fixed_point,
    solve_element_linear,
)
from phaseamp.errors import ConvergenceError, DomainError, SingularMatrixError
from phaseamp.taylor_basis import TaylorSeries


def oscillator(x):
    # f'' + f = 0 as coefficient rows a_0 f + a_1 f' + a_2 f''
    return np.vstack([np.ones_like(x), np.zeros_like(x), np.ones_like(x)])


def oscillator_factory(order=12):
    return lambda i, a, b, known: CollocationProblem(oscillator, known, known.size + order)


def test_legendre_small_orders():
    x, w = legendre_nodes(1)
    assert x.tolist() == [0.0] and w.tolist() == [2.0]
    x, w = legendre_nodes(2)
    np.testing.assert_allclose(x, [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=1e-15)


def test_legendre_weights_integrate_exactly():
    x, w = legendre_nodes(5)
    assert w.sum() == pytest.approx(2.0, rel=1e-15)
    assert (w * x * x).sum() == pytest.approx(2 / 3, rel=1e-15)
    x, w = legendre_nodes(14)
    assert np.all(np.diff(x) > 0)
    assert (w * x ** 26).sum() == pytest.approx(2 / 27, rel=1e-13)


def test_legendre_matches_numpy():
    for q in (3, 8, 15, 30):
        x, w = legendre_nodes(q)
        xr, wr = np.polynomial.legendre.leggauss(q)
        np.testing.assert_allclose(x, xr, atol=1e-15)
        # numpy's own weights carry ~4e-13 error at q = 30
        np.testing.assert_allclose(w, wr, rtol=1e-12)


def test_map_to_element():
    assert map_to_element([0.0], 0.0, 2.0)[0] == 1.0
    assert map_to_element([-1.0], 3.0, 5.0)[0] == 0.0
    x, _ = legendre_nodes(2)
    np.testing.assert_allclose(map_to_element(x, 0.0, 1.0), [0.2113248654, 0.7886751346], atol=1e-10)
    with pytest.raises(DomainError):
        map_to_element(x, 1.0, 1.0)


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh([0.0])
    with pytest.raises(ValueError):
        Mesh([0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        Mesh([0.0, np.inf])
    m = Mesh([0.0, 1.0, 3.0])
    assert m.n_elements == 2
    assert m.locate([0.5, 1.0, 3.0, 5.0]).tolist() == [0, 1, 1, 1]


def test_problem_validation():
    with pytest.raises(ValueError):
        CollocationProblem(oscillator, [0.0, 1.0], 2)
    assert CollocationProblem(oscillator, [0.0, 1.0]).n_coeffs == 14


def test_element_sine():
    s = solve_element_linear(CollocationProblem(oscillator, [0.0, 1.0], 14), 0.0, 0.1)
    assert s(0.1) == pytest.approx(0.09983341664683, abs=1e-14)


def test_element_exponential():
    rows = lambda x: np.vstack([-np.ones_like(x), np.ones_like(x)])
    s = solve_element_linear(CollocationProblem(rows, [1.0], 13), 0.0, 0.5)
    assert s(0.5) == pytest.approx(math.exp(0.5), abs=1e-13)


def test_element_zero_operator_trivial():
    rows = lambda x: np.vstack([np.zeros_like(x), np.zeros_like(x), np.ones_like(x)])
    s = solve_element_linear(CollocationProblem(rows, [0.0, 0.0], 14), 0.0, 1.0)
    assert np.all(s.coeffs == 0.0)


def test_singular_matrix_reported():
    rows = lambda x: np.vstack([np.zeros_like(x), np.zeros_like(x), np.zeros_like(x)])
    with pytest.raises(SingularMatrixError) as info:
        solve_element_linear(CollocationProblem(rows, [0.0, 1.0], 14), 0.0, 1.0)
    assert info.value.condition > 1e12


def test_element_residual_small():
    p = CollocationProblem(oscillator, [0.0, 1.0], 14)
    s = solve_element_linear(p, 0.0, 0.7)
    x, _ = legendre_nodes(12)
    res = p.residual(s, map_to_element(x, 0.0, 0.7))
    assert np.max(np.abs(res)) <= 1e-12 * np.max(np.abs(p.matrix(0.0, map_to_element(x, 0, 0.7))))


def test_polynomial_solution_is_exact():
    # f'' = 6x on [0, 2] with f(0)=1, f'(0)=0: f = 1 + x^3
    rows = lambda x: np.vstack([np.zeros_like(x), np.zeros_like(x), np.ones_like(x)])
    p = CollocationProblem(rows, [1.0, 0.0], 8, source=lambda x: 6.0 * x)
    s = solve_element_linear(p, 0.0, 2.0)
    np.testing.assert_allclose(s.coeffs[:4], [1.0, 0.0, 0.0, 6.0], atol=1e-13)
    assert s(2.0) == pytest.approx(9.0, rel=1e-14)


def test_spectral_convergence():
    errs = []
    for order in (4, 8, 12):
        s = solve_element_linear(CollocationProblem(oscillator, [0.0, 1.0], 2 + order), 0.0, 1.0)
        errs.append(abs(s(1.0) - math.sin(1.0)))
    assert errs[1] <= 1e-3 * errs[0]
    assert errs[2] <= 1e-3 * errs[1] or errs[2] < 1e-15


def test_propagate_sine():
    mesh = Mesh([0.0, 1.0, 2.0, 3.0])
    sol = propagate_linear(mesh, oscillator_factory(), [0.0, 1.0], 2, 2)
    assert sol(3.0) == pytest.approx(math.sin(3.0), abs=1e-12)
    assert sol.continuity_defect(2) <= 1e-13


def test_single_element_equals_direct_solve():
    sol = propagate_linear(Mesh([0.0, 0.6]), oscillator_factory(), [0.0, 1.0], 2, 2)
    direct = solve_element_linear(CollocationProblem(oscillator, [0.0, 1.0], 14), 0.0, 0.6)
    np.testing.assert_array_equal(sol.elements[0].coeffs, direct.coeffs)


def test_propagate_deterministic():
    mesh = Mesh(np.linspace(0, 20, 21))
    a = propagate_linear(mesh, oscillator_factory(), [1.0, 0.0], 2, 2)
    b = propagate_linear(mesh, oscillator_factory(), [1.0, 0.0], 2, 2)
    x = np.linspace(0, 20, 101)
    np.testing.assert_array_equal(a(x), b(x))


def test_propagate_annotates_element():
    def solve(i, a, b, known, seed):
        if i == 2:
            raise ConvergenceError("boom")
        return solve_element_linear(CollocationProblem(oscillator, known, 14), a, b)

    with pytest.raises(ConvergenceError) as info:
        propagate(Mesh([0.0, 1.0, 2.0, 3.0]), solve, [0.0, 1.0], 2)
    assert info.value.element == 2
    assert "element 2" in str(info.value)


def test_propagate_linear_checks_first_nu():
    with pytest.raises(ValueError):
        propagate_linear(Mesh([0.0, 1.0]), oscillator_factory(), [0.0], 2, 2)


def test_fixed_point_linear_in_disguise():
    def build(prev):
        return CollocationProblem(oscillator, [0.0, 1.0], 14)

    seed = TaylorSeries(0.0, 0.5, np.zeros(14))
    s, its = solve_element_fixed_point(build, 0.0, 0.5, seed, full_output=True)
    assert its == 1
    assert s(0.5) == pytest.approx(math.sin(0.5), abs=1e-15)


def _milne_free_builder(known):
    # rho^4 u'' + 2 rho^3 u' + 2 u = (rho^4 u'^2 + 4 W^2) / (2u), linearised about prev
    w = 2.0 / math.pi

    def build(prev):
        def rows(x):
            up = prev.at_global(x)
            if np.any(up <= 0):
                raise DomainError("iterate <= 0")
            return np.vstack([2.0 + 2.0 * w * w / up ** 2, 2.0 * x ** 3, x ** 4])

        def src(x):
            up, up1 = prev.at_global(x), prev.at_global(x, 1)
            return x ** 4 * up1 ** 2 / (2 * up) + 4 * w * w / up

        return CollocationProblem(rows, known, 14, src)
    return build


def test_fixed_point_constant_free_amplitude():
    y = 2.0 / math.pi
    seed = TaylorSeries(0.0, 0.1, np.r_[y, np.zeros(13)])
    s, its = solve_element_fixed_point(_milne_free_builder([y]), 0.0, 0.1, seed, full_output=True)
    assert its <= 2
    assert np.max(np.abs(s(np.linspace(0, 0.1, 9)) - y)) <= 1e-14


def test_fixed_point_poor_seed():
    y = 2.0 / math.pi
    seed = TaylorSeries(0.0, 0.1, np.r_[0.5 * y, np.zeros(13)])
    s = solve_element_fixed_point(_milne_free_builder([y]), 0.0, 0.1, seed, max_iter=50)
    assert np.max(np.abs(s(np.linspace(0, 0.1, 9)) - y)) <= 1e-13


def test_fixed_point_domain_and_budget():
    seed = TaylorSeries(0.0, 0.1, np.r_[-1.0, np.zeros(13)])
    with pytest.raises(DomainError):
        solve_element_fixed_point(_milne_free_builder([2 / math.pi]), 0.0, 0.1, seed)

    def build(prev):
        # f' = 1 + (last iterate's value): the fixed point drifts each round
        return CollocationProblem(lambda x: np.vstack([np.zeros_like(x), np.ones_like(x)]),
                                  [0.0], 13, lambda x: 1.0 + prev.at_global(x) + 1.0)
    with pytest.raises(ConvergenceError) as info:
        solve_element_fixed_point(build, 0.0, 10.0, TaylorSeries(0.0, 10.0, np.zeros(13)),
                                  max_iter=3)
    assert info.value.residual > 0
