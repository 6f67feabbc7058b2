import numpy as np
import pytest
from scipy.integrate import quad_vec

from magnuspulse.errors import (DivergingCorrection, InvalidDrop, NoRootFound, NoSolution,
                                UnsupportedOrder)
from magnuspulse.magnus import integrate_magnus
from magnuspulse.solver import (CorrectionProblem, QuadraticProblem, _interaction_hamiltonian,
                                assemble_M, assemble_y, column_map, correction_field, correct_to_order,
                                make_problem, project_subspace, solve_min_norm,
                                solve_quadratic_residual)
from magnuspulse.scenarios import qubit_strong_driving, transmon_gate
from magnuspulse.scenarios.qubit import qubit_error_interaction_closed_form


@pytest.fixture(scope="module")
def qubit():
    return qubit_strong_driving(wq_tf=5.0)


@pytest.fixture(scope="module")
def transmon():
    return transmon_gate(alpha_tf=5.0)


def transmon_problem(sc, y=None):
    M, cmap = assemble_M(sc.frame(), sc.channels, sc.t_f, n_intervals=sc.n_intervals)
    if y is None:
        y = assemble_y(1, vI=sc.error_interaction(), t_f=sc.t_f, n_intervals=sc.n_intervals)
    prob = make_problem(M, y, cmap, sc.basis, policy=sc.policy)
    return project_subspace(prob, sc.drop_rows, sc.basis, sc.projector)


def test_first_order_rhs_is_minus_error_integral(qubit):
    vt = qubit_error_interaction_closed_form(np.pi / 2, 5.0)
    ref = -quad_vec(vt, 0.0, qubit.t_f, epsabs=1e-12, epsrel=1e-12)[0]
    y_quad = assemble_y(1, vI=qubit.error_interaction(), t_f=qubit.t_f)
    y_magnus = assemble_y(1, integrate_magnus(qubit.error_interaction(), qubit.basis, 1, qubit.t_f))
    assert np.allclose(y_quad, ref, atol=1e-9)
    assert np.allclose(y_magnus, ref, atol=1e-9)


def test_transmon_seven_equations(transmon):
    prob = transmon_problem(transmon)
    assert prob.n_eq == 7
    assert "l8" not in prob.row_labels
    assert prob.M.shape[1] > 7


def test_dropping_an_inside_operator_is_refused(transmon):
    prob = make_problem(np.zeros((8, 2)), np.zeros(8), [("a", 1, "cos"), ("a", 1, "sin")],
                        transmon.basis)
    with pytest.raises(InvalidDrop):
        project_subspace(prob, ["sx"], transmon.basis, transmon.projector)


def test_min_norm_beats_random_feasible_solutions(transmon):
    prob = transmon_problem(transmon)
    x, info = solve_min_norm(prob)
    assert info["residual"] <= 1e-10 * (1 + np.linalg.norm(prob.y))
    _, s, Vt = np.linalg.svd(prob.M)
    null = Vt[np.sum(s > 1e-10 * s[0]):]
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = x + null.T @ rng.normal(scale=np.linalg.norm(x), size=null.shape[0])
        assert np.linalg.norm(prob.M @ z - prob.y) <= 1e-8 * (1 + np.linalg.norm(prob.y))
        assert np.linalg.norm(z) >= np.linalg.norm(x)


def test_no_solution_for_inconsistent_system():
    prob = CorrectionProblem(M=np.array([[1.0, 0.0], [1.0, 0.0]]), y=np.array([1.0, 2.0]),
                             column_map=[("a", 0, "cos"), ("a", 1, "cos")], active_rows=(0, 1))
    with pytest.raises(NoSolution):
        solve_min_norm(prob)
    x, info = solve_min_norm(prob, require_solution=False)
    assert x == pytest.approx([1.5, 0.0])


def test_column_map_layout(qubit):
    cmap = column_map(qubit.channels)
    assert len(cmap) == len(set(cmap)) == qubit.n_params


def test_qubit_second_order_gain(qubit):
    res = correct_to_order(qubit, 2)
    e0 = qubit.evaluate().epsilon
    e2 = qubit.evaluate(res.total()).epsilon
    assert e2 < e0 / 100
    for r, d in zip(res.residuals, res.diagnostics):
        assert r <= 1e-10 * (1 + d["y_norm"])


def test_magnus_sum_telescopes(qubit):
    # the order-2 field's first Magnus term cancels Omega_1 + Omega_2 of the
    # order-1 corrected Hamiltonian
    res = correct_to_order(qubit, 2)
    frame = qubit.frame()
    h1 = _interaction_hamiltonian(qubit, frame, res.total(1))
    tail = integrate_magnus(h1, qubit.basis, 2, qubit.t_f).total(2)
    W2 = correction_field(qubit.channels, res.per_order[1], qubit.t_f, qubit.basis.n_ops)
    om1 = quad_vec(lambda t: frame(t).T @ W2(t), 0.0, qubit.t_f, epsabs=1e-12, epsrel=1e-12)[0]
    assert np.max(np.abs(om1 + tail)) < 1e-8


def test_deterministic(qubit):
    a = correct_to_order(qubit, 2, seed=5).total()
    b = correct_to_order(qubit, 2, seed=5).total()
    assert np.array_equal(a, b)


def test_order_limit(qubit):
    with pytest.raises(UnsupportedOrder):
        correct_to_order(qubit, 7)


def test_divergence_keeps_accepted_orders():
    sc = transmon_gate(alpha_tf=3.0)
    with pytest.raises(DivergingCorrection) as err:
        correct_to_order(sc, 6)
    partial = err.value.partial
    assert err.value.order == partial.order + 1
    assert partial.order >= 1


def circle_problem():
    # R(x) = -1 + x1 + x1^2 + x2^2: a circle whose point nearest the origin
    # is x = ((sqrt(5) - 1) / 2, 0)
    Q = np.eye(2)[None]
    return QuadraticProblem(b=np.array([-1.0]), L=np.array([[1.0, 0.0]]), Q=Q)


def test_quadratic_min_norm_root():
    x, info = solve_quadratic_residual(circle_problem(), seed=1)
    assert np.linalg.norm(circle_problem().residual(x)) <= 1e-9
    assert np.linalg.norm(x) == pytest.approx((np.sqrt(5) - 1) / 2, rel=1e-7)
    assert info["n_roots"] >= 1


def test_quadratic_seed_reproducible():
    a, _ = solve_quadratic_residual(circle_problem(), seed=3)
    b, _ = solve_quadratic_residual(circle_problem(), seed=3)
    assert np.array_equal(a, b)


def test_quadratic_without_root():
    prob = QuadraticProblem(b=np.array([1.0]), L=np.array([[0.0, 0.0]]), Q=np.eye(2)[None], level=2)
    with pytest.raises(NoRootFound) as err:
        solve_quadratic_residual(prob, n_starts=8, scale=1.0)
    assert err.value.level == 2
