"""Magnus expansion of a coefficient-valued Hamiltonian, integrated as one ODE.

For ``dU/dt = A(t) U`` with ``A = sum_j h_j (-i A_j)`` the exponent obeys
``dOmega/dt = sum_j B_j / j! ad_Omega^j (A)`` (Bernoulli numbers ``B_j``).
Expanding in powers of ``A`` gives, for the order-``n`` term,

    dOmega_n/dt = sum_j (B_j / j!) sum_{k_1 + ... + k_j = n - 1} ad_{Omega_k1} ... ad_{Omega_kj} A

which is evaluated recursively through partial sums ``S_j^(m)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .algebra import OperatorBasis
from .errors import FitFailure, IntegratorFailure, UnsupportedOrder
from .propagation import coefficient_hamiltonian, propagate

MAX_ORDER = 6
# B_j / j! for j = 0..5
_BERNOULLI_WEIGHTS = np.array([1.0, -0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0])


@dataclass(frozen=True, eq=False)
class MagnusStack:
    """Magnus terms ``Omega_k(t_f)`` as real coefficients of ``-i A_j``.

    ``omegas[k - 1]`` holds order ``k``.  ``dense`` (optional) interpolates the
    stacked state ``(order * n_ops,)`` over ``[0, t_f]``.
    """

    order: int
    omegas: np.ndarray
    basis: OperatorBasis
    t_f: float
    dense: object = None

    def total(self, upto=None):
        upto = self.order if upto is None else upto
        return self.omegas[:upto].sum(axis=0)

    def at(self, t):
        """Magnus terms at intermediate time ``t`` (needs dense output)."""
        if self.dense is None:
            raise ValueError("stack was built without dense output")
        return self.dense(t).reshape(self.order, -1)

    def generator(self, upto=None):
        """Anti-Hermitian matrix ``sum_k Omega_k`` in the basis representation."""
        return self.basis.to_generator(self.total(upto))


def magnus_rhs(omegas, A, basis: OperatorBasis, order: int):
    """Time derivatives of ``Omega_1..Omega_order`` given the current terms."""
    # S[j][m]: sum over compositions of m into j positive parts of nested ad's on A
    S = [[None] * order for _ in range(order)]
    S[0][0] = A
    out = np.empty((order, A.size))
    out[0] = A
    for m in range(1, order):
        for j in range(1, m + 1):
            acc = np.zeros_like(A)
            for k in range(1, m - j + 2):
                prev = S[j - 1][m - k]
                if prev is not None:
                    acc += basis.bracket(omegas[k - 1], prev)
            S[j][m] = acc
        deriv = np.zeros_like(A)
        for j in range(1, m + 1):
            w = _BERNOULLI_WEIGHTS[j]
            if w != 0.0:
                deriv += w * S[j][m]
        out[m] = deriv
    return out


def integrate_magnus(hI: Callable[[float], np.ndarray], basis: OperatorBasis, order: int,
                     t_f: float, tol: float = 1e-11, atol: float = 1e-14,
                     dense: bool = False) -> MagnusStack:
    """Integrate ``Omega_1..Omega_order`` jointly from 0 to ``t_f``.

    Parameters
    ----------
    hI : callable
        ``t -> h(t)``, the coefficients of ``H_I(t) = sum_j h_j A_j``.
    order : int
        Highest Magnus order, 1 to 6.

    Raises
    ------
    UnsupportedOrder
        If ``order`` is outside ``1..6``.
    """
    if not 1 <= order <= MAX_ORDER:
        raise UnsupportedOrder(f"Magnus order must be between 1 and {MAX_ORDER}")
    N = basis.n_ops

    def rhs(t, y):
        return magnus_rhs(y.reshape(order, N), np.asarray(hI(t), float), basis, order).ravel()

    sol = solve_ivp(rhs, (0.0, t_f), np.zeros(order * N), method="DOP853",
                    rtol=tol, atol=atol, dense_output=dense)
    if sol.status != 0:
        raise IntegratorFailure(sol.message)
    omegas = sol.y[:, -1].reshape(order, N)
    if not np.all(np.isfinite(omegas)):
        raise IntegratorFailure("non-finite Magnus terms")
    return MagnusStack(order=order, omegas=omegas, basis=basis, t_f=t_f,
                       dense=sol.sol if dense else None)


def interaction_propagator(hI, basis: OperatorBasis, t_f, tol=1e-11):
    """Directly integrated ``U_I(t_f)`` in the basis matrix representation."""
    return propagate(coefficient_hamiltonian(hI, basis.ops), basis.dim, t_f,
                     rtol=tol, atol=tol * 1e-2, dense=False).final


def magnus_defect(stack: MagnusStack, hI, basis: OperatorBasis, t_f, U_I=None) -> float:
    """``max |exp(sum_k Omega_k) - U_I(t_f)|`` elementwise."""
    if U_I is None:
        U_I = interaction_propagator(hI, basis, t_f)
    return float(np.max(np.abs(expm(stack.generator()) - U_I)))


def omega2_nested_quadrature(hI, basis: OperatorBasis, t_f, n_nodes=400):
    """Second Magnus term from its double-integral definition.

    ``Omega_2 = 1/2 int_0^tf dt1 int_0^t1 dt2 [A(t1), A(t2)]`` evaluated with
    Gauss-Legendre panels on the outer integral and the inner running integral
    accumulated with the same nodes.  Independent of the ODE route.
    """
    x, w = np.polynomial.legendre.leggauss(20)
    n_panels = max(1, n_nodes // 20)
    edges = np.linspace(0.0, t_f, n_panels + 1)
    N = basis.n_ops
    total = np.zeros(N)
    inner = np.zeros(N)  # int_0^{panel start} A
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes = a + half * (x + 1)
        A_nodes = np.array([hI(t) for t in nodes])
        for i, t1 in enumerate(nodes):
            # inner integral from panel start to t1 on a mapped rule
            sub_half = 0.5 * (t1 - a)
            sub_nodes = a + sub_half * (x + 1)
            partial = sub_half * sum(wi * np.asarray(hI(s)) for wi, s in zip(w, sub_nodes))
            total += half * w[i] * 0.5 * basis.bracket(A_nodes[i], inner + partial)
        inner = inner + half * (w @ A_nodes)
    return total


def nonresonant_scaling_probe(scenario_factory, j: int, tf_list: Sequence[float],
                              omega_v: float = None) -> float:
    """Fit the power law of ``|Omega_j(t_f)|`` against ``omega_V t_f``.

    ``scenario_factory(t_f)`` must return an object with ``basis``,
    ``error_interaction()`` (the ``t -> h_I`` callable of the uncorrected
    error) and ``omega_v``.  Returns the fitted log-log slope.

    Raises
    ------
    FitFailure
        If fewer than three points are usable or the range spans less than a
        decade.
    """
    tf_list = np.asarray(sorted(tf_list), dtype=float)
    if tf_list.size < 3 or tf_list[-1] / tf_list[0] < 10 * (1 - 1e-9):
        raise FitFailure("need at least three t_f values spanning a decade")
    xs, ys = [], []
    for t_f in tf_list:
        sc = scenario_factory(t_f)
        w_v = sc.omega_v if omega_v is None else omega_v
        stack = integrate_magnus(sc.error_interaction(), sc.basis, j, t_f)
        norm = np.linalg.norm(stack.omegas[j - 1])
        if norm > 0 and np.isfinite(norm):
            xs.append(np.log(w_v * t_f))
            ys.append(np.log(norm))
    if len(xs) < 3 or np.ptp(xs) == 0:
        raise FitFailure("degenerate data for the scaling fit")
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)
