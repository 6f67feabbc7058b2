"""Ideal propagators, interaction-picture frame coefficients and the oracle.

The frame coefficients ``a[j, l](t)`` are defined by
``U0(t)^dag A_j U0(t) = sum_l a[j, l](t) A_l``.  They obey the adjoint
equation ``da/dt = -ad(h(t))^T a`` in the N_op-dimensional coefficient space,
which stays exact for su(1,1) even though its Hilbert space is infinite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .algebra import OperatorBasis, decompose
from .errors import ClosureViolation, IntegratorFailure

ORACLE_RTOL = 1e-11
ORACLE_ATOL = 1e-13
FRAME_RTOL = 1e-11
UNITARITY_TOL = 1e-9


def _solve(rhs, t_f, y0, rtol, atol, dense=True, t_eval=None):
    sol = solve_ivp(rhs, (0.0, t_f), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=dense, t_eval=t_eval)
    if sol.status != 0:
        raise IntegratorFailure(sol.message)
    return sol


@dataclass(frozen=True, eq=False)
class PropagatorTrace:
    """Time-ordered propagator ``U(t)`` with dense interpolation."""

    dim: int
    t_f: float
    final: np.ndarray
    _sol: object = None

    def __call__(self, t):
        if self._sol is None:
            return self.final.copy()
        y = self._sol(t)
        if np.ndim(t) == 0:
            return y.reshape(self.dim, self.dim)
        return np.moveaxis(y, -1, 0).reshape(-1, self.dim, self.dim)

    def unitarity_defect(self, n_samples=20):
        ts = np.linspace(0.0, self.t_f, n_samples)
        worst = 0.0
        for t in ts:
            U = self(t)
            worst = max(worst, float(np.max(np.abs(U.conj().T @ U - np.eye(self.dim)))))
        return worst


def propagate(hamiltonian: Callable[[float], np.ndarray], dim: int, t_f: float,
              rtol=ORACLE_RTOL, atol=ORACLE_ATOL, dense=True, check=True) -> PropagatorTrace:
    """Integrate ``dU/dt = -i H(t) U`` from ``U(0) = 1``."""
    if t_f == 0:
        return PropagatorTrace(dim=dim, t_f=0.0, final=np.eye(dim, dtype=complex))

    def rhs(t, y):
        return (-1j * (hamiltonian(t) @ y.reshape(dim, dim))).ravel()

    sol = _solve(rhs, t_f, np.eye(dim, dtype=complex).ravel(), rtol, atol, dense=dense)
    final = sol.y[:, -1].reshape(dim, dim)
    trace = PropagatorTrace(dim=dim, t_f=t_f, final=final, _sol=sol.sol if dense else None)
    if check:
        defect = np.max(np.abs(final.conj().T @ final - np.eye(dim)))
        if defect > UNITARITY_TOL:
            raise IntegratorFailure(f"unitarity lost: defect {defect:.2e}")
    return trace


def propagate_state(hamiltonian, psi0, t_f, rtol=ORACLE_RTOL, atol=ORACLE_ATOL):
    """Final state of ``i d psi/dt = H(t) psi``."""
    psi0 = np.asarray(psi0, dtype=complex)
    if t_f == 0:
        return psi0.copy()
    sol = _solve(lambda t, y: -1j * (hamiltonian(t) @ y), t_f, psi0, rtol, atol, dense=False)
    return sol.y[:, -1]


def coefficient_hamiltonian(coeffs: Callable[[float], np.ndarray], ops):
    """Turn a coefficient function into a matrix-valued Hamiltonian."""
    ops = np.asarray(ops)
    return lambda t: np.tensordot(coeffs(t), ops, axes=(0, 0))


def ideal_propagator(h, basis: OperatorBasis, t_f, tol=ORACLE_RTOL) -> PropagatorTrace:
    """Propagator of ``H0(t) = sum_j h_j(t) A_j``."""
    return propagate(coefficient_hamiltonian(h, basis.ops), basis.dim, t_f,
                     rtol=tol, atol=tol * 1e-2)


def full_propagator_oracle(h_total, basis_or_matrices, t_f, tol=ORACLE_RTOL) -> PropagatorTrace:
    """Ground-truth propagator for a complete Hamiltonian.

    ``basis_or_matrices`` is an :class:`OperatorBasis`, a sequence of matrices
    matching the coefficient vector returned by ``h_total``, or ``None`` when
    ``h_total`` already returns matrices.
    """
    if basis_or_matrices is None:
        H = h_total
        dim = np.asarray(h_total(0.0)).shape[0]
    else:
        ops = basis_or_matrices.ops if isinstance(basis_or_matrices, OperatorBasis) \
            else np.asarray(basis_or_matrices)
        H = coefficient_hamiltonian(h_total, ops)
        dim = ops.shape[1]
    return propagate(H, dim, t_f, rtol=tol, atol=tol * 1e-2)


@dataclass(frozen=True, eq=False)
class FrameCoefficients:
    """Dense-output interpolant of ``a(t)``; identity when ``_sol`` is None."""

    n_ops: int
    t_f: float
    _sol: object = None

    @classmethod
    def identity(cls, n_ops, t_f):
        return cls(n_ops=n_ops, t_f=t_f)

    def __call__(self, t):
        N = self.n_ops
        if self._sol is None:
            eye = np.eye(N)
            return eye if np.ndim(t) == 0 else np.broadcast_to(eye, (np.size(t), N, N)).copy()
        y = self._sol(t)
        if np.ndim(t) == 0:
            return y.reshape(N, N)
        return np.moveaxis(y, -1, 0).reshape(-1, N, N)


def frame_coefficients(h, basis: OperatorBasis, t_f, tol=FRAME_RTOL, validate=True,
                       n_checks=10, seed=0) -> FrameCoefficients:
    """Integrate the adjoint equation for ``a(t)``.

    With ``validate`` the rows are compared against
    ``decompose(U0^dag A_j U0)`` at ``n_checks`` random times.

    Raises
    ------
    ClosureViolation
        If the coefficient-space frame and direct conjugation disagree.
    """
    N = basis.n_ops

    def rhs(t, y):
        return (-basis.ad(h(t)).T @ y.reshape(N, N)).ravel()

    sol = _solve(rhs, t_f, np.eye(N).ravel(), tol, tol * 1e-2)
    frame = FrameCoefficients(n_ops=N, t_f=t_f, _sol=sol.sol)
    if validate:
        check_frame(frame, h, basis, t_f, n_checks=n_checks, seed=seed)
    return frame


def check_frame(frame, h, basis, t_f, n_checks=10, seed=0, atol=1e-8):
    """Compare frame rows to direct conjugation; returns the worst deviation."""
    rng = np.random.default_rng(seed)
    times = np.sort(rng.uniform(0.0, t_f, n_checks))
    if basis.exact_matrices:
        U0 = ideal_propagator(h, basis, t_f)
        worst = 0.0
        for t in times:
            U = U0(t)
            a = frame(t)
            for j in range(basis.n_ops):
                row = decompose(U.conj().T @ basis.ops[j] @ U, basis)
                worst = max(worst, float(np.max(np.abs(row - a[j]))))
        tol = atol
    else:
        # truncated matrices: rebuild a much larger representation and compare
        # the low-lying block, which the truncation does not reach
        if basis.matrix_factory is None:
            return 0.0
        big = np.asarray(basis.matrix_factory(max(3 * basis.dim, 120)))
        D, m = big.shape[1], 3
        Hb = coefficient_hamiltonian(h, big)

        def rhs(t, y):
            return (-1j * (Hb(t) @ y.reshape(D, m))).ravel()

        cols = _solve(rhs, t_f, np.eye(D, m, dtype=complex).ravel(), 1e-10, 1e-12,
                      dense=False, t_eval=times).y
        worst = 0.0
        for i, t in enumerate(times):
            Y = cols[:, i].reshape(D, m)
            a = frame(t)
            for j in range(basis.n_ops):
                lhs = Y.conj().T @ big[j] @ Y
                rhs_ = np.tensordot(a[j], big, axes=(0, 0))[:m, :m]
                worst = max(worst, float(np.max(np.abs(lhs - rhs_))))
        tol = 1e-6
    if worst > tol:
        raise ClosureViolation(f"frame coefficients disagree with conjugation ({worst:.2e})")
    return worst


def to_interaction_picture(fields: Callable[[float], np.ndarray],
                           frame: FrameCoefficients) -> Callable[[float], np.ndarray]:
    """``v_tilde_j(t) = sum_l a[l, j](t) v_l(t)``."""

    def transformed(t):
        return frame(t).T @ fields(t)

    return transformed
