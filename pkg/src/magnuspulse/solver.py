"""Correction equations: assembly, minimum-norm solves and the order loop.

A correction is a sum of *channels*.  Channel ``c`` contributes
``g_c(t) * s_c(t)`` to the Hamiltonian coefficients, where ``g_c`` is a
Fourier envelope with free coefficients (see :class:`FieldTemplate`) and
``s_c(t)`` is a fixed carrier vector in the operator basis.  A plain
per-operator field is the special case of a constant unit carrier.  After the
interaction-picture transformation every free parameter ``p`` gives a column

    M[:, p] = int_0^tf a(t)^T s_c(t) b_p(t) dt

with ``b_p`` the Fourier basis function.  At order ``n`` the right-hand side is
``y = -sum_{k<=n} Omega_k(t_f)`` of the Hamiltonian corrected through ``n - 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec, solve_ivp
from scipy.optimize import minimize

from .algebra import OperatorBasis
from .errors import (DivergingCorrection, IntegratorFailure, InvalidDrop, InvalidParameter,
                     NoRootFound, NoSolution, QuadratureFailure, UnsupportedOrder)
from .magnus import MAX_ORDER, integrate_magnus
from .propagation import FrameCoefficients, frame_coefficients
from .schedule import FieldTemplate, FourierField

log = logging.getLogger(__name__)

SVD_CUTOFF = 1e-10
QUAD_TOL = 1e-10
POLICIES = ("exact", "min_norm", "quadratic")


@dataclass(frozen=True, eq=False)
class Channel:
    """One tunable envelope and the operator direction it drives.

    Attributes
    ----------
    name : str
        Envelope name, e.g. ``"g_x"``.
    template : FieldTemplate
        Which Fourier coefficients are free.
    carrier : callable
        ``t -> (n_ops,)`` coefficients multiplying the envelope in the full
        Hamiltonian used for Magnus terms and verification.
    operator : str
        Label written to coefficient files.
    model_carrier : callable, optional
        Simplified carrier used only to build the correction equations.
    level : int, optional
        Block index for level-decoupled problems.
    """

    name: str
    template: FieldTemplate
    carrier: Callable[[float], np.ndarray]
    operator: str = ""
    model_carrier: Optional[Callable[[float], np.ndarray]] = None
    level: Optional[int] = None

    @property
    def n_params(self):
        return self.template.n_params

    def equation_carrier(self, t):
        return (self.model_carrier or self.carrier)(t)


def operator_channels(basis: OperatorBasis, templates: dict) -> list:
    """Per-operator Fourier fields ``w_l(t) A_l`` as channels with unit carriers."""
    chans = []
    for label, tpl in templates.items():
        e = np.zeros(basis.n_ops)
        e[basis.index(label)] = 1.0
        chans.append(Channel(name=f"w_{label}", template=tpl, carrier=lambda t, e=e: e,
                             operator=label))
    return chans


def column_map(channels: Sequence[Channel]):
    """``[(channel name, k, kind), ...]`` in parameter order."""
    return [(ch.name, k, kind) for ch in channels for (k, kind) in ch.template.columns()]


def split_params(channels: Sequence[Channel], x):
    x = np.asarray(x, dtype=float)
    out, i = [], 0
    for ch in channels:
        out.append(x[i:i + ch.n_params])
        i += ch.n_params
    if i != x.size:
        raise InvalidParameter(f"expected {i} parameters, got {x.size}")
    return out


def correction_field(channels: Sequence[Channel], x, t_f, n_ops, exact=True):
    """Callable ``t -> W(t)`` coefficient vector for parameters ``x``."""
    parts = [(ch, p) for ch, p in zip(channels, split_params(channels, x)) if np.any(p)]

    def W(t):
        out = np.zeros(n_ops)
        values = {}
        for ch, p in parts:
            if ch.template not in values:
                values[ch.template] = ch.template.basis_values(t, t_f)
            g = values[ch.template] @ p
            out += g * (ch.carrier(t) if exact else ch.equation_carrier(t))
        return out

    return W


def envelope_fields(channels, x, t_f):
    """Map channel name to the :class:`FourierField` of its envelope."""
    return {ch.name: ch.template.to_field(p, t_f)
            for ch, p in zip(channels, split_params(channels, x))}


def _quad(fun, t_f, tol, n_intervals):
    points = None
    if n_intervals and n_intervals > 1:
        points = np.linspace(0.0, t_f, n_intervals + 1)[1:-1]
    res, err, info = quad_vec(fun, 0.0, t_f, epsabs=tol, epsrel=tol, norm="max",
                              limit=20000, points=points, full_output=True)
    if not info.success:
        raise QuadratureFailure(f"adaptive quadrature did not converge (error {err:.2e})")
    return res


def assemble_M(frame: FrameCoefficients, channels: Sequence[Channel], t_f: float,
               tol: float = QUAD_TOL, n_intervals: int = None):
    """Interaction-picture response matrix and its column map.

    Returns
    -------
    M : ndarray, shape (n_ops, n_params)
    cmap : list of (channel, k, kind)
    """
    if not channels or sum(ch.n_params for ch in channels) == 0:
        raise InvalidParameter("no free correction coefficients")

    def integrand(t):
        a = frame(t)
        cols = [np.outer(ch.equation_carrier(t), ch.template.basis_values(t, t_f))
                for ch in channels if ch.n_params]
        return a.T @ np.hstack(cols)

    return _quad(integrand, t_f, tol, n_intervals), column_map(channels)


def assemble_y(order: int, stack=None, vI: Callable = None, t_f: float = None,
               tol: float = QUAD_TOL, n_intervals: int = None):
    """Right-hand side of the order-``order`` equations.

    With ``vI`` (first order only) this is ``-int v_tilde dt`` by quadrature;
    otherwise ``-sum_{k<=order} Omega_k(t_f)`` from a Magnus stack of the
    Hamiltonian corrected through ``order - 1``.
    """
    if vI is not None:
        if order != 1:
            raise InvalidParameter("quadrature right-hand side is first order only")
        return -_quad(lambda t: np.asarray(vI(t), float), t_f, tol, n_intervals)
    if stack.order < order:
        raise InvalidParameter(f"Magnus stack of order {stack.order} < {order}")
    y = -stack.total(order)
    if np.iscomplexobj(y) and np.max(np.abs(np.imag(y))) > 1e-12:
        raise AssertionError("right-hand side acquired an imaginary part")
    return np.real(y)


@dataclass(frozen=True, eq=False)
class CorrectionProblem:
    """Linear correction system restricted to ``active_rows``."""

    M: np.ndarray
    y: np.ndarray
    column_map: list
    active_rows: tuple
    row_labels: tuple = ()
    policy: str = "min_norm"
    svd_cutoff: float = SVD_CUTOFF

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise InvalidParameter(f"unknown policy {self.policy!r}")
        if self.M.shape[0] != self.y.shape[0] or self.M.shape[1] != len(self.column_map):
            raise InvalidParameter("inconsistent problem shapes")

    @property
    def n_eq(self):
        return self.M.shape[0]


def make_problem(M, y, cmap, basis: OperatorBasis, policy="min_norm", svd_cutoff=SVD_CUTOFF):
    rows = tuple(range(basis.n_ops))
    return CorrectionProblem(M=np.asarray(M, float), y=np.asarray(y, float), column_map=list(cmap),
                             active_rows=rows, row_labels=tuple(basis.labels), policy=policy,
                             svd_cutoff=svd_cutoff)


def is_droppable(op, projector, tol=1e-10):
    """True when ``P op P`` is a multiple of ``P`` (the operator acts trivially inside)."""
    P = np.asarray(projector)
    inner = P @ op @ P
    d = np.real(np.trace(P))
    scale = np.trace(inner) / d if d > 0 else 0.0
    return bool(np.max(np.abs(inner - scale * P), initial=0.0) <= tol)


def project_subspace(problem: CorrectionProblem, drop_ops: Sequence, basis: OperatorBasis = None,
                     projector=None) -> CorrectionProblem:
    """Remove the rows of operators that act trivially on the computational subspace.

    ``drop_ops`` holds labels or indices.  With ``basis`` and ``projector``
    each dropped operator is checked first.

    Raises
    ------
    InvalidDrop
        If a dropped operator acts nontrivially inside the subspace.
    """
    if not drop_ops:
        return problem
    idx = []
    for op in drop_ops:
        j = basis.index(op) if isinstance(op, str) else int(op)
        if basis is not None and projector is not None and not is_droppable(basis.ops[j], projector):
            raise InvalidDrop(f"operator {basis.labels[j]!r} acts inside the computational subspace")
        idx.append(j)
    keep = [i for i, r in enumerate(problem.active_rows) if r not in idx]
    labels = tuple(problem.row_labels[i] for i in keep) if problem.row_labels else ()
    return CorrectionProblem(M=problem.M[keep], y=problem.y[keep], column_map=problem.column_map,
                             active_rows=tuple(problem.active_rows[i] for i in keep),
                             row_labels=labels, policy=problem.policy,
                             svd_cutoff=problem.svd_cutoff)


def solve_min_norm(problem: CorrectionProblem, require_solution: bool = True):
    """Minimum-norm least-squares solution via a truncated SVD.

    Returns
    -------
    x : ndarray
    info : dict
        ``rank``, ``singular_values``, ``residual``, ``cutoff``.

    Raises
    ------
    NoSolution
        If the residual exceeds ``1e-8 (1 + |y|)`` and ``require_solution``.
    """
    M, y = problem.M, problem.y
    if M.size == 0:
        x = np.zeros(M.shape[1])
        return x, {"rank": 0, "singular_values": np.array([]), "residual": float(np.linalg.norm(y)),
                   "cutoff": 0.0}
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = problem.svd_cutoff * (s[0] if s.size else 0.0)
    keep = s > cutoff
    x = Vt[keep].T @ ((U[:, keep].T @ y) / s[keep])
    resid = float(np.linalg.norm(M @ x - y))
    info = {"rank": int(keep.sum()), "singular_values": s, "residual": resid, "cutoff": cutoff}
    if require_solution and resid > 1e-8 * (1 + np.linalg.norm(y)):
        raise NoSolution(f"correction system has no solution (residual {resid:.2e})")
    return x, info


@dataclass(eq=False)
class CorrectionResult:
    """Per-order correction coefficients and solver diagnostics."""

    scenario_id: str
    t_f: float
    channels: list
    per_order: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def order(self):
        return len(self.per_order)

    @property
    def orders(self):
        """Magnus order reached after each stored step."""
        return [int(d.get("order", i + 1)) for i, d in enumerate(self.diagnostics)]

    @property
    def column_map(self):
        return column_map(self.channels)

    def total(self, upto=None):
        upto = self.order if upto is None else upto
        n = sum(ch.n_params for ch in self.channels)
        return np.sum(self.per_order[:upto], axis=0) if upto else np.zeros(n)

    def fields(self, upto=None):
        return envelope_fields(self.channels, self.total(upto), self.t_f)

    def order_fields(self, k):
        return envelope_fields(self.channels, self.per_order[k - 1], self.t_f)

    def correction(self, n_ops, upto=None):
        return correction_field(self.channels, self.total(upto), self.t_f, n_ops)


def _interaction_hamiltonian(scenario, frame, x):
    basis = scenario.basis
    W = correction_field(scenario.channels, x, scenario.t_f, basis.n_ops)
    v = scenario.v

    def hI(t):
        return frame(t).T @ (v(t) + W(t))

    return hI


def correct_to_order(scenario, n: int, frame: FrameCoefficients = None, *,
                     divergence_factor: float = 10.0, divergence_floor: float = None,
                     quad_tol: float = QUAD_TOL, magnus_tol: float = 1e-11,
                     seed: int = 0) -> CorrectionResult:
    """Compute corrections ``W^(1) .. W^(n)`` order by order.

    ``scenario`` supplies ``basis``, ``t_f``, ``h0``, ``v``, ``channels``,
    ``drop_rows``, ``projector``, ``policy`` and optionally ``n_intervals``.

    Raises
    ------
    DivergingCorrection
        If an order's coefficient norm grows more than ``divergence_factor``
        times over the previous order while also exceeding
        ``divergence_floor``.  The floor defaults to a tenth of the scenario's
        ``control_scale`` (zero if absent), so that growth from an order whose
        coefficients happen to nearly vanish is only flagged, not fatal.
    """
    if not 1 <= n <= MAX_ORDER:
        raise UnsupportedOrder(f"correction order must be between 1 and {MAX_ORDER}")
    if scenario.policy == "quadratic":
        return correct_quadratic(scenario, n, frame=frame, quad_tol=quad_tol,
                                 magnus_tol=magnus_tol, seed=seed)
    basis, t_f = scenario.basis, scenario.t_f
    if frame is None:
        frame = frame_coefficients(scenario.h0, basis, t_f)
    n_int = getattr(scenario, "n_intervals", None)
    M, cmap = assemble_M(frame, scenario.channels, t_f, tol=quad_tol, n_intervals=n_int)
    result = CorrectionResult(scenario_id=scenario.id, t_f=t_f, channels=list(scenario.channels))
    x_total = np.zeros(M.shape[1])
    prev_norm = None
    if divergence_floor is None:
        divergence_floor = 0.1 * float(getattr(scenario, "control_scale", 0.0) or 0.0)
    for k in range(1, n + 1):
        hI = _interaction_hamiltonian(scenario, frame, x_total)
        stack = integrate_magnus(hI, basis, k, t_f, tol=magnus_tol)
        y = assemble_y(k, stack)
        problem = make_problem(M, y, cmap, basis, policy=scenario.policy)
        problem = project_subspace(problem, scenario.drop_rows, basis, scenario.projector)
        x, info = solve_min_norm(problem)
        norm = float(np.linalg.norm(x))
        info.update(order=k, norm=norm, y_norm=float(np.linalg.norm(problem.y)),
                    magnus_residual=float(np.linalg.norm(stack.total(k)[list(problem.active_rows)])))
        growth = norm / prev_norm if prev_norm else float("nan")
        flagged = (prev_norm is not None and norm > divergence_factor * prev_norm
                   and norm > 1e-12 * (1 + np.linalg.norm(x_total)))
        info.update(growth=growth, divergence_flag=bool(flagged))
        if flagged and norm > divergence_floor:
            raise DivergingCorrection(
                f"order {k} coefficients grew from {prev_norm:.3e} to {norm:.3e}",
                order=k, partial=result)
        prev_norm = norm
        x_total = x_total + x
        result.per_order.append(x)
        result.residuals.append(info["residual"])
        result.diagnostics.append(info)
        log.debug("order %d: |x| = %.3e, residual %.2e", k, norm, info["residual"])
    return result


# --- level-decoupled quadratic policy -----------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """``R(x) = b + L x + Q(x, x)`` for one decoupled block.

    ``Q`` has shape ``(n_eq, P, P)`` with ``Q(x, x)_i = x @ Q[i] @ x``.
    """

    b: np.ndarray
    L: np.ndarray
    Q: np.ndarray
    level: Optional[int] = None

    def residual(self, x):
        return self.b + self.L @ x + np.einsum("ipq,p,q->i", self.Q, x, x)

    def jacobian(self, x):
        return self.L + np.einsum("ipq,q->ip", self.Q, x) + np.einsum("ipq,p->iq", self.Q, x)


def _gauss_newton(prob: QuadraticProblem, x0, tol, max_iter=200):
    x = np.array(x0, dtype=float)
    lam = 0.0
    r = prob.residual(x)
    for _ in range(max_iter):
        rn = np.linalg.norm(r)
        if rn <= tol:
            break
        J = prob.jacobian(x)
        # minimum-norm step; damping kicks in only after a failed step
        step = -np.linalg.lstsq(J, r, rcond=None)[0] if lam == 0.0 else \
            -J.T @ np.linalg.solve(J @ J.T + lam * np.eye(J.shape[0]), r)
        x_new = x + step
        r_new = prob.residual(x_new)
        if np.linalg.norm(r_new) < rn:
            x, r = x_new, r_new
            lam = 0.0 if lam == 0.0 else lam / 10
        else:
            lam = max(lam * 10, 1e-6 * np.linalg.norm(J) ** 2)
            if lam > 1e12:
                break
    return x, float(np.linalg.norm(r))


def _polish_min_norm(prob: QuadraticProblem, x0, tol):
    """Move along the root set towards smaller norm, then re-converge."""
    cons = {"type": "eq", "fun": prob.residual, "jac": prob.jacobian}
    try:
        res = minimize(lambda x: x @ x, x0, jac=lambda x: 2 * x, constraints=[cons],
                       method="SLSQP", options={"maxiter": 300, "ftol": 1e-16})
        x1 = res.x
    except (ValueError, np.linalg.LinAlgError):
        x1 = x0
    x2, rn = _gauss_newton(prob, x1, tol)
    if rn <= tol and np.linalg.norm(x2) <= np.linalg.norm(x0):
        return x2, rn
    return x0, float(np.linalg.norm(prob.residual(x0)))


def solve_quadratic_residual(prob: QuadraticProblem, n_starts: int = 32, seed: int = 0,
                             tol: float = 1e-9, scale: float = None, n_polish: int = 3):
    """Smallest-norm root of ``R(x) = 0`` by multistart damped Gauss-Newton.

    The first starts are ``x = 0`` and the linearized minimum-norm solution;
    the remaining ones are Gaussian draws of width ``scale`` (default: that
    solution's norm spread over the parameters) from
    ``numpy.random.default_rng(seed)``.  The ``n_polish`` smallest converged
    roots are then pushed towards minimum norm along the root set.  Ties are
    broken by start order.

    Raises
    ------
    NoRootFound
        If no start reaches ``|R| <= tol``.
    """
    P = prob.L.shape[1]
    if np.linalg.norm(prob.b) <= tol:
        return np.zeros(P), {"n_roots": 1, "residual": float(np.linalg.norm(prob.b)), "starts": 0,
                             "norm": 0.0}
    x_lin = -np.linalg.lstsq(prob.L, prob.b, rcond=None)[0]
    if scale is None:
        scale = max(np.linalg.norm(x_lin), 1e-12) / np.sqrt(P)
    rng = np.random.default_rng(seed)
    starts = [np.zeros(P), x_lin] + [rng.normal(scale=scale, size=P) for _ in range(n_starts - 2)]
    roots, best_res = [], np.inf
    for x0 in starts:
        x, rn = _gauss_newton(prob, x0, tol)
        best_res = min(best_res, rn)
        if rn <= tol:
            roots.append(x)
    if not roots:
        raise NoRootFound(f"no root found for level {prob.level} (best residual {best_res:.2e})",
                          level=prob.level, best_residual=best_res)
    order = sorted(range(len(roots)), key=lambda i: (np.linalg.norm(roots[i]), i))
    best, best_norm = None, np.inf
    for i in order[:n_polish]:
        x, _ = _polish_min_norm(prob, roots[i], tol)
        nx = np.linalg.norm(x)
        if nx < best_norm * (1 - 1e-9):
            best, best_norm = x, nx
    return best, {"n_roots": len(roots), "residual": float(np.linalg.norm(prob.residual(best))),
                  "starts": len(starts), "norm": float(best_norm)}


def _block_structure(basis: OperatorBasis, rows):
    rows = np.asarray(rows)
    return basis.structure[np.ix_(rows, rows, rows)]


def assemble_quadratic(frame, hI, basis: OperatorBasis, level_channels: dict, level_rows: dict,
                       b: np.ndarray, t_f: float, tol: float = 1e-10):
    """Build one :class:`QuadraticProblem` per decoupled level.

    Integrates, jointly for all levels, the first Magnus term of ``hI``
    restricted to each block, the running integrals ``S_p(t)`` of the
    interaction-picture carriers and the bracket integrals entering the
    second Magnus term.

    ``level_channels[n]`` lists the channels acting on block ``n`` and
    ``level_rows[n]`` the operator indices of that block.
    """
    levels = sorted(level_channels)
    info = []
    offset = 0
    for n in levels:
        rows = np.asarray(level_rows[n])
        chans = level_channels[n]
        P = sum(ch.n_params for ch in chans)
        r = rows.size
        sizes = dict(om=r, S=P * r, IL=P * r, IQ=P * P * r)
        info.append((n, rows, chans, P, r, offset, _block_structure(basis, rows)))
        offset += sum(sizes.values())

    def carriers(t, chans, rows, a, values):
        cols = []
        for ch in chans:
            if ch.template not in values:
                values[ch.template] = ch.template.basis_values(t, t_f)
            cols.append(np.outer(a[:, rows].T @ ch.equation_carrier(t), values[ch.template]))
        return np.hstack(cols).T  # (P, r)

    def rhs(t, y):
        a = frame(t)
        h = hI(t)
        out = np.empty_like(y)
        values = {}
        for n, rows, chans, P, r, off, f in info:
            om = y[off:off + r]
            S = y[off + r:off + r + P * r].reshape(P, r)
            s = carriers(t, chans, rows, a, values)
            hb = h[rows]
            i = off
            out[i:i + r] = hb
            i += r
            out[i:i + P * r] = s.ravel()
            i += P * r
            IL = np.einsum("abc,a,pb->pc", f, om, s) + np.einsum("abc,pa,b->pc", f, S, hb)
            out[i:i + P * r] = IL.ravel()
            i += P * r
            out[i:i + P * P * r] = np.einsum("abc,pa,qb->pqc", f, S, s).ravel()
        return out

    sol = solve_ivp(rhs, (0.0, t_f), np.zeros(offset), method="DOP853", rtol=tol, atol=tol * 1e-3)
    if sol.status != 0:
        raise IntegratorFailure(sol.message)
    yT = sol.y[:, -1]
    problems = {}
    for n, rows, chans, P, r, off, f in info:
        i = off + r
        S = yT[i:i + P * r].reshape(P, r)
        i += P * r
        IL = yT[i:i + P * r].reshape(P, r)
        i += P * r
        IQ = yT[i:i + P * P * r].reshape(P, P, r)
        L = (S - 0.5 * IL).T
        Q = np.moveaxis(-0.5 * IQ, 2, 0)
        problems[n] = QuadraticProblem(b=b[rows], L=L, Q=Q, level=n)
    return problems


def correct_quadratic(scenario, n: int, frame=None, *, quad_tol=1e-10, magnus_tol=1e-11,
                      seed=0, n_starts=32) -> CorrectionResult:
    """Level-decoupled corrections that cancel sums of Magnus terms.

    Step ``s`` cancels ``sum_{j <= min(2 s, n)} Omega_j`` of the current
    Hamiltonian, using first and second Magnus terms of the new correction
    only.  ``ceil(n / 2)`` steps are taken.  Each level gets its own RNG
    stream derived from ``seed``.
    """
    basis, t_f = scenario.basis, scenario.t_f
    if frame is None:
        frame = frame_coefficients(scenario.h0, basis, t_f)
    level_channels, level_rows = {}, {}
    for ch in scenario.channels:
        level_channels.setdefault(ch.level, []).append(ch)
    for lev in level_channels:
        level_rows[lev] = scenario.level_rows(lev)
    seeds = np.random.SeedSequence(seed).spawn(len(level_channels))
    level_seed = {lev: int(s.generate_state(1)[0]) for lev, s in zip(sorted(level_channels), seeds)}

    result = CorrectionResult(scenario_id=scenario.id, t_f=t_f, channels=list(scenario.channels))
    x_total = np.zeros(sum(ch.n_params for ch in scenario.channels))
    n_steps = (n + 1) // 2
    for step in range(1, n_steps + 1):
        m = min(2 * step, n, MAX_ORDER)
        hI = _interaction_hamiltonian(scenario, frame, x_total)
        stack = integrate_magnus(hI, basis, m, t_f, tol=magnus_tol)
        b = stack.total(m)
        problems = assemble_quadratic(frame, hI, basis, level_channels, level_rows, b, t_f,
                                      tol=quad_tol)
        x_step = np.zeros_like(x_total)
        per_level = {}
        pos = {}
        i = 0
        for ch in scenario.channels:
            pos.setdefault(ch.level, []).extend(range(i, i + ch.n_params))
            i += ch.n_params
        for lev in sorted(problems):
            x_lev, info = solve_quadratic_residual(problems[lev], n_starts=n_starts,
                                                   seed=level_seed[lev])
            x_step[pos[lev]] = x_lev
            per_level[lev] = info
        x_total = x_total + x_step
        result.per_order.append(x_step)
        res = max(v["residual"] for v in per_level.values())
        result.residuals.append(res)
        # the decoupling is approximate: measure the coupled sum directly
        hI_new = _interaction_hamiltonian(scenario, frame, x_total)
        coupled = integrate_magnus(hI_new, basis, 2, t_f, tol=magnus_tol).total(2)
        rows = np.concatenate([level_rows[lev] for lev in sorted(level_rows)])
        result.diagnostics.append({"order": m, "step": step, "levels": per_level,
                                   "magnus_target": m, "norm": float(np.linalg.norm(x_step)),
                                   "coupled_omega12": float(np.linalg.norm(coupled[rows])),
                                   "residual": res})
    return result
