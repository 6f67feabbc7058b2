"""Finite operator bases closed under commutation.

A basis is a list of Hermitian matrices ``A_j`` together with real structure
constants ``f`` defined by ``[A_a, A_b] = i sum_c f[a, b, c] A_c``.  Every
anti-Hermitian element of the Lie algebra is stored as a real vector ``x``
meaning ``sum_j x_j (-i A_j)``; with that convention the bracket is again a
real vector, ``[X, Y]_c = sum_ab f[a, b, c] x_a y_b``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, NotInSpan, SingularGram

HERMITIAN_TOL = 1e-12
CLOSURE_TOL = 1e-10
SPAN_TOL = 1e-8
GRAM_COND_MAX = 1e12


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered Hermitian operator basis with structure constants.

    Attributes
    ----------
    ops : ndarray, shape (n_ops, dim, dim)
        Matrix representation used for state simulation.
    labels : tuple of str
    structure : ndarray, shape (n_ops, n_ops, n_ops)
        Real structure constants.  For ``su11_mu`` these are the exact
        su(1,1) relations and the matrices are only a truncated image.
    gram : ndarray, shape (n_ops, n_ops)
        Hilbert-Schmidt products ``Tr(A_a A_b)``.
    name : str
    """

    ops: np.ndarray
    labels: tuple
    structure: np.ndarray
    gram: np.ndarray
    name: str = "custom"
    exact_matrices: bool = True
    # builds a larger truncated representation when exact_matrices is False
    matrix_factory: object = field(default=None, repr=False)
    _sparse: tuple = field(init=False, repr=False)

    def __post_init__(self):
        idx = np.nonzero(np.abs(self.structure) > 0)
        vals = self.structure[idx]
        object.__setattr__(self, "_sparse", (idx[0], idx[1], idx[2], vals))

    @property
    def n_ops(self) -> int:
        return self.ops.shape[0]

    @property
    def dim(self) -> int:
        return self.ops.shape[1]

    def bracket(self, x, y):
        """Coefficient vector of ``[X, Y]`` in the ``-i A_j`` convention."""
        a, b, c, v = self._sparse
        return np.bincount(c, weights=v * x[a] * y[b], minlength=self.n_ops)

    def ad(self, x):
        """Matrix ``K`` with ``K @ y == bracket(x, y)``."""
        a, b, c, v = self._sparse
        K = np.zeros((self.n_ops, self.n_ops))
        np.add.at(K, (c, b), v * x[a])
        return K

    def reconstruct(self, coeffs):
        """Return ``sum_j coeffs_j A_j`` as a dense matrix."""
        return np.tensordot(np.asarray(coeffs, dtype=float), self.ops, axes=(0, 0))

    def to_generator(self, coeffs):
        """Return the anti-Hermitian matrix ``sum_j coeffs_j (-i A_j)``."""
        return -1j * self.reconstruct(coeffs)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _gram(ops):
    n = len(ops)
    G = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            G[a, b] = np.real(np.trace(ops[a] @ ops[b]))
    return G


def _project(op, ops, gram):
    rhs = np.array([np.trace(A @ op) for A in ops])
    return np.linalg.solve(gram, rhs)


def decompose(op, basis: OperatorBasis, drop_identity: bool = False):
    """Real coefficients ``x`` with ``op = sum_j x_j A_j``.

    Solves ``gram @ x = b`` with ``b_a = Tr(A_a op)`` so non-orthogonal bases
    are handled.  With ``drop_identity`` the trace part of ``op`` is removed
    first, which is how Hamiltonians that differ only by a global energy
    offset are mapped onto traceless algebras.

    Raises
    ------
    SingularGram
        If the Gram matrix is too badly conditioned.
    NotInSpan
        If the reconstruction residual exceeds ``1e-8``.
    """
    op = np.asarray(op, dtype=complex)
    if drop_identity:
        op = op - np.trace(op) / op.shape[0] * np.eye(op.shape[0])
    if np.linalg.cond(basis.gram) > GRAM_COND_MAX:
        raise SingularGram(f"gram condition number exceeds {GRAM_COND_MAX:g}")
    x = _project(op, basis.ops, basis.gram)
    if np.max(np.abs(x.imag), initial=0.0) > SPAN_TOL:
        raise NotInSpan("operator is not Hermitian in the real span of the basis")
    x = x.real
    resid = np.max(np.abs(basis.reconstruct(x) - op), initial=0.0)
    if resid > SPAN_TOL:
        raise NotInSpan(f"reconstruction residual {resid:.3e} exceeds {SPAN_TOL:g}")
    return x


def structure_constants(ops, gram=None):
    """Compute ``f`` from matrices by decomposing every commutator."""
    n = len(ops)
    gram = _gram(ops) if gram is None else gram
    f = np.zeros((n, n, n))
    for a, b in itertools.product(range(n), repeat=2):
        if a == b:
            continue
        C = ops[a] @ ops[b] - ops[b] @ ops[a]
        f[a, b] = np.real(_project(-1j * C, ops, gram))
    return f


def closure_defect(ops, structure):
    """Largest elementwise deviation of ``[A_a, A_b] - i sum_c f_abc A_c``."""
    worst = 0.0
    n = len(ops)
    for a, b in itertools.product(range(n), repeat=2):
        C = ops[a] @ ops[b] - ops[b] @ ops[a]
        R = 1j * np.tensordot(structure[a, b], ops, axes=(0, 0))
        worst = max(worst, float(np.max(np.abs(C - R))))
    return worst


def make_basis(ops, labels, name="custom", structure=None, check_closure=True,
               matrix_factory=None):
    """Validate matrices and assemble an :class:`OperatorBasis`."""
    ops = np.asarray(ops, dtype=complex)
    for A, lab in zip(ops, labels):
        if np.max(np.abs(A - A.conj().T)) > HERMITIAN_TOL:
            raise InvalidParameter(f"operator {lab!r} is not Hermitian")
    gram = _gram(ops)
    if np.linalg.cond(gram) > GRAM_COND_MAX:
        raise SingularGram("basis operators are linearly dependent")
    exact = structure is None
    if structure is None:
        structure = structure_constants(ops, gram)
    if check_closure and exact:
        defect = closure_defect(ops, structure)
        if defect > CLOSURE_TOL:
            raise NotInSpan(f"basis does not close under commutation (defect {defect:.2e})")
    return OperatorBasis(ops=ops, labels=tuple(labels), structure=np.asarray(structure, float),
                         gram=gram, name=name, exact_matrices=exact,
                         matrix_factory=matrix_factory)


# --- matrix constructors -----------------------------------------------------

def ketbra(i, j, dim):
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def pauli_matrices():
    """Pauli matrices with |0> the ground state: sz = |1><1| - |0><0|."""
    sx = ketbra(0, 1, 2) + ketbra(1, 0, 2)
    sy = 1j * ketbra(0, 1, 2) - 1j * ketbra(1, 0, 2)
    sz = ketbra(1, 1, 2) - ketbra(0, 0, 2)
    return sx, sy, sz


def annihilation(cut):
    return np.diag(np.sqrt(np.arange(1, cut)), k=1).astype(complex)


def su11_matrices(cut):
    """Fock-truncated ``mu_x, mu_y, mu_z`` built from quadratic forms of ``a``."""
    a = annihilation(cut)
    ad = a.conj().T
    mx = 0.5 * (a @ a + ad @ ad)
    my = -0.5j * (a @ a - ad @ ad)
    mz = 0.5 * (ad @ a + a @ ad)
    return mx, my, mz


def su11_structure():
    """Exact su(1,1) constants for ``mu_x, mu_y, mu_z``.

    [mx, my] = 2i mz, [mx, mz] = 2i my, [mz, my] = 2i mx.
    """
    f = np.zeros((3, 3, 3))
    x, y, z = 0, 1, 2
    f[x, y, z], f[y, x, z] = 2.0, -2.0
    f[x, z, y], f[z, x, y] = 2.0, -2.0
    f[z, y, x], f[y, z, x] = 2.0, -2.0
    return f


def transmon_matrices():
    """Three-level operators: Pauli pair, 1-2 and 0-2 transition operators, lambda_8."""
    k = lambda i, j: ketbra(i, j, 3)
    sx = k(0, 1) + k(1, 0)
    sy = 1j * k(0, 1) - 1j * k(1, 0)
    sz = k(1, 1) - k(0, 0)
    nx12 = k(1, 2) + k(2, 1)
    ny12 = 1j * k(2, 1) - 1j * k(1, 2)
    nx02 = k(0, 2) + k(2, 0)
    ny02 = 1j * k(2, 0) - 1j * k(0, 2)
    l8 = (k(0, 0) + k(1, 1) - 2 * k(2, 2)) / np.sqrt(3)
    return [sx, sy, sz, nx12, ny12, nx02, ny02, l8]


GELLMANN_LABELS = ("sx", "sy", "sz", "nx12", "ny12", "nx02", "ny02", "l8")


def build_basis(kind: str, fock_cut: int = 40, n_levels: int = 2) -> OperatorBasis:
    """Construct one of the built-in bases.

    Parameters
    ----------
    kind : {"pauli_su2", "su11_mu", "gellmann3", "qubit_fock"}
    fock_cut : int
        Fock truncation for ``su11_mu`` (at least 4).
    n_levels : int
        Number of cavity levels for ``qubit_fock`` (at least 2).
    """
    if kind == "pauli_su2":
        return make_basis(pauli_matrices(), ("sx", "sy", "sz"), name="pauli_su2")
    if kind == "su11_mu":
        if fock_cut < 4:
            raise InvalidParameter("su11_mu needs fock_cut >= 4")
        return make_basis(su11_matrices(fock_cut), ("mx", "my", "mz"),
                          name=f"su11_mu({fock_cut})", structure=su11_structure(),
                          matrix_factory=su11_matrices)
    if kind == "gellmann3":
        return make_basis(transmon_matrices(), GELLMANN_LABELS, name="gellmann3")
    if kind == "qubit_fock":
        if n_levels < 2:
            raise InvalidParameter("qubit_fock needs n_levels >= 2")
        return qubit_fock_basis(n_levels)
    raise InvalidParameter(f"unknown basis kind {kind!r}")


def qubit_fock_basis(n_levels: int) -> OperatorBasis:
    """Operators ``sigma_a (x) |n><n|``, ordered level-major (index 3n + a).

    The structure constants are block diagonal with one su(2) copy per level,
    so they are filled in directly instead of decomposing 9 N^2 commutators.
    """
    paulis = pauli_matrices()
    ops, labels = [], []
    for n in range(n_levels):
        proj = ketbra(n, n, n_levels)
        for p, name in zip(paulis, "xyz"):
            ops.append(np.kron(p, proj))
            labels.append(f"s{name}{n}")
    N = 3 * n_levels
    f = np.zeros((N, N, N))
    eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (2, 1, 0): -1, (0, 2, 1): -1}
    for n in range(n_levels):
        for (a, b, c), s in eps.items():
            f[3 * n + a, 3 * n + b, 3 * n + c] = 2.0 * s
    basis = OperatorBasis(ops=np.asarray(ops), labels=tuple(labels), structure=f,
                          gram=_gram(ops), name=f"qubit_fock({n_levels})")
    return basis
