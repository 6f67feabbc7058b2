import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magnuspulse.algebra import (annihilation, build_basis, closure_defect, decompose, make_basis,
                                 pauli_matrices, structure_constants, su11_matrices)
from magnuspulse.errors import InvalidParameter, NotInSpan, SingularGram

BASES = ["pauli_su2", "gellmann3", "su11_mu", "qubit_fock"]


def standard_gellmann():
    l = np.zeros((8, 3, 3), dtype=complex)
    l[0][0, 1] = l[0][1, 0] = 1
    l[1][0, 1], l[1][1, 0] = -1j, 1j
    l[2][0, 0], l[2][1, 1] = 1, -1
    l[3][0, 2] = l[3][2, 0] = 1
    l[4][0, 2], l[4][2, 0] = -1j, 1j
    l[5][1, 2] = l[5][2, 1] = 1
    l[6][1, 2], l[6][2, 1] = -1j, 1j
    l[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return l


def test_pauli_commutator_decomposes_to_sz(pauli):
    sx, sy, sz = pauli_matrices()
    x = decompose((sx @ sy - sy @ sx) / 2j, pauli)
    assert np.allclose(x, [0, 0, 1], atol=1e-14)


def test_pauli_structure_constant(pauli):
    # [sx, sy] = 2i sz
    assert pauli.structure[0, 1, 2] == pytest.approx(2.0)
    assert pauli.structure[1, 0, 2] == pytest.approx(-2.0)


def test_gellmann_f147():
    # with [A_a, A_b] = i f_abc A_c and [l_a, l_b] = 2i f^abc l_c the
    # tabulated constant f^147 = 1/2 shows up as 1
    f = structure_constants(standard_gellmann())
    assert f[0, 3, 6] == pytest.approx(1.0, abs=1e-13)
    assert f[0, 1, 2] == pytest.approx(2.0, abs=1e-13)
    assert f[3, 4, 7] == pytest.approx(np.sqrt(3), abs=1e-13)


def test_transmon_basis_spans_standard_gellmann(gellmann):
    for lam in standard_gellmann():
        x = decompose(lam, gellmann)
        assert np.allclose(gellmann.reconstruct(x), lam, atol=1e-12)


def test_su11_truncation_corner():
    cut = 30
    b = build_basis("su11_mu", fock_cut=cut)
    mx, my, mz = su11_matrices(cut)
    C = mx @ my - my @ mx - 2j * mz
    bad = np.argwhere(np.abs(C) > 1e-12)
    assert bad.size > 0
    assert bad.min() >= cut - 2
    # abstract constants reproduce the matrices on a much larger cut, away from the corner
    big = np.asarray(su11_matrices(3 * cut))
    for a, c in itertools.product(range(3), repeat=2):
        lhs = big[a] @ big[c] - big[c] @ big[a]
        rhs = 1j * np.tensordot(b.structure[a, c], big, axes=(0, 0))
        assert np.max(np.abs(lhs - rhs)[:cut, :cut]) < 1e-10


@pytest.mark.parametrize("kind", ["pauli_su2", "gellmann3", "qubit_fock"])
def test_closure(kind):
    b = build_basis(kind, n_levels=3)
    assert closure_defect(b.ops, b.structure) <= 1e-10


@pytest.mark.parametrize("kind", BASES)
def test_antisymmetry(kind):
    b = build_basis(kind, n_levels=3)
    assert np.allclose(b.structure, -np.swapaxes(b.structure, 0, 1), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["pauli_su2", "gellmann3", "qubit_fock"]),
       seed=st.integers(0, 2 ** 31 - 1))
def test_decompose_reconstruct_roundtrip(kind, seed):
    b = build_basis(kind, n_levels=3)
    x = np.random.default_rng(seed).normal(size=b.n_ops)
    assert np.allclose(decompose(b.reconstruct(x), b), x, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_bracket_matches_matrix_commutator(seed):
    b = build_basis("gellmann3")
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 8))
    X, Y = b.to_generator(x), b.to_generator(y)
    assert np.allclose(b.to_generator(b.bracket(x, y)), X @ Y - Y @ X, atol=1e-10)


def test_ad_is_bracket(pauli):
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(2, 3))
    assert np.allclose(pauli.ad(x) @ y, pauli.bracket(x, y))


def test_decompose_rejects_outside_span(pauli):
    with pytest.raises(NotInSpan):
        decompose(np.diag([1.0, 2.0]), pauli)


def test_make_basis_rejects_non_hermitian():
    with pytest.raises(InvalidParameter):
        make_basis([annihilation(2)], ["a"])


def test_make_basis_rejects_dependent_ops():
    sx = pauli_matrices()[0]
    with pytest.raises(SingularGram):
        make_basis([sx, 2 * sx], ["a", "b"])


def test_make_basis_rejects_open_set():
    sx, sy, _ = pauli_matrices()
    with pytest.raises(NotInSpan):
        make_basis([sx, sy], ["sx", "sy"])


def test_unknown_kind():
    with pytest.raises(InvalidParameter):
        build_basis("su3")
