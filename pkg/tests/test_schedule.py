import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from magnuspulse.errors import InvalidParameter, OutOfDomain
from magnuspulse.schedule import (Envelope, FieldTemplate, FourierField, eval_envelope, eval_field,
                                  theta_accumulated)


def test_hand_evaluated_field():
    f = FourierField(t_f=2.0, k_max=2, c=[0, 0.3, 0], d=[0, 0, -0.1])
    assert eval_field(f, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert eval_field(f, 0.0) == pytest.approx(0.3)


def test_raised_cosine_area():
    e = Envelope("raised_cosine", t_f=3.7, theta0=np.pi / 2)
    assert theta_accumulated(e, 3.7) == pytest.approx(np.pi / 2, rel=1e-14)
    assert eval_envelope(e, 0.0) == 0.0
    assert eval_envelope(e, 3.7) == pytest.approx(0.0, abs=1e-15)


def test_unit_area_envelope():
    e = Envelope("raised_cosine", t_f=20.0, theta0=1.0)
    assert theta_accumulated(e, 20.0) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("half", ["first", "second"])
def test_snap_half_area(half):
    e = Envelope("snap_half", t_f=50.0, theta0=np.pi, half=half)
    assert theta_accumulated(e, 50.0) == pytest.approx(np.pi, rel=1e-13)
    assert quad(e, 0, 50.0, points=[25.0])[0] == pytest.approx(np.pi, rel=1e-10)


def test_derivative_matches_finite_difference():
    e = Envelope("raised_cosine", t_f=4.0, theta0=1.3)
    t = np.linspace(0.1, 3.9, 7)
    h = 1e-6
    fd = (e(t + h) - e(t - h)) / (2 * h)
    assert np.allclose(e.derivative(t), fd, atol=1e-8)


def test_custom_samples_spline():
    t_f = 2.0
    s = np.sin(np.pi * np.linspace(0, t_f, 41) / t_f)
    e = Envelope("custom_samples", t_f=t_f, samples=s)
    assert e(0.5) == pytest.approx(np.sin(np.pi / 4), abs=1e-5)
    assert theta_accumulated(e, t_f) == pytest.approx(2 * t_f / np.pi, rel=1e-5)


def test_out_of_domain():
    e = Envelope("raised_cosine", t_f=1.0, theta0=1.0)
    with pytest.raises(OutOfDomain):
        e(1.5)
    with pytest.raises(OutOfDomain):
        FourierField.zeros(1.0, 2)(-0.1)


@pytest.mark.parametrize("kwargs", [
    dict(c=[0, 1], d=[0, 0], constraint="zero"),
    dict(c=[0, 1], d=[0, 0], constraint="constant_only"),
    dict(c=[1, 1], d=[0, 0], constraint="boundary_zero"),
    dict(c=[0, 0], d=[1, 0]),
    dict(c=[1, 0], d=[0, 0], k_min=1),
])
def test_field_invariants_enforced(kwargs):
    with pytest.raises(InvalidParameter):
        FourierField(t_f=1.0, k_max=1, **kwargs)


def test_template_rejects_bad_constraint():
    with pytest.raises(InvalidParameter):
        FieldTemplate("sometimes")


def test_template_column_layout():
    tpl = FieldTemplate("boundary_zero", k_max=3)
    assert tpl.columns() == [(1, "1-cos"), (2, "1-cos"), (3, "1-cos"), (1, "sin"), (2, "sin"), (3, "sin")]
    assert FieldTemplate("constant_only").n_params == 1
    assert FieldTemplate("zero", k_max=4).n_params == 0
    assert FieldTemplate("free", k_min=0, k_max=2).n_params == 5


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), K=st.integers(1, 6), t_f=st.floats(0.5, 50.0))
def test_boundary_zero_vanishes_at_ends(seed, K, t_f):
    tpl = FieldTemplate("boundary_zero", k_max=K)
    p = np.random.default_rng(seed).normal(size=tpl.n_params)
    f = tpl.to_field(p, t_f)
    assert abs(f(0.0)) <= 1e-12 * max(1, np.abs(p).sum())
    assert abs(f(t_f)) <= 1e-11 * max(1, np.abs(p).sum())


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1),
       constraint=st.sampled_from(["free", "boundary_zero", "constant_only"]),
       K=st.integers(1, 5))
def test_basis_values_match_field(seed, constraint, K):
    tpl = FieldTemplate(constraint, k_max=K)
    t_f = 3.0
    p = np.random.default_rng(seed).normal(size=tpl.n_params)
    t = np.linspace(0, t_f, 17)
    assert np.allclose(tpl.basis_values(t, t_f) @ p, tpl.to_field(p, t_f)(t), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_theta_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    kind = rng.choice(["raised_cosine", "snap_half"])
    t_f = rng.uniform(0.5, 60.0)
    e = Envelope(str(kind), t_f=t_f, theta0=rng.uniform(0.1, 4.0),
                 half=str(rng.choice(["first", "second"])))
    t = rng.uniform(0, t_f)
    ref = quad(e, 0.0, t, points=[t_f / 2] if t > t_f / 2 else None,
               epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    assert theta_accumulated(e, t) == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_field_addition():
    a = FourierField(t_f=1.0, k_max=1, c=[0, 1], d=[0, 2])
    b = FourierField(t_f=1.0, k_max=2, c=[1, 0, 1], d=[0, 0, 3])
    s = a + b
    t = np.linspace(0, 1, 9)
    assert np.allclose(s(t), a(t) + b(t))
    with pytest.raises(InvalidParameter):
        a + FourierField.zeros(2.0, 1)
