"""Control fields: truncated Fourier series and analytic envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidParameter, OutOfDomain

CONSTRAINTS = ("free", "zero", "constant_only", "boundary_zero")
_DOMAIN_SLACK = 1e-12


def _check_domain(t, t_f):
    if np.ndim(t) == 0:
        t = float(t)
        if t < -_DOMAIN_SLACK * max(1.0, t_f) or t > t_f * (1 + _DOMAIN_SLACK):
            raise OutOfDomain(f"time outside [0, {t_f}]")
        return t
    t = np.asarray(t, dtype=float)
    if np.any(t < -_DOMAIN_SLACK * max(1.0, t_f)) or np.any(t > t_f * (1 + _DOMAIN_SLACK)):
        raise OutOfDomain(f"time outside [0, {t_f}]")
    return t


@dataclass(frozen=True)
class FourierField:
    """``w(t) = sum_k c_k cos(w_k t) + d_k sin(w_k t)`` with ``w_k = 2 pi k / t_f``.

    ``c`` and ``d`` are indexed by the harmonic number ``k`` (length
    ``k_max + 1``); entries below ``k_min`` must vanish and ``d[0]`` is always 0.
    """

    t_f: float
    k_max: int
    c: np.ndarray
    d: np.ndarray
    k_min: int = 0
    constraint: str = "free"

    def __post_init__(self):
        c = np.zeros(self.k_max + 1) + np.asarray(self.c, float)
        d = np.zeros(self.k_max + 1) + np.asarray(self.d, float)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        if self.constraint not in CONSTRAINTS:
            raise InvalidParameter(f"unknown constraint {self.constraint!r}")
        if self.k_min < 0 or self.k_max < self.k_min:
            raise InvalidParameter("need 0 <= k_min <= k_max")
        if d[0] != 0.0:
            raise InvalidParameter("d_0 must be zero")
        if np.any(c[: self.k_min]) or np.any(d[: self.k_min]):
            raise InvalidParameter("coefficients below k_min must vanish")
        if self.constraint == "zero" and (np.any(c) or np.any(d)):
            raise InvalidParameter("zero field with nonzero coefficients")
        if self.constraint == "constant_only" and (np.any(c[1:]) or np.any(d)):
            raise InvalidParameter("constant_only field with oscillating terms")
        if self.constraint == "boundary_zero" and abs(c.sum()) > 1e-12 * max(1.0, np.abs(c).sum()):
            raise InvalidParameter("boundary_zero field needs sum(c) == 0")

    @classmethod
    def zeros(cls, t_f, k_max=0, constraint="free"):
        return cls(t_f=t_f, k_max=k_max, c=np.zeros(k_max + 1), d=np.zeros(k_max + 1),
                   constraint=constraint)

    @property
    def omegas(self):
        return 2 * np.pi * np.arange(self.k_max + 1) / self.t_f

    def __call__(self, t):
        return eval_field(self, t)

    def __add__(self, other: "FourierField") -> "FourierField":
        if other.t_f != self.t_f:
            raise InvalidParameter("cannot add fields with different t_f")
        K = max(self.k_max, other.k_max)
        c = np.zeros(K + 1)
        d = np.zeros(K + 1)
        c[: self.k_max + 1] += self.c
        d[: self.k_max + 1] += self.d
        c[: other.k_max + 1] += other.c
        d[: other.k_max + 1] += other.d
        constraint = self.constraint if self.constraint == other.constraint else "free"
        return FourierField(t_f=self.t_f, k_max=K, c=c, d=d,
                            k_min=min(self.k_min, other.k_min), constraint=constraint)


def eval_field(f: FourierField, t):
    """Evaluate a Fourier field at ``t`` (scalar or array) in ``[0, t_f]``."""
    t = _check_domain(t, f.t_f)
    phase = np.multiply.outer(t, f.omegas)
    out = np.cos(phase) @ f.c + np.sin(phase) @ f.d
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FieldTemplate:
    """Which Fourier coefficients of a correction field are free unknowns.

    Free parameters are laid out cosine-first, then sine, each in increasing
    harmonic order.  For ``boundary_zero`` the cosine unknowns multiply
    ``1 - cos(w_k t)`` so that the field vanishes at both ends by construction.
    """

    constraint: str = "free"
    k_min: int = 0
    k_max: int = 0
    sine: bool = True

    def __post_init__(self):
        if self.constraint not in CONSTRAINTS:
            raise InvalidParameter(f"unknown constraint {self.constraint!r}")
        if self.k_min < 0 or self.k_max < self.k_min:
            raise InvalidParameter("need 0 <= k_min <= k_max")
        cols = self._build_columns()
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "_ks", np.array([k for k, _ in cols], dtype=float))
        object.__setattr__(self, "_kinds", np.array([("cos", "sin", "1-cos").index(kind)
                                                     for _, kind in cols], dtype=int))

    def _build_columns(self):
        if self.constraint == "zero":
            return []
        if self.constraint == "constant_only":
            return [(0, "cos")]
        lo = max(1, self.k_min)
        ks = range(lo, self.k_max + 1)
        if self.constraint == "boundary_zero":
            cols = [(k, "1-cos") for k in ks]
        else:
            cols = [(k, "cos") for k in range(self.k_min, self.k_max + 1)]
        if self.sine:
            cols += [(k, "sin") for k in ks]
        return cols

    def columns(self):
        """List of ``(k, kind)`` with kind in ``{"cos", "sin", "1-cos"}``."""
        return list(self._cols)

    @property
    def n_params(self) -> int:
        return len(self._cols)

    def basis_values(self, t, t_f):
        """Array of shape ``t.shape + (n_params,)`` with each basis function."""
        phase = np.multiply.outer(np.asarray(t, dtype=float), 2 * np.pi * self._ks / t_f)
        c = np.cos(phase)
        return np.where(self._kinds == 1, np.sin(phase), np.where(self._kinds == 2, 1.0 - c, c))

    def to_field(self, params, t_f) -> FourierField:
        params = np.asarray(params, dtype=float)
        cols = self.columns()
        if params.shape != (len(cols),):
            raise InvalidParameter(f"expected {len(cols)} parameters, got {params.shape}")
        K = self.k_max
        c = np.zeros(K + 1)
        d = np.zeros(K + 1)
        for p, (k, kind) in zip(params, cols):
            if kind == "cos":
                c[k] += p
            elif kind == "sin":
                d[k] += p
            else:
                c[0] += p
                c[k] -= p
        kmin = 0 if self.constraint == "boundary_zero" else self.k_min
        return FourierField(t_f=t_f, k_max=K, c=c, d=d, k_min=kmin, constraint=self.constraint)


# --- analytic envelopes -------------------------------------------------------

ENVELOPE_KINDS = ("raised_cosine", "snap_half", "custom_samples", "zero")


@dataclass(frozen=True)
class Envelope:
    """Named pulse envelope on ``[0, t_f]``.

    ``raised_cosine``: ``(theta0/t_f) [1 - cos(2 pi t / t_f)]``, area ``theta0``.
    ``snap_half``: ``(2 theta0/t_f) [1 - cos(4 pi t / t_f)]`` on the first or
    second half of the interval and zero elsewhere, area ``theta0``.
    ``custom_samples``: cubic spline through uniformly spaced samples.
    """

    kind: str
    t_f: float
    theta0: float = 0.0
    half: str = "first"
    samples: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise InvalidParameter(f"unknown envelope kind {self.kind!r}")
        if self.t_f <= 0:
            raise InvalidParameter("t_f must be positive")
        if self.kind == "snap_half" and self.half not in ("first", "second"):
            raise InvalidParameter("half must be 'first' or 'second'")
        if self.kind == "custom_samples":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or s.size < 4:
                raise InvalidParameter("custom_samples needs at least 4 samples")
            spline = CubicSpline(np.linspace(0.0, self.t_f, s.size), s)
            object.__setattr__(self, "_spline", spline)

    def _window(self, t):
        if self.half == "first":
            return t < self.t_f / 2
        return t >= self.t_f / 2

    def value(self, t):
        t = _check_domain(t, self.t_f)
        if isinstance(t, float) and self.kind in ("raised_cosine", "snap_half"):
            return self._scalar_value(t)
        if self.kind == "zero":
            out = np.zeros_like(t)
        elif self.kind == "raised_cosine":
            out = self.theta0 / self.t_f * (1 - np.cos(2 * np.pi * t / self.t_f))
        elif self.kind == "snap_half":
            out = 2 * self.theta0 / self.t_f * (1 - np.cos(4 * np.pi * t / self.t_f))
            out = np.where(self._window(t), out, 0.0)
        else:
            out = self._spline(t)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = value

    def _scalar_value(self, t):
        if self.kind == "raised_cosine":
            return self.theta0 / self.t_f * (1 - math.cos(2 * math.pi * t / self.t_f))
        inside = t < self.t_f / 2 if self.half == "first" else t >= self.t_f / 2
        if not inside:
            return 0.0
        return 2 * self.theta0 / self.t_f * (1 - math.cos(4 * math.pi * t / self.t_f))

    def derivative(self, t):
        t = _check_domain(t, self.t_f)
        if self.kind == "zero":
            out = np.zeros_like(t)
        elif self.kind == "raised_cosine":
            w = 2 * np.pi / self.t_f
            out = self.theta0 / self.t_f * w * np.sin(w * t)
        elif self.kind == "snap_half":
            w = 4 * np.pi / self.t_f
            out = 2 * self.theta0 / self.t_f * w * np.sin(w * t)
            out = np.where(self._window(t), out, 0.0)
        else:
            out = self._spline(t, 1)
        return float(out) if np.ndim(out) == 0 else out

    def integral(self, t):
        t = _check_domain(t, self.t_f)
        tf = self.t_f
        if self.kind == "zero":
            out = np.zeros_like(t)
        elif self.kind == "raised_cosine":
            out = self.theta0 / tf * (t - tf / (2 * np.pi) * np.sin(2 * np.pi * t / tf))
        elif self.kind == "snap_half":
            w = 4 * np.pi / tf

            def prim(s):
                return 2 * self.theta0 / tf * (s - np.sin(w * s) / w)

            if self.half == "first":
                out = prim(np.minimum(t, tf / 2))
            else:
                out = np.where(t >= tf / 2, prim(t) - prim(tf / 2), 0.0)
        else:
            out = self._spline.integrate(0.0, t) if np.ndim(t) == 0 else np.array(
                [self._spline.integrate(0.0, s) for s in t.ravel()]).reshape(t.shape)
        return float(out) if np.ndim(out) == 0 else out


def eval_envelope(e: Envelope, t):
    return e.value(t)


def theta_accumulated(e: Envelope, t):
    """Area under the envelope from 0 to ``t``."""
    return e.integral(t)
