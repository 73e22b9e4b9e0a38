"""Closed-form limiting correlation kernels.

The equidistant-initial-data family: the free-boundary kernel L_S (exact
series and its two-term approximation), the (S,S) round-trip kernel L_{S,S}
(Jacobi-theta closed form and its approximation), absorbing/reflecting
combinations on the half line, offset-averaged pair products, sine and Bessel
limit kernels, and the monotone rescaling transform.

All kernel handles evaluate vectorized over numpy broadcasting and treat the
removable singularity on the diagonal by a Taylor fallback below
``SING_THRESHOLD`` times the spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import special as _sp

from .specfun import DomainError, _theta_vals, _theta_terms

__all__ = [
    "EquidistantModel",
    "KernelHandle",
    "DecayModel",
    "sine_kernel",
    "kernel_LS",
    "kernel_LS_approx",
    "kernel_LSS",
    "kernel_LSS_approx",
    "boundary_combine",
    "averaged_pair_product",
    "bessel_kernel",
    "rescaled_bessel",
    "bessel_limit_kernel",
    "rescale",
]

# below this separation (in units of the spacing a) diagonal-singular terms
# switch to their 5th-order Taylor form
SING_THRESHOLD = 1e-4

Boundary = Literal["free", "absorbing", "reflecting"]


@dataclass(frozen=True)
class EquidistantModel:
    """Equidistant initial data: spacing a, elapsed time S, offset Delta.

    ``T`` is the endpoint time of the conditioned paths: ``math.inf`` for the
    one-sided model, or equal to S for the round-trip (S,S) model.  The
    saturation parameter d = 2*pi*S/a^2 is derived and stored.
    """

    a: float
    S: float
    Delta: float = 0.0
    boundary: Boundary = "free"
    T: float = math.inf
    d: float = field(init=False)

    def __post_init__(self):
        if self.a <= 0 or self.S <= 0:
            raise DomainError("need a > 0 and S > 0")
        if not 0 <= self.Delta < self.a:
            raise DomainError("offset Delta must lie in [0, a)")
        if self.boundary not in ("free", "absorbing", "reflecting"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if not (self.T == math.inf or self.T == self.S):
            raise DomainError("T must be infinity, or equal to S for the (S,S) model")
        object.__setattr__(self, "d", 2.0 * math.pi * self.S / self.a**2)


@dataclass(frozen=True)
class DecayModel:
    """Far-field behaviour of K(x,y)K(y,x), used for variance tail handling.

    kind 'sine': non-oscillatory 1/(2 pi^2 t^2) tail present.
    kind 'ls':   the sine^2 and mirrored-cosine tails cancel; residue oscillatory.
    kind 'lss':  exponential decay with rate pi/(a d).
    """

    kind: Literal["sine", "ls", "lss", "unknown"]
    a: float = 1.0
    d: float = math.inf


@dataclass(frozen=True)
class KernelHandle:
    """An evaluable two-point correlation kernel with metadata.

    ``evaluate(x, y)`` broadcasts over numpy arrays and is finite everywhere on
    domain x domain.  ``symmetric`` records whether K(x,y) = K(y,x); consumers
    must use K(x,y)*K(y,x) for observable quantities either way.
    """

    evaluate: Callable
    domain: tuple[float, float] = (-math.inf, math.inf)
    representation: str = "series"
    symmetric: bool = False
    decay: DecayModel = DecayModel("unknown")
    label: str = ""

    def __call__(self, x, y):
        return self.evaluate(x, y)


def _sinc_pi(t):
    """sin(pi t)/t with the removable singularity handled to 5th order."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SING_THRESHOLD
    ts = np.where(small, 1.0, t)
    direct = np.sin(np.pi * ts) / ts
    z = (np.pi * t) ** 2
    taylor = np.pi * (1.0 - z / 6.0 * (1.0 - z / 20.0))
    return np.where(small, taylor, direct)


def sine_kernel(a: float) -> KernelHandle:
    """Translation-invariant sine kernel sin(pi(x-y)/a)/(pi(x-y)), density 1/a."""
    if a <= 0:
        raise DomainError("need a > 0")

    def evaluate(x, y):
        t = (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) / a
        out = _sinc_pi(t) / (np.pi * a)
        return out if out.ndim else float(out)

    return KernelHandle(evaluate, representation="series", symmetric=True,
                        decay=DecayModel("sine", a=a), label=f"sine(a={a})")


def _ls_series(x, y, d: float, tol: float):
    """L_S(x,y), the series with terms weighted exp(-pi d n(n-1)), a=1 units."""
    nmax = 1
    while math.exp(-math.pi * d * nmax * (nmax - 1)) > tol:
        nmax += 1
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = y - x
    # n = 0 term: Re[e^{i pi (y-x)}/(i(y-x))] = sin(pi t)/t
    tot = _sinc_pi(t).astype(float).copy()
    for n in range(-nmax + 1, nmax + 1):
        if n == 0:
            continue
        w = math.exp(-math.pi * d * n * (n - 1))
        num = np.exp(1j * np.pi * (y + (2 * n - 1) * x))
        tot += w * (num / (n * d + 1j * t)).real
    return tot / np.pi


def kernel_LS(model: EquidistantModel, tol: float = 1e-15) -> KernelHandle:
    """Limiting free-boundary kernel for equidistant initial points (exact series).

    K(u,v) = a^-1 L_S((u-Delta)/a, (v-Delta)/a); series truncated once the
    Gaussian term weight drops below ``tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if model.boundary != "free" or model.T != math.inf:
        raise DomainError("kernel_LS is the free-boundary T=infinity kernel")
    a, d, off = model.a, model.d, model.Delta

    def evaluate(x, y):
        out = _ls_series((np.asarray(x, float) - off) / a, (np.asarray(y, float) - off) / a, d, tol) / a
        return out if out.ndim else float(out)

    return KernelHandle(evaluate, representation="series", symmetric=False,
                        decay=DecayModel("ls", a=a, d=d), label=f"LS(a={a},d={d:g})")


def kernel_LS_approx(model: EquidistantModel) -> KernelHandle:
    """Two-term form of kernel_LS: sine kernel plus the mirror-oscillation term.

    Exact up to corrections of order exp(-2 pi d).
    """
    if model.boundary != "free" or model.T != math.inf:
        raise DomainError("kernel_LS_approx is the free-boundary T=infinity kernel")
    a, d, off = model.a, model.d, model.Delta

    def evaluate(x, y):
        u = (np.asarray(x, float) - off) / a
        v = (np.asarray(y, float) - off) / a
        t = v - u
        val = _sinc_pi(t) / np.pi + (d * np.cos(np.pi * (u + v)) + t * np.sin(np.pi * (u + v))) / (np.pi * (d * d + t * t))
        out = val / a
        return out if out.ndim else float(out)

    return KernelHandle(evaluate, representation="approximate", symmetric=False,
                        decay=DecayModel("ls", a=a, d=d), label=f"LS_approx(a={a},d={d:g})")


def _lss_prefactor(d: float, tol: float) -> float:
    t2 = _theta_vals(2, 0.0, 1j * d, tol)
    t3 = _theta_vals(3, 0.0, 1j * d, tol)
    t4 = _theta_vals(4, 0.0, 1j * d, tol)
    return float(1.0 / (d * t2.real**2 * math.sqrt(t3.real * t4.real)))


def _theta1_over_sinh(t, d: float, tol: float):
    """theta_1(t; 2id)/sinh(pi t/(2d)) with the diagonal handled by series division."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SING_THRESHOLD
    ts = np.where(small, 1.0, t)
    direct = _theta_vals(1, ts, 2j * d, tol).real / np.sinh(np.pi * ts / (2 * d))
    # odd series: theta1(t) = c1 t + c3 t^3/6 + c5 t^5/120, sinh(s) = s(1 + s^2/6 + ...)
    c1 = _theta_terms(1, 0.0, 2j * d, 1, tol).sum(axis=-1).real
    c3 = _theta_terms(1, 0.0, 2j * d, 3, tol).sum(axis=-1).real
    s1 = np.pi / (2 * d)
    # ratio = (c1 + c3 t^2/6)/(s1(1 + (s1 t)^2/6)) to 4th order
    taylor = (c1 + c3 * t * t / 6.0) / s1 * (1.0 - (s1 * t) ** 2 / 6.0)
    return np.where(small, taylor, direct)


def kernel_LSS(model: EquidistantModel, tol: float = 1e-14) -> KernelHandle:
    """Round-trip (S,S) kernel in Jacobi-theta closed form.

    L_{S,S}(u,v) = [theta3(u+v;2id) theta1(u-v;2id)/sinh(pi(u-v)/2d)
                    + theta2(u+v;2id) theta4(u-v;2id)/cosh(pi(u-v)/2d)]
                   / (d theta2(0;id)^2 sqrt(theta3(0;id) theta4(0;id))),
    cross-checked against the equivalent infinite-product series form.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if model.boundary != "free" or model.T != model.S:
        raise DomainError("kernel_LSS is the free-boundary (S,S) kernel; set T = S")
    a, d, off = model.a, model.d, model.Delta
    pref = _lss_prefactor(d, tol)

    def evaluate(x, y):
        u = (np.asarray(x, float) - off) / a
        v = (np.asarray(y, float) - off) / a
        t = u - v
        s = u + v
        first = _theta_vals(3, s, 2j * d, tol).real * _theta1_over_sinh(t, d, tol)
        second = _theta_vals(2, s, 2j * d, tol).real * _theta_vals(4, t, 2j * d, tol).real / np.cosh(np.pi * t / (2 * d))
        out = pref * (first + second) / a
        return out if out.ndim else float(out)

    return KernelHandle(evaluate, representation="theta", symmetric=True,
                        decay=DecayModel("lss", a=a, d=d), label=f"LSS(a={a},d={d:g})")


def kernel_LSS_approx(model: EquidistantModel) -> KernelHandle:
    """Leading part of kernel_LSS, exact up to exp(-2 pi d) corrections."""
    if model.boundary != "free" or model.T != model.S:
        raise DomainError("kernel_LSS_approx is the free-boundary (S,S) kernel; set T = S")
    a, d, off = model.a, model.d, model.Delta

    def evaluate(x, y):
        u = (np.asarray(x, float) - off) / a
        v = (np.asarray(y, float) - off) / a
        t = u - v
        small = np.abs(t) < SING_THRESHOLD
        ts = np.where(small, 1.0, t)
        ratio = np.sin(np.pi * ts) / (2 * d * np.sinh(np.pi * ts / (2 * d)))
        z = (np.pi * t) ** 2
        taylor = (1.0 - z / 6.0 * (1.0 + 1.0 / (4 * d * d)))
        first = np.where(small, taylor, ratio)
        out = (first + np.cos(np.pi * (u + v)) / (2 * d * np.cosh(np.pi * t / (2 * d)))) / a
        return out if out.ndim else float(out)

    return KernelHandle(evaluate, representation="approximate", symmetric=True,
                        decay=DecayModel("lss", a=a, d=d), label=f"LSS_approx(a={a},d={d:g})")


def boundary_combine(base: KernelHandle, mode: Literal["absorbing", "reflecting"]) -> KernelHandle:
    """Half-line kernel from a whole-line one: K(u,v) -/+ K(-u,v).

    Absorbing takes the odd (minus) combination, reflecting the even (plus).
    """
    if base.domain != (-math.inf, math.inf):
        raise DomainError("boundary_combine needs a whole-line base kernel")
    if mode == "absorbing":
        sign = -1.0
    elif mode == "reflecting":
        sign = +1.0
    else:
        raise DomainError(f"unknown boundary mode {mode!r}")

    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        out = base.evaluate(x, y) + sign * base.evaluate(-x, y)
        return out if np.ndim(out) else float(out)

    return KernelHandle(evaluate, domain=(0.0, math.inf), representation="composite",
                        symmetric=False, decay=base.decay, label=f"{mode}({base.label})")


def averaged_pair_product(model: EquidistantModel, which: Literal["LS", "LSS"]) -> Callable:
    """Offset-averaged product (1/a) int_0^a K(x-D,y-D) K(y-D,x-D) dD.

    Translation invariant; returned as a vectorized function of (x, y) that
    only depends on x - y.  Exact for the leading kernel forms.
    """
    a, d = model.a, model.d

    if which == "LS":
        def evaluate(x, y):
            t = (np.asarray(x, float) - np.asarray(y, float)) / a
            s2 = (_sinc_pi(t) / np.pi) ** 2
            out = (s2 + (d * d - t * t) / (2 * np.pi**2 * (d * d + t * t) ** 2)) / a**2
            return out if out.ndim else float(out)
    elif which == "LSS":
        def evaluate(x, y):
            t = (np.asarray(x, float) - np.asarray(y, float)) / a
            small = np.abs(t) < SING_THRESHOLD
            ts = np.where(small, 1.0, t)
            ratio = np.sin(np.pi * ts) / (2 * d * np.sinh(np.pi * ts / (2 * d)))
            taylor = 1.0 - (np.pi * t) ** 2 / 6.0 * (1.0 + 1.0 / (4 * d * d))
            first = np.where(small, taylor, ratio) ** 2
            out = (first + 1.0 / (8 * d * d * np.cosh(np.pi * t / (2 * d)) ** 2)) / a**2
            return out if out.ndim else float(out)
    else:
        raise DomainError(f"which must be 'LS' or 'LSS', got {which!r}")

    return evaluate


_BESSEL_ORDERS = (-0.5, 0.5, 0.0, 1.0, 2.0)


def bessel_kernel(nu: float, x, y):
    """Bessel kernel B_nu(x,y) on (0, inf)^2, confluent limit on the diagonal."""
    if nu not in _BESSEL_ORDERS:
        raise DomainError(f"Bessel kernel restricted to orders {_BESSEL_ORDERS}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("bessel_kernel requires x, y > 0")
    sx, sy = np.sqrt(x), np.sqrt(y)
    num = sx * _sp.jv(nu + 1, sx) * _sp.jv(nu, sy) - _sp.jv(nu, sx) * sy * _sp.jv(nu + 1, sy)
    t = x - y
    scale = np.maximum(x, y)
    small = np.abs(t) < SING_THRESHOLD * scale
    ts = np.where(small, 1.0, t)
    direct = num / (2.0 * ts)
    # diagonal limit: -d/dy[numerator]/2 at y = x
    jn = _sp.jv(nu, sx)
    jn1 = _sp.jv(nu + 1, sx)
    djn = _sp.jvp(nu, sx)
    djn1 = _sp.jvp(nu + 1, sx)
    diag = -(sx * jn1 * djn / (2.0 * sx) - jn * (jn1 / (2.0 * sx) + djn1 / 2.0)) / 2.0
    out = np.where(small, diag, direct)
    return out if out.ndim else float(out)


def rescaled_bessel(nu: float, x, y):
    """B~_nu(x,y) = sqrt(2 pi^2 x * 2 pi^2 y) B_nu(pi^2 x^2, pi^2 y^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = 2.0 * np.pi**2 * np.sqrt(x * y) * bessel_kernel(nu, np.pi**2 * x**2, np.pi**2 * y**2)
    return out if np.ndim(out) else float(out)


def bessel_limit_kernel(nu: float) -> KernelHandle:
    """Half-line handle for the rescaled Bessel kernel B~_nu."""
    def evaluate(x, y):
        return rescaled_bessel(nu, x, y)

    return KernelHandle(evaluate, domain=(0.0, math.inf), representation="series",
                        symmetric=True, decay=DecayModel("sine", a=1.0), label=f"bessel(nu={nu})")


def rescale(base: KernelHandle, G: Callable, G_prime: Callable) -> KernelHandle:
    """Rescaled kernel K~(x,y) = K(G(x), G(y)) sqrt(G'(x) G'(y)).

    G must be strictly increasing with positive derivative on the target
    domain; a nonpositive derivative sample raises DomainError at evaluation.
    """

    def evaluate(x, y):
        gx = np.asarray(G_prime(x), dtype=float)
        gy = np.asarray(G_prime(y), dtype=float)
        if np.any(gx <= 0) or np.any(gy <= 0):
            raise DomainError("rescale requires G' > 0 on the evaluation points")
        out = base.evaluate(G(x), G(y)) * np.sqrt(gx * gy)
        return out if np.ndim(out) else float(out)

    return KernelHandle(evaluate, domain=base.domain, representation="composite",
                        symmetric=base.symmetric, decay=DecayModel("unknown"),
                        label=f"rescaled({base.label})")
