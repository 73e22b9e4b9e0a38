"""Counting-function configurations and the equidistant-surrogate machinery.

A configuration is built from a C^2 counting function F with F(x) <= C x^(1+delta),
F'(0) = 0 < F' elsewhere and F'' decreasing: initial points y_j = F^{-1}(j),
per-index spacing lambda_m = 1/F'(y_m), curvature eta_m = F''(y_m), the drift
sum xi_m over reflected differences, and the drift-corrected height
zeta_m = y_m - xi_m S.  Near a target height alpha the configuration is
approximated by an equidistant surrogate with spacing lambda(alpha) after a
gauge factor exp(-xi(alpha)(u-v)) and a shift zeta(alpha); the comparison
report measures that approximation directly against the contour kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize

from . import contour as _contour
from . import kernels as _kernels
from .errors import ConfigurationError, DomainError

__all__ = [
    "CountingFunction",
    "GeneralConfiguration",
    "power_counting",
    "zeta_counting",
    "unfolding_counting",
    "counting_by_name",
    "invert_F",
    "xi_m",
    "xi_m_with_error",
    "LocateResult",
    "locate_m",
    "Surrogate",
    "surrogate_model",
    "ComparisonReport",
    "compare_at_height",
    "UnfoldedResult",
    "unfolded_model",
]


@dataclass(frozen=True)
class CountingFunction:
    """C^2 counting function with growth exponent delta in (0,1)."""

    F: Callable
    F_prime: Callable
    F_double_prime: Callable
    delta: float
    C_growth: float
    name: str = ""

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigurationError("delta must lie in (0, 1)")
        if self.C_growth <= 0:
            raise ConfigurationError("C_growth must be positive")

    def validate(self, xmax: float = 100.0, n: int = 400) -> None:
        """Spot-check conditions (i)-(iii) on a sampled grid."""
        x = np.linspace(0.0, xmax, n + 1)
        if np.any(self.F(x) > self.C_growth * x ** (1 + self.delta) + 1e-9):
            raise ConfigurationError("growth condition F <= C x^(1+delta) fails on the grid")
        if abs(self.F_prime(0.0)) > 1e-9:
            raise ConfigurationError("need F'(0) = 0")
        if np.any(self.F_prime(x[1:]) <= 0):
            raise ConfigurationError("need F' > 0 away from 0")
        dd = self.F_double_prime(x[1:])
        if np.any(np.diff(dd) > 1e-9 * np.maximum(1.0, np.abs(dd[:-1]))):
            raise ConfigurationError("need F'' nonincreasing")


def power_counting(delta: float) -> CountingFunction:
    """F(x) = x^(1+delta)."""
    p = 1.0 + delta
    return CountingFunction(
        F=lambda x: np.asarray(x, float) ** p,
        F_prime=lambda x: p * np.asarray(x, float) ** delta,
        F_double_prime=lambda x: p * delta * np.maximum(np.asarray(x, float), 1e-300) ** (delta - 1.0),
        delta=delta, C_growth=1.0, name=f"power:{delta:g}",
    )


def _poly_completion(x1: float, f1: float, fp1: float, fpp1: float):
    """x^2 (c0 + c1 x + c2 x^2) matching value/slope/curvature at x1.

    Keeps F(0) = F'(0) = 0 for the small-x branch of counting functions whose
    defining formula only makes sense for large x.
    """
    A = np.array([
        [x1**2, x1**3, x1**4],
        [2 * x1, 3 * x1**2, 4 * x1**3],
        [2.0, 6 * x1, 12 * x1**2],
    ])
    c = np.linalg.solve(A, np.array([f1, fp1, fpp1]))
    return c


def _piecewise_counting(x1, F_big, Fp_big, Fpp_big, delta, C_growth, name):
    c0, c1, c2 = _poly_completion(x1, F_big(x1), Fp_big(x1), Fpp_big(x1))

    def F(x):
        x = np.asarray(x, float)
        small = x < x1
        xs = np.where(small, x, x1)
        xb = np.where(small, x1, x)
        return np.where(small, xs**2 * (c0 + c1 * xs + c2 * xs**2), F_big(xb))

    def Fp(x):
        x = np.asarray(x, float)
        small = x < x1
        xs = np.where(small, x, x1)
        xb = np.where(small, x1, x)
        return np.where(small, 2 * c0 * xs + 3 * c1 * xs**2 + 4 * c2 * xs**3, Fp_big(xb))

    def Fpp(x):
        x = np.asarray(x, float)
        small = x < x1
        xs = np.where(small, x, x1)
        xb = np.where(small, x1, x)
        return np.where(small, 2 * c0 + 6 * c1 * xs + 12 * c2 * xs**2, Fpp_big(xb))

    return CountingFunction(F, Fp, Fpp, delta, C_growth, name)


def zeta_counting() -> CountingFunction:
    """Smoothed Riemann-zero counting shape (x/2pi) log(x/2pi) - x/2pi.

    Modified below the height of the first point (F = 1) by a polynomial
    completion, which leaves every y_j = F^{-1}(j) unchanged.
    """
    two_pi = 2 * math.pi

    def F_big(x):
        s = np.asarray(x, float) / two_pi
        return s * (np.log(s) - 1.0)

    def Fp_big(x):
        return np.log(np.asarray(x, float) / two_pi) / two_pi

    def Fpp_big(x):
        return 1.0 / (two_pi * np.asarray(x, float))

    x1 = float(_optimize.brentq(lambda x: F_big(x) - 1.0, two_pi * math.e, 40.0))
    return _piecewise_counting(x1, F_big, Fp_big, Fpp_big,
                               delta=0.2, C_growth=1.0, name="zeta-counting")


def unfolding_counting() -> CountingFunction:
    """F(x) = 1 + int_{2 pi e}^x sqrt(log(t/2pi)) dt, polynomially completed
    below 2 pi e (so F(2 pi e) = 1 and y_1 is unchanged)."""
    two_pi = 2 * math.pi
    x1 = two_pi * math.e

    def Fp_big(x):
        return np.sqrt(np.log(np.asarray(x, float) / two_pi))

    def Fpp_big(x):
        x = np.asarray(x, float)
        return 1.0 / (2.0 * x * np.sqrt(np.log(x / two_pi)))

    # antiderivative of sqrt(log(t/2pi)): t sqrt(L) - 2 pi sqrt(pi)/2 erfi(sqrt(L)), L = log(t/2pi)
    from scipy.special import erfi

    def anti(x):
        x = np.asarray(x, float)
        Lg = np.log(x / two_pi)
        s = np.sqrt(Lg)
        return x * s - two_pi * math.sqrt(math.pi) / 2.0 * erfi(s)

    a1 = float(anti(x1))

    def F_big(x):
        return 1.0 + anti(x) - a1

    return _piecewise_counting(x1, F_big, Fp_big, Fpp_big,
                               delta=0.1, C_growth=1.0, name="unfolding")


def counting_by_name(name: str) -> CountingFunction:
    """Catalog lookup: 'power:<delta>', 'zeta-counting', 'unfolding'."""
    if name.startswith("power:"):
        return power_counting(float(name.split(":", 1)[1]))
    if name == "zeta-counting":
        return zeta_counting()
    if name == "unfolding":
        return unfolding_counting()
    raise DomainError(f"unknown counting function {name!r}")


def invert_F(cf: CountingFunction, j: float) -> float:
    """y with F(y) = j, by bracketed root solve on the monotone branch."""
    if j < 1:
        raise DomainError("need j >= 1")
    hi = (j / cf.C_growth) ** (1.0 / (1.0 + cf.delta)) * 10.0
    f = lambda x: float(cf.F(x)) - j
    if f(hi) < 0:
        raise ConfigurationError(f"failed to bracket F^-1({j}) within [0, {hi:g}]")
    return float(_optimize.brentq(f, 0.0, hi, xtol=1e-13, rtol=4e-16, maxiter=200))


def _invert_many(cf: CountingFunction, targets: np.ndarray) -> np.ndarray:
    """Vectorized Newton solve of F(y) = target with bisection safeguarding."""
    t = np.asarray(targets, dtype=float)
    y = (t / cf.C_growth) ** (1.0 / (1.0 + cf.delta))
    for _ in range(80):
        r = cf.F(y) - t
        dy = r / np.maximum(cf.F_prime(y), 1e-300)
        dy = np.clip(dy, -0.5 * y, 0.5 * y)
        y = y - dy
        if np.max(np.abs(dy) / np.maximum(y, 1e-300)) < 1e-14:
            break
    bad = np.abs(cf.F(y) - t) > 1e-9 * np.maximum(t, 1.0)
    for i in np.nonzero(bad)[0]:
        y[i] = invert_F(cf, t[i])
    return y


class GeneralConfiguration:
    """Initial points y_j = F^{-1}(j) with cached per-index quantities."""

    def __init__(self, source: CountingFunction, prefix_len: int = 4096):
        self.source = source
        self.y = _invert_many(source, np.arange(1, prefix_len + 1, dtype=float))
        if np.any(np.diff(self.y) <= 0):
            raise ConfigurationError("inverted points are not strictly increasing")

    def ensure(self, n: int) -> np.ndarray:
        if n > self.y.size:
            extra = _invert_many(self.source, np.arange(self.y.size + 1, n + 1, dtype=float))
            self.y = np.concatenate([self.y, extra])
        return self.y

    def lam(self, m: int) -> float:
        self.ensure(m)
        return float(1.0 / self.source.F_prime(self.y[m - 1]))

    def eta(self, m: int) -> float:
        self.ensure(m)
        return float(self.source.F_double_prime(self.y[m - 1]))

    def y_at(self, m: int) -> float:
        self.ensure(m)
        return float(self.y[m - 1])

    def tail_inv_power(self, k: int, from_index: int) -> float:
        """sum_{j > from_index} y_j^{-k} via the density integral int F'(y)/y^k dy."""
        y0 = self.y_at(from_index)
        val, _ = _integrate.quad(lambda t: float(self.source.F_prime(t)) / t**k,
                                 y0, np.inf, limit=200)
        return float(val)

    def initial_data(self, zmax: float, radius_factor: float = 30.0) -> _contour.GeneralInitialData:
        """Prefix long enough for even-product evaluation out to |z| = zmax."""
        need_y = radius_factor * zmax
        n = int(math.ceil(float(self.source.F(need_y)))) + 8
        y = self.ensure(n).copy()
        # local spacing near the top of the evaluation window
        m_near = max(1, min(n - 1, int(math.ceil(float(self.source.F(min(zmax, y[-1])))))))
        return _contour.GeneralInitialData(
            y=y,
            tail_inv2=self.tail_inv_power(2, n),
            tail_inv4=self.tail_inv_power(4, n),
            mean_gap=self.lam(m_near),
        )


def xi_m_with_error(config: GeneralConfiguration, m: int, tail_len: int = 10000) -> tuple[float, float]:
    """Reflected-difference drift sum at index m, with an integral tail.

    Partial sum over j <= tail_len of 1/c_j - 1/b_j (c_j = y_{m+j} - y_m,
    b_j = y_m - y_{m-j}, using y_0 = 0 and y_{-j} = -y_j), then the same
    summand integrated against the counting density beyond the cut.  The
    error estimate is the change under halving the cut.
    """
    if m < 1:
        raise DomainError("need m >= 1")
    y = config.ensure(m + tail_len)
    ym = y[m - 1]
    j = np.arange(1, tail_len + 1)
    c = y[m + j - 1] - ym
    below = m - j  # index of y_{m-j}; 0 means y_0 = 0, negative means reflection
    yb = np.where(below >= 1, y[np.maximum(below, 1) - 1], 0.0)
    yb = np.where(below <= -1, -y[np.maximum(-below, 1) - 1], yb)
    b = ym - yb
    if np.any(c <= 0) or np.any(b <= 0):
        raise ConfigurationError("coincident initial points in the drift sum")
    terms = 1.0 / c - 1.0 / b

    def tail_from(J: int) -> float:
        cf = config.source

        def h(t):
            c_ = _invert_many(cf, np.atleast_1d(m + t))[0] - ym
            if t >= m + 1:
                b_ = ym + _invert_many(cf, np.atleast_1d(t - m))[0]
            elif t <= m - 1:
                b_ = ym - _invert_many(cf, np.atleast_1d(m - t))[0]
            else:
                b_ = ym  # the y_0 = 0 crossing region
            return 1.0 / c_ - 1.0 / b_

        if J < m + 1:
            pts = [p for p in (m - 1.0,) if J < p]
            v1, _ = _integrate.quad(h, J, m + 1.0, limit=200, points=pts or None)
            v2, _ = _integrate.quad(h, m + 1.0, np.inf, limit=300)
            return float(v1 + v2)
        val, _ = _integrate.quad(h, J, np.inf, limit=300)
        return float(val)

    full = float(np.sum(terms)) + tail_from(tail_len)
    half = float(np.sum(terms[: tail_len // 2])) + tail_from(tail_len // 2)
    return full, abs(full - half) + 1e-14


def xi_m(config: GeneralConfiguration, m: int, tail_len: int = 10000) -> float:
    return xi_m_with_error(config, m, tail_len)[0]


@dataclass(frozen=True)
class LocateResult:
    m: int
    zeta: float
    lam: float
    eta: float
    xi: float
    within_bracket: bool
    diagnostic: str = ""


def locate_m(config: GeneralConfiguration, alpha: float, S: float,
             tail_len: int = 10000) -> LocateResult:
    """Index m minimizing |zeta_m - alpha|; asserts the |zeta_m - alpha| <= lambda_m bracket.

    zeta_m = y_m - xi_m S is eventually increasing; a doubling bracket plus
    bisection finds the crossing, then a local scan settles the minimizer
    (ties toward smaller m).
    """
    if alpha <= 0 or S <= 0:
        raise DomainError("need alpha > 0 and S > 0")
    cache: dict[int, float] = {}

    def zeta(m: int) -> float:
        if m not in cache:
            cache[m] = config.y_at(m) - S * xi_m(config, m, tail_len)
        return cache[m]

    hi = max(4, int(math.ceil(float(config.source.F(alpha)))))
    while zeta(hi) < alpha:
        hi *= 2
        if hi > 10**8:
            raise ConfigurationError("failed to bracket the target height")
    lo = 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if zeta(mid) < alpha:
            lo = mid
        else:
            hi = mid
    cands = [m for m in range(max(1, lo - 3), lo + 4)]
    best = min(cands, key=lambda m: (abs(zeta(m) - alpha), m))
    lam = config.lam(best)
    ok = abs(zeta(best) - alpha) <= lam
    diag = "" if ok else (
        f"|zeta_m - alpha| = {abs(zeta(best) - alpha):.3g} exceeds lambda_m = {lam:.3g}; "
        "alpha may be below the asymptotic regime")
    return LocateResult(best, zeta(best), lam, config.eta(best),
                        float(config.y_at(best) - zeta(best)) / S, ok, diag)


@dataclass(frozen=True)
class Surrogate:
    model: _kernels.EquidistantModel
    xi: float
    zeta: float
    m: int
    eta: float

    @property
    def d(self) -> float:
        return self.model.d


def surrogate_model(config: GeneralConfiguration, alpha: float, S: float,
                    tail_len: int = 10000) -> Surrogate:
    """Equidistant stand-in near height alpha: spacing lambda(alpha), absorbing
    boundary, plus the gauge drift xi(alpha) and shift zeta(alpha)."""
    loc = locate_m(config, alpha, S, tail_len)
    if not loc.within_bracket:
        raise ConfigurationError(loc.diagnostic)
    model = _kernels.EquidistantModel(a=loc.lam, S=S, Delta=0.0, boundary="absorbing")
    return Surrogate(model, loc.xi, loc.zeta, loc.m, loc.eta)


def t_zero(config: GeneralConfiguration, loc: LocateResult) -> float:
    """Window half-width cap: min(1/(4 sqrt(eta)), m^((1+delta)^2/(2(1-delta))))."""
    delta = config.source.delta
    return min(0.25 / math.sqrt(loc.eta), loc.m ** ((1 + delta) ** 2 / (2 * (1 - delta))))


@dataclass
class ComparisonReport:
    alpha: float
    S: float
    T: float
    m: int
    lam: float
    xi: float
    zeta: float
    max_diff: float
    rms_diff: float
    bound_shape: float
    grid: list


def compare_at_height(config: GeneralConfiguration, alpha: float, S: float, T: float,
                      grid=None, tail_len: int = 10000,
                      spec: _contour.ContourSpec | None = None) -> ComparisonReport:
    """Gauge-corrected distance between the general-data absorbing kernel and
    its equidistant surrogate on a window [alpha-T, alpha+T]^2."""
    sur = surrogate_model(config, alpha, S, tail_len)
    loc_t0 = t_zero(config, LocateResult(sur.m, sur.zeta, sur.model.a, sur.eta, sur.xi, True))
    if T > loc_t0:
        raise DomainError(f"window half-width T={T} exceeds T0={loc_t0:.3g}")
    if grid is None:
        pts = np.linspace(alpha - T, alpha + T, 4)
        grid = [(float(u), float(v)) for u in pts for v in pts]
    zmax = alpha + T + 6.0 * math.sqrt(S) + math.pi * S / sur.model.a + 4.0
    data = config.initial_data(zmax)
    spec = spec or _contour.ContourSpec()

    free = _kernels.EquidistantModel(a=sur.model.a, S=S)
    k_sur = _kernels.boundary_combine(_kernels.kernel_LS(free), "absorbing")

    diffs = []
    rows = []
    for (u, v) in grid:
        kg = _contour.kernel_infinite_absorbing(data, S, u, v, spec)
        lhs = math.exp(-sur.xi * (u - v)) * kg
        rhs = float(k_sur.evaluate(u - sur.zeta, v - sur.zeta))
        diffs.append(abs(lhs - rhs))
        rows.append((u, v, lhs, rhs, abs(lhs - rhs)))
    diffs = np.asarray(diffs)
    delta = config.source.delta
    # shape of the error bound with unit constants, R^2 at the low end
    eps = 0.05
    lam = sur.model.a
    r2 = max((S / lam) ** (2 / (1 - eps)), T ** (1 + delta + eps) * S, T ** (1 + eps) * S / lam)
    shape = lam * S ** (-1.5) * math.exp(-r2 / (8 * S)) + (T * T + r2) * sur.m ** (-(1 - delta) ** 2 / (1 + delta)) / S
    return ComparisonReport(alpha, S, T, sur.m, lam, sur.xi, sur.zeta,
                            float(np.max(diffs)), float(np.sqrt(np.mean(diffs**2))),
                            shape, rows)


@dataclass(frozen=True)
class UnfoldedResult:
    kernel: _kernels.KernelHandle
    d: float
    lam: float
    height: float
    zeta: float


def unfolded_model(alpha: float, tail_len: int = 4000) -> UnfoldedResult:
    """Unit-density rescaling of the unfolding-counting model at height alpha.

    alpha is the height in unfolded coordinates; the surrogate equidistant
    kernel at the matching physical height is rescaled through G = F^{-1},
    giving a locally sine-plus-oscillation kernel with d = 2 pi / lambda^2.
    """
    cf = unfolding_counting()
    if alpha < 4.0:
        raise DomainError("alpha below the regime where the unfolding formula applies")
    config = GeneralConfiguration(cf, prefix_len=256)
    alpha_phys = invert_F(cf, alpha)
    sur = surrogate_model(config, alpha_phys, 1.0, tail_len)
    lam = sur.model.a
    d = 2 * math.pi / lam**2

    free = _kernels.EquidistantModel(a=lam, S=1.0)
    base = _kernels.kernel_LS_approx(free)

    def phys_kernel(p, q):
        return base.evaluate(np.asarray(p, float) - sur.zeta, np.asarray(q, float) - sur.zeta)

    handle = _kernels.KernelHandle(phys_kernel, domain=(-math.inf, math.inf),
                                   representation="approximate", symmetric=False,
                                   decay=_kernels.DecayModel("ls", a=lam, d=free.d),
                                   label="surrogate-physical")

    G = lambda x: _invert_many(cf, np.atleast_1d(np.asarray(x, float))).reshape(np.shape(x))
    G_prime = lambda x: 1.0 / cf.F_prime(G(x))
    rescaled = _kernels.rescale(handle, G, G_prime)
    rescaled = _kernels.KernelHandle(rescaled.evaluate, domain=(1.0, math.inf),
                                     representation="composite", symmetric=False,
                                     decay=_kernels.DecayModel("ls", a=1.0, d=d),
                                     label=f"unfolded(alpha={alpha:g})")
    return UnfoldedResult(rescaled, d, lam, alpha, sur.zeta)
