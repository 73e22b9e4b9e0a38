"""Contour-integral evaluation of the finite-N and general-initial-data kernels.

Finite N with finite endpoint time: the double contour integral over a
vertical line and a closed rectangle around the initial points, together with
its residue-sum twin (a k-sum of single line integrals).  The two forms are
related by the residue theorem and agree to quadrature accuracy; both are
exposed so they can cross-check each other.

The T -> infinity kernels (free and absorbing/reflecting) and the N -> infinity
absorbing kernel for general initial data follow the same pattern: straight
contour segments, composite Gauss-Legendre panels per segment, and all products
over initial points accumulated in log space with joint max-subtraction so that
N in the hundreds cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigurationError, DomainError, NumericalError

__all__ = [
    "ContourSpec",
    "FiniteModel",
    "kernel_finite_ST",
    "kernel_finite_ST_residue",
    "kernel_finite_free",
    "kernel_finite_boundary",
    "kernel_finite_boundary_residue",
    "kernel_infinite_absorbing",
    "GeneralInitialData",
]

_LOG_EPS = 37.0  # exp(-37) ~ 8.5e-17, Gaussian truncation exponent
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class ContourSpec:
    """Contour geometry and quadrature density.

    L_offset: abscissa of the vertical line (None = choose per operation).
    M: half-height of the horizontal-line pair used by the N=infinity kernel.
    trunc: half-length to which unbounded contour legs are truncated; when 0 it
    is derived from the Gaussian factor so the discarded tail is below 1e-14.
    nodes_per_unit: Gauss-Legendre nodes per unit of contour length.
    """

    L_offset: float | None = None
    M: float | None = None
    trunc: float = 0.0
    nodes_per_unit: int = 40

    def refined(self) -> "ContourSpec":
        return replace(self, nodes_per_unit=2 * self.nodes_per_unit)


@dataclass(frozen=True)
class FiniteModel:
    """Finite-N path model: initial points y, equidistant final points.

    Free boundary requires odd N (final points a(j-n), j=0..2n); the
    absorbing/reflecting models require strictly positive initial points.
    """

    y: np.ndarray
    z_spacing: float
    S: float
    T: float = math.inf
    boundary: Literal["free", "absorbing", "reflecting"] = "free"

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size == 0 or np.any(np.diff(y) <= 0):
            raise ConfigurationError("initial points must be strictly increasing")
        if self.boundary in ("absorbing", "reflecting") and y[0] <= 0:
            raise ConfigurationError("boundary models need initial points > 0")
        if self.boundary == "free" and self.T != math.inf and y.size % 2 == 0:
            raise ConfigurationError("free finite-T model needs odd N = 2n+1")
        if self.z_spacing <= 0 or self.S <= 0 or self.T <= 0:
            raise ConfigurationError("need z_spacing, S, T > 0")
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.y.size


# ---------------------------------------------------------------------------
# quadrature primitives

def _segment(z0: complex, z1: complex, nodes_per_unit: int, order: int = 12):
    """Composite Gauss-Legendre nodes/weights along a straight segment."""
    length = abs(z1 - z0)
    npan = max(1, int(np.ceil(length * nodes_per_unit / order)))
    xg, wg = leggauss(order)
    edges = np.linspace(0.0, 1.0, npan + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1] - edges[0])
    s = (mids + half * xg[None, :]).ravel()
    dz = z1 - z0
    return z0 + s * dz, np.tile(half * wg, npan) * dz


def _vertical_line(L: float, tmax: float, nodes_per_unit: int):
    return _segment(L - 1j * tmax, L + 1j * tmax, nodes_per_unit)


def _rectangle(x0: float, x1: float, h: float, nodes_per_unit: int):
    """Closed counterclockwise rectangle [x0,x1] x [-h,h]."""
    corners = (x0 - 1j * h, x1 - 1j * h, x1 + 1j * h, x0 + 1j * h, x0 - 1j * h)
    zs, ws = [], []
    for a, b in zip(corners[:-1], corners[1:]):
        z, w = _segment(a, b, nodes_per_unit)
        zs.append(z)
        ws.append(w)
    return np.concatenate(zs), np.concatenate(ws)


def _as_real(value: complex, what: str) -> float:
    scale = max(1.0, abs(value))
    if abs(value.imag) / scale > IMAG_TOL:
        raise NumericalError(f"{what}: imaginary residual {value.imag:.3e} exceeds tolerance",
                             residual=abs(value.imag))
    return float(value.real)


# ---------------------------------------------------------------------------
# finite N, finite T, free boundary (double contour + residue twin)

def _st_params(model: FiniteModel):
    if model.boundary != "free" or not math.isfinite(model.T):
        raise ConfigurationError("finite-ST kernel is the free-boundary finite-T model")
    a, S, T = model.z_spacing, model.S, model.T
    tau = T + S
    n = (model.N - 1) // 2
    c = tau / T
    return a, S, T, tau, n, c


def _st_contours(model: FiniteModel, spec: ContourSpec, v: float):
    a, S, T, tau, n, c = _st_params(model)
    y = model.y
    margin = 0.5 * a
    x0, x1 = y[0] - margin, y[-1] + margin
    L = spec.L_offset if spec.L_offset is not None else y[0] - 0.7 * a
    if x0 - 0.1 * a < L < x1 + 0.1 * a:
        raise ConfigurationError(
            f"vertical line at {L} is within 0.1*a of the closed contour [{x0}, {x1}]")
    sigma2 = S * tau / T  # Gaussian scale of the w integrand
    tmax = spec.trunc or (math.sqrt(2 * sigma2 * _LOG_EPS) + abs(L - c * v) + 2.0)
    h = 0.5 * a
    return L, tmax, x0, x1, h


def kernel_finite_ST(model: FiniteModel, spec: ContourSpec, u: float, v: float) -> float:
    """Finite-N free kernel at times (S, T) via the double contour integral.

    The vertical line carries the w integration; a closed rectangle with
    margin a/2 surrounds the initial points and carries the z integration.
    """
    a, S, T, tau, n, c = _st_params(model)
    y = model.y
    L, tmax, x0, x1, h = _st_contours(model, spec, v)
    wn, ww = _vertical_line(L, tmax, spec.nodes_per_unit)
    zn, zw = _rectangle(x0, x1, h, spec.nodes_per_unit)

    ey = np.exp(a * y / tau)
    coef = T / (2.0 * S * tau)

    def log_w(w):
        return coef * (w - c * v) ** 2 - (a * n / tau) * w + np.sum(np.log(np.exp(a * w[:, None] / tau) - ey[None, :]), axis=1)

    def log_z(z):
        return -coef * (z - c * u) ** 2 + (a * n / tau) * z - np.sum(np.log(np.exp(a * z[:, None] / tau) - ey[None, :]), axis=1)

    lw = log_w(wn)
    lz = log_z(zn)
    mw, mz = np.max(lw.real), np.max(lz.real)
    fw = ww * np.exp(lw - mw)
    fz = zw * np.exp(lz - mz)
    ew = np.exp(a * wn / tau)
    ez = np.exp(a * zn / tau)
    # pole-free coupling: 1/(e^{a(w-z)/tau} - 1) = e^{az/tau}/(e^{aw/tau} - e^{az/tau})
    total = 0j
    for lo in range(0, zn.size, 4096):
        sl = slice(lo, lo + 4096)
        coup = ez[None, sl] / (ew[:, None] - ez[None, sl])
        total += np.sum(fw[:, None] * (fz[sl] * coup))
    pref = a * math.exp((u * u - v * v) / (2 * T)) / ((2j * math.pi) ** 2 * S * tau)
    value = pref * total * np.exp(mw + mz)
    return _as_real(value, "kernel_finite_ST")


def kernel_finite_ST_residue(model: FiniteModel, spec: ContourSpec, u: float, v: float) -> float:
    """Residue-sum twin of kernel_finite_ST: a k-sum of single line integrals."""
    a, S, T, tau, n, c = _st_params(model)
    y = model.y
    L, tmax, *_ = _st_contours(model, spec, v)
    wn, ww = _vertical_line(L, tmax, spec.nodes_per_unit)
    ey = np.exp(a * y / tau)
    coef = T / (2.0 * S * tau)

    lw_base = coef * (wn - c * v) ** 2 - (a * n / tau) * wn
    log_prod_w = np.log(np.exp(a * wn[:, None] / tau) - ey[None, :])  # (w, j)
    total = 0j
    mglob = None
    terms = []
    for k in range(model.N):
        mask = np.arange(model.N) != k
        lw = lw_base + np.sum(log_prod_w[:, mask], axis=1)
        lden = np.sum(np.log(ey[k] - ey[mask] + 0j))
        lk = -coef * (y[k] - c * u) ** 2 + (a * n / tau) * y[k]
        logs = lw - lden + lk
        terms.append(logs)
    m = max(np.max(t.real) for t in terms)
    for logs in terms:
        total += np.sum(ww * np.exp(logs - m))
    value = total * np.exp(m) * math.exp((u * u - v * v) / (2 * T)) / (2j * math.pi * S)
    return _as_real(value, "kernel_finite_ST_residue")


# ---------------------------------------------------------------------------
# finite N, T = infinity, free boundary (k-sum of line integrals)

def kernel_finite_free(model: FiniteModel, u: float, v: float,
                       spec: ContourSpec = ContourSpec()) -> float:
    """Free-boundary T=infinity kernel for equidistant initial points.

    Implements the k-sum of single contour integrals; the k window is cut when
    the Gaussian weight exp(-(y_k-u)^2/2S) drops below working precision.
    """
    if model.boundary != "free" or math.isfinite(model.T):
        raise ConfigurationError("kernel_finite_free is the free-boundary T=infinity kernel")
    y, a, S = model.y, model.z_spacing, model.S
    gaps = np.diff(y)
    if y.size > 1 and (np.max(gaps) - np.min(gaps)) > 1e-9 * a:
        raise ConfigurationError("kernel_finite_free requires equidistant initial points")
    # integrand is entire in w, so the line can sit at v (best conditioning);
    # only the w = y_k division below needs the nodes off the initial points
    L = spec.L_offset if spec.L_offset is not None else float(v)
    if np.any(np.abs(y - L) < 1e-9 * a):
        L = L + 0.317 * a
    drift = math.pi * S / a
    tmax = spec.trunc or (math.sqrt(2 * S * _LOG_EPS) + drift + abs(v - L) + 2.0)
    wn, ww = _vertical_line(L, tmax, spec.nodes_per_unit)

    keep = np.abs(y - u) <= math.sqrt(2 * S * (_LOG_EPS + 8)) + a
    if not np.any(keep):
        keep = np.abs(y - u) == np.min(np.abs(y - u))
    idx = np.nonzero(keep)[0]
    log_all = np.log(wn[:, None] - y[None, :])  # (w, j)
    lP = np.sum(log_all, axis=1)
    lw_base = (wn - v) ** 2 / (2 * S) + lP
    terms = []
    for k in idx:
        lden = np.sum(np.log(y[k] - np.delete(y, k) + 0j))
        logs = lw_base - log_all[:, k] - lden - (y[k] - u) ** 2 / (2 * S)
        terms.append(logs)
    m = max(np.max(t.real) for t in terms)
    total = sum(np.sum(ww * np.exp(t - m)) for t in terms)
    value = total * np.exp(m) / (2j * math.pi * S)
    return _as_real(value, "kernel_finite_free")


# ---------------------------------------------------------------------------
# finite N, T = infinity, absorbing/reflecting boundary

def _boundary_geometry(model: FiniteModel, spec: ContourSpec, v: float):
    y, S = model.y, model.S
    gap = float(np.median(np.diff(y))) if y.size > 1 else y[0]
    margin = min(0.5 * gap, 0.45 * y[0])
    h = min(0.5 * gap, 0.5 * math.sqrt(S))
    x0, x1 = y[0] - margin, y[-1] + margin
    L = spec.L_offset if spec.L_offset is not None else 0.0
    if x0 - 0.05 * gap < L < x1 + 0.05 * gap:
        raise ConfigurationError("vertical line intersects the closed contour")
    drift = math.pi * S / gap
    tmax = spec.trunc or (math.sqrt(2 * S * _LOG_EPS) + drift + abs(v - L) + 2.0)
    return L, tmax, x0, x1, h


def kernel_finite_boundary(model: FiniteModel, u: float, v: float,
                           spec: ContourSpec = ContourSpec()) -> float:
    """Absorbing/reflecting T=infinity kernel via the double contour form."""
    if model.boundary not in ("absorbing", "reflecting"):
        raise ConfigurationError("model.boundary must be absorbing or reflecting")
    if math.isfinite(model.T):
        raise ConfigurationError("boundary kernels are the T=infinity limit")
    y, S = model.y, model.S
    sign = -1.0 if model.boundary == "absorbing" else 1.0
    L, tmax, x0, x1, h = _boundary_geometry(model, spec, v)
    wn, ww = _vertical_line(L, tmax, spec.nodes_per_unit)
    zn, zw = _rectangle(x0, x1, h, spec.nodes_per_unit)

    y2 = y * y
    lw = (wn - v) ** 2 / (2 * S) + np.sum(np.log(wn[:, None] ** 2 - y2[None, :]), axis=1)
    gz = np.exp(-(zn - u) ** 2 / (2 * S)) + sign * np.exp(-(zn + u) ** 2 / (2 * S))
    lz = -np.sum(np.log(zn[:, None] ** 2 - y2[None, :]), axis=1)
    mw, mz = np.max(lw.real), np.max(lz.real)
    fw = ww * np.exp(lw - mw)
    fz = zw * gz * np.exp(lz - mz)
    total = 0j
    w2 = wn**2
    z2 = zn**2
    for lo in range(0, zn.size, 4096):
        sl = slice(lo, lo + 4096)
        if model.boundary == "absorbing":
            coup = 2.0 * wn[:, None] / (w2[:, None] - z2[None, sl])
        else:
            coup = 2.0 * zn[None, sl] / (w2[:, None] - z2[None, sl])
        total += np.sum(fw[:, None] * fz[None, sl] * coup)
    value = total * np.exp(mw + mz) / ((2j * math.pi) ** 2 * S)
    return _as_real(value, "kernel_finite_boundary")


def kernel_finite_boundary_residue(model: FiniteModel, u: float, v: float,
                                   spec: ContourSpec = ContourSpec()) -> float:
    """Residue-sum twin of the boundary kernels (k-sum over initial points)."""
    if model.boundary not in ("absorbing", "reflecting"):
        raise ConfigurationError("model.boundary must be absorbing or reflecting")
    y, S = model.y, model.S
    sign = -1.0 if model.boundary == "absorbing" else 1.0
    gap = float(np.median(np.diff(y))) if y.size > 1 else y[0]
    # integrand entire in w: park the line at v, off the +-y_k points
    L = spec.L_offset if spec.L_offset is not None else float(v)
    if np.any(np.abs(y - abs(L)) < 1e-9 * gap):
        L = L + 0.317 * gap
    drift = math.pi * S / gap
    tmax = spec.trunc or (math.sqrt(2 * S * _LOG_EPS) + drift + abs(v - L) + 2.0)
    wn, ww = _vertical_line(L, tmax, spec.nodes_per_unit)
    y2 = y * y
    log_all = np.log(wn[:, None] ** 2 - y2[None, :])  # (w, j)
    lw_base = (wn - v) ** 2 / (2 * S) + np.sum(log_all, axis=1)

    keep = np.abs(y - u) <= math.sqrt(2 * S * (_LOG_EPS + 8)) + gap
    keep |= (y + u) <= math.sqrt(2 * S * (_LOG_EPS + 8)) + gap
    if not np.any(keep):
        keep = np.abs(y - u) == np.min(np.abs(y - u))
    terms = []
    coefs = []
    for k in np.nonzero(keep)[0]:
        lden = np.sum(np.log(y2[k] - np.delete(y2, k) + 0j))
        logs = lw_base - log_all[:, k] - lden
        bracket = math.exp(-(y[k] - u) ** 2 / (2 * S)) + sign * math.exp(-(y[k] + u) ** 2 / (2 * S))
        if model.boundary == "absorbing":
            terms.append(logs + np.log(wn / y[k]))
        else:
            terms.append(logs)
        coefs.append(bracket)
    m = max(np.max(t.real) for t in terms)
    total = sum(c * np.sum(ww * np.exp(t - m)) for c, t in zip(coefs, terms))
    value = total * np.exp(m) / (2j * math.pi * S)
    return _as_real(value, "kernel_finite_boundary_residue")


# ---------------------------------------------------------------------------
# N = infinity absorbing kernel for general initial data (Thm-2.3 machinery)

@dataclass
class GeneralInitialData:
    """Initial points y_1 < y_2 < ... with sum 1/y_j^2 < infinity.

    ``y`` stores a long prefix; ``tail_sums(k)`` must return the analytic
    estimate of sum_{j>len(y)} y_j^-k for k in {2, 4} (supplied by the builder,
    e.g. from the counting-function density).  ``mean_gap`` is the local
    spacing near the evaluation window, used to tune contour geometry.
    """

    y: np.ndarray
    tail_inv2: float
    tail_inv4: float
    mean_gap: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 8 or y[0] <= 0 or np.any(np.diff(y) <= 0):
            raise ConfigurationError("need a long, strictly increasing, positive prefix")
        object.__setattr__(self, "y", y)
        inv2 = np.cumsum((1.0 / y**2)[::-1])[::-1]
        inv4 = np.cumsum((1.0 / y**4)[::-1])[::-1]
        object.__setattr__(self, "_suffix_inv2", inv2)
        object.__setattr__(self, "_suffix_inv4", inv4)

    def log_even_product(self, z: np.ndarray, radius_factor: float = 30.0) -> np.ndarray:
        """log prod_j (1 - z^2/y_j^2), exact factors out to radius_factor*max|z|
        and a two-term (z^2, z^4) analytic tail beyond."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zmax = float(np.max(np.abs(z)))
        y = self.y
        J = int(np.searchsorted(y, radius_factor * max(zmax, 1e-12)))
        J = min(max(J, 8), y.size)
        t2 = (self._suffix_inv2[J] if J < y.size else 0.0) + self.tail_inv2
        t4 = (self._suffix_inv4[J] if J < y.size else 0.0) + self.tail_inv4
        z2 = z * z
        logs = np.sum(np.log(1.0 - z2[:, None] / (y[None, :J] ** 2)), axis=1)
        return logs - z2 * t2 - 0.5 * z2 * z2 * t4


def _segment_cauchy(a: complex, b: complex, w: np.ndarray) -> np.ndarray:
    """Exact int_a^b dz/(z-w) for a straight segment.

    The argument swept by z-w along a straight segment is below pi in modulus
    for any w off the segment, so the principal log of the endpoint ratio is
    the correct branch; on-segment w gives the principal value.
    """
    return np.log((b - w) / (a - w))


def _kstar(data: GeneralInitialData, S: float, u: float, v: float,
           spec: ContourSpec) -> complex:
    """K*(u,v): double-contour piece over (vertical line) x (line pair at +-iM)
    plus the vertical-segment piece.

    The line pair crosses the vertical w line, so the 1/(z-w) kernel is
    regularized by subtracting the difference quotient; the subtracted part is
    restored through the exact Cauchy integral of each truncated segment.
    """
    lam = data.mean_gap
    M = spec.M if spec.M is not None else max(math.pi * S / lam, 0.35)
    if spec.L_offset is not None:
        L = spec.L_offset
    else:
        # park the w line mid-gap between initial points so 1/F(w) stays bounded
        target = 0.5 * (u + v)
        y = data.y
        i = int(np.searchsorted(y, target))
        if i == 0:
            L = 0.5 * y[0]
        elif i >= y.size:
            L = y[-1] + 0.5 * lam
        else:
            L = 0.5 * (y[i - 1] + y[i])
    drift = math.pi * S / lam
    tw = spec.trunc or (math.sqrt(2 * S * _LOG_EPS) + drift + abs(v - L) + 2.0)
    tz = spec.trunc or (math.sqrt(2 * S * _LOG_EPS + M * M) + drift + 2.0)

    wn, ww = _vertical_line(L, tw, spec.nodes_per_unit)
    # counterclockwise strip boundary: lower line right-to-left, upper left-to-right
    lo_a, lo_b = u + tz - 1j * M, u - tz - 1j * M
    hi_a, hi_b = u - tz + 1j * M, u + tz + 1j * M
    z_lo, zw_lo = _segment(lo_a, lo_b, spec.nodes_per_unit)
    z_hi, zw_hi = _segment(hi_a, hi_b, spec.nodes_per_unit)
    zn = np.concatenate([z_lo, z_hi])
    zw = np.concatenate([zw_lo, zw_hi])

    logF_w = data.log_even_product(wn)
    logF_z = data.log_even_product(zn)
    lgz = -(zn - u) ** 2 / (2 * S) - np.log(zn) - logF_z
    lgw = -(wn - u) ** 2 / (2 * S) - np.log(wn) - logF_w
    lfw = (wn - v) ** 2 / (2 * S) + np.log(wn) + logF_w

    mz = float(np.max(lgz.real))
    mw = float(np.max(lfw.real))
    gz = np.exp(lgz - mz)
    gw = np.exp(lgw - mz)  # shares the z-side normalization
    fw = ww * np.exp(lfw - mw)

    inner = np.zeros(wn.size, dtype=complex)
    for sl_lo in range(0, zn.size, 4096):
        sl = slice(sl_lo, sl_lo + 4096)
        dq = (gz[None, sl] - gw[:, None]) / (zn[None, sl] - wn[:, None])
        inner += dq @ zw[sl]
    cauchy = _segment_cauchy(lo_a, lo_b, wn) + _segment_cauchy(hi_a, hi_b, wn)
    inner += gw * cauchy
    k1 = (fw @ inner) * math.exp(mw + mz) / ((2j * math.pi) ** 2 * S)

    # vertical-segment piece: elementary integral over [L-iM, L+iM]
    if u == v:
        seg = 2j * M
    else:
        cc = (u - v) / S
        seg = math.exp((u - v) * (2 * L - u - v) / (2 * S)) * 2j * math.sin(M * cc) / cc
    k2 = seg / (2j * math.pi * S)
    return k1 + k2


def kernel_infinite_absorbing(data: GeneralInitialData, S: float, u: float, v: float,
                              spec: ContourSpec = ContourSpec()) -> float:
    """N=infinity absorbing kernel for general initial data: K*(u,v) - K*(-u,v)."""
    if S <= 0:
        raise ConfigurationError("need S > 0")
    if u < 0 or v < 0:
        raise DomainError("absorbing kernel lives on the half line")
    value = _kstar(data, S, u, v, spec) - _kstar(data, S, -u, v, spec)
    return _as_real(value, "kernel_infinite_absorbing")
