"""Special functions shared by the kernel, variance and contour machinery.

Jacobi theta functions are evaluated from their defining series with a
provable truncation bound.  The sine/cosine integrals, the complex auxiliary
pair (f, g) and integer-order Bessel J are backed by scipy.special behind the
domain contracts used elsewhere in the package; half-integer Bessel orders use
the elementary closed forms.  Canonical products over point sequences with
polynomial counting growth are evaluated from a stored prefix plus an analytic
tail correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from .errors import DomainError

__all__ = [
    "EULER_GAMMA",
    "DomainError",
    "ThetaArg",
    "PointSequence",
    "theta",
    "theta_x_derivative",
    "sin_integral",
    "cos_integral",
    "fg",
    "bessel_j",
    "canonical_product",
]

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class ThetaArg:
    """Argument pair (x; tau) of a Jacobi theta function, Im(tau) > 0."""

    x: complex
    tau: complex

    def __post_init__(self):
        if complex(self.tau).imag <= 0:
            raise DomainError(f"theta series requires Im(tau) > 0, got tau={self.tau}")


def _theta_trunc(im_tau: float, tol: float) -> int:
    # terms decay like exp(-pi*Im(tau)*n^2); solve for the first negligible index
    return int(np.ceil(np.sqrt(max(-np.log(tol), 1.0) / (np.pi * im_tau)))) + 2


def _theta_terms(k: int, x, tau: complex, deriv: int, tol: float):
    """Series terms of theta_k (3-term index window chosen from tol), with
    optional term-wise x-derivative of the given order."""
    nmax = _theta_trunc(tau.imag, tol)
    n = np.arange(-nmax, nmax + 1)
    x = np.asarray(x, dtype=complex)[..., None]
    if k in (3, 4):
        freq = 2j * np.pi * n
        terms = np.exp(1j * np.pi * tau * n**2 + freq * x)
        if k == 4:
            terms = terms * (-1.0) ** (n % 2)
    elif k in (1, 2):
        freq = 1j * np.pi * (2 * n - 1)
        terms = np.exp(1j * np.pi * tau * (n - 0.5) ** 2 + freq * x)
        if k == 1:
            terms = 1j * terms * (-1.0) ** (n % 2)
    else:
        raise DomainError(f"theta index must be 1..4, got {k}")
    if deriv:
        terms = terms * freq**deriv
    return terms


def theta(k: int, arg: ThetaArg, tol: float = 1e-14) -> complex:
    """Jacobi theta function theta_k(x; tau) from the defining series.

    The sum is truncated once the Gaussian term weight drops below ``tol``;
    the discarded tail is geometrically dominated by the first dropped term.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if complex(arg.tau).imag <= 0:
        raise DomainError(f"theta series requires Im(tau) > 0, got tau={arg.tau}")
    return complex(_theta_terms(k, arg.x, complex(arg.tau), 0, tol).sum(axis=-1))


def theta_x_derivative(k: int, order: int, arg: ThetaArg, tol: float = 1e-14) -> complex:
    """d^order/dx^order of theta_k at (x; tau), differentiating the series term-wise."""
    if complex(arg.tau).imag <= 0:
        raise DomainError(f"theta series requires Im(tau) > 0, got tau={arg.tau}")
    return complex(_theta_terms(k, arg.x, complex(arg.tau), order, tol).sum(axis=-1))


def _theta_vals(k: int, x, tau: complex, tol: float = 1e-14):
    """Vectorized theta_k over an array of x (internal fast path)."""
    return _theta_terms(k, x, tau, 0, tol).sum(axis=-1)


def sin_integral(A):
    """Si(A) = integral of sin(y)/y over [0, A], A >= 0."""
    A = np.asarray(A, dtype=float)
    if np.any(A < 0):
        raise DomainError("Si is restricted to A >= 0 here")
    si, _ = _sp.sici(A)
    return si if si.ndim else float(si)


def cos_integral(A):
    """Ci(A) = -integral of cos(y)/y over [A, inf), A > 0."""
    A = np.asarray(A, dtype=float)
    if np.any(A <= 0):
        raise DomainError("Ci has a logarithmic singularity at 0; need A > 0")
    _, ci = _sp.sici(A)
    return ci if ci.ndim else float(ci)


def fg(z: complex) -> tuple[complex, complex]:
    """The auxiliary integrals f(z) = int_0^inf sin t/(t+z) dt and
    g(z) = int_0^inf cos t/(t+z) dt.

    Both are recovered from the single complex integral
    g + i f = int_0^inf e^{it}/(t+z) dt = e^{-iz} E1(-iz), combining the
    values at z and conj(z).  Valid for Re z > 0, or Re z = 0 with Im z != 0.
    """
    z = complex(z)
    if z.real < 0 or (z.real == 0 and z.imag == 0):
        raise DomainError("f, g are defined for Re z > 0 or Re z = 0, Im z != 0")
    E = np.exp(-1j * z) * _sp.exp1(-1j * z)
    zc = np.conj(z)
    Ec = np.conj(np.exp(-1j * zc) * _sp.exp1(-1j * zc))
    return complex((E - Ec) / 2j), complex((E + Ec) / 2)


def bessel_j(nu: float, x) -> float:
    """Bessel J_nu for nu in {-1/2, 1/2} (closed forms) or nonnegative integers."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_j requires x >= 0")
    if nu == 0.5:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x == 0, 0.0, np.sqrt(2.0 / (np.pi * np.where(x == 0, 1, x))) * np.sin(x))
    elif nu == -0.5:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x == 0, np.inf, np.sqrt(2.0 / (np.pi * np.where(x == 0, 1, x))) * np.cos(x))
    elif float(nu).is_integer() and nu >= 0:
        out = _sp.jv(int(nu), x)
    else:
        raise DomainError(f"unsupported Bessel order nu={nu}; need -1/2, 1/2 or integer >= 0")
    return out if out.ndim else float(out)


@dataclass
class PointSequence:
    """Strictly increasing positive points c_1 < c_2 < ... with counting
    function n(t) <= C * t^(1+delta), delta in [0, 1).

    ``tail_inv_sq`` optionally stores sum_{j > prefix} 1/c_j^2 when the builder
    knows the density exactly; otherwise a power-law extrapolation from the
    stored suffix is used for the canonical-product tail.
    """

    values: np.ndarray
    growth_exponent: float
    C_growth: float = field(default=0.0)
    tail_inv_sq: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("PointSequence needs a nonempty 1-d prefix")
        if v[0] <= 0 or np.any(np.diff(v) <= 0):
            raise DomainError("PointSequence must be strictly increasing and positive")
        if not 0 <= self.growth_exponent < 1:
            raise DomainError("growth exponent must lie in [0, 1)")
        self.values = v
        if self.C_growth <= 0:
            # smallest C consistent with the stored prefix
            self.C_growth = float(np.max(np.arange(1, v.size + 1) / v ** (1.0 + self.growth_exponent)))
        else:
            j = np.arange(1, v.size + 1)
            if np.any(j > self.C_growth * v ** (1.0 + self.growth_exponent) * (1 + 1e-9)):
                raise DomainError("stored prefix violates the counting bound n(t) <= C t^(1+delta)")

    def __len__(self) -> int:
        return self.values.size

    def tail_sums(self) -> tuple[float, float]:
        """Estimates of sum_{j>J} 1/c_j^2 and 1/c_j^3 beyond the stored prefix.

        Power-law tail c_j ~ c_J (j/J)^(1/(1+delta)) integrated in j; when the
        builder supplied an exact tail_inv_sq it wins for the square sum.
        """
        J = self.values.size
        cJ = self.values[-1]
        p = 1.0 + self.growth_exponent
        t2 = J / cJ**2 * p / (2.0 - p) if p < 2.0 else np.inf
        t3 = J / cJ**3 * p / (3.0 - p)
        if self.tail_inv_sq is not None:
            t2 = self.tail_inv_sq
        return float(t2), float(t3)


def canonical_product(seq: PointSequence, z: complex, return_err: bool = False):
    """Canonical product P(z) = prod_j (1 - z/c_j) exp(z/c_j).

    The stored prefix is multiplied out exactly (in log space); the remaining
    tail contributes exp(-z^2/2 * sum_{j>J} 1/c_j^2) to second order, with the
    first neglected (cubic) term reported as the relative error estimate.
    """
    z = complex(z)
    c = seq.values
    if z == 0:
        return (1.0 + 0j, 0.0) if return_err else 1.0 + 0j
    hit = np.isclose(c, z.real, rtol=1e-15, atol=0.0) if z.imag == 0 else np.zeros(1, bool)
    if z.imag == 0 and np.any(hit):
        return (0.0 + 0j, 0.0) if return_err else 0.0 + 0j
    w = z / c
    log_terms = np.log(1.0 - w) + w
    t2, t3 = seq.tail_sums()
    log_tail = -(z * z) * t2 / 2.0
    val = np.exp(np.sum(log_terms) + log_tail)
    if not return_err:
        return complex(val)
    err = abs(val) * abs(z) ** 3 * t3 / 3.0
    return complex(val), float(err)
