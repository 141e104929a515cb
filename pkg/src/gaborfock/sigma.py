"""Weierstrass sigma function of the square lattice Z + iZ.

Production evaluation reduces ``z`` to the nearest lattice point ``v`` and a
remainder ``u`` in the unit cell, using the quasi-periodicity law

    sigma(u + v) = eps(v) * exp(eta(v) * (u + v/2)) * sigma(u),
    eps(m + in) = (-1)**(m + n + m*n),   eta(m + in) = m*eta_1 + n*eta_i,

and evaluates ``sigma(u)/u`` on the cell by a rapidly convergent q-product.
Everything is carried as a complex logarithm so that ``|z|`` well beyond 10
stays representable.

An independent evaluator, :class:`DirectProductSigma`, multiplies the
canonical product directly (grouped in orbits of the fourfold rotation) and
adds the exact lattice-sum tail; it never uses the quasi-period constants and
serves as the oracle for the reduced path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, zeta

from .errors import NotALatticePointError

__all__ = [
    "ETA_1",
    "ETA_I",
    "DirectProductSigma",
    "SigmaEvaluator",
    "SigmaPrime",
    "eisenstein_sum",
    "growth_ratio",
    "is_lattice_point",
    "lattice_parity",
    "log_sigma",
    "log_sigma0",
    "log_sigma_divided",
    "quasi_period_constants",
    "sigma",
    "sigma0",
    "sigma_prime_lattice",
]


def quasi_period_constants() -> tuple[complex, complex]:
    """Solve for (eta_1, eta_i) from two linear relations.

    * Legendre relation for periods (1, i):   eta_1 * i - eta_i * 1 = 2*pi*i.
    * Fourfold symmetry sigma(i z) = i sigma(z) gives zeta(i z) = -i zeta(z),
      hence eta_i = 2 zeta(i/2) = -i * eta_1, i.e.  i*eta_1 + eta_i = 0.
    """
    a = np.array([[1j, -1.0], [1j, 1.0]], dtype=complex)
    b = np.array([2j * np.pi, 0.0], dtype=complex)
    eta_1, eta_i = np.linalg.solve(a, b)
    # drop round-off components of the 2x2 solve
    def clean(c):
        return complex(c.real if abs(c.real) > 1e-14 else 0.0, c.imag if abs(c.imag) > 1e-14 else 0.0)

    return clean(eta_1), clean(eta_i)


ETA_1, ETA_I = quasi_period_constants()

_Q2 = float(np.exp(-2.0 * np.pi))  # q**2 with q = exp(i pi tau), tau = i
_CELL_TERMS = 8
_Q2K = _Q2 ** np.arange(1, _CELL_TERMS + 1)
_CELL_DENOM = (1.0 - _Q2K) ** 2


def _asc(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _ret(a: np.ndarray):
    return a[()] if a.ndim == 0 else a


def lattice_parity(m, n):
    """Sign exponent of the multiplier: eps(m + in) = (-1)**(m + n + m n)."""
    m = np.asarray(m, dtype=np.int64)
    n = np.asarray(n, dtype=np.int64)
    return (m + n + m * n) & 1


def _log_cell_ratio(u: np.ndarray) -> np.ndarray:
    """log(sigma(u)/u) for u in (or near) the unit cell.

    sigma(u) = (1/pi) exp(eta_1 u^2 / 2) sin(pi u) prod_k (1 - 2 q^2k cos 2 pi u + q^4k)/(1 - q^2k)^2
    with q = exp(-pi); the ratio form keeps u = 0 regular.
    """
    c = np.cos(2.0 * np.pi * u)
    prod = np.ones_like(u)
    for q2k, den in zip(_Q2K, _CELL_DENOM):
        prod = prod * ((1.0 - 2.0 * q2k * c + q2k * q2k) / den)
    return ETA_1 * u * u / 2.0 + np.log(np.sinc(u) * prod)


def _reduce(z: np.ndarray):
    m = np.rint(z.real)
    n = np.rint(z.imag)
    v = m + 1j * n
    return v, z - v, lattice_parity(m, n)


def log_sigma_divided(z, poles=()) -> np.ndarray | complex:
    """Complex log of sigma(z) / prod_p (z - p) for distinct lattice points p.

    When z rounds to one of the poles the removable singularity is resolved
    exactly (the factor u/(z - p) equals one), so the quotient is stable
    arbitrarily close to, and at, each pole.
    """
    z = _asc(z)
    v, u, par = _reduce(z)
    m, n = v.real, v.imag
    out = _log_cell_ratio(u) + (m * ETA_1 + n * ETA_I) * (u + v / 2.0) + 1j * np.pi * par
    hit = np.zeros(z.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p in poles:
            p = complex(p)
            if not is_lattice_point(p):
                raise NotALatticePointError(f"pole {p} is not in Z + iZ")
            here = (v.real == round(p.real)) & (v.imag == round(p.imag))
            hit |= here
            out = out - np.where(here, 0.0, np.log(np.where(here, 1.0, z - p)))
        out = out + np.where(hit, 0.0, np.log(np.where(hit, 1.0, u)))
    return _ret(out)


def log_sigma(z):
    """Complex log of sigma(z); real part is -inf on the lattice."""
    return log_sigma_divided(z, ())


def log_sigma0(z):
    """Complex log of sigma_0(z) = sigma(z)/z, with sigma_0(0) = 1."""
    return log_sigma_divided(z, (0,))


def _exp(logv):
    logv = np.asarray(logv, dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.where(np.isneginf(logv.real), 0.0, np.exp(np.where(np.isneginf(logv.real), 0.0, logv)))
    return _ret(np.asarray(out))


def sigma(z):
    return _exp(log_sigma(z))


def sigma0(z):
    return _exp(log_sigma0(z))


def is_lattice_point(w, atol: float = 1e-12) -> bool:
    w = complex(w)
    return abs(w.real - round(w.real)) <= atol and abs(w.imag - round(w.imag)) <= atol


class SigmaPrime(NamedTuple):
    value: complex  # sigma'(w)
    value0: complex  # sigma_0'(w) = sigma'(w) / w
    log_value: complex  # log sigma'(w), finite for any |w|


def sigma_prime_lattice(w) -> SigmaPrime:
    """sigma'(w) at a nonzero lattice point, from sigma'(0) = 1 and quasi-periodicity.

    Differentiating the transformation law at u = 0 gives
    sigma'(w) = eps(w) * exp(eta(w) * w / 2) = eps(w) * exp(pi |w|^2 / 2).
    """
    w = complex(w)
    if not is_lattice_point(w):
        raise NotALatticePointError(f"{w} is not in Z + iZ")
    m, n = int(round(w.real)), int(round(w.imag))
    if m == 0 and n == 0:
        raise NotALatticePointError("sigma_0' is taken at nonzero lattice points only")
    w = complex(m, n)
    log_val = (m * ETA_1 + n * ETA_I) * w / 2.0 + 1j * np.pi * int(lattice_parity(m, n))
    with np.errstate(over="ignore"):
        val = complex(np.exp(log_val))
    return SigmaPrime(val, val / w, complex(log_val))


def growth_ratio(z):
    """|sigma(z)| exp(-pi |z|^2 / 2) / dist(z, Z + iZ), extended continuously to the lattice.

    With v the nearest lattice point and u = z - v this equals
    |sigma(u)/u| exp(-pi |u|^2 / 2), which is exactly doubly periodic.
    """
    z = _asc(z)
    _, u, _ = _reduce(z)
    out = np.exp(_log_cell_ratio(u).real - np.pi * np.abs(u) ** 2 / 2.0)
    return _ret(out)


# --------------------------------------------------------------------------
# independent oracle


def eisenstein_sum(k: int) -> float:
    """G_k = sum over nonzero lattice points of lambda**-k, for k divisible by 4.

    Column sums are done in closed form (Lipschitz summation):
    G_k = 2 zeta(k) + 2 (2 pi)^k / (k-1)! * sum_p p^(k-1) / (exp(2 pi p) - 1).
    """
    if k % 4 or k < 4:
        raise ValueError("k must be a positive multiple of 4")
    p = np.arange(1, 60, dtype=float)
    logs = k * np.log(2 * np.pi) + (k - 1) * np.log(p) - gammaln(k) - np.log(np.expm1(2 * np.pi * p))
    return float(2.0 * zeta(k) + 2.0 * np.sum(np.exp(logs)))


@dataclass
class DirectProductSigma:
    """sigma(z) = z * prod (1 - z/lam) exp(z/lam + z^2/(2 lam^2)), evaluated directly.

    Grouping each orbit {lam, i lam, -lam, -i lam} turns the product into
    prod (1 - z^4/lam^4): the exponential convergence factors cancel inside
    every orbit. Orbits with max(|m|,|n|) <= L are multiplied out; the rest
    contribute -sum_j z^(4j)/j * S_4j(L), where S_4j is the sum of lam^(-4j)
    over the remaining orbit representatives.
    """

    L: int = 20
    terms: int = 8
    _reps: np.ndarray = field(init=False, repr=False)
    _tails: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = self.L
        r = np.arange(-L, L + 1)
        m, n = np.meshgrid(r, r, indexing="ij")
        lam = (m + 1j * n).ravel()
        lam = lam[lam != 0]
        self._reps = lam[(lam.real > 0) & (lam.imag >= 0)]
        outer = None
        tails = []
        for j in range(1, self.terms + 1):
            k = 4 * j
            if k <= 8:
                s = (eisenstein_sum(k) - np.sum(lam ** (-k)).real) / 4.0
            else:
                if outer is None:
                    r8 = np.arange(-8 * L, 8 * L + 1)
                    mm, nn = np.meshgrid(r8, r8, indexing="ij")
                    keep = np.maximum(np.abs(mm), np.abs(nn)) > L
                    outer = (mm[keep] + 1j * nn[keep])
                    outer = outer[(outer.real > 0) & (outer.imag >= 0)]
                s = np.sum(outer ** (-k)).real
            tails.append(s)
        self._tails = np.array(tails)

    def log_sigma(self, z):
        z = _asc(z)
        flat = z.ravel()
        out = np.empty_like(flat)
        inv4 = self._reps ** -4
        for start in range(0, flat.size, 1024):
            zz = flat[start:start + 1024]
            z4 = zz ** 4
            with np.errstate(divide="ignore"):
                acc = np.log(zz) + np.sum(np.log1p(-z4[:, None] * inv4[None, :]), axis=1)
            zk = np.ones_like(zz)
            for j, s in enumerate(self._tails, start=1):
                zk = zk * z4
                acc = acc - zk * s / j
            out[start:start + 1024] = acc
        return _ret(out.reshape(z.shape))

    def sigma(self, z):
        return _exp(self.log_sigma(z))

    def converged(self, z, rtol: float = 1e-12) -> bool:
        """True when doubling L changes sigma(z) by less than rtol (relative)."""
        finer = DirectProductSigma(2 * self.L, self.terms)
        a = np.atleast_1d(self.log_sigma(z))
        b = np.atleast_1d(finer.log_sigma(z))
        ok = np.isfinite(a.real)
        return bool(np.all(np.abs(np.expm1(a[ok] - b[ok])) < rtol))

    def log_derivative(self, z0, radius: float = 0.25, nodes: int = 64) -> complex:
        """log sigma'(z0) by the Cauchy integral on a small circle (trapezoid rule)."""
        th = 2 * np.pi * np.arange(nodes) / nodes
        h = radius * np.exp(1j * th)
        logs = self.log_sigma(z0 + h) - np.log(h)
        shift = np.max(logs.real)
        return complex(np.log(np.mean(np.exp(logs - shift))) + shift)


@dataclass(frozen=True)
class SigmaEvaluator:
    """Evaluator for sigma on Z + iZ.

    ``method`` is ``"reduced"`` (quasi-periodic reduction, production) or
    ``"direct"`` (canonical product with exact tail, oracle).
    """

    method: str = "reduced"
    L: int = 20

    def __post_init__(self):
        if self.method not in ("reduced", "direct"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def eta(self) -> tuple[complex, complex]:
        return ETA_1, ETA_I

    def _direct(self) -> DirectProductSigma:
        return _direct_cache(self.L)

    def log_sigma(self, z):
        if self.method == "direct":
            return self._direct().log_sigma(z)
        return log_sigma(z)

    def sigma(self, z):
        return _exp(self.log_sigma(z))

    def sigma0(self, z):
        if self.method == "direct":
            z = _asc(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(z == 0, 1.0 + 0j, self.sigma(z) / np.where(z == 0, 1.0, z))
            return _ret(out)
        return sigma0(z)

    def sigma_prime(self, w) -> SigmaPrime:
        if self.method == "direct":
            w = complex(w)
            if not is_lattice_point(w) or w == 0:
                raise NotALatticePointError(f"{w} is not a nonzero lattice point")
            lv = self._direct().log_derivative(w)
            val = complex(np.exp(lv))
            return SigmaPrime(val, val / w, lv)
        return sigma_prime_lattice(w)

    def growth_ratio(self, z):
        if self.method == "direct":
            z = _asc(z)
            v, u, _ = _reduce(z)
            dist = np.abs(u)
            lg = np.atleast_1d(self.log_sigma(z)).real - np.pi * np.abs(z.ravel()) ** 2 / 2.0
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.exp(lg) / dist.ravel()
            return _ret(out.reshape(z.shape))
        return growth_ratio(z)


_DIRECT: dict[int, DirectProductSigma] = {}


def _direct_cache(L: int) -> DirectProductSigma:
    if L not in _DIRECT:
        _DIRECT[L] = DirectProductSigma(L)
    return _DIRECT[L]
