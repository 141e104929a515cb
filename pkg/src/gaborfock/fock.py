"""Phase-plane / Fock-plane types and the two inner-product engines of the Fock space.

The Fock space holds entire functions F with
``||F||^2 = int |F(z)|^2 exp(-pi |z|^2) dm(z) < inf``. Monomials are orthogonal
with ``<z^n, z^n> = n!/pi^n``, so Taylor data is stored in the orthonormal
coordinates ``beta_n = a_n * sqrt(n!/pi^n)``; inner products become plain dot
products and the norm of the discarded tail is an l2 tail of ``beta``.

Values that grow like ``exp(pi |z|^2 / 2)`` are handled through complex
logarithms; ``weighted(z)`` always means ``F(z) * exp(-pi |z|^2 / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln, roots_legendre

from .errors import GridTooCoarseError, TaylorCapError, UnboundedTailError

LOG_PI = math.log(math.pi)
TAYLOR_CAP = 512


# --------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class PhasePoint:
    """Time shift ``x`` and frequency shift ``y`` of a Gaussian atom."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("PhasePoint coordinates must be finite")


@dataclass(frozen=True)
class FockPoint:
    w: complex

    def __post_init__(self):
        object.__setattr__(self, "w", complex(self.w))

    def to_phase(self) -> PhasePoint:
        return fock_to_phase(self)


def phase_to_fock(p: PhasePoint) -> FockPoint:
    """Map the atom location (x, y) to the kernel point w = x - i y.

    With this convention the Bargmann transform of the atom at (x, y) is a
    unimodular multiple of ``2**-0.25 * k_w / ||k_w||``.
    """
    return FockPoint(complex(p.x, -p.y))


def fock_to_phase(q: FockPoint | complex) -> PhasePoint:
    w = q.w if isinstance(q, FockPoint) else complex(q)
    return PhasePoint(w.real, -w.imag)


def lattice_points(R: float, exclude: Iterable[complex] = (), column_step: int = 1) -> np.ndarray:
    """{m + i n : |m + i n| <= R} in a fixed (m-major) order, minus ``exclude``.

    ``column_step > 1`` keeps only columns with m divisible by it.
    """
    L = int(math.floor(R))
    r = np.arange(-L, L + 1)
    m, n = np.meshgrid(r, r, indexing="ij")
    pts = (m + 1j * n).ravel()
    keep = np.abs(pts) <= R + 1e-12
    if column_step > 1:
        keep &= (m.ravel() % column_step) == 0
    pts = pts[keep]
    for e in exclude:
        pts = pts[pts != complex(e)]
    return pts


@dataclass(frozen=True)
class PointSet:
    """Finite list of distinct Fock-plane points with the radius it was cut at."""

    points: tuple[complex, ...]
    truncation_radius: float = math.inf

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(set(pts)) != len(pts):
            raise ValueError("PointSet points must be distinct")

    @classmethod
    def lattice(cls, R: float, exclude: Iterable[complex] = (0,), column_step: int = 1) -> "PointSet":
        return cls(tuple(lattice_points(R, exclude, column_step)), float(R))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


# --------------------------------------------------------------------------
# primitives


def _exp_log(logv: np.ndarray) -> np.ndarray:
    logv = np.asarray(logv, dtype=complex)
    dead = np.isneginf(logv.real)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(dead, 0.0, np.exp(np.where(dead, 0.0, logv)))


def _ret(a):
    a = np.asarray(a)
    return a[()] if a.ndim == 0 else a


class Primitive:
    """A closed-form entire function.

    Subclasses implement ``log_value`` (complex log, ``-inf`` real part at
    zeros), ``taylor`` (orthonormal coordinates up to a degree), ``tail_sq``
    (bound on the squared norm beyond that degree), ``exterior_sq`` (bound on
    the energy outside a disk) and ``norm_sq``.
    """

    def log_value(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        return _ret(_exp_log(self.log_value(np.asarray(z, dtype=complex))))

    def weighted(self, z):
        z = np.asarray(z, dtype=complex)
        return _ret(_exp_log(self.log_value(z) - np.pi * np.abs(z) ** 2 / 2.0))

    def taylor(self, degree: int) -> np.ndarray:
        raise NotImplementedError

    def tail_sq(self, degree: int) -> float:
        raise NotImplementedError

    def exterior_sq(self, R: float) -> float:
        return math.inf

    def norm_sq(self) -> float:
        raise NotImplementedError

    @property
    def radius(self) -> float:
        """Rough location of the function's energy, used to size quadrature disks."""
        return 0.0

    @property
    def is_kernel(self) -> bool:
        return False


@dataclass(frozen=True)
class Monomial(Primitive):
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("monomial degree must be >= 0")

    def log_value(self, z):
        if self.n == 0:
            return np.zeros_like(z)
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return self.n * np.log(np.abs(z)) + 1j * self.n * np.angle(z)

    def _log_norm(self) -> float:
        return 0.5 * (gammaln(self.n + 1) - self.n * LOG_PI)

    def taylor(self, degree):
        out = np.zeros(degree + 1, dtype=complex)
        if self.n <= degree:
            out[self.n] = math.exp(self._log_norm())
        return out

    def tail_sq(self, degree):
        return 0.0 if self.n <= degree else self.norm_sq()

    def exterior_sq(self, R):
        return self.norm_sq() * float(gammaincc(self.n + 1, math.pi * R * R))

    def norm_sq(self):
        return math.exp(2 * self._log_norm())

    @property
    def radius(self):
        return math.sqrt(self.n / math.pi)


@dataclass(frozen=True)
class Kernel(Primitive):
    """Reproducing kernel k_a(z) = exp(pi conj(a) z); ``normalized`` divides by ||k_a||."""

    a: complex
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))

    @property
    def _log_scale(self) -> float:
        return -math.pi * abs(self.a) ** 2 / 2.0 if self.normalized else 0.0

    def log_value(self, z):
        return np.pi * np.conj(self.a) * z + self._log_scale

    def taylor(self, degree):
        k = np.arange(degree + 1)
        if self.a == 0:
            out = np.zeros(degree + 1, dtype=complex)
            out[0] = math.exp(self._log_scale)
            return out
        base = np.log(math.sqrt(math.pi) * np.conj(self.a))
        return np.exp(k * base - 0.5 * gammaln(k + 1) + self._log_scale)

    def tail_sq(self, degree):
        lam = math.pi * abs(self.a) ** 2
        if lam == 0:
            return 0.0
        # sum_{k > degree} lam^k / k! = e^lam * P(degree + 1, lam)
        return math.exp(lam + 2 * self._log_scale) * float(gammainc(degree + 1, lam))

    def exterior_sq(self, R):
        r = abs(self.a)
        # |k_a|^2 e^{-pi|z|^2} = e^{pi|a|^2} e^{-pi|z-a|^2}; the exterior of |z| <= R
        # lies in the exterior of the disk |z - a| <= R - |a|
        log_n = math.pi * r * r + 2 * self._log_scale
        if R <= r:
            return math.exp(log_n)
        return math.exp(log_n - math.pi * (R - r) ** 2)

    def norm_sq(self):
        return math.exp(math.pi * abs(self.a) ** 2 + 2 * self._log_scale)

    @property
    def radius(self):
        return abs(self.a)

    @property
    def is_kernel(self):
        return True


def cauchy_taylor(log_fn: Callable[[np.ndarray], np.ndarray], degree: int, r_min: float = 1.0) -> np.ndarray:
    """Orthonormal Taylor coordinates beta_0..beta_degree of an entire function by FFT on circles.

    Degree n is read off the circle of radius ~ sqrt(n/pi), where
    ``|a_n| r^n`` is comparable to the maximum modulus; this keeps the
    absolute error of every beta_n near machine precision times the size of
    the weighted function.
    """
    M = max(256, 1 << int(math.ceil(math.log2(4 * (degree + 1)))))
    theta = 2 * np.pi * np.arange(M) / M
    unit = np.exp(1j * theta)
    beta = np.zeros(degree + 1, dtype=complex)
    block = 16
    for start in range(0, degree + 1, block):
        ks = np.arange(start, min(start + block, degree + 1))
        r = max(r_min, math.sqrt(max(ks.mean(), 1.0) / math.pi))
        logs = np.asarray(log_fn(r * unit), dtype=complex)
        shift = float(np.max(logs.real[np.isfinite(logs.real)], initial=0.0))
        vals = _exp_log(logs - shift)
        c = np.fft.fft(vals) / M
        scale = shift - ks * math.log(r) + 0.5 * (gammaln(ks + 1) - ks * LOG_PI)
        beta[ks] = c[ks] * np.exp(scale)
    return beta


# --------------------------------------------------------------------------
# FockFunction


class TaylorData(NamedTuple):
    coefficients: np.ndarray  # orthonormal coordinates beta_0..beta_N
    tail_bound: float  # norm of the discarded tail is at most this

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def monomial_coefficients(self) -> np.ndarray:
        """Plain Taylor coefficients a_n = beta_n * sqrt(pi^n / n!)."""
        n = np.arange(len(self.coefficients))
        return self.coefficients * np.exp(0.5 * (n * LOG_PI - gammaln(n + 1)))


class InnerProduct(NamedTuple):
    value: complex
    error: float


@dataclass(frozen=True)
class FockFunction:
    """Linear combination of closed-form primitives, with Taylor data on demand.

    ``terms`` is a tuple of (coefficient, primitive) pairs. Pointwise values
    come from the primitives; ``taylor()`` produces the orthonormal Taylor
    coordinates together with a bound on the norm of what was cut off.
    """

    terms: tuple[tuple[complex, Primitive], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((complex(c), p) for c, p in self.terms))

    # construction ---------------------------------------------------------
    @classmethod
    def of(cls, prim: Primitive, coeff: complex = 1.0) -> "FockFunction":
        return cls(((coeff, prim),))

    @classmethod
    def zero(cls) -> "FockFunction":
        return cls(())

    @classmethod
    def constant(cls, c: complex = 1.0) -> "FockFunction":
        return cls.of(Monomial(0), c)

    @classmethod
    def monomial(cls, n: int, c: complex = 1.0) -> "FockFunction":
        return cls.of(Monomial(n), c)

    @classmethod
    def kernel(cls, a: complex, c: complex = 1.0, normalized: bool = False) -> "FockFunction":
        return cls.of(Kernel(a, normalized), c)

    def __add__(self, other: "FockFunction") -> "FockFunction":
        if not isinstance(other, FockFunction):
            return NotImplemented
        merged: dict[Primitive, complex] = {}
        for c, p in self.terms + other.terms:
            merged[p] = merged.get(p, 0j) + c
        return FockFunction(tuple((c, p) for p, c in merged.items() if c != 0))

    def __mul__(self, s: complex) -> "FockFunction":
        s = complex(s)
        if s == 0:
            return FockFunction.zero()
        return FockFunction(tuple((s * c, p) for c, p in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    # evaluation -----------------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for c, p in self.terms:
            out = out + c * p(z)
        return _ret(out)

    def weighted(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for c, p in self.terms:
            out = out + c * p.weighted(z)
        return _ret(out)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_kernel_combination(self) -> bool:
        return all(p.is_kernel for _, p in self.terms)

    @property
    def radius(self) -> float:
        return max((p.radius for _, p in self.terms), default=0.0)

    def exterior_bound(self, R: float) -> float:
        """Upper bound on (int_{|z|>R} |F|^2 e^{-pi|z|^2})^(1/2), by Minkowski."""
        return sum(abs(c) * math.sqrt(p.exterior_sq(R)) for c, p in self.terms)

    def norm_bound(self) -> float:
        return sum(abs(c) * math.sqrt(p.norm_sq()) for c, p in self.terms)

    # Taylor data ----------------------------------------------------------
    def taylor_at(self, degree: int) -> TaylorData:
        if degree > TAYLOR_CAP:
            raise TaylorCapError(f"degree {degree} exceeds the cap {TAYLOR_CAP}")
        return _taylor_cached(self, degree)

    def taylor(self, tol: float = 1e-12, strict: bool = True) -> TaylorData:
        """Adaptive truncation: grow the degree until tail <= tol * ||F||-scale."""
        scale = self.norm_bound() or 1.0
        degree = 16
        while True:
            td = self.taylor_at(degree)
            if td.tail_bound <= tol * scale:
                return td
            if degree >= TAYLOR_CAP:
                if strict:
                    raise TaylorCapError(
                        f"tail {td.tail_bound:.3e} above {tol * scale:.3e} at degree {TAYLOR_CAP}"
                    )
                return td
            degree = min(2 * degree, TAYLOR_CAP)

    def taylor_eval(self, z, degree: int | None = None):
        """Evaluate the truncated Taylor polynomial (for the primitive/Taylor consistency check)."""
        td = self.taylor() if degree is None else self.taylor_at(degree)
        z = np.asarray(z, dtype=complex)
        # e_n(z) = sqrt(pi^n/n!) z^n by recurrence
        e = np.ones(z.shape, dtype=complex)
        out = td.coefficients[0] * e
        sq = math.sqrt(math.pi)
        for n in range(1, td.degree + 1):
            e = e * (sq * z / math.sqrt(n))
            out = out + td.coefficients[n] * e
        return _ret(out)


@lru_cache(maxsize=512)
def _taylor_cached(F: FockFunction, degree: int) -> TaylorData:
    coeffs = np.zeros(degree + 1, dtype=complex)
    tail = 0.0
    for c, p in F.terms:
        coeffs = coeffs + c * p.taylor(degree)
        tail += abs(c) * math.sqrt(p.tail_sq(degree))
    coeffs.setflags(write=False)
    return TaylorData(coeffs, tail)


# --------------------------------------------------------------------------
# inner products


def fock_inner_taylor(F: FockFunction, G: FockFunction, tol: float = 1e-14, degree: int | None = None) -> InnerProduct:
    """<F, G> = sum_n beta_n conj(gamma_n) over a shared truncation.

    Monomials of different degree are orthogonal, so the truncation error is
    the pairing of the two tails alone, bounded by the product of the tail
    norms (Cauchy-Schwarz).
    """
    if F.is_zero or G.is_zero:
        return InnerProduct(0j, 0.0)
    scale = F.norm_bound() * G.norm_bound()
    degrees = [degree] if degree is not None else [16, 32, 64, 128, 256, TAYLOR_CAP]
    for d in degrees:
        tf, tg = F.taylor_at(d), G.taylor_at(d)
        if not (math.isfinite(tf.tail_bound) and math.isfinite(tg.tail_bound)):
            if d == degrees[-1]:
                raise UnboundedTailError("a Taylor tail bound is infinite")
            continue
        err = tf.tail_bound * tg.tail_bound
        if err <= tol * scale or d == degrees[-1]:
            break
    value = complex(np.dot(tf.coefficients, np.conj(tg.coefficients)))
    # coefficient n comes out of exp(n log c - lgamma(n+1)/2 ...): its relative
    # error grows with the size of the cancelling log-space terms, ~ n log n ulps
    n = np.arange(len(tf.coefficients))
    ulps = 8 + n * np.log1p(n)
    rounding = np.finfo(float).eps * float(np.sum(ulps * np.abs(tf.coefficients) * np.abs(tg.coefficients)))
    return InnerProduct(value, err + rounding)


def fock_norm(F: FockFunction, tol: float = 1e-14) -> InnerProduct:
    """||F|| with a propagated error bound (value field holds a real number)."""
    ip = fock_inner_taylor(F, F, tol)
    sq = max(ip.value.real, 0.0)
    val = math.sqrt(sq)
    err = ip.error / (2 * val) if val > 0 else math.sqrt(ip.error)
    return InnerProduct(val, err)


def polar_rule(R: float, panels: int, order: int, n_theta: int):
    """Nodes and weights for int_{|z|<=R} f dm: Gauss-Legendre panels in r, trapezoid in angle."""
    x, wx = roots_legendre(order)
    edges = np.linspace(0.0, R, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    r = ((b - a) / 2 * x + (a + b) / 2).ravel()
    wr = ((b - a) / 2 * wx).ravel() * r
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    z = r[:, None] * np.exp(1j * theta)[None, :]
    w = wr[:, None] * (2 * np.pi / n_theta) * np.ones(n_theta)[None, :]
    return z, w


def disk_integral(
    fn: Callable[[np.ndarray], np.ndarray],
    R: float,
    tol: float = 1e-10,
    scale: float | None = None,
    max_levels: int = 6,
    order: int = 16,
    panels: int | None = None,
    n_theta: int | None = None,
) -> InnerProduct:
    """int_{|z|<=R} fn(z) dm(z), refining panels and angles until successive values agree.

    Convergence is declared when the change is below ``tol * scale`` (scale
    defaults to max(1, |value|)); raises GridTooCoarseError otherwise.
    """
    panels = panels or max(4, int(math.ceil(2 * R)))
    n_theta = n_theta or max(64, 1 << int(math.ceil(math.log2(max(8 * R, 1.0)))))
    prev = None
    for _ in range(max_levels):
        z, w = polar_rule(R, panels, order, n_theta)
        val = complex(np.sum(w * fn(z)))
        if prev is not None:
            ref = scale if scale is not None else max(1.0, abs(val))
            diff = abs(val - prev)
            if diff <= tol * ref:
                return InnerProduct(val, diff)
        prev = val
        panels *= 2
        n_theta *= 2
    raise GridTooCoarseError(f"disk quadrature did not converge to {tol:g} on |z| <= {R}")


def _weighted_of(F) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(F, "weighted"):
        return F.weighted
    return lambda z: F(z) * np.exp(-np.pi * np.abs(z) ** 2 / 2.0)


def fock_inner_quadrature(F, G, R: float | None = None, tol: float = 1e-8) -> InnerProduct:
    """Polar-grid value of int_{|z|<=R} F conj(G) e^{-pi|z|^2} dm plus the exterior tail.

    The tail bound is the product of the exterior energies of F and G
    (Cauchy-Schwarz); plain callables carry no exterior information, so
    their tail is reported as infinite.
    """
    if R is None:
        R = max(6.0, 2.0 * max(getattr(F, "radius", 0.0), getattr(G, "radius", 0.0)) + 2.0)
    fw, gw = _weighted_of(F), _weighted_of(G)

    def integrand(z):
        return fw(z) * np.conj(gw(z))

    nf = disk_integral(lambda z: np.abs(fw(z)) ** 2, R, tol=1e-3)
    ng = disk_integral(lambda z: np.abs(gw(z)) ** 2, R, tol=1e-3)
    scale = math.sqrt(abs(nf.value) * abs(ng.value)) or 1.0
    ip = disk_integral(integrand, R, tol=tol, scale=scale)
    if hasattr(F, "exterior_bound") and hasattr(G, "exterior_bound"):
        tail = F.exterior_bound(R) * G.exterior_bound(R)
    else:
        tail = math.inf
    return InnerProduct(ip.value, ip.error + tail)
