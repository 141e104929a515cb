"""Generating functions, biorthogonal families and coefficient functionals.

All generating functions handled here have the form::

    F(z) = exp(pi conj(a) z) * sigma(z - a) / prod_{p in P} (z - a - p) * prod_{b in A} (z - b)

with P a finite set of lattice points containing 0 (``removed`` plus the
origin) and A a finite set of ``added`` points. The zero set is
``a + (Z + iZ minus P)`` together with A. The three system kinds are:

* lattice minus origin:   a = 0, P = {0}, A = {}      (F = sigma_0)
* shifted lattice:        a,     P = {0}, A = {}
* finite perturbation:    a = 0, P = {0} + removed, A = added

Biorthogonality is checked by point evaluation: for the normalized element
F_lam(z) = ||k_lam|| F(z) / ((z - lam) F'(lam)) the reproducing property gives
<k_mu/||k_mu||, F_lam> = conj(F_lam(mu)) / ||k_mu||.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import roots_legendre

from .errors import (
    InvalidPerturbationError,
    NotAZeroError,
    TooManyPointsError,
)
from .fock import (
    FockFunction,
    InnerProduct,
    Kernel,
    PointSet,
    Primitive,
    cauchy_taylor,
    disk_integral,
    fock_inner_taylor,
    lattice_points,
)
from .sigma import is_lattice_point, log_sigma, log_sigma_divided

log = logging.getLogger(__name__)

MAX_PERTURBATION = 8
MAX_GRAM_POINTS = 2000

LATTICE_MINUS_ORIGIN = "lattice-minus-origin"
SHIFTED = "shifted-lattice-minus-point"
PERTURBED = "lattice-finite-perturbation"


def _key(z: complex, digits: int = 12) -> tuple[float, float]:
    return (round(z.real, digits), round(z.imag, digits))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = LATTICE_MINUS_ORIGIN
    shift: complex = 0j
    removed: tuple[complex, ...] = ()
    added: tuple[complex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "shift", complex(self.shift))
        object.__setattr__(self, "removed", tuple(complex(r) for r in self.removed))
        object.__setattr__(self, "added", tuple(complex(b) for b in self.added))
        if self.kind not in (LATTICE_MINUS_ORIGIN, SHIFTED, PERTURBED):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind != SHIFTED and self.shift != 0:
            raise ValueError("only the shifted kind carries a shift")
        if self.kind != PERTURBED and (self.removed or self.added):
            raise ValueError("only the perturbation kind carries removed/added points")
        if self.kind == PERTURBED:
            self._validate_perturbation()

    def _validate_perturbation(self):
        rem, add = self.removed, self.added
        if len(rem) > MAX_PERTURBATION or len(add) > MAX_PERTURBATION:
            raise InvalidPerturbationError(f"at most {MAX_PERTURBATION} removed/added points")
        if len({_key(r) for r in rem}) != len(rem) or len({_key(b) for b in add}) != len(add):
            raise InvalidPerturbationError("removed/added points must be distinct")
        for r in rem:
            if not is_lattice_point(r) or abs(r) < 0.5:
                raise InvalidPerturbationError(f"removed point {r} is not a zero of sigma_0")
        removed = {_key(complex(round(r.real), round(r.imag))) for r in rem}
        for b in add:
            if is_lattice_point(b) and abs(b) > 0.5 and _key(complex(round(b.real), round(b.imag))) not in removed:
                raise InvalidPerturbationError(f"added point {b} collides with an existing zero")
        if len(add) > len(rem):
            # F(z)/(z - lam) would grow like |z|^(len(add) - len(rem) - 1) times sigma_0 and leave the Fock space
            raise InvalidPerturbationError("more added than removed points: quotients leave the Fock space")

    @classmethod
    def lattice_minus_origin(cls) -> "GeneratorSpec":
        return cls(LATTICE_MINUS_ORIGIN)

    @classmethod
    def shifted(cls, a: complex) -> "GeneratorSpec":
        return cls(SHIFTED, shift=a)

    @classmethod
    def perturbed(cls, removed: Sequence[complex] = (), added: Sequence[complex] = ()) -> "GeneratorSpec":
        return cls(PERTURBED, removed=tuple(removed), added=tuple(added))

    @property
    def lattice_poles(self) -> tuple[complex, ...]:
        """P: lattice offsets divided out of sigma(z - a) (always contains 0)."""
        return (0j,) + tuple(complex(round(r.real), round(r.imag)) for r in self.removed)

    def zero_set(self, R: float) -> PointSet:
        a = self.shift
        base = a + lattice_points(R + abs(a) + 1)
        poles = {_key(a + p) for p in self.lattice_poles}
        pts = [z for z in base if abs(z) <= R + 1e-12 and _key(z) not in poles]
        pts += [b for b in self.added if abs(b) <= R + 1e-12]
        return PointSet(tuple(pts), float(R))

    def disjoint_from_lattice(self) -> bool:
        """True when no zero lies on Z + iZ."""
        if self.kind == SHIFTED:
            return not is_lattice_point(self.shift, atol=1e-9)
        return False

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == SHIFTED:
            d["shift"] = [self.shift.real, self.shift.imag]
        if self.kind == PERTURBED:
            d["removed"] = [[r.real, r.imag] for r in self.removed]
            d["added"] = [[b.real, b.imag] for b in self.added]
        return d


@dataclass(frozen=True)
class GeneratingFunction:
    spec: GeneratorSpec

    @property
    def zero_set(self):
        return self.spec.zero_set

    def _classify(self, lam: complex) -> tuple[str, complex]:
        lam = complex(lam)
        for b in self.spec.added:
            if abs(lam - b) <= 1e-12:
                return "added", b
        rel = lam - self.spec.shift
        if is_lattice_point(rel, atol=1e-9):
            w = complex(round(rel.real), round(rel.imag))
            if all(w != p for p in self.spec.lattice_poles):
                return "lattice", w
        raise NotAZeroError(f"{lam} is not a zero of the generating function")

    def is_zero(self, lam: complex) -> bool:
        try:
            self._classify(lam)
        except NotAZeroError:
            return False
        return True

    def _log(self, z, poles, added) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        a = self.spec.shift
        out = np.pi * np.conj(a) * z + np.asarray(log_sigma_divided(z - a, poles))
        with np.errstate(divide="ignore"):
            for b in added:
                out = out + np.log(z - b)
        return out

    def log(self, z):
        """Complex log of F(z) (real part -inf on the zero set)."""
        return self._log(z, self.spec.lattice_poles, self.spec.added)

    def _divide(self, lams) -> tuple[tuple[complex, ...], tuple[complex, ...]]:
        """Poles and added factors left after dividing F by prod (z - lam)."""
        poles = list(self.spec.lattice_poles)
        added = list(self.spec.added)
        seen = set()
        for lam in lams:
            kind, p = self._classify(lam)
            if (kind, p) in seen:
                raise ValueError(f"repeated zero {lam}")
            seen.add((kind, p))
            if kind == "lattice":
                poles.append(p)
            else:
                added.remove(p)
        return tuple(poles), tuple(added)

    def quotient_log(self, z, lam):
        """Complex log of F(z)/prod(z - lam_j), regular at every lam_j (lam may be a tuple)."""
        lams = tuple(lam) if isinstance(lam, (tuple, list)) else (lam,)
        return self._log(z, *self._divide(lams))

    def __call__(self, z):
        return _expc(self.log(z))

    def weighted(self, z):
        z = np.asarray(z, dtype=complex)
        return _expc(self.log(z) - np.pi * np.abs(z) ** 2 / 2)

    def log_derivative(self, lam: complex) -> complex:
        """log F'(lam), from the closed form of the quotient at its removable point."""
        return complex(self.quotient_log(np.array([complex(lam)]), lam)[0])

    def derivative(self, lam: complex) -> complex:
        return complex(np.exp(self.log_derivative(lam)))

    def envelope_sq(self, z, lam=None) -> np.ndarray:
        """|prod_A (z - b)|^2 / |prod_P (z - a - p)|^2 after dividing by the given zeros.

        |F(z)|^2 e^{-pi |z|^2} = e^{pi |a|^2} |sigma(z-a)|^2 e^{-pi |z-a|^2} * envelope_sq(z).
        """
        z = np.asarray(z, dtype=complex)
        lams = () if lam is None else tuple(lam) if isinstance(lam, (tuple, list)) else (lam,)
        poles, added = self._divide(lams)
        a = self.spec.shift
        out = np.ones(z.shape)
        for b in added:
            out = out * np.abs(z - b) ** 2
        for p in poles:
            out = out / np.abs(z - a - p) ** 2
        return out


def _expc(logv):
    logv = np.asarray(logv, dtype=complex)
    dead = np.isneginf(logv.real)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(dead, 0.0, np.exp(np.where(dead, 0.0, logv)))
    return out[()] if out.ndim == 0 else out


def generating_function(spec: GeneratorSpec) -> GeneratingFunction:
    return GeneratingFunction(spec)


# --------------------------------------------------------------------------
# norms of sigma quotients


@lru_cache(maxsize=1)
def periodic_mean() -> float:
    """Cell average of |sigma(u)|^2 exp(-pi |u|^2) (doubly periodic, smooth)."""
    n = 96
    g = (np.arange(n) + 0.5) / n - 0.5
    u = g[:, None] + 1j * g[None, :]
    return float(np.mean(np.exp(2 * np.asarray(log_sigma(u)).real - np.pi * np.abs(u) ** 2)))


def _exterior_envelope_integral(env, R: float, order: int = 48, n_theta: int = 512) -> float:
    """int_{|z| > R} env(z) dm via r = R/s, s in (0, 1]."""
    s, ws = roots_legendre(order)
    s = (s + 1) / 2
    ws = ws / 2
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    r = R / s
    z = r[:, None] * np.exp(1j * theta)[None, :]
    jac = (R * R / s**3)[:, None]
    vals = env(z) * jac
    return float(np.sum(ws[:, None] * vals) * 2 * np.pi / n_theta)


def quotient_norm_sq(G: GeneratingFunction, lam, R: float | None = None, tol: float = 1e-8) -> InnerProduct:
    """int |F(z)/prod(z - lam_j)|^2 e^{-pi|z|^2} dm over the plane.

    The disk |z| <= R is integrated directly. Outside it the periodic factor
    |sigma|^2 e^{-pi|.|^2} is replaced by its cell mean, which leaves a
    rational integral. The error estimate is the change of the total when R
    grows by 4 plus the quadrature errors.
    """
    lams = tuple(lam) if isinstance(lam, (tuple, list)) else (lam,)
    lam = tuple(complex(x) for x in lams)
    a = G.spec.shift
    R0 = R if R is not None else max(8.0, max(abs(x) for x in lam) + abs(a) + 6.0)
    mean = periodic_mean() * math.exp(math.pi * abs(a) ** 2)

    def integrand(z):
        z_ = np.asarray(z, dtype=complex)
        lg = np.asarray(G.quotient_log(z_, lam)).real
        with np.errstate(divide="ignore"):
            return np.exp(2 * lg - np.pi * np.abs(z_) ** 2)

    def total(radius):
        inner = disk_integral(integrand, radius, tol=tol)
        outer = mean * _exterior_envelope_integral(lambda z: G.envelope_sq(z, lam), radius)
        return inner.value.real + outer, inner.error

    t0, e0 = total(R0)
    t1, e1 = total(R0 + 4.0)
    return InnerProduct(t1, abs(t1 - t0) + e0 + e1)


@dataclass(frozen=True)
class GeneratorQuotient(Primitive):
    """exp(log_scale) * F(z) / prod(z - lam_j) as a Fock-space primitive (lam: one zero or a tuple)."""

    G: GeneratingFunction
    lam: complex | tuple[complex, ...]
    log_scale: complex = 0j

    def log_value(self, z):
        return np.asarray(self.G.quotient_log(z, self.lam)) + self.log_scale

    @cached_property
    def _norm(self) -> InnerProduct:
        ip = quotient_norm_sq(self.G, self.lam)
        s = math.exp(2 * self.log_scale.real)
        return InnerProduct(ip.value * s, ip.error * s)

    def norm_sq(self):
        return self._norm.value + self._norm.error

    def taylor(self, degree):
        return cauchy_taylor(self.log_value, degree)

    def tail_sq(self, degree):
        kept = float(np.sum(np.abs(self.taylor(degree)) ** 2))
        return max(self.norm_sq() - kept, 0.0)

    def exterior_sq(self, R):
        a = self.G.spec.shift
        mean = periodic_mean() * math.exp(math.pi * abs(a) ** 2 + 2 * self.log_scale.real)
        return 2.0 * mean * _exterior_envelope_integral(lambda z: self.G.envelope_sq(z, self.lam), R)

    @property
    def radius(self):
        lams = self.lam if isinstance(self.lam, tuple) else (self.lam,)
        return max(abs(x) for x in lams) + 2.0


# --------------------------------------------------------------------------
# biorthogonal family


@dataclass(frozen=True)
class BiorthogonalElement:
    """F_lam(z) = ||k_lam|| F(z) / ((z - lam) F'(lam))."""

    G: GeneratingFunction
    lam: complex
    log_scale: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        ls = math.pi * abs(self.lam) ** 2 / 2 - self.G.log_derivative(self.lam)
        object.__setattr__(self, "log_scale", complex(ls))

    @property
    def function(self) -> FockFunction:
        return FockFunction.of(GeneratorQuotient(self.G, self.lam, self.log_scale))

    def log_value(self, z):
        return np.asarray(self.G.quotient_log(z, self.lam)) + self.log_scale

    def __call__(self, z):
        return _expc(self.log_value(z))

    def weighted(self, z):
        z = np.asarray(z, dtype=complex)
        return _expc(self.log_value(z) - np.pi * np.abs(z) ** 2 / 2)

    def pairing(self, mu):
        """<k_mu/||k_mu||, F_lam> = conj(F_lam(mu)) / ||k_mu|| by the reproducing property."""
        return np.conj(self.weighted(mu))

    @property
    def scale_modulus(self) -> float:
        """||k_lam|| / |F'(lam)|; equals |lam| for the lattice-minus-origin system."""
        return math.exp(self.log_scale.real)


def biorth_element(G: GeneratingFunction, lam: complex) -> BiorthogonalElement:
    G._classify(lam)
    return BiorthogonalElement(G, lam)


def coefficient(S: FockFunction, G: GeneratingFunction, w: complex, tol: float = 1e-14) -> InnerProduct:
    """b_w = <S, F_w> with F_w the normalized biorthogonal element at w.

    Kernel combinations go through point evaluation
    (<c k_a, F_w> = c conj(F_w(a))); anything else through the Taylor engine.
    """
    el = biorth_element(G, w)
    if S.is_zero:
        return InnerProduct(0j, 0.0)
    if S.is_kernel_combination:
        total = 0j
        mag = 0.0
        for c, p in S.terms:
            assert isinstance(p, Kernel)
            lv = el.log_value(np.array([p.a]))[0]
            if p.normalized:
                lv = lv - math.pi * abs(p.a) ** 2 / 2
            term = c * np.conj(_expc(lv))
            total += term
            mag += abs(term)
        return InnerProduct(complex(total), 1e-14 * mag)
    return fock_inner_taylor(S, el.function, tol=tol)


def pairing_matrix(G: GeneratingFunction, lams, mus) -> np.ndarray:
    """M[i, j] = <k_mu_j/||k_mu_j||, F_lam_i>; the identity for a biorthogonal pair."""
    mus = np.asarray(mus, dtype=complex)
    return np.array([biorth_element(G, lam).pairing(mus) for lam in lams])


# --------------------------------------------------------------------------
# Gram diagnostics and density


def _as_array(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.array
    return np.asarray(points, dtype=complex).ravel()


def gram_matrix(points) -> np.ndarray:
    """G[i, j] = <k_i/||k_i||, k_j/||k_j||> = exp(pi conj(l_i) l_j - pi|l_i|^2/2 - pi|l_j|^2/2)."""
    p = _as_array(points)
    if p.size > MAX_GRAM_POINTS:
        raise TooManyPointsError(f"{p.size} points exceed the limit of {MAX_GRAM_POINTS}")
    a = np.abs(p) ** 2
    return np.exp(np.pi * np.conj(p)[:, None] * p[None, :] - np.pi * (a[:, None] + a[None, :]) / 2)


class SectionDiagnostics(NamedTuple):
    min_singular_value: float
    max_singular_value: float
    condition_number: float
    rank_deficient: bool


def section_diagnostics(points, rtol: float = 1e-13) -> SectionDiagnostics:
    p = _as_array(points)
    if p.size == 0:
        return SectionDiagnostics(math.nan, math.nan, math.nan, False)
    s = np.linalg.svd(gram_matrix(p), compute_uv=False)
    smin, smax = float(s[-1]), float(s[0])
    deficient = smin <= rtol * smax
    return SectionDiagnostics(smin, smax, smax / smin if smin > 0 else math.inf, deficient)


def min_singular_value(points) -> float:
    d = section_diagnostics(points)
    if d.rank_deficient:
        log.warning("Gram section numerically rank deficient (cond %.3e)", d.condition_number)
    return d.min_singular_value


def upper_density(points, radii: Sequence[float]) -> list[float]:
    """#(points with |p| <= r) / (pi r^2) for each radius."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and increasing")
    mod = np.abs(_as_array(points))
    return [float(np.count_nonzero(mod <= r + 1e-12)) / (math.pi * r * r) for r in radii]
