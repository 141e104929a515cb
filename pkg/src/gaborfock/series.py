"""Formal series, estimate checks and finite-section experiments.

Every check returns a :class:`VerificationReport`, whose ``to_record`` is the
JSON-lines record emitted by the command-line tool.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import gamma

from .bargmann import GaborAtom, HermiteExpansion, bargmann_transform
from .dual import (
    GeneratingFunction,
    GeneratorSpec,
    biorth_element,
    coefficient,
    generating_function,
    gram_matrix,
    quotient_norm_sq,
)
from .errors import LatticeCollisionError
from .fock import (
    FockFunction,
    InnerProduct,
    Kernel,
    PointSet,
    disk_integral,
    fock_inner_taylor,
    fock_norm,
    fock_to_phase,
    FockPoint,
    lattice_points,
)
from .sigma import log_sigma0

log = logging.getLogger(__name__)

DEFAULT_RADIUS = 8.0
STABILITY = 1.25
LATTICE = GeneratorSpec.lattice_minus_origin()


@dataclass
class VerificationReport:
    op: str
    value: complex | float
    passed: bool
    error_bound: float = 0.0
    truncation_radius: float | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict:
        v = self.value
        if isinstance(v, complex):
            value: Any = {"re": v.real, "im": v.imag}
        else:
            value = float(v)
        return {
            "op": self.op,
            "params": _jsonable(self.params),
            "value": value,
            "error_bound": float(self.error_bound),
            "truncation_radius": None if self.truncation_radius is None else float(self.truncation_radius),
            "pass": bool(self.passed),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _to_fock(f) -> FockFunction:
    if isinstance(f, FockFunction):
        return f
    return bargmann_transform(f)


# --------------------------------------------------------------------------
# formal series


@dataclass(frozen=True)
class FormalSeries:
    spec: GeneratorSpec
    points: tuple[complex, ...]
    coefficients: tuple[complex, ...]
    errors: tuple[float, ...]
    source_norm: float
    truncation_radius: float

    def as_dict(self) -> dict[complex, complex]:
        return dict(zip(self.points, self.coefficients))

    def nonzero(self, atol: float = 1e-12) -> dict[complex, complex]:
        scale = max(self.source_norm, 1.0)
        return {w: c for w, c in zip(self.points, self.coefficients) if abs(c) > atol * scale}


def assemble_series(f, spec: GeneratorSpec = LATTICE, R: float = DEFAULT_RADIUS) -> FormalSeries:
    """Coefficients b_w = <S, F_w> for the zeros w of the system inside |w| <= R.

    ``f`` is a FockFunction or anything the Bargmann transform accepts.
    """
    S = _to_fock(f)
    G = generating_function(spec)
    pts = spec.zero_set(R).points
    coeffs, errs = [], []
    for w in pts:
        ip = coefficient(S, G, w)
        coeffs.append(complex(ip.value))
        errs.append(float(ip.error))
    norm = 0.0 if S.is_zero else fock_norm(S).value
    return FormalSeries(spec, tuple(pts), tuple(coeffs), tuple(errs), norm, float(R))


# --------------------------------------------------------------------------
# coefficient estimate


def _cumulative_sup(mods: np.ndarray, ratios: np.ndarray, r: float) -> float:
    sel = mods <= r + 1e-12
    return float(ratios[sel].max()) if np.any(sel) else 0.0


def verify_coeff_bound(S: FockFunction, R: float = DEFAULT_RADIUS, spec: GeneratorSpec = LATTICE) -> VerificationReport:
    """sup over 2 <= |w| <= R of |b_w|^2 / (||S||^2 log(1 + |w|)) and its dyadic stability.

    The sup over 2 <= |w| <= R must be within 25% of the sup over
    2 <= |w| <= R/2 (cumulative sups, so the ratio is at least 1).
    """
    series = assemble_series(S, spec, R)
    pts = np.array(series.points)
    b = np.array(series.coefficients)
    errs = np.array(series.errors)
    keep = np.abs(pts) >= 2 - 1e-12
    pts, b, errs = pts[keep], b[keep], errs[keep]
    norm_sq = series.source_norm**2
    if norm_sq == 0:
        return VerificationReport("coeff-bound", 0.0, True, 0.0, R, {"R": R, "stable": True})
    mods = np.abs(pts)
    ratios = np.abs(b) ** 2 / (norm_sq * np.log1p(mods))
    sup_r = _cumulative_sup(mods, ratios, R)
    sup_half = _cumulative_sup(mods, ratios, R / 2)
    err = float(np.max((2 * np.abs(b) * errs + errs**2) / (norm_sq * np.log1p(mods)))) if len(b) else 0.0
    stable = sup_r <= STABILITY * sup_half + err if sup_half > 0 else sup_r <= err
    arg = complex(pts[int(np.argmax(ratios))]) if len(b) and sup_r > 0 else None
    params = {
        "R": R,
        "system": spec.describe(),
        "sup_half": sup_half,
        "shell_ratio": sup_r / sup_half if sup_half > 0 else None,
        "argmax": arg,
        "stable": bool(stable),
    }
    return VerificationReport("coeff-bound", sup_r, bool(stable and math.isfinite(sup_r)), err, R, params)


def sigma0_log_integral(w_mod: float, tol: float = 1e-8) -> InnerProduct:
    """int over |z| < 2|w| of |sigma_0(z)|^2 e^{-pi |z|^2} dm."""

    def integrand(z):
        return np.exp(2 * np.asarray(log_sigma0(z)).real - np.pi * np.abs(z) ** 2)

    ip = disk_integral(integrand, 2 * w_mod, tol=tol)
    return InnerProduct(ip.value.real, ip.error)


def verify_log_integral(moduli: Sequence[float] = (2, 4, 8), tol: float = 1e-8) -> VerificationReport:
    """Ratio of the disk integral of |sigma_0|^2 e^{-pi|z|^2} to log(1 + |w|), stable across dyadic shells."""
    vals, errs, ratios = [], [], []
    for m in moduli:
        ip = sigma0_log_integral(m, tol)
        vals.append(ip.value)
        errs.append(ip.error)
        ratios.append(ip.value / math.log1p(m))
    steps = [max(a, b) / min(a, b) for a, b in zip(ratios, ratios[1:])]
    stable = all(s <= STABILITY for s in steps)
    params = {"moduli": list(moduli), "integrals": vals, "ratios": ratios, "shell_steps": steps}
    return VerificationReport("log-integral", max(ratios), stable, max(errs), 2 * max(moduli), params)


# --------------------------------------------------------------------------
# sampling sum


def schur_constant() -> float:
    """sum_w e^{-pi|w|^2/2} over Z + iZ: a Schur-test bound for the lattice Gram matrix."""
    n = np.arange(-12, 13)
    return float(np.sum(np.exp(-np.pi * n * n / 2)) ** 2)


def theta_sampling_reference() -> float:
    """theta_3(e^{-pi})^2 - 1 = sum over nonzero lattice points of e^{-pi |w|^2}."""
    theta = math.pi**0.25 / gamma(0.75)
    return theta * theta - 1.0


def sampling_partial_sum(H: FockFunction, R: float) -> float:
    pts = lattice_points(R)
    pts = pts[pts != 0]
    if H.is_zero or pts.size == 0:
        return 0.0
    return float(np.sum(np.abs(H.weighted(pts)) ** 2))


def verify_sampling_sum(H: FockFunction, R: float = 6.0, tol: float = 1e-8) -> VerificationReport:
    """Partial sums of |H(w)|^2 / ||k_w||^2 over nonzero lattice points at R and R + 2.

    Passes when the increment is below ``tol * ||H||^2`` and the total respects
    the Schur bound; the measured constant total / ||H||^2 is recorded.
    """
    s_r = sampling_partial_sum(H, R)
    s_next = sampling_partial_sum(H, R + 2)
    inc = s_next - s_r
    norm_sq = 0.0 if H.is_zero else fock_norm(H).value ** 2
    bound = schur_constant() * norm_sq
    ok = inc <= tol * max(norm_sq, 1e-300) and s_r <= bound * (1 + 1e-12)
    if norm_sq == 0:
        ok = s_r == 0 and s_next == 0
    params = {
        "R": R,
        "sum_next": s_next,
        "increment": inc,
        "norm_sq": norm_sq,
        "measured_C": s_r / norm_sq if norm_sq else None,
        "schur_bound": bound,
    }
    return VerificationReport("sampling-sum", s_r, bool(ok), abs(inc) + 1e-15 * s_r, R, params)


# --------------------------------------------------------------------------
# interchange identity


@dataclass(frozen=True)
class InterchangeSides:
    lhs: complex
    rhs: complex
    tail: float
    terms: np.ndarray
    points: np.ndarray


def nearest_zeros(spec: GeneratorSpec, k: int = 3) -> tuple[complex, ...]:
    pts = spec.zero_set(4.0).array
    order = sorted(range(len(pts)), key=lambda i: (round(abs(pts[i]), 12), round(np.angle(pts[i]), 12)))
    return tuple(complex(pts[i]) for i in order[:k])


def _interchange_lhs(G: GeneratingFunction, S: FockFunction, lams) -> InnerProduct:
    """(F / prod(z - lam_j), S) in the Fock space."""
    from .dual import GeneratorQuotient

    if S.is_zero:
        return InnerProduct(0j, 0.0)
    if S.is_kernel_combination:
        total, mag = 0j, 0.0
        for c, p in S.terms:
            lq = complex(G.quotient_log(np.array([p.a]), lams)[0])
            if p.normalized:
                lq -= math.pi * abs(p.a) ** 2 / 2
            term = np.conj(c) * np.exp(lq)
            total += term
            mag += abs(term)
        return InnerProduct(complex(total), 1e-14 * mag)
    Q = FockFunction.of(GeneratorQuotient(G, tuple(lams)))
    return fock_inner_taylor(Q, S)


def _power_tail(points: np.ndarray, terms: np.ndarray, R: float) -> float:
    """Tail of sum over |w| > R from a power-law envelope A|w|^-p fitted on R/2 < |w| <= R.

    The envelope uses the largest term in each unit shell. Lattice density 1
    gives sum_{|w|>R} A |w|^-p ~ 2 pi A R^(2-p) / (p - 2).
    """
    mods = np.abs(points)
    mags = np.abs(terms)
    shells = np.arange(max(1, math.floor(R / 2)), math.ceil(R))
    xs, ys = [], []
    for k in shells:
        sel = (mods > k) & (mods <= k + 1)
        if np.any(sel):
            m = float(mags[sel].max())
            if m > 0:
                xs.append(math.log(k + 0.5))
                ys.append(math.log(m))
    if len(xs) < 3:
        return 0.0 if not np.any(mags[mods > R / 2] > 0) else math.inf
    slope, intercept = np.polyfit(xs, ys, 1)
    p = -slope
    if p <= 2.05:
        return math.inf
    return 2 * math.pi * math.exp(intercept) * R ** (2 - p) / (p - 2)


def interchange_sides(spec: GeneratorSpec, S: FockFunction, lams=None, R: float = DEFAULT_RADIUS) -> InterchangeSides:
    if not spec.disjoint_from_lattice():
        raise LatticeCollisionError("interchange check needs a zero set disjoint from Z + iZ")
    G = generating_function(spec)
    lams = tuple(nearest_zeros(spec)) if lams is None else tuple(complex(x) for x in lams)
    if len(lams) != 3 or len({(round(x.real, 12), round(x.imag, 12)) for x in lams}) != 3:
        raise ValueError("need three distinct zeros")
    for x in lams:
        G._classify(x)
    lhs = _interchange_lhs(G, S, lams)
    G0 = generating_function(LATTICE)
    pts = lattice_points(R)
    pts = pts[pts != 0]
    terms = np.zeros(pts.shape, dtype=complex)
    if not S.is_zero:
        lf = np.asarray(G.log(pts))
        for lam in lams:
            lf = lf - np.log(pts - lam)
        lf = lf - np.pi * np.abs(pts) ** 2 / 2
        b = np.array([coefficient(S, G0, w).value for w in pts])
        # the left side is conjugate linear in S, so the coefficients enter conjugated
        terms = np.exp(lf) * np.conj(b)
    rhs = complex(np.sum(terms))
    floor = 1e-15 * (abs(lhs.value) + float(np.sum(np.abs(terms))))
    tail = _power_tail(pts, terms, R) + floor + lhs.error
    return InterchangeSides(complex(lhs.value), rhs, tail, terms, pts)


def verify_interchange(spec: GeneratorSpec, S: FockFunction, lams=None, R: float = DEFAULT_RADIUS, rtol: float = 1e-5) -> VerificationReport:
    """Closed-form left side against the truncated lattice sum; passes when the gap is within tail + rtol |LHS|."""
    sides = interchange_sides(spec, S, lams, R)
    diff = abs(sides.lhs - sides.rhs)
    budget = sides.tail + rtol * abs(sides.lhs)
    rel = diff / abs(sides.lhs) if sides.lhs != 0 else diff
    params = {
        "system": spec.describe(),
        "lambdas": list(lams) if lams is not None else list(nearest_zeros(spec)),
        "lhs": sides.lhs,
        "relative_difference": rel,
        "tail_estimate": sides.tail,
    }
    return VerificationReport("interchange", sides.rhs, bool(diff <= budget), sides.tail, R, params)


# --------------------------------------------------------------------------
# |w| ||sigma_0(z)/(z - w)||^2


def w_sigma_norm(w: complex) -> InnerProduct:
    w = complex(w)
    G = generating_function(LATTICE)
    ip = quotient_norm_sq(G, w)
    return InnerProduct(abs(w) * ip.value, abs(w) * ip.error)


def verify_w_sigma_norm(w: complex, rel_budget: float = 1e-3) -> VerificationReport:
    """|w| ||sigma_0(z)/(z - w)||^2 by plane quadrature (the quotient is evaluated in closed form at z = w)."""
    ip = w_sigma_norm(w)
    ok = math.isfinite(ip.value) and ip.value > 0 and ip.error <= rel_budget * ip.value
    return VerificationReport("w-sigma-norm", float(ip.value), bool(ok), float(ip.error), None, {"w": complex(w)})


def verify_w_sigma_family(ws: Sequence[complex] = (1, 2, 4, 6), spread: float = 5.0) -> VerificationReport:
    """Boundedness across |w|: max/min of the values stays within ``spread``."""
    vals = [w_sigma_norm(w) for w in ws]
    v = [x.value for x in vals]
    ratio = max(v) / min(v)
    params = {"w": [complex(w) for w in ws], "values": v, "spread": spread}
    return VerificationReport("w-sigma-family", ratio, bool(ratio <= spread), max(x.error for x in vals) / min(v), None, params)


# --------------------------------------------------------------------------
# finite sections


@dataclass(frozen=True)
class Reconstruction:
    points: tuple[complex, ...]
    fock_coefficients: np.ndarray
    atom_coefficients: np.ndarray
    residual: float
    condition_number: float
    regularized: bool

    def atoms(self) -> list[tuple[complex, GaborAtom]]:
        out = []
        for c, w in zip(self.atom_coefficients, self.points):
            p = fock_to_phase(FockPoint(w))
            out.append((complex(c), GaborAtom(p)))
        return out


def _solve_psd(A: np.ndarray, d: np.ndarray, cond_max: float = 1e12) -> tuple[np.ndarray, float, bool]:
    vals, vecs = np.linalg.eigh(A)
    top = float(vals[-1])
    low = float(vals[0])
    cond = top / low if low > 0 else math.inf
    reg = cond > cond_max
    eps = 1e-12 * top if reg else 0.0
    coef = vecs @ ((vecs.conj().T @ d) / (vals + eps))
    return coef, cond, reg


def finite_section_reconstruct(f, spec: GeneratorSpec = LATTICE, R: float = 4.0) -> tuple[Reconstruction, float]:
    """Least-squares fit of f by atoms at the zeros inside |w| <= R.

    On the Fock side this is the orthogonal projection of Bf onto the span of
    the normalized kernels at those points. Its coefficient vector coincides
    with the biorthogonal coefficients of the fitted element. The residual
    ||f - reconstruction|| is read off the Gram quadratic form.
    """
    F = _to_fock(f)
    pts = spec.zero_set(R)
    p = pts.array
    norm_sq = 0.0 if F.is_zero else fock_norm(F).value ** 2
    if p.size == 0:
        r = Reconstruction((), np.zeros(0, complex), np.zeros(0, complex), math.sqrt(norm_sq), 1.0, False)
        return r, r.residual
    d = F.weighted(p) if not F.is_zero else np.zeros(p.shape, complex)
    A = np.conj(gram_matrix(p))
    c, cond, reg = _solve_psd(A, d)
    if reg:
        log.warning("finite section at R=%g ill conditioned (cond %.3e); Tikhonov fallback", R, cond)
    res_sq = norm_sq - 2 * float(np.real(np.vdot(c, d))) + float(np.real(np.vdot(c, A @ c)))
    residual = math.sqrt(max(res_sq, 0.0))
    # B g = 2^(-1/4) e^{i pi x y} k_hat with (x, y) the phase point of w
    x, y = p.real, -p.imag
    atom_c = c * 2**0.25 * np.exp(-1j * np.pi * x * y)
    rec = Reconstruction(tuple(complex(z) for z in p), c, atom_c, residual, cond, reg)
    return rec, residual


def verify_reconstruction_trend(f, radii: Sequence[float], spec: GeneratorSpec = LATTICE, strict: bool = True) -> VerificationReport:
    res = [finite_section_reconstruct(f, spec, r)[1] for r in radii]
    if strict:
        ok = all(b < a for a, b in zip(res, res[1:]))
    else:
        ok = all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(res, res[1:]))
    params = {"radii": list(radii), "residuals": res, "strict": strict, "system": spec.describe()}
    return VerificationReport("reconstruct-trend", res[-1] if res else 0.0, bool(ok), 1e-8, max(radii) if radii else None, params)


def verify_injectivity(spec: GeneratorSpec = LATTICE, R: float = 3.0, samples: int = 50, seed: int = 0) -> VerificationReport:
    """Random nonzero elements of the section span all have nonzero coefficient vectors."""
    rng = np.random.default_rng(seed)
    G = generating_function(spec)
    pts = spec.zero_set(R).array
    els = [biorth_element(G, lam) for lam in pts]
    # pairing[i, j] = <k_hat_j, F_i>
    pairing = np.array([el.pairing(pts) for el in els])
    worst = math.inf
    for _ in range(samples):
        c = rng.normal(size=pts.size) + 1j * rng.normal(size=pts.size)
        b = pairing @ c
        worst = min(worst, float(np.linalg.norm(b) / np.linalg.norm(c)))
    params = {"R": R, "samples": samples, "seed": seed, "points": int(pts.size), "system": spec.describe()}
    return VerificationReport("injectivity", worst, bool(worst > 1e-8), 0.0, R, params)


def random_kernel_combination(seed: int, terms: int = 5, radius: float = 2.0) -> FockFunction:
    """Seeded sum of normalized kernels at points of the square |x|, |y| <= radius."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-radius, radius, terms) + 1j * rng.uniform(-radius, radius, terms)
    c = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    return FockFunction(tuple((complex(ci), Kernel(complex(ai), normalized=True)) for ci, ai in zip(c, a)))


def random_hermite(seed: int, degree: int = 12) -> HermiteExpansion:
    rng = np.random.default_rng(seed)
    return HermiteExpansion(tuple(rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)))


def random_atom_combination(seed: int, terms: int = 5, radius: float = 2.0) -> list[tuple[complex, GaborAtom]]:
    """Seeded atoms whose Fock points lie in the disk of the given radius."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < terms:
        x, y = rng.uniform(-radius, radius, 2)
        if x * x + y * y <= radius * radius:
            c = complex(rng.normal(), rng.normal())
            out.append((c, GaborAtom.at(x, y)))
    return out
