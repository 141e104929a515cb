"""Bargmann transform between L^2(R) and the Fock space.

Definition used throughout (the integral form)::

    Bf(z) = 2**(1/4) * int f(t) exp(-pi t^2 + 2 pi t z - pi z^2 / 2) dt.

Completing the square for the atom ``g_(x,y)(t) = exp(2 pi i y t) exp(-pi (t-x)^2)``
gives::

    B g_(x,y) = 2**(-1/4) * exp(i pi x y) * k_w / ||k_w||,   w = x - i y,

so the unimodular factor ``exp(i pi x y)`` is part of the image and the
kernel point is ``w = phase_to_fock(x, y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .errors import DomainTooSmallError
from .fock import FockFunction, InnerProduct, Kernel, Monomial, PhasePoint, phase_to_fock

__all__ = [
    "HERMITE_BARGMANN_PHASES",
    "GaborAtom",
    "HermiteExpansion",
    "atom_inner",
    "bargmann_atom",
    "bargmann_pointwise",
    "bargmann_transform",
    "default_t_grid",
    "hermite_functions",
]

# B(h_n) = phase_n * sqrt(pi^n / n!) * z^n; phases read off B(h_n)(1) by
# quadrature on the default grid (see tests/test_bargmann.py), n <= 30.
HERMITE_BARGMANN_PHASES: tuple[complex, ...] = (1.0 + 0j,) * 31

T_MAX = 12.0
T_STEP = 1.0 / 64


def default_t_grid(T: float = T_MAX, step: float = T_STEP) -> np.ndarray:
    n = int(round(T / step))
    return np.arange(-n, n + 1) * step


@dataclass(frozen=True)
class GaborAtom:
    """t -> exp(2 pi i y t) exp(-pi (t - x)^2) for location (x, y)."""

    location: PhasePoint

    @classmethod
    def at(cls, x: float, y: float) -> "GaborAtom":
        return cls(PhasePoint(float(x), float(y)))

    def __call__(self, t):
        x, y = self.location.x, self.location.y
        t = np.asarray(t, dtype=float)
        return np.exp(2j * np.pi * y * t - np.pi * (t - x) ** 2)

    @property
    def fock_point(self) -> complex:
        return phase_to_fock(self.location).w

    norm_sq = 2 ** -0.5


def atom_inner(a: GaborAtom, b: GaborAtom) -> complex:
    """int a(t) conj(b(t)) dt in closed form.

    The exponent is -2 pi t^2 + 2 pi s t - pi (x1^2 + x2^2) with
    s = x1 + x2 + i (y1 - y2); the Gaussian integral gives
    2**-0.5 * exp(pi s^2 / 2 - pi (x1^2 + x2^2)).
    """
    x1, y1 = a.location.x, a.location.y
    x2, y2 = b.location.x, b.location.y
    s = complex(x1 + x2, y1 - y2)
    return complex(2 ** -0.5 * np.exp(np.pi * s * s / 2 - np.pi * (x1 * x1 + x2 * x2)))


def hermite_functions(n_max: int, t) -> np.ndarray:
    """Rows h_0..h_n_max of the Hermite functions orthonormal in L^2(R), adapted to exp(-pi t^2).

    h_n(t) = (2 pi)^(1/4) psi_n(sqrt(2 pi) t) with psi_n the standard
    Hermite functions; h_0 = 2^(1/4) exp(-pi t^2).
    """
    t = np.asarray(t, dtype=float)
    x = math.sqrt(2 * math.pi) * t
    h = np.zeros((n_max + 1,) + t.shape)
    h[0] = math.pi ** -0.25 * np.exp(-x * x / 2)
    if n_max >= 1:
        h[1] = math.sqrt(2.0) * x * h[0]
    for n in range(1, n_max):
        h[n + 1] = math.sqrt(2.0 / (n + 1)) * x * h[n] - math.sqrt(n / (n + 1)) * h[n - 1]
    return (2 * math.pi) ** 0.25 * h


@dataclass(frozen=True)
class HermiteExpansion:
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))

    @classmethod
    def basis(cls, n: int) -> "HermiteExpansion":
        return cls((0,) * n + (1,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.coefficients))

    def __call__(self, t):
        h = hermite_functions(self.degree, t)
        return np.tensordot(np.array(self.coefficients), h, axes=1)


def bargmann_atom(a: GaborAtom) -> FockFunction:
    x, y = a.location.x, a.location.y
    phase = np.exp(1j * np.pi * x * y)
    return FockFunction.of(Kernel(a.fock_point, normalized=True), 2 ** -0.25 * phase)


def bargmann_transform(f: HermiteExpansion | GaborAtom | Sequence[tuple[complex, GaborAtom]]) -> FockFunction:
    """B f in closed form for Hermite expansions, single atoms and atom combinations."""
    if isinstance(f, GaborAtom):
        return bargmann_atom(f)
    if isinstance(f, HermiteExpansion):
        if f.degree >= len(HERMITE_BARGMANN_PHASES):
            raise ValueError(f"Hermite degree {f.degree} beyond the frozen phase table")
        terms = []
        for n, c in enumerate(f.coefficients):
            if c != 0:
                norm = math.exp(0.5 * (n * math.log(math.pi) - math.lgamma(n + 1)))
                terms.append((c * HERMITE_BARGMANN_PHASES[n] * norm, Monomial(n)))
        return FockFunction(tuple(terms))
    out = FockFunction.zero()
    for c, atom in f:
        out = out + bargmann_atom(atom) * c
    return out


def bargmann_pointwise(samples, t, z: complex, tol: float = 1e-8) -> InnerProduct:
    """Trapezoid value of 2^(1/4) int f(t) exp(-pi t^2 + 2 pi t z - pi z^2/2) dt on a uniform grid.

    The error estimate adds the step-halving difference, a rounding term for
    the samples and a Gaussian tail term that assumes |f| beyond the grid
    stays below its largest sample in the outer tenth of the grid.
    """
    f = np.asarray(samples, dtype=complex)
    t = np.asarray(t, dtype=float)
    z = complex(z)
    h = float(t[1] - t[0])
    T = float(min(-t[0], t[-1]))
    pre = 2 ** 0.25 * np.exp(-np.pi * z * z / 2)
    g = f * np.exp(-np.pi * t * t + 2 * np.pi * t * z)
    full = pre * h * (np.sum(g) - 0.5 * (g[0] + g[-1]))
    g2 = g[::2]
    half = pre * 2 * h * (np.sum(g2) - 0.5 * (g2[0] + g2[-1]))
    value = complex(full)
    quad_err = abs(full - half) if len(t) % 2 == 1 else 0.0
    # samples are only known to a few ulps of their largest value
    f_max = float(np.max(np.abs(f))) if f.size else 0.0
    weight = np.abs(np.exp(-np.pi * t * t + 2 * np.pi * t * z))
    quad_err += 16 * np.finfo(float).eps * abs(pre) * h * f_max * float(np.sum(weight))

    edge = np.abs(t) >= 0.9 * T
    f_edge = float(np.max(np.abs(f[edge]))) if np.any(edge) else 0.0
    x0 = z.real
    tail = 0.0
    if f_edge > 0:
        tail = (
            abs(pre)
            * f_edge
            * math.exp(math.pi * x0 * x0)
            * 0.5
            * (erfc(math.sqrt(math.pi) * (T - x0)) + erfc(math.sqrt(math.pi) * (T + x0)))
        )
    if tail > tol * max(1.0, abs(value)):
        raise DomainTooSmallError(f"Gaussian tail {tail:.2e} exceeds tolerance on [-{T}, {T}]")
    return InnerProduct(value, quad_err + tail)
