import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import eval_hermite, gammaln

from gaborfock.bargmann import (
    HERMITE_BARGMANN_PHASES,
    GaborAtom,
    HermiteExpansion,
    atom_inner,
    bargmann_atom,
    bargmann_pointwise,
    bargmann_transform,
    default_t_grid,
    hermite_functions,
)
from gaborfock.errors import DomainTooSmallError
from gaborfock.fock import FockFunction, fock_inner_taylor, fock_norm

T = default_t_grid()


def quad_pair(a, b):
    """int a conj(b) over [-12, 12] by adaptive quadrature, real and imaginary parts separately."""
    f = lambda t: a(t) * np.conj(b(t))
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=400)
    re = integrate.quad(lambda t: f(t).real, -12, 12, **opts)[0]
    im = integrate.quad(lambda t: f(t).imag, -12, 12, **opts)[0]
    return complex(re, im)


def hermite_oracle(n, t):
    """Closed form via physicists' Hermite polynomials (scipy)."""
    x = math.sqrt(2 * math.pi) * t
    logc = -0.5 * (n * math.log(2) + gammaln(n + 1)) - 0.25 * math.log(math.pi)
    return (2 * math.pi) ** 0.25 * math.exp(logc) * eval_hermite(n, x) * np.exp(-x * x / 2)


# -- atoms ------------------------------------------------------------------


def test_atom_norm():
    for x, y in [(0, 0), (1.5, -2), (-3, 3)]:
        a = GaborAtom.at(x, y)
        assert quad_pair(a, a).real == pytest.approx(2**-0.5, rel=1e-12)
        assert a.norm_sq == 2**-0.5


@pytest.mark.parametrize("p,q", [((0, 0), (0, 0)), ((0, 0), (1, 0)), ((0.3, -0.7), (1, 0)), ((-2, 1), (1.5, 2.5)), ((3, 3), (2.2, 2.9))])
def test_atom_inner_against_quadrature(p, q):
    a, b = GaborAtom.at(*p), GaborAtom.at(*q)
    assert abs(atom_inner(a, b) - quad_pair(a, b)) < 1e-13


def test_atom_inner_examples():
    o = GaborAtom.at(0, 0)
    assert atom_inner(o, o) == pytest.approx(2**-0.5, rel=1e-15)
    assert abs(atom_inner(o, GaborAtom.at(1, 0))) == pytest.approx(2**-0.5 * math.exp(-math.pi / 2), rel=1e-14)
    assert abs(atom_inner(o, GaborAtom.at(1, 0))) == pytest.approx(0.14700, abs=1e-5)
    decay = [abs(atom_inner(o, GaborAtom.at(0, y))) for y in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(decay, decay[1:])) and decay[-1] < 1e-40


# -- Hermite functions ------------------------------------------------------


def test_hermite_recurrence_matches_closed_form():
    h = hermite_functions(20, T)
    for n in (0, 1, 5, 13, 20):
        assert np.allclose(h[n], hermite_oracle(n, T), atol=1e-12)


def test_hermite_orthonormal():
    h = hermite_functions(20, T)
    step = T[1] - T[0]
    G = (h * step) @ h.T
    assert np.abs(G - np.eye(21)).max() < 1e-10


def test_h0_is_normalized_gaussian():
    assert np.allclose(hermite_functions(0, T)[0], 2**0.25 * np.exp(-np.pi * T * T))


# -- transform --------------------------------------------------------------


def test_bargmann_atom_origin_is_constant():
    F = bargmann_atom(GaborAtom.at(0, 0))
    for z in (0, 1j, 2 - 1j):
        assert F(z) == pytest.approx(2**-0.25, rel=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_bargmann_atom_norm(x, y):
    assert fock_norm(bargmann_atom(GaborAtom.at(x, y))).value == pytest.approx(2**-0.25, rel=1e-12)


def test_bargmann_atom_at_minus_i():
    # quadrature of the defining integral is the reference
    a = GaborAtom.at(1, 0)
    ref = bargmann_pointwise(a(T), T, -1j)
    closed = bargmann_atom(a)(-1j)
    assert abs(closed - ref.value) <= ref.error + 1e-12
    assert closed == pytest.approx(-(2**-0.25) * math.exp(-math.pi / 2), rel=1e-12)


def test_kernel_image_grid():
    g = np.linspace(-2.1, 2.1, 10)
    zs = (g[:, None] + 1j * g[None, :]).ravel()
    assert np.all(np.abs(zs) <= 3)
    rng = np.random.default_rng(17)
    for _ in range(5):
        a = GaborAtom.at(*rng.uniform(-2, 2, 2))
        F = bargmann_atom(a)
        samples = a(T)
        for z in zs:
            assert abs(bargmann_pointwise(samples, T, z).value - F(z)) < 1e-8


def test_pointwise_examples():
    gauss = np.exp(-np.pi * T * T)
    for z in (0, 1 + 1j, -2j):
        assert bargmann_pointwise(gauss, T, z).value == pytest.approx(2**-0.25, rel=1e-12)
    a = GaborAtom.at(1, 0)
    assert bargmann_pointwise(a(T), T, 0).value == pytest.approx(2**-0.25 * math.exp(-math.pi / 2), rel=1e-12)
    assert bargmann_pointwise(np.zeros_like(T), T, 0.5).value == 0


def test_pointwise_domain_too_small():
    t = default_t_grid(T=2.0)
    with pytest.raises(DomainTooSmallError):
        bargmann_pointwise(GaborAtom.at(1.8, 0)(t), t, 1.0)


def test_hermite_phases_frozen():
    h = hermite_functions(30, T)
    for n in range(31):
        ip = bargmann_pointwise(h[n], T, 1.0)
        mag = math.exp(0.5 * (n * math.log(math.pi) - gammaln(n + 1)))
        assert abs(ip.value - mag * HERMITE_BARGMANN_PHASES[n]) <= ip.error + 1e-12 * mag


def test_transform_hermite_basis():
    F0 = bargmann_transform(HermiteExpansion.basis(0))
    assert fock_norm(F0).value == pytest.approx(1, rel=1e-15)
    F3 = bargmann_transform(HermiteExpansion.basis(3))
    F5 = bargmann_transform(HermiteExpansion.basis(5))
    assert abs(fock_inner_taylor(F3, F5).value) < 1e-15
    h3 = hermite_functions(3, T)[3]
    for z in (0.4, 1 - 1j, -1.5j):
        assert abs(bargmann_pointwise(h3, T, z).value - F3(z)) < 1e-9


def test_unitarity_against_quadrature():
    rng = np.random.default_rng(0)
    step = T[1] - T[0]
    for _ in range(20):
        c = rng.normal(size=13) + 1j * rng.normal(size=13)
        f = HermiteExpansion(tuple(c))
        l2 = math.sqrt(float(np.sum(np.abs(f(T)) ** 2) * step))
        assert l2 == pytest.approx(f.norm, rel=1e-10)
        F = bargmann_transform(f)
        assert abs(fock_norm(F).value / l2 - 1) <= 1e-6
        z = complex(*rng.uniform(-2, 2, 2))
        assert abs(bargmann_pointwise(f(T), T, z).value - F(z)) <= 1e-8 * max(1, abs(F(z)))


def test_transform_atom_combination_linear():
    a, b = GaborAtom.at(1, 1), GaborAtom.at(-0.5, 2)
    F = bargmann_transform([(2.0, a), (1j, b)])
    for z in (0.2, 1 + 1j):
        assert F(z) == pytest.approx(2 * bargmann_atom(a)(z) + 1j * bargmann_atom(b)(z), rel=1e-14)


def test_intertwining():
    grid = [-3, -1.5, 0, 1.5, 3]
    atoms = [GaborAtom.at(x, y) for x in grid for y in grid]
    images = [bargmann_atom(a) for a in atoms]
    for i, a in enumerate(atoms):
        for j, b in enumerate(atoms):
            ip = fock_inner_taylor(images[i], images[j])
            assert abs(ip.value - atom_inner(a, b)) <= ip.error + 1e-14


def test_hermite_expansion_checks():
    with pytest.raises(ValueError):
        bargmann_transform(HermiteExpansion.basis(40))
    assert HermiteExpansion((3, 4j)).norm == 5
