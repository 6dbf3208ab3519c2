from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

import oracle as O
from conftest import GROUPS
from taucalc import (
    GFunction,
    KFunction,
    PhiDensity,
    associator_tau,
    conv_K,
    cyclic,
    in_J1,
    involution_K,
    involution_tau,
    k_point_mass,
    k_zero,
    lconv,
    lift_phi,
    norm,
    point_mass,
    psi_phi_embed,
    random_gfunction,
    random_kfunction,
    rconv,
    section,
    standard_conv_G,
    symmetric,
    tconv,
    tilde,
    zero,
)
from taucalc.scalars import ExactArray, exact_eq

# ---------------------------------------------------------------- strategies
fracs = st.fractions(min_value=-6, max_value=6, max_denominator=6)
gauss = st.tuples(fracs, fracs)


@st.composite
def gfuncs(draw, G, n=1):
    out = []
    for _ in range(n):
        vals = draw(st.lists(gauss, min_size=G.order, max_size=G.order))
        rows = [[[str(a), str(b)] for a, b in vals[h * G.K.order:(h + 1) * G.K.order]] for h in range(G.H.order)]
        out.append(GFunction(G, ExactArray.from_values(rows)))
    return out


group_names = st.sampled_from(list(GROUPS))
PROP = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _draw(data, n):
    G = GROUPS[data.draw(group_names)]
    return G, data.draw(gfuncs(G, n))


# ----------------------------------------------------------- worked examples
def test_section_examples(D3):
    f = point_mass(D3, 1, 2)
    assert section(f, 1) == k_point_mass(D3.K, 2)
    assert section(f, 0) == k_zero(D3.K)


def test_tilde_example(D3):
    f = point_mass(D3, 0, 1) + point_mass(D3, 1, 1)
    assert tilde(f) == k_point_mass(D3.K, 1, c=2)
    assert tilde(zero(D3)) == k_zero(D3.K)


def test_conv_k_examples():
    Z3, S3 = cyclic(3), symmetric(3)
    assert conv_K(k_point_mass(Z3, 1), k_point_mass(Z3, 2)) == k_point_mass(Z3, 0)
    a, b = 1, 2  # two transpositions in lexicographic order
    assert S3.mul(a, b) != S3.mul(b, a)
    assert conv_K(k_point_mass(S3, a), k_point_mass(S3, b)) == k_point_mass(S3, S3.mul(a, b))
    assert conv_K(k_point_mass(S3, a), k_point_mass(S3, b)) != conv_K(k_point_mass(S3, b), k_point_mass(S3, a))


def test_involution_k_examples():
    Z3 = cyclic(3)
    assert involution_K(k_point_mass(Z3, 1)) == k_point_mass(Z3, 2)
    assert involution_K(k_point_mass(Z3, 1, c=(0, 1))) == k_point_mass(Z3, 2, c=(0, -1))


def test_one_sided_convolution_examples(D3):
    f, g = point_mass(D3, 0, 1), point_mass(D3, 1, 2)
    assert rconv(f, g) == point_mass(D3, 0, 0)
    assert lconv(f, g) == point_mass(D3, 1, 0)
    half = Fraction(1, 2)
    assert tconv(f, g) == point_mass(D3, 0, 0, c=half) + point_mass(D3, 1, 0, c=half)
    assert tconv(f, g) == tconv(g, f)
    assert rconv(f, zero(D3)).is_zero() and lconv(zero(D3), g).is_zero() and tconv(f, zero(D3)).is_zero()


def test_involution_tau_example(D3):
    assert involution_tau(point_mass(D3, 1, 1)) == point_mass(D3, 1, 2)


def test_standard_convolution_example(D3):
    assert standard_conv_G(point_mass(D3, 1, 1), point_mass(D3, 1, 2)) == point_mass(D3, 0, 2)
    f = random_gfunction(D3, np.random.default_rng(1), complex_values=True)
    assert standard_conv_G(f, point_mass(D3, 0, 0)) == f


def test_lift_example(D3):
    Phi = PhiDensity.uniform(D3)
    psi = random_kfunction(D3.K, np.random.default_rng(2), complex_values=True)
    L = lift_phi(Phi, psi)
    for h in range(2):
        assert section(L, h) == psi.scale(Fraction(1, 2))
    assert tilde(L) == psi
    assert lift_phi(Phi, k_zero(D3.K)).is_zero()


def test_psi_phi_examples(D3):
    psi = k_point_mass(D3.K, 1)
    e = psi_phi_embed([1, 0], psi, D3)
    assert section(e, 0) == psi and section(e, 1) == k_zero(D3.K)
    u = psi_phi_embed([Fraction(1, 2), Fraction(1, 2)], psi, D3)
    assert u == point_mass(D3, 0, 1, c=Fraction(1, 2)) + point_mass(D3, 1, 1, c=Fraction(1, 2))
    assert tilde(u) == psi
    d = e - u
    assert in_J1(d) and not d.is_zero()


def test_in_j1_examples(D3):
    assert in_J1(point_mass(D3, 0, 1) - point_mass(D3, 1, 1))
    assert not in_J1(point_mass(D3, 0, 1))


def test_associator_example_corrected(D3):
    f = g = point_mass(D3, 0, 0)
    u = point_mass(D3, 1, 0)
    q = Fraction(1, 4)
    assert associator_tau(f, g, u) == point_mass(D3, 1, 0, c=q) - point_mass(D3, 0, 0, c=q)
    # the same value from the sympy oracle
    fd, gd, ud = O.to_dict(f), O.to_dict(g), O.to_dict(u)
    want = O.sub(O.tconv(D3, O.tconv(D3, fd, gd), ud), O.tconv(D3, fd, O.tconv(D3, gd, ud)))
    assert O.from_dict(want, D3) == associator_tau(f, g, u)


def test_associator_vanishes_for_trivial_h(groups):
    G = groups["1xZ4"]
    rng = np.random.default_rng(3)
    f, g, u = (random_gfunction(G, rng, complex_values=True) for _ in range(3))
    assert associator_tau(f, g, u).is_zero()
    assert associator_tau(zero(G), g, u).is_zero()


def test_norm_examples(D3):
    assert norm(point_mass(D3, 0, 1), 1) == 1
    f = random_gfunction(D3, np.random.default_rng(4), complex_values=True)
    direct = sum(abs(complex(z)) ** 2 for z in f.values.to_complex().flat)
    assert float(norm(f, 2)) ** 2 == pytest.approx(direct, rel=1e-12)
    assert norm(f.scale(3), 1) == 3 * norm(f, 1) or float(norm(f.scale(3), 1)) == pytest.approx(3 * float(norm(f, 1)))


def test_trivial_h_reduces_to_conv_k(groups):
    G = groups["1xZ4"]
    rng = np.random.default_rng(5)
    f, g = random_gfunction(G, rng, complex_values=True), random_gfunction(G, rng, complex_values=True)
    expect = conv_K(section(f, 0), section(g, 0))
    for op in (rconv, lconv, tconv, standard_conv_G):
        assert section(op(f, g), 0) == expect


# ------------------------------------------------------------- oracle checks
@pytest.mark.parametrize("op", ["rconv", "lconv", "tconv", "standard"])
def test_against_sympy_oracle(G, op):
    rng = np.random.default_rng(11)
    mine = {"rconv": rconv, "lconv": lconv, "tconv": tconv, "standard": standard_conv_G}[op]
    ref = {"rconv": O.rconv, "lconv": O.lconv, "tconv": O.tconv, "standard": O.standard}[op]
    for _ in range(3):
        f, g = random_gfunction(G, rng, complex_values=True), random_gfunction(G, rng, complex_values=True)
        assert mine(f, g) == O.from_dict(ref(G, O.to_dict(f), O.to_dict(g)), G)


def test_involution_and_tilde_against_oracle(G):
    f = random_gfunction(G, np.random.default_rng(12), complex_values=True)
    assert involution_tau(f) == O.from_dict(O.involution(G, O.to_dict(f)), G)
    assert tilde(f) == O.k_from_dict(O.tilde(G, O.to_dict(f)), G.K)


def test_float_backend_matches_exact(G):
    rng = np.random.default_rng(13)
    f, g = random_gfunction(G, rng, complex_values=True), random_gfunction(G, rng, complex_values=True)
    ff, gf = f.to_backend("float"), g.to_backend("float")
    for op in (rconv, lconv, tconv, standard_conv_G):
        assert np.allclose(op(ff, gf).values, op(f, g).values.to_complex(), atol=1e-12)


def test_batched_equals_loop(D3):
    rng = np.random.default_rng(14)
    F = random_gfunction(D3, rng, complex_values=True, batch=(4,))
    g = random_gfunction(D3, rng, complex_values=True)
    from taucalc.algebra import item

    T = tconv(F, g)
    for i in range(4):
        assert item(T, (i,)) == tconv(item(F, (i,)), g)


def test_group_mismatch(groups):
    from taucalc.algebra import GroupMismatch

    with pytest.raises(GroupMismatch):
        tconv(point_mass(groups["Z2xZ3"], 0, 0), point_mass(groups["Z2xZ4"], 0, 0))


def test_phi_density_validation(D3):
    with pytest.raises(ValueError):
        PhiDensity(point_mass(D3, 0, 0, c=2))
    with pytest.raises(ValueError):
        PhiDensity(point_mass(D3, 0, 0, c=-1) + point_mass(D3, 0, 1, c=2))


# ------------------------------------------------------------ property tests
@PROP
@given(st.data())
def test_property_one_sided_associativity(data):
    G, (f, g, u) = _draw(data, 3)
    assert rconv(rconv(f, g), u) == rconv(f, rconv(g, u))
    assert lconv(lconv(f, g), u) == lconv(f, lconv(g, u))


@PROP
@given(st.data())
def test_property_mixed_chain_collapse(data):
    G, (f, g, u) = _draw(data, 3)
    r = rconv(rconv(f, g), u)
    assert rconv(f, lconv(g, u)) == r == rconv(f, rconv(g, u))
    assert lconv(rconv(f, g), u) == lconv(f, lconv(g, u))


@PROP
@given(st.data())
def test_property_associator_identity(data):
    G, (f, g, u) = _draw(data, 3)
    lll = lconv(lconv(f, g), u)
    rrr = rconv(rconv(f, g), u)
    assert associator_tau(f, g, u) == (lll - rrr).scale(Fraction(1, 4))


@PROP
@given(st.data())
def test_property_star_algebra(data):
    G, (f, g) = _draw(data, 2)
    fs = involution_tau(f)
    assert involution_tau(fs) == f
    assert exact_eq(norm(fs, 1), norm(f, 1))
    assert involution_tau(tconv(f, g)) == tconv(involution_tau(g), fs)
    c = (Fraction(2, 3), Fraction(-1, 2))
    assert involution_tau(f.scale(c)) == fs.scale((c[0], -c[1]))


@PROP
@given(st.data())
def test_property_projection_homomorphism(data):
    G, (f, g) = _draw(data, 2)
    t = conv_K(tilde(f), tilde(g))
    assert tilde(rconv(f, g)) == tilde(lconv(f, g)) == tilde(tconv(f, g)) == t
    assert tilde(involution_tau(f)) == involution_K(tilde(f))
    assert float(norm(tilde(f), 1)) <= float(norm(f, 1)) * (1 + 1e-12)


@PROP
@given(st.data())
def test_property_submultiplicative(data):
    G, (f, g) = _draw(data, 2)
    bound = float(norm(f, 1)) * float(norm(g, 1))
    for op in (rconv, lconv, tconv):
        assert float(norm(op(f, g), 1)) <= bound * (1 + 1e-12) + 1e-12


@PROP
@given(st.data())
def test_property_lift_items(data):
    G, (f,) = _draw(data, 1)
    psi = section(f, 0) + k_point_mass(G.K, G.K.order - 1)
    Phi = PhiDensity.uniform(G)
    L = lift_phi(Phi, psi)
    ft = tilde(f)
    mass = Fraction(1, G.H.order)
    left, right = tconv(L, f), tconv(f, L)
    for h in range(G.H.order):
        fh = section(f, h)
        assert section(left, h) == (conv_K(psi, ft).scale(mass) + conv_K(psi, fh)).scale(Fraction(1, 2))
        assert section(right, h) == (conv_K(fh, psi) + conv_K(ft, psi).scale(mass)).scale(Fraction(1, 2))


@PROP
@given(st.data())
def test_property_commutative_when_k_abelian(data):
    G, (f, g) = _draw(data, 2)
    if G.K.is_abelian:
        assert tconv(f, g) == tconv(g, f)
        ff = tconv(f, f)
        assert tconv(tconv(f, g), ff) == tconv(f, tconv(g, ff))


@PROP
@given(st.data())
def test_property_kernel_is_two_sided_ideal(data):
    G, (f, g) = _draw(data, 2)
    j = f - psi_phi_embed([1] + [0] * (G.H.order - 1), tilde(f), G)
    assert in_J1(j)
    assert in_J1(tconv(j, g)) and in_J1(tconv(g, j))


def test_noncommutative_witness_on_s3(groups):
    G = groups["Z2xS3"]
    f, g = point_mass(G, 0, 1), point_mass(G, 0, 2)
    assert tconv(f, g) != tconv(g, f)


def test_coincidence_dichotomy(groups):
    for name, G in groups.items():
        pairs = [(point_mass(G, a, b), point_mass(G, c, d)) for a in range(G.H.order) for b in range(G.K.order)
                 for c in range(G.H.order) for d in range(G.K.order)]
        same = all(tconv(f, g) == standard_conv_G(f, g) for f, g in pairs)
        assert same == G.h_trivial, name
