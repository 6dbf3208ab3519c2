import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taucalc import (
    builtin_group,
    conjugation_action,
    cyclic,
    dihedral,
    inversion_action,
    sd_inv,
    sd_mul,
    semidirect,
    symmetric,
    trivial_action,
    validate_action,
    validate_group,
)
from taucalc.groups import StructureError, _action, from_table


def test_cyclic3_passes_validation():
    assert validate_group(cyclic(3))
    assert cyclic(3).cayley[1, 2] == 0


def test_corrupted_z3_reports_witness():
    t = np.array(cyclic(3).cayley).copy()
    t[1, 1] = 1
    rep = validate_group(from_table(t))
    assert not rep
    assert rep.axiom in ("identity", "associativity", "inverse", "latin")
    assert rep.witness is not None


def test_trivial_table():
    g = from_table([[0]])
    assert validate_group(g) and g.order == 1
    assert cyclic(1).order == 1


def test_malformed_table_is_structural():
    with pytest.raises(StructureError):
        from_table([[0, 1], [1]])
    with pytest.raises(StructureError):
        from_table([[0, 5], [1, 0]])


def test_symmetric3_nonabelian_and_ordered():
    s = symmetric(3)
    assert s.order == 6 and not s.is_abelian
    assert s.identity == 0
    with pytest.raises(ValueError):
        symmetric(7)


@pytest.mark.parametrize("spec,order", [("cyclic:5", 5), ({"kind": "dihedral", "n": 4}, 8), ("symmetric:4", 24), ("trivial", 1)])
def test_builtin_specs(spec, order):
    g = builtin_group(spec)
    assert g.order == order and validate_group(g)


def test_dihedral_is_nonabelian():
    assert not dihedral(3).is_abelian


def test_action_examples():
    Z2, Z3 = cyclic(2), cyclic(3)
    assert validate_action(Z2, Z3, _action(Z2, Z3, np.array([[0, 1, 2], [0, 2, 1]])))
    bad = validate_action(Z2, Z3, _action(Z2, Z3, np.array([[0, 1, 2], [1, 2, 0]])))
    assert not bad and bad.witness is not None
    assert validate_action(Z2, Z3, trivial_action(Z2, Z3))


def test_non_permutation_row_is_structural():
    Z2, Z3 = cyclic(2), cyclic(3)
    with pytest.raises(StructureError):
        validate_action(Z2, Z3, _action(Z2, Z3, np.array([[0, 1, 2], [0, 0, 1]])))


def test_semidirect_product_examples(D3):
    assert sd_mul(D3, (1, 1), (1, 2)) == (0, 2)
    assert sd_inv(D3, (1, 1)) == (1, 1)
    assert sd_mul(D3, (1, 1), (1, 1)) == (0, 0)
    assert sd_mul(D3, (1, 0), (0, 1)) == (1, 2)
    for k in range(3):
        assert sd_inv(D3, (0, k)) == (0, (-k) % 3)
        assert sd_mul(D3, (0, 0), (1, k)) == (1, k)


def test_semidirect_rejects_bad_action():
    Z2, Z3 = cyclic(2), cyclic(3)
    with pytest.raises(ValueError):
        semidirect(Z2, Z3, _action(Z2, Z3, np.array([[0, 1, 2], [1, 2, 0]])))


def test_trivial_h_reproduces_k():
    K = symmetric(3)
    G = semidirect(cyclic(1), K, trivial_action(cyclic(1), K))
    assert np.array_equal(G.cayley, K.cayley)


def test_finite_haar_is_unit(G):
    assert G.haar.is_unit
    assert np.all(np.asarray(G.haar.delta) == 1)
    for h in range(G.H.order):
        assert sorted(G.action.perm[h]) == list(range(G.K.order))


def test_exhaustive_group_laws(G):
    elems = list(itertools.product(range(G.H.order), range(G.K.order)))
    e = (G.H.identity, G.K.identity)
    for x in elems:
        assert sd_mul(G, x, sd_inv(G, x)) == e == sd_mul(G, sd_inv(G, x), x)
        for y in elems:
            xy = sd_mul(G, x, y)
            for z in elems:
                assert sd_mul(G, xy, z) == sd_mul(G, x, sd_mul(G, y, z))
    assert validate_group(G.as_finite_group())


def test_out_of_range_index(D3):
    with pytest.raises(IndexError):
        sd_mul(D3, (2, 0), (0, 0))


@st.composite
def semidirect_groups(draw):
    h = draw(st.sampled_from([1, 2, 4, 6]))
    kind = draw(st.sampled_from(["cyclic", "symmetric"]))
    K = cyclic(draw(st.integers(1, 9))) if kind == "cyclic" else symmetric(3)
    H = cyclic(h)
    choice = draw(st.sampled_from(["trivial", "inversion", "conjugation"]))
    if choice == "inversion" and h % 2 == 0 and K.is_abelian:
        act = inversion_action(H, K)
    elif choice == "conjugation" and kind == "symmetric" and h % 2 == 0:
        act = conjugation_action(H, K, draw(st.sampled_from([1, 2, 5])))
    else:
        act = trivial_action(H, K)
    return semidirect(H, K, act)


@settings(max_examples=40, deadline=None)
@given(semidirect_groups(), st.data())
def test_property_random_triples_associate(G, data):
    el = st.tuples(st.integers(0, G.H.order - 1), st.integers(0, G.K.order - 1))
    x, y, z = data.draw(el), data.draw(el), data.draw(el)
    assert sd_mul(G, sd_mul(G, x, y), z) == sd_mul(G, x, sd_mul(G, y, z))
    e = (G.H.identity, G.K.identity)
    assert sd_mul(G, x, sd_inv(G, x)) == e
