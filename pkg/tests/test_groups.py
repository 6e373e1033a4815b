import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupsde.corpus import (
    all_automorphisms,
    builtin_groups,
    cyclic_group,
    dihedral_group,
    quaternion_group,
    symmetric_group,
)
from groupsde.errors import NoIdentity, NotAssociative, NotBijective, NotHomomorphism, NotLatinSquare
from groupsde.groups import (
    SdElement,
    build_automorphism,
    build_group,
    distality_check,
    identity_automorphism,
    pointwise_distal_check,
    right_cosets,
    semidirect_inv,
    semidirect_mul,
    semidirect_pow,
    subgroup_closure,
    trivial_subgroup,
    whole_group,
)

Z4 = cyclic_group(4)
S3 = symmetric_group(3)
NEG4 = build_automorphism(Z4, [0, 3, 2, 1])


def test_trivial_group():
    g = build_group([[0]], 0)
    assert g.order == 1 and g.inverse == (0,)


def test_z4_from_addition_table():
    g = build_group([[(i + j) % 4 for j in range(4)] for i in range(4)], 0)
    assert g.order == 4
    assert [g.inv(x) for x in range(4)] == [0, 3, 2, 1]
    assert g.element_order(1) == 4


def test_s3_is_nonabelian_and_associative_by_brute_force():
    T = S3.cayley
    assert S3.order == 6
    assert any(T[a][b] != T[b][a] for a in range(6) for b in range(6))
    triples = list(itertools.product(range(6), repeat=3))
    assert len(triples) == 216
    assert all(T[T[a][b]][c] == T[a][T[b][c]] for a, b, c in triples)


def test_rejects_non_latin_table():
    with pytest.raises(NotLatinSquare):
        build_group([[0, 1], [0, 1]], 0)


def test_rejects_wrong_identity():
    with pytest.raises(NoIdentity):
        build_group([[(i + j) % 3 for j in range(3)] for i in range(3)], 1)


def test_rejects_nonassociative_latin_square():
    # Latin square with identity 0 but (1*1)*2 != 1*(1*2)
    table = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ]
    with pytest.raises(NotAssociative):
        build_group(table, 0)


def test_sampled_associativity_above_bound():
    g = build_group(cyclic_group(7).cayley, 0, exhaustive_bound=3)
    assert g.order == 7


def test_identity_automorphism():
    phi = identity_automorphism(S3)
    assert phi.is_identity() and phi.order == 1


def test_negation_on_z4_has_order_two():
    assert NEG4.order == 2
    assert NEG4.map == (0, 3, 2, 1)


def test_doubling_on_z4_not_bijective():
    with pytest.raises(NotBijective):
        build_automorphism(Z4, [2 * x % 4 for x in range(4)])


def test_non_homomorphism_rejected():
    with pytest.raises(NotHomomorphism):
        build_automorphism(Z4, [0, 2, 1, 3])


def test_automorphism_powers():
    q8 = quaternion_group()
    for phi in all_automorphisms(q8):
        for n in range(-3, 4):
            for g in q8.elements:
                assert phi.apply(phi.apply(g, n), -n) == g


@pytest.mark.parametrize(
    "name,count",
    [("Z1", 1), ("Z5", 4), ("Z8", 4), ("Z12", 4), ("D4", 8), ("S3", 6), ("Q8", 24)],
)
def test_automorphism_counts(name, count):
    group = next(g for g in builtin_groups() if g.name == name)
    assert len(all_automorphisms(group)) == count


def test_subgroup_closure_examples():
    assert subgroup_closure(Z4, []).members == (0,)
    assert subgroup_closure(Z4, [2]).members == (0, 2)
    transposition = next(x for x in S3.elements if S3.element_order(x) == 2)
    assert len(subgroup_closure(S3, [transposition])) == 2


@given(st.lists(st.integers(0, 7), max_size=3), st.lists(st.integers(0, 7), max_size=3))
def test_closure_idempotent_and_monotone(a, b):
    d4 = dihedral_group(4)
    H = subgroup_closure(d4, a)
    assert subgroup_closure(d4, H.members).members == H.members
    assert set(H.members) <= set(subgroup_closure(d4, a + b).members)


def test_right_cosets():
    assert right_cosets(Z4, whole_group(Z4)) == [(0, 1, 2, 3)]
    assert right_cosets(Z4, trivial_subgroup(Z4)) == [(0,), (1,), (2,), (3,)]
    assert right_cosets(Z4, subgroup_closure(Z4, [2])) == [(0, 2), (1, 3)]


def test_right_cosets_are_right_cosets_in_s3():
    K = subgroup_closure(S3, [1])
    for coset in right_cosets(S3, K):
        g = coset[0]
        assert set(coset) == {S3.mul(k, g) for k in K.members}


def test_semidirect_examples():
    e = Z4.identity
    assert semidirect_mul(NEG4, SdElement(0, e), SdElement(0, e)) == (0, e)
    ident = identity_automorphism(Z4)
    assert semidirect_mul(ident, SdElement(3, 1), SdElement(-5, 2)) == (-2, 3)
    for g, h in itertools.product(Z4.elements, repeat=2):
        assert semidirect_mul(NEG4, SdElement(1, g), SdElement(1, h)) == (2, Z4.mul(g, NEG4(h)))


_Q8 = quaternion_group()
_Q8_AUTS = all_automorphisms(_Q8)
sd = st.builds(SdElement, st.integers(-8, 8), st.integers(0, 7))


@settings(max_examples=200)
@given(st.sampled_from(_Q8_AUTS), sd, sd, sd)
def test_semidirect_associative(phi, a, b, c):
    lhs = semidirect_mul(phi, a, semidirect_mul(phi, b, c))
    rhs = semidirect_mul(phi, semidirect_mul(phi, a, b), c)
    assert lhs == rhs


@given(st.sampled_from(_Q8_AUTS), sd)
def test_semidirect_inverse_two_sided(phi, a):
    inv = semidirect_inv(phi, a)
    assert inv == (-a.n, phi.apply(_Q8.inv(a.g), -a.n))
    e = SdElement(0, _Q8.identity)
    assert semidirect_mul(phi, a, inv) == e
    assert semidirect_mul(phi, inv, a) == e


@given(st.sampled_from(_Q8_AUTS), sd, st.integers(-6, 6))
def test_semidirect_power(phi, a, k):
    expected = SdElement(0, _Q8.identity)
    step = a if k >= 0 else semidirect_inv(phi, a)
    for _ in range(abs(k)):
        expected = semidirect_mul(phi, expected, step)
    assert semidirect_pow(phi, a, k) == expected


def test_distality_examples():
    assert distality_check(identity_automorphism(Z4))
    assert distality_check(NEG4)
    assert pointwise_distal_check(Z4)
    assert pointwise_distal_check(S3)
    assert pointwise_distal_check(cyclic_group(1))


def test_distality_on_whole_corpus():
    for group in builtin_groups():
        assert pointwise_distal_check(group)
        assert all(distality_check(phi) for phi in all_automorphisms(group))
