import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from l2betti.groupoids import (
    FiniteGroupoid, FiniteMeasuredSpace, GroupoidMorphism, MultiBundle,
    action_groupoid, base_bundle, bisection_permutation, bisections,
    build_groupoid, diagonal_embedding, enveloping, fiber_product,
    geometric_carrier, geometric_face, geometric_space, group_groupoid,
    groupoid_bundle, is_bisection, is_equivalence_relation, lusin_partition,
    orbit_and_isotropy, pair_relation, partition_relation, trivial_groupoid,
    uniform_space, validate_groupoid, verify_presimplicial_carrier,
    weighted_space,
)
from l2betti.groups import cyclic_table, symmetric_table


def c2_groupoid():
    table, unit, _ = cyclic_table(2)
    return group_groupoid(table, unit, name="C2")


def swap_action_groupoid():
    table, unit, _ = cyclic_table(2)
    x = uniform_space(2)
    action = {("g0", "x0"): "x0", ("g0", "x1"): "x1",
              ("g1", "x0"): "x1", ("g1", "x1"): "x0"}
    return action_groupoid(table, unit, action, x, name="C2swap")


def test_trivial_groupoid_valid():
    g = trivial_groupoid(uniform_space(3))
    rep = validate_groupoid(g)
    assert rep.ok and rep.element_count == 3


def test_group_as_groupoid_valid():
    g = c2_groupoid()
    rep = validate_groupoid(g)
    assert rep.ok and rep.element_count == 2


def test_s3_groupoid_valid():
    table, unit, _ = symmetric_table(3)
    g = group_groupoid(table, unit, name="S3")
    assert validate_groupoid(g).ok


def test_corrupted_composition_reports_associativity():
    g = pair_relation(uniform_space(2))
    comp = dict(g.compose)
    # corrupt one entry of the table away from a unit-law slot
    comp[(("x0", "x1"), ("x1", "x0"))] = ("x0", "x1")
    bad = FiniteGroupoid(g.base, g.elements, g.source, g.target,
                         g.inverse, comp, g.units)
    rep = validate_groupoid(bad)
    assert not rep.ok
    kinds = {v[0] for v in rep.violations}
    assert kinds & {"associativity", "composition_endpoints", "inverse_law_right",
                    "inverse_law_left", "unit_law_right", "unit_law_left"}


def test_pair_relation_shape():
    g = pair_relation(uniform_space(2))
    assert validate_groupoid(g).ok
    assert len(g.elements) == 4
    assert set(g.unit_set()) == {("x0", "x0"), ("x1", "x1")}


def test_partition_relation_singletons_is_trivial():
    x = uniform_space(3)
    g = partition_relation(x, [["x0"], ["x1"], ["x2"]])
    assert validate_groupoid(g).ok
    assert len(g.elements) == 3
    assert all(g.is_unit(a) for a in g.elements)


def test_partition_relation_blocks_21():
    x = uniform_space(3)
    g = partition_relation(x, [["x0", "x1"], ["x2"]])
    assert validate_groupoid(g).ok
    assert len(g.elements) == 5


def test_action_groupoid_swap_orbits():
    g = swap_action_groupoid()
    assert validate_groupoid(g).ok
    assert len(g.elements) == 4
    orbit, isotropy = orbit_and_isotropy(g)
    ref = pair_relation(uniform_space(2))
    assert set(orbit.elements) == set(ref.elements)
    assert all(isotropy.is_unit(a) for a in isotropy.elements)


def test_orbit_isotropy_of_pair_and_group():
    g = pair_relation(uniform_space(3))
    orbit, isotropy = orbit_and_isotropy(g)
    assert set(orbit.elements) == set(g.elements)
    assert len(isotropy.elements) == 3
    h = c2_groupoid()
    orbit, isotropy = orbit_and_isotropy(h)
    assert len(orbit.elements) == 1
    assert len(isotropy.elements) == 2


def test_action_on_point_isotropy_is_group():
    table, unit, _ = cyclic_table(2)
    pt = uniform_space(1)
    action = {("g0", "x0"): "x0", ("g1", "x0"): "x0"}
    g = action_groupoid(table, unit, action, pt)
    orbit, isotropy = orbit_and_isotropy(g)
    assert len(isotropy.elements) == 2
    assert len(orbit.elements) == 1


def test_enveloping_of_relation_is_isomorphic():
    g = pair_relation(uniform_space(3))
    e = enveloping(g)
    assert validate_groupoid(e).ok
    emb = diagonal_embedding(g)
    GroupoidMorphism(g, e, emb).check()
    assert len(e.elements) == len(g.elements)
    assert set(emb.values()) == set(e.elements)


def test_enveloping_of_group_is_square():
    g = c2_groupoid()
    e = enveloping(g)
    assert validate_groupoid(e).ok
    assert len(e.elements) == 4
    GroupoidMorphism(g, e, diagonal_embedding(g)).check()


def test_enveloping_trivial_is_trivial():
    g = trivial_groupoid(uniform_space(2))
    e = enveloping(g)
    assert len(e.elements) == 2
    assert all(e.is_unit(a) for a in e.elements)


def test_tuple_space_counts():
    pair2 = pair_relation(uniform_space(2))
    assert len(geometric_carrier(pair2, "nerve", 1)) == 4
    assert len(geometric_carrier(pair2, "classifying", 1)) == 8
    c2 = c2_groupoid()
    assert len(geometric_carrier(c2, "cyclic", 0)) == 2
    # nerve degree 0 is the base
    assert geometric_space(pair2, "nerve", 0).dim == 2


def test_presimplicial_identities_all_kinds():
    for g in (pair_relation(uniform_space(2)), c2_groupoid(),
              swap_action_groupoid()):
        for kind in ("nerve", "bar", "cyclic", "acyclic", "classifying"):
            for n in range(2, 5):
                assert verify_presimplicial_carrier(g, kind, n), (g.name, kind, n)


def test_fiber_product_is_nerve_degree_two():
    g = pair_relation(uniform_space(2))
    u = groupoid_bundle(g)
    fp = fiber_product(u, "s", u, "t")
    assert fp.dim == len(geometric_carrier(g, "nerve", 2))
    assert set(fp.carrier) == set(geometric_carrier(g, "nerve", 2))


def test_fiber_product_with_trivial_bundle():
    g = pair_relation(uniform_space(2))
    u = groupoid_bundle(g)
    x = base_bundle(g.base)
    fp = fiber_product(u, "s", x, "id")
    assert fp.dim == u.dim


def test_fiber_product_count_pair3():
    g = pair_relation(uniform_space(3))
    u = groupoid_bundle(g)
    fp = fiber_product(u, "s", u, "t")
    assert fp.dim == 27


def test_fiber_product_merged_map_bound():
    g = pair_relation(uniform_space(2))
    u = groupoid_bundle(g)
    fp = fiber_product(u, "s", u, "t")
    assert len(fp.maps) <= len(u.maps) + len(u.maps) - 1


def test_lusin_partition():
    g = pair_relation(uniform_space(3))
    u = groupoid_bundle(g)
    parts = lusin_partition(u, "s")
    assert len(parts) == 3
    assert sorted(x for p in parts for x in p) == sorted(u.carrier)
    for p in parts:
        srcs = [u.maps["s"][x] for x in p]
        assert len(set(srcs)) == len(srcs)
    ident = base_bundle(g.base)
    assert len(lusin_partition(ident, "id")) == 1
    empty = MultiBundle((), g.base, {"s": {}})
    assert lusin_partition(empty, "s") == []


def test_bisections_counts():
    assert len(bisections(c2_groupoid())) == 2
    assert len(bisections(pair_relation(uniform_space(3)))) == math.factorial(3)
    t = trivial_groupoid(uniform_space(3))
    bs = bisections(t)
    assert len(bs) == 1 and bs[0] == frozenset(t.unit_set())
    for b in bisections(pair_relation(uniform_space(2))):
        assert is_bisection(pair_relation(uniform_space(2)), b)


def test_bisection_permutation():
    g = pair_relation(uniform_space(2))
    for b in bisections(g):
        perm = bisection_permutation(g, b)
        assert sorted(perm.values()) == sorted(g.base.atoms)


def test_invariant_measure_required():
    # a block pairing atoms of different mass fails the t measure check
    x = weighted_space({"x0": Fraction(1, 4), "x1": Fraction(3, 4)})
    g = pair_relation(x)
    rep = validate_groupoid(g)
    assert not rep.ok
    assert any(v[0] == "target_not_measure_preserving" for v in rep.violations)


def test_build_groupoid_dispatch():
    g = build_groupoid("pair_relation", space=uniform_space(2))
    assert len(g.elements) == 4
    with pytest.raises(ValueError):
        build_groupoid("nope")
    with pytest.raises(ValueError):
        partition_relation(uniform_space(2), [["x0"]])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.data())
def test_random_partition_relations_validate(n, data):
    atoms = ["x%d" % i for i in range(n)]
    labels = data.draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    blocks = {}
    for a, l in zip(atoms, labels):
        blocks.setdefault(l, []).append(a)
    x = uniform_space(n)
    g = partition_relation(x, list(blocks.values()))
    assert validate_groupoid(g).ok
    assert is_equivalence_relation(g)
    e = enveloping(g)
    assert validate_groupoid(e).ok
    assert len(e.elements) == len(g.elements)
