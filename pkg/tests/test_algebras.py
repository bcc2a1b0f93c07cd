from fractions import Fraction

import pytest

from l2betti.algebras import (
    Extension, TracialStarAlgebra, TwoCocycle, all_sign_cocycles,
    coboundary_cocycle, compression, conditional_expectation,
    convolution_algebra, diagonal_subalgebra_vectors,
    distinct_triple_sign_cocycle, expectation_conjugation_report,
    full_extension, group_algebra, groupoid_algebra_map, matrix_algebra,
    normalizer_span, trivial_cocycle, trivial_extension, twisted_convolution,
    validate_algebra, validate_cocycle, weighted_sum, weighted_sum_algebras,
)
from l2betti.groupoids import (
    action_groupoid, diagonal_embedding, enveloping, group_groupoid,
    pair_relation, trivial_groupoid, uniform_space,
)
from l2betti.groups import cyclic_table, symmetric_table
from l2betti.linalg import GMatrix, vec_eq
from l2betti.scalars import GScalar, MINUS_ONE, ONE, gs


def c_group_algebra(n, name=None):
    table, unit, els = cyclic_table(n)
    return group_algebra(table, unit, elements=els, name=name or ("CC%d" % n))


def test_matrix_algebra_valid_and_gns():
    m2 = matrix_algebra(2)
    rep = validate_algebra(m2)
    assert rep.ok and rep.semisimple
    # GNS form is (1/n) times the standard pairing
    g = m2.gns_gram()
    assert g.entry(0, 0) == gs(Fraction(1, 2))
    assert g.entry(1, 1) == gs(Fraction(1, 2))
    assert g.entry(0, 1).is_zero()


def test_group_algebra_c3_valid():
    a = c_group_algebra(3)
    rep = validate_algebra(a)
    assert rep.ok
    assert a.trace(a.unit) == ONE


def test_s3_group_algebra_valid():
    table, unit, els = symmetric_table(3)
    a = group_algebra(table, unit, elements=els, name="CS3")
    assert validate_algebra(a).ok


def test_trace_normalization_violation_detected():
    a = c_group_algebra(2)
    a.trace_table = {0: gs(2)}
    a._gram = None
    rep = validate_algebra(a)
    assert not rep.ok
    assert any(v[0] == "trace_normalization" for v in rep.violations)


def test_conditional_expectation_diagonal_of_m2():
    m2 = matrix_algebra(2)
    ext = conditional_expectation(m2, diagonal_subalgebra_vectors(2),
                                  sub_labels=["d1", "d2"], name="M2/diag")
    assert ext.validate().ok
    # E = diagonal extraction
    e12 = {m2.index("e12"): ONE}
    assert ext.expectation(e12) == {}
    e11 = {m2.index("e11"): ONE}
    assert vec_eq(ext.expectation(e11), e11)


def test_conditional_expectation_scalars_is_trace():
    m2 = matrix_algebra(2)
    ext = trivial_extension(m2)
    e11 = {m2.index("e11"): ONE}
    # E(a) = tr(a) 1
    expected = {k: gs(Fraction(1, 2)) * c for k, c in m2.unit.items()}
    assert vec_eq(ext.expectation(e11), expected)


def test_conditional_expectation_whole_algebra_identity():
    a = c_group_algebra(2)
    ext = full_extension(a)
    for j in range(a.dim):
        assert vec_eq(ext.expectation({j: ONE}), {j: ONE})


def test_conditional_expectation_rejects_bad_span():
    m2 = matrix_algebra(2)
    with pytest.raises(ValueError):
        conditional_expectation(m2, [{m2.index("e12"): ONE}, m2.unit])


def test_expectation_conjugation_identity():
    # on M3/diag with a 3-cycle the two readings differ; the standard one holds
    m3 = matrix_algebra(3)
    ext = conditional_expectation(m3, diagonal_subalgebra_vectors(3), name="M3/diag")
    perm = {}
    idx = {(i, j): i * 3 + j for i in range(3) for j in range(3)}
    u = {idx[(1, 0)]: ONE, idx[(2, 1)]: ONE, idx[(0, 2)]: ONE}
    assert m3.is_unitary(u)
    rep = expectation_conjugation_report(ext, u)
    assert rep["E(uau*)=uE(a)u*"]
    assert not rep["E(uau*)=u*E(a)u"]


def test_convolution_pair_relation_is_matrix_algebra():
    g = pair_relation(uniform_space(2))
    ext = convolution_algebra(g)
    assert ext.validate().ok
    a = ext.alg
    m2 = matrix_algebra(2)
    # structure constants match after delta_(x,y) -> e_xy
    conv_idx = {e: a.index(repr(e)) for e in g.elements}
    m2_idx = {("x%d" % i, "x%d" % j): m2.index("e%d%d" % (i + 1, j + 1))
              for i in range(2) for j in range(2)}
    for e1 in g.elements:
        for e2 in g.elements:
            lhs = a.mul({conv_idx[e1]: ONE}, {conv_idx[e2]: ONE})
            rhs = m2.mul({m2_idx[e1]: ONE}, {m2_idx[e2]: ONE})
            lhs_m = {}
            for k, c in lhs.items():
                e = g.elements[k]
                lhs_m[m2_idx[e]] = c
            assert vec_eq(lhs_m, rhs)
    # traces agree under the same identification
    for e in g.elements:
        assert a.trace({conv_idx[e]: ONE}) == m2.trace({m2_idx[e]: ONE})


def test_convolution_group_is_group_algebra():
    table, unit, els = cyclic_table(3)
    g = group_groupoid(table, unit, name="C3")
    ext = convolution_algebra(g)
    assert ext.validate().ok
    assert ext.sub.dim == 1
    a = ext.alg
    assert a.trace(a.unit) == ONE


def test_convolution_trivial_groupoid_commutative():
    g = trivial_groupoid(uniform_space(3))
    ext = convolution_algebra(g)
    assert ext.sub.dim == 3 == ext.alg.dim
    for j in range(ext.alg.dim):
        assert vec_eq(ext.expectation({j: ONE}), {j: ONE})


def test_trivial_cocycle_gives_untwisted():
    r = pair_relation(uniform_space(2))
    sig = trivial_cocycle(r)
    assert not validate_cocycle(sig)
    ext = twisted_convolution(r, sig)
    ext0 = convolution_algebra(r)
    for i in range(ext.alg.dim):
        for j in range(ext.alg.dim):
            assert vec_eq(ext.alg.mult[i][j], ext0.alg.mult[i][j])


def test_nontrivial_cocycle_on_three_atoms():
    r = pair_relation(uniform_space(3))
    sig = distinct_triple_sign_cocycle(r)
    assert not validate_cocycle(sig)
    assert not sig.is_trivial()
    ext = twisted_convolution(r, sig)
    assert validate_algebra(ext.alg).ok
    # associativity of the twisted product, brute force
    a = ext.alg
    assert validate_algebra(a, check_associativity=True).ok


def test_cocycle_identity_violation_detected():
    r = pair_relation(uniform_space(3))
    sig = distinct_triple_sign_cocycle(r)
    sig.values[("x0", "x1", "x2")] = ONE  # break one value
    bad = validate_cocycle(sig)
    assert bad
    assert any(v[0] in ("cocycle_identity", "not_skew_symmetric") for v in bad)
    with pytest.raises(ValueError):
        twisted_convolution(r, sig)


def test_sign_cocycles_on_pair2_positive_ones_are_trivial():
    # exhaustive search: the sign cocycles on two atoms that keep the trace
    # form positive are exactly the trivial one
    r = pair_relation(uniform_space(2))
    all_c = all_sign_cocycles(r)
    pos = all_sign_cocycles(r, require_positive=True)
    assert len(pos) == 1 and pos[0].is_trivial()
    # the non-positive survivor exists but fails algebra validation
    bad = [c for c in all_c if not c.is_trivial()]
    assert bad
    for c in bad:
        with pytest.raises(ValueError):
            twisted_convolution(r, c)


def test_coboundary_is_valid_cocycle():
    r = pair_relation(uniform_space(3))
    c = {}
    for (x, y) in r.elements:
        c[(x, y)] = MINUS_ONE if {x, y} == {"x0", "x1"} else ONE
    sig = coboundary_cocycle(r, c)
    assert not validate_cocycle(sig)


def test_weighted_sum_componentwise():
    m2 = matrix_algebra(2)
    ext1 = conditional_expectation(m2, diagonal_subalgebra_vectors(2), name="M2/diag")
    ext2 = trivial_extension(c_group_algebra(2))
    s = weighted_sum([ext1, ext2], [Fraction(1, 2), Fraction(1, 2)])
    assert s.validate().ok
    a = s.alg
    # trace of a summand unit equals its weight
    u1 = {k: c for k, c in m2.unit.items()}
    assert a.trace(u1) == gs(Fraction(1, 2))


def test_weighted_sum_central_mode():
    e1 = trivial_extension(c_group_algebra(2))
    e2 = trivial_extension(c_group_algebra(3))
    s = weighted_sum([e1, e2], [Fraction(1, 2), Fraction(1, 2)], mode="central")
    assert s.validate().ok
    assert s.sub.dim == 1
    # trace of the first summand idempotent (1, 0) is its weight
    a = s.alg
    first_unit = {k: ONE for k in range(2) if k == 0}
    # the unit of CC2 sits at offset 0 index 0
    assert a.trace({0: ONE}) == gs(Fraction(1, 2))


def test_weighted_sum_rejects_bad_weights():
    e1 = trivial_extension(c_group_algebra(2))
    with pytest.raises(ValueError):
        weighted_sum([e1, e1], [Fraction(1, 2), Fraction(1, 3)])


def test_weighted_sum_single_summand_identity():
    e1 = trivial_extension(c_group_algebra(2))
    s = weighted_sum([e1], [Fraction(1)])
    assert s.alg.dim == e1.alg.dim
    assert s.validate().ok


def test_compression_unit_is_identity():
    m2 = matrix_algebra(2)
    ext = trivial_extension(m2)
    out = compression(ext, dict(m2.unit))
    assert out.alg.dim == m2.dim
    assert out.validate().ok


def test_compression_m2_by_e11():
    m2 = matrix_algebra(2)
    ext = conditional_expectation(m2, diagonal_subalgebra_vectors(2), name="M2/diag")
    p = {m2.index("e11"): ONE}
    out = compression(ext, p)
    assert out.alg.dim == 1
    assert out.alg.trace(out.alg.unit) == ONE
    assert out.validate().ok


def test_compression_m2_scalars_rank_one():
    m2 = matrix_algebra(2)
    ext = trivial_extension(m2)
    p = {m2.index("e11"): ONE}
    out = compression(ext, p)
    assert out.alg.dim == 1
    assert out.sub.dim == 1


def test_compression_rejects_non_projection():
    m2 = matrix_algebra(2)
    ext = trivial_extension(m2)
    with pytest.raises(ValueError):
        compression(ext, {m2.index("e12"): ONE})


def test_compression_rejects_noncommuting_projection():
    m2 = matrix_algebra(2)
    ext = full_extension(m2)
    with pytest.raises(ValueError):
        compression(ext, {m2.index("e11"): ONE})


def test_normalizer_span_reaches_m2():
    g = pair_relation(uniform_space(2))
    ext = convolution_algebra(g)
    out = normalizer_span(ext, ext.alg.unitary_family)
    assert out.alg.dim == 4  # saturation reaches the whole matrix algebra
    assert out.validate().ok


def test_normalizer_span_no_generators_returns_b():
    g = pair_relation(uniform_space(2))
    ext = convolution_algebra(g)
    out = normalizer_span(ext, [])
    assert out.alg.dim == ext.sub.dim


def test_normalizer_span_group_algebra():
    a = c_group_algebra(3)
    ext = trivial_extension(a)
    out = normalizer_span(ext, a.unitary_family[:3])
    assert out.alg.dim == 3


def test_normalizer_span_rejects_non_normalizing():
    m2 = matrix_algebra(2)
    ext = conditional_expectation(m2, [m2.unit, {m2.index("e11"): ONE}],
                                  name="M2/diag-partial")
    # rotation-like unitary (e12 - e21) normalizes the diagonal, so use a
    # genuinely non-normalizing one against a non-diagonal subalgebra
    idx = m2.index
    u = {idx("e11"): ONE, idx("e12"): ONE, idx("e22"): MINUS_ONE,
         idx("e21"): ONE}
    # u/sqrt2 would be unitary; u itself is not, so expect unitarity error
    with pytest.raises(ValueError):
        normalizer_span(ext, [u])


def test_groupoid_algebra_functor_diagonal_embedding():
    g = pair_relation(uniform_space(2))
    e = enveloping(g)
    ext_g = convolution_algebra(g)
    ext_e = convolution_algebra(e)
    m = groupoid_algebra_map(diagonal_embedding(g), ext_g, ext_e)
    assert m.rows == ext_e.alg.dim and m.cols == ext_g.alg.dim


def test_groupoid_algebra_functor_inclusion():
    x = uniform_space(2)
    t = trivial_groupoid(x)
    p = pair_relation(x)
    ext_t = convolution_algebra(t)
    ext_p = convolution_algebra(p)
    mapping = {("u", a): (a, a) for a in x.atoms}
    m = groupoid_algebra_map(mapping, ext_t, ext_p)
    assert m.cols == 3 or m.cols == 2


def test_twisted_and_untwisted_share_diagonal_data():
    r = pair_relation(uniform_space(3))
    sig = distinct_triple_sign_cocycle(r)
    tw = twisted_convolution(r, sig)
    un = convolution_algebra(r)
    assert tw.embed == un.embed
    assert tw.expect == un.expect
    for j in range(tw.alg.dim):
        assert tw.alg.trace({j: ONE}) == un.alg.trace({j: ONE})
    # diagonal products are untwisted
    for k in range(tw.sub.dim):
        for l in range(tw.sub.dim):
            assert vec_eq(tw.sub.mul({k: ONE}, {l: ONE}),
                          un.sub.mul({k: ONE}, {l: ONE}))
