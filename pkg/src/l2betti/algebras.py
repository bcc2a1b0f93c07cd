"""Finite-dimensional tracial *-algebras and tracial extensions.

An algebra is given by structure constants over a distinguished basis, an
antilinear star, a normalized trace, and (optionally) a canonical family of
unitaries used to generate fiber squares and normalizing algebras.  An
extension bundles an ambient algebra with an embedded unital *-subalgebra
and the trace-preserving conditional expectation onto it, realized as the
orthogonal projection for the trace inner product <a|b> = tr(a* b).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .groupoids import (
    FiniteGroupoid, bisections, is_equivalence_relation, validate_groupoid,
)
from .linalg import (
    Echelon, GMatrix, HermitianForm, kernel_basis, orth_projection, rank,
    vec_axpy, vec_eq, vec_scale, vec_sub,
)
from .scalars import FOURTH_ROOTS, GScalar, MINUS_ONE, ONE, ZERO, gs


class SpanBasis:
    """Tracked echelon span whose basis is the independent inserted vectors."""

    def __init__(self):
        self.ech = Echelon(track=True)
        self.vectors = []
        self._orig_to_pos = {}

    def add(self, v: dict) -> bool:
        piv, _ = self.ech.insert(v)
        if piv is None:
            return False
        self._orig_to_pos[self.ech.n_inserted - 1] = len(self.vectors)
        self.vectors.append(dict(v))
        return True

    @property
    def dim(self):
        return len(self.vectors)

    def coords(self, v: dict):
        combo = self.ech.coords(v)
        if combo is None:
            return None
        return {self._orig_to_pos[g]: c for g, c in combo.items()}

    def contains(self, v: dict) -> bool:
        return self.ech.contains(v)


def canonicalized_span(vectors) -> SpanBasis:
    """Span basis rebuilt from the echelon rows: sparser, deterministic."""
    tmp = Echelon()
    for v in vectors:
        tmp.insert(v)
    out = SpanBasis()
    for p in sorted(tmp.pivots):
        out.add(tmp.pivots[p])
    return out


class TracialStarAlgebra:
    """*-algebra with structure constants, star, and a normalized trace."""

    def __init__(self, labels, mult, star, trace, unit, name="A",
                 unitary_family=None, operator_backed=False):
        self.labels = list(labels)
        self.mult = mult                    # mult[i][j]: sparse product vector
        self.star_table = star              # star[i]: sparse vector
        self.trace_table = trace            # {i: GScalar}
        self.unit = unit                    # sparse vector
        self.name = name
        self.unitary_family = unitary_family or []
        self.operator_backed = operator_backed
        self._gram = None
        self._index = {l: k for k, l in enumerate(self.labels)}

    @property
    def dim(self):
        return len(self.labels)

    def index(self, label):
        return self._index[label]

    def basis_vec(self, k):
        return {k: ONE}

    def mul(self, u: dict, v: dict) -> dict:
        out = {}
        for i, a in u.items():
            row = self.mult[i]
            for j, b in v.items():
                vec_axpy(out, a * b, row[j])
        return out

    def star(self, u: dict) -> dict:
        out = {}
        for i, a in u.items():
            vec_axpy(out, a.conj(), self.star_table[i])
        return out

    def trace(self, u: dict) -> GScalar:
        acc = ZERO
        for i, a in u.items():
            t = self.trace_table.get(i)
            if t is not None:
                acc = acc + a * t
        return acc

    def inner(self, u: dict, v: dict) -> GScalar:
        return self.trace(self.mul(self.star(u), v))

    def gns_gram(self) -> GMatrix:
        if self._gram is None:
            g = GMatrix.zero(self.dim, self.dim)
            for j in range(self.dim):
                for i in range(self.dim):
                    x = self.inner({i: ONE}, {j: ONE})
                    if not x.is_zero():
                        g.col[j][i] = x
            self._gram = g
        return self._gram

    def is_monomial(self) -> bool:
        return all(len(self.mult[i][j]) <= 1
                   for i in range(self.dim) for j in range(self.dim))

    def is_unitary(self, u: dict) -> bool:
        return (vec_eq(self.mul(self.star(u), u), self.unit)
                and vec_eq(self.mul(u, self.star(u)), self.unit))

    def is_projection(self, p: dict) -> bool:
        return vec_eq(self.star(p), p) and vec_eq(self.mul(p, p), p)

    def left_mult_matrix(self, u: dict) -> GMatrix:
        return GMatrix(self.dim, self.dim, [self.mul(u, {j: ONE}) for j in range(self.dim)])

    def right_mult_matrix(self, u: dict) -> GMatrix:
        return GMatrix(self.dim, self.dim, [self.mul({j: ONE}, u) for j in range(self.dim)])

    def center_basis(self):
        """Basis of the center, via the kernel of all commutator maps."""
        n = self.dim
        stacked = GMatrix.zero(n * n, n)
        for j in range(n):
            for i in range(n):
                comm = vec_sub(self.mul({i: ONE}, {j: ONE}), self.mul({j: ONE}, {i: ONE}))
                for r, x in comm.items():
                    stacked.col[j][r + i * n] = x
        return kernel_basis(stacked)

    def is_factor(self) -> bool:
        return self.center_basis().cols == 1

    def __repr__(self):
        return "TracialStarAlgebra(%s, dim=%d)" % (self.name, self.dim)


@dataclass
class AlgebraReport:
    ok: bool
    violations: list
    semisimple: bool

    def __bool__(self):
        return self.ok


def validate_algebra(a: TracialStarAlgebra, check_associativity=None) -> AlgebraReport:
    """Exact verification of the tracial *-algebra axioms.

    Associativity is checked on all basis triples unless the algebra is
    operator backed (where it holds by construction) or the caller opts
    out; all other axioms are always checked.  Semisimplicity is certified
    by nondegeneracy of the trace form.
    """
    bad = []
    n = a.dim
    basis = [{i: ONE} for i in range(n)]

    for i in range(n):
        if not vec_eq(a.mul(a.unit, basis[i]), basis[i]):
            bad.append(("left_unit", a.labels[i]))
        if not vec_eq(a.mul(basis[i], a.unit), basis[i]):
            bad.append(("right_unit", a.labels[i]))

    do_assoc = check_associativity
    if do_assoc is None:
        do_assoc = not a.operator_backed
    if do_assoc:
        for i in range(n):
            for j in range(n):
                ij = a.mul(basis[i], basis[j])
                for k in range(n):
                    if not vec_eq(a.mul(ij, basis[k]), a.mul(basis[i], a.mul(basis[j], basis[k]))):
                        bad.append(("associativity", a.labels[i], a.labels[j], a.labels[k]))

    for i in range(n):
        if not vec_eq(a.star(a.star(basis[i])), basis[i]):
            bad.append(("star_involutive", a.labels[i]))
    for i in range(n):
        for j in range(n):
            lhs = a.star(a.mul(basis[i], basis[j]))
            rhs = a.mul(a.star(basis[j]), a.star(basis[i]))
            if not vec_eq(lhs, rhs):
                bad.append(("star_antimultiplicative", a.labels[i], a.labels[j]))

    if a.trace(a.unit) != ONE:
        bad.append(("trace_normalization", str(a.trace(a.unit))))
    for i in range(n):
        for j in range(n):
            if a.trace(a.mul(basis[i], basis[j])) != a.trace(a.mul(basis[j], basis[i])):
                bad.append(("trace_not_tracial", a.labels[i], a.labels[j]))

    gram = a.gns_gram()
    if gram != gram.adjoint():
        bad.append(("gns_not_hermitian",))
        semisimple = False
    else:
        psd = HermitianForm(gram, check=False).is_positive_semidefinite()
        nondeg = rank(gram) == n
        if not psd or not nondeg:
            bad.append(("gns_not_positive_definite", "psd=%s" % psd, "nondegenerate=%s" % nondeg))
        semisimple = nondeg
    return AlgebraReport(not bad, bad, semisimple)


# ---------------------------------------------------------------------------
# extensions


class Extension:
    """Tracial extension: ambient algebra, embedded subalgebra, expectation."""

    def __init__(self, alg: TracialStarAlgebra, sub: TracialStarAlgebra,
                 embed: GMatrix, expect: GMatrix, name="A/B", provenance=None):
        self.alg = alg
        self.sub = sub
        self.embed = embed            # dimA x dimB
        self.expect = expect          # dimB x dimA
        self.name = name
        self.provenance = provenance
        self._sandwich_memo = {}
        self._sub_trace = [alg.trace(embed.column(k)) for k in range(sub.dim)]

    def iota(self, bvec: dict) -> dict:
        return self.embed.apply(bvec)

    def expectation_sub(self, avec: dict) -> dict:
        return self.expect.apply(avec)

    def expectation(self, avec: dict) -> dict:
        return self.embed.apply(self.expect.apply(avec))

    def sub_trace(self, bvec: dict) -> GScalar:
        acc = ZERO
        for k, c in bvec.items():
            acc = acc + c * self._sub_trace[k]
        return acc

    def sandwich(self, a_idx: int, b_idx: int) -> GMatrix:
        """The map g -> E(e_a^* iota(g) e_b) from B to B, as a matrix."""
        key = (a_idx, b_idx)
        m = self._sandwich_memo.get(key)
        if m is None:
            A = self.alg
            astar = A.star({a_idx: ONE})
            cols = []
            for k in range(self.sub.dim):
                mid = A.mul(astar, A.mul(self.embed.column(k), {b_idx: ONE}))
                cols.append(self.expect.apply(mid))
            m = GMatrix.from_cols(self.sub.dim, cols)
            self._sandwich_memo[key] = m
        return m

    def validate(self) -> AlgebraReport:
        bad = []
        A, B = self.alg, self.sub
        # B embeds as a unital *-subalgebra and E restricted to B is the identity
        if not vec_eq(self.iota(B.unit), A.unit):
            bad.append(("sub_not_unital",))
        for k in range(B.dim):
            bk = self.embed.column(k)
            if not vec_eq(self.expectation(bk), bk):
                bad.append(("expectation_not_identity_on_sub", B.labels[k]))
            if not vec_eq(self.expectation(A.star(bk)), A.star(bk)):
                bad.append(("sub_not_star_closed", B.labels[k]))
        # embedding respects products, star and trace
        for k in range(B.dim):
            for l in range(B.dim):
                lhs = A.mul(self.embed.column(k), self.embed.column(l))
                rhs = self.iota(B.mul({k: ONE}, {l: ONE}))
                if not vec_eq(lhs, rhs):
                    bad.append(("embedding_not_multiplicative", B.labels[k], B.labels[l]))
        for k in range(B.dim):
            if not vec_eq(A.star(self.embed.column(k)), self.iota(B.star({k: ONE}))):
                bad.append(("embedding_not_star", B.labels[k]))
            if A.trace(self.embed.column(k)) != B.trace({k: ONE}):
                bad.append(("embedding_not_trace_preserving", B.labels[k]))
        # trace-preserving expectation
        for j in range(A.dim):
            if A.trace({j: ONE}) != B.trace(self.expectation_sub({j: ONE})):
                bad.append(("expectation_not_trace_preserving", A.labels[j]))
        # bimodularity on basis triples
        for k in range(B.dim):
            bk = self.embed.column(k)
            for j in range(A.dim):
                for l in range(B.dim):
                    bl = self.embed.column(l)
                    lhs = self.expectation(A.mul(bk, A.mul({j: ONE}, bl)))
                    rhs = A.mul(bk, A.mul(self.expectation({j: ONE}), bl))
                    if not vec_eq(lhs, rhs):
                        bad.append(("expectation_not_bimodular", B.labels[k], A.labels[j], B.labels[l]))
        # E is the trace-orthogonal projection onto B
        gram = A.gns_gram()
        proj = orth_projection(HermitianForm(gram, check=False), self.embed)
        emat = self.embed.mul(self.expect)
        if proj != emat:
            bad.append(("expectation_not_orthogonal_projection",))
        return AlgebraReport(not bad, bad, True)


def conditional_expectation(alg: TracialStarAlgebra, sub_vectors,
                            sub_labels=None, name="A/B", provenance=None,
                            validate=True) -> Extension:
    """Extension with E = trace-orthogonal projection onto span(sub_vectors).

    The span must be a unital *-subalgebra; violations raise ValueError.
    """
    span = SpanBasis()
    for v in sub_vectors:
        span.add(v)
    if not span.contains(alg.unit):
        raise ValueError("subalgebra does not contain the unit")
    for v in list(span.vectors):
        if not span.contains(alg.star(v)):
            raise ValueError("subalgebra is not star-closed")
    for u in list(span.vectors):
        for v in list(span.vectors):
            if not span.contains(alg.mul(u, v)):
                raise ValueError("span is not closed under multiplication")

    dim_b = span.dim
    labels = sub_labels if sub_labels is not None else ["b%d" % k for k in range(dim_b)]
    assert len(labels) == dim_b
    mult = [[span.coords(alg.mul(span.vectors[i], span.vectors[j]))
             for j in range(dim_b)] for i in range(dim_b)]
    star = [span.coords(alg.star(span.vectors[i])) for i in range(dim_b)]
    trace = {}
    for i in range(dim_b):
        t = alg.trace(span.vectors[i])
        if not t.is_zero():
            trace[i] = t
    unit = span.coords(alg.unit)
    sub = TracialStarAlgebra(labels, mult, star, trace, unit,
                             name=name.split("/")[-1])

    embed = GMatrix.from_cols(alg.dim, span.vectors)
    gram = alg.gns_gram()
    proj = orth_projection(HermitianForm(gram, check=False), embed)
    expect_cols = [span.coords(proj.column(j)) for j in range(alg.dim)]
    assert all(c is not None for c in expect_cols)
    expect = GMatrix.from_cols(dim_b, expect_cols)
    ext = Extension(alg, sub, embed, expect, name=name, provenance=provenance)
    if validate:
        rep = ext.validate()
        if not rep.ok:
            raise ValueError("extension invariants violated: %s" % rep.violations[:3])
    return ext


def trivial_extension(alg: TracialStarAlgebra, name=None) -> Extension:
    """A over the scalars."""
    return conditional_expectation(alg, [alg.unit], sub_labels=["1"],
                                   name=name or (alg.name + "/C"))


def full_extension(alg: TracialStarAlgebra, name=None) -> Extension:
    """A over itself."""
    basis = [{k: ONE} for k in range(alg.dim)]
    return conditional_expectation(alg, basis, sub_labels=list(alg.labels),
                                   name=name or (alg.name + "/" + alg.name))


def expectation_conjugation_report(ext: Extension, u: dict) -> dict:
    """Compare E(u a u*) against u E(a) u* and against u* E(a) u."""
    A = ext.alg
    us = A.star(u)
    standard = True
    variant = True
    for j in range(A.dim):
        lhs = ext.expectation(A.mul(u, A.mul({j: ONE}, us)))
        mid = ext.expectation({j: ONE})
        if not vec_eq(lhs, A.mul(u, A.mul(mid, us))):
            standard = False
        if not vec_eq(lhs, A.mul(us, A.mul(mid, u))):
            variant = False
    return {"E(uau*)=uE(a)u*": standard, "E(uau*)=u*E(a)u": variant}


# ---------------------------------------------------------------------------
# standard algebras


def matrix_algebra(n: int) -> TracialStarAlgebra:
    """n x n matrices with the normalized trace and monomial unitary family."""
    labels = ["e%d%d" % (i + 1, j + 1) for i in range(n) for j in range(n)]
    idx = {(i, j): i * n + j for i in range(n) for j in range(n)}
    dim = n * n
    mult = [[{} for _ in range(dim)] for _ in range(dim)]
    for (i, j), a in idx.items():
        for (k, l), b in idx.items():
            if j == k:
                mult[a][b] = {idx[(i, l)]: ONE}
    star = [{idx[(j, i)]: ONE} for (i, j) in sorted(idx, key=idx.get)]
    trace = {idx[(i, i)]: gs(Fraction(1, n)) for i in range(n)}
    unit = {idx[(i, i)]: ONE for i in range(n)}
    # powers of the long cycle dressed by the elementary sign flips: their
    # graphs cover every matrix cell, so these monomial unitaries span
    fam = []
    signs = [tuple(1 for _ in range(n))]
    signs += [tuple(-1 if j == k else 1 for j in range(n)) for k in range(n)]
    for p in range(n):
        perm = tuple((j + p) % n for j in range(n))
        for sg in signs:
            v = {idx[(perm[j], j)]: gs(sg[j]) for j in range(n)}
            fam.append(("c%d%s" % (p, "".join("+-"[s < 0] for s in sg)), v))
    return TracialStarAlgebra(labels, mult, star, trace, unit,
                              name="M%d" % n, unitary_family=fam)


def diagonal_subalgebra_vectors(n: int):
    return [{i * n + i: ONE} for i in range(n)]


def group_algebra(table: dict, unit, elements=None, name="CG") -> TracialStarAlgebra:
    els = elements or sorted({g for g, _ in table}, key=repr)
    idx = {g: k for k, g in enumerate(els)}
    dim = len(els)
    mult = [[{} for _ in range(dim)] for _ in range(dim)]
    inv = {}
    for g in els:
        for h in els:
            mult[idx[g]][idx[h]] = {idx[table[(g, h)]]: ONE}
            if table[(g, h)] == unit:
                inv[g] = h
    star = [{idx[inv[g]]: ONE} for g in els]
    trace = {idx[unit]: ONE}
    fam = [(str(g), {idx[g]: ONE}) for g in els]
    fam += [("-" + str(g), {idx[g]: MINUS_ONE}) for g in els]
    return TracialStarAlgebra([str(g) for g in els], mult, star, trace,
                              {idx[unit]: ONE}, name=name, unitary_family=fam)


# ---------------------------------------------------------------------------
# groupoid convolution algebras


def _sign_vectors(atoms):
    """1 and the single-atom sign flips 1 - 2*1_{x}: they span the diagonal."""
    out = [("w", {x: ONE for x in atoms})]
    for x in atoms:
        v = {y: (MINUS_ONE if y == x else ONE) for y in atoms}
        out.append(("w" + str(x), v))
    return out


def convolution_algebra(g: FiniteGroupoid, validate=True) -> Extension:
    """The convolution *-algebra of a finite measured groupoid over L^inf(X).

    Basis the arrows, product from composition, star from inversion, trace
    the weighted sum over the units; the expectation is restriction to the
    units.
    """
    if validate:
        rep = validate_groupoid(g)
        if not rep.ok:
            raise ValueError("invalid groupoid: %s" % rep.violations[:3])
    els = list(g.elements)
    idx = {a: k for k, a in enumerate(els)}
    dim = len(els)
    mult = [[{} for _ in range(dim)] for _ in range(dim)]
    for (a, b), c in g.compose.items():
        mult[idx[a]][idx[b]] = {idx[c]: ONE}
    star = [{idx[g.inverse[a]]: ONE} for a in els]
    trace = {}
    for x in g.base.atoms:
        trace[idx[g.units[x]]] = gs(g.base.weight[x])
    unit = {idx[g.units[x]]: ONE for x in g.base.atoms}

    fam = []
    signs = _sign_vectors(g.base.atoms)
    for b in bisections(g):
        barrows = sorted(b, key=repr)
        for wname, w in signs:
            v = {idx[a]: w[g.target[a]] for a in barrows}
            fam.append(("%s.%s" % (wname, ",".join(map(repr, barrows))), v))

    alg = TracialStarAlgebra([repr(a) for a in els], mult, star, trace, unit,
                             name="C[%s]" % (g.name or "G"),
                             unitary_family=fam)
    sub_vectors = [{idx[g.units[x]]: ONE} for x in g.base.atoms]
    ext = conditional_expectation(alg, sub_vectors,
                                  sub_labels=[str(x) for x in g.base.atoms],
                                  name="C[%s]/LinfX" % (g.name or "G"),
                                  provenance=("groupoid", g))
    return ext


# ---------------------------------------------------------------------------
# 2-cocycles and twisted algebras


@dataclass
class TwoCocycle:
    """Circle-valued 2-cocycle of an equivalence relation, on atom triples.

    values[(x,y,z)] is the twist of the composition (x,y)(y,z); entries are
    restricted to fourth roots of unity so the scalar field stays exact.
    """

    relation: FiniteGroupoid
    values: dict

    def value(self, x, y, z) -> GScalar:
        return self.values[(x, y, z)]

    def composable_triples(self):
        r = self.relation
        out = []
        for (a, b) in r.compose:
            out.append((r.target[a], r.source[a], r.source[b]))
        return sorted(set(out))

    def is_trivial(self) -> bool:
        return all(v == ONE for v in self.values.values())


def validate_cocycle(sigma: TwoCocycle):
    """Check the cocycle identity and the skew-symmetric normalization.

    Returns a list of violations, each with a witness tuple.
    """
    r = sigma.relation
    bad = []
    triples = set(sigma.composable_triples())
    for t in triples:
        if t not in sigma.values:
            bad.append(("missing_value", t))
    if bad:
        return bad
    for t, v in sigma.values.items():
        if t not in triples:
            bad.append(("value_on_non_composable", t))
        if v not in FOURTH_ROOTS:
            bad.append(("value_not_fourth_root", t, str(v)))
    rel = {(r.target[a], r.source[a]) for a in r.elements}
    for (x, y, z) in triples:
        if (z, y, x) in triples:
            if sigma.values[(x, y, z)] * sigma.values[(z, y, x)] != ONE:
                bad.append(("not_skew_symmetric", (x, y, z)))
    for x in r.base.atoms:
        if (x, x, x) in triples and sigma.values[(x, x, x)] != ONE:
            bad.append(("unit_not_normalized", x))
    # identity s(x,y,z) s(x,z,t) = s(y,z,t) s(x,y,t) on composable quadruples
    for (x, y, z) in triples:
        for t in r.base.atoms:
            if (x, z, t) in triples and (y, z, t) in triples and (x, y, t) in triples:
                lhs = sigma.values[(x, y, z)] * sigma.values[(x, z, t)]
                rhs = sigma.values[(y, z, t)] * sigma.values[(x, y, t)]
                if lhs != rhs:
                    bad.append(("cocycle_identity", (x, y, z, t)))
    return bad


def trivial_cocycle(r: FiniteGroupoid) -> TwoCocycle:
    sig = TwoCocycle(r, {})
    sig.values = {t: ONE for t in sig.composable_triples()}
    return sig


def coboundary_cocycle(r: FiniteGroupoid, c: dict) -> TwoCocycle:
    """The coboundary s(x,y,z) = c(y,z) c(x,z)^{-1} c(x,y) of c: R -> T."""
    sig = TwoCocycle(r, {})
    vals = {}
    for (x, y, z) in sig.composable_triples():
        vals[(x, y, z)] = c[(y, z)] * c[(x, z)].inverse() * c[(x, y)]
    sig.values = vals
    return sig


def distinct_triple_sign_cocycle(r: FiniteGroupoid) -> TwoCocycle:
    """-1 on pairwise-distinct atom triples, +1 elsewhere.

    On relations with classes of size >= 3 this is a nontrivial exactly
    normalized sign cocycle (a coboundary, but not the constant 1).
    """
    sig = TwoCocycle(r, {})
    vals = {}
    for (x, y, z) in sig.composable_triples():
        vals[(x, y, z)] = MINUS_ONE if len({x, y, z}) == 3 else ONE
    sig.values = vals
    return sig


def all_sign_cocycles(r: FiniteGroupoid, require_positive=False):
    """Exhaustive list of valid {1,-1}-valued cocycles (tiny relations only).

    With require_positive, keep only those whose twisted algebra has a
    positive trace form, i.e. s(x,y,x) = 1 on all composable (x,y,x).
    """
    sig0 = trivial_cocycle(r)
    triples = sorted(sig0.values)
    if len(triples) > 16:
        raise ValueError("relation too large for exhaustive cocycle search")
    out = []
    for signs in itertools.product((ONE, MINUS_ONE), repeat=len(triples)):
        cand = TwoCocycle(r, dict(zip(triples, signs)))
        if validate_cocycle(cand):
            continue
        if require_positive and any(v != ONE for (x, y, z), v in cand.values.items()
                                    if z == x):
            continue
        out.append(cand)
    return out


def twisted_convolution(r: FiniteGroupoid, sigma: TwoCocycle,
                        validate=True) -> Extension:
    """Convolution algebra of an equivalence relation with a twisted product.

    The twisted product picks up sigma(x,y,z) on (x,y)(y,z); star, trace and
    expectation stay untwisted.  The result must still be a tracial
    *-algebra; cocycles breaking faithfulness of the trace form (those with
    sigma(x,y,x) != 1) are rejected with a witness.
    """
    if not is_equivalence_relation(r):
        raise ValueError("twisted convolution needs an equivalence relation")
    bad = validate_cocycle(sigma)
    if bad:
        raise ValueError("invalid cocycle: %s" % bad[:3])
    els = list(r.elements)
    idx = {a: k for k, a in enumerate(els)}
    dim = len(els)
    mult = [[{} for _ in range(dim)] for _ in range(dim)]
    for (a, b), c in r.compose.items():
        x, y, z = r.target[a], r.source[a], r.source[b]
        mult[idx[a]][idx[b]] = {idx[c]: sigma.value(x, y, z)}
    star = [{idx[r.inverse[a]]: ONE} for a in els]
    trace = {idx[r.units[x]]: gs(r.base.weight[x]) for x in r.base.atoms}
    unit = {idx[r.units[x]]: ONE for x in r.base.atoms}

    alg = TracialStarAlgebra([repr(a) for a in els], mult, star, trace, unit,
                             name="C[%s;twisted]" % (r.name or "R"))
    if validate:
        rep = validate_algebra(alg)
        if not rep.ok:
            raise ValueError("twisted product is not a tracial *-algebra: %s"
                             % rep.violations[:3])

    fam = []
    signs = _sign_vectors(r.base.atoms)
    for b in bisections(r):
        barrows = sorted(b, key=repr)
        for wname, w in signs:
            v = {idx[a]: w[r.target[a]] for a in barrows}
            if alg.is_unitary(v):
                fam.append(("%s.%s" % (wname, ",".join(map(repr, barrows))), v))
    alg.unitary_family = fam

    sub_vectors = [{idx[r.units[x]]: ONE} for x in r.base.atoms]
    return conditional_expectation(alg, sub_vectors,
                                   sub_labels=[str(x) for x in r.base.atoms],
                                   name="C[%s;twisted]/LinfX" % (r.name or "R"),
                                   provenance=("twisted", r, sigma))


# ---------------------------------------------------------------------------
# weighted directed sums


def _check_weights(weights):
    ws = [Fraction(w) for w in weights]
    if any(w <= 0 for w in ws):
        raise ValueError("weights must be positive")
    if sum(ws) != 1:
        raise ValueError("weights must sum to 1, got %s" % sum(ws))
    return ws


def weighted_sum_algebras(algebras, weights, name=None) -> TracialStarAlgebra:
    """Direct sum with the weighted trace sum(w_n tr_n)."""
    ws = _check_weights(weights)
    offs = []
    off = 0
    for a in algebras:
        offs.append(off)
        off += a.dim
    dim = off
    labels = []
    for n, a in enumerate(algebras):
        labels += ["%d:%s" % (n, l) for l in a.labels]
    mult = [[{} for _ in range(dim)] for _ in range(dim)]
    star = [{} for _ in range(dim)]
    trace = {}
    unit = {}
    for n, a in enumerate(algebras):
        o = offs[n]
        for i in range(a.dim):
            star[o + i] = {o + k: c for k, c in a.star_table[i].items()}
            t = a.trace_table.get(i)
            if t is not None:
                trace[o + i] = gs(ws[n]) * t
            for j in range(a.dim):
                mult[o + i][o + j] = {o + k: c for k, c in a.mult[i][j].items()}
        for k, c in a.unit.items():
            unit[o + k] = c
    fams = [a.unitary_family or [("1", a.unit)] for a in algebras]
    fam = []
    for combo in itertools.product(*fams):
        v = {}
        for n, (_, u) in enumerate(combo):
            for k, c in u.items():
                v[offs[n] + k] = c
        fam.append(("+".join(nm for nm, _ in combo), v))
    out = TracialStarAlgebra(labels, mult, star, trace, unit,
                             name=name or "(+)".join(a.name for a in algebras),
                             unitary_family=fam)
    out._offsets = offs
    return out


def weighted_sum(extensions, weights, mode="componentwise", name=None) -> Extension:
    """Weighted directed sum of tracial extensions.

    componentwise: the subalgebra is the weighted sum of the B_n and the
    expectation acts blockwise.  central: all summands share one
    commutative B, embedded diagonally, and E = sum of w_n E_n.
    """
    ws = _check_weights(weights)
    algs = [e.alg for e in extensions]
    big = weighted_sum_algebras(algs, ws, name=name)
    offs = big._offsets

    if mode == "componentwise":
        sub_vectors = []
        sub_labels = []
        for n, e in enumerate(extensions):
            for k in range(e.sub.dim):
                col = e.embed.column(k)
                sub_vectors.append({offs[n] + i: c for i, c in col.items()})
                sub_labels.append("%d:%s" % (n, e.sub.labels[k]))
        return conditional_expectation(big, sub_vectors, sub_labels=sub_labels,
                                       name=name or "sum/componentwise",
                                       provenance=("weighted_sum", extensions, ws, mode))
    if mode == "central":
        b0 = extensions[0].sub
        for e in extensions[1:]:
            if e.sub.labels != b0.labels or e.sub.dim != b0.dim:
                raise ValueError("central mode needs structurally identical subalgebras")
        for i in range(b0.dim):
            for j in range(b0.dim):
                if not vec_eq(b0.mul({i: ONE}, {j: ONE}), b0.mul({j: ONE}, {i: ONE})):
                    raise ValueError("central mode needs a commutative subalgebra")
        sub_vectors = []
        for k in range(b0.dim):
            v = {}
            for n, e in enumerate(extensions):
                for i, c in e.embed.column(k).items():
                    v[offs[n] + i] = c
            sub_vectors.append(v)
        return conditional_expectation(big, sub_vectors, sub_labels=list(b0.labels),
                                       name=name or "sum/central",
                                       provenance=("weighted_sum", extensions, ws, mode))
    raise ValueError("unknown weighted sum mode %r" % mode)


# ---------------------------------------------------------------------------
# compression


def compression(ext: Extension, p: dict, name=None) -> Extension:
    """Compress A/B by a projection p commuting with B.

    The compressed algebra pAp carries the normalized trace
    tr_p(x) = tr(x)/tr(p); the subalgebra is pBp and the expectation is
    recomputed as the trace-orthogonal projection.
    """
    A = ext.alg
    if not A.is_projection(p):
        raise ValueError("p is not a projection")
    for k in range(ext.sub.dim):
        bk = ext.embed.column(k)
        if not vec_eq(A.mul(p, bk), A.mul(bk, p)):
            raise ValueError("p does not commute with the subalgebra at %s"
                             % ext.sub.labels[k])
    tp = A.trace(p)
    if tp.is_zero():
        raise ValueError("p has zero trace")

    span = SpanBasis()
    cut_basis = []
    for j in range(A.dim):
        v = A.mul(p, A.mul({j: ONE}, p))
        if v and span.add(v):
            cut_basis.append(v)
    dimc = span.dim
    labels = ["p%d" % k for k in range(dimc)]
    mult = [[span.coords(A.mul(span.vectors[i], span.vectors[j]))
             for j in range(dimc)] for i in range(dimc)]
    star = [span.coords(A.star(span.vectors[i])) for i in range(dimc)]
    tpi = tp.inverse()
    trace = {}
    for i in range(dimc):
        t = A.trace(span.vectors[i]) * tpi
        if not t.is_zero():
            trace[i] = t
    unit = span.coords(p)
    comp_alg = TracialStarAlgebra(labels, mult, star, trace, unit,
                                  name=(name or "p(%s)p" % A.name))
    fam = []
    for nm, u in (A.unitary_family or []):
        c = span.coords(A.mul(p, A.mul(u, p)))
        if c is not None and comp_alg.is_unitary(c):
            fam.append(("p.%s" % nm, c))
    for root in FOURTH_ROOTS:
        fam.append((str(root), vec_scale(root, unit)))
    comp_alg.unitary_family = fam

    sub_vecs = []
    sub_span = SpanBasis()
    for k in range(ext.sub.dim):
        v = A.mul(p, A.mul(ext.embed.column(k), p))
        c = span.coords(v)
        assert c is not None
        if sub_span.add(c):
            sub_vecs.append(c)
    out = conditional_expectation(comp_alg, sub_vecs,
                                  name=name or (ext.name + "|p"),
                                  provenance=("compression", ext, p))
    # tr_{A_p}(pxp) * tr_A(p) == tr_A(pxp), exactly, for every basis x
    for j in range(A.dim):
        v = A.mul(p, A.mul({j: ONE}, p))
        c = span.coords(v)
        assert comp_alg.trace(c) * tp == A.trace(v)
    out.compression_data = (ext, p, span)
    return out


# ---------------------------------------------------------------------------
# normalizing algebras


def normalizer_span(ext: Extension, unitaries, name=None) -> Extension:
    """Smallest *-subalgebra containing B and the given normalizing unitaries.

    Each u must be unitary with u B u* = B; a witness is reported otherwise.
    Returns the normalizing extension N/B together with the embedding of N
    into A (as .normalizer_embedding).
    """
    A = ext.alg
    gens = []
    for item in unitaries:
        nm, u = item if isinstance(item, tuple) else ("u%d" % len(gens), item)
        if not A.is_unitary(u):
            raise ValueError("generator %s is not unitary" % nm)
        us = A.star(u)
        for k in range(ext.sub.dim):
            bk = ext.embed.column(k)
            conj = A.mul(u, A.mul(bk, us))
            if not _in_span(ext.embed, conj):
                raise ValueError("generator %s does not normalize B: witness %s"
                                 % (nm, ext.sub.labels[k]))
        gens.append((nm, u))

    grow = SpanBasis()
    basis_vecs = []
    seeds = [ext.embed.column(k) for k in range(ext.sub.dim)]
    seeds += [u for _, u in gens] + [A.star(u) for _, u in gens]
    for v in seeds:
        if grow.add(v):
            basis_vecs.append(v)
    changed = True
    while changed:
        changed = False
        for v in list(basis_vecs):
            for w in list(basis_vecs):
                prod = A.mul(v, w)
                if grow.add(prod):
                    basis_vecs.append(prod)
                    changed = True
    for v in list(basis_vecs):
        s = A.star(v)
        if grow.add(s):
            basis_vecs.append(s)

    # re-basis along echelon rows: sparser vectors, deterministic order
    span = canonicalized_span(grow.vectors)
    dimn = span.dim
    labels = ["n%d" % k for k in range(dimn)]
    mult = [[span.coords(A.mul(span.vectors[i], span.vectors[j]))
             for j in range(dimn)] for i in range(dimn)]
    star = [span.coords(A.star(span.vectors[i])) for i in range(dimn)]
    trace = {}
    for i in range(dimn):
        t = A.trace(span.vectors[i])
        if not t.is_zero():
            trace[i] = t
    unit = span.coords(A.unit)
    nalg = TracialStarAlgebra(labels, mult, star, trace, unit,
                              name=name or ("N(%s)" % ext.name))
    fam = [(nm, span.coords(u)) for nm, u in gens]
    fam.append(("1", dict(unit)))
    for k in range(ext.sub.dim):
        c = span.coords(ext.embed.column(k))
        if nalg.is_unitary(c):
            fam.append(("b%d" % k, c))
        elif nalg.is_projection(c):
            # sign unitary 1 - 2p attached to each subalgebra projection
            w = dict(unit)
            for i, x in c.items():
                val = w.get(i, ZERO) - (x + x)
                if val.is_zero():
                    w.pop(i, None)
                else:
                    w[i] = val
            if nalg.is_unitary(w):
                fam.append(("w%d" % k, w))
    nalg.unitary_family = fam
    sub_in_n = [span.coords(ext.embed.column(k)) for k in range(ext.sub.dim)]
    out = conditional_expectation(nalg, sub_in_n,
                                  sub_labels=list(ext.sub.labels),
                                  name=name or ("N/%s" % ext.sub.name),
                                  provenance=("normalizer", ext, gens))
    out.normalizer_embedding = GMatrix.from_cols(A.dim, span.vectors)
    return out


def _in_span(m: GMatrix, v: dict) -> bool:
    ech = Echelon()
    for c in m.col:
        ech.insert(c)
    return ech.contains(v)


def groupoid_algebra_map(phi_mapping: dict, ext_dom: Extension,
                         ext_cod: Extension) -> GMatrix:
    """Pushforward of arrows for a groupoid morphism, at the algebra level.

    Checks multiplicativity, star, restriction to the identity on the
    diagonal, trace preservation and expectation intertwining; raises with a
    witness if any fails.
    """
    gd = ext_dom.provenance[1]
    gc = ext_cod.provenance[1]
    A, C = ext_dom.alg, ext_cod.alg
    m = GMatrix.zero(C.dim, A.dim)
    for a in gd.elements:
        m.col[gd.elements.index(a)][gc.elements.index(phi_mapping[a])] = ONE
    for i in range(A.dim):
        for j in range(A.dim):
            lhs = m.apply(A.mul({i: ONE}, {j: ONE}))
            rhs = C.mul(m.apply({i: ONE}), m.apply({j: ONE}))
            if not vec_eq(lhs, rhs):
                raise ValueError("pushforward not multiplicative at (%d,%d)" % (i, j))
        if not vec_eq(m.apply(A.star({i: ONE})), C.star(m.apply({i: ONE}))):
            raise ValueError("pushforward not star at %d" % i)
        if A.trace({i: ONE}) != C.trace(m.apply({i: ONE})):
            raise ValueError("pushforward not trace preserving at %d" % i)
        lhs = m.apply(ext_dom.expectation({i: ONE}))
        rhs = ext_cod.expectation(m.apply({i: ONE}))
        if not vec_eq(lhs, rhs):
            raise ValueError("pushforward does not intertwine expectations at %d" % i)
    for x in gd.base.atoms:
        ud = {gd.elements.index(gd.units[x]): ONE}
        if not vec_eq(m.apply(ud), {gc.elements.index(gc.units[x]): ONE}):
            raise ValueError("pushforward does not fix the diagonal at %r" % (x,))
    return m
