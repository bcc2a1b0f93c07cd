"""Finite measured spaces, finite groupoids and their tuple spaces.

Elements compose left-to-right against arrows: compose(a, b) = ab is defined
exactly when source(a) == target(b), so ab is "b then a".  The canonical
measure on a groupoid carrier gives the arrow a the weight of its source
atom, which makes the source map measure preserving in the fiber-counting
sense; validation checks that the target map is measure preserving too
(equivalently, the base measure is invariant).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


@dataclass(frozen=True)
class FiniteMeasuredSpace:
    atoms: tuple
    weight: dict = field(compare=False)

    def __post_init__(self):
        for x in self.atoms:
            w = self.weight[x]
            if w <= 0:
                raise ValueError("atom %r has nonpositive weight %s" % (x, w))

    @property
    def total_mass(self) -> Fraction:
        return sum((self.weight[x] for x in self.atoms), Fraction(0))

    def is_probability(self) -> bool:
        return self.total_mass == 1

    def index(self, atom):
        return self.atoms.index(atom)


def uniform_space(n: int, prefix="x") -> FiniteMeasuredSpace:
    atoms = tuple("%s%d" % (prefix, i) for i in range(n))
    w = Fraction(1, n)
    return FiniteMeasuredSpace(atoms, {a: w for a in atoms})


def weighted_space(weights: dict) -> FiniteMeasuredSpace:
    return FiniteMeasuredSpace(tuple(weights), dict(weights))


@dataclass(frozen=True)
class FiniteGroupoid:
    base: FiniteMeasuredSpace
    elements: tuple
    source: dict = field(compare=False)
    target: dict = field(compare=False)
    inverse: dict = field(compare=False)
    compose: dict = field(compare=False)    # (a, b) -> ab, keys exactly the composable pairs
    units: dict = field(compare=False)      # atom -> unit element
    name: str = field(default="", compare=False)

    def unit_set(self):
        return tuple(self.units[x] for x in self.base.atoms)

    def is_unit(self, a):
        return self.units[self.target[a]] == a

    def composable(self, a, b):
        return self.source[a] == self.target[b]

    def mul(self, a, b):
        return self.compose[(a, b)]

    def weight(self, a) -> Fraction:
        """Canonical carrier measure: the weight of the source atom."""
        return self.base.weight[self.source[a]]

    def index(self, a):
        return self.elements.index(a)

    def arrows(self, tgt=None, src=None):
        out = []
        for a in self.elements:
            if tgt is not None and self.target[a] != tgt:
                continue
            if src is not None and self.source[a] != src:
                continue
            out.append(a)
        return out


@dataclass
class GroupoidReport:
    ok: bool
    violations: list
    element_count: int

    def __bool__(self):
        return self.ok


def validate_groupoid(g: FiniteGroupoid) -> GroupoidReport:
    """Exhaustively check the groupoid axioms, returning witnesses on failure."""
    bad = []
    els = g.elements
    elset = set(els)

    if not g.base.is_probability():
        bad.append(("base_not_probability", str(g.base.total_mass)))

    for x in g.base.atoms:
        u = g.units.get(x)
        if u is None or u not in elset:
            bad.append(("missing_unit", x))
            continue
        if g.source[u] != x or g.target[u] != x:
            bad.append(("unit_endpoints", x, u))

    for a in els:
        ai = g.inverse.get(a)
        if ai not in elset:
            bad.append(("missing_inverse", a))
            continue
        if g.inverse[ai] != a:
            bad.append(("inverse_not_involutive", a))
        if g.source[ai] != g.target[a] or g.target[ai] != g.source[a]:
            bad.append(("inverse_endpoints", a))

    for a in els:
        for b in els:
            comp = (a, b) in g.compose
            if comp != (g.source[a] == g.target[b]):
                bad.append(("composability_domain", a, b))
                continue
            if comp:
                c = g.compose[(a, b)]
                if c not in elset:
                    bad.append(("composition_out_of_carrier", a, b))
                    continue
                if g.target[c] != g.target[a] or g.source[c] != g.source[b]:
                    bad.append(("composition_endpoints", a, b, c))

    if not bad:
        for a in els:
            ai = g.inverse[a]
            if g.compose[(a, ai)] != g.units[g.target[a]]:
                bad.append(("inverse_law_right", a))
            if g.compose[(ai, a)] != g.units[g.source[a]]:
                bad.append(("inverse_law_left", a))
            if g.compose[(a, g.units[g.source[a]])] != a:
                bad.append(("unit_law_right", a))
            if g.compose[(g.units[g.target[a]], a)] != a:
                bad.append(("unit_law_left", a))
        for a in els:
            for b in els:
                if g.source[a] != g.target[b]:
                    continue
                ab = g.compose[(a, b)]
                for c in els:
                    if g.source[b] != g.target[c]:
                        continue
                    if g.compose[(ab, c)] != g.compose[(a, g.compose[(b, c)])]:
                        bad.append(("associativity", a, b, c))

    # measure preservation of s and t for the canonical carrier measure:
    # mu_G(A) = integral of the fiber count over the base, for every A;
    # pointwise this says weight(a) = mu(s(a)) (by construction) and
    # weight(a) = mu(t(a)) (base measure invariance).
    for a in els:
        if g.base.weight[g.source[a]] != g.base.weight[g.target[a]]:
            bad.append(("target_not_measure_preserving", a))

    return GroupoidReport(not bad, bad, len(els))


# ---------------------------------------------------------------------------
# builders


def trivial_groupoid(space: FiniteMeasuredSpace) -> FiniteGroupoid:
    els = tuple(("u", x) for x in space.atoms)
    src = {("u", x): x for x in space.atoms}
    comp = {((("u", x)), ("u", x)): ("u", x) for x in space.atoms}
    return FiniteGroupoid(space, els, dict(src), dict(src),
                          {e: e for e in els}, comp,
                          {x: ("u", x) for x in space.atoms},
                          name="trivial(%d)" % len(space.atoms))


def group_groupoid(table: dict, unit, name="group") -> FiniteGroupoid:
    """A finite group (multiplication table {(g,h): gh}) over a single point."""
    els = sorted({g for g, _ in table} | {h for _, h in table}, key=repr)
    space = FiniteMeasuredSpace(("pt",), {"pt": Fraction(1)})
    inv = {}
    for gg in els:
        for h in els:
            if table[(gg, h)] == unit:
                inv[gg] = h
                break
    return FiniteGroupoid(space, tuple(els),
                          {g: "pt" for g in els}, {g: "pt" for g in els},
                          inv, dict(table), {"pt": unit}, name=name)


def pair_relation(space: FiniteMeasuredSpace) -> FiniteGroupoid:
    """The full equivalence relation X x X; (x, y) is an arrow y -> x."""
    els = tuple((x, y) for x in space.atoms for y in space.atoms)
    src = {(x, y): y for (x, y) in els}
    tgt = {(x, y): x for (x, y) in els}
    inv = {(x, y): (y, x) for (x, y) in els}
    comp = {}
    for (x, y) in els:
        for (y2, z) in els:
            if y == y2:
                comp[((x, y), (y2, z))] = (x, z)
    units = {x: (x, x) for x in space.atoms}
    return FiniteGroupoid(space, els, src, tgt, inv, comp, units,
                          name="pair(%d)" % len(space.atoms))


def partition_relation(space: FiniteMeasuredSpace, blocks) -> FiniteGroupoid:
    """Equivalence relation with the given blocks (a partition of the atoms)."""
    seen = [x for b in blocks for x in b]
    if sorted(seen) != sorted(space.atoms) or len(seen) != len(set(seen)):
        raise ValueError("blocks do not partition the atom set")
    els = []
    for b in blocks:
        for x in b:
            for y in b:
                els.append((x, y))
    els = tuple(els)
    src = {(x, y): y for (x, y) in els}
    tgt = {(x, y): x for (x, y) in els}
    inv = {(x, y): (y, x) for (x, y) in els}
    elset = set(els)
    comp = {}
    for (x, y) in els:
        for (y2, z) in els:
            if y == y2 and (x, z) in elset:
                comp[((x, y), (y2, z))] = (x, z)
    units = {x: (x, x) for x in space.atoms}
    return FiniteGroupoid(space, els, src, tgt, inv, comp, units,
                          name="partition(%s)" % ",".join(str(len(b)) for b in blocks))


def action_groupoid(table: dict, unit, action: dict,
                    space: FiniteMeasuredSpace, name="action") -> FiniteGroupoid:
    """Transformation groupoid of a finite group acting on the atoms.

    action[(g, x)] is g.x; elements are (g, x): arrows x -> g.x.
    """
    group = sorted({g for g, _ in table}, key=repr)
    for g in group:
        for h in group:
            for x in space.atoms:
                if action[(table[(g, h)], x)] != action[(g, action[(h, x)])]:
                    raise ValueError("not a group action at (%r,%r,%r)" % (g, h, x))
    for x in space.atoms:
        if action[(unit, x)] != x:
            raise ValueError("unit does not act trivially on %r" % (x,))
    els = tuple((g, x) for g in group for x in space.atoms)
    src = {(g, x): x for (g, x) in els}
    tgt = {(g, x): action[(g, x)] for (g, x) in els}
    inv = {}
    ginv = {}
    for g in group:
        for h in group:
            if table[(g, h)] == unit:
                ginv[g] = h
    for (g, x) in els:
        inv[(g, x)] = (ginv[g], action[(g, x)])
    comp = {}
    for (g, x) in els:
        for (h, y) in els:
            if x == action[(h, y)]:
                comp[(((g, x)), (h, y))] = (table[(g, h)], y)
    units = {x: (unit, x) for x in space.atoms}
    return FiniteGroupoid(space, els, src, tgt, inv, comp, units, name=name)


def build_groupoid(kind: str, **kw) -> FiniteGroupoid:
    if kind == "trivial":
        return trivial_groupoid(kw["space"])
    if kind == "from_group":
        return group_groupoid(kw["table"], kw["unit"], kw.get("name", "group"))
    if kind == "pair_relation":
        return pair_relation(kw["space"])
    if kind == "partition_relation":
        return partition_relation(kw["space"], kw["blocks"])
    if kind == "action_groupoid":
        return action_groupoid(kw["table"], kw["unit"], kw["action"],
                               kw["space"], kw.get("name", "action"))
    raise ValueError("unknown groupoid kind %r" % kind)


# ---------------------------------------------------------------------------
# structure maps


def orbit_and_isotropy(g: FiniteGroupoid):
    """Orbit relation (image of (t, s)), isotropy (kernel), and a factor check.

    Every arrow a factors as rep(t(a), s(a)) . gamma with gamma isotropic,
    witnessing the semidirect decomposition; the chosen representatives are
    the first arrows in carrier order for each endpoint pair.
    """
    pairs = []
    seen = set()
    rep = {}
    for a in g.elements:
        p = (g.target[a], g.source[a])
        if p not in seen:
            seen.add(p)
            pairs.append(p)
            rep[p] = a
    # orbit relation as a partition relation on reachability classes
    elset = set(pairs)
    src = {p: p[1] for p in pairs}
    tgt = {p: p[0] for p in pairs}
    inv = {p: (p[1], p[0]) for p in pairs}
    comp = {}
    for (x, y) in pairs:
        for (y2, z) in pairs:
            if y == y2:
                assert (x, z) in elset, "orbit relation not transitive"
                comp[((x, y), (y2, z))] = (x, z)
    units = {x: (x, x) for x in g.base.atoms}
    orbit = FiniteGroupoid(g.base, tuple(pairs), src, tgt, inv, comp, units,
                           name=g.name + ".orbit")

    iso_els = tuple(a for a in g.elements if g.source[a] == g.target[a])
    iso_set = set(iso_els)
    comp_i = {k: v for k, v in g.compose.items()
              if k[0] in iso_set and k[1] in iso_set}
    isotropy = FiniteGroupoid(g.base, iso_els,
                              {a: g.source[a] for a in iso_els},
                              {a: g.target[a] for a in iso_els},
                              {a: g.inverse[a] for a in iso_els},
                              comp_i, dict(g.units), name=g.name + ".isotropy")

    for a in g.elements:
        r = rep[(g.target[a], g.source[a])]
        gamma = g.compose[(g.inverse[r], a)]
        assert gamma in iso_set and g.compose[(r, gamma)] == a, \
            "semidirect factorization failed at %r" % (a,)
    return orbit, isotropy


def is_equivalence_relation(g: FiniteGroupoid) -> bool:
    return all(g.source[a] != g.target[a] or g.is_unit(a) for a in g.elements)


def enveloping(g: FiniteGroupoid) -> FiniteGroupoid:
    """Pairs (a, b) with s(a)=t(b), t(a)=s(b); (a,b)(a',b') = (a'a, bb').

    Source and target of (a, b) are those of the second component; the
    diagonal embedding a -> (inverse(a), a) is a groupoid morphism, and an
    isomorphism when g is an equivalence relation.
    """
    els = tuple((a, b) for a in g.elements for b in g.elements
                if g.source[a] == g.target[b] and g.target[a] == g.source[b])
    src = {(a, b): g.source[b] for (a, b) in els}
    tgt = {(a, b): g.target[b] for (a, b) in els}
    inv = {(a, b): (g.inverse[a], g.inverse[b]) for (a, b) in els}
    comp = {}
    for (a, b) in els:
        for (a2, b2) in els:
            if g.source[b] == g.target[b2]:
                comp[(((a, b)), (a2, b2))] = (g.compose[(a2, a)], g.compose[(b, b2)])
    units = {x: (g.units[x], g.units[x]) for x in g.base.atoms}
    return FiniteGroupoid(g.base, els, src, tgt, inv, comp, units,
                          name=g.name + ".env")


def diagonal_embedding(g: FiniteGroupoid):
    """The morphism a -> (inverse(a), a) into enveloping(g)."""
    return {a: (g.inverse[a], a) for a in g.elements}


@dataclass
class GroupoidMorphism:
    dom: FiniteGroupoid
    cod: FiniteGroupoid
    mapping: dict

    def check(self):
        m = self.mapping
        for a in self.dom.elements:
            b = m[a]
            assert self.dom.source[a] == self.cod.source[b], "source broken at %r" % (a,)
            assert self.dom.target[a] == self.cod.target[b], "target broken at %r" % (a,)
            assert m[self.dom.inverse[a]] == self.cod.inverse[b], "inverse broken at %r" % (a,)
        for (a, b), c in self.dom.compose.items():
            assert self.cod.compose[(m[a], m[b])] == m[c], \
                "composition broken at (%r,%r)" % (a, b)
        return True


# ---------------------------------------------------------------------------
# multibundles and tuple spaces


@dataclass
class MultiBundle:
    carrier: tuple
    base: FiniteMeasuredSpace
    maps: dict          # name -> {carrier element -> atom}

    def __post_init__(self):
        if not self.maps:
            raise ValueError("a multibundle needs at least one bundle map")
        for name, m in self.maps.items():
            for u in self.carrier:
                if u not in m:
                    raise ValueError("bundle map %r not total at %r" % (name, u))

    @property
    def dim(self):
        return len(self.carrier)

    def index(self, u):
        return self.carrier.index(u)


def groupoid_bundle(g: FiniteGroupoid) -> MultiBundle:
    return MultiBundle(g.elements, g.base,
                       {"s": dict(g.source), "t": dict(g.target)})


def base_bundle(space: FiniteMeasuredSpace) -> MultiBundle:
    ident = {x: x for x in space.atoms}
    return MultiBundle(tuple(space.atoms), space, {"id": ident})


def fiber_product(u: MultiBundle, pi: str, v: MultiBundle, sigma: str) -> MultiBundle:
    """U *(pi, sigma) V with merged bundle maps; shared map named pi."""
    if u.base is not v.base and u.base != v.base:
        raise ValueError("fiber product over mismatched bases")
    if pi not in u.maps or sigma not in v.maps:
        raise ValueError("unknown bundle maps %r / %r" % (pi, sigma))
    carrier = tuple((a, b) for a in u.carrier for b in v.carrier
                    if u.maps[pi][a] == v.maps[sigma][b])
    maps = {}
    for name, m in u.maps.items():
        maps["L." + name] = {(a, b): m[a] for (a, b) in carrier}
    for name, m in v.maps.items():
        if name == sigma:
            continue
        maps["R." + name] = {(a, b): m[b] for (a, b) in carrier}
    # the glued map appears once, keeping the bound |B_{U*V}| <= |B_U|+|B_V|-1
    return MultiBundle(carrier, u.base, maps)


def lusin_partition(u: MultiBundle, pi: str):
    """Partition of the carrier into parts on which pi is injective.

    Parts are filled greedily fiber by fiber; the part count equals the
    maximal fiber size.
    """
    fibers = {}
    for x in u.carrier:
        fibers.setdefault(u.maps[pi][x], []).append(x)
    depth = max((len(f) for f in fibers.values()), default=0)
    parts = [[] for _ in range(depth)]
    for x in u.carrier:
        f = fibers[u.maps[pi][x]]
        parts[f.index(x)].append(x)
    return [tuple(p) for p in parts]


# five tuple-space families of a groupoid ----------------------------------

KINDS = ("nerve", "bar", "cyclic", "acyclic", "classifying")


def _chain_tuples(g: FiniteGroupoid, n: int):
    """Composable n-tuples (a1,...,an) with s(a_i) = t(a_{i+1})."""
    if n == 0:
        return [()]
    out = [(a,) for a in g.elements]
    for _ in range(n - 1):
        nxt = []
        for t in out:
            for b in g.arrows(tgt=g.source[t[-1]]):
                nxt.append(t + (b,))
        out = nxt
    return out


def _cyclic_tuples(g: FiniteGroupoid, n: int):
    """Composable (n+1)-tuples whose overall source equals the overall target."""
    return [t for t in _chain_tuples(g, n + 1)
            if g.source[t[-1]] == g.target[t[0]]]


def _target_tuples(g: FiniteGroupoid, n: int):
    """(n+1)-tuples sharing a common target."""
    out = [(a,) for a in g.elements]
    for _ in range(n):
        nxt = []
        for t in out:
            x = g.target[t[0]]
            for b in g.arrows(tgt=x):
                nxt.append(t + (b,))
        out = nxt
    return out


def geometric_carrier(g: FiniteGroupoid, kind: str, n: int):
    if kind == "nerve":
        if n == 0:
            return [(x,) for x in g.base.atoms]
        return _chain_tuples(g, n)
    if kind == "bar":
        return _chain_tuples(g, n + 2)
    if kind == "cyclic":
        return _cyclic_tuples(g, n)
    if kind == "acyclic":
        return _cyclic_tuples(g, n + 1)
    if kind == "classifying":
        return _target_tuples(g, n)
    raise ValueError("unknown kind %r" % kind)


def _nerve_face(g, t, i):
    n = len(t)
    if n == 1:
        # faces into degree 0, which is the base
        return (g.source[t[0]],) if i == 0 else (g.target[t[0]],)
    if i == 0:
        return t[1:]
    if i == n:
        return t[:-1]
    return t[:i - 1] + (g.compose[(t[i - 1], t[i])],) + t[i + 1:]


def _cyclic_face(g, t, i):
    m = len(t) - 1
    if i < m:
        return t[:i] + (g.compose[(t[i], t[i + 1])],) + t[i + 2:]
    return (g.compose[(t[m], t[0])],) + t[1:m]


def geometric_face(g: FiniteGroupoid, kind: str, n: int, i: int, t):
    """The i-th face of the degree-n tuple t, landing in degree n-1."""
    if kind == "nerve":
        assert 0 <= i <= n
        return _nerve_face(g, t, i)
    if kind == "bar":
        assert 0 <= i <= n
        return _nerve_face(g, t, i + 1)
    if kind == "cyclic":
        assert 0 <= i <= n
        return _cyclic_face(g, t, i)
    if kind == "acyclic":
        assert 0 <= i <= n
        return _cyclic_face(g, t, i + 1)
    if kind == "classifying":
        assert 0 <= i <= n
        return t[:i] + t[i + 1:]
    raise ValueError("unknown kind %r" % kind)


def geometric_space(g: FiniteGroupoid, kind: str, n: int) -> MultiBundle:
    """Degree-n tuple space of the requested family as a multibundle."""
    carrier = tuple(geometric_carrier(g, kind, n))
    maps = {}
    if kind == "nerve" and n == 0:
        ident = {(): None}
        # degree 0 of the nerve is the base itself
        return MultiBundle(tuple((x,) for x in g.base.atoms), g.base,
                           {"id": {(x,): x for x in g.base.atoms}})
    if kind == "classifying":
        maps["t"] = {t: g.target[t[0]] for t in carrier}
        for k in range(n + 1):
            maps["s%d" % k] = {t: g.source[t[k]] for t in carrier}
    else:
        ln = len(carrier[0]) if carrier else 0
        maps["t"] = {t: g.target[t[0]] for t in carrier}
        for k in range(ln):
            maps["s%d" % k] = {t: g.source[t[k]] for t in carrier}
    return MultiBundle(carrier, g.base, maps)


def verify_presimplicial_carrier(g: FiniteGroupoid, kind: str, n: int) -> bool:
    """pi_i pi_j = pi_{j-1} pi_i for i<j on every degree-n tuple."""
    if n < 2:
        return True
    for t in geometric_carrier(g, kind, n):
        for j in range(1, n + 1):
            for i in range(j):
                lhs = geometric_face(g, kind, n - 1, i, geometric_face(g, kind, n, j, t))
                rhs = geometric_face(g, kind, n - 1, j - 1, geometric_face(g, kind, n, i, t))
                if lhs != rhs:
                    return False
    return True


# ---------------------------------------------------------------------------
# bisections


def bisections(g: FiniteGroupoid):
    """All subsets on which source and target are bijections onto the atoms.

    Exhaustive backtracking over target fibers; exponential but fine at desk
    scale.
    """
    atoms = list(g.base.atoms)
    fibers = [g.arrows(tgt=x) for x in atoms]
    out = []

    def rec(k, used_sources, chosen):
        if k == len(atoms):
            out.append(frozenset(chosen))
            return
        for a in fibers[k]:
            s = g.source[a]
            if s in used_sources:
                continue
            rec(k + 1, used_sources | {s}, chosen + [a])

    rec(0, frozenset(), [])
    return out


def is_bisection(g: FiniteGroupoid, subset) -> bool:
    subset = list(subset)
    atoms = set(g.base.atoms)
    return (len(subset) == len(atoms)
            and {g.source[a] for a in subset} == atoms
            and {g.target[a] for a in subset} == atoms)


def bisection_permutation(g: FiniteGroupoid, b):
    """The atom permutation x -> t(arrow of b with source x)."""
    return {g.source[a]: g.target[a] for a in b}
