"""Presimplicial modules, chain complexes, contracting homotopies, homology.

Chain spaces come in two flavors: free spaces on groupoid tuples (the five
geometric families) and coinvariant quotients of balanced tensor powers
(bar, Hochschild and the square-coefficient complex).  Homology is computed
exactly, either by sparse elimination or, for large degrees of complexes
carrying a verified contracting homotopy, through the split-certificate:
once d h + h d = 1 is checked at the relevant degrees, e = d h is a
verified idempotent whose trace pins every rank without elimination.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebras import Extension, convolution_algebra
from .fibersquare import FiberSquareAlgebra
from .groupoids import (
    FiniteGroupoid, geometric_carrier, geometric_face, enveloping,
)
from .linalg import Echelon, GMatrix, kernel_basis, vec_axpy, vec_dot
from .scalars import MINUS_ONE, ONE, ZERO, gs
from .tensor import (
    Level, Quotient, Tower, algebra_tower, base_prepend_matrix,
    extension_base_level,
)

ELIMINATION_LIMIT = 2500


@dataclass
class ChainComplex:
    dims: list
    d: dict            # n -> GMatrix, degree n -> n-1, for 1 <= n <= N

    @property
    def N(self):
        return len(self.dims) - 1

    def check_d_squared(self):
        for n in sorted(self.d):
            if n + 1 not in self.d:
                continue
            lo, hi = self.d[n], self.d[n + 1]
            for c in hi.col:
                if lo.apply(c):
                    raise AssertionError("d o d != 0 at degree %d" % (n + 1))
        return True


@dataclass
class ContractingHomotopy:
    """Degree-raising maps with d h + h d = 1 against an augmentation."""

    h: dict                    # n -> GMatrix, degree n -> n+1
    aug: GMatrix               # degree 0 -> target
    aug_section: GMatrix       # target -> degree 0
    verified_upto: int = -1

    def verify(self, chain: ChainComplex, upto: int):
        if not self.aug.mul(chain.d[1]).is_zero():
            raise AssertionError("augmentation does not kill the boundary")
        if self.aug.mul(self.aug_section) != GMatrix.identity(self.aug.rows):
            raise AssertionError("augmentation section is not a section")
        idm = chain.d[1].mul(self.h[0]).add(self.aug_section.mul(self.aug))
        if idm != GMatrix.identity(chain.dims[0]):
            raise AssertionError("homotopy identity fails at degree 0")
        for n in range(1, upto + 1):
            lhs = chain.d[n + 1].mul(self.h[n]).add(self.h[n - 1].mul(chain.d[n]))
            if lhs != GMatrix.identity(chain.dims[n]):
                raise AssertionError("homotopy identity fails at degree %d" % n)
        self.verified_upto = max(self.verified_upto, upto)
        return True


class PresimplicialModule:
    """Graded spaces with face maps pi_i pi_j = pi_{j-1} pi_i for i < j."""

    def __init__(self, dims, faces, coeff=None, action=None, gram=None,
                 labels=None, homotopy=None, name="", meta=None):
        self.dims = dims                  # list, degrees 0..N
        self.faces = faces                # faces[n] = [GMatrix] for n >= 1
        self.coeff = coeff                # acting tracial algebra, or None
        self._action = action             # callable (n, k) -> GMatrix
        self._gram = gram                 # callable n -> GMatrix
        self.labels = labels
        self.homotopy = homotopy
        self.name = name
        self.meta = meta or {}
        self._chain = None
        self._action_cache = {}
        self._gram_cache = {}

    @property
    def N(self):
        return len(self.dims) - 1

    def face(self, n, i) -> GMatrix:
        return self.faces[n][i]

    def action(self, n, k) -> GMatrix:
        key = (n, k)
        if key not in self._action_cache:
            self._action_cache[key] = self._action(n, k)
        return self._action_cache[key]

    def gram(self, n) -> GMatrix:
        if n not in self._gram_cache:
            self._gram_cache[n] = self._gram(n)
        return self._gram_cache[n]

    def verify_presimplicial(self, upto=None):
        upto = self.N if upto is None else upto
        for n in range(2, upto + 1):
            fs = self.faces[n]
            lower = self.faces[n - 1]
            for j in range(1, len(fs)):
                for i in range(j):
                    lhs = lower[i].mul(fs[j])
                    rhs = lower[j - 1].mul(fs[i])
                    if lhs != rhs:
                        raise AssertionError(
                            "presimplicial identity fails at degree %d (%d,%d) in %s"
                            % (n, i, j, self.name))
        return True

    def boundary(self) -> ChainComplex:
        if self._chain is None:
            d = {}
            for n in range(1, self.N + 1):
                acc = GMatrix.zero(self.dims[n - 1], self.dims[n])
                for i, f in enumerate(self.faces[n]):
                    s = ONE if i % 2 == 0 else MINUS_ONE
                    for j in range(self.dims[n]):
                        vec_axpy(acc.col[j], s, f.col[j])
                d[n] = acc
            self._chain = ChainComplex(list(self.dims), d)
            self._chain.check_d_squared()
        return self._chain


def boundary(p: PresimplicialModule) -> ChainComplex:
    return p.boundary()


# ---------------------------------------------------------------------------
# geometric complexes


def _tuple_face_matrix(g, kind, n, i, carrier, lower_index):
    m = GMatrix.zero(len(lower_index), len(carrier))
    for j, t in enumerate(carrier):
        img = geometric_face(g, kind, n, i, t)
        m.col[j][lower_index[img]] = ONE
    return m


def geometric_complex(g: FiniteGroupoid, kind: str, N: int,
                      coeff_ext: Extension = None) -> PresimplicialModule:
    """Function complex of one of the five tuple-space families.

    For the classifying family the convolution algebra acts diagonally and
    a contracting homotopy (append a unit arrow, with alternating signs) is
    installed; its augmentation is the target-class map onto functions on
    the base.
    """
    carriers = [list(geometric_carrier(g, kind, n)) for n in range(N + 1)]
    index = [{t: k for k, t in enumerate(c)} for c in carriers]
    dims = [len(c) for c in carriers]
    faces = [None]
    for n in range(1, N + 1):
        faces.append([_tuple_face_matrix(g, kind, n, i, carriers[n], index[n - 1])
                      for i in range(n + 1)])

    ext = coeff_ext
    if ext is None and kind == "classifying":
        ext = convolution_algebra(g, validate=False)

    action = None
    if kind == "classifying" and ext is not None:
        def action(n, k, _carriers=carriers, _index=index):
            alpha = g.elements[k]
            m = GMatrix.zero(dims[n], dims[n])
            for j, t in enumerate(_carriers[n]):
                if g.source[alpha] == g.target[t[0]]:
                    img = tuple(g.compose[(alpha, c)] for c in t)
                    m.col[j][_index[n][img]] = ONE
            return m

    def gram(n, _carriers=carriers):
        m = GMatrix.zero(dims[n], dims[n])
        for j, t in enumerate(_carriers[n]):
            m.col[j][j] = gs(g.base.weight[g.source[t[0]]])
        return m

    homotopy = None
    if kind == "classifying":
        h = {}
        for n in range(0, N):
            sgn = ONE if (n + 1) % 2 == 0 else MINUS_ONE
            m = GMatrix.zero(dims[n + 1], dims[n])
            for j, t in enumerate(carriers[n]):
                ext_t = t + (g.units[g.target[t[0]]],)
                m.col[j][index[n + 1][ext_t]] = sgn
            h[n] = m
        aug = GMatrix.zero(len(g.base.atoms), dims[0])
        atom_index = {x: k for k, x in enumerate(g.base.atoms)}
        for j, t in enumerate(carriers[0]):
            aug.col[j][atom_index[g.target[t[0]]]] = ONE
        sec = GMatrix.zero(dims[0], len(g.base.atoms))
        for x, k in atom_index.items():
            sec.col[k][index[0][(g.units[x],)]] = ONE
        homotopy = ContractingHomotopy(h, aug, sec)
    elif kind in ("bar", "acyclic"):
        h = {}
        for n in range(0, N):
            m = GMatrix.zero(dims[n + 1], dims[n])
            for j, t in enumerate(carriers[n]):
                if kind == "bar":
                    ext_t = (g.units[g.target[t[0]]],) + t
                else:
                    ext_t = (t[0], g.units[g.source[t[0]]]) + t[1:]
                m.col[j][index[n + 1][ext_t]] = ONE
            h[n] = m
        # augment with the degree "-1" carrier of the family
        if kind == "bar":
            lowc = list(geometric_carrier(g, "nerve", 1))
            low_index = {t: k for k, t in enumerate(lowc)}
            aug = GMatrix.zero(len(lowc), dims[0])
            for j, t in enumerate(carriers[0]):
                aug.col[j][low_index[(g.compose[(t[0], t[1])],)]] = ONE
            sec = GMatrix.zero(dims[0], len(lowc))
            for t, k in low_index.items():
                ext_t = (g.units[g.target[t[0]]], t[0])
                sec.col[k][index[0][ext_t]] = ONE
        else:
            lowc = list(geometric_carrier(g, "cyclic", 0))
            low_index = {t: k for k, t in enumerate(lowc)}
            aug = GMatrix.zero(len(lowc), dims[0])
            for j, t in enumerate(carriers[0]):
                aug.col[j][low_index[(g.compose[(t[1], t[0])],)]] = ONE
            sec = GMatrix.zero(dims[0], len(lowc))
            for t, k in low_index.items():
                ext_t = (t[0], g.units[g.source[t[0]]])
                sec.col[k][index[0][ext_t]] = ONE
        homotopy = ContractingHomotopy(h, aug, sec)

    out = PresimplicialModule(
        dims, faces, coeff=(ext.alg if ext is not None else None),
        action=action, gram=gram, labels=carriers, homotopy=homotopy,
        name="%s-%s" % (g.name or "G", kind),
        meta={"kind": kind, "groupoid": g.name})
    out.ext = ext
    out.verify_presimplicial()
    return out


# ---------------------------------------------------------------------------
# algebraic complexes over a tower


def _coinv_quotient(level: Level) -> Quotient:
    ext = level.left_ext
    if ext.sub.dim == 1:
        return Quotient.identity(level.dim)
    cols = []
    for k in range(ext.sub.dim):
        bvecA = ext.embed.column(k)
        lam = level.left_act_vec(bvecA)
        rho = level.right_act_vec(level.right_ext.embed.column(k))
        d = lam.sub(rho)
        cols.extend([c for c in d.col if c])
    return Quotient(level.dim, cols)


def _coinv_generators(level: Level):
    ext = level.left_ext
    gens = []
    for k in range(ext.sub.dim):
        lam = level.left_act_vec(ext.embed.column(k))
        rho = level.right_act_vec(level.right_ext.embed.column(k))
        d = lam.sub(rho)
        gens.extend([c for c in d.col if c])
    return gens


def _descend(m: GMatrix, src_q: Quotient, dst_q: Quotient) -> GMatrix:
    cols = []
    for q in range(src_q.dim):
        cols.append(dst_q.project(m.apply(src_q.section({q: ONE}))))
    return GMatrix.from_cols(dst_q.dim, cols)


def _chain_gram(level: Level, coq: Quotient) -> GMatrix:
    """Transport of the level form to the coinvariants via the invariants."""
    if coq.is_identity:
        return level.scalar_gram()
    ext = level.left_ext
    dim_b = ext.sub.dim
    stacked = GMatrix.zero(level.dim * dim_b, level.dim)
    for k in range(dim_b):
        lam = level.left_act_vec(ext.embed.column(k))
        rho = level.right_act_vec(level.right_ext.embed.column(k))
        d = lam.sub(rho)
        for j in range(level.dim):
            for i, x in d.col[j].items():
                stacked.col[j][i + k * level.dim] = x
    inv = kernel_basis(stacked)
    assert inv.cols == coq.dim, "invariants do not match coinvariants"
    psi_cols = [coq.project(inv.column(j)) for j in range(inv.cols)]
    psi = GMatrix.from_cols(coq.dim, psi_cols)
    from .linalg import invert
    section = inv.mul(invert(psi))
    g = level.scalar_gram()
    return section.adjoint().mul(g.mul(section))


def hochschild_complex(ext: Extension, base_level: Level, N: int,
                       coeff=None, coeff_action=None,
                       name="", check_descent=True) -> PresimplicialModule:
    """Chain spaces: coinvariants of base (x)_B A^{(x)n}; faces merge slots
    and wrap the last factor onto the base through the left action."""
    tower = Tower(base_level, ext)
    levels = [tower.level(n) for n in range(N + 1)]
    coqs = [_coinv_quotient(l) for l in levels]
    dims = [q.dim for q in coqs]

    # the base may itself be an iterated tensor; its internal slots are
    # glued together, so merge positions are offset by the base depth
    bd = base_level.depth()

    faces = [None]
    for n in range(1, N + 1):
        lvl = levels[n]
        row = []
        for i in range(n):
            row.append(_descend(lvl.join(bd + i), coqs[n], coqs[n - 1]))
        row.append(_descend(lvl.wrap(), coqs[n], coqs[n - 1]))
        faces.append(row)

    if check_descent and ext.sub.dim > 1:
        for n in range(1, N + 1):
            gens = _coinv_generators(levels[n])
            maps = [levels[n].join(bd + i) for i in range(n)] + [levels[n].wrap()]
            for m in maps:
                for w in gens:
                    if coqs[n - 1].project(m.apply(w)):
                        raise AssertionError(
                            "face does not descend to coinvariants at degree %d" % n)

    action = None
    if coeff_action is not None:
        ext_ops = {}

        def extended_op(n, k):
            if (n, k) in ext_ops:
                return ext_ops[(n, k)]
            if n == 0:
                m = coeff_action(k)
            else:
                inner = extended_op(n - 1, k)
                lvl = levels[n]
                cols = []
                for q in range(lvl.dim):
                    (v, b) = lvl._unpair(lvl.quotient.keep[q])
                    amb = {}
                    for w, coef in inner.col[v].items():
                        amb[lvl._pidx(w, b)] = coef
                    cols.append(lvl.quotient.project(amb))
                m = GMatrix.from_cols(lvl.dim, cols)
            ext_ops[(n, k)] = m
            return m

        def action(n, k):
            return _descend(extended_op(n, k), coqs[n], coqs[n])

    def gram(n):
        return _chain_gram(levels[n], coqs[n])

    out = PresimplicialModule(dims, faces, coeff=coeff, action=action,
                              gram=gram, name=name,
                              meta={"kind": "hochschild"})
    out.tower = tower
    out.coinv = coqs
    out.levels = levels
    out.verify_presimplicial()
    return out


def plain_hochschild_complex(ext: Extension, N: int,
                             check_descent=True) -> PresimplicialModule:
    """C_n(A/B) with coefficients in A itself."""
    return hochschild_complex(ext, extension_base_level(ext), N,
                              name="HH(%s)" % ext.name,
                              check_descent=check_descent)


def l2_complex(ext: Extension, fsq: FiberSquareAlgebra, N: int,
               check_descent=True) -> PresimplicialModule:
    """Square-coefficient Hochschild complex, a module over the fiber square.

    At finite scale the weak closure of the fiber square is the fiber
    square itself, so the coefficient bimodule is the balanced square with
    its operator action.  Carries the insert-a-unit contracting homotopy
    and the wrap augmentation onto A/[B, A].
    """
    bt = fsq.tensor
    out = hochschild_complex(ext, bt.level, N, coeff=fsq,
                             coeff_action=lambda k: fsq.ops[k],
                             name="L2(%s)" % ext.name,
                             check_descent=check_descent)
    tower = out.tower
    coqs = out.coinv
    levels = out.levels

    A = ext.alg
    comm_cols = []
    for k in range(ext.sub.dim):
        bk = ext.embed.column(k)
        for j in range(A.dim):
            c = A.mul(bk, {j: ONE})
            vec_axpy(c, MINUS_ONE, A.mul({j: ONE}, bk))
            if c:
                comm_cols.append(c)
    ab_quot = Quotient(A.dim, comm_cols)

    d2 = ext.alg.dim
    sq = bt.level

    aug = GMatrix.zero(ab_quot.dim, coqs[0].dim)
    for q in range(coqs[0].dim):
        m_vec = coqs[0].section({q: ONE})
        out_vec = {}
        for mi, c in m_vec.items():
            (i, j) = divmod(sq.quotient.keep[mi], d2)
            vec_axpy(out_vec, c, A.mul({j: ONE}, {i: ONE}))
        for r, x in ab_quot.project(out_vec).items():
            if not x.is_zero():
                aug.col[q][r] = x

    sec = GMatrix.zero(coqs[0].dim, ab_quot.dim)
    for r in range(ab_quot.dim):
        a_idx = ab_quot.keep[r]
        amb = {}
        for u, c in A.unit.items():
            amb[a_idx * d2 + u] = c
        sec.col[r] = coqs[0].project(sq.quotient.project(amb))

    # a_0 (x) a_1 (x) ... -> a_0 (x) 1 (x) a_1 (x) ...: the unit is inserted
    # inside the square coefficient, pushing its second slot outward
    lvl1 = tower.level(1)
    base_insert_cols = []
    for q in range(sq.dim):
        (i, j) = divmod(sq.quotient.keep[q], d2)
        sq_part = {}
        for u, c in A.unit.items():
            sq_part[i * d2 + u] = c
        sq_vec = sq.quotient.project(sq_part)
        amb = {}
        for v, c in sq_vec.items():
            amb[lvl1._pidx(v, j)] = c
        base_insert_cols.append(lvl1.quotient.project(amb))
    base_insert = GMatrix.from_cols(lvl1.dim, base_insert_cols)

    h = {}
    for n in range(0, N):
        ins = tower.insert_unit(n, base_insert)
        h[n] = _descend_between(ins, coqs[n], coqs[n + 1])
    homotopy = ContractingHomotopy(h, aug, sec)
    homotopy.verify(out.boundary(), max(N - 1, 0))
    out.homotopy = homotopy
    out.ab_quot = ab_quot
    out.meta["coefficients"] = "balanced square; weak closure trivial at finite dimension"
    return out


def _descend_between(m: GMatrix, src_q: Quotient, dst_q: Quotient) -> GMatrix:
    cols = []
    for q in range(src_q.dim):
        cols.append(dst_q.project(m.apply(src_q.section({q: ONE}))))
    return GMatrix.from_cols(dst_q.dim, cols)


def contracting_homotopy(kind: str, ext: Extension, N: int,
                         fsq=None) -> ContractingHomotopy:
    """Verified contracting homotopy of the bar or square-coefficient
    complex of an extension, with its augmentation."""
    if kind == "bar":
        p = bar_complex(ext, N)
    elif kind == "acyclic":
        if fsq is None:
            from .fibersquare import default_pairs, fiber_square, \
                groupoid_fiber_square
            if ext.provenance and ext.provenance[0] in ("groupoid", "twisted"):
                fsq, _ = groupoid_fiber_square(ext)
            else:
                fsq = fiber_square(ext, ext, default_pairs(ext))
        p = l2_complex(ext, fsq, N)
    else:
        raise ValueError("no contracting homotopy for kind %r" % kind)
    p.homotopy.verify(p.boundary(), max(N - 1, 0))
    return p.homotopy


def bar_complex(ext: Extension, N: int):
    """The two-sided bar resolution of A by balanced powers.

    Returns (presimplicial module, augmentation K_0 -> A, homotopy).
    """
    tower = algebra_tower(ext)
    levels = [tower.level(n + 1) for n in range(N + 1)]
    dims = [l.dim for l in levels]
    faces = [None]
    for n in range(1, N + 1):
        faces.append([levels[n].join(i) for i in range(n + 1)])

    bp = base_prepend_matrix(tower)
    aug = tower.level(1).join(0)
    h = {}
    for n in range(0, N):
        h[n] = tower.prepend_unit(n + 1, bp)
    homotopy = ContractingHomotopy(h, aug, bp)

    def gram(n):
        return levels[n].scalar_gram()

    out = PresimplicialModule(dims, faces, gram=gram,
                              name="bar(%s)" % ext.name,
                              homotopy=homotopy, meta={"kind": "bar"})
    out.tower = tower
    out.levels = levels
    out.verify_presimplicial()
    homotopy.verify(out.boundary(), max(N - 1, 0))
    return out


# ---------------------------------------------------------------------------
# comparison isomorphisms between geometric and algebraic complexes


def _fold_tuple_class(ext: Extension, tower: Tower, t, start_level=0):
    """Class of delta_{t0} (x) ... (x) delta_{tk} inside the tower."""
    g = ext.provenance[1]
    gi = {a: k for k, a in enumerate(g.elements)}
    if start_level == 0:
        vec = {gi[t[0]]: ONE}
        rest = t[1:]
    else:
        lvl = tower.base
        d2 = ext.alg.dim
        amb = {gi[t[0]] * d2 + gi[t[1]]: ONE}
        vec = lvl.quotient.project(amb)
        rest = t[2:]
    k = 0
    for a in rest:
        k += 1
        lvl = tower.level(k)
        amb = {}
        for v, c in vec.items():
            amb[lvl._pidx(v, gi[a])] = c
        vec = lvl.quotient.project(amb)
    return vec


def bar_comparison(ext: Extension, geo: PresimplicialModule,
                   alg_bar: PresimplicialModule, N: int):
    """Degreewise isomorphism from the geometric bar complex onto the
    algebraic one, commuting with all faces."""
    tower = alg_bar.tower
    isos = []
    for n in range(N + 1):
        cols = [_fold_tuple_class(ext, tower, t, start_level=0)
                for t in geo.labels[n]]
        m = GMatrix.from_cols(alg_bar.dims[n], cols)
        if geo.dims[n] != alg_bar.dims[n]:
            raise AssertionError("bar dimensions differ at degree %d" % n)
        if kernel_basis(m).cols != 0:
            raise AssertionError("bar comparison is not injective at degree %d" % n)
        isos.append(m)
    for n in range(1, N + 1):
        for i in range(n + 1):
            lhs = isos[n - 1].mul(geo.face(n, i))
            rhs = alg_bar.face(n, i).mul(isos[n])
            if lhs != rhs:
                raise AssertionError("bar comparison breaks face (%d,%d)" % (n, i))
    return isos


def cyclic_comparison(ext: Extension, geo: PresimplicialModule,
                      hh: PresimplicialModule, N: int):
    """Geometric cyclic complex onto the Hochschild complex of A over B."""
    tower = hh.tower
    isos = []
    for n in range(N + 1):
        cols = []
        for t in geo.labels[n]:
            vec = _fold_tuple_class(ext, tower, t, start_level=0)
            cols.append(hh.coinv[n].project(vec))
        m = GMatrix.from_cols(hh.dims[n], cols)
        if geo.dims[n] != hh.dims[n]:
            raise AssertionError("cyclic dimensions differ at degree %d" % n)
        if kernel_basis(m).cols != 0:
            raise AssertionError("cyclic comparison not injective at degree %d" % n)
        isos.append(m)
    for n in range(1, N + 1):
        for i in range(n + 1):
            lhs = isos[n - 1].mul(geo.face(n, i))
            rhs = hh.face(n, i).mul(isos[n])
            if lhs != rhs:
                raise AssertionError("cyclic comparison breaks face (%d,%d)" % (n, i))
    return isos


def acyclic_comparison(ext: Extension, geo: PresimplicialModule,
                       l2: PresimplicialModule, N: int):
    """Geometric square-coefficient complex onto the algebraic one."""
    tower = l2.tower
    isos = []
    for n in range(N + 1):
        cols = []
        for t in geo.labels[n]:
            vec = _fold_tuple_class(ext, tower, t, start_level=1)
            cols.append(l2.coinv[n].project(vec))
        m = GMatrix.from_cols(l2.dims[n], cols)
        if geo.dims[n] != l2.dims[n]:
            raise AssertionError("square-coefficient dimensions differ at degree %d" % n)
        if kernel_basis(m).cols != 0:
            raise AssertionError("comparison not injective at degree %d" % n)
        isos.append(m)
    for n in range(1, N + 1):
        for i in range(n + 1):
            lhs = isos[n - 1].mul(geo.face(n, i))
            rhs = l2.face(n, i).mul(isos[n])
            if lhs != rhs:
                raise AssertionError("comparison breaks face (%d,%d)" % (n, i))
    return isos


# ---------------------------------------------------------------------------
# homology


@dataclass
class HomologyModule:
    degree: int
    dim: int
    basis: GMatrix            # chain-degree vectors, or None when zero
    rank_lower: int           # rank of d_n
    rank_upper: int           # rank of d_{n+1}
    method: str
    presimp: PresimplicialModule = field(repr=False, default=None)

    def action_matrices(self):
        """Coefficient action restricted to the homology subspace.

        Also asserts that the chain form is action invariant on the
        subspace, <a x | y> = <x | a* y>, which is what makes the
        orthogonal complement of the boundary image a submodule."""
        if self.dim == 0 or self.presimp is None or self.presimp._action is None:
            return []
        p = self.presimp
        n = self.degree
        ech = Echelon(track=True)
        for j in range(self.basis.cols):
            piv, _ = ech.insert(self.basis.column(j))
            assert piv is not None
        gram = p.gram(n)
        gb = [gram.apply(self.basis.column(j)) for j in range(self.basis.cols)]
        out = []
        for k in range(p.coeff.dim):
            act = p.action(n, k)
            cols = []
            imgs = []
            for j in range(self.basis.cols):
                img = act.apply(self.basis.column(j))
                imgs.append(img)
                c = ech.coords(img)
                if c is None:
                    raise AssertionError(
                        "coefficient action does not preserve homology")
                cols.append(c)
            star_k = p.coeff.star({k: ONE})
            for i in range(self.basis.cols):
                star_img = {}
                for kk, cc in star_k.items():
                    vec_axpy(star_img, cc,
                             p.action(n, kk).apply(self.basis.column(i)))
                for j in range(self.basis.cols):
                    lhs = vec_dot(imgs[j], gb[i])
                    rhs = vec_dot(self.basis.column(j), gram.apply(star_img))
                    if lhs != rhs:
                        raise AssertionError(
                            "chain form is not action invariant on homology")
            out.append(GMatrix.from_cols(self.dim, cols))
        return out


def _image_basis(m: GMatrix) -> GMatrix:
    ech = Echelon()
    cols = []
    for c in m.col:
        piv, _ = ech.insert(c)
        if piv is not None:
            cols.append(dict(c))
    return GMatrix.from_cols(m.rows, cols)


def homology(p: PresimplicialModule, n: int, method="auto",
             elimination_limit=ELIMINATION_LIMIT) -> HomologyModule:
    """H_n as the subspace ker d_n orthogonal to im d_{n+1}.

    method "elimination" computes kernels and images by sparse exact
    elimination; "split" uses the verified contracting homotopy: with
    d h + h d = 1 checked at degrees n-1 and n and d o d = 0, the map
    e = d_{n+1} h_n is a verified idempotent with image exactly
    ker d_n = im d_{n+1}, so tr(e) pins both ranks and H_n = 0.
    """
    if n + 1 > p.N:
        raise ValueError("homology at degree %d needs spaces up to %d" % (n, n + 1))
    chain = p.boundary()
    d_hi = chain.d[n + 1]
    d_lo = chain.d.get(n)

    if method == "auto":
        if p.homotopy is not None and n >= 1 and d_hi.cols > elimination_limit:
            method = "split"
        else:
            method = "elimination"

    if method == "split":
        if p.homotopy is None:
            raise ValueError("split method needs a contracting homotopy")
        p.homotopy.verify(chain, n)
        e = d_hi.mul(p.homotopy.h[n])
        if e.mul(e) != e:
            raise AssertionError("split certificate is not idempotent")
        tr = ZERO
        for j in range(e.cols):
            x = e.col[j].get(j)
            if x is not None:
                tr = tr + x
        assert tr.is_real() and tr.re.denominator == 1
        r_hi = int(tr.re)
        ker_dim = r_hi                      # ker d_n = im e
        r_lo = p.dims[n] - ker_dim
        dim_h = ker_dim - r_hi
        assert dim_h == 0
        return HomologyModule(n, 0, None, r_lo, r_hi, "split", p)

    # elimination
    if n == 0:
        ker = GMatrix.identity(p.dims[0])
        r_lo = 0
    else:
        ker = kernel_basis(d_lo)
        r_lo = p.dims[n] - ker.cols
    im = _image_basis(d_hi)
    r_hi = im.cols
    dim_h = ker.cols - r_hi
    if dim_h == 0:
        return HomologyModule(n, 0, None, r_lo, r_hi, "elimination", p)
    g = p.gram(n)
    gk = g.mul(ker)
    m = im.adjoint().mul(gk)        # (im)^* G ker
    sol = kernel_basis(m)
    basis = ker.mul(sol)
    assert basis.cols == dim_h
    return HomologyModule(n, dim_h, basis, r_lo, r_hi, "elimination", p)


# ---------------------------------------------------------------------------
# the classifying-to-square zigzag


@dataclass
class ThetaIso:
    """Degreewise isomorphism from C(G^e) (x)_{C G} C(E G) onto the
    square-coefficient tuple complex, with its explicit inverse."""

    groupoid: FiniteGroupoid
    env: FiniteGroupoid
    theta: list            # per-degree GMatrix (lhs -> acyclic tuples)
    theta_inv: list
    lhs_dims: list
    rhs_dims: list
    checks: dict


def _theta_tuple(g, t):
    """(a_0,...,a_n) -> (a_n^{-1}, a_0, a_0^{-1} a_1, ..., a_{n-1}^{-1} a_n)."""
    n = len(t) - 1
    out = [g.inverse[t[n]], t[0]]
    for i in range(n):
        out.append(g.compose[(g.inverse[t[i]], t[i + 1])])
    return tuple(out)


def theta_iso(g: FiniteGroupoid, N: int) -> ThetaIso:
    env = enveloping(g)
    acyc = [list(geometric_carrier(g, "acyclic", n)) for n in range(N + 1)]
    acyc_index = [{t: k for k, t in enumerate(c)} for c in acyc]

    # lhs carriers: degree 0 is G^e; degree n >= 1 is G^e *_{s,t} E^{n-1}
    lhs = [list(env.elements)]
    for n in range(1, N + 1):
        carrier = []
        for gamma in env.elements:
            for w in geometric_carrier(g, "classifying", n - 1):
                if env.source[gamma] == g.target[w[0]]:
                    carrier.append((gamma, w))
        lhs.append(carrier)
    lhs_index = [{t: k for k, t in enumerate(c)} for c in lhs]

    def act_env(gamma, z):
        """G^e-action on square tuples: (a,b).(z0, z1, rest) = (z0 a, b z1, rest)."""
        a, b = gamma
        z0 = g.compose[(z[0], a)]
        z1 = g.compose[(b, z[1])]
        return (z0, z1) + z[2:]

    def theta_apply(n, item):
        if n == 0:
            gamma = item
            x = env.source[gamma]
            unit_t = _theta_tuple(g, (g.units[x],))
            return act_env(gamma, unit_t)
        gamma, w = item
        x = g.target[w[0]]
        tup = (g.units[x],) + w
        return act_env(gamma, _theta_tuple(g, tup))

    theta = []
    for n in range(N + 1):
        m = GMatrix.zero(len(acyc[n]), len(lhs[n]))
        for j, item in enumerate(lhs[n]):
            m.col[j][acyc_index[n][theta_apply(n, item)]] = ONE
        theta.append(m)

    theta_inv = []
    for n in range(N + 1):
        m = GMatrix.zero(len(lhs[n]), len(acyc[n]))
        for j, z in enumerate(acyc[n]):
            if n == 0:
                # a square tuple (z0, z1) is an enveloping element
                m.col[j][lhs_index[0][(z[0], z[1])]] = ONE
            else:
                omegas = [z[2]]
                for k in range(3, n + 2):
                    omegas.append(g.compose[(omegas[-1], z[k])])
                alpha = g.compose[(omegas[-1], z[0])]
                item = ((alpha, z[1]), tuple(omegas))
                m.col[j][lhs_index[n][item]] = ONE
        theta_inv.append(m)

    checks = {"two_sided_inverse": True, "face_commuting": True,
              "equivariant": True}
    for n in range(N + 1):
        if theta[n].mul(theta_inv[n]) != GMatrix.identity(len(acyc[n])) or \
           theta_inv[n].mul(theta[n]) != GMatrix.identity(len(lhs[n])):
            checks["two_sided_inverse"] = False

    # lhs faces through the identification
    def lhs_face(n, i, item):
        gamma, w = item
        if i == 0:
            w1 = w[0]
            new_gamma = env.compose[(gamma, (g.inverse[w1], w1))]
            rest = tuple(g.compose[(g.inverse[w1], c)] for c in w[1:])
            return (new_gamma, rest) if n - 1 >= 1 else new_gamma
        # face i deletes w_{i-1} of the normalized tuple (1, w)
        keep = w[:i - 1] + w[i:]
        return (gamma, keep) if n - 1 >= 1 else gamma

    for n in range(1, N + 1):
        for i in range(n + 1):
            lm = GMatrix.zero(len(lhs[n - 1]), len(lhs[n]))
            for j, item in enumerate(lhs[n]):
                img = lhs_face(n, i, item)
                lm.col[j][lhs_index[n - 1][img]] = ONE
            geo_face = _tuple_face_matrix(g, "acyclic", n, i, acyc[n],
                                          acyc_index[n - 1])
            if geo_face.mul(theta[n]) != theta[n - 1].mul(lm):
                checks["face_commuting"] = False

    # equivariance of theta on raw tuples: theta(alpha . w) = iota(alpha) theta(w)
    for n in range(0, min(N, 2) + 1):
        for w in geometric_carrier(g, "classifying", n):
            for alpha in g.elements:
                if g.source[alpha] != g.target[w[0]]:
                    continue
                aw = tuple(g.compose[(alpha, c)] for c in w)
                lhs_t = _theta_tuple(g, aw)
                rhs_t = act_env((g.inverse[alpha], alpha), _theta_tuple(g, w))
                if lhs_t != rhs_t:
                    checks["equivariant"] = False

    if not all(checks.values()):
        raise AssertionError("theta verification failed: %s" % checks)
    return ThetaIso(g, env, theta, theta_inv,
                    [len(c) for c in lhs], [len(c) for c in acyc], checks)
