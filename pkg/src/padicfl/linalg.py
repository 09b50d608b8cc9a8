"""Exact linear algebra over Z/p^N and O_K/p^N.

Both rings are local principal ideal rings with maximal ideal (p), so a
single valuation-pivot elimination gives the Smith normal form
U A V = D over either; no general Howell machinery is needed.  The pivot
is always an entry of minimal valuation, ties broken by the lowest
(row, col) pair, which keeps the decomposition deterministic.

Two semantics coexist and are never mixed implicitly:

* finite semantics: matrices are maps of finite modules over the actual
  ring Z/p^N; kernels and cokernels are the literal finite ones.
* integral semantics: matrices are precision-N approximations of maps of
  modules over Z_p (or O_K); a divisor exponent N is read as "zero over
  the integers", and any divisor landing in the window [N - margin, N)
  raises InsufficientPrecision instead of being guessed either way.

Everything downstream (module cohomology, lattice indices, the measure
bookkeeping) is built on the handful of primitives here: normal form,
solving, kernel bases, and subquotient presentations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    ContextMismatch,
    InsufficientPrecision,
    NotAUnit,
    ShapeMismatch,
    SpanMismatch,
)
from .padic import PadicContext, PadicScalar, UnramifiedScalar, frobenius

__all__ = [
    "Mat",
    "KMat",
    "SemilinearMap",
    "NormalFormResult",
    "ZpModuleStructure",
    "Subquotient",
    "DEFAULT_MARGIN",
    "smith_normal_form",
    "kernel",
    "cokernel",
    "solve_mod",
    "true_solve",
    "true_kernel_basis",
    "finite_kernel_generators",
    "invert_unimodular",
    "det_exact",
    "restrict_scalars",
    "relative_index",
    "mat_frobenius",
    "hstack",
    "vstack",
]

DEFAULT_MARGIN = 3


def _scalar_zero(ctx, kind):
    return ctx.zero() if kind == "zp" else ctx.zero_u()


def _scalar_one(ctx, kind):
    return ctx.one() if kind == "zp" else ctx.one_u()


@dataclass(frozen=True)
class Mat:
    """Rectangular matrix over one context; kind 'zp' or 'ok' fixes the scalars."""

    ctx: PadicContext
    kind: str
    rows: int
    cols: int
    entries: tuple

    @classmethod
    def from_rows(cls, ctx, rows_list, kind=None):
        rows_list = [tuple(r) for r in rows_list]
        r = len(rows_list)
        c = len(rows_list[0]) if r else 0
        if any(len(row) != c for row in rows_list):
            raise ShapeMismatch("ragged rows")
        if kind is None:
            sample = rows_list[0][0] if r and c else None
            kind = "zp" if isinstance(sample, PadicScalar) else "ok"
        for row in rows_list:
            for x in row:
                if x.ctx != ctx:
                    raise ContextMismatch("matrix entry from a different context")
        return cls(ctx, kind, r, c, tuple(rows_list))

    @classmethod
    def identity(cls, ctx, n, kind):
        one, zero = _scalar_one(ctx, kind), _scalar_zero(ctx, kind)
        return cls(ctx, kind, n, n, tuple(
            tuple(one if i == j else zero for j in range(n)) for i in range(n)))

    @classmethod
    def zero(cls, ctx, r, c, kind):
        z = _scalar_zero(ctx, kind)
        return cls(ctx, kind, r, c, tuple(tuple(z for _ in range(c)) for _ in range(r)))

    @classmethod
    def from_int_rows(cls, ctx, rows_list, kind="zp"):
        if kind == "zp":
            conv = ctx.int_scalar
        else:
            def conv(v):
                return ctx.unram_scalar([v] + [0] * (ctx.f - 1))
        return cls.from_rows(ctx, [[conv(v) for v in row] for row in rows_list], kind)

    @classmethod
    def column(cls, entries_list):
        sample = entries_list[0]
        kind = "zp" if isinstance(sample, PadicScalar) else "ok"
        return cls.from_rows(sample.ctx, [[x] for x in entries_list], kind)

    def entry(self, i, j):
        return self.entries[i][j]

    def col(self, j):
        return tuple(self.entries[i][j] for i in range(self.rows))

    def col_mat(self, j):
        return Mat(self.ctx, self.kind, self.rows, 1,
                   tuple((self.entries[i][j],) for i in range(self.rows)))

    def transpose(self):
        return Mat(self.ctx, self.kind, self.cols, self.rows,
                   tuple(tuple(self.entries[i][j] for i in range(self.rows))
                         for j in range(self.cols)))

    def __matmul__(self, other):
        if self.kind != other.kind or self.ctx != other.ctx:
            raise ContextMismatch("matrix kinds or contexts differ")
        if self.cols != other.rows:
            raise ShapeMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        zero = _scalar_zero(self.ctx, self.kind)
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(tuple(row))
        return Mat(self.ctx, self.kind, self.rows, other.cols, tuple(out))

    def __add__(self, other):
        self._check_same_shape(other)
        return Mat(self.ctx, self.kind, self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r1, r2))
            for r1, r2 in zip(self.entries, other.entries)))

    def __sub__(self, other):
        self._check_same_shape(other)
        return Mat(self.ctx, self.kind, self.rows, self.cols, tuple(
            tuple(a - b for a, b in zip(r1, r2))
            for r1, r2 in zip(self.entries, other.entries)))

    def __neg__(self):
        return Mat(self.ctx, self.kind, self.rows, self.cols, tuple(
            tuple(-a for a in r) for r in self.entries))

    def _check_same_shape(self, other):
        if self.kind != other.kind or self.ctx != other.ctx:
            raise ContextMismatch("matrix kinds or contexts differ")
        if self.rows != other.rows or self.cols != other.cols:
            raise ShapeMismatch("shape mismatch")

    def scale(self, s):
        return Mat(self.ctx, self.kind, self.rows, self.cols, tuple(
            tuple(s * a for a in r) for r in self.entries))

    def times_p_power(self, k):
        return Mat(self.ctx, self.kind, self.rows, self.cols, tuple(
            tuple(a.times_p_power(k) for a in r) for r in self.entries))

    def shift_down(self, k):
        """Exact division of every entry by p^k (all valuations must allow)."""
        return Mat(self.ctx, self.kind, self.rows, self.cols, tuple(
            tuple(a.shift_down(k) for a in r) for r in self.entries))

    def is_zero(self) -> bool:
        return all(a.is_zero for r in self.entries for a in r)

    def min_valuation(self) -> int:
        vals = [a.valuation() for r in self.entries for a in r]
        return min(vals) if vals else self.ctx.N

    def to_json_obj(self):
        return [[a.to_json_obj() for a in r] for r in self.entries]

    def __str__(self):
        def fmt(a):
            return str(a.value) if self.kind == "zp" else str(list(a.coeffs))
        return "\n".join(" ".join(fmt(a) for a in r) for r in self.entries)


def hstack(*mats: Mat) -> Mat:
    base = mats[0]
    if any(m.rows != base.rows for m in mats):
        raise ShapeMismatch("hstack row counts differ")
    rows = tuple(
        tuple(x for m in mats for x in m.entries[i]) for i in range(base.rows))
    return Mat(base.ctx, base.kind, base.rows, sum(m.cols for m in mats), rows)


def vstack(*mats: Mat) -> Mat:
    base = mats[0]
    if any(m.cols != base.cols for m in mats):
        raise ShapeMismatch("vstack column counts differ")
    rows = tuple(r for m in mats for r in m.entries)
    return Mat(base.ctx, base.kind, sum(m.rows for m in mats), base.cols, rows)


def mat_frobenius(m: Mat, s: int = 1) -> Mat:
    """Apply sigma^s to every entry."""
    return Mat(m.ctx, m.kind, m.rows, m.cols, tuple(
        tuple(frobenius(a, s) for a in r) for r in m.entries))


def reduce_mat(m: Mat, target: PadicContext) -> Mat:
    """Reduce every entry into a lower-precision compatible context."""
    if target == m.ctx:
        return m
    return Mat(target, m.kind, m.rows, m.cols, tuple(
        tuple(a.reduce_to(target) for a in r) for r in m.entries))


@dataclass(frozen=True)
class KMat:
    """A matrix over the fraction field: p^{-shift} times an integral matrix.

    Entries of the integral part are known mod p^N, so the K-values are
    known mod p^{N - shift}; margins account for that at the use sites.
    """

    mat: Mat
    shift: int = 0

    @property
    def rows(self):
        return self.mat.rows

    @property
    def cols(self):
        return self.mat.cols

    @property
    def ctx(self):
        return self.mat.ctx

    def with_shift(self, s: int) -> "KMat":
        """Rewrite with a larger shift (multiplying the integral part up)."""
        if s < self.shift:
            raise ShapeMismatch("cannot lower a shift without dividing")
        return KMat(self.mat.times_p_power(s - self.shift), s)

    def __matmul__(self, other: "KMat") -> "KMat":
        return KMat(self.mat @ other.mat, self.shift + other.shift)

    def __sub__(self, other: "KMat") -> "KMat":
        s = max(self.shift, other.shift)
        return KMat(self.with_shift(s).mat - other.with_shift(s).mat, s)

    def __add__(self, other: "KMat") -> "KMat":
        s = max(self.shift, other.shift)
        return KMat(self.with_shift(s).mat + other.with_shift(s).mat, s)

    def scale_p_power(self, k: int) -> "KMat":
        """Multiply the value by p^k, adjusting the shift only.

        Keeping the integral part untouched preserves its full precision;
        shifts may go negative (the value is then an integral multiple).
        """
        return KMat(self.mat, self.shift - k)

    def frobenius(self, s: int = 1) -> "KMat":
        return KMat(mat_frobenius(self.mat, s), self.shift)


@dataclass(frozen=True)
class SemilinearMap:
    """x |-> A . sigma^s(x) on column vectors over O_K/p^N."""

    matrix: Mat
    twist: int = 0

    def apply(self, x: Mat) -> Mat:
        return self.matrix @ mat_frobenius(x, self.twist)

    def compose(self, other: "SemilinearMap") -> "SemilinearMap":
        return SemilinearMap(self.matrix @ mat_frobenius(other.matrix, self.twist),
                             self.twist + other.twist)


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class NormalFormResult:
    """U A V = D with U, V invertible mod p^N and D = diag(p^{e_1}, ...)."""

    U: Mat
    D: Mat
    V: Mat
    elementary_divisor_exponents: tuple[int, ...]

    @property
    def exponents(self):
        return self.elementary_divisor_exponents


def smith_normal_form(a: Mat) -> NormalFormResult:
    """Valuation-pivot elimination over the local ring.

    The pivot at each step is an entry of minimal valuation in the
    remaining block (ties: lowest (row, col)); the pivot row is scaled by
    the inverse of the pivot's unit part, after which every elimination
    quotient is an exact division by p^e.  Exponents are nondecreasing by
    the minimality of the pivot.
    """
    n, m, nprec = a.rows, a.cols, a.ctx.N
    d = [list(r) for r in a.entries]
    u = [list(r) for r in Mat.identity(a.ctx, n, a.kind).entries]
    v = [list(r) for r in Mat.identity(a.ctx, m, a.kind).entries]
    t = min(n, m)
    exps: list[int] = []
    for k in range(t):
        bi = bj = -1
        bv = nprec
        for i in range(k, n):
            for j in range(k, m):
                val = d[i][j].valuation()
                if val < bv:
                    bi, bj, bv = i, j, val
                    if val == 0:
                        break
            if bv == 0:
                break
        if bv >= nprec:
            exps.extend([nprec] * (t - k))
            break
        if bi != k:
            d[bi], d[k] = d[k], d[bi]
            u[bi], u[k] = u[k], u[bi]
        if bj != k:
            for row in d:
                row[bj], row[k] = row[k], row[bj]
            for row in v:
                row[bj], row[k] = row[k], row[bj]
        e = bv
        w = d[k][k].shift_down(e).inverse()
        d[k] = [w * x for x in d[k]]
        u[k] = [w * x for x in u[k]]
        for i in range(k + 1, n):
            if d[i][k].is_zero:
                continue
            q = d[i][k].shift_down(e)
            d[i] = [x - q * y for x, y in zip(d[i], d[k])]
            u[i] = [x - q * y for x, y in zip(u[i], u[k])]
        for j in range(k + 1, m):
            if d[k][j].is_zero:
                continue
            q = d[k][j].shift_down(e)
            for i in range(n):
                d[i][j] = d[i][j] - q * d[i][k]
            for i in range(m):
                v[i][j] = v[i][j] - q * v[i][k]
        exps.append(e)
    return NormalFormResult(
        U=Mat(a.ctx, a.kind, n, n, tuple(tuple(r) for r in u)),
        D=Mat(a.ctx, a.kind, n, m, tuple(tuple(r) for r in d)),
        V=Mat(a.ctx, a.kind, m, m, tuple(tuple(r) for r in v)),
        elementary_divisor_exponents=tuple(exps))


def invert_unimodular(m: Mat) -> Mat:
    if m.rows != m.cols:
        raise ShapeMismatch("only square matrices invert")
    nf = smith_normal_form(m)
    if any(e != 0 for e in nf.exponents):
        raise NotAUnit("matrix is not invertible mod p^N")
    return nf.V @ nf.U


def det_exact(m: Mat):
    """Determinant by cofactor expansion; desk-scale sizes only."""
    if m.rows != m.cols:
        raise ShapeMismatch("determinant of a non-square matrix")
    n = m.rows
    if n > 7:
        raise ShapeMismatch("det_exact is for desk-scale matrices")
    one = _scalar_one(m.ctx, m.kind)
    if n == 0:
        return one

    def rec(rows, cols):
        if len(cols) == 1:
            return m.entries[rows[0]][cols[0]]
        acc = None
        for idx, c in enumerate(cols):
            x = m.entries[rows[0]][c]
            if x.is_zero:
                continue
            sub = rec(rows[1:], cols[:idx] + cols[idx + 1:])
            term = x * sub
            if idx % 2 == 1:
                term = -term
            acc = term if acc is None else acc + term
        return acc if acc is not None else _scalar_zero(m.ctx, m.kind)

    return rec(tuple(range(n)), tuple(range(n)))


# ---------------------------------------------------------------------------
# kernels, cokernels, solving


@dataclass(frozen=True)
class ZpModuleStructure:
    """Finitely generated module structure: sum of R/p^{e_i} summands.

    Exponent N is "free at this precision"; generators are unimodular
    direction vectors in the ambient coordinates (columns of the stored
    matrix), so they are independent mod p.  For a submodule
    (kind="kernel") the summand generated by direction g with exponent
    e < N is Z . (p^{N-e} g); for quotients the class of g has order p^e.
    """

    ctx: PadicContext
    kind: str
    ambient_dim: int
    exponents: tuple[int, ...]
    generators: Mat

    @property
    def free_rank(self) -> int:
        return sum(1 for e in self.exponents if e >= self.ctx.N)

    @property
    def torsion_exponents(self) -> tuple[int, ...]:
        return tuple(e for e in self.exponents if e < self.ctx.N)

    def cardinality_exponent(self) -> int:
        """log_p of the cardinality, reading exponent N as p^N (finite view)."""
        return sum(self.exponents)

    def is_trivial(self) -> bool:
        return not self.exponents

    def subgroup_generators(self) -> Mat:
        """Actual element generators; only meaningful for kind='kernel'."""
        cols = []
        for idx, e in enumerate(self.exponents):
            g = self.generators.col(idx)
            k = self.ctx.N - e
            cols.append([x.times_p_power(k) for x in g] if k > 0 else list(g))
        if not cols:
            return Mat.zero(self.ctx, self.ambient_dim, 0, self.generators.kind)
        return Mat.from_rows(self.ctx, list(map(list, zip(*cols))),
                             self.generators.kind)


def kernel(a: Mat) -> ZpModuleStructure:
    """Literal kernel of a on (Z/p^N)^cols -> (Z/p^N)^rows.

    Reads off the normal form: a diagonal divisor p^e contributes a cyclic
    summand of order p^e in direction V_col, and columns beyond the
    diagonal are free.
    """
    nf = smith_normal_form(a)
    nprec = a.ctx.N
    t = min(a.rows, a.cols)
    exps, dirs = [], []
    for i, e in enumerate(nf.exponents):
        if e > 0:
            exps.append(e)
            dirs.append(nf.V.col(i))
    for j in range(t, a.cols):
        exps.append(nprec)
        dirs.append(nf.V.col(j))
    gen = (Mat.from_rows(a.ctx, list(map(list, zip(*dirs))), a.kind)
           if dirs else Mat.zero(a.ctx, a.cols, 0, a.kind))
    return ZpModuleStructure(a.ctx, "kernel", a.cols, tuple(exps), gen)


def cokernel(a: Mat) -> ZpModuleStructure:
    """Literal cokernel (Z/p^N)^rows / im(a); generators are classes of
    columns of U^{-1}."""
    nf = smith_normal_form(a)
    nprec = a.ctx.N
    uinv = invert_unimodular(nf.U)
    t = min(a.rows, a.cols)
    exps, dirs = [], []
    for i, e in enumerate(nf.exponents):
        if e > 0:
            exps.append(e)
            dirs.append(uinv.col(i))
    for i in range(t, a.rows):
        exps.append(nprec)
        dirs.append(uinv.col(i))
    gen = (Mat.from_rows(a.ctx, list(map(list, zip(*dirs))), a.kind)
           if dirs else Mat.zero(a.ctx, a.rows, 0, a.kind))
    return ZpModuleStructure(a.ctx, "cokernel", a.rows, tuple(exps), gen)


def finite_kernel_generators(a: Mat) -> Mat:
    """Generators of the literal kernel subgroup (p^{N-e} scaled directions)."""
    return kernel(a).subgroup_generators()


def solve_mod(a: Mat, b: Mat) -> Mat | None:
    """One solution X of A X = B mod p^N, or None."""
    nf = smith_normal_form(a)
    y = nf.U @ b
    nprec = a.ctx.N
    t = min(a.rows, a.cols)
    xt_rows = []
    for i in range(t):
        e = nf.exponents[i]
        row = []
        for j in range(b.cols):
            if y.entries[i][j].valuation() < e:
                return None
            row.append(y.entries[i][j].shift_down(min(e, nprec))
                       if e < nprec else _scalar_zero(a.ctx, a.kind))
        xt_rows.append(row)
    for i in range(t, a.rows):
        if any(not y.entries[i][j].is_zero for j in range(b.cols)):
            return None
    zero = _scalar_zero(a.ctx, a.kind)
    for i in range(t, a.cols):
        xt_rows.append([zero] * b.cols)
    xt = Mat.from_rows(a.ctx, xt_rows, a.kind) if a.cols else \
        Mat.zero(a.ctx, 0, b.cols, a.kind)
    return nf.V @ xt


def _window_check(e: int, nprec: int, margin: int, what: str):
    if nprec - margin <= e < nprec:
        raise InsufficientPrecision(
            f"{what} p^{e} is within {margin} digits of the precision {nprec}")


def true_solve(a: Mat, b: Mat, margin: int = DEFAULT_MARGIN) -> Mat | None:
    """One solution of A X = B over the integral ring (Z_p / O_K semantics).

    Divisor exponents below N - margin are exact; exponent N is read as a
    true zero.  A right-hand side entry that should vanish but only
    vanishes to within the margin window raises InsufficientPrecision.
    """
    nf = smith_normal_form(a)
    y = nf.U @ b
    nprec = a.ctx.N
    t = min(a.rows, a.cols)
    zero = _scalar_zero(a.ctx, a.kind)

    def must_be_zero(x):
        val = x.valuation()
        if val >= nprec:
            return True
        if val >= nprec - margin:
            raise InsufficientPrecision(
                "residual valuation inside the margin window")
        return False

    xt_rows = []
    for i in range(t):
        e = nf.exponents[i]
        row = []
        if e >= nprec:
            for j in range(b.cols):
                if not must_be_zero(y.entries[i][j]):
                    return None
                row.append(zero)
        else:
            _window_check(e, nprec, margin, "divisor")
            for j in range(b.cols):
                if y.entries[i][j].valuation() < e:
                    return None
                row.append(y.entries[i][j].shift_down(e))
        xt_rows.append(row)
    for i in range(t, a.rows):
        for j in range(b.cols):
            if not must_be_zero(y.entries[i][j]):
                return None
    for i in range(t, a.cols):
        xt_rows.append([zero] * b.cols)
    xt = Mat.from_rows(a.ctx, xt_rows, a.kind) if a.cols else \
        Mat.zero(a.ctx, 0, b.cols, a.kind)
    return nf.V @ xt


def true_kernel_basis(a: Mat, margin: int = DEFAULT_MARGIN) -> Mat:
    """Basis of the kernel over the integral ring (a free module).

    Only true-zero divisors (exponent N) and columns beyond the diagonal
    contribute; divisors inside the margin window refuse.
    """
    nf = smith_normal_form(a)
    nprec = a.ctx.N
    t = min(a.rows, a.cols)
    cols = []
    for i, e in enumerate(nf.exponents):
        if e >= nprec:
            cols.append(nf.V.col(i))
        else:
            _window_check(e, nprec, margin, "divisor")
    for j in range(t, a.cols):
        cols.append(nf.V.col(j))
    if not cols:
        return Mat.zero(a.ctx, a.cols, 0, a.kind)
    return Mat.from_rows(a.ctx, list(map(list, zip(*cols))), a.kind)


# ---------------------------------------------------------------------------
# subquotients


@dataclass
class Subquotient:
    """Presentation of (span(W) + span(L)) / span(L) inside ctx^n.

    finite=True computes in the literal finite ring; otherwise integral
    semantics with the given margin apply.  Generators are stored as
    unimodular ambient directions paired with divisor exponents; the
    coordinate map expresses any ambient element of span(W) + span(L) in
    the presentation, well defined mod p^{e_i} in each coordinate.
    """

    W: Mat
    L: Mat
    margin: int = DEFAULT_MARGIN
    finite: bool = False
    exponents: tuple[int, ...] = field(init=False)
    generators: Mat = field(init=False)
    _coord_rows: Mat = field(init=False)
    _full_exponents: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        W, L = self.W, self.L
        if W.rows != L.rows:
            raise ShapeMismatch("W and L live in different ambients")
        ctx, kind, nprec = W.ctx, W.kind, W.ctx.N
        stacked = hstack(W, L)
        if self.finite:
            pairs = finite_kernel_generators(stacked)
        else:
            pairs = true_kernel_basis(stacked, self.margin)
        syz = Mat(ctx, kind, W.cols, pairs.cols,
                  tuple(pairs.entries[i] for i in range(W.cols)))
        nf = smith_normal_form(syz)
        t = min(syz.rows, syz.cols)
        padded = list(nf.exponents) + [nprec] * (syz.rows - t)
        if not self.finite:
            for e in padded:
                if e < nprec:
                    _window_check(e, nprec, self.margin, "divisor")
        uinv = invert_unimodular(nf.U)
        kept = [i for i, e in enumerate(padded) if e > 0]
        self._full_exponents = tuple(padded)
        self.exponents = tuple(padded[i] for i in kept)
        self._coord_rows = Mat(ctx, kind, len(kept), syz.rows,
                               tuple(nf.U.entries[i] for i in kept)) \
            if kept else Mat.zero(ctx, 0, syz.rows, kind)
        if kept:
            cols = [uinv.col(i) for i in kept]
            dirs = Mat.from_rows(ctx, list(map(list, zip(*cols))), kind)
            self.generators = W @ dirs if W.cols else \
                Mat.zero(ctx, W.rows, len(kept), kind)
        else:
            self.generators = Mat.zero(ctx, W.rows, 0, kind)

    @property
    def ctx(self):
        return self.W.ctx

    @property
    def free_rank(self):
        return sum(1 for e in self.exponents if e >= self.ctx.N)

    @property
    def torsion_exponents(self):
        return tuple(e for e in self.exponents if e < self.ctx.N)

    def structure(self, kind="subquotient") -> ZpModuleStructure:
        return ZpModuleStructure(self.ctx, kind, self.W.rows,
                                 self.exponents, self.generators)

    def coords_of(self, x: Mat) -> Mat | None:
        """Coordinates of an ambient column in the presentation, or None.

        Coordinate i is well defined mod p^{exponents[i]}.
        """
        if self.W.cols == 0:
            sol = (solve_mod(self.L, x) if self.finite
                   else true_solve(self.L, x, self.margin))
            if sol is None:
                return None
            return Mat.zero(self.ctx, 0, x.cols, self.W.kind)
        stacked = hstack(self.W, self.L)
        sol = (solve_mod(stacked, x) if self.finite
               else true_solve(stacked, x, self.margin))
        if sol is None:
            return None
        u = Mat(self.ctx, self.W.kind, self.W.cols, x.cols,
                tuple(sol.entries[i] for i in range(self.W.cols)))
        return self._coord_rows @ u

    def contains(self, x: Mat) -> bool:
        return self.coords_of(x) is not None

    def is_zero_class(self, x: Mat) -> bool:
        """Whether an ambient column lies in span(L) (the zero class)."""
        sol = (solve_mod(self.L, x) if self.finite
               else true_solve(self.L, x, self.margin))
        return sol is not None

    def presentation_relations(self) -> Mat:
        """Diagonal relation matrix p^{e_i} on the presentation coordinates.

        Coordinates with exponent N carry no relation: over the integers
        they are free, and mod p^N the relation p^N is the zero column.
        """
        ctx, kind = self.ctx, self.W.kind
        k = len(self.exponents)
        cols = []
        for i, e in enumerate(self.exponents):
            if e < ctx.N:
                col = [_scalar_zero(ctx, kind)] * k
                col[i] = _scalar_one(ctx, kind).times_p_power(e)
                cols.append(col)
        if not cols:
            return Mat.zero(ctx, k, 0, kind)
        return Mat.from_rows(ctx, list(map(list, zip(*cols))), kind)


# ---------------------------------------------------------------------------
# restriction of scalars, lattice index


def restrict_scalars(lmap: SemilinearMap, ctx: PadicContext) -> Mat:
    """The (f rank)-dimensional Z/p^N matrix of x |-> A sigma^s(x).

    Basis ordering is coordinate-major: w^j e_k sits at index k*f + j.
    Composition-compatible: restrict(L1 o L2) = restrict(L1) restrict(L2).
    """
    a = lmap.matrix
    if a.ctx != ctx:
        raise ContextMismatch("map context differs from the requested context")
    f = ctx.f
    omega_pows = [ctx.one_u()]
    for _ in range(f - 1):
        omega_pows.append(omega_pows[-1] * ctx.omega())
    sig_img = [frobenius(w, lmap.twist) for w in omega_pows]
    out_rows = [[None] * (a.cols * f) for _ in range(a.rows * f)]
    for k in range(a.cols):
        for j in range(f):
            col_idx = k * f + j
            for i in range(a.rows):
                val = a.entries[i][k] * sig_img[j]
                for l in range(f):
                    out_rows[i * f + l][col_idx] = PadicScalar(ctx, val.coeffs[l])
    if a.rows == 0 or a.cols == 0:
        return Mat.zero(ctx, a.rows * f, a.cols * f, "zp")
    return Mat.from_rows(ctx, out_rows, "zp")


def relative_index(b1: KMat, b2: KMat, margin: int = DEFAULT_MARGIN) -> int:
    """v_p(det T) where B2 = B1 T; the bases must span the same space.

    Sign convention: relative_index(L, pL) = dim, so a measure normalised
    by mu(L1) = 1 gives mu(L2) = p^{-relative_index(L1, L2)}.
    """
    if b1.cols != b2.cols:
        raise SpanMismatch("bases have different cardinalities")
    d = b1.cols
    if d == 0:
        return 0
    if b1.rows != b2.rows:
        raise SpanMismatch("bases live in different ambient spaces")
    a_mat, c_mat = b1.mat, b2.mat
    nprec = a_mat.ctx.N
    nf = smith_normal_form(a_mat)
    exps = nf.exponents
    if len(exps) < d or any(e >= nprec for e in exps):
        raise SpanMismatch("the first family is not a basis at this precision")
    for e in exps:
        _window_check(e, nprec, margin, "divisor")
    y = nf.U @ c_mat
    for i in range(d, a_mat.rows):
        for j in range(d):
            val = y.entries[i][j].valuation()
            if val >= nprec:
                continue
            if val >= nprec - margin:
                raise InsufficientPrecision(
                    "span residual inside the margin window")
            raise SpanMismatch("second basis leaves the span of the first")
    smax = max(exps)
    scaled_rows = [
        [y.entries[i][j].times_p_power(smax - exps[i]) for j in range(d)]
        for i in range(d)]
    s_int = nf.V @ Mat.from_rows(a_mat.ctx, scaled_rows, a_mat.kind)
    vdet = det_exact(s_int).valuation()
    if vdet >= nprec:
        raise SpanMismatch("change of basis is singular at this precision")
    if vdet >= nprec - margin:
        raise InsufficientPrecision("det valuation inside the margin window")
    return d * (b1.shift - b2.shift) - d * smax + vdet
