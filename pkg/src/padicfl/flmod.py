"""Fontaine-Laffaille modules and filtered phi-modules at finite precision.

An ``FLModule`` is a finitely presented O_K-module
M = (+) O_K / p^{d_j}  (divisor exponent N meaning "free at precision N")
with a decreasing filtration given by generator matrices at listed jumps
and a single sigma-semilinear matrix ``phi_low`` for the divided Frobenius
at the lowest jump a.  The higher divided Frobenii are recovered by exact
division, phi^i = p^{a-i} phi^a restricted to M^i; storing one matrix
makes an inconsistent family unrepresentable, and the division being exact
is precisely the compatibility law, which ``validate`` checks.

Filtration convention: the listed pairs (jump, generators) have strictly
increasing jumps and strictly decreasing spans; the step at any index j is
the value at the smallest listed jump >= j, the full module below the
lowest jump and zero above the highest.

A ``FilteredPhiModule`` is the isocrystal-side object: a K-vector space of
finite rank with filtration bases and an invertible semilinear phi whose
matrix may carry denominators (a KMat).  Torsion-free FLModules convert to
it by inverting p.

Cohomology H^0 / H^1 of 1 - phi^0 : M^0 -> M is computed through
restriction of scalars to Z/p^N followed by normal-form bookkeeping.  By
default the answers are reported for the integral (Z_p-semantic) objects,
with the precision margin refusing any divisor too close to N; passing
``finite=True`` instead computes the literal finite kernel and cokernel
mod p^N, which is what exhaustive enumeration oracles compare against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ContextMismatch,
    InsufficientPrecision,
    LiftFailure,
    NotExact,
    PrecisionLoss,
    ShapeMismatch,
    SingularPhi,
)
from .linalg import (
    DEFAULT_MARGIN,
    KMat,
    Mat,
    SemilinearMap,
    Subquotient,
    ZpModuleStructure,
    det_exact,
    finite_kernel_generators,
    hstack,
    invert_unimodular,
    mat_frobenius,
    reduce_mat,
    restrict_scalars,
    smith_normal_form,
    solve_mod,
    true_kernel_basis,
    true_solve,
)
from .padic import PadicContext, UnramifiedScalar, frobenius, make_context

__all__ = [
    "FLModule",
    "FilteredPhiModule",
    "FLMorphism",
    "ValidationReport",
    "Violation",
    "AdmissibilityResult",
    "DeltaReport",
    "validate",
    "validate_morphism",
    "to_filtered_phi_module",
    "linearized_frobenius",
    "phi_image_at_level",
    "hodge_number",
    "newton_number",
    "is_admissible",
    "is_strongly_divisible",
    "lattice_strong_divisibility",
    "saturation_basis",
    "h0",
    "h1",
    "cohomology",
    "kernel_flmod",
    "cokernel_flmod",
    "kernel_with_inclusion",
    "cokernel_with_projection",
    "connecting_delta",
    "direct_sum",
    "tate_twist",
    "base_change",
    "unramified_line",
    "tate_type_line",
    "flmodule_from_json",
    "flmodule_to_json",
]


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class FLModule:
    """Finitely presented filtered module with divided Frobenii.

    divisors: elementary divisor exponents of the underlying module, one
    per ambient coordinate, each in [1, N] with N meaning free.
    filtration: ((jump, generator matrix), ...) with increasing jumps.
    phi_low: matrix of phi^a on the ambient generators (semilinear, twist 1),
    where a is the lowest listed jump.
    """

    ctx: PadicContext
    divisors: tuple[int, ...]
    filtration: tuple
    phi_low: Mat

    @property
    def rank(self) -> int:
        return len(self.divisors)

    @property
    def lowest_jump(self) -> int:
        return self.filtration[0][0]

    @property
    def highest_jump(self) -> int:
        return self.filtration[-1][0]

    @property
    def is_torsion_free(self) -> bool:
        return all(d >= self.ctx.N for d in self.divisors)

    def effective_precision(self) -> int:
        return self.ctx.N - (self.highest_jump - self.lowest_jump)

    def relations(self) -> Mat:
        """Columns p^{d_j} e_j for the torsion coordinates (d_j < N)."""
        cols = []
        for j, d in enumerate(self.divisors):
            if d < self.ctx.N:
                col = [self.ctx.zero_u()] * self.rank
                col[j] = self.ctx.one_u().times_p_power(d)
                cols.append(col)
        if not cols:
            return Mat.zero(self.ctx, self.rank, 0, "ok")
        return Mat.from_rows(self.ctx, list(map(list, zip(*cols))), "ok")

    def relations_z(self) -> Mat:
        """The same relations after restriction of scalars to Z/p^N."""
        f = self.ctx.f
        cols = []
        for j, d in enumerate(self.divisors):
            if d < self.ctx.N:
                for l in range(f):
                    col = [self.ctx.zero()] * (self.rank * f)
                    col[j * f + l] = self.ctx.one().times_p_power(d)
                    cols.append(col)
        if not cols:
            return Mat.zero(self.ctx, self.rank * f, 0, "zp")
        return Mat.from_rows(self.ctx, list(map(list, zip(*cols))), "zp")

    def filtration_at(self, i: int) -> Mat:
        """Generators of M^i under the step convention."""
        for jump, gens in self.filtration:
            if jump >= i:
                return gens
        return Mat.zero(self.ctx, self.rank, 0, "ok")


@dataclass(frozen=True)
class FilteredPhiModule:
    """K-vector space with filtration bases and invertible semilinear phi."""

    ctx: PadicContext
    rank: int
    phi: KMat
    filtration: tuple  # ((jump, KMat basis), ...) increasing jumps

    def filtration_at(self, i: int) -> KMat:
        for jump, basis in self.filtration:
            if jump >= i:
                return basis
        return KMat(Mat.zero(self.ctx, self.rank, 0, "ok"), 0)


@dataclass(frozen=True)
class FLMorphism:
    """O_K-linear map compatible with filtrations and Frobenii."""

    source: FLModule
    target: FLModule
    matrix: Mat


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    witness: object = None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    @property
    def first(self):
        return self.violations[0] if self.violations else None


@dataclass(frozen=True)
class AdmissibilityResult:
    verdict: str  # "admissible" | "not_admissible" | "incomplete"
    hodge: int
    newton: int
    witness: object = None

    @property
    def is_admissible(self):
        return self.verdict == "admissible"


# ---------------------------------------------------------------------------
# span helpers inside a presented module


def _member(span: Mat, rel: Mat, x: Mat, margin, finite) -> Mat | None:
    """Solve [span | rel] (u, z) = x and return u, or None."""
    stacked = hstack(span, rel) if span.cols or rel.cols else span
    sol = solve_mod(stacked, x) if finite else true_solve(stacked, x, margin)
    if sol is None:
        return None
    return Mat(span.ctx, span.kind, span.cols, x.cols,
               tuple(sol.entries[i] for i in range(span.cols)))


def _span_leq(a: Mat, b: Mat, rel: Mat, margin, finite=False) -> bool:
    """span(a) contained in span(b) + span(rel)."""
    if a.cols == 0:
        return True
    return _member(b, rel, a, margin, finite) is not None


def _span_eq(a: Mat, b: Mat, rel: Mat, margin, finite=False) -> bool:
    return _span_leq(a, b, rel, margin, finite) and _span_leq(b, a, rel, margin, finite)


def _is_zero_span(gens: Mat, rel: Mat, margin, finite=False) -> bool:
    return _span_leq(gens, Mat.zero(gens.ctx, gens.rows, 0, gens.kind),
                     rel, margin, finite)


# ---------------------------------------------------------------------------
# divided Frobenius


def _phi_a_image(m: FLModule, vectors: Mat) -> Mat:
    """phi^a applied to columns (semilinear: A . sigma(x))."""
    return m.phi_low @ mat_frobenius(vectors, 1)


def _divide_in_module(m: FLModule, x: Mat, k: int, margin, finite=False) -> Mat | None:
    """Solve p^k y = x inside M (modulo the relations); None if impossible.

    The result is well defined modulo p^{N-k} plus the relation ambiguity;
    callers account for that through the module's effective precision.  On
    a coordinate of torsion exponent d <= k the quotient carries no
    information at all (p^k annihilates the whole coordinate), so the
    single-matrix storage of the Frobenius family cannot represent such a
    module and the division refuses rather than inventing a value.
    """
    if k == 0 or x.cols == 0:
        return x
    nprec = m.ctx.N
    for d in m.divisors:
        if min(d, nprec) <= k:
            raise PrecisionLoss(
                f"division by p^{k} is undetermined on a p^{min(d, nprec)}-torsion "
                "coordinate")
    pk_id = Mat.identity(m.ctx, m.rank, "ok").times_p_power(k)
    return _member(pk_id, m.relations(), x, margin, finite)


def phi_image_at_level(m: FLModule, i: int, gens: Mat,
                       margin=DEFAULT_MARGIN, finite=False) -> Mat:
    """phi^i = p^{a-i} phi^a on columns of gens, which must lie in M^i.

    Raises PrecisionLoss when the exact division fails; for validated
    modules with gens inside M^i it cannot.
    """
    raw = _phi_a_image(m, gens)
    a = m.lowest_jump
    if i <= a:
        return raw.times_p_power(a - i)
    out = _divide_in_module(m, raw, i - a, margin, finite)
    if out is None:
        raise PrecisionLoss(
            f"phi^{i} image is not divisible by p^{i - a} in the module")
    return out


# ---------------------------------------------------------------------------
# validation


def validate(m: FLModule, margin: int = DEFAULT_MARGIN) -> ValidationReport:
    """Check every FLModule invariant; report violations with witnesses.

    Returns (never raises for mathematical violations): divisor range,
    well-definedness of phi on the presentation, filtration chain with
    strictly decreasing listed steps, exhaustiveness of the lowest step,
    divided-Frobenius divisibility at every listed jump, and the
    effective-precision margin.
    """
    v: list[Violation] = []
    nprec = m.ctx.N
    if m.rank != len(m.divisors):
        v.append(Violation("shape", "divisor count does not match rank"))
    for d in m.divisors:
        if not 1 <= d <= nprec:
            v.append(Violation("divisors", f"divisor exponent {d} outside [1, N]"))
    if m.phi_low.rows != m.rank or m.phi_low.cols != m.rank:
        v.append(Violation("shape", "phi_low is not rank x rank"))
        return ValidationReport(False, tuple(v))
    if not m.filtration:
        v.append(Violation("filtration", "empty filtration"))
        return ValidationReport(False, tuple(v))
    # phi well defined on the presentation
    for j, d in enumerate(m.divisors):
        if d >= nprec:
            continue
        for i in range(m.rank):
            need = min(m.divisors[i], nprec)
            if m.phi_low.entries[i][j].valuation() + d < need:
                v.append(Violation(
                    "phi_presentation",
                    f"phi^a(p^{d} e_{j}) is nonzero in coordinate {i}",
                    witness=(i, j)))
    jumps = [j for j, _ in m.filtration]
    if any(j2 <= j1 for j1, j2 in zip(jumps, jumps[1:])):
        v.append(Violation("filtration", "jumps must strictly increase"))
        return ValidationReport(False, tuple(v))
    rel = m.relations()
    ident = Mat.identity(m.ctx, m.rank, "ok")
    try:
        first_gens = m.filtration[0][1]
        if not _span_leq(ident, first_gens, rel, margin):
            v.append(Violation(
                "filtration", "lowest step does not span the module",
                witness=jumps[0]))
        for (j1, g1), (j2, g2) in zip(m.filtration, m.filtration[1:]):
            if not _span_leq(g2, g1, rel, margin):
                v.append(Violation(
                    "chain", f"step at jump {j2} is not contained in step at {j1}",
                    witness=j2))
            elif _span_leq(g1, g2, rel, margin):
                v.append(Violation(
                    "chain",
                    f"steps at jumps {j1} and {j2} coincide; listed steps must "
                    "strictly decrease (a repeated value contradicts the "
                    "declared jump positions)",
                    witness=j2))
        a = m.lowest_jump
        for i, gens in m.filtration:
            if i <= a or gens.cols == 0:
                continue
            raw = _phi_a_image(m, gens)
            div = _divide_in_module(m, raw, i - a, margin)
            if div is None:
                v.append(Violation(
                    "divided_frobenius",
                    f"phi^a of the step at jump {i} is not divisible by p^{i - a}",
                    witness=i))
    except InsufficientPrecision as exc:
        v.append(Violation("precision", str(exc)))
    except PrecisionLoss as exc:
        v.append(Violation("precision", str(exc)))
    if m.effective_precision() < margin:
        v.append(Violation(
            "precision",
            f"effective precision {m.effective_precision()} below margin {margin}"))
    return ValidationReport(not v, tuple(v))


def validate_morphism(f: FLMorphism, margin: int = DEFAULT_MARGIN) -> ValidationReport:
    """Morphism invariants: well defined, filtered, Frobenius-equivariant."""
    v: list[Violation] = []
    src, tgt = f.source, f.target
    if f.matrix.rows != tgt.rank or f.matrix.cols != src.rank:
        return ValidationReport(False, (Violation("shape", "matrix shape mismatch"),))
    nprec = src.ctx.N
    for j, d in enumerate(src.divisors):
        if d >= nprec:
            continue
        for i in range(tgt.rank):
            need = min(tgt.divisors[i], nprec)
            if f.matrix.entries[i][j].valuation() + d < need:
                v.append(Violation(
                    "well_defined", f"f(p^{d} e_{j}) nonzero in coordinate {i}",
                    witness=(i, j)))
    rel_t = tgt.relations()
    all_jumps = sorted({j for j, _ in src.filtration} | {j for j, _ in tgt.filtration})
    for i in all_jumps:
        gi = src.filtration_at(i)
        if gi.cols == 0:
            continue
        img = f.matrix @ gi
        if not _span_leq(img, tgt.filtration_at(i), rel_t, margin):
            v.append(Violation(
                "filtration", f"f(M^{i}) is not contained in N^{i}", witness=i))
    i0 = min(src.lowest_jump, tgt.lowest_jump)
    lhs = f.matrix @ _phi_a_image(src, Mat.identity(src.ctx, src.rank, "ok")) \
        .times_p_power(src.lowest_jump - i0)
    rhs = (tgt.phi_low @ mat_frobenius(f.matrix, 1)).times_p_power(tgt.lowest_jump - i0)
    if not _is_zero_span(lhs - rhs, rel_t, margin):
        v.append(Violation("frobenius", "f does not commute with the divided Frobenii"))
    return ValidationReport(not v, tuple(v))


# ---------------------------------------------------------------------------
# isocrystal side: Hodge and Newton numbers, admissibility


def to_filtered_phi_module(m: FLModule) -> FilteredPhiModule:
    """Invert p on a torsion-free module: same bases, phi = p^a phi^a."""
    if not m.is_torsion_free:
        raise ShapeMismatch("only torsion-free modules define a phi-module over K")
    a = m.lowest_jump
    phi = KMat(m.phi_low, 0).scale_p_power(a)
    filt = tuple((j, KMat(g, 0)) for j, g in m.filtration)
    return FilteredPhiModule(m.ctx, m.rank, phi, filt)


def _k_rank(basis: KMat, margin) -> int:
    """Dimension of the K-span of the columns."""
    nf = smith_normal_form(basis.mat)
    nprec = basis.ctx.N
    rank = 0
    for e in nf.exponents:
        if e >= nprec:
            continue
        if e >= nprec - margin:
            raise InsufficientPrecision("rank divisor inside the margin window")
        rank += 1
    return rank


def _in_k_span(basis: KMat, vec: KMat, margin, cap: int | None = None) -> bool:
    """Membership of a column in the K-span (denominators allowed).

    cap is the effective precision of the vector (defaults to N); residual
    valuations at or above it count as zero, inside [cap - margin, cap)
    refuse, below certify non-membership.
    """
    if basis.cols == 0:
        return _k_vec_is_zero(vec, margin, cap)
    nf = smith_normal_form(basis.mat)
    nprec = basis.ctx.N if cap is None else cap
    y = nf.U @ vec.mat
    t = min(basis.mat.rows, basis.mat.cols)
    for i in range(basis.mat.rows):
        if i < t and nf.exponents[i] < nprec:
            continue
        val = y.entries[i][0].valuation()
        if val >= nprec:
            continue
        if val >= nprec - margin:
            raise InsufficientPrecision("span residual inside the margin window")
        return False
    return True


def _k_vec_is_zero(vec: KMat, margin, cap: int | None = None) -> bool:
    nprec = vec.ctx.N if cap is None else cap
    val = vec.mat.min_valuation()
    if val >= nprec:
        return True
    if val >= nprec - margin:
        raise InsufficientPrecision("vector is zero only within the margin window")
    return False


def hodge_number(d: FilteredPhiModule, margin: int = DEFAULT_MARGIN) -> int:
    """t_H = sum over i of i * dim gr^i, from the listed step dimensions."""
    dims = [_k_rank(b, margin) for _, b in d.filtration]
    if dims and dims[0] != d.rank:
        raise ShapeMismatch("lowest filtration step must be the whole space")
    total = 0
    for idx, (jump, _) in enumerate(d.filtration):
        nxt = dims[idx + 1] if idx + 1 < len(dims) else 0
        total += jump * (dims[idx] - nxt)
    return total


def newton_number(d: FilteredPhiModule, margin: int = DEFAULT_MARGIN) -> int:
    """t_N = v_p(det of the phi matrix); sigma preserves valuation so the
    basis choice does not matter."""
    det = det_exact(d.phi.mat)
    val = det.valuation()
    nprec = d.ctx.N
    if val >= nprec:
        raise SingularPhi("phi matrix has determinant 0 at this precision")
    if val >= nprec - margin:
        raise InsufficientPrecision("det valuation inside the margin window")
    return val - d.rank * d.phi.shift


def linearized_frobenius(d: FilteredPhiModule) -> KMat:
    """The K-linear map phi^f: matrix A sigma(A) ... sigma^{f-1}(A)."""
    f = d.ctx.f
    acc = d.phi
    cur = d.phi
    for s in range(1, f):
        cur = cur.frobenius(1)
        acc = KMat(acc.mat @ cur.mat, acc.shift + cur.shift)
    return acc


def _char_poly_points(b: KMat, margin):
    """Valuations v(a_j) of det(X - B) = sum a_j X^j; a_r = 1.

    Coefficients are signed sums of principal minors of B; only the
    valuations enter the Newton polygon.
    """
    r = b.rows
    vals = {r: 0}
    nprec = b.ctx.N
    for k in range(1, r + 1):
        acc = None
        for subset in itertools.combinations(range(r), k):
            sub = Mat.from_rows(
                b.ctx, [[b.mat.entries[i][j] for j in subset] for i in subset], "ok")
            minor = det_exact(sub)
            acc = minor if acc is None else acc + minor
        val = acc.valuation()
        vals[r - k] = None if val >= nprec else val - k * b.shift
    return vals


def _newton_root_valuations(vals: dict, r: int) -> list[Fraction]:
    """Root valuations (ascending) from the lower hull of (j, v(a_j)).

    Points with unknown valuation (None: coefficient 0 at precision) are
    skipped; they lie above the hull for desk-scale inputs.
    """
    pts = [(j, v) for j, v in sorted(vals.items()) if v is not None]
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    out: list[Fraction] = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y2 - y1, x2 - x1)
        out.extend([-slope] * (x2 - x1))
    return sorted(out)


def _hodge_slopes(d: FilteredPhiModule, margin) -> list[int]:
    dims = [_k_rank(b, margin) for _, b in d.filtration]
    out = []
    for idx, (jump, _) in enumerate(d.filtration):
        nxt = dims[idx + 1] if idx + 1 < len(dims) else 0
        out.extend([jump] * (dims[idx] - nxt))
    return sorted(out)


def _newton_above_hodge(newton: list[Fraction], hodge: list[int]) -> bool:
    """Necessary condition: partial sums of the ascending Newton slopes
    dominate those of the Hodge slopes."""
    sn = Fraction(0)
    sh = 0
    for nslope, hslope in zip(newton, hodge):
        sn += nslope
        sh += hslope
        if sn < sh:
            return False
    return True


@dataclass(frozen=True)
class _KS:
    """Scalar over K: p^{-shift} * num with num integral."""

    num: UnramifiedScalar
    shift: int = 0

    def valuation(self):
        return self.num.valuation() - self.shift

    def scale_p(self, k: int) -> "_KS":
        """Multiply the value by p^k."""
        if k >= 0:
            return _KS(self.num.times_p_power(k), self.shift)
        return _KS(self.num, self.shift - k)

    def integral_part(self) -> UnramifiedScalar:
        """The element as an integral scalar; requires valuation >= 0."""
        if self.shift <= 0:
            return self.num.times_p_power(-self.shift)
        return self.num.shift_down(self.shift)

    def num_at_shift(self, sh: int) -> UnramifiedScalar:
        """Integral numerator when the element is written p^{-sh} * num."""
        if sh >= self.shift:
            return self.num.times_p_power(sh - self.shift)
        return self.num.shift_down(self.shift - sh)


def _hensel_root_quadratic(tau_s, delta_s, y0, nprec):
    """Newton iteration on Y^2 - tau Y + delta from a simple root y0."""
    y = y0
    for _ in range(nprec + 2):
        g = y * y - tau_s * y + delta_s
        if g.is_zero:
            break
        y = y - g * (y + y - tau_s).inverse()
    return y


def _eigenlines_rank2(b: KMat, margin):
    """Stable-line candidates of a 2x2 linearised Frobenius.

    Returns (status, lines) with lines a list of (column, loss) pairs:
    loss counts the p-adic digits the eigenvector construction cannot
    certify (root scaling plus primitivity normalisation), so the vector
    is exact mod p^{N - loss}.  Status "incomplete" flags equal-slope
    repeated factors that cannot be split at this precision.
    """
    ctx = b.ctx
    nprec = ctx.N
    # the eigenlines of p^k B equal those of B: normalise to a primitive
    # integral matrix so the root-finding works at full stored precision
    c = b.mat.min_valuation()
    if c >= nprec - margin:
        raise SingularPhi("linearised Frobenius vanishes at this precision")
    b = KMat(b.mat.shift_down(c), 0)
    base_loss = c  # entries of the normalised matrix are exact mod p^{N-c}
    tau = _KS(b.mat.entries[0][0] + b.mat.entries[1][1], 0)
    delta = _KS(det_exact(b.mat), 0)
    if delta.num.valuation() >= nprec:
        raise SingularPhi("linearised Frobenius is singular at this precision")
    vdelta = delta.valuation()
    vtau = tau.valuation()
    roots: list[tuple[_KS, int]] = []
    if 2 * vtau < vdelta:
        # distinct slopes s1 = v(tau) < s2 = v(delta) - v(tau)
        s1 = vtau
        tau_s = tau.scale_p(-s1).integral_part()
        delta_s = delta.scale_p(-2 * s1).integral_part()
        y = _hensel_root_quadratic(tau_s, delta_s, tau_s, nprec)
        # alpha = p^{s1} y; beta = delta / alpha = p^{s1} (delta_s / y)
        beta_num = delta_s * y.inverse()
        if beta_num.valuation() >= nprec - margin:
            # slope gap eats the whole precision; the second root is lost
            return "incomplete", []
        alpha = _KS(y, 0).scale_p(s1)
        beta = _KS(beta_num, 0).scale_p(s1)
        roots = [(alpha, 0), (beta, 0)]
    else:
        if vdelta % 2 != 0:
            return "ok", []  # half-integral slopes: no eigenvalues in K
        s = vdelta // 2
        if ctx.p == 2:
            return "incomplete", []
        tau_s = tau.scale_p(-s)
        if tau_s.valuation() < 0:
            return "incomplete", []
        tau_i = tau_s.integral_part()
        delta_i = delta.scale_p(-2 * s).integral_part()
        four = ctx.unram_scalar([4] + [0] * (ctx.f - 1))
        disc = tau_i * tau_i - four * delta_i
        if disc.valuation() > 0:
            return "incomplete", []  # roots congruent mod p: unresolvable here
        # unit square test in the residue field, then a Hensel square root
        q = ctx.p**ctx.f
        if disc.pow((q - 1) // 2) != ctx.one_u():
            return "ok", []  # irreducible quadratic: no stable lines
        small = ctx.with_precision(1)
        ybar = None
        for cand_coeffs in itertools.product(range(ctx.p), repeat=ctx.f):
            cand = small.unram_scalar(cand_coeffs)
            if cand * cand == disc.reduce_to(small):
                ybar = cand
                break
        assert ybar is not None
        y = ctx.unram_scalar(ybar.coeffs)
        for _ in range(nprec + 2):
            g = y * y - disc
            if g.is_zero:
                break
            y = y - g * (y + y).inverse()
        inv2 = ctx.unram_scalar([2] + [0] * (ctx.f - 1)).inverse()
        roots = [(_KS((tau_i + y) * inv2, 0).scale_p(s), max(s, 0)),
                 (_KS((tau_i - y) * inv2, 0).scale_p(s), max(s, 0))]
    lines = []
    for lam, lam_loss in roots:
        sh = max(0, lam.shift)
        bmat = b.with_shift(sh).mat if sh else b.mat
        lam_i = lam.num_at_shift(sh)
        cand1 = [bmat.entries[0][1], lam_i - bmat.entries[0][0]]
        cand2 = [lam_i - bmat.entries[1][1], bmat.entries[1][0]]
        v1 = min(x.valuation() for x in cand1)
        v2 = min(x.valuation() for x in cand2)
        use, vmin = (cand1, v1) if v1 <= v2 else (cand2, v2)
        if vmin >= nprec - margin:
            return "incomplete", []  # eigenspace not one-dimensional at precision
        vec = Mat.column([x.shift_down(vmin) for x in use])
        lines.append((KMat(vec, 0), base_loss + lam_loss + vmin))
    return "ok", lines


def is_admissible(d: FilteredPhiModule, margin: int = DEFAULT_MARGIN) -> AdmissibilityResult:
    """Endpoint equality plus the subobject inequality t_H(D') <= t_N(D').

    For rank <= 2 the phi-stable lines are enumerated through the
    characteristic polynomial of the f-fold linearisation (Newton polygon
    slope splitting, Hensel lifting of distinct-slope factors); for rank
    >= 3 or unresolvable repeated factors only the Newton-above-Hodge
    polygon test runs and a passing instance reports "incomplete".
    """
    th = hodge_number(d, margin)
    tn = newton_number(d, margin)
    if th != tn:
        return AdmissibilityResult("not_admissible", th, tn,
                                   witness="endpoint: t_H != t_N")
    if d.rank == 1:
        return AdmissibilityResult("admissible", th, tn)
    b = linearized_frobenius(d)
    vals = _char_poly_points(b, margin)
    newton = [v / d.ctx.f for v in _newton_root_valuations(vals, d.rank)]
    hodge = _hodge_slopes(d, margin)
    if len(newton) == d.rank and not _newton_above_hodge(newton, hodge):
        return AdmissibilityResult("not_admissible", th, tn,
                                   witness="polygon: Newton below Hodge")
    if d.rank > 2:
        return AdmissibilityResult("incomplete", th, tn,
                                   witness="rank > 2: polygon test only")
    status, lines = _eigenlines_rank2(b, margin)
    if status == "incomplete":
        return AdmissibilityResult("incomplete", th, tn,
                                   witness="equal-slope repeated factors")
    for line, loss in lines:
        cap = d.ctx.N - loss
        if cap <= margin:
            return AdmissibilityResult("incomplete", th, tn,
                                       witness="eigenline precision exhausted")
        # phi-stability: phi(v) parallel to v; the wedge numerator carries
        # the shift of phi, so its vanishing is only visible below N - shift
        w = KMat(d.phi.mat @ mat_frobenius(line.mat, 1), d.phi.shift)
        wedge = w.mat.entries[0][0] * line.mat.entries[1][0] \
            - w.mat.entries[1][0] * line.mat.entries[0][0]
        wedge_cap = min(cap, d.ctx.N - max(0, d.phi.shift) - loss)
        if wedge.valuation() < wedge_cap - margin:
            continue  # not phi-stable
        th_line = d.filtration[0][0]
        for jump, basis in d.filtration:
            if _in_k_span(basis, line, margin, cap=cap):
                th_line = jump
        # t_N of the line: valuation of the phi-eigenvalue
        j_unit = 0 if line.mat.entries[0][0].is_unit() else 1
        tn_line = w.mat.entries[j_unit][0].valuation() - w.shift
        if th_line > tn_line:
            return AdmissibilityResult(
                "not_admissible", th, tn,
                witness=("line", [x[0].to_json_obj() for x in line.mat.entries],
                         th_line, tn_line))
    return AdmissibilityResult("admissible", th, tn)


# ---------------------------------------------------------------------------
# strong divisibility


def is_strongly_divisible(m: FLModule, margin: int = DEFAULT_MARGIN) -> bool:
    """Whether the O_K-span of all phi^i(M^i) is the whole module.

    For torsion-free lattices in an admissible phi-module this is
    equivalent to the containment criterion phi(M^i) in p^i M, which a
    validated module satisfies by construction; a mismatch between the two
    computed routes is therefore an internal error, not a result.
    """
    cols = [phi_image_at_level(m, i, gens, margin)
            for i, gens in m.filtration if gens.cols]
    span = hstack(*cols) if cols else Mat.zero(m.ctx, m.rank, 0, "ok")
    full = _span_leq(Mat.identity(m.ctx, m.rank, "ok"), span, m.relations(), margin)
    if m.is_torsion_free:
        adm = is_admissible(to_filtered_phi_module(m), margin)
        if adm.is_admissible and not full:
            raise RuntimeError(
                "internal: containment criterion holds in an admissible module "
                "but the span criterion fails")
    return full


def saturation_basis(basis: KMat, margin: int = DEFAULT_MARGIN) -> Mat:
    """Basis of {x integral: x in K-span(basis)}, the saturated sublattice."""
    nf = smith_normal_form(basis.mat)
    nprec = basis.ctx.N
    uinv = invert_unimodular(nf.U)
    cols = []
    for i, e in enumerate(nf.exponents):
        if e >= nprec:
            continue
        if e >= nprec - margin:
            raise InsufficientPrecision("saturation divisor inside the margin window")
        cols.append(uinv.col(i))
    if not cols:
        return Mat.zero(basis.ctx, basis.mat.rows, 0, "ok")
    return Mat.from_rows(basis.ctx, list(map(list, zip(*cols))), "ok")


def lattice_strong_divisibility(d: FilteredPhiModule,
                                margin: int = DEFAULT_MARGIN) -> tuple[bool, bool]:
    """Both strong-divisibility criteria for the standard lattice O^r in D.

    The lattice filtration is M^i = O^r intersect D^i (saturation).
    Returns (containment, span_full): containment is phi(M^i) in p^i O^r
    for every step; span_full is sum p^{-i} phi(M^i) = O^r computed with
    denominators.  For admissible D the two agree.
    """
    ctx = d.ctx
    r = d.rank
    steps = []
    for jump, basis in d.filtration:
        sat = saturation_basis(basis, margin)
        steps.append((jump, sat))
    containment = True
    img_cols = []  # (KMat columns of p^{-i} phi(sat))
    for jump, sat in steps:
        if sat.cols == 0:
            continue
        img = KMat(d.phi.mat @ mat_frobenius(sat, 1), d.phi.shift)
        # phi(M^i) in p^i O^r  <=>  integral part valuation >= i + shift
        need = jump + d.phi.shift
        if need > 0 and img.mat.min_valuation() < need:
            containment = False
        img_cols.append(img.scale_p_power(-jump))
    if not img_cols:
        return containment, False
    smax = max(k.shift for k in img_cols)
    all_cols = hstack(*[k.with_shift(smax).mat for k in img_cols])
    target = Mat.identity(ctx, r, "ok").times_p_power(smax)
    span_full = (true_solve(all_cols, target, margin) is not None
                 and all_cols.min_valuation() >= smax)
    return containment, span_full


# ---------------------------------------------------------------------------
# cohomology


def _relations_z_for(divisors, ctx_w) -> Mat:
    """Restricted-scalars relation columns at a working context."""
    f = ctx_w.f
    rank = len(divisors)
    cols = []
    for j, d in enumerate(divisors):
        if d < ctx_w.N:
            for l in range(f):
                col = [ctx_w.zero()] * (rank * f)
                col[j * f + l] = ctx_w.one().times_p_power(d)
                cols.append(col)
    if not cols:
        return Mat.zero(ctx_w, rank * f, 0, "zp")
    return Mat.from_rows(ctx_w, list(map(list, zip(*cols))), "zp")


def _guard_divisors(m: FLModule, work_n: int, margin: int):
    """Refuse torsion exponents that a precision drop would misclassify."""
    for d in m.divisors:
        if d < m.ctx.N and d >= work_n - margin:
            raise InsufficientPrecision(
                f"torsion exponent {d} cannot be told from free at working "
                f"precision {work_n}")


@dataclass
class CohomologyData:
    """H^0 and H^1 of 1 - phi^0, computed at the honest working precision.

    When the lowest jump a is negative, phi^0 = p^a phi^a involves an exact
    division whose result is only determined mod p^{N+a}; the whole
    computation is therefore carried out in the context at that precision,
    and the reported structures live there.
    """

    module: FLModule
    margin: int
    finite: bool
    work_precision: int | None = None
    ctx_w: object = field(init=False)
    m0_gens: Mat = field(init=False)
    psi: Mat = field(init=False)
    rel_z: Mat = field(init=False)
    h0: Subquotient = field(init=False)
    h1: Subquotient = field(init=False)

    def __post_init__(self):
        m = self.module
        a = m.lowest_jump
        work_n = m.ctx.N + min(a, 0)
        if self.work_precision is not None:
            work_n = min(work_n, self.work_precision)
        if work_n < 1 or (not self.finite and work_n <= self.margin):
            raise InsufficientPrecision(
                "no working precision left for the cohomology computation")
        if not self.finite:
            _guard_divisors(m, work_n, self.margin)
        ctx_w = m.ctx.with_precision(work_n) if work_n < m.ctx.N else m.ctx
        self.ctx_w = ctx_w
        g_full = m.filtration_at(0)
        raw = _phi_a_image(m, g_full)
        if a >= 0:
            c_full = raw.times_p_power(a)
        else:
            c_full = _divide_in_module(m, raw, -a, self.margin, self.finite)
            if c_full is None:
                raise PrecisionLoss("phi^0 is not defined on M^0 at this precision")
        g = reduce_mat(g_full, ctx_w)
        c = reduce_mat(c_full, ctx_w)
        self.m0_gens = g
        gz = restrict_scalars(SemilinearMap(g, 0), ctx_w)
        psi = gz - restrict_scalars(SemilinearMap(c, 1), ctx_w)
        self.psi = psi
        self.rel_z = _relations_z_for(m.divisors, ctx_w)
        fr = m.rank * ctx_w.f
        stacked = hstack(psi, self.rel_z)
        if self.finite:
            pairs = finite_kernel_generators(stacked)
        else:
            pairs = true_kernel_basis(stacked, self.margin)
        u_part = Mat(ctx_w, "zp", psi.cols, pairs.cols,
                     tuple(pairs.entries[i] for i in range(psi.cols)))
        if psi.cols and u_part.cols:
            x_mat = gz @ u_part
        else:
            x_mat = Mat.zero(ctx_w, fr, 0, "zp")
        self.h0 = Subquotient(x_mat, self.rel_z, self.margin, self.finite)
        self.h1 = Subquotient(Mat.identity(ctx_w, fr, "zp"),
                              hstack(psi, self.rel_z), self.margin, self.finite)


def cohomology(m: FLModule, margin: int = DEFAULT_MARGIN, finite: bool = False,
               work_precision: int | None = None) -> CohomologyData:
    return CohomologyData(m, margin, finite, work_precision)


def h0(m: FLModule, margin: int = DEFAULT_MARGIN, finite: bool = False) -> ZpModuleStructure:
    """Kernel of 1 - phi^0 : M^0 -> M as a Z_p-module structure.

    With finite=True the literal finite kernel mod p^N is returned instead
    of the integral-semantics one.
    """
    return cohomology(m, margin, finite).h0.structure("kernel")


def h1(m: FLModule, margin: int = DEFAULT_MARGIN, finite: bool = False) -> ZpModuleStructure:
    """Cokernel of 1 - phi^0 : M^0 -> M as a Z_p-module structure."""
    return cohomology(m, margin, finite).h1.structure("cokernel")


# ---------------------------------------------------------------------------
# abelian-category operations


def _dedupe_steps(steps, rel, margin):
    """Drop repeated spans (keep the highest jump of a run) and zero tops."""
    kept = []
    for jump, gens in reversed(steps):
        if kept and _span_eq(gens, kept[-1][1], rel, margin):
            continue
        if not kept and _is_zero_span(gens, rel, margin):
            continue
        kept.append((jump, gens))
    kept.reverse()
    return kept


def _rebuild_from_presentation(ctx, sq: Subquotient, ambient_mod: FLModule,
                               filtration_steps, fallback_jump, margin) -> FLModule:
    """Assemble an FLModule on the coordinates of a subquotient of ambient_mod.

    filtration_steps: ((jump, generator columns in the ambient), ...).  The
    induced Frobenius at the new lowest jump a is computed on ambient
    representatives chosen inside the ambient step at a, which exist
    whenever the input data is a strict subobject or quotient.
    """
    divisors = tuple(sq.exponents)
    k = len(divisors)
    rel_pres = sq.presentation_relations()
    steps = []
    for jump, gcols in filtration_steps:
        if gcols.cols:
            coords = sq.coords_of(gcols)
            if coords is None:
                raise PrecisionLoss("filtration step does not map into the quotient")
        else:
            coords = Mat.zero(ctx, k, 0, "ok")
        steps.append((jump, coords))
    steps = _dedupe_steps(steps, rel_pres, margin)
    if not steps:
        steps = [(fallback_jump, Mat.zero(ctx, k, 0, "ok"))]
    a_new = steps[0][0]
    # phi on the new generators: represent each generator inside the ambient
    # step at jump a_new, apply the ambient divided Frobenius, take coords
    amb_step = ambient_mod.filtration_at(a_new)
    if k:
        reps_u = _member(amb_step, ambient_mod.relations(), sq.generators,
                         margin, False)
        if reps_u is None:
            raise PrecisionLoss(
                "quotient generators have no representative in the filtration step")
        reps = amb_step @ reps_u
        img = phi_image_at_level(ambient_mod, a_new, reps, margin)
        phi_new = sq.coords_of(img)
        if phi_new is None:
            raise PrecisionLoss("induced Frobenius does not map into the quotient")
    else:
        phi_new = Mat.zero(ctx, 0, 0, "ok")
    out = FLModule(ctx, divisors, tuple(steps), phi_new)
    rep = validate(out, margin)
    if not rep.ok:
        # typically: a torsion exponent inside the jump spread, so the
        # induced divided Frobenii cannot be stored faithfully
        raise PrecisionLoss(
            f"induced module does not validate: {rep.first.message}")
    return out


def kernel_flmod(f: FLMorphism, margin: int = DEFAULT_MARGIN) -> FLModule:
    """Categorical kernel with induced filtration K^i = K intersect M^i."""
    src = f.source
    ctx = src.ctx
    rel_t = f.target.relations()
    rel_s = src.relations()
    pairs = true_kernel_basis(hstack(f.matrix, rel_t), margin)
    u_part = Mat(ctx, "ok", src.rank, pairs.cols,
                 tuple(pairs.entries[i] for i in range(src.rank)))
    sq = Subquotient(u_part, rel_s, margin)
    # intersect the kernel with each filtration step of the source
    steps = []
    kgens = sq.generators
    for jump, gens in src.filtration:
        if kgens.cols == 0:
            steps.append((jump, Mat.zero(ctx, src.rank, 0, "ok")))
            continue
        triple = true_kernel_basis(hstack(kgens, -gens, rel_s), margin)
        u = Mat(ctx, "ok", kgens.cols, triple.cols,
                tuple(triple.entries[i] for i in range(kgens.cols)))
        steps.append((jump, kgens @ u))
    return _rebuild_from_presentation(ctx, sq, src, steps, src.lowest_jump, margin)


def cokernel_flmod(f: FLMorphism, margin: int = DEFAULT_MARGIN) -> FLModule:
    """Categorical cokernel with the image filtration."""
    return cokernel_with_projection(f, margin)[0]


def cokernel_with_projection(f: FLMorphism, margin: int = DEFAULT_MARGIN):
    """The cokernel together with the projection morphism target -> Q."""
    tgt = f.target
    ctx = tgt.ctx
    rel_t = tgt.relations()
    sq = Subquotient(Mat.identity(ctx, tgt.rank, "ok"),
                     hstack(f.matrix, rel_t), margin)
    steps = [(jump, gens) for jump, gens in tgt.filtration]
    q = _rebuild_from_presentation(ctx, sq, tgt, steps, tgt.lowest_jump, margin)
    proj = sq.coords_of(Mat.identity(ctx, tgt.rank, "ok"))
    return q, FLMorphism(tgt, q, proj)


def kernel_with_inclusion(f: FLMorphism, margin: int = DEFAULT_MARGIN):
    """The kernel together with the inclusion morphism K -> source."""
    src = f.source
    k = kernel_flmod(f, margin)
    rel_t = f.target.relations()
    pairs = true_kernel_basis(hstack(f.matrix, rel_t), margin)
    u_part = Mat(src.ctx, "ok", src.rank, pairs.cols,
                 tuple(pairs.entries[i] for i in range(src.rank)))
    sq = Subquotient(u_part, src.relations(), margin)
    return k, FLMorphism(k, src, sq.generators)


# ---------------------------------------------------------------------------
# connecting homomorphism and the six-term sequence


@dataclass(frozen=True)
class DeltaReport:
    delta: Mat
    h0_structures: tuple
    h1_structures: tuple
    exact_at: tuple
    six_term_exact: bool


def _induced_map(elements: Mat, out_sq: Subquotient, carry: Mat | None,
                 margin) -> Mat:
    """Coordinates in out_sq of (carry @ elements), one column per element."""
    x = carry @ elements if carry is not None else elements
    coords = out_sq.coords_of(x)
    if coords is None:
        raise NotExact("an induced map does not land where exactness requires")
    return coords


def _diag_relations(ctx, exponents) -> Mat:
    cols = []
    k = len(exponents)
    for i, e in enumerate(exponents):
        if e < ctx.N:
            col = [ctx.zero()] * k
            col[i] = ctx.one().times_p_power(e)
            cols.append(col)
    if not cols:
        return Mat.zero(ctx, k, 0, "zp")
    return Mat.from_rows(ctx, list(map(list, zip(*cols))), "zp")


def _exact_at_node(ctx, incoming: Mat | None, outgoing: Mat | None,
                   node_exponents, target_exponents, margin) -> bool:
    """im(incoming) = ker(outgoing) inside the presented node module."""
    k = len(node_exponents)
    rel_node = _diag_relations(ctx, node_exponents)
    if outgoing is None:
        ker_gens = Mat.identity(ctx, k, "zp")
    else:
        rel_next = _diag_relations(ctx, target_exponents)
        pairs = true_kernel_basis(hstack(outgoing, rel_next), margin)
        ker_gens = Mat(ctx, "zp", k, pairs.cols,
                       tuple(pairs.entries[i] for i in range(k)))
    im_gens = incoming if incoming is not None else Mat.zero(ctx, k, 0, "zp")
    # composite zero (im in ker) and ker in im
    ok1 = _span_leq(im_gens, ker_gens, rel_node, margin)
    ok2 = _span_leq(ker_gens, im_gens, rel_node, margin)
    return ok1 and ok2


def connecting_delta(f: FLMorphism, g: FLMorphism,
                     margin: int = DEFAULT_MARGIN) -> DeltaReport:
    """Snake-lemma connecting map for 0 -> M' -f-> M -g-> M'' -> 0.

    Checks module-level exactness first (NotExact otherwise); each H^0(M'')
    generator is lifted to M^0 of the middle module (LiftFailure when the
    sequence is not strict at level zero), pushed through 1 - phi^0 and
    pulled back along f; the report carries the six-term exactness verdict
    at every position.
    """
    mp, mm = f.source, f.target
    if g.source != mm:
        raise ShapeMismatch("maps are not composable")
    mq = g.target
    ctx = mm.ctx
    rel_m = mm.relations()
    # exactness of the module sequence
    ker_f = true_kernel_basis(hstack(f.matrix, rel_m), margin)
    ker_f_u = Mat(ctx, "ok", mp.rank, ker_f.cols,
                  tuple(ker_f.entries[i] for i in range(mp.rank)))
    if not _is_zero_span(ker_f_u, mp.relations(), margin):
        raise NotExact("first map is not injective")
    if true_solve(hstack(g.matrix, mq.relations()),
                  Mat.identity(ctx, mq.rank, "ok"), margin) is None:
        raise NotExact("second map is not surjective")
    ker_g = true_kernel_basis(hstack(g.matrix, mq.relations()), margin)
    ker_g_u = Mat(ctx, "ok", mm.rank, ker_g.cols,
                  tuple(ker_g.entries[i] for i in range(mm.rank)))
    if not _span_eq(ker_g_u, f.matrix, rel_m, margin):
        raise NotExact("image of the first map differs from the kernel of the second")

    # one working precision across all three modules, so the induced maps
    # compose within a single context
    work_n = ctx.N + min(0, mp.lowest_jump, mm.lowest_jump, mq.lowest_jump)
    if work_n <= margin:
        raise InsufficientPrecision("no working precision left for the snake")
    cp, cm, cq = (cohomology(x, margin, work_precision=work_n)
                  for x in (mp, mm, mq))
    ctx_w = cp.ctx_w
    fz = restrict_scalars(SemilinearMap(reduce_mat(f.matrix, ctx_w), 0), ctx_w)
    gz = restrict_scalars(SemilinearMap(reduce_mat(g.matrix, ctx_w), 0), ctx_w)
    rel_m_z = _relations_z_for(mm.divisors, ctx_w)
    rel_q_z = _relations_z_for(mq.divisors, ctx_w)

    # induced maps on H^0 (generators are honest kernel elements)
    h0p_el = cp.h0.generators
    h0m_el = cm.h0.generators
    h0q_el = cq.h0.generators
    map_h0_f = _induced_map(h0p_el, cm.h0, fz, margin) if h0p_el.cols else \
        Mat.zero(ctx_w, len(cm.h0.exponents), 0, "zp")
    map_h0_g = _induced_map(h0m_el, cq.h0, gz, margin) if h0m_el.cols else \
        Mat.zero(ctx_w, len(cq.h0.exponents), 0, "zp")

    # delta: lift each H^0(M'') generator into M^0 of the middle module
    m0_z = restrict_scalars(
        SemilinearMap(reduce_mat(mm.filtration_at(0), ctx_w), 0), ctx_w)
    delta_cols = []
    for idx in range(h0q_el.cols):
        x = h0q_el.col_mat(idx)
        if m0_z.cols == 0:
            raise LiftFailure("middle module has empty M^0, no lift exists")
        sol = true_solve(hstack(gz @ m0_z, rel_q_z), x, margin)
        if sol is None:
            raise LiftFailure(
                "no preimage in M^0: the sequence is not strict at level zero")
        u = Mat(ctx_w, "zp", m0_z.cols, 1,
                tuple(sol.entries[i] for i in range(m0_z.cols)))
        y = cm.psi @ u  # (1 - phi^0)(lift), inside the ambient of M
        sol2 = true_solve(hstack(fz, rel_m_z), y, margin)
        if sol2 is None:
            raise NotExact("(1 - phi^0)(lift) does not come from the submodule")
        yprime = Mat(ctx_w, "zp", fz.cols, 1,
                     tuple(sol2.entries[i] for i in range(fz.cols)))
        cls = cp.h1.coords_of(yprime)
        if cls is None:
            raise NotExact("delta image fails to land in H^1 of the submodule")
        delta_cols.append(cls)
    kp1 = len(cp.h1.exponents)
    delta = hstack(*delta_cols) if delta_cols else Mat.zero(ctx_w, kp1, 0, "zp")

    # induced maps on H^1 (generators are ambient classes)
    map_h1_f = _induced_map(cp.h1.generators, cm.h1, fz, margin) \
        if cp.h1.generators.cols else Mat.zero(ctx_w, len(cm.h1.exponents), 0, "zp")
    map_h1_g = _induced_map(cm.h1.generators, cq.h1, gz, margin) \
        if cm.h1.generators.cols else Mat.zero(ctx_w, len(cq.h1.exponents), 0, "zp")

    e_p0, e_m0, e_q0 = cp.h0.exponents, cm.h0.exponents, cq.h0.exponents
    e_p1, e_m1, e_q1 = cp.h1.exponents, cm.h1.exponents, cq.h1.exponents
    exact = (
        _exact_at_node(ctx_w, None, map_h0_f, e_p0, e_m0, margin),
        _exact_at_node(ctx_w, map_h0_f, map_h0_g, e_m0, e_q0, margin),
        _exact_at_node(ctx_w, map_h0_g, delta, e_q0, e_p1, margin),
        _exact_at_node(ctx_w, delta, map_h1_f, e_p1, e_m1, margin),
        _exact_at_node(ctx_w, map_h1_f, map_h1_g, e_m1, e_q1, margin),
        _exact_at_node(ctx_w, map_h1_g, None, e_q1, (), margin),
    )
    return DeltaReport(
        delta=delta,
        h0_structures=(cp.h0.structure("kernel"), cm.h0.structure("kernel"),
                       cq.h0.structure("kernel")),
        h1_structures=(cp.h1.structure("cokernel"), cm.h1.structure("cokernel"),
                       cq.h1.structure("cokernel")),
        exact_at=exact,
        six_term_exact=all(exact))


# ---------------------------------------------------------------------------
# constructions


def direct_sum(m1: FLModule, m2: FLModule) -> FLModule:
    if m1.ctx != m2.ctx:
        raise ContextMismatch("summands from different contexts")
    ctx = m1.ctx
    r1, r2 = m1.rank, m2.rank
    jumps = sorted({j for j, _ in m1.filtration} | {j for j, _ in m2.filtration})
    steps = []
    zero = ctx.zero_u()
    for j in jumps:
        g1, g2 = m1.filtration_at(j), m2.filtration_at(j)
        rows = []
        for i in range(r1):
            rows.append(list(g1.entries[i]) + [zero] * g2.cols)
        for i in range(r2):
            rows.append([zero] * g1.cols + list(g2.entries[i]))
        steps.append((j, Mat.from_rows(ctx, rows, "ok")))
    a = jumps[0]
    blk1 = m1.phi_low.times_p_power(m1.lowest_jump - a)
    blk2 = m2.phi_low.times_p_power(m2.lowest_jump - a)
    rows = []
    for i in range(r1):
        rows.append(list(blk1.entries[i]) + [zero] * r2)
    for i in range(r2):
        rows.append([zero] * r1 + list(blk2.entries[i]))
    return FLModule(ctx, m1.divisors + m2.divisors, tuple(steps),
                    Mat.from_rows(ctx, rows, "ok"))


def tate_twist(m: FLModule, n: int) -> FLModule:
    """Shift every jump by n; the stored matrix is unchanged (its level moves)."""
    return FLModule(m.ctx, m.divisors,
                    tuple((j + n, g) for j, g in m.filtration), m.phi_low)


def base_change(m: FLModule, u: Mat) -> FLModule:
    """Transport along the automorphism x -> u^{-1} x of the ambient module."""
    uinv = invert_unimodular(u)
    steps = tuple((j, uinv @ g) for j, g in m.filtration)
    phi = uinv @ m.phi_low @ mat_frobenius(u, 1)
    return FLModule(m.ctx, m.divisors, steps, phi)


def unramified_line(ctx: PadicContext, unit: UnramifiedScalar,
                    divisor: int | None = None) -> FLModule:
    """Rank 1, jump 0, phi^0 = multiplication by a unit."""
    d = ctx.N if divisor is None else divisor
    gens = Mat.identity(ctx, 1, "ok")
    return FLModule(ctx, (d,), ((0, gens),),
                    Mat.from_rows(ctx, [[unit]], "ok"))


def tate_type_line(ctx: PadicContext, n: int) -> FLModule:
    """Rank 1, jump n, phi^n = identity (so phi = p^n over K)."""
    gens = Mat.identity(ctx, 1, "ok")
    return FLModule(ctx, (ctx.N,), ((n, gens),),
                    Mat.from_rows(ctx, [[ctx.one_u()]], "ok"))


# ---------------------------------------------------------------------------
# JSON instance schema


def _scalar_from_json(ctx, obj) -> UnramifiedScalar:
    if isinstance(obj, (str, int)):
        return ctx.unram_scalar([int(obj)] + [0] * (ctx.f - 1))
    return ctx.unram_scalar([int(c) for c in obj])


def flmodule_from_json(obj: dict) -> FLModule:
    """Parse the instance schema.

    {"p": int, "f": int, "precision": int,
     "elementary_divisors": ["inf" | int, ...],
     "filtration": [{"jump": int, "generators": [[scalar, ...], ...]}, ...],
     "phi_low": {"level": int, "matrix": [[scalar, ...], ...]}}

    Scalars are decimal strings (f = 1) or arrays of f decimal strings;
    generators are vectors of length rank; matrix rows are listed row by
    row with column j holding the image of generator j.
    """
    ctx = make_context(int(obj["p"]), int(obj["precision"]), int(obj.get("f", 1)))
    divisors = tuple(
        ctx.N if d in ("inf", None) else int(d)
        for d in obj["elementary_divisors"])
    rank = len(divisors)
    steps = []
    for step in obj["filtration"]:
        jump = int(step["jump"])
        gens = step["generators"]
        if gens:
            cols = [[_scalar_from_json(ctx, c) for c in vec] for vec in gens]
            mat = Mat.from_rows(ctx, list(map(list, zip(*cols))), "ok")
        else:
            mat = Mat.zero(ctx, rank, 0, "ok")
        if mat.rows != rank:
            raise ShapeMismatch("generator length does not match rank")
        steps.append((jump, mat))
    steps.sort(key=lambda s: s[0])
    phi_obj = obj["phi_low"]
    level = int(phi_obj["level"])
    if steps and level != steps[0][0]:
        raise ShapeMismatch(
            f"phi level {level} does not match the lowest jump {steps[0][0]}")
    phi = Mat.from_rows(
        ctx, [[_scalar_from_json(ctx, e) for e in row] for row in phi_obj["matrix"]],
        "ok")
    return FLModule(ctx, divisors, tuple(steps), phi)


def flmodule_to_json(m: FLModule) -> dict:
    return {
        "p": m.ctx.p,
        "f": m.ctx.f,
        "precision": m.ctx.N,
        "elementary_divisors": [
            "inf" if d >= m.ctx.N else d for d in m.divisors],
        "filtration": [
            {"jump": j,
             "generators": [[g.entries[i][c].to_json_obj() for i in range(m.rank)]
                            for c in range(g.cols)]}
            for j, g in m.filtration],
        "phi_low": {
            "level": m.lowest_jump,
            "matrix": [[e.to_json_obj() for e in row] for row in m.phi_low.entries],
        },
    }
