"""Local L-factor and the measure identity on H^1.

The local factor of a filtered phi-module D is
P(X) = det_K(1 - F X) with F the K-linear map phi^f (the f-fold
linearisation of the semilinear phi).  Its coefficients are Frobenius
invariant, hence rational; the invariance is verified exactly and each
coefficient is stored as a rational p-adic number (PadicScalar numerator
with an explicit denominator exponent, since negative filtration jumps
force denominators).

The measure bookkeeping follows the normalisation mu(Lambda_0) = 1, where
Lambda_0 is the image of the lattice M / M^0 under 1 - phi inside
H^1(M)[1/p].  Splitting H^1 into torsion and free-at-precision parts:

    log_p mu(H^1) = length(H^1_tors) - relative_index(Lambda_0, H^1_free)

and when M^0 = M the measure degenerates to counting measure on the
finite H^1, log_p mu = length(H^1).  The identity under test equates this
with v_p(P(1)).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    InsufficientPrecision,
    NonRationalCoefficients,
    PVanishesAtOne,
    ShapeMismatch,
)
from .flmod import (
    FilteredPhiModule,
    FLModule,
    cohomology,
    is_strongly_divisible,
    linearized_frobenius,
    to_filtered_phi_module,
    validate,
)
from .linalg import (
    DEFAULT_MARGIN,
    KMat,
    Mat,
    SemilinearMap,
    Subquotient,
    det_exact,
    hstack,
    mat_frobenius,
    reduce_mat,
    relative_index,
    restrict_scalars,
)
from .padic import PadicScalar, frobenius

__all__ = [
    "EulerFactor",
    "ExpMapData",
    "MeasureReport",
    "euler_factor",
    "integral_exp_map",
    "verify_measure_identity",
]

import itertools


@dataclass(frozen=True)
class EulerFactor:
    """P(X) = sum coeffs[k] p^{-shifts[k]} X^k, coefficients in Q_p."""

    coeffs: tuple[PadicScalar, ...]
    shifts: tuple[int, ...]
    precision: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def valuation_at_one(self, margin: int = DEFAULT_MARGIN) -> int:
        """v_p(P(1)); PVanishesAtOne when P(1) is zero at the precision."""
        smax = max(self.shifts)
        ctx = self.coeffs[0].ctx
        total = ctx.zero()
        for c, s in zip(self.coeffs, self.shifts):
            total = total + c.times_p_power(smax - s)
        val = total.valuation()
        if val >= self.precision - margin:
            raise PVanishesAtOne(
                "P(1) vanishes (or cannot be told from zero) at this precision")
        return val - smax

    def to_json_obj(self) -> dict:
        return {
            "coefficients": [c.to_json_obj() for c in self.coeffs],
            "denominator_exponents": list(self.shifts),
            "precision": self.precision,
        }


def euler_factor(d: FilteredPhiModule, margin: int = DEFAULT_MARGIN) -> EulerFactor:
    """det_K(1 - F X) for F = phi^f, with the invariance check.

    Coefficient k is (-1)^k times the sum of the principal k x k minors of
    the linearised matrix; each must be fixed by sigma exactly, otherwise
    the input was not a well-formed module and NonRationalCoefficients is
    raised.
    """
    b = linearized_frobenius(d)
    r = d.rank
    coeffs = [d.ctx.one()]
    shifts = [0]
    for k in range(1, r + 1):
        acc = None
        for subset in itertools.combinations(range(r), k):
            sub = Mat.from_rows(
                d.ctx, [[b.mat.entries[i][j] for j in subset] for i in subset], "ok")
            minor = det_exact(sub)
            acc = minor if acc is None else acc + minor
        if k % 2 == 1:
            acc = -acc
        if frobenius(acc) != acc:
            raise NonRationalCoefficients(
                f"coefficient of X^{k} is not Frobenius invariant")
        try:
            rational = acc.as_padic()
        except ValueError as exc:
            raise NonRationalCoefficients(str(exc)) from exc
        coeffs.append(rational)
        shifts.append(k * b.shift)
    return EulerFactor(tuple(coeffs), tuple(shifts), d.ctx.N)


@dataclass(frozen=True)
class ExpMapData:
    """The map (1 - phi): M/M^0 -> H^1(M)[1/p] on the free-part lattice.

    domain_basis: columns in the ambient of M spanning the free part of
    M/M^0 over O_K.  lattice_matrix: the image lattice Lambda_0 as columns
    in the free coordinates of H^1 (denominators through the shift).
    """

    domain_basis: Mat
    lattice_matrix: KMat
    h1_free_rank: int
    h1_torsion_exponents: tuple[int, ...]


def integral_exp_map(m: FLModule, margin: int = DEFAULT_MARGIN) -> ExpMapData:
    """Image lattice of 1 - phi on the free part of M/M^0.

    Requires a validated strongly divisible module; when M^0 = M the
    domain is zero and the lattice is empty.  The lattice coordinates live
    at the working precision of the cohomology (N + a for a negative
    lowest jump a), where all digits are honest.
    """
    ctx = m.ctx
    coh = cohomology(m, margin)
    ctx_w = coh.ctx_w
    rel = m.relations()
    quot = Subquotient(Mat.identity(ctx, m.rank, "ok"),
                       hstack(m.filtration_at(0), rel), margin)
    free_cols = [i for i, e in enumerate(quot.exponents) if e >= ctx.N]
    if free_cols:
        gens = Mat.from_rows(
            ctx,
            [[quot.generators.entries[i][j] for j in free_cols]
             for i in range(m.rank)], "ok")
    else:
        gens = Mat.zero(ctx, m.rank, 0, "ok")
    h1_exps = coh.h1.exponents
    free_rows = [i for i, e in enumerate(h1_exps) if e >= ctx_w.N]
    tors = tuple(e for e in h1_exps if e < ctx_w.N)
    rho = len(free_rows)
    if gens.cols == 0:
        return ExpMapData(gens, KMat(Mat.zero(ctx_w, rho, 0, "zp"), 0), rho, tors)
    # 1 - phi with phi = p^a phi^a, written p^{-s}(p^s x - A sigma(x));
    # the numerator is exact, so reducing it into the working context is
    # lossless for every digit that context can hold
    a = m.lowest_jump
    s = max(0, -a)
    c = (m.phi_low @ mat_frobenius(gens, 1)).times_p_power(max(0, a))
    num = restrict_scalars(SemilinearMap(gens, 0), ctx).times_p_power(s) \
        - restrict_scalars(SemilinearMap(c, 1), ctx)
    num_w = reduce_mat(num, ctx_w)
    coord = coh.h1._coord_rows
    coord_free = Mat(ctx_w, "zp", rho, coord.cols,
                     tuple(coord.entries[i] for i in free_rows)) \
        if rho else Mat.zero(ctx_w, 0, coord.cols, "zp")
    lattice = KMat(coord_free @ num_w, s)
    if lattice.cols != rho:
        raise InsufficientPrecision(
            "free part of M/M^0 does not match the free rank of H^1; "
            "the exponential map is not an isomorphism at this precision")
    return ExpMapData(gens, lattice, rho, tors)


@dataclass(frozen=True)
class MeasureReport:
    """Both sides of the measure identity, with H^1 diagnostics."""

    v_P_at_1: int
    log_p_mu: int
    identity_holds: bool
    h1_torsion_exponents: tuple[int, ...]
    h1_free_rank: int
    diagnostics: dict

    def to_json_obj(self) -> dict:
        return {
            "v_P_at_1": self.v_P_at_1,
            "log_p_mu": self.log_p_mu,
            "identity_holds": self.identity_holds,
            "h1": {
                "torsion_exponents": list(self.h1_torsion_exponents),
                "free_rank": self.h1_free_rank,
            },
        }


def verify_measure_identity(m: FLModule, margin: int = DEFAULT_MARGIN) -> MeasureReport:
    """Compare v_p(P(1)) with log_p mu(H^1) under mu(Lambda_0) = 1.

    Preconditions: the module validates, is strongly divisible, and
    P(1) != 0 at the working precision (PVanishesAtOne otherwise).
    """
    rep = validate(m, margin)
    if not rep.ok:
        raise ShapeMismatch(f"module does not validate: {rep.first.message}")
    if not is_strongly_divisible(m, margin):
        raise ShapeMismatch("module is not strongly divisible")
    d = to_filtered_phi_module(m)
    factor = euler_factor(d, margin)
    v_p1 = factor.valuation_at_one(margin)
    exp_data = integral_exp_map(m, margin)
    length_tors = sum(exp_data.h1_torsion_exponents)
    if exp_data.h1_free_rank == 0:
        log_mu = length_tors
        relidx = None
    else:
        rho = exp_data.h1_free_rank
        std = KMat(Mat.identity(exp_data.lattice_matrix.ctx, rho, "zp"), 0)
        relidx = relative_index(exp_data.lattice_matrix, std, margin)
        log_mu = length_tors - relidx
    return MeasureReport(
        v_P_at_1=v_p1,
        log_p_mu=log_mu,
        identity_holds=(v_p1 == log_mu),
        h1_torsion_exponents=exp_data.h1_torsion_exponents,
        h1_free_rank=exp_data.h1_free_rank,
        diagnostics={
            "euler_factor": factor.to_json_obj(),
            "relative_index": relidx,
            "h1_torsion_length": length_tors,
        },
    )
