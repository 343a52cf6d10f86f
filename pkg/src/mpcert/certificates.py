"""A-posteriori certificates for computed profiles.

Everything here evaluates explicit constants and inequalities on a solution
of the spliced problem: the sup-norm constant chain, the decay envelope, the
energy-norm bound, tail consistency (which is what upgrades a spliced-problem
solution to a solution of the original equation), and the admissibility
thresholds for the potential's amplitude. All functions are pure; numbers in
the records name the operation that produced them.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mountain_pass import RadialBump, ball_bump, compute_d, default_level_bound, shell_partition
from .penalization import PenalizedNonlinearity
from .problem_model import (
    HypothesisViolation,
    ProblemSpec,
    ar_defect_constant,
    ball_volume,
    critical_exponent,
    growth_constant_near_zero,
    omega_stats,
    sobolev_constant,
)
from .radial import DiscreteEnergy, RadialGrid


# ---------------------------------------------------------------------------
# sup-norm constant chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoserConstants:
    """Explicit constants of the iterated sup-norm estimate.

    `bound` is evaluated from the ungrouped form of the final inequality,
    which is fully explicit; the grouped (c1_group, c2_group, c3_group) are
    a conservative regrouping by powers of the critical norm, reported for
    reference only.
    """

    tau: float
    tau_prime: float
    sigma: float
    a3: float
    a4: float
    c1_group: float
    c2_group: float
    c3_group: float
    bound: float
    u_norm_2star: float
    alpha: float
    omega_measure: float
    sobolev: float


def moser_constants(spec: ProblemSpec, u_norm_2star: float) -> MoserConstants:
    """Constant chain bounding sup|u| by a function of the critical norm.

    The exact identity 2(sigma - 1) = 2* - p ties the iteration exponent to
    the growth gap; a2 = 0 removes the additive branch entirely.
    """
    two_star = critical_exponent(spec.dim)
    p = spec.p
    if not 2.0 < p < two_star:
        raise ValueError(f"need 2 < p < {two_star}, got p = {p}")
    if u_norm_2star < 0.0:
        raise ValueError("the critical norm cannot be negative")

    tau = two_star / (p - 2.0)
    tau_prime = tau / (tau - 1.0)
    sigma = two_star / (2.0 * tau_prime)
    a1, a2 = spec.a1, spec.a2
    alpha, omega_measure = omega_stats(spec)
    s_const = sobolev_constant(spec.dim)
    un = u_norm_2star

    a3 = 2.0 * a1 * un ** (p - 2.0) + alpha * omega_measure ** ((p - 2.0) / two_star)
    if a2 > 0.0:
        stem = 2.0 ** (p - 1.0) * a2 ** (-p) * (a1 * a2 ** (p - 2.0) + 1.0) * (a2 + 1.0)
        a4 = stem * (1.0 + un) ** (p - 1.0) + alpha * a2 * (1.0 + omega_measure)
    else:
        stem = 0.0
        a4 = 0.0

    core = sigma ** (2.0 * sigma / (sigma - 1.0))
    bracket = core * 2.0 / s_const * (a3 + a4) + 2.0 * core \
        + a2 ** (2.0 * (sigma - 1.0))
    bound = bracket ** (1.0 / (two_star - p)) * (1.0 + un)

    # regrouped by powers of the norm: (1+t)^(p-1) <= 2^(p-2) (1 + t^(p-1))
    lead = core * 2.0 / s_const
    c1_group = lead * 2.0 * a1
    c2_group = lead * stem * 2.0 ** (p - 2.0)
    c3_group = lead * (alpha * omega_measure ** ((p - 2.0) / two_star)
                       + stem * 2.0 ** (p - 2.0)
                       + alpha * a2 * (1.0 + omega_measure)) \
        + 2.0 * core + a2 ** (2.0 * (sigma - 1.0))

    return MoserConstants(tau=tau, tau_prime=tau_prime, sigma=sigma,
                          a3=a3, a4=a4, c1_group=c1_group,
                          c2_group=c2_group, c3_group=c3_group, bound=bound,
                          u_norm_2star=un, alpha=alpha,
                          omega_measure=omega_measure, sobolev=s_const)


# ---------------------------------------------------------------------------
# energy bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBounds:
    """Coercivity constant and the bounds it produces at a level bound d."""

    K: float
    C_ar: float
    d: float
    ball_measure: float
    norm_bound: float
    hat_C: float
    beta: float = 0.0
    rho: float = 0.0
    level_c: float = math.nan


def energy_bounds(spec: ProblemSpec, d: float, alpha: float,
                  omega_measure: float, s_const: float,
                  c_ar: float) -> EnergyBounds:
    """Norm and critical-norm bounds from the level bound d.

    K comes from the coercivity of the spliced functional; the critical-norm
    bound feeds the sup-norm chain evaluated a priori (before any solve).
    """
    if spec.theta <= 2.0:
        raise ValueError("need theta > 2")
    if d <= 0.0:
        raise ValueError("need d > 0")
    gap = s_const - alpha * omega_measure ** (2.0 / spec.dim)
    if gap <= 0.0:
        raise HypothesisViolation(
            "the negative part of V is too strong: alpha |Omega|^(2/N) "
            "reaches the embedding constant")
    K = (spec.theta - 2.0) ** 2 / (4.0 * spec.theta ** 2) \
        * (gap / s_const)
    ball = ball_volume(spec.dim, spec.splice_radius)
    norm_bound = (d + c_ar * ball) / K
    hat_c = math.sqrt(norm_bound / gap)
    return EnergyBounds(K=K, C_ar=c_ar, d=d, ball_measure=ball,
                        norm_bound=norm_bound, hat_C=hat_c)


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRecord:
    name: str
    passed: bool
    margin: float
    constants: dict
    provenance: str


def check_norm_bound(grid: RadialGrid, spec: ProblemSpec, u: np.ndarray,
                     bounds: EnergyBounds) -> CheckRecord:
    """Squared energy norm of u against the coercivity bound."""
    norm_sq = DiscreteEnergy(spec, grid).norm(u) ** 2
    margin = bounds.norm_bound - norm_sq
    slack = 1e-6 * bounds.norm_bound
    return CheckRecord(
        name="norm-bound",
        passed=bool(margin >= -slack),
        margin=float(margin),
        constants={"norm_sq": norm_sq, "bound": bounds.norm_bound,
                   "K": bounds.K, "d": bounds.d, "C_ar": bounds.C_ar},
        provenance="energy_bounds/check_norm_bound",
    )


def check_decay(grid: RadialGrid, u: np.ndarray, m_const: float,
                radius: float) -> CheckRecord:
    """Nodewise |u| against the harmonic envelope M (R/r)^(N-2) beyond R."""
    u = np.asarray(u, dtype=float)
    outside = grid.r >= radius
    bound = np.empty_like(u)
    with np.errstate(divide="ignore"):
        bound[outside] = m_const * (radius / grid.r[outside]) ** (grid.dim - 2)
    if not np.any(outside):
        return CheckRecord(name="decay", passed=True, margin=math.inf,
                           constants={"M": m_const, "R": radius},
                           provenance="check_decay")
    gap = bound[outside] * (1.0 + 1e-8) - np.abs(u[outside])
    margin = float(np.min(bound[outside] - np.abs(u[outside])))
    return CheckRecord(
        name="decay",
        passed=bool(np.all(gap >= 0.0)),
        margin=margin,
        constants={"M": m_const, "R": radius,
                   "worst_r": float(grid.r[outside][int(np.argmin(gap))])},
        provenance="moser_constants/check_decay",
    )


def check_consistency(grid: RadialGrid, spec: ProblemSpec,
                      pen: PenalizedNonlinearity,
                      u: np.ndarray) -> CheckRecord:
    """Tail smallness k|f(r,u)| <= V(r)|u| beyond the splice radius.

    Passing means the clamp never engages on this profile, so the spliced
    term agrees with f at every node and u solves the original discrete
    equation with the same residual.
    """
    u = np.asarray(u, dtype=float)
    outside = grid.r >= spec.splice_radius
    f_vals = np.asarray(spec.f(grid.r, u), dtype=float)
    v_vals = np.asarray(spec.V(grid.r), dtype=float)
    lhs = pen.k * np.abs(f_vals[outside])
    rhs = v_vals[outside] * np.abs(u[outside])
    passed = bool(np.all(lhs <= rhs + 1e-12))
    margin = float(np.min(rhs - lhs)) if np.any(outside) else math.inf
    g_vals = np.asarray(pen.g(grid.r, u), dtype=float)
    constants = {"k": pen.k, "R": spec.splice_radius,
                 "g_equals_f_everywhere": bool(np.array_equal(g_vals, f_vals))}
    return CheckRecord(name="consistency", passed=passed, margin=margin,
                       constants=constants,
                       provenance="penalization/check_consistency")


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    """Amplitude thresholds above which the tail certificate must close."""

    lambda_star: float
    lambda_tilde_star: float
    mu_star: float = math.nan
    mode: str = "standard"
    factors: dict = field(default_factory=dict)


def thresholds(spec: ProblemSpec, bounds: EnergyBounds,
               moser_m_hat: float) -> Thresholds:
    """Amplitude thresholds from the a-priori sup bound.

    The R-free variant drops the explicit radius factor and is the honest
    threshold only when the superlinearity has no dead zone (s0 = 0);
    exponential mode trades the power factor for a decay-rate cap.
    """
    k = PenalizedNonlinearity(spec).k
    growth_c = growth_constant_near_zero(spec, moser_m_hat)
    radius = spec.splice_radius
    exponent = (spec.dim - 2.0) * (spec.q - 2.0)
    factors = {"k": k, "C": growth_c, "M_hat": moser_m_hat, "R": radius,
               "R_exponent": exponent}
    if spec.mode == "exponential":
        a_eff = spec.a / 2.0
        mu_star = a_eff / (moser_m_hat * radius ** (spec.dim - 2.0)) ** spec.q
        factors["a_eff"] = a_eff
        return Thresholds(lambda_star=k * growth_c,
                          lambda_tilde_star=growth_c,
                          mu_star=mu_star, mode="exponential",
                          factors=factors)
    lam_star = k * growth_c * moser_m_hat ** (spec.q - 2.0) * radius ** exponent
    lam_tilde = growth_c * moser_m_hat ** (spec.q - 2.0)
    return Thresholds(lambda_star=lam_star, lambda_tilde_star=lam_tilde,
                      mode="standard", factors=factors)


def apriori_chain(spec: ProblemSpec,
                  bump: RadialBump = None) -> tuple[EnergyBounds, MoserConstants, Thresholds]:
    """Level bound -> energy bounds -> sup bound -> thresholds, no solve.

    This is the certificate chain evaluated from the problem data alone;
    a posteriori checks then compare the computed profile against it.
    """
    alpha, omega_measure = omega_stats(spec)
    s_const = sobolev_constant(spec.dim)
    c_ar = ar_defect_constant(spec)
    d, _, _ = default_level_bound(spec, bump)
    bounds = energy_bounds(spec, d, alpha, omega_measure, s_const, c_ar)
    hat_m = moser_constants(spec, bounds.hat_C)
    th = thresholds(spec, bounds, hat_m.bound)
    return bounds, hat_m, th


# ---------------------------------------------------------------------------
# multiple profiles with disjoint supports
# ---------------------------------------------------------------------------


def multi_bump_D_l(spec: ProblemSpec, count: int,
                   grid: RadialGrid) -> tuple[list, float, float]:
    """Level bound and threshold for `count` disjoint shell profiles.

    The shells tile the designated ball, so their supports are pairwise
    disjoint; the worst per-shell level bound replaces d in the chain.
    """
    if count < 1:
        raise ValueError("need count >= 1")
    shells = shell_partition(spec.bump_radius, count)
    width = spec.bump_radius / count
    if width < 4.0 * grid.h:
        raise ValueError(
            f"shells of width {width:.3g} are thinner than 4 mesh cells "
            f"({4.0 * grid.h:.3g}); refine the grid or lower the count")
    d_values = [default_level_bound(spec, shell)[0] for shell in shells]
    d_l = max(d_values)
    alpha, omega_measure = omega_stats(spec)
    s_const = sobolev_constant(spec.dim)
    c_ar = ar_defect_constant(spec)
    bounds_l = energy_bounds(spec, d_l, alpha, omega_measure, s_const, c_ar)
    hat_m_l = moser_constants(spec, bounds_l.hat_C)
    th_l = thresholds(spec, bounds_l, hat_m_l.bound)
    return shells, d_l, th_l.lambda_star


# ---------------------------------------------------------------------------
# iteration diagnostic
# ---------------------------------------------------------------------------


def moser_diagnostic(grid: RadialGrid, spec: ProblemSpec, u: np.ndarray,
                     j_max: int) -> dict:
    """Both sides of the iterated norm inequality on the discrete profile.

    Everything is evaluated in log space so the huge exponents of the later
    rungs cannot overflow; a rung whose norms still leave the floating range
    truncates the chain with a note instead of reporting garbage.
    """
    if not 1 <= j_max <= 5:
        raise ValueError("need 1 <= j_max <= 5; the exponents grow "
                         "geometrically")
    two_star = critical_exponent(spec.dim)
    mc = moser_constants(spec, grid.lp_norm(u, two_star))
    sigma = mc.sigma
    v = np.maximum(np.asarray(u, dtype=float) - spec.a2, 0.0)

    rungs = []
    note = ""
    for j in range(1, j_max + 1):
        q_now = two_star * sigma ** j
        q_prev = two_star * sigma ** (j - 1)
        n_now = grid.lp_norm(v, q_now)
        n_prev = grid.lp_norm(v, q_prev)
        if n_now == 0.0:
            rungs.append({"j": j, "ratio": math.inf, "passed": True,
                          "exponent": q_now})
            continue
        if not (math.isfinite(n_now) and math.isfinite(n_prev)) \
                or n_now > 1e300 or n_prev > 1e300:
            note = f"chain truncated at j = {j}: norm left the floating range"
            break
        log_lhs = 2.0 * sigma ** j * math.log(n_now)
        log_front = 2.0 * j * math.log(sigma) - math.log(mc.sobolev) \
            + math.log(mc.a3 + mc.a4)
        log_sum = 2.0 * sigma ** j * math.log(n_prev) + math.log1p(1.0 / n_prev)
        log_ratio = log_front + log_sum - log_lhs
        ratio = math.exp(log_ratio) if log_ratio < 700.0 else math.inf
        rungs.append({"j": j, "ratio": ratio,
                      "passed": bool(ratio >= 1.0 - 1e-6),
                      "exponent": q_now})
    return {"rungs": rungs,
            "passed": bool(rungs) and all(r["passed"] for r in rungs),
            "note": note, "sigma": sigma,
            "constants": {"a3": mc.a3, "a4": mc.a4, "S": mc.sobolev}}


# ---------------------------------------------------------------------------
# amplitude sweeps
# ---------------------------------------------------------------------------


def trend_verdict(ratios) -> str:
    """Finite-window trend of the tail-coefficient ratios.

    "unbounded" needs the second half non-decreasing with the last ratio
    strictly above the first and equal to the running maximum; anything
    else reads "bounded". A finite window can never decide the analytic
    limit, so this is a trend statement only.
    """
    ratios = [float(x) for x in ratios]
    if not ratios:
        raise ValueError("need at least one ratio")
    half = ratios[len(ratios) // 2:]
    rising = all(b >= a for a, b in zip(half[:-1], half[1:]))
    if rising and ratios[-1] > ratios[0] and ratios[-1] == max(ratios):
        return "unbounded"
    return "bounded"


def sweep_check(pairs, spec: ProblemSpec, shell_count: int = None,
                grid: RadialGrid = None) -> dict:
    """Ratio trend and per-pair threshold comparison for (R_j, Lambda_j).

    The unbounded-limit condition is undecidable on a finite window, so the
    verdict is a trend statement over the given pairs, never a claim about
    the analytic condition itself.
    """
    pairs = [(float(r), float(lam)) for r, lam in pairs]
    if not pairs:
        raise ValueError("need at least one (R, Lambda) pair")
    radii = [r for r, _ in pairs]
    if any(b <= a for a, b in zip(radii[:-1], radii[1:])):
        raise ValueError("the radii R_j must be strictly increasing")
    if spec.bump_radius >= radii[0]:
        raise ValueError(
            f"the profile ball (radius {spec.bump_radius:g}) must fit inside "
            f"the smallest sweep radius {radii[0]:g}; the superlinearity "
            "region does not scale with the sweep")

    exponent = (spec.dim - 2.0) * (spec.q - 2.0)
    ratios = [lam / r ** exponent for r, lam in pairs]
    verdict = trend_verdict(ratios)

    records = [sweep_pair_record(spec, radius, lam,
                                 shell_count=shell_count, grid=grid)
               for radius, lam in pairs]
    return {"pairs": records, "ratios": ratios, "verdict": verdict,
            "R_exponent": exponent}


def sweep_pair_record(spec: ProblemSpec, radius: float, lam: float,
                      shell_count: int = None,
                      grid: RadialGrid = None) -> dict:
    """Threshold comparison for one (R, Lambda) pair of a sweep."""
    exponent = (spec.dim - 2.0) * (spec.q - 2.0)
    spec_j = replace(spec, splice_radius=radius, lam=lam)
    _, _, th_j = apriori_chain(spec_j)
    rec = {"R": radius, "lam": lam,
           "ratio": lam / radius ** exponent,
           "lambda_star": th_j.lambda_star,
           "admissible": bool(lam >= th_j.lambda_star)}
    if shell_count is not None:
        if grid is None:
            raise ValueError("shell_count needs a grid for resolution "
                             "checks")
        _, _, lam_star_l = multi_bump_D_l(spec_j, shell_count, grid)
        rec["lambda_star_l"] = lam_star_l
        rec["admissible_l"] = bool(lam >= lam_star_l)
    return rec


# ---------------------------------------------------------------------------
# assembled report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertificateReport:
    checks: tuple
    verdict: str
    moser: MoserConstants
    bounds: EnergyBounds
    thresholds: Thresholds
    diagnostic: dict
    notes: tuple = ()

    def check(self, name: str) -> CheckRecord:
        for rec in self.checks:
            if rec.name == name:
                return rec
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(rec.passed for rec in self.checks)


def certificate_report(grid: RadialGrid, spec: ProblemSpec, u: np.ndarray,
                       *, j_max: int = 4,
                       bump: RadialBump = None) -> CertificateReport:
    """Run the full certificate chain on a computed profile.

    The verdict is "solves-original" exactly when the tail consistency check
    passes (the clamp never engages on u), since the other inequalities hold
    for any solution of the spliced problem; everything is still recorded so
    a failed certificate shows where the chain broke.
    """
    two_star = critical_exponent(spec.dim)
    pen = PenalizedNonlinearity(spec)
    bounds, hat_m, th = apriori_chain(spec, bump)
    u = np.asarray(u, dtype=float)

    mc_u = moser_constants(spec, grid.lp_norm(u, two_star))
    sup_u = grid.lp_norm(u, math.inf)
    sup_rec = CheckRecord(
        name="sup-bound",
        passed=bool(sup_u <= mc_u.bound * (1.0 + 1e-6)),
        margin=float(mc_u.bound - sup_u),
        constants={"sup": sup_u, "M": mc_u.bound,
                   "u_norm_2star": mc_u.u_norm_2star},
        provenance="moser_constants/sup-bound",
    )
    checks = [
        check_norm_bound(grid, spec, u, bounds),
        sup_rec,
        check_decay(grid, u, mc_u.bound, spec.splice_radius),
        check_consistency(grid, spec, pen, u),
    ]
    diagnostic = moser_diagnostic(grid, spec, u, j_max)

    notes = []
    if diagnostic["note"]:
        notes.append(diagnostic["note"])
    consistency = checks[-1]
    verdict = "solves-original" if consistency.passed else "penalized-only"
    return CertificateReport(checks=tuple(checks), verdict=verdict,
                             moser=mc_u, bounds=bounds, thresholds=th,
                             diagnostic=diagnostic, notes=tuple(notes))
