"""Power evaluation, two-arm design mapping, and design-level searches.

Power measures for a procedure D = (d1, d2) at alternative (theta1,
theta2):

- pi_any:   P(d1 or d2) when both nulls are false
- pi_avg:   (E d1 + E d2) / 2 when both nulls are false
- pi_1:     (P_{(theta1,0)}(d1) + P_{(0,theta2)}(d2)) / 2, the expected
            true discoveries when exactly one null is false, uniform
            over which
- pi_combo: pi_any/3 + 2*pi_1/3

The two-arm trial model assigns a group of n persons to control/treated
arms (odd remainder to control) and maps event rates to the mean shift
of the one-sided unpooled z-statistic.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import DegenerateVariance, DomainError, Unachievable
from .gauss import AlternativeModel, std_normal_cdf, std_normal_quantile
from .numerics import McConfig, QuadratureConfig, mc_estimate
from .objective import ObjectiveSpec
from .procedures import Procedure, build_omt, hommel, region_mass

__all__ = [
    "PowerReport", "TwoArmDesign", "AllocationResult", "SavingsReport",
    "MEASURES", "theta_from_design", "observed_pvalue",
    "theta_from_marginal_power", "evaluate_power", "fwer_global",
    "mc_power", "allocation_search", "required_n_for_power", "savings_report",
]

MEASURES = ("pi_avg", "pi_any", "pi_1", "pi_combo")


@dataclass(frozen=True)
class PowerReport:
    """The four power measures of one procedure at one alternative."""

    pi_avg: float
    pi_any: float
    pi_1: float
    pi_combo: float

    def __post_init__(self):
        for m in MEASURES:
            v = getattr(self, m)
            if not -1e-9 <= v <= 1.0 + 1e-9:
                raise DomainError(f"{m}={v!r} outside [0, 1]")

    def get(self, measure: str) -> float:
        if measure not in MEASURES:
            raise DomainError(f"unknown measure {measure!r}")
        return getattr(self, measure)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("measure,value\n")
        for m in MEASURES:
            buf.write(f"{m},{getattr(self, m):.4f}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class TwoArmDesign:
    """Event rates and per-arm sample sizes of a two-proportion trial."""

    rate_control: float
    rate_treat: float
    n_control: int
    n_treat: int

    def __post_init__(self):
        for name in ("rate_control", "rate_treat"):
            r = getattr(self, name)
            if not 0.0 < r < 1.0:
                raise DomainError(f"{name} must be in (0, 1), got {r!r}")
        for name in ("n_control", "n_treat"):
            n = getattr(self, name)
            if not (isinstance(n, int) and n >= 1):
                raise DomainError(f"{name} must be a positive integer, got {n!r}")


def theta_from_design(d: TwoArmDesign) -> float:
    """Mean shift of the one-sided z-statistic under the design.

    (rate_treat - rate_control) / sqrt(rc*(1-rc)/nc + rt*(1-rt)/nt),
    unpooled variances.
    """
    var = (d.rate_control * (1 - d.rate_control) / d.n_control
           + d.rate_treat * (1 - d.rate_treat) / d.n_treat)
    return (d.rate_treat - d.rate_control) / math.sqrt(var)


def observed_pvalue(events_control: int, n_control: int,
                    events_treat: int, n_treat: int) -> float:
    """One-sided p-value for observed counts, unpooled normal approximation."""
    for ev, n, tag in ((events_control, n_control, "control"),
                       (events_treat, n_treat, "treat")):
        if not (isinstance(n, int) and n >= 1):
            raise DomainError(f"n_{tag} must be a positive integer, got {n!r}")
        if not (isinstance(ev, int) and 0 <= ev <= n):
            raise DomainError(f"events_{tag}={ev!r} outside [0, {n}]")
    pc = events_control / n_control
    pt = events_treat / n_treat
    if pc in (0.0, 1.0) or pt in (0.0, 1.0):
        raise DegenerateVariance("observed proportion of 0 or 1 leaves the "
                                 "z-statistic undefined")
    var = pc * (1 - pc) / n_control + pt * (1 - pt) / n_treat
    z = (pt - pc) / math.sqrt(var)
    return float(std_normal_cdf(z))


def theta_from_marginal_power(beta: float, alpha: float) -> float:
    """Shift giving single-test power beta at one-sided level alpha."""
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha must be in (0, 0.5), got {alpha!r}")
    if not alpha <= beta < 1.0:
        raise DomainError(f"beta must be in [alpha, 1), got {beta!r}")
    return std_normal_quantile(alpha) - std_normal_quantile(beta)


def split_arms(n_persons: int) -> tuple[int, int]:
    """(control, treated) arm sizes for one group; odd remainder to control."""
    half = n_persons // 2
    return n_persons - half, half


def theta_for_group(n_persons: int, rate_control: float, rate_treat: float) -> float:
    """Design shift of one group of n persons split evenly into two arms."""
    nc, nt = split_arms(n_persons)
    return theta_from_design(TwoArmDesign(rate_control, rate_treat, nc, nt))


# ----------------------------------------------------------------------
# Power evaluation
# ----------------------------------------------------------------------

def _semi_null(model: AlternativeModel, which: int) -> AlternativeModel:
    if which == 1:
        return AlternativeModel(model.theta1, 0.0, model.rho)
    return AlternativeModel(0.0, model.theta2, model.rho)


def evaluate_power(proc: Procedure, model: AlternativeModel,
                   cfg: QuadratureConfig | None = None) -> PowerReport:
    """Deterministic quadrature evaluation of the four power measures."""
    cfg = cfg or QuadratureConfig()
    pd1 = region_mass(proc, "d1", model, cfg)
    pd2 = region_mass(proc, "d2", model, cfg)
    pany = region_mass(proc, "any", model, cfg)
    p1_semi = region_mass(proc, "d1", _semi_null(model, 1), cfg)
    p2_semi = region_mass(proc, "d2", _semi_null(model, 2), cfg)
    pi_1 = 0.5 * (p1_semi + p2_semi)
    return PowerReport(pi_avg=0.5 * (pd1 + pd2), pi_any=pany, pi_1=pi_1,
                       pi_combo=pany / 3.0 + 2.0 * pi_1 / 3.0)


def fwer_global(proc: Procedure, rho: float = 0.0,
                cfg: QuadratureConfig | None = None) -> float:
    """Global-null probability of any rejection."""
    cfg = cfg or QuadratureConfig()
    return region_mass(proc, "any", AlternativeModel(0.0, 0.0, rho), cfg)


def mc_power(proc: Procedure, model: AlternativeModel,
             cfg: McConfig) -> dict[str, tuple[float, float]]:
    """Monte Carlo oracle for the same four measures: (mean, SE) each.

    pi_1 combines two semi-null runs that share the underlying normal
    draws; its SE uses the triangle inequality, which is conservative.
    """
    def ev_any(z1, z2):
        d1, d2 = proc.decide_z(z1, z2)
        return d1 | d2

    def ev_avg(z1, z2):
        d1, d2 = proc.decide_z(z1, z2)
        return 0.5 * (d1.astype(float) + d2.astype(float))

    def ev_d1(z1, z2):
        return proc.decide_z(z1, z2)[0]

    def ev_d2(z1, z2):
        return proc.decide_z(z1, z2)[1]

    pany, se_any = mc_estimate(ev_any, model, cfg)
    pavg, se_avg = mc_estimate(ev_avg, model, cfg)
    m1, se1 = mc_estimate(ev_d1, _semi_null(model, 1), cfg)
    m2, se2 = mc_estimate(ev_d2, _semi_null(model, 2), cfg)
    pi_1 = 0.5 * (m1 + m2)
    se_1 = 0.5 * (se1 + se2)
    return {
        "pi_any": (pany, se_any),
        "pi_avg": (pavg, se_avg),
        "pi_1": (pi_1, se_1),
        "pi_combo": (pany / 3.0 + 2.0 * pi_1 / 3.0, se_any / 3.0 + 2.0 * se_1 / 3.0),
    }


# ----------------------------------------------------------------------
# Allocation search
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AllocationResult:
    """Power of the objective's optimal rule across allocation splits."""

    r_grid: tuple[float, ...]
    reports: tuple[PowerReport, ...]
    argmax: dict[str, float]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,pi_avg,pi_any,pi_1,pi_combo\n")
        for r, rep in zip(self.r_grid, self.reports):
            buf.write(f"{r:g},{rep.pi_avg:.4f},{rep.pi_any:.4f},"
                      f"{rep.pi_1:.4f},{rep.pi_combo:.4f}\n")
        return buf.getvalue()


def _single_hypothesis_report(theta_funded: float, alpha: float) -> PowerReport:
    """Degenerate split: one funded group tested alone at level alpha.

    The unfunded hypothesis is a true null and its rejections never
    count as true discoveries.
    """
    beta = float(std_normal_cdf(std_normal_quantile(alpha) - theta_funded))
    return PowerReport(pi_avg=0.5 * beta, pi_any=beta, pi_1=0.5 * beta,
                       pi_combo=beta / 3.0 + beta / 3.0)


def allocation_search(n_total: int, weights: tuple[float, float, float],
                      rate_control: float, rate_treat: float,
                      r_grid: Sequence[float], alpha: float,
                      cfg: QuadratureConfig | None = None) -> AllocationResult:
    """Rebuild and evaluate the objective's optimal rule per split.

    Split r funds round(r * n_total) persons for the first group and
    the rest for the second; r in {0, 1} degenerates to testing the
    funded group alone at full level alpha.
    """
    cfg = cfg or QuadratureConfig()
    if not r_grid:
        raise DomainError("r_grid must be nonempty")
    grid = sorted(float(r) for r in r_grid)
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise DomainError("allocation splits must lie in [0, 1]")
    reports = []
    for r in grid:
        n1 = int(round(r * n_total))
        n2 = n_total - n1
        if n1 == 0 or n2 == 0:
            reports.append(_single_hypothesis_report(
                theta_for_group(max(n1, n2), rate_control, rate_treat), alpha))
            continue
        th1 = theta_for_group(n1, rate_control, rate_treat)
        th2 = theta_for_group(n2, rate_control, rate_treat)
        spec = ObjectiveSpec(*weights, AlternativeModel(th1, th2, 0.0), alpha)
        proc = build_omt(spec, cfg)
        reports.append(evaluate_power(proc, spec.model, cfg))
    argmax = {}
    for m in MEASURES:
        vals = [rep.get(m) for rep in reports]
        argmax[m] = grid[max(range(len(grid)), key=vals.__getitem__)]
    return AllocationResult(tuple(grid), tuple(reports), argmax)


# ----------------------------------------------------------------------
# Sample-size search and savings
# ----------------------------------------------------------------------

def required_n_for_power(power_of_n: Callable[[int], float], target: float,
                         n_lo: int = 4, n_cap: int = 200_000) -> int:
    """Smallest integer N with power_of_n(N) >= target.

    Requires power nondecreasing in N.  Bisection on the integer grid,
    then a local downward scan to pin the minimum; Unachievable if the
    cap does not reach the target.
    """
    if not 0.0 <= target < 1.0:
        if target >= 1.0:
            raise Unachievable("power strictly below 1 for any finite N")
        raise DomainError(f"target must be in [0, 1), got {target!r}")
    if power_of_n(n_lo) >= target:
        return n_lo
    if power_of_n(n_cap) < target:
        raise Unachievable(f"target {target:.4f} not reached by N={n_cap}")
    lo, hi = n_lo, n_cap
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if power_of_n(mid) >= target:
            hi = mid
        else:
            lo = mid
    while hi - 1 > n_lo and power_of_n(hi - 1) >= target:
        hi -= 1
    return hi


@dataclass(frozen=True)
class SavingsReport:
    measure: str
    n_reference: int
    optimal_power: float
    reference_power: float
    n_required: int
    saving_pct: float


def savings_report(measure: str, weights: tuple[float, float, float],
                   n_reference: int, theta_of_n: Callable[[int], float],
                   alpha: float, cfg: QuadratureConfig | None = None,
                   baseline: Procedure | None = None,
                   n_cap: int = 200_000) -> SavingsReport:
    """Sample-size saving of the optimal rule over a baseline (hommel).

    Computes the optimal rule's power for ``measure`` at the reference
    size, finds the smallest N at which the baseline matches it under
    the same exchangeable calibration theta_of_n, and reports the
    relative saving (N_required - n_reference) / N_required * 100.
    """
    cfg = cfg or QuadratureConfig()
    baseline = baseline or hommel(alpha)
    th_ref = theta_of_n(n_reference)
    spec = ObjectiveSpec(*weights, AlternativeModel(th_ref, th_ref, 0.0), alpha)
    opt = build_omt(spec, cfg)
    target = evaluate_power(opt, spec.model, cfg).get(measure)

    def baseline_power(n: int) -> float:
        th = theta_of_n(n)
        return evaluate_power(baseline, AlternativeModel(th, th, 0.0), cfg).get(measure)

    ref_power = baseline_power(n_reference)
    n_req = required_n_for_power(baseline_power, target,
                                 n_lo=max(4, n_reference // 4), n_cap=n_cap)
    saving = (n_req - n_reference) / n_req * 100.0
    return SavingsReport(measure=measure, n_reference=n_reference,
                         optimal_power=target, reference_power=ref_power,
                         n_required=n_req, saving_pct=saving)
