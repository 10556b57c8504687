"""Decision rules: five builtins plus the constructed optimal rule.

Every procedure here shares one geometric fact that the evaluation code
exploits: for each fixed z1, the set of z2 values where hypothesis k is
rejected is a downward ray ``{z2 <= cut_k(z1)}`` (possibly empty or the
whole line).  Probabilities of rejection events therefore reduce to a
one-dimensional outer integral of ``pdf(z1) * cdf(cut(z1))`` with the
inner integral done in closed form; `region_mass` below implements this
for arbitrary bivariate-normal evaluation models, and
`region_symmetric_difference` compares two procedures' decision maps
under the null measure the same way.

Rules (p-space, one-sided, level alpha):

- bonferroni:       reject k iff p_k <= alpha/2
- hommel:           reject k iff p_k <= alpha/2 or max(p1, p2) <= alpha
- closed_stouffer:  reject k iff p_k <= alpha and z1 + z2 <= sqrt(2) za
- bittman:          closed_stouffer with the z-sum threshold re-solved
                    so the boundary-null rejection probability is
                    exactly alpha (the consonant sharpening)
- fixed_sequence:   test H1 at alpha; only if rejected, test H2 at alpha
- omt:              reject k iff p_k <= alpha and s(p) > t, with the
                    threshold t solved so the global-null rejection
                    probability is exactly alpha

The omt threshold is solved by bisection on log(t): the score spans
hundreds of orders of magnitude across the domain for strong shifts,
so a linear-scale bracket is numerically useless, while the null mass
is smooth and strictly monotone in log(t) on the relevant range.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ToleranceNotMet
from .gauss import AlternativeModel, clamp_pvalue, std_normal_quantile
from .numerics import QuadratureConfig, Z_RANGE, bisect, panel_nodes
from .objective import ObjectiveSpec, score_z

__all__ = [
    "Decision", "Procedure", "bonferroni", "hommel", "closed_stouffer",
    "fixed_sequence", "build_bittman", "build_omt",
    "hommel_coincidence_bound", "region_mass", "region_symmetric_difference",
    "RegionGrid", "export_region",
]


@dataclass(frozen=True)
class Decision:
    """Reject/retain verdict for the two hypotheses."""

    d1: bool
    d2: bool

    @property
    def any(self) -> bool:
        return self.d1 or self.d2

    @property
    def both(self) -> bool:
        return self.d1 and self.d2

    def as_tuple(self) -> tuple[bool, bool]:
        return (self.d1, self.d2)


def _check_alpha(alpha: float) -> float:
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha <= 0.5):
        raise DomainError(f"alpha must be in (0, 0.5], got {alpha!r}")
    return float(alpha)


@dataclass(frozen=True)
class Procedure:
    """A level-alpha decision rule p -> (d1, d2).

    kind is one of bonferroni / hommel / closed_stouffer / bittman /
    fixed_sequence / omt.  Sum-rule kinds carry the z-sum threshold in
    ``t_sum``; the omt kind carries its ObjectiveSpec and solved score
    threshold ``t_score``.
    """

    kind: str
    alpha: float
    t_sum: float | None = None
    spec: ObjectiveSpec | None = field(default=None, repr=False)
    t_score: float | None = None

    # -- scalar decisions ------------------------------------------------
    def decide(self, p: tuple[float, float]) -> Decision:
        p1 = clamp_pvalue(p[0])
        p2 = clamp_pvalue(p[1])
        z1 = std_normal_quantile(p1)
        z2 = std_normal_quantile(p2)
        d1, d2 = self.decide_z(np.array([z1]), np.array([z2]))
        return Decision(bool(d1[0]), bool(d2[0]))

    # -- vectorized decisions on z-scores ---------------------------------
    def decide_z(self, z1: np.ndarray, z2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        za = std_normal_quantile(self.alpha)
        zh = std_normal_quantile(self.alpha / 2.0)
        in1 = z1 <= za
        in2 = z2 <= za
        if self.kind == "bonferroni":
            return z1 <= zh, z2 <= zh
        if self.kind == "hommel":
            both = in1 & in2
            return (z1 <= zh) | both, (z2 <= zh) | both
        if self.kind in ("closed_stouffer", "bittman"):
            low = (z1 + z2) <= self.t_sum
            return in1 & low, in2 & low
        if self.kind == "fixed_sequence":
            return in1, in1 & in2
        if self.kind == "omt":
            keep = score_z(self.spec, z1, z2) > self.t_score
            return in1 & keep, in2 & keep
        raise DomainError(f"unknown procedure kind {self.kind!r}")

    # -- column geometry ---------------------------------------------------
    def column_cuts(self, z1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-column rejection rays: (cut1, cut2) with D_k = {z2 <= cut_k}.

        +inf marks a column where the hypothesis is rejected for every
        z2, -inf a column where it is never rejected.
        """
        z1 = np.asarray(z1, dtype=float)
        za = std_normal_quantile(self.alpha)
        zh = std_normal_quantile(self.alpha / 2.0)
        inf = np.inf
        if self.kind == "bonferroni":
            c1 = np.where(z1 <= zh, inf, -inf)
            c2 = np.full_like(z1, zh)
            return c1, c2
        if self.kind == "hommel":
            c1 = np.where(z1 <= zh, inf, np.where(z1 <= za, za, -inf))
            c2 = np.where(z1 <= za, za, zh)
            return c1, c2
        if self.kind in ("closed_stouffer", "bittman"):
            c1 = np.where(z1 <= za, self.t_sum - z1, -inf)
            c2 = np.minimum(za, self.t_sum - z1)
            return c1, c2
        if self.kind == "fixed_sequence":
            c1 = np.where(z1 <= za, inf, -inf)
            c2 = np.where(z1 <= za, za, -inf)
            return c1, c2
        if self.kind == "omt":
            cut = _omt_union_cut(self.spec, self.t_score, z1)
            c1 = np.where(z1 <= za, cut, -inf)
            c2 = np.minimum(cut, za)
            return c1, c2
        raise DomainError(f"unknown procedure kind {self.kind!r}")

    def z_breakpoints(self) -> list[float]:
        """z1 values where the column cuts kink or jump (panel splits)."""
        za = std_normal_quantile(self.alpha)
        zh = std_normal_quantile(self.alpha / 2.0)
        if self.kind in ("closed_stouffer", "bittman"):
            return [za, self.t_sum - za]
        if self.kind == "omt":
            return [za, *(k for k in _omt_kinks(self.spec, self.t_score))]
        return [za, zh]

    def describe(self) -> str:
        if self.kind in ("closed_stouffer", "bittman"):
            return f"{self.kind}(alpha={self.alpha:g}, t_sum={self.t_sum:.6g})"
        if self.kind == "omt":
            w = self.spec.weights
            return (f"omt(alpha={self.alpha:g}, weights=({w[0]:.6g},{w[1]:.6g},"
                    f"{w[2]:.6g}), theta=({self.spec.model.theta1:.6g},"
                    f"{self.spec.model.theta2:.6g}), t={self.t_score:.6g})")
        return f"{self.kind}(alpha={self.alpha:g})"


def bonferroni(alpha: float) -> Procedure:
    return Procedure("bonferroni", _check_alpha(alpha))


def hommel(alpha: float) -> Procedure:
    return Procedure("hommel", _check_alpha(alpha))


def closed_stouffer(alpha: float) -> Procedure:
    a = _check_alpha(alpha)
    return Procedure("closed_stouffer", a,
                     t_sum=math.sqrt(2.0) * std_normal_quantile(a))


def fixed_sequence(alpha: float) -> Procedure:
    return Procedure("fixed_sequence", _check_alpha(alpha))


def hommel_coincidence_bound(alpha: float) -> float:
    """Shift below which the optimal one-false-null rule stops matching
    hommel: -log(2) / (quantile(alpha) - quantile(alpha/2))."""
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha must be in (0, 0.5), got {alpha!r}")
    za = std_normal_quantile(alpha)
    zh = std_normal_quantile(alpha / 2.0)
    return -math.log(2.0) / (za - zh)


# ----------------------------------------------------------------------
# Ray-mass evaluation
# ----------------------------------------------------------------------

def region_mass(proc: Procedure, which: str,
                model: AlternativeModel | None,
                cfg: QuadratureConfig) -> float:
    """Probability of a rejection event under an evaluation model.

    which: "d1", "d2", "any" (union), or "both".  model=None means the
    global null.  The inner z2 integral is the exact conditional normal
    CDF at the column cut; the outer integral uses Gauss-Legendre panels
    split at the procedure's breakpoints.
    """
    if model is None:
        model = AlternativeModel(0.0, 0.0, 0.0)
    m1, m2, rho = model.theta1, model.theta2, model.rho
    s_cond = math.sqrt(1.0 - rho * rho)
    za = std_normal_quantile(proc.alpha)

    lo = min(m1 - Z_RANGE, za - 1.0)
    hi = max(m1 + Z_RANGE, za + 1.0)
    z1, w = panel_nodes(lo, hi, proc.z_breakpoints(),
                        cfg.panels_per_axis, cfg.nodes_per_panel)
    c1, c2 = proc.column_cuts(z1)
    if which == "d1":
        cut = c1
    elif which == "d2":
        cut = c2
    elif which == "any":
        cut = np.maximum(c1, c2)
    elif which == "both":
        cut = np.minimum(c1, c2)
    else:
        raise DomainError(f"which must be d1/d2/any/both, got {which!r}")
    cond_mean = m2 + rho * (z1 - m1)
    inner = np.where(np.isposinf(cut), 1.0,
                     np.where(np.isneginf(cut), 0.0,
                              ndtr((np.where(np.isfinite(cut), cut, 0.0)
                                    - cond_mean) / s_cond)))
    pdf1 = np.exp(-0.5 * (z1 - m1) ** 2) / math.sqrt(2.0 * math.pi)
    return float(np.sum(w * pdf1 * inner))


def region_symmetric_difference(pa: Procedure, pb: Procedure,
                                cfg: QuadratureConfig) -> float:
    """Null measure of the set where the two decision maps disagree.

    Per column the disagreement set is the union of at most two
    intervals (one per hypothesis); its null mass is computed exactly
    and integrated over z1.
    """
    lo, hi = -Z_RANGE - 4.0, Z_RANGE
    breaks = pa.z_breakpoints() + pb.z_breakpoints()
    z1, w = panel_nodes(lo, hi, breaks, 2 * cfg.panels_per_axis,
                        cfg.nodes_per_panel)
    a1, a2 = pa.column_cuts(z1)
    b1, b2 = pb.column_cuts(z1)

    lo1, hi1 = np.minimum(a1, b1), np.maximum(a1, b1)
    lo2, hi2 = np.minimum(a2, b2), np.maximum(a2, b2)

    def cdf(x):
        return np.where(np.isposinf(x), 1.0,
                        np.where(np.isneginf(x), 0.0,
                                 ndtr(np.where(np.isfinite(x), x, 0.0))))

    mass = (cdf(hi1) - cdf(lo1)) + (cdf(hi2) - cdf(lo2))
    olo = np.maximum(lo1, lo2)
    ohi = np.minimum(hi1, hi2)
    mass = mass - np.where(ohi > olo, cdf(ohi) - cdf(olo), 0.0)
    pdf1 = np.exp(-0.5 * z1 * z1) / math.sqrt(2.0 * math.pi)
    return float(np.sum(w * pdf1 * mass))


# ----------------------------------------------------------------------
# Bittman construction: recalibrated z-sum threshold
# ----------------------------------------------------------------------

def build_bittman(alpha: float, cfg: QuadratureConfig | None = None) -> Procedure:
    """Consonant sharpening of closed-Stouffer.

    Solves P0(z1 + z2 <= t, min(z1, z2) <= quantile(alpha)) = alpha and
    returns the sum-rule procedure at that threshold; the solution is
    strictly above sqrt(2)*quantile(alpha) for alpha < 0.5.
    """
    a = _check_alpha(alpha)
    cfg = cfg or QuadratureConfig()
    za = std_normal_quantile(a)
    lo = math.sqrt(2.0) * za

    def null_mass(t: float) -> float:
        return region_mass(Procedure("bittman", a, t_sum=t), "any", None, cfg)

    hi = 0.0 if a < 0.5 else 1.0
    while null_mass(hi) < a:
        hi += 1.0
        if hi > 40.0:
            raise ToleranceNotMet("could not bracket the z-sum threshold")
    t = bisect(lambda x: null_mass(x) - a, lo, hi, tol=min(cfg.abs_tol, 1e-10))
    if t < lo - 1e-9:
        raise ToleranceNotMet("solved z-sum threshold fell below the "
                              "closed-Stouffer value")
    return Procedure("bittman", a, t_sum=t)


# ----------------------------------------------------------------------
# OMT construction: score threshold solved on the null
# ----------------------------------------------------------------------

def _omt_union_cut(spec: ObjectiveSpec, t: float, z1: np.ndarray) -> np.ndarray:
    """Column cut of {s > t} within the L-shaped domain.

    The score restricted to a column is affine in
    e2 = exp(theta2*z2 - theta2^2/2) on each piece (square / flank), so
    cuts are closed-form.  The score drops at z2 = za when the second
    indicator switches off, making the superlevel set a single ray.
    """
    w_any, w_avg, w_one = spec.weights
    t1, t2 = spec.model.theta1, spec.model.theta2
    za = std_normal_quantile(spec.alpha)
    e1 = np.exp(t1 * z1 - 0.5 * t1 * t1)
    ea2 = math.exp(t2 * za - 0.5 * t2 * t2)

    def z_of_e2(e2):
        # invert e2 = exp(t2*z - t2^2/2); e2 <= 0 encodes "no crossing"
        with np.errstate(divide="ignore", invalid="ignore"):
            return (np.log(np.where(e2 > 0, e2, 1.0)) + 0.5 * t2 * t2) / t2

    # column pieces for z1 <= za
    k1_sq = (w_any + w_avg) * e1 + 0.5 * w_one
    k0 = 0.5 * w_one * e1
    k1_fl = (w_any + 0.5 * w_avg) * e1
    s_sq_corner = k1_sq * ea2 + k0        # score as z2 -> za- (square side)
    s_fl_top = k1_fl * ea2 + k0           # score as z2 -> za+ (flank side)
    s_fl_bot = k0                          # score as z2 -> +inf

    with np.errstate(divide="ignore", invalid="ignore"):
        cut_sq = z_of_e2((t - k0) / k1_sq)
        cut_fl = np.where(k1_fl > 0,
                          z_of_e2((t - k0) / np.where(k1_fl > 0, k1_fl, 1.0)),
                          np.inf)
    cut_low = np.where(t >= s_sq_corner, cut_sq,
                       np.where(t >= s_fl_top, za,
                                np.where(t > s_fl_bot, cut_fl, np.inf)))

    # columns z1 > za: score = e2 * ((w_any + w_avg/2)*e1 + w_one/2)
    k1_r2 = (w_any + 0.5 * w_avg) * e1 + 0.5 * w_one
    with np.errstate(divide="ignore", invalid="ignore"):
        cut_r2 = z_of_e2(t / k1_r2)
    cut_high = np.where(t >= k1_r2 * ea2, cut_r2, za)

    return np.where(z1 <= za, cut_low, cut_high)


def _omt_kinks(spec: ObjectiveSpec, t: float) -> list[float]:
    """z1 locations where the union cut changes branch (all closed-form)."""
    w_any, w_avg, w_one = spec.weights
    t1, t2 = spec.model.theta1, spec.model.theta2
    za = std_normal_quantile(spec.alpha)
    ea2 = math.exp(t2 * za - 0.5 * t2 * t2)
    kinks = []

    def z_of_e1(e1):
        if e1 is None or e1 <= 0 or not math.isfinite(e1):
            return None
        return (math.log(e1) + 0.5 * t1 * t1) / t1

    den = (w_any + w_avg) * ea2 + 0.5 * w_one
    kinks.append(z_of_e1((t - 0.5 * w_one * ea2) / den) if den > 0 else None)
    den = (w_any + 0.5 * w_avg) * ea2 + 0.5 * w_one
    kinks.append(z_of_e1(t / den) if den > 0 else None)
    if w_one > 0:
        kinks.append(z_of_e1(2.0 * t / w_one))
    den = (w_any + 0.5 * w_avg) * ea2
    if den > 0 and t - 0.5 * w_one * ea2 > 0:
        kinks.append(z_of_e1((t - 0.5 * w_one * ea2) / den))
    return [k for k in kinks if k is not None]


def build_omt(spec: ObjectiveSpec, cfg: QuadratureConfig | None = None) -> Procedure:
    """Optimal procedure for the objective: score + solved threshold.

    Bisects log(t) until the global-null mass of the union region
    equals alpha within min(cfg.abs_tol, 1e-10); the mass is continuous
    and strictly decreasing in the threshold, so the solution exists
    and is unique.
    """
    cfg = cfg or QuadratureConfig()
    alpha = spec.alpha

    def null_mass_log(tau: float) -> float:
        return region_mass(Procedure("omt", alpha, spec=spec, t_score=math.exp(tau)),
                           "any", None, cfg)

    # bracket on the log scale around the corner score value
    za = std_normal_quantile(alpha)
    corner = float(score_z(spec, np.array([za]), np.array([za]))[0])
    tau_hi = math.log(corner) if corner > 0 else 0.0
    while null_mass_log(tau_hi) > alpha:
        tau_hi += 20.0
        if tau_hi > 720.0:
            raise ToleranceNotMet("threshold bracket ran away (high side)")
    tau_lo = (math.log(corner) if corner > 0 else 0.0) - 20.0
    while null_mass_log(tau_lo) < alpha:
        tau_lo -= 20.0
        if tau_lo < -720.0:
            raise ToleranceNotMet("threshold bracket ran away (low side)")

    tol = min(cfg.abs_tol, 1e-10, 0.01 * alpha)
    tau = bisect(lambda x: null_mass_log(x) - alpha, tau_lo, tau_hi, tol=tol)
    proc = Procedure("omt", alpha, spec=spec, t_score=math.exp(tau))
    resid = abs(region_mass(proc, "any", None, cfg) - alpha)
    if resid > cfg.abs_tol:
        raise ToleranceNotMet(
            f"null mass residual {resid:.3g} exceeds abs_tol={cfg.abs_tol:g}")
    return proc


# ----------------------------------------------------------------------
# Region export
# ----------------------------------------------------------------------

_CLASS_NAMES = ("none", "only1", "only2", "both")


@dataclass(frozen=True)
class RegionGrid:
    """Cell-center classification of a procedure's decisions in z-space."""

    axis: np.ndarray          # cell-edge coordinates, shared by both axes
    classes: np.ndarray       # (n, n) uint8, row-major over (z1, z2)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.axis[:-1] + self.axis[1:])

    def class_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.classes == k))
                for k, name in enumerate(_CLASS_NAMES)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("z1,z2,class\n")
        c = self.centers
        for i in range(len(c)):
            for j in range(len(c)):
                buf.write(f"{c[i]:.6g},{c[j]:.6g},"
                          f"{_CLASS_NAMES[self.classes[i, j]]}\n")
        return buf.getvalue()


def export_region(proc: Procedure, grid_size: int,
                  z_lo: float = -4.0, z_hi: float = 0.0) -> RegionGrid:
    """Classify decisions at the centers of a grid_size^2 z-grid.

    The nearest interior edges are snapped onto z = quantile(alpha) and
    z = quantile(alpha/2) so cells never straddle those rule
    boundaries.
    """
    if grid_size < 16:
        raise DomainError("grid_size must be >= 16")
    if not z_hi > z_lo:
        raise DomainError("z_hi must exceed z_lo")
    axis = np.linspace(z_lo, z_hi, grid_size + 1)
    for line in (std_normal_quantile(proc.alpha),
                 std_normal_quantile(proc.alpha / 2.0)):
        if z_lo < line < z_hi:
            k = int(np.argmin(np.abs(axis - line)))
            if 0 < k < grid_size:
                axis = axis.copy()
                axis[k] = line
    c = 0.5 * (axis[:-1] + axis[1:])
    z1g, z2g = np.meshgrid(c, c, indexing="ij")
    d1, d2 = proc.decide_z(z1g.ravel(), z2g.ravel())
    classes = (d1.astype(np.uint8) + 2 * d2.astype(np.uint8)).reshape(z1g.shape)
    return RegionGrid(axis=axis, classes=classes)
