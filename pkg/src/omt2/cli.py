"""Command-line surface: regions, power tables, allocation, savings.

Subcommands
-----------
region    write a rejection-region grid as CSV and print a summary
power     print a measure x procedure power matrix (optionally with a
          Monte Carlo cross-check)
allocate  power of the optimal rule across sample-allocation splits
apex      the built-in two-population worked example: observed
          p-values, calibrated shifts, per-procedure decisions and a
          power matrix
savings   sample-size saving of the optimal rule over a baseline

Configuration is ``key = value`` lines (# comments allowed); flags
override file values and unknown keys are errors.  ``--dump-config``
prints the fully resolved configuration and exits; feeding that file
back via ``--config`` reproduces the run byte-for-byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 unachievable target.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .errors import (ConfigError, DegenerateVariance, DomainError,
                     MaxIterations, NoBracket, Omt2Error, ToleranceNotMet,
                     Unachievable, UnsupportedModel)
from .gauss import AlternativeModel
from .numerics import McConfig, QuadratureConfig
from .objective import ObjectiveSpec
from .power_design import (MEASURES, allocation_search, evaluate_power,
                           fwer_global, mc_power, observed_pvalue,
                           savings_report, theta_for_group, theta_from_design,
                           theta_from_marginal_power, TwoArmDesign)
from .procedures import (Procedure, bonferroni, build_bittman, build_omt,
                         closed_stouffer, export_region, fixed_sequence,
                         hommel)

QUAD_PROFILE_ENV = "OMT2_QUAD_PROFILE"

_PROFILES = {
    "coarse": QuadratureConfig(panels_per_axis=12, nodes_per_panel=8, abs_tol=1e-6),
    "default": QuadratureConfig(),
    "fine": QuadratureConfig(panels_per_axis=48, nodes_per_panel=16, abs_tol=1e-10),
}

_OBJECTIVES = {
    "pi_any": (1.0, 0.0, 0.0),
    "pi_avg": (0.0, 1.0, 0.0),
    "pi1": (0.0, 0.0, 1.0),
    "pi_1": (0.0, 0.0, 1.0),
    "combo": (1.0 / 3.0, 0.0, 2.0 / 3.0),
}

_BUILTIN_PROCS = ("hommel", "closed_stouffer", "bittman", "fixed_sequence",
                  "bonferroni")

# APEX-style default counts: (events_control, n_control, events_treat, n_treat)
_DEFAULT_COUNTS = {1: (166, 1956, 132, 1914), 2: (57, 1218, 33, 1198)}
_DEFAULT_RATES = (0.075, 0.04875)


# ----------------------------------------------------------------------
# config resolution
# ----------------------------------------------------------------------

def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def read_config_file(path: str, known: dict[str, type]) -> dict:
    """Parse a line-oriented key = value file against a key registry."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        typ = known[key]
        try:
            out[key] = _parse_bool(val) if typ is bool else typ(val)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


def resolve(args: argparse.Namespace, keys: dict[str, type],
            defaults: dict) -> dict:
    """Merge flag values over config-file values over defaults."""
    file_vals = {}
    if getattr(args, "config", None):
        file_vals = read_config_file(args.config, keys)
    cfg = {}
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in file_vals:
            cfg[key] = file_vals[key]
        else:
            cfg[key] = defaults.get(key)
    return cfg


def dump_config(cfg: dict, stream) -> None:
    for key in sorted(cfg):
        val = cfg[key]
        if val is None:
            continue
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = repr(val)
        stream.write(f"{key} = {val}\n")


def quad_config(profile: str | None) -> QuadratureConfig:
    name = profile or os.environ.get(QUAD_PROFILE_ENV, "default")
    if name not in _PROFILES:
        raise ConfigError(f"unknown quadrature profile {name!r} "
                          f"(choose from {sorted(_PROFILES)})")
    return _PROFILES[name]


def _objective_weights(name: str) -> tuple[float, float, float]:
    if name not in _OBJECTIVES:
        raise ConfigError(f"unknown objective {name!r} "
                          f"(choose from {sorted(set(_OBJECTIVES))})")
    return _OBJECTIVES[name]


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join(missing)}")


def _build_procedure(kind: str, alpha: float, objective: str | None,
                     theta1: float | None, theta2: float | None,
                     qcfg: QuadratureConfig) -> Procedure:
    if kind == "hommel":
        return hommel(alpha)
    if kind == "closed_stouffer":
        return closed_stouffer(alpha)
    if kind == "bonferroni":
        return bonferroni(alpha)
    if kind == "fixed_sequence":
        return fixed_sequence(alpha)
    if kind == "bittman":
        return build_bittman(alpha, qcfg)
    if kind == "omt":
        if objective is None or theta1 is None or theta2 is None:
            raise ConfigError("omt needs --objective, --theta1 and --theta2")
        w = _objective_weights(objective)
        spec = ObjectiveSpec(*w, AlternativeModel(theta1, theta2, 0.0), alpha)
        return build_omt(spec, qcfg)
    raise ConfigError(f"unknown procedure {kind!r}")


def _write_out(path: str, text: str, stream) -> None:
    if path == "-":
        stream.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

_REGION_KEYS = {"proc": str, "objective": str, "alpha": float, "theta1": float,
                "theta2": float, "grid": int, "z_lo": float, "z_hi": float,
                "out": str, "quad_profile": str}
_REGION_DEFAULTS = {"proc": "hommel", "alpha": 0.025, "grid": 256,
                    "z_lo": -4.0, "z_hi": 0.0, "out": "region.csv"}


def cmd_region(args, out_stream) -> int:
    cfg = resolve(args, _REGION_KEYS, _REGION_DEFAULTS)
    if args.dump_config:
        dump_config(cfg, out_stream)
        return 0
    qcfg = quad_config(cfg["quad_profile"])
    proc = _build_procedure(cfg["proc"], cfg["alpha"], cfg["objective"],
                            cfg["theta1"], cfg["theta2"], qcfg)
    grid = export_region(proc, cfg["grid"], cfg["z_lo"], cfg["z_hi"])
    _write_out(cfg["out"], grid.to_csv(), out_stream)
    counts = grid.class_counts()
    out_stream.write(f"procedure: {proc.describe()}\n")
    out_stream.write(f"alpha = {cfg['alpha']:.6g}\n")
    if proc.kind == "omt":
        out_stream.write(f"threshold t = {proc.t_score:.6g}\n")
    if proc.kind in ("bittman", "closed_stouffer"):
        out_stream.write(f"z-sum threshold = {proc.t_sum:.6g}\n")
    out_stream.write("cells: " + " ".join(f"{k}={v}" for k, v in counts.items())
                     + "\n")
    if cfg["out"] != "-":
        out_stream.write(f"region grid written to {cfg['out']}\n")
    return 0


_POWER_KEYS = {"procedures": str, "proc": str, "objective": str, "alpha": float,
               "theta1": float, "theta2": float, "rho": float,
               "marginal_power": float, "design_arm": int,
               "rate_control": float, "rate_treat": float, "mc": bool,
               "seed": int, "reps": int, "quad_profile": str}
_POWER_DEFAULTS = {"procedures": None, "proc": None, "alpha": 0.025,
                   "rho": 0.0, "mc": False, "seed": 20260810,
                   "reps": 1_000_000, "rate_control": _DEFAULT_RATES[0],
                   "rate_treat": _DEFAULT_RATES[1]}


def _power_columns(selector: str | None, single: str | None, alpha: float,
                   th1: float, th2: float, qcfg,
                   objective: str | None = None) -> list[tuple[str, Procedure]]:
    if single is not None:
        return [(single, _build_procedure(single, alpha, objective,
                                          th1, th2, qcfg))]
    cols: list[tuple[str, Procedure]] = []
    model = AlternativeModel(th1, th2, 0.0)

    def omt_for(name: str, label: str):
        spec = ObjectiveSpec(*_objective_weights(name), model, alpha)
        cols.append((label, build_omt(spec, qcfg)))

    omt_for("pi_avg", "omt_avg_any")
    omt_for("pi1", "omt_pi1")
    omt_for("combo", "omt_combo")
    cols.append(("closed_stouffer", closed_stouffer(alpha)))
    cols.append(("hommel", hommel(alpha)))
    if selector == "all":
        cols.append(("bittman", build_bittman(alpha, qcfg)))
        cols.append(("fixed_sequence", fixed_sequence(alpha)))
        cols.append(("bonferroni", bonferroni(alpha)))
    return cols


def cmd_power(args, out_stream) -> int:
    cfg = resolve(args, _POWER_KEYS, _POWER_DEFAULTS)
    if args.dump_config:
        dump_config(cfg, out_stream)
        return 0
    qcfg = quad_config(cfg["quad_profile"])
    alpha = cfg["alpha"]
    # calibration: direct shifts, marginal detection power, or the
    # two-proportion design at a given per-arm size
    if cfg["marginal_power"] is not None:
        th = theta_from_marginal_power(cfg["marginal_power"], alpha)
        th1 = th2 = th
    elif cfg["design_arm"] is not None:
        th = theta_from_design(TwoArmDesign(cfg["rate_control"],
                                            cfg["rate_treat"],
                                            cfg["design_arm"],
                                            cfg["design_arm"]))
        th1 = th2 = th
    else:
        _require(cfg, "theta1", "theta2")
        th1, th2 = cfg["theta1"], cfg["theta2"]
    rho = cfg["rho"]
    if cfg["procedures"] is None and cfg["proc"] is None:
        raise ConfigError("need --proc NAME or --procedures benchmark|all")
    if cfg["procedures"] not in (None, "benchmark", "all"):
        raise ConfigError("--procedures must be 'benchmark' or 'all'")
    if rho != 0.0 and (cfg["procedures"] is not None or cfg["proc"] == "omt"):
        raise ConfigError("correlated models only evaluate builtin procedures")

    null_like = (th1 == 0.0 and th2 == 0.0)
    if null_like and cfg["proc"] is not None and cfg["proc"] != "omt":
        cols = [(cfg["proc"], _build_procedure(cfg["proc"], alpha, None,
                                               None, None, qcfg))]
    else:
        cols = _power_columns(cfg["procedures"], cfg["proc"], alpha, th1, th2,
                              qcfg, objective=cfg["objective"])

    model = AlternativeModel(th1, th2, rho)
    width = max(len(name) for name, _ in cols)
    header = "measure".ljust(10) + "".join(name.rjust(width + 2) for name, _ in cols)
    out_stream.write(f"alpha = {alpha:.6g}  theta = ({th1:.6g}, {th2:.6g})"
                     f"  rho = {rho:.6g}\n")
    out_stream.write(header + "\n")
    reports = []
    for _, proc in cols:
        if null_like:
            reports.append(None)
        else:
            reports.append(evaluate_power(proc, model, qcfg))
    for m in MEASURES:
        if null_like:
            continue
        row = m.ljust(10)
        for rep in reports:
            row += f"{rep.get(m):.4f}".rjust(width + 2)
        out_stream.write(row + "\n")
    row = "fwer".ljust(10)
    for _, proc in cols:
        row += f"{fwer_global(proc, rho, qcfg):.4f}".rjust(width + 2)
    out_stream.write(row + "\n")

    if cfg["mc"]:
        mcc = McConfig(reps=cfg["reps"], seed=cfg["seed"])
        out_stream.write("monte carlo (mean, se):\n")
        for (name, proc) in cols:
            est = mc_power(proc, model, mcc)
            parts = [f"{m}={est[m][0]:.4f}(se {est[m][1]:.1e})" for m in MEASURES]
            out_stream.write(f"  {name}: " + " ".join(parts) + "\n")
    return 0


_ALLOC_KEYS = {"N": int, "grid": str, "measure": str, "alpha": float,
               "rate_control": float, "rate_treat": float, "out": str,
               "quad_profile": str}
_ALLOC_DEFAULTS = {"measure": "pi_1", "alpha": 0.025,
                   "rate_control": _DEFAULT_RATES[0],
                   "rate_treat": _DEFAULT_RATES[1], "out": "allocation.csv"}


def cmd_allocate(args, out_stream) -> int:
    cfg = resolve(args, _ALLOC_KEYS, _ALLOC_DEFAULTS)
    if args.dump_config:
        dump_config(cfg, out_stream)
        return 0
    _require(cfg, "N", "grid")
    qcfg = quad_config(cfg["quad_profile"])
    try:
        grid = [float(x) for x in cfg["grid"].split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad allocation grid {cfg['grid']!r}") from exc
    if not grid:
        raise ConfigError("allocation grid is empty")
    measure = cfg["measure"]
    if measure not in MEASURES:
        raise ConfigError(f"unknown measure {measure!r} (choose from {MEASURES})")
    weights = _objective_weights({"pi_1": "pi1", "pi_combo": "combo"}.get(measure, measure))
    result = allocation_search(cfg["N"], weights, cfg["rate_control"],
                               cfg["rate_treat"], grid, cfg["alpha"], qcfg)
    _write_out(cfg["out"], result.to_csv(), out_stream)
    out_stream.write(f"objective template: {measure}, N = {cfg['N']}\n")
    for m in MEASURES:
        out_stream.write(f"argmax[{m}] = r = {result.argmax[m]:g}\n")
    if cfg["out"] != "-":
        out_stream.write(f"allocation table written to {cfg['out']}\n")
    return 0


_APEX_KEYS = {"alpha": float, "events_control1": int, "n_control1": int,
              "events_treat1": int, "n_treat1": int, "events_control2": int,
              "n_control2": int, "events_treat2": int, "n_treat2": int,
              "rate_control": float, "rate_treat": float, "calibration": str,
              "beta": float, "skip_power": bool, "quad_profile": str}
_APEX_DEFAULTS = {"alpha": 0.025,
                  "events_control1": _DEFAULT_COUNTS[1][0],
                  "n_control1": _DEFAULT_COUNTS[1][1],
                  "events_treat1": _DEFAULT_COUNTS[1][2],
                  "n_treat1": _DEFAULT_COUNTS[1][3],
                  "events_control2": _DEFAULT_COUNTS[2][0],
                  "n_control2": _DEFAULT_COUNTS[2][1],
                  "events_treat2": _DEFAULT_COUNTS[2][2],
                  "n_treat2": _DEFAULT_COUNTS[2][3],
                  "rate_control": _DEFAULT_RATES[0],
                  "rate_treat": _DEFAULT_RATES[1],
                  "calibration": "design", "beta": 0.85, "skip_power": False}


def cmd_apex(args, out_stream) -> int:
    cfg = resolve(args, _APEX_KEYS, _APEX_DEFAULTS)
    if args.dump_config:
        dump_config(cfg, out_stream)
        return 0
    qcfg = quad_config(cfg["quad_profile"])
    alpha = cfg["alpha"]
    p_obs = []
    for g in (1, 2):
        p = observed_pvalue(cfg[f"events_control{g}"], cfg[f"n_control{g}"],
                            cfg[f"events_treat{g}"], cfg[f"n_treat{g}"])
        p_obs.append(p)
        out_stream.write(f"group {g}: events/arm "
                         f"{cfg[f'events_control{g}']}/{cfg[f'n_control{g}']} vs "
                         f"{cfg[f'events_treat{g}']}/{cfg[f'n_treat{g}']}"
                         f"  one-sided p = {p:.4f}\n")

    rc, rt = cfg["rate_control"], cfg["rate_treat"]
    th_design = tuple(
        theta_from_design(TwoArmDesign(rc, rt, cfg[f"n_control{g}"],
                                       cfg[f"n_treat{g}"])) for g in (1, 2))
    th_marg = theta_from_marginal_power(cfg["beta"], alpha)
    out_stream.write(f"calibrated shifts (design, rates {rc:g} vs {rt:g}): "
                     f"theta = ({th_design[0]:.6g}, {th_design[1]:.6g})\n")
    out_stream.write(f"calibrated shifts (marginal power {cfg['beta']:g}): "
                     f"theta = ({th_marg:.6g}, {th_marg:.6g})\n")

    if cfg["calibration"] == "design":
        th1, th2 = th_design
    elif cfg["calibration"] in ("marginal-power", "marginal_power"):
        th1 = th2 = th_marg
    else:
        raise ConfigError("calibration must be 'design' or 'marginal-power'")

    cols = _power_columns("benchmark", None, alpha, th1, th2, qcfg)
    out_stream.write(f"decisions at observed p = ({p_obs[0]:.4f}, {p_obs[1]:.4f}):\n")
    extra = [("bittman", build_bittman(alpha, qcfg)),
             ("fixed_sequence", fixed_sequence(alpha)),
             ("bonferroni", bonferroni(alpha))]
    for name, proc in cols + extra:
        d = proc.decide((p_obs[0], p_obs[1]))
        verdict = {(False, False): "retain both",
                   (True, False): "reject H1 only",
                   (False, True): "reject H2 only",
                   (True, True): "reject both"}[d.as_tuple()]
        out_stream.write(f"  {name}: {verdict}\n")

    if not cfg["skip_power"]:
        model = AlternativeModel(th1, th2, 0.0)
        width = max(len(name) for name, _ in cols)
        out_stream.write(f"power matrix ({cfg['calibration']} calibration, "
                         f"theta = ({th1:.6g}, {th2:.6g})):\n")
        out_stream.write("measure".ljust(10)
                         + "".join(n.rjust(width + 2) for n, _ in cols) + "\n")
        reports = [evaluate_power(p, model, qcfg) for _, p in cols]
        for m in MEASURES:
            row = m.ljust(10)
            for rep in reports:
                row += f"{rep.get(m):.4f}".rjust(width + 2)
            out_stream.write(row + "\n")
        out_stream.write("note: power values depend on the calibration mode; "
                         "see --calibration.\n")
    return 0


_SAVINGS_KEYS = {"measure": str, "N": int, "alpha": float, "calibration": str,
                 "beta": float, "rate_control": float, "rate_treat": float,
                 "n_cap": int, "quad_profile": str}
_SAVINGS_DEFAULTS = {"measure": "pi_any", "N": 4800, "alpha": 0.025,
                     "calibration": "marginal-power", "beta": 0.85,
                     "rate_control": _DEFAULT_RATES[0],
                     "rate_treat": _DEFAULT_RATES[1], "n_cap": 200_000}


def cmd_savings(args, out_stream) -> int:
    cfg = resolve(args, _SAVINGS_KEYS, _SAVINGS_DEFAULTS)
    if args.dump_config:
        dump_config(cfg, out_stream)
        return 0
    qcfg = quad_config(cfg["quad_profile"])
    alpha, n_ref = cfg["alpha"], cfg["N"]
    measure = cfg["measure"]
    if measure not in MEASURES:
        raise ConfigError(f"unknown measure {measure!r} (choose from {MEASURES})")
    rc, rt = cfg["rate_control"], cfg["rate_treat"]

    if cfg["calibration"] in ("marginal-power", "marginal_power"):
        th_ref = theta_from_marginal_power(cfg["beta"], alpha)

        def theta_of_n(n: int) -> float:
            return th_ref * math.sqrt(n / n_ref)
    elif cfg["calibration"] == "design":
        def theta_of_n(n: int) -> float:
            return theta_for_group(n // 2, rc, rt)
    else:
        raise ConfigError("calibration must be 'design' or 'marginal-power'")

    weights = _objective_weights({"pi_1": "pi1", "pi_combo": "combo"}.get(measure, measure))
    rep = savings_report(measure, weights, n_ref, theta_of_n, alpha, qcfg,
                         n_cap=cfg["n_cap"])
    out_stream.write(f"measure: {measure}  calibration: {cfg['calibration']}\n")
    out_stream.write(f"optimal-rule power at N={n_ref}: {rep.optimal_power:.4f}\n")
    out_stream.write(f"baseline (hommel) power at N={n_ref}: "
                     f"{rep.reference_power:.4f}\n")
    out_stream.write(f"baseline needs N = {rep.n_required} for the same power\n")
    out_stream.write(f"relative saving: {rep.saving_pct:.2f}%\n")
    return 0


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser, keys: dict[str, type]) -> None:
    sub.add_argument("--config", help="key = value configuration file")
    sub.add_argument("--dump-config", action="store_true",
                     help="print resolved configuration and exit")
    for key, typ in keys.items():
        flag = "--" + key.replace("_", "-")
        if typ is bool:
            sub.add_argument(flag, dest=key, action="store_const", const=True,
                             default=None)
        else:
            sub.add_argument(flag, dest=key, type=typ, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omt2",
        description="Optimal two-hypothesis testing procedures and design")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, keys, fn in (("region", _REGION_KEYS, cmd_region),
                           ("power", _POWER_KEYS, cmd_power),
                           ("allocate", _ALLOC_KEYS, cmd_allocate),
                           ("apex", _APEX_KEYS, cmd_apex),
                           ("savings", _SAVINGS_KEYS, cmd_savings)):
        sub = subs.add_parser(name)
        _add_common(sub, keys)
        sub.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None, out_stream=None) -> int:
    out = out_stream if out_stream is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args, out)
    except (ConfigError, DomainError, DegenerateVariance,
            UnsupportedModel) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ToleranceNotMet, NoBracket, MaxIterations) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except Unachievable as exc:
        print(f"unachievable target: {exc}", file=sys.stderr)
        return 4
    except Omt2Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
