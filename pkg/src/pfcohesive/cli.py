"""Command-line front end.

    pfcohesive forward     --model catalog:linear --s-grid 0:2:0.05 --out g.csv
    pfcohesive reconstruct --target catalog:linear --fix khat=t^2 --out out/
    pfcohesive oracle      --model catalog:hyperbolic --s 0.2,0.5 --nodes 2000 --m-grid 200 --out o.csv
    pfcohesive validate    --suite acceptance --report report.json
    pfcohesive catalog     list | show NAME

Exit codes: 0 success, 1 failed validation criteria, 2 hypothesis
violation, 3 numerical non-convergence, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, acceptance, catalog, forward, oracle, reconstruct
from .errors import (
    ArtifactError,
    BadParameters,
    CompatibilityError,
    EnvelopeViolated,
    HypothesisViolation,
    NonConvergent,
    NonFinite,
    NotInvertible,
    UnknownEntry,
)
from .expr import ExpressionError, parse
from .model import PhaseFieldModel, TargetCohesiveLaw, make_model

EXIT_OK, EXIT_FAILED, EXIT_HYPOTHESIS, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3, 64
CATALOG_PARAMS = ("k", "k1", "k2", "a", "b", "delta")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# output helpers


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_manifest(path: Path, command: str, config: dict, inputs: dict, outputs: list[Path],
                   diagnostics: dict, timing: float | None) -> None:
    manifest = {
        "command": command,
        "config": _jsonable(config),
        "input_hashes": inputs,
        "tool_version": __version__,
        "outputs": {p.name: _sha256(p) for p in outputs},
        "diagnostics": _jsonable(diagnostics),
    }
    if timing is not None:
        manifest["timing_s"] = timing
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def write_gnuplot(path: Path, csv_name: str, xcol: int, ycol: int, xlabel: str, ylabel: str) -> None:
    path.write_text(
        "set datafile separator ','\n"
        f"set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"
        f"plot '{csv_name}' every ::1 using {xcol}:{ycol} with lines title '{ylabel}'\n")


# ---------------------------------------------------------------------------
# loading


def _catalog_params(cfg: dict) -> dict:
    return {k: cfg[k] for k in CATALOG_PARAMS if cfg.get(k) is not None}


def _hash_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def load_model(spec: str, cfg: dict) -> tuple[PhaseFieldModel, dict]:
    """``catalog:NAME`` (with --pair selecting the analytic model) or a JSON file
    {"fhat": expr, "Q": expr, "omega": expr, optional "phi_deg"} in variable t."""
    if spec.startswith("catalog:"):
        name = spec.split(":", 1)[1]
        params = _catalog_params(cfg)
        entry = catalog.get(name, params)
        if not entry.analytic_models:
            raise UsageError(f"catalog entry {name!r} has no closed-form model; use reconstruct")
        pair = int(cfg.get("pair") or 0)
        if not 0 <= pair < len(entry.analytic_models):
            raise UsageError(f"--pair must be in [0, {len(entry.analytic_models) - 1}] for {name}")
        am = entry.analytic_models[pair]
        return am.model, {spec: _hash_text(json.dumps([name, entry.parameters, am.label], sort_keys=True))}
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"model file {spec!r} not found (use catalog:NAME or a JSON file)")
    data = json.loads(path.read_text())
    missing = [k for k in ("fhat", "Q", "omega") if k not in data]
    if missing:
        raise UsageError(f"model file needs keys fhat, Q, omega; missing {missing}")
    phi_deg = parse(data["phi_deg"]) if "phi_deg" in data else None
    model = make_model(parse(data["fhat"]), parse(data["Q"]), parse(data["omega"]), phi_deg,
                       name=path.stem)
    return model, {path.name: _sha256(path)}


def load_target(spec: str, cfg: dict) -> tuple[TargetCohesiveLaw, dict]:
    """``catalog:NAME`` or a JSON file with g0, g0_prime (expressions in s),
    optional g0_second, regime, sigma, g_inf, s_frac0, kinks."""
    if spec.startswith("catalog:"):
        name = spec.split(":", 1)[1]
        params = _catalog_params(cfg)
        entry = catalog.get(name, params)
        return entry.target, {spec: _hash_text(json.dumps([name, entry.parameters], sort_keys=True))}
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"target file {spec!r} not found (use catalog:NAME or a JSON file)")
    data = json.loads(path.read_text())
    try:
        target = TargetCohesiveLaw(
            g0=parse(data["g0"], "s"), g0_prime=parse(data["g0_prime"], "s"),
            regime=data["regime"], sigma=float(data["sigma"]), g_inf=float(data["g_inf"]),
            s_frac0=float(data["s_frac0"]),
            g0_second=parse(data["g0_second"], "s") if "g0_second" in data else None,
            kinks=tuple(float(k) for k in data.get("kinks", ())), name=path.stem)
    except KeyError as exc:
        raise UsageError(f"target file is missing key {exc}") from None
    return target, {path.name: _sha256(path)}


def parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--s-grid expects lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise UsageError("--s-grid needs step > 0 and hi >= lo")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def parse_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_forward(cfg: dict) -> int:
    model, inputs = load_model(cfg["model"], cfg)
    s = parse_grid(cfg["s_grid"])
    out = Path(cfg["out"])
    t0 = time.perf_counter()
    curve = forward.cohesive_curve(model, s, threads=int(cfg.get("threads") or 1))
    write_csv(out, ["s", "g", "g_prime", "m_star"], [s, curve.g_values, curve.g_prime_values, curve.m_star_values])
    outputs = [out]
    pt = forward.phi_table(model)
    if cfg.get("phi"):
        ms = pt.table.grid
        p = out.with_name(out.stem + "_phi.csv")
        write_csv(p, ["m", "Phi"], [ms, pt.table.values])
        outputs.append(p)
    if cfg.get("profiles"):
        for i, pair in enumerate(cfg["profiles"].split(";")):
            m_val, s_val = parse_list(pair)
            prof = forward.optimal_profile(model, m_val, s_val)
            t, w = prof.full()
            p = out.with_name(f"{out.stem}_profile{i}.csv")
            write_csv(p, ["t", "w"], [t, w])
            outputs.append(p)
    if cfg.get("gnuplot_script"):
        gp = out.with_suffix(".gp")
        write_gnuplot(gp, out.name, 1, 2, "s", "g")
        outputs.append(gp)
    diag = {"sigma": model.sigma, "two_psi1": model.two_psi1, "phi_classification": pt.classification,
            "phi0plus": pt.phi0plus, "phi1minus": pt.phi1minus, "s_frac": curve.s_frac}
    timing = time.perf_counter() - t0 if cfg.get("timing") else None
    write_manifest(out.with_name(out.stem + "_manifest.json"), "forward", cfg, inputs, outputs, diag, timing)
    return EXIT_OK


PRODUCED_FILES = {"omega_reflected": ("omega.csv", "t", "omega(1-t)"),
                  "fhat_inverse": ("fhat_inverse.csv", "t", "fhat^-1(t)"),
                  "khat_inverse": ("khat_inverse.csv", "t", "khat^-1(t)")}


def cmd_reconstruct(cfg: dict) -> int:
    target, inputs = load_target(cfg["target"], cfg)
    fix = cfg["fix"]
    if "=" not in fix:
        raise UsageError("--fix expects khat=<expr> or omega=<expr>")
    kind, expr = (v.strip() for v in fix.split("=", 1))
    f = parse(expr, "t")
    regime = cfg.get("regime") or target.regime
    out = Path(cfg["out"])
    t0 = time.perf_counter()
    if cfg.get("regularize_delta") is not None and target.name == "exponential":
        target = reconstruct.regularize_exponential(float(cfg.get("k") or 1.0), float(cfg["regularize_delta"]))
    if kind == "khat":
        res = reconstruct.omega_from_khat(target, f, regime)
    elif kind == "omega":
        res = reconstruct.khat_from_omega(target, f, regime)
    else:
        raise UsageError(f"--fix must fix khat or omega, got {kind!r}")
    fname, xname, yname = PRODUCED_FILES[res.produced_kind]
    p = out / fname
    write_csv(p, [xname, "value"], [res.produced.grid, res.produced.values])
    outputs = [p]
    sp = res.small_phi
    pp = out / "phi.csv"
    write_csv(pp, ["tau", "phi"], [sp.phi.grid, sp.phi.values])
    outputs.append(pp)
    diag = dict(res.diagnostics)
    if cfg.get("roundtrip"):
        S = target.s_effective()
        rt = reconstruct.round_trip(target, res, np.linspace(0.02 * S, 0.98 * S, 25),
                                    threads=int(cfg.get("threads") or 1))
        diag["forward_roundtrip_err"] = rt["sup_rel_err"]
        rp = out / "roundtrip.csv"
        write_csv(rp, ["s", "g_model", "g_target"], [rt["s_grid"], rt["g_model"], rt["g_target"]])
        outputs.append(rp)
    if cfg.get("gnuplot_script"):
        gp = out / "plot.gp"
        write_gnuplot(gp, fname, 1, 2, xname, yname)
        outputs.append(gp)
    diag.update({"regime": res.regime, "sigma": res.sigma_scaling, "produced": res.produced_kind})
    timing = time.perf_counter() - t0 if cfg.get("timing") else None
    write_manifest(out / "manifest.json", "reconstruct", cfg, inputs, outputs, diag, timing)
    return EXIT_OK


def cmd_oracle(cfg: dict) -> int:
    model, inputs = load_model(cfg["model"], cfg)
    s_vals = parse_list(cfg["s"])
    oc = oracle.OracleConfig(n_w=int(cfg.get("nodes") or 2000), n_m=int(cfg.get("m_grid") or 200))
    out = Path(cfg["out"])
    t0 = time.perf_counter()
    rows = []
    for s in s_vals:
        r = oracle.discrete_g(model, s, oc)
        g = forward.g_value(model, s)
        rows.append((s, r.value, g, (r.value - g) / g if g else float("nan"), r.m))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    write_csv(out, ["s", "g_oracle", "g_analytic", "rel_err", "argmin_m"], list(arr.T))
    timing = time.perf_counter() - t0 if cfg.get("timing") else None
    write_manifest(out.with_name(out.stem + "_manifest.json"), "oracle", cfg, inputs, [out],
                   {"max_abs_rel_err": float(np.max(np.abs(arr[:, 3]))) if arr.size else 0.0}, timing)
    return EXIT_OK


def cmd_validate(cfg: dict) -> int:
    if cfg.get("suite") != "acceptance":
        raise UsageError("only --suite acceptance is available")
    ids = cfg["criteria"].split(",") if cfg.get("criteria") else None
    if ids:
        unknown = [c for c in ids if c not in acceptance.CRITERIA]
        if unknown:
            raise UsageError(f"unknown criteria {unknown}; known: {list(acceptance.CRITERIA)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        results = acceptance.run_suite(ids)
    for r in results:
        print(r.line())
    report = {
        "suite": "acceptance",
        "tool_version": __version__,
        "all_passed": all(r.passed for r in results),
        "criteria": [_jsonable(r.to_dict()) for r in results],
    }
    if not cfg.get("timing"):
        for c in report["criteria"]:
            c.pop("runtime_s", None)
    path = Path(cfg.get("report") or "report.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report["all_passed"] else EXIT_FAILED


def cmd_catalog(cfg: dict) -> int:
    action = cfg.get("action")
    if action == "list":
        for name in catalog.list_entries():
            print(name)
        return EXIT_OK
    if action == "show":
        if not cfg.get("name"):
            raise UsageError("catalog show needs an entry name")
        entry = catalog.get(cfg["name"], _catalog_params(cfg))
        print(json.dumps(_jsonable(entry.describe()), indent=2, sort_keys=True))
        return EXIT_OK
    raise UsageError("catalog expects 'list' or 'show NAME'")


COMMANDS = {"forward": cmd_forward, "reconstruct": cmd_reconstruct, "oracle": cmd_oracle,
            "validate": cmd_validate, "catalog": cmd_catalog}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pfcohesive", description="Cohesive laws of 1-D phase-field fracture models.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file of option values (flags take precedence)")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--timing", action="store_true", default=None,
                        help="record wall time in the manifest (outputs are then not byte-identical)")
        for name in CATALOG_PARAMS:
            sp.add_argument(f"--{name}", type=float, help="catalog parameter")

    f = sub.add_parser("forward", help="cohesive law of a model")
    common(f)
    f.add_argument("--model")
    f.add_argument("--pair", type=int, help="index of the catalog closed-form model (default 0)")
    f.add_argument("--s-grid", dest="s_grid")
    f.add_argument("--out")
    f.add_argument("--profiles", help="'m,s;m,s' pairs for optimal profiles")
    f.add_argument("--phi", action="store_true", default=None, help="also write the Phi table")
    f.add_argument("--gnuplot-script", dest="gnuplot_script", action="store_true", default=None)

    r = sub.add_parser("reconstruct", help="model ingredient for a target law")
    common(r)
    r.add_argument("--target")
    r.add_argument("--fix", help="khat=<expr in t> or omega=<expr in t>")
    r.add_argument("--regime", choices=("linear", "superlinear"))
    r.add_argument("--out")
    r.add_argument("--roundtrip", action="store_true", default=None)
    r.add_argument("--regularize-delta", dest="regularize_delta", type=float,
                   help="delta of the exponential regularization (default 1e-3)")
    r.add_argument("--gnuplot-script", dest="gnuplot_script", action="store_true", default=None)

    o = sub.add_parser("oracle", help="brute-force g(s)")
    common(o)
    o.add_argument("--model")
    o.add_argument("--pair", type=int)
    o.add_argument("--s")
    o.add_argument("--nodes", type=int)
    o.add_argument("--m-grid", dest="m_grid", type=int)
    o.add_argument("--out")

    v = sub.add_parser("validate", help="run the acceptance suite")
    common(v)
    v.add_argument("--suite")
    v.add_argument("--report")
    v.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,6")

    c = sub.add_parser("catalog", help="list or show catalog entries")
    common(c)
    c.add_argument("action", nargs="?", choices=("list", "show"))
    c.add_argument("name", nargs="?")
    return p


REQUIRED = {"forward": ("model", "s_grid", "out"), "reconstruct": ("target", "fix", "out"),
            "oracle": ("model", "s", "out"), "validate": ("suite",), "catalog": ("action",)}
DEFAULTS = {"forward": {"threads": 1, "pair": 0}, "reconstruct": {"threads": 1},
            "oracle": {"threads": 1, "pair": 0, "nodes": 2000, "m_grid": 200},
            "validate": {"report": "report.json"}, "catalog": {}}


def resolve_config(args: argparse.Namespace) -> dict:
    """flags > config file > defaults."""
    cfg = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {args.config!r} not found")
        cfg.update(json.loads(path.read_text()))
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command")})
    unknown = sorted(set(cfg) - set(vars(args)))
    if unknown:
        raise UsageError(f"config file has keys not accepted by {args.command}: {unknown}")
    missing = [k for k in REQUIRED[args.command] if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{args.command} needs --{', --'.join(m.replace('_', '-') for m in missing)}")
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return EXIT_USAGE
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UnknownEntry, BadParameters, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HypothesisViolation, NotInvertible, CompatibilityError) as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        rep = getattr(exc, "report", None)
        if rep is not None:
            print(rep.summary(), file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (NonConvergent, NonFinite, EnvelopeViolated) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


def main() -> None:
    sys.exit(run())
