"""Command-line experiment runner.

Exit status: 0 pass (or inconclusive without ``--strict``), 1 fail,
2 inconclusive under ``--strict``, 64 usage or validation error.

Settings are resolved in the order defaults < ``--config`` file (INI,
section ``[experiment]``) < command-line flags.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
from typing import Any

import numpy as np

EX_OK, EX_FAIL, EX_INCONCLUSIVE, EX_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

SETTINGS = ("model", "diagnostic", "family", "x", "z", "r", "f", "variant", "seed", "samples",
            "horizon", "format", "output", "strict", "mean", "uniform", "phi", "C", "U0", "table",
            "t_grid", "tail_fraction", "probe_radii")


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"config: cannot read {path!r}")
    if not cp.has_section("experiment"):
        raise UsageError("config: missing section [experiment]")
    out = dict(cp.items("experiment"))
    unknown = set(out) - set(SETTINGS)
    if unknown:
        raise UsageError(f"config: unknown field experiment.{sorted(unknown)[0]}")
    return out


def merge(args: argparse.Namespace, config: dict) -> dict:
    eff = dict(config)
    for k in SETTINGS:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            eff[k] = v
    for k in ("seed", "samples"):
        if k in eff:
            try:
                eff[k] = int(eff[k])
            except ValueError:
                raise UsageError(f"{k}: expected an integer, got {eff[k]!r}") from None
    for k in ("horizon", "tail_fraction"):
        if k in eff:
            try:
                eff[k] = float(eff[k])
            except ValueError:
                raise UsageError(f"{k}: expected a number, got {eff[k]!r}") from None
    for k in ("strict", "mean", "uniform"):
        if isinstance(eff.get(k), str):
            eff[k] = eff[k].lower() in ("1", "true", "yes", "on")
    return eff


def config_hash(eff: dict) -> str:
    body = {k: v for k, v in eff.items() if k not in ("output", "force")}
    return hashlib.sha256(json.dumps(body, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _existing_hash(path: str) -> str | None:
    try:
        with open(path) as fh:
            head = fh.read(4096)
    except OSError:
        return None
    if head.startswith("# config_hash="):
        return head.split("\n", 1)[0].split("=", 1)[1].strip()
    try:
        return json.loads(head if len(head) < 4096 else open(path).read()).get("config_hash")
    except (ValueError, AttributeError):
        return "unknown"


def emit(text: str, eff: dict, chash: str, force: bool, kind: str = "json"):
    path = eff.get("output")
    if not path:
        sys.stdout.write(text)
        return
    if os.path.exists(path) and not force:
        old = _existing_hash(path)
        if old != chash:
            raise UsageError(f"{path} was written by a different configuration (hash {old}); use --force")
    with open(path, "w") as fh:
        fh.write(text)
    manifest = {"config_hash": chash, "config": eff, "seed": eff.get("seed"),
                "versions": {"python": platform.python_version(), "numpy": np.__version__,
                             "scipy": __import__("scipy").__version__,
                             "ergodiag": __import__("ergodiag").__version__}}
    with open(path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)


def _csv_rows(header, rows, chash) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={chash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _report_text(rep, eff, chash) -> str:
    if eff.get("format", "json") == "csv":
        return f"# config_hash={chash}\n" + rep.curves_csv()
    d = rep.to_dict()
    d["config_hash"] = chash
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _verdict_status(verdict: str, strict: bool) -> int:
    if verdict in ("pass", "consistent", "bounded", "out-of-scope"):
        return EX_OK
    if verdict in ("fail", "diverging"):
        return EX_FAIL
    return EX_INCONCLUSIVE if strict else EX_OK


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _model(eff):
    from .models import REGISTRY, get_model
    mid = eff.get("model")
    if not mid:
        raise UsageError("model: required (choose from " + ", ".join(sorted(REGISTRY)) + ")")
    try:
        return get_model(mid)
    except KeyError as exc:
        raise UsageError(str(exc)) from None


def _state(model, text, default=None):
    if text is None:
        if default is None:
            raise UsageError("x: required")
        return default
    try:
        return model.parse_state(str(text))
    except ValueError as exc:
        raise UsageError(f"state {text!r}: {exc}") from None


def _seed(eff, needed=True):
    if "seed" not in eff:
        if needed:
            raise UsageError("seed: required (--seed or experiment.seed)")
        return 0
    if not 0 <= eff["seed"] < 2 ** 64:
        raise UsageError("seed: must be an unsigned 64-bit integer")
    return eff["seed"]


def named_function(name: str, model):
    """Test functions addressable from the command line."""
    V = model.V
    table = {
        "V": lambda s: V(s),
        "sqrtV": lambda s: np.sqrt(V(s)),
        "one": lambda s: np.ones_like(np.asarray(V(s), dtype=float)),
        "cos": lambda s: np.cos(model.coord(s)),
        "minx1": lambda s: np.minimum(np.asarray(s, dtype=float)[..., 0], 1.0),
    }
    if name in table:
        return table[name]
    if name.startswith("V^"):
        a = float(name[2:])
        return lambda s: np.asarray(V(s), dtype=float) ** a
    raise UsageError(f"f: unknown function {name!r} (V, sqrtV, V^a, one, cos, minx1)")


def _family(model, name):
    if not name:
        raise UsageError("family: required")
    try:
        return model.family(name)
    except KeyError as exc:
        raise UsageError(str(exc)) from None


def parse_measure(text: str, model):
    """``'state:weight;state:weight'`` or a JSON list of ``{state, weight}`` records."""
    from .markov import SparseDistribution
    text = text.strip()
    try:
        if text.startswith("["):
            recs = json.loads(text)
            return SparseDistribution.from_records(recs, lambda s: model.parse_state(
                ",".join(map(str, s)) if isinstance(s, list) else str(s)))
        atoms = []
        for part in text.split(";"):
            st, w = part.rsplit(":", 1)
            atoms.append((model.parse_state(st), float(w)))
        return SparseDistribution(atoms)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"measure {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_list(args, eff):
    from .models import REGISTRY, get_model
    from .tables import TABLES
    what = args.what
    if what == "models":
        lines = [f"{k}\t{get_model(k).description}" for k in sorted(REGISTRY)]
    elif what == "tables":
        lines = sorted(TABLES)
    else:
        lines = [f"{k}\t{fam.name}" for k in sorted(REGISTRY) for fam in get_model(k).families()]
    sys.stdout.write("\n".join(lines) + "\n")
    return EX_OK


def cmd_reproduce(args, eff, chash):
    from .tables import STOCHASTIC, TABLES
    table = args.table
    if table not in TABLES:
        raise UsageError(f"unknown table {table!r}; choose from {sorted(TABLES)}")
    kw = {}
    if table in STOCHASTIC:
        kw["seed"] = _seed(eff)
        if "samples" in eff:
            kw["samples"] = eff["samples"]
    rows = TABLES[table](**kw)
    if eff.get("format") == "json":
        text = json.dumps({"config_hash": chash, "table": table,
                           "rows": [dict(zip(("quantity", "computed", "expected", "tolerance", "pass"), r))
                                    for r in rows]}, indent=2) + "\n"
    else:
        text = _csv_rows(("quantity", "computed", "expected", "tolerance", "pass"), rows, chash)
    emit(text, eff, chash, args.force)
    return EX_OK if all(r.passed for r in rows) else EX_FAIL


def cmd_simulate(args, eff, chash):
    from .markov import simulate_paths
    model = _model(eff)
    if model.sampler is None:
        raise UsageError(f"model {model.id!r} has no sampler")
    x = _state(model, eff.get("x"), model.base_point)
    horizon = eff.get("horizon", 10.0)
    paths = simulate_paths(model.sampler, x, horizon, eff.get("samples", 1), _seed(eff))
    lines = [json.dumps({"config_hash": chash})]
    for k, p in enumerate(paths):
        lines.append(json.dumps({"path": k, "records": [{"time": float(r["time"]), "state": r["state"]}
                                                        for r in p.to_records()]}))
    emit("\n".join(lines) + "\n", eff, chash, args.force)
    return EX_OK


def cmd_distance(args, eff, chash):
    from .distances import tv_distance, wasserstein_1d, wasserstein_exact, weighted_tv
    model = _model(eff)
    mu = parse_measure(args.mu, model)
    nu = parse_measure(args.nu, model)
    kind = args.kind
    out: dict[str, Any] = {"config_hash": chash, "kind": kind}
    if kind == "tv":
        out["value"] = tv_distance(mu, nu)
    elif kind == "dv":
        out["value"] = weighted_tv(mu, nu, lambda s: float(model.V(s)))
    elif kind == "w1d":
        out["value"] = wasserstein_1d(mu, nu, args.p)
    else:
        val, plan = wasserstein_exact(mu, nu, args.p, model.metric)
        out["value"] = val
        out["plan"] = plan.to_records(model.encode_state)
    out["value"] = float(out["value"])
    emit(json.dumps(out, indent=2) + "\n", eff, chash, args.force)
    return EX_OK


def _grid(model, key, eff, **over):
    from .diagnostics import LimitGridSpec
    d = dict(model.defaults.get(key) or model.defaults.get("grid") or {"t_grid": tuple(range(0, 41))})
    if "samples" in eff:
        d["samples"] = eff["samples"]
    if "seed" in eff:
        d["seed"] = eff["seed"]
    if "horizon" in eff:
        T = eff["horizon"]
        d["t_grid"] = tuple(t for t in d["t_grid"] if t <= T) or (T,)
    for k in ("t_grid", "probe_radii"):
        if k in eff:
            d[k] = _numbers(eff[k], f"grid.{k}")
    if "tail_fraction" in eff:
        d["tail_fraction"] = eff["tail_fraction"]
    d.update(over)
    try:
        return LimitGridSpec(**d)
    except ValueError as exc:
        raise UsageError(f"grid.{exc}") from None


def _numbers(text, field) -> tuple:
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{field}: expected comma-separated numbers, got {text!r}") from None
    return tuple(int(v) if v.is_integer() else v for v in vals)


def cmd_diagnose(args, eff, chash):
    from . import diagnostics as dg
    which = args.which
    strict = bool(eff.get("strict"))
    if which == "lyapunov":
        phi = eff.get("phi", "linear")
        C = float(eff.get("C", 1.0))
        U0 = float(eff.get("U0", 5.0))
        if phi not in ("linear", "log1p"):
            raise UsageError("phi: linear or log1p")
        spec = getattr(dg.LyapunovSpec, phi)(C, U0)
        res = dg.lyapunov_bound(spec, t_max=float(eff.get("horizon", 20.0)))
        rep = dg.DiagnosticReport("lyapunov", "pass" if res.monotone and res.crossings == 0 else "fail",
                                  statistic=res.bound, details={"limit": res.limit, "crossings": res.crossings,
                                                                "monotone": res.monotone, "phi": phi, "C": C, "U0": U0})
        rep.add_curve("f", res.t[::10], res.f[::10])
        emit(_report_text(rep, eff, chash), eff, chash, args.force)
        return _verdict_status(rep.verdict, strict)

    model = _model(eff)
    x = _state(model, eff.get("x"), model.defaults.get("x", model.base_point))
    stochastic = not (model.countable or model.exact)
    if stochastic:
        _seed(eff)
    if which == "ui":
        f = named_function(eff.get("f", "V"), model)
        K = [2.0 ** k for k in range(0, 21)]
        rep = dg.check_uniform_integrability(model, x, f, K, _grid(model, "ui_grid", eff), name=eff.get("f", "V"))
    elif which == "lbc":
        variant = eff.get("variant", "C1")
        z = _state(model, eff.get("z"), model.defaults.get("z", model.base_point))
        r = list(_numbers(eff["r"], "r")) if "r" in eff else list(model.defaults.get("r_list", (0.5,)))
        fn = dg.check_lbc_C2 if variant.upper() == "C2" else dg.check_lbc_C1
        rep = fn(model, z, r, model.probes, _grid(model, "cesaro_grid" if variant.upper() == "C2" else "grid", eff))
    elif which == "evc":
        fam = _family(model, eff.get("family"))
        rep = dg.check_evc(model, fam, x, _grid(model, "evc_grid", eff), variant=eff.get("variant", "plain"),
                           tol=model.defaults.get("evc_tol", 1e-3))
    elif which == "tightness":
        from .states import LATTICE_INDEX
        metric = LATTICE_INDEX if model.id == "lattice" else model.metric
        radii = [1.0, 2.0, 4.0, 8.0, 16.0]
        rep = dg.check_tightness(model, x, radii, _grid(model, "grid", eff), metric=metric)
    elif which == "birkhoff":
        from .markov import simulate_paths
        f = named_function(eff.get("f", "sqrtV"), model)
        T = float(eff.get("horizon", 100.0))
        path = simulate_paths(model.sampler, x, T, 1, _seed(eff))[0]
        if model.time_kind == "discrete":
            traj = [path.at(float(t)) for t in range(int(T) + 1)]
            cps = [c for c in (10, 100, 1000, 10000) if c <= len(traj)]
        else:
            traj = path
            cps = [c for c in (10.0, 100.0, 1000.0, 10000.0) if c <= T]
        rep = dg.birkhoff_divergence_check(traj, f, cps or [T])
    else:
        raise UsageError(f"unknown diagnostic {which!r}")
    emit(_report_text(rep, eff, chash), eff, chash, args.force)
    return _verdict_status(rep.verdict, strict)


def cmd_report(args, eff, chash):
    from .diagnostics import InconsistencyError, stability_report
    eff.setdefault("model", args.model_id)
    model = _model(eff)
    fam_name = eff.get("family") or ("F_WEIGHTED" if model.id == "ifs" else "F_ALPHA(0.5)")
    fam = _family(model, fam_name)
    mean = bool(eff.get("mean")) or model.id == "ifs"
    try:
        rep = stability_report(model, fam, mean=mean, uniform=bool(eff.get("uniform")))
    except InconsistencyError as exc:
        sys.stderr.write(f"inconsistent: {exc}\n")
        return EX_FAIL
    emit(_report_text(rep, eff, chash), eff, chash, args.force)
    return _verdict_status(rep.verdict, bool(eff.get("strict")))


def cmd_run(args, eff, chash):
    if not eff:
        raise UsageError("config: empty; experiment.model and experiment.diagnostic are required")
    diag = eff.get("diagnostic")
    if not diag:
        raise UsageError("experiment.diagnostic: required")
    _seed(eff)
    if diag == "report":
        args.model_id = eff.get("model")
        return cmd_report(args, eff, chash)
    if diag.startswith("reproduce:"):
        args.table = diag.split(":", 1)[1]
        return cmd_reproduce(args, eff, chash)
    args.which = diag
    return cmd_diagnose(args, eff, chash)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with an [experiment] section")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--horizon", type=float)
    common.add_argument("--output")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--strict", action="store_true", default=None)
    common.add_argument("--force", action="store_true")
    common.add_argument("--model")
    common.add_argument("--x")
    common.add_argument("--z")
    common.add_argument("--r", help="comma-separated radii")
    common.add_argument("--f", help="test function: V, sqrtV, V^a, one, cos, minx1")
    common.add_argument("--family")
    common.add_argument("--variant")
    common.add_argument("--mean", action="store_true", default=None)
    common.add_argument("--uniform", action="store_true", default=None)
    common.add_argument("--phi")
    common.add_argument("--C", type=float)
    common.add_argument("--U0", type=float)
    common.add_argument("--t-grid", dest="t_grid", help="comma-separated increasing times")
    common.add_argument("--tail-fraction", dest="tail_fraction", type=float)
    common.add_argument("--probe-radii", dest="probe_radii", help="comma-separated decreasing radii")

    p = _Parser(prog="ergodiag", description="Ergodicity diagnostics for Markov chains.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="simulate trajectories (JSON lines)")
    d = sub.add_parser("distance", parents=[common], help="distance between two finite measures")
    d.add_argument("kind", choices=("tv", "dv", "w", "w1d"))
    d.add_argument("--mu", required=True)
    d.add_argument("--nu", required=True)
    d.add_argument("--p", type=float, default=1.0)
    g = sub.add_parser("diagnose", parents=[common], help="run one diagnostic")
    g.add_argument("which", choices=("lbc", "evc", "ui", "lyapunov", "tightness", "birkhoff"))
    r = sub.add_parser("report", parents=[common], help="composite stability report")
    r.add_argument("model_id")
    rp = sub.add_parser("reproduce", parents=[common], help="emit a result table")
    rp.add_argument("table")
    ls = sub.add_parser("list", parents=[common], help="list registries")
    ls.add_argument("what", choices=("models", "families", "tables"))
    sub.add_parser("run", parents=[common], help="run the experiment described by --config")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a command is required")
        eff = merge(args, load_config(args.config))
        chash = config_hash({"command": args.command, **{k: getattr(args, k) for k in
                                                          ("which", "table", "model_id", "kind", "what",
                                                           "mu", "nu", "p")
                                                          if hasattr(args, k)}, **eff})
        if args.command == "list":
            return cmd_list(args, eff)
        handler = {"simulate": cmd_simulate, "distance": cmd_distance, "diagnose": cmd_diagnose,
                   "report": cmd_report, "reproduce": cmd_reproduce, "run": cmd_run}[args.command]
        return handler(args, eff, chash)
    except UsageError as exc:
        sys.stderr.write(f"ergodiag: error: {exc}\n")
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
