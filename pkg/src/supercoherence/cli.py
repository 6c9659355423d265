"""Command-line front end.

Every subcommand resolves its configuration as built-in defaults, then an
optional JSON ``--config`` file, then explicit flags.  Results go to
``--out`` (written atomically) or stdout.  Exit status is 0 on success, 1
for usage or validation problems and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _io
from . import consistency as sc
from . import exact as ex
from . import meanfield as mf
from . import plotting
from . import spectral as sp
from . import sweep as sw
from .disorder import Family, FrequencyDistribution, Scheme, free_decay, sample
from .errors import NumericalError, SupercoherenceError, ValidationError
from .netspec import parse_network_spec

__all__ = ["main", "parse_network_spec", "resolve_config", "run"]

DEFAULTS = {
    "n": 1000,
    "dist": "uniform",
    "sigma": 0.2,
    "sigmas": None,
    "theta0": math.pi / 2,
    "theta0s": None,
    "phi0": 0.0,
    "r0": 1.0,
    "network": "all",
    "networks": None,
    "seed": 0,
    "scheme": "stratified",
    "realizations": None,
    "tmax": mf.DEFAULT_TMAX,
    "dt": mf.DEFAULT_DT,
    "transient": mf.DEFAULT_TRANSIENT,
    "stride": 10,
    "out": None,
    "format": "csv",
    "svg": None,
    "jobs": None,
    "kind": "eta-vs-sigma",
    "engine": None,
    "n_exc": 1,
    "full": False,
    "n_max": 3,
    "points": 301,
}

_COMMON = ("n", "dist", "sigma", "theta0", "phi0", "r0", "network", "seed", "scheme", "realizations",
           "tmax", "dt", "transient", "out", "format", "svg", "jobs")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    """'0.1,0.2,0.3' or 'start:stop:step' (stop included when on the grid)."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 12) for k in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list or start:stop:step, got {text!r}") from None


def _add_common(p):
    g = p.add_argument_group("common")
    g.add_argument("--config", help="JSON file with any of the options below; flags override it")
    g.add_argument("--print-config", action="store_true", help="print the resolved configuration first")
    g.add_argument("--n", type=int, help="number of spins (default 1000)")
    g.add_argument("--dist", choices=["uniform", "gaussian", "lorentz", "lorentzian"], help="disorder family")
    g.add_argument("--sigma", type=float, help="disorder width in units of J")
    g.add_argument("--theta0", type=float, help="initial polar angle (rad)")
    g.add_argument("--phi0", type=float, help="initial azimuth (rad)")
    g.add_argument("--r0", type=float, help="initial Bloch vector length")
    g.add_argument("--network", help="network spec, e.g. all, lattice:d=1000, ws:k=4,p=1, er:p=0.1, ba:m=2")
    g.add_argument("--seed", type=int, help="base seed for IID draws and random graphs")
    g.add_argument("--scheme", choices=["iid", "stratified"], help="disorder sampling scheme")
    g.add_argument("--realizations", type=int, help="disorder realizations to average")
    g.add_argument("--tmax", type=float, help="integration time (1/J)")
    g.add_argument("--dt", type=float, help="integrator step (1/J)")
    g.add_argument("--transient", type=float, help="start of the averaging window (1/J)")
    g.add_argument("--out", help="output path (stdout when absent)")
    g.add_argument("--format", choices=["csv", "json"], help="output format")
    g.add_argument("--svg", help="also write an SVG figure to this path")
    g.add_argument("--jobs", type=int, help="worker processes for sweeps (default: CPU count)")


def build_parser():
    parser = _Parser(prog="supercoherence", description="Disordered spin ensembles with long-range couplings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dynamics", help="mean-field coherence trace")
    _add_common(p)
    p.add_argument("--stride", type=int, help="record eta every this many steps")

    p = sub.add_parser("free-decay", help="analytic decay without interactions")
    _add_common(p)
    p.add_argument("--points", type=int, help="number of time samples")

    p = sub.add_parser("selfconsistent", help="solve the steady-state conditions")
    _add_common(p)

    p = sub.add_parser("critical", help="critical disorder for a family and initial state")
    _add_common(p)

    p = sub.add_parser("spectrum", help="single-excitation spectrum, gap and coherence")
    _add_common(p)
    p.add_argument("--n-max", type=int, dest="n_max", help="fidelity predictions up to this excitation number")

    p = sub.add_parser("exact", help="exact evolution in an excitation sector or the full space")
    _add_common(p)
    p.add_argument("--n-exc", type=int, dest="n_exc", help="excitation number of the sector")
    p.add_argument("--full", action="store_true", default=None, help="propagate a product state in all sectors")
    p.add_argument("--points", type=int, help="number of time samples")

    p = sub.add_parser("sweep", help="parameter scans")
    _add_common(p)
    p.add_argument("--kind", choices=[k.value for k in sw.Kind], help="what to scan")
    p.add_argument("--engine", choices=[e.value for e in sw.Engine], help="engine for the scan")
    p.add_argument("--sigmas", type=_float_list, help="sigma grid: comma list or start:stop:step")
    p.add_argument("--theta0s", type=_float_list, help="theta0 grid for phase maps")
    p.add_argument("--networks", help="semicolon-separated network specs for network scans")
    return parser


def resolve_config(args):
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    cfg["command"] = args.command
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
        explicit = set(loaded)
    else:
        explicit = set()
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
            explicit.add(key)
    cfg["_explicit"] = sorted(explicit)
    if isinstance(cfg.get("networks"), str):
        cfg["networks"] = [s for s in cfg["networks"].split(";") if s.strip()]
    if cfg["jobs"] is None:
        cfg["jobs"] = os.cpu_count() or 1
    if cfg["realizations"] is None:
        cfg["realizations"] = 1
    parse_network_spec(cfg["network"])
    for spec in cfg.get("networks") or []:
        parse_network_spec(spec)
    return cfg


def _realization(cfg, sigma=None):
    dist = FrequencyDistribution(Family.parse(cfg["dist"]), cfg["sigma"] if sigma is None else sigma)
    scheme = Scheme.parse(cfg["scheme"])
    return sample(dist, cfg["n"], scheme, cfg["seed"] if scheme is Scheme.IID else None)


def _emit(cfg, columns, rows, meta, payload):
    """Write CSV or JSON to --out or stdout."""
    meta = dict(meta)
    meta.setdefault("config", _echo(cfg))
    if cfg["format"] == "json":
        text = _io.to_json({"meta": meta, **payload}) + "\n"
    else:
        text = _io.csv_text(columns, rows, meta)
    if cfg["out"]:
        _io.atomic_write_text(cfg["out"], text)
    else:
        sys.stdout.write(text)


def _echo(cfg):
    return {k: v for k, v in cfg.items() if k not in ("out", "svg", "format", "jobs") and not k.startswith("_")}


def _sidecar(cfg, obj):
    if cfg["out"]:
        path = Path(cfg["out"])
        _io.write_json(path.with_suffix(path.suffix + ".json") if path.suffix != ".json" else
                       path.with_name(path.stem + ".summary.json"), obj)
    else:
        sys.stderr.write(_io.to_json(obj) + "\n")


def cmd_dynamics(cfg):
    real = _realization(cfg)
    net = parse_network_spec(cfg["network"]).build(cfg["n"], cfg["seed"])
    trace = mf.run_coherent(real, net, cfg["theta0"], cfg["r0"], cfg["phi0"], cfg["tmax"], cfg["dt"], cfg["stride"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stats = mf.summarize(trace, min(cfg["transient"], 0.5 * cfg["tmax"]))
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    meta = dict(trace.meta)
    meta["summary"] = stats
    _emit(cfg, ["t", "eta"], zip(trace.times.tolist(), trace.eta.tolist()), meta,
          {"summary": stats, "t": trace.times, "eta": trace.eta})
    if cfg["svg"]:
        plotting.line_plot(cfg["svg"], trace.times, trace.eta, "time t (1/J)", "coherence eta(t)")


def cmd_free_decay(cfg):
    dist = FrequencyDistribution(Family.parse(cfg["dist"]), cfg["sigma"])
    t = np.linspace(0.0, cfg["tmax"], int(cfg["points"]))
    eta0 = (cfg["r0"] * math.sin(cfg["theta0"])) ** 2
    eta = free_decay(dist, eta0, t)
    _emit(cfg, ["t", "eta"], zip(t.tolist(), eta.tolist()), {"dist": dist.family.value, "sigma": dist.sigma},
          {"t": t, "eta": eta})
    if cfg["svg"]:
        plotting.line_plot(cfg["svg"], t, eta, "time t (1/J)", "coherence eta(t)")


def cmd_selfconsistent(cfg):
    dist = FrequencyDistribution(Family.parse(cfg["dist"]), cfg["sigma"])
    sol = sc.solve_selfconsistent(dist, cfg["theta0"], cfg["r0"])
    d = sol.as_dict()
    _emit(cfg, list(d), [list(d.values())], {}, d)


def cmd_critical(cfg):
    fam = Family.parse(cfg["dist"])
    bisect = sc.critical_sigma(fam, cfg["theta0"], cfg["r0"])
    limit = sc.critical_sigma_limit(fam, cfg["theta0"], cfg["r0"])
    closed, _ = sc.table1_closed_forms(fam, 0.0, cfg["theta0"], cfg["r0"])
    d = {"dist": fam.value, "theta0": cfg["theta0"], "r0": cfg["r0"], "sigma_c": bisect,
         "sigma_c_limit": limit, "sigma_c_closed_form": closed}
    _emit(cfg, list(d), [list(d.values())], {}, d)


def cmd_spectrum(cfg):
    real = _realization(cfg)
    net = parse_network_spec(cfg["network"]).build(cfg["n"], cfg["seed"])
    res = sp.analyze(real, net)
    summary = sp.summary(res, cfg["n_max"])
    summary["config"] = _echo(cfg)
    rows = zip(range(res.energies.size), res.energies.tolist(), res.weights.tolist())
    if cfg["format"] == "json":
        _emit(cfg, [], [], res.meta, {"summary": summary, "E_k": res.energies, "w_k": res.weights})
    else:
        _emit(cfg, ["k", "E_k", "w_k"], rows, res.meta, {})
        _sidecar(cfg, summary)
    if cfg["svg"]:
        plotting.line_plot(cfg["svg"], res.energies, res.weights, "energy E_k (J)", "weight w_k", logy=True)


def cmd_exact(cfg):
    real = _realization(cfg)
    net = parse_network_spec(cfg["network"]).build(cfg["n"], cfg["seed"])
    times = np.linspace(0.0, cfg["tmax"], int(cfg["points"]))
    if cfg["full"]:
        trace = ex.full_evolve(real, net, cfg["theta0"], cfg["phi0"], times, cfg["r0"])
        stats = {"eta_bar": mf.time_average(trace, min(cfg["transient"], 0.5 * cfg["tmax"]))}
        meta = dict(trace.meta)
        meta["summary"] = stats
        _emit(cfg, ["t", "eta"], zip(trace.times.tolist(), trace.eta.tolist()), meta,
              {"summary": stats, "t": trace.times, "eta": trace.eta})
        series = trace.eta
    else:
        basis = ex.SectorBasis(cfg["n"], cfg["n_exc"])
        h = ex.build_sector_hamiltonian(real, net, cfg["n_exc"])
        rows, summary = ex.evolve_fidelity(h, ex.symmetric_state(basis), times)
        summary["config"] = _echo(cfg)
        if cfg["format"] == "json":
            _emit(cfg, [], [], {}, {"summary": summary, "t": rows[:, 0], "F": rows[:, 1], "eta": rows[:, 2]})
        else:
            _emit(cfg, ["t", "F", "eta"], rows.tolist(), {"summary": summary}, {})
            _sidecar(cfg, summary)
        series = rows[:, 1]
    if cfg["svg"]:
        plotting.line_plot(cfg["svg"], times, series, "time t (1/J)", "eta(t)" if cfg["full"] else "fidelity F(t)")


def cmd_sweep(cfg):
    kind = sw.Kind.parse(cfg["kind"])
    sigmas = cfg["sigmas"] or [cfg["sigma"]]
    theta0s = cfg["theta0s"] or [cfg["theta0"]]
    scheme = cfg["scheme"]
    realizations = cfg["realizations"]
    explicit = cfg.get("_explicit", ())
    if kind is sw.Kind.NETWORK_SCAN:
        # network scans default to R = 8 IID realizations
        if "scheme" not in explicit:
            scheme = None
        if "realizations" not in explicit:
            realizations = None
    job = sw.SweepJob(kind, tuple(sigmas), engine=cfg["engine"], dist=cfg["dist"], theta0s=tuple(theta0s),
                      r0=cfg["r0"], n=cfg["n"], network=cfg["network"], networks=tuple(cfg["networks"] or ()),
                      realizations=realizations, scheme=scheme, base_seed=cfg["seed"], t_max=cfg["tmax"],
                      dt=cfg["dt"], transient=cfg["transient"])
    result = sw.run_sweep(job, cfg["jobs"])
    cols = result.columns()
    rows = [[_cell(row.get(c)) for c in cols] for row in result.rows]
    _emit(cfg, cols, rows, {"provenance": result.provenance}, {"provenance": result.provenance, "rows": result.rows})
    if cfg["svg"]:
        plotting.sweep_svg(cfg["svg"], result)


def _cell(value):
    if isinstance(value, list):
        return ";".join(str(v) for v in value)
    return value


COMMANDS = {
    "dynamics": cmd_dynamics,
    "free-decay": cmd_free_decay,
    "selfconsistent": cmd_selfconsistent,
    "critical": cmd_critical,
    "spectrum": cmd_spectrum,
    "exact": cmd_exact,
    "sweep": cmd_sweep,
}


def run(cfg):
    """Execute a resolved configuration; returns the exit status."""
    try:
        COMMANDS[cfg["command"]](cfg)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    except SupercoherenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    if args.print_config:
        sys.stderr.write(_io.to_json({k: v for k, v in cfg.items() if not k.startswith("_")}) + "\n")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
