"""Parameter scans and disorder averaging.

A :class:`SweepJob` expands into independent (grid point, realization)
tasks.  Tasks may run in worker processes; results are merged by their
(grid index, realization index) key so the outcome never depends on
scheduling.  A failing task marks its row instead of aborting the sweep.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from . import __version__, _io
from . import consistency as sc
from . import meanfield as mf
from . import spectral as sp
from .disorder import Family, FrequencyDistribution, Scheme, sample
from .errors import SupercoherenceError, ValidationError
from .netspec import parse_network_spec
from .network import connectivity

DEFAULT_NETWORK_REALIZATIONS = 8
PHASE_THRESHOLD = 1e-3


class Kind(str, Enum):
    ETA_VS_SIGMA = "eta-vs-sigma"
    PHASE_MAP = "phase-map"
    PERIOD = "period"
    GAP = "gap"
    NETWORK_SCAN = "network-scan"
    EXPONENT = "exponent"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("_", "-")
        aliases = {"period-vs-sigma": "period", "gap-vs-sigma": "gap", "gap-and-fidelity": "gap",
                   "exponent-fit": "exponent"}
        text = aliases.get(text, text)
        try:
            return cls(text)
        except ValueError:
            raise ValidationError(f"unknown sweep kind {value!r}") from None


class Engine(str, Enum):
    MEANFIELD = "meanfield"
    SELFCONSISTENT = "selfconsistent"
    SPECTRAL = "spectral"
    EXACT = "exact"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("-", "").replace("_", ""))
        except ValueError:
            raise ValidationError(f"unknown engine {value!r}") from None


_ENGINES = {
    Kind.ETA_VS_SIGMA: {Engine.MEANFIELD, Engine.SELFCONSISTENT},
    Kind.PHASE_MAP: {Engine.MEANFIELD, Engine.SELFCONSISTENT},
    Kind.PERIOD: {Engine.MEANFIELD},
    Kind.GAP: {Engine.SPECTRAL},
    Kind.NETWORK_SCAN: {Engine.SPECTRAL},
    Kind.EXPONENT: {Engine.SELFCONSISTENT, Engine.MEANFIELD},
}
_DEFAULT_ENGINE = {
    Kind.ETA_VS_SIGMA: Engine.MEANFIELD,
    Kind.PHASE_MAP: Engine.SELFCONSISTENT,
    Kind.PERIOD: Engine.MEANFIELD,
    Kind.GAP: Engine.SPECTRAL,
    Kind.NETWORK_SCAN: Engine.SPECTRAL,
    Kind.EXPONENT: Engine.SELFCONSISTENT,
}


@dataclass(frozen=True)
class SweepJob:
    kind: Kind
    sigmas: tuple = (0.2,)
    engine: Engine | None = None
    dist: Family = Family.UNIFORM
    theta0s: tuple = (math.pi / 2,)
    r0: float = 1.0
    n: int = 1000
    network: str = "all"
    networks: tuple = ()
    realizations: int | None = None
    scheme: Scheme | None = None
    base_seed: int = 0
    t_max: float = mf.DEFAULT_TMAX
    dt: float = mf.DEFAULT_DT
    transient: float = mf.DEFAULT_TRANSIENT
    extend_near_critical: bool = True

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("kind", kind)
        set_("engine", Engine.parse(self.engine) if self.engine is not None else _DEFAULT_ENGINE[kind])
        set_("dist", Family.parse(self.dist))
        set_("sigmas", tuple(float(s) for s in np.atleast_1d(self.sigmas)))
        set_("theta0s", tuple(float(t) for t in np.atleast_1d(self.theta0s)))
        set_("networks", tuple(self.networks))
        if self.scheme is None:
            set_("scheme", Scheme.IID if kind is Kind.NETWORK_SCAN else Scheme.STRATIFIED)
        else:
            set_("scheme", Scheme.parse(self.scheme))
        if self.realizations is None:
            default = DEFAULT_NETWORK_REALIZATIONS if kind is Kind.NETWORK_SCAN and self.scheme is Scheme.IID else 1
            set_("realizations", default)
        self.validate()

    def validate(self):
        if self.engine not in _ENGINES[self.kind]:
            allowed = ", ".join(sorted(e.value for e in _ENGINES[self.kind]))
            raise ValidationError(f"{self.kind.value} sweeps need engine in {{{allowed}}}, got {self.engine.value}")
        if not self.grid():
            raise ValidationError("sweep grid is empty")
        if int(self.realizations) < 1:
            raise ValidationError("realizations must be >= 1")
        if self.scheme is Scheme.STRATIFIED and self.realizations > 1:
            raise ValidationError("stratified draws are deterministic; use scheme=iid for more than one realization")
        if any(s < 0 for s in self.sigmas):
            raise ValidationError("sigma values must be nonnegative")
        if self.kind is Kind.NETWORK_SCAN and not self.networks:
            raise ValidationError("network-scan needs at least one network spec")
        for spec in self.networks or (self.network,):
            parse_network_spec(spec)

    def grid(self):
        """List of grid points as dicts, in row order."""
        if self.kind is Kind.PHASE_MAP:
            return [{"theta0": t, "sigma": s} for t in self.theta0s for s in self.sigmas]
        if self.kind is Kind.NETWORK_SCAN:
            return [{"network": spec, "sigma": s} for spec in self.networks for s in self.sigmas]
        return [{"sigma": s, "theta0": self.theta0s[0]} for s in self.sigmas]

    def seeds(self):
        return [self.base_seed ^ r for r in range(self.realizations)]

    def config(self):
        out = asdict(self)
        out.update({"kind": self.kind.value, "engine": self.engine.value, "dist": self.dist.value,
                    "scheme": self.scheme.value, "version": __version__})
        return out


@dataclass
class SweepResult:
    job: SweepJob
    rows: list
    provenance: dict = field(default_factory=dict)

    def columns(self):
        cols = []
        for row in self.rows:
            for key in row:
                if key not in cols:
                    cols.append(key)
        return cols

    def values(self, key):
        return np.array([np.nan if r.get(key) is None else r[key] for r in self.rows], dtype=float)

    def to_csv(self, path):
        cols = self.columns()
        _io.write_csv(path, cols, ([row.get(c) for c in cols] for row in self.rows), {"provenance": self.provenance})

    def to_json(self, path):
        _io.write_json(path, {"provenance": self.provenance, "rows": self.rows})


# --- per-task evaluation ---------------------------------------------------


def _meanfield_point(job, sigma, theta0, seed, net_spec):
    dist = FrequencyDistribution(job.dist, sigma)
    real = sample(dist, job.n, job.scheme, seed if job.scheme is Scheme.IID else None)
    net = net_spec.build(job.n, seed)
    t_max = job.t_max
    trace = mf.run_coherent(real, net, theta0, job.r0, t_max=t_max, dt=job.dt)
    stats = mf.summarize(trace, job.transient, warn=False)
    extended = False
    if job.extend_near_critical and stats["period"] is not None and stats["n_periods"] < mf.MIN_PERIODS:
        t_max = 4.0 * job.t_max
        trace = mf.run_coherent(real, net, theta0, job.r0, t_max=t_max, dt=job.dt)
        stats = mf.summarize(trace, job.transient, warn=False)
        extended = True
    short = stats["period"] is not None and stats["n_periods"] < mf.MIN_PERIODS
    return {"eta_bar": stats["eta_bar"], "period": stats["period"], "n_periods": stats["n_periods"],
            "t_max_used": t_max, "extended": extended, "few_periods": short}


def _selfconsistent_point(job, sigma, theta0):
    sol = sc.solve_selfconsistent(FrequencyDistribution(job.dist, sigma), theta0, job.r0)
    return {"eta_bar": sol.eta_bar, "r": sol.r, "delta": sol.delta, "phase": sol.phase.value}


def _spectral_point(job, sigma, seed, net_spec):
    dist = FrequencyDistribution(job.dist, sigma)
    real = sample(dist, job.n, job.scheme, seed if job.scheme is Scheme.IID else None)
    net = net_spec.build(job.n, seed)
    res = sp.analyze(real, net)
    gap = sp.detect_gap(res) if job.n >= 3 else None
    out = {
        "rel_coherence": sp.relative_coherence_avg(res),
        "gap_present": 1.0 if gap else 0.0,
        "e_gap": gap[0] if gap else None,
        "w_sc": float(res.weights[res.extremal_index()]),
    }
    out["connectivity"] = 1.0 if net_spec.family == "all" else connectivity(net)
    return out


def run_task(job, grid_index, realization_index):
    """Evaluate one (grid point, realization) pair; errors become a tagged record."""
    point = job.grid()[grid_index]
    seed = job.seeds()[realization_index]
    spec = parse_network_spec(point.get("network", job.network))
    sigma = point["sigma"]
    theta0 = point.get("theta0", job.theta0s[0])
    try:
        if job.engine is Engine.MEANFIELD:
            value = _meanfield_point(job, sigma, theta0, seed, spec)
        elif job.engine is Engine.SELFCONSISTENT:
            value = _selfconsistent_point(job, sigma, theta0)
        elif job.engine is Engine.SPECTRAL:
            value = _spectral_point(job, sigma, seed, spec)
        else:
            raise ValidationError(f"engine {job.engine.value} is not wired to sweeps")
    except SupercoherenceError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    return value


_PRIMARY = {
    Kind.ETA_VS_SIGMA: "eta_bar",
    Kind.PHASE_MAP: "eta_bar",
    Kind.PERIOD: "period",
    Kind.GAP: "rel_coherence",
    Kind.NETWORK_SCAN: "rel_coherence",
    Kind.EXPONENT: "eta_bar",
}


def disorder_average(values, scheme=Scheme.IID):
    """(mean, stderr) of per-realization values; stderr is None for R = 1 or stratified draws."""
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return None, None
    mean = float(arr.mean())
    if arr.size == 1 or Scheme.parse(scheme) is Scheme.STRATIFIED:
        return mean, None
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))


def _merge(job, results):
    primary = _PRIMARY[job.kind]
    rows = []
    for gi, point in enumerate(job.grid()):
        recs = [results[(gi, ri)] for ri in range(job.realizations)]
        ok = [r for r in recs if "error" not in r]
        row = dict(point)
        row["R"] = len(ok)
        row["failed"] = len(recs) - len(ok)
        row["error"] = recs[0]["error"] if not ok else None
        keys = [] if not ok else [k for k, v in ok[0].items() if isinstance(v, (int, float)) and not isinstance(v, bool)]
        for key in dict.fromkeys([primary] + keys):
            vals = [r.get(key) for r in ok]
            if any(v is None for v in vals):
                # an absent value (no period, no gap) in any realization is reported as absent
                row[key] = None if len(vals) == 1 or all(v is None for v in vals) else float(
                    np.mean([v for v in vals if v is not None]))
                if key == primary:
                    row["stderr"] = None
                continue
            mean, err = disorder_average(vals, job.scheme)
            row[key] = mean
            if key == primary:
                row["stderr"] = err
        for key in ("phase", "extended", "few_periods"):
            if ok and key in ok[0]:
                row[key] = ok[0][key] if len(ok) == 1 else [r[key] for r in ok]
        rows.append(row)
    return rows


def run_sweep(job, jobs=1):
    """Run every task, in ``jobs`` worker processes when jobs > 1, and merge."""
    tasks = [(gi, ri) for gi in range(len(job.grid())) for ri in range(job.realizations)]
    jobs = max(1, int(jobs or 1))
    if jobs == 1 or len(tasks) == 1:
        results = {t: run_task(job, *t) for t in tasks}
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            futures = {t: pool.submit(run_task, job, *t) for t in tasks}
            results = {t: f.result() for t, f in futures.items()}
    rows = _merge(job, results)
    provenance = {"job": job.config(), "seeds": job.seeds(), "tasks": len(tasks)}
    result = SweepResult(job, rows, provenance)
    _annotate(result)
    return result


def _annotate(result):
    job = result.job
    prov = result.provenance
    if job.kind in (Kind.ETA_VS_SIGMA, Kind.EXPONENT, Kind.PHASE_MAP) and job.engine is Engine.SELFCONSISTENT:
        try:
            prov["sigma_c"] = {str(t): sc.critical_sigma(job.dist, t, job.r0) for t in job.theta0s}
        except SupercoherenceError as exc:
            prov["sigma_c_error"] = str(exc)
    if job.kind is Kind.PHASE_MAP:
        prov["boundary"] = phase_boundary(result)
    if job.kind is Kind.GAP and job.network == "all" and job.dist is Family.UNIFORM:
        for row in result.rows:
            gap, rel = sc.analytic_all_to_all(row["sigma"])
            row["e_gap_analytic"] = gap
            row["rel_coherence_analytic"] = rel
    if job.kind is Kind.EXPONENT:
        theta0 = job.theta0s[0]
        sigma_c = prov.get("sigma_c", {}).get(str(theta0))
        if sigma_c is None:
            sigma_c = sc.critical_sigma(job.dist, theta0, job.r0)
        curve = [(r["sigma"], r["eta_bar"]) for r in result.rows if r.get("eta_bar") is not None]
        try:
            prov["beta"] = sc.fit_critical_exponent(curve, sigma_c)
        except SupercoherenceError as exc:
            prov["beta_error"] = str(exc)


def phase_boundary(result, threshold=PHASE_THRESHOLD):
    """Per theta0: largest sigma on the grid with eta_bar above ``threshold``."""
    out = {}
    for row in result.rows:
        key = str(row["theta0"])
        out.setdefault(key, None)
        eta = row.get("eta_bar")
        if eta is not None and eta > threshold:
            out[key] = row["sigma"] if out[key] is None else max(out[key], row["sigma"])
    return out


# --- convenience wrappers --------------------------------------------------


def eta_vs_sigma(sigmas, **kwargs):
    return run_sweep(SweepJob(Kind.ETA_VS_SIGMA, sigmas, **_pop_jobs(kwargs)), kwargs.get("jobs", 1))


def phase_map(sigmas, theta0s, **kwargs):
    return run_sweep(SweepJob(Kind.PHASE_MAP, sigmas, theta0s=theta0s, **_pop_jobs(kwargs)), kwargs.get("jobs", 1))


def period_vs_sigma(sigmas, **kwargs):
    return run_sweep(SweepJob(Kind.PERIOD, sigmas, **_pop_jobs(kwargs)), kwargs.get("jobs", 1))


def gap_and_fidelity_vs_sigma(sigmas, **kwargs):
    return run_sweep(SweepJob(Kind.GAP, sigmas, **_pop_jobs(kwargs)), kwargs.get("jobs", 1))


def network_scan(networks, sigma=0.2, **kwargs):
    return run_sweep(SweepJob(Kind.NETWORK_SCAN, (sigma,), networks=tuple(networks), **_pop_jobs(kwargs)),
                     kwargs.get("jobs", 1))


def _pop_jobs(kwargs):
    return {k: v for k, v in kwargs.items() if k != "jobs"}


def default_jobs():
    return os.cpu_count() or 1


def with_overrides(job, **changes):
    return replace(job, **changes)
