"""Mean-field dynamics of the disordered ensemble.

Every spin keeps a product-state Bloch vector r_i = (x_i, y_i, z_i) of fixed
length r0, with z = -r0 cos(theta) (theta = 0 is the all-ground state).  The
vector precesses about (h_i^x, h_i^y, Omega_i), where the transverse field
is h_i = sum_{j != i} J_ij (x_j, y_j).  For all-to-all couplings J = -1/N
the field is -(N-1)/N times the collective transverse magnetization, whose
squared modulus is the coherence eta(t).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _quad
from scipy.signal import find_peaks

from . import _io
from ._kernels import cf4_run
from .errors import NumericalBlowup, ValidationError
from .network import InteractionNetwork, Sign

DEFAULT_DT = 0.01
DEFAULT_TMAX = 200.0
DEFAULT_TRANSIENT = 50.0
MIN_PERIODS = 5
MAX_PHASE = 0.5  # rad per internal substep
MAX_SUBSTEPS = 256


@dataclass(frozen=True)
class MeanFieldAllToAll:
    """Uniform coupling sign/N between every pair, integrated in O(N) per step."""

    sign: Sign = Sign.ATTRACTIVE

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign.parse(self.sign))

    def flipped(self):
        return MeanFieldAllToAll(self.sign.flipped())

    def describe(self):
        return {"family": "all", "sign": self.sign.symbol, "path": "collective"}


@dataclass
class BlochEnsemble:
    bloch: np.ndarray  # shape (N, 3)
    r0: float

    def __post_init__(self):
        self.bloch = np.array(self.bloch, dtype=float)
        if self.bloch.ndim != 2 or self.bloch.shape[1] != 3:
            raise ValidationError("Bloch vectors must have shape (N, 3)")
        self.r0 = float(self.r0)

    @property
    def n(self):
        return self.bloch.shape[0]

    def copy(self):
        return BlochEnsemble(self.bloch.copy(), self.r0)

    def purity_deviation(self):
        return float(np.max(np.abs(np.linalg.norm(self.bloch, axis=1) - self.r0)))

    def total_z(self):
        return float(self.bloch[:, 2].sum())


@dataclass
class CoherenceTrace:
    times: np.ndarray
    eta: np.ndarray
    meta: dict = field(default_factory=dict)
    final: BlochEnsemble | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.eta = np.asarray(self.eta, dtype=float)
        if self.times.shape != self.eta.shape:
            raise ValidationError("times and eta must have the same length")

    def __len__(self):
        return self.times.size


def init_coherent(n, r0=1.0, theta0=np.pi / 2, phi0=0.0):
    """N identical Bloch vectors (r0 sin t cos p, r0 sin t sin p, -r0 cos t)."""
    if not 0.0 <= r0 <= 1.0:
        raise ValidationError(f"purity r0 must lie in [0, 1], got {r0}")
    if not 0.0 <= theta0 <= np.pi:
        raise ValidationError(f"theta0 must lie in [0, pi], got {theta0}")
    if int(n) < 1:
        raise ValidationError("need at least one spin")
    vec = r0 * np.array([np.sin(theta0) * np.cos(phi0), np.sin(theta0) * np.sin(phi0), -np.cos(theta0)])
    return BlochEnsemble(np.tile(vec, (int(n), 1)), r0)


def collective_field(ensemble):
    """(r, psi) with r e^{i psi} = mean_j (x_j - i y_j); eta = r^2."""
    b = ensemble.bloch
    c = b[:, 0].mean() - 1j * b[:, 1].mean()
    return float(abs(c)), float(np.angle(c)) if abs(c) > 0 else 0.0


def coherence(ensemble):
    r, _ = collective_field(ensemble)
    return r * r


def energy(ensemble, realization, net):
    """<H> of the product state: sum Omega z / 2 + sum_{i != j} J (x x + y y) / 4.

    Conserved by the mean-field flow.
    """
    b = ensemble.bloch
    om = realization.omegas
    e = 0.5 * float(np.dot(om, b[:, 2]))
    if isinstance(net, MeanFieldAllToAll):
        n = b.shape[0]
        sx, sy = b[:, 0].sum(), b[:, 1].sum()
        pair = sx * sx + sy * sy - float(np.sum(b[:, 0] ** 2 + b[:, 1] ** 2))
        e += 0.25 * (net.sign.value / n) * pair
    else:
        x, y = b[:, 0], b[:, 1]
        pair = np.sum(net.weights * (x[net.rows] * x[net.cols] + y[net.rows] * y[net.cols]))
        e += 0.5 * float(pair)
    return e


def _substeps(om, dt):
    """Equal substeps per step so that no spin turns more than MAX_PHASE per substep.

    Fixed before the run from the frequencies alone.  Without it the far tails
    of heavy-tailed disorder alias into the local fields of the other spins.
    """
    fastest = float(np.max(np.abs(om))) if om.size else 0.0
    ratio = fastest * dt / MAX_PHASE
    if not ratio <= MAX_SUBSTEPS:
        warnings.warn(f"max |Omega| * dt = {fastest * dt:.3g} needs more than {MAX_SUBSTEPS} substeps; capped, "
                      "conservation of sum z and energy degrades", RuntimeWarning, stacklevel=3)
        return MAX_SUBSTEPS
    return max(1, int(np.ceil(ratio)))


def integrate(ensemble, realization, net, t_max=DEFAULT_TMAX, dt=DEFAULT_DT, record_stride=10):
    """Fixed-step fourth-order integration; records eta every ``record_stride`` steps.

    ``net`` is either a :class:`MeanFieldAllToAll` (collective field only) or
    an :class:`InteractionNetwork` (sparse local fields).  The input ensemble
    is not modified; the evolved state is attached as ``trace.final``.
    """
    n = ensemble.n
    if realization.n != n:
        raise ValidationError(f"realization has {realization.n} spins, ensemble has {n}")
    if dt <= 0 or t_max <= 0:
        raise ValidationError("dt and t_max must be positive")
    record_stride = int(record_stride)
    if record_stride < 1:
        raise ValidationError("record_stride must be >= 1")
    nsteps = int(round(t_max / dt))
    if nsteps < record_stride:
        raise ValidationError("t_max is shorter than one recording stride")

    if isinstance(net, MeanFieldAllToAll):
        uniform, coupling = True, net.sign.value / n
        indptr = np.zeros(1, dtype=np.int64)
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)
        geometry = net.describe()
    elif isinstance(net, InteractionNetwork):
        if net.n != n:
            raise ValidationError(f"network has {net.n} vertices, ensemble has {n}")
        uniform, coupling = False, 0.0
        mat = net.to_sparse()
        indptr = mat.indptr.astype(np.int64)
        indices = mat.indices.astype(np.int64)
        data = mat.data.astype(float)
        geometry = net.describe()
        if net.family != "none":
            geometry["extension"] = True
    else:
        raise ValidationError(f"unsupported coupling description {type(net).__name__}")

    state = ensemble.bloch.copy()
    x = np.ascontiguousarray(state[:, 0])
    y = np.ascontiguousarray(state[:, 1])
    z = np.ascontiguousarray(state[:, 2])
    om = np.ascontiguousarray(realization.omegas, dtype=float)
    substeps = _substeps(om, dt)
    h = float(dt) / substeps
    eta, max_dev, done = cf4_run(x, y, z, om, uniform, coupling, indptr, indices, data,
                                 h, nsteps * substeps, record_stride * substeps, ensemble.r0)
    done //= substeps
    if not max_dev <= 1e-3 or done < nsteps:
        raise NumericalBlowup(f"Bloch vector length drifted by {max_dev:.3g} from r0 (non-finite input?)")
    times = np.arange(eta.size) * (dt * record_stride)
    final = BlochEnsemble(np.column_stack([x, y, z]), ensemble.r0)
    meta = {
        "N": n,
        "sigma": realization.distribution.sigma,
        "dist": realization.distribution.family.value,
        "scheme": realization.scheme.value,
        "seed": realization.seed,
        "geometry": geometry,
        "r0": ensemble.r0,
        "dt": dt,
        "substeps": substeps,
        "t_max": t_max,
        "purity_deviation": float(max_dev),
    }
    return CoherenceTrace(times, eta, meta, final)


def _window(trace, t_transient):
    mask = trace.times >= t_transient
    if mask.sum() < 2:
        raise ValidationError(f"no samples after t_transient={t_transient} (trace ends at {trace.times[-1]})")
    return trace.times[mask], trace.eta[mask]


def time_average(trace, t_transient=DEFAULT_TRANSIENT):
    """Trapezoidal mean of eta over [t_transient, t_end]."""
    t, e = _window(trace, t_transient)
    return float(_quad.trapezoid(e, t) / (t[-1] - t[0]))


def oscillation_period(trace, t_transient=DEFAULT_TRANSIENT, rel_prominence=1e-3):
    """Mean spacing of eta maxima after the transient, or None without oscillation.

    The prominence threshold is relative to the maximum of the whole trace,
    so the residual ripple of a decayed trace does not count as oscillation.
    """
    t, e = _window(trace, t_transient)
    scale = float(np.max(trace.eta))
    if scale <= 0:
        return None
    peaks, _ = find_peaks(e, prominence=rel_prominence * scale)
    if peaks.size < 2:
        return None
    return float(np.mean(np.diff(t[peaks])))


def summarize(trace, t_transient=DEFAULT_TRANSIENT, warn=True):
    """Time average, period and how many periods fit the averaging window."""
    eta_bar = time_average(trace, t_transient)
    period = oscillation_period(trace, t_transient)
    window = trace.times[-1] - t_transient
    n_periods = window / period if period else 0.0
    if warn and period is not None and n_periods < MIN_PERIODS:
        warnings.warn(
            f"only {n_periods:.1f} oscillation periods fit the averaging window; "
            "increase t_max for a reliable time average",
            RuntimeWarning,
            stacklevel=2,
        )
    return {"eta_bar": eta_bar, "period": period, "n_periods": n_periods}


def run_coherent(realization, net=None, theta0=np.pi / 2, r0=1.0, phi0=0.0, t_max=DEFAULT_TMAX,
                 dt=DEFAULT_DT, record_stride=10):
    """Coherent initial state plus integration in one call."""
    if net is None:
        net = MeanFieldAllToAll()
    ens = init_coherent(realization.n, r0, theta0, phi0)
    trace = integrate(ens, realization, net, t_max=t_max, dt=dt, record_stride=record_stride)
    trace.meta.update({"theta0": theta0, "phi0": phi0})
    return trace


def write_trace(path, trace, extra_meta=None):
    meta = dict(trace.meta)
    meta.update(extra_meta or {})
    _io.write_csv(path, ["t", "eta"], zip(trace.times.tolist(), trace.eta.tolist()), meta)


def read_trace(path):
    meta, columns, rows = _io.read_csv(path)
    if columns != ["t", "eta"]:
        raise ValidationError(f"not a coherence trace: columns {columns}")
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return CoherenceTrace(arr[:, 0], arr[:, 1], meta)
