"""Single-excitation (Holstein-Primakoff) spectra.

At low excitation the spins behave as bosons with the quadratic Hamiltonian
sum_i Omega_i a_i^+ a_i + sum_{ij} J_ij a_i^+ a_j, so everything follows
from the N x N matrix M = diag(Omega) + J.  The coherence of the symmetric
one-excitation state is carried by the weights w_k = |<u_sym|v_k>|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as splinalg

from . import _io
from .errors import DiagonalizationFailure, NoIsolatedState, ValidationError
from .meanfield import CoherenceTrace, MeanFieldAllToAll
from .network import InteractionNetwork, Sign

DENSE_LIMIT = 4000
GAP_FACTOR = 10.0
GAP_MIN_WEIGHT = 0.5
DEGENERACY_TOL = 1e-9


@dataclass
class SpectralResult:
    energies: np.ndarray
    modes: np.ndarray | None
    weights: np.ndarray
    sign: Sign = Sign.ATTRACTIVE
    meta: dict = field(default_factory=dict)
    partial: bool = False  # True when only extremal pairs were computed

    @property
    def n(self):
        return int(self.meta.get("N", self.energies.size))

    def extremal_index(self):
        """Index on the attractive side: lowest level for sign -, highest for +."""
        return 0 if self.sign is Sign.ATTRACTIVE else self.energies.size - 1


def build_matrix(realization, net):
    """Dense M_ij = Omega_i delta_ij + J_ij."""
    om = np.asarray(realization.omegas, dtype=float)
    n = om.size
    if isinstance(net, MeanFieldAllToAll):
        mat = np.full((n, n), net.sign.value / n)
        np.fill_diagonal(mat, 0.0)
    elif isinstance(net, InteractionNetwork):
        if net.n != n:
            raise ValidationError(f"network has {net.n} vertices, realization has {n}")
        mat = net.to_dense()
    else:
        raise ValidationError(f"unsupported coupling description {type(net).__name__}")
    mat[np.diag_indices(n)] += om
    return mat


def _sign_of(net):
    return net.sign if net is not None else Sign.ATTRACTIVE


def diagonalize(matrix, sign=Sign.ATTRACTIVE, meta=None):
    """Full symmetric eigendecomposition with symmetric-state weights."""
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError("matrix must be square")
    n = mat.shape[0]
    if not np.allclose(mat, mat.T, rtol=0, atol=1e-12):
        raise ValidationError("matrix must be symmetric")
    try:
        energies, modes = linalg.eigh(mat)
    except (linalg.LinAlgError, ValueError) as exc:
        raise DiagonalizationFailure(f"symmetric eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(energies)):
        raise DiagonalizationFailure("eigensolver returned non-finite energies")
    weights = modes.sum(axis=0) ** 2 / n
    info = {"N": n}
    info.update(meta or {})
    return SpectralResult(energies, modes, weights, Sign.parse(sign), info)


def diagonalize_extremal(realization, net, k=6):
    """Large-N path: a few extremal pairs from a Lanczos solver.

    Only the attractive-side levels are returned; weights of unreached modes
    are unknown, so coherence quantities use the dominant-weight estimate.
    """
    n = realization.n
    sign = _sign_of(net)
    if isinstance(net, MeanFieldAllToAll):
        om = np.asarray(realization.omegas)
        c = sign.value / n
        op = splinalg.LinearOperator((n, n), matvec=lambda v: om * v + c * (v.sum() - v), dtype=float)
    else:
        mat = net.to_sparse().astype(float)
        mat.setdiag(np.asarray(realization.omegas))
        op = mat
    which = "SA" if sign is Sign.ATTRACTIVE else "LA"
    try:
        vals, vecs = splinalg.eigsh(op, k=min(k, n - 1), which=which, tol=1e-12)
    except splinalg.ArpackError as exc:
        raise DiagonalizationFailure(f"Lanczos solver failed: {exc}") from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    weights = vecs.sum(axis=0) ** 2 / n
    meta = {"N": n}
    meta.update(realization.describe())
    return SpectralResult(vals, vecs, weights, sign, meta, partial=True)


def analyze(realization, net, dense_limit=DENSE_LIMIT):
    """Build and diagonalize, choosing the dense or extremal path by size."""
    meta = dict(realization.describe())
    meta["geometry"] = net.describe()
    if realization.n > dense_limit:
        res = diagonalize_extremal(realization, net)
        res.meta.update(meta)
        return res
    return diagonalize(build_matrix(realization, net), _sign_of(net), meta)


def detect_gap(result, factor=GAP_FACTOR, min_weight=GAP_MIN_WEIGHT):
    """(e_gap, isolated_index) if the attractive-side extremal state is isolated, else None.

    Isolated means the gap to the nearest level exceeds ``factor`` times the
    median level spacing inside the band and the state's weight on the
    symmetric vector exceeds ``min_weight``.
    """
    e = result.energies
    if e.size < 3:
        raise ValidationError("gap detection needs at least three levels")
    idx = result.extremal_index()
    if idx == 0:
        gap = e[1] - e[0]
        band = e[1:]
    else:
        gap = e[-1] - e[-2]
        band = e[:-1]
    spacing = float(np.median(np.diff(band)))
    if gap > factor * spacing and result.weights[idx] > min_weight:
        return float(gap), int(idx)
    return None


def second_isolated(result, factor=GAP_FACTOR, min_weight=GAP_MIN_WEIGHT):
    """Whether the next-most-extremal level also passes both thresholds."""
    e = result.energies
    if e.size < 4:
        return False
    if result.extremal_index() == 0:
        gap, band, idx = e[2] - e[1], e[2:], 1
    else:
        gap, band, idx = e[-2] - e[-3], e[:-2], e.size - 2
    spacing = float(np.median(np.diff(band)))
    return bool(gap > factor * spacing and result.weights[idx] > min_weight)


def coherence_trace_hp(result, times):
    """eta(t)/eta(0) = |sum_k w_k exp(-i E_k t)|^2."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.size == 0:
        raise ValidationError("times must be nonempty")
    amp = np.zeros(t.size, dtype=complex)
    # chunked to keep memory bounded for long traces at large N
    for start in range(0, result.energies.size, 256):
        e = result.energies[start:start + 256]
        w = result.weights[start:start + 256]
        amp += np.exp(-1j * np.outer(t, e)) @ w
    eta = np.abs(amp) ** 2
    return CoherenceTrace(t, eta, {"source": "hp", **result.meta})


def degeneracy_classes(energies, tol=DEGENERACY_TOL):
    """Split sorted energies into runs whose neighbours differ by at most ``tol``."""
    e = np.asarray(energies)
    if e.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(e) > tol) + 1
    return np.split(np.arange(e.size), breaks)


def relative_coherence_avg(result, tol=DEGENERACY_TOL):
    """Infinite-time average of eta(t)/eta(0): sum over degenerate classes of (sum w)^2.

    For partial (extremal-only) results the dominant-weight estimate
    w_SC^2 + (1 - w_SC)^2 / (N - 1) is returned; its error is bounded by
    (1 - w_SC)^2 since the remaining weight contributes between 0 and
    (1 - w_SC)^2.
    """
    if result.partial:
        w = float(result.weights[result.extremal_index()])
        return w * w + (1.0 - w) ** 2 / (result.n - 1)
    return float(sum(result.weights[c].sum() ** 2 for c in degeneracy_classes(result.energies, tol)))


def fidelity_n(result, n, gap=None):
    """Predicted time-averaged fidelity of the n-excitation symmetric state.

    F_n ~ (eta_bar / eta(0))^n, the n-th power of the relative coherence
    carried by the isolated mode.  For n = 1 this is exactly the
    single-excitation average fidelity.  Requires an isolated state.
    """
    if int(n) < 1:
        raise ValidationError("n must be >= 1")
    found = gap if gap is not None else detect_gap(result)
    if found is None:
        raise NoIsolatedState("no isolated supercoherent state; the fidelity law does not apply")
    return float(relative_coherence_avg(result) ** int(n))


def ladder_spacing(mean_omega=0.0):
    """Spacing between consecutive supercoherent states.

    The HP spectrum is a direct sum of single-excitation copies, so |n_SC>
    sits at n times the single-excitation level and consecutive states are
    equally spaced.  In the rotating frame used throughout the spacing is 0;
    a laboratory-frame mean frequency is passed through unchanged.
    """
    return float(mean_omega)


def superposition_phases(c0, times, mean_omega=0.0):
    """c_n(t) = c_n(0) exp(-i n <omega> t) for a superposition of supercoherent states."""
    c0 = np.asarray(c0, dtype=complex)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    n = np.arange(c0.size)
    return c0[None, :] * np.exp(-1j * np.outer(t, n) * ladder_spacing(mean_omega))


def summary(result, n_max=3):
    gap = detect_gap(result)
    out = {
        "N": result.n,
        "gap": gap[0] if gap else None,
        "isolated_index": gap[1] if gap else None,
        "isolated_weight": float(result.weights[gap[1]]) if gap else None,
        "second_isolated": second_isolated(result) if gap else False,
        "rel_coherence_avg": relative_coherence_avg(result),
        "fidelity": {str(n): fidelity_n(result, n, gap) for n in range(1, n_max + 1)} if gap else None,
        "partial": result.partial,
    }
    out["meta"] = result.meta
    return out


def write_spectrum(path, result):
    rows = zip(range(result.energies.size), result.energies.tolist(), result.weights.tolist())
    _io.write_csv(path, ["k", "E_k", "w_k"], rows, result.meta)
