"""Exact quantum dynamics in fixed-excitation sectors.

The XY Hamiltonian sum_i Omega_i s_i^z + sum_{i != j} J_ij s_i^+ s_j^-
conserves the number of excitations, so it splits into blocks labelled by
n.  A basis state is the sorted tuple of excited sites; with s^z = +1/2 for
an excited site the diagonal element is sum_{excited} Omega - sum(Omega)/2,
and an excitation hops from j to i with amplitude J_ij.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import DimensionCap, PropagationError, ValidationError
from .meanfield import CoherenceTrace, MeanFieldAllToAll
from .network import InteractionNetwork
from .spectral import degeneracy_classes

SECTOR_CAP = 200_000
FULL_CAP = 14
EIG_LIMIT = 4000
NORM_TOL = 1e-6


@dataclass(frozen=True)
class SectorBasis:
    n_spins: int
    n_exc: int

    def __post_init__(self):
        if self.n_spins < 1 or not 0 <= self.n_exc <= self.n_spins:
            raise ValidationError(f"invalid sector n={self.n_exc} for {self.n_spins} spins")

    @property
    def dimension(self):
        return math.comb(self.n_spins, self.n_exc)

    @property
    def states(self):
        return _states(self.n_spins, self.n_exc)

    def index(self):
        return {s: k for k, s in enumerate(self.states)}


_STATE_CACHE = {}


def _states(n, k):
    key = (n, k)
    if key not in _STATE_CACHE:
        _STATE_CACHE[key] = tuple(itertools.combinations(range(n), k))
    return _STATE_CACHE[key]


@dataclass
class SectorState:
    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dimension,):
            raise ValidationError("amplitude vector does not match the sector dimension")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"sector state must have unit norm, got {norm}")


def _coupling(net, n):
    """Symmetric CSR coupling matrix with zero diagonal."""
    if isinstance(net, MeanFieldAllToAll):
        mat = np.full((n, n), net.sign.value / n)
        np.fill_diagonal(mat, 0.0)
        return sparse.csr_matrix(mat)
    if isinstance(net, InteractionNetwork):
        if net.n != n:
            raise ValidationError(f"network has {net.n} vertices, realization has {n}")
        return net.to_sparse().tocsr()
    raise ValidationError(f"unsupported coupling description {type(net).__name__}")


def _sector_matrix(omegas, coupling, basis, cap):
    dim = basis.dimension
    if dim > cap:
        raise DimensionCap(f"sector dimension C({basis.n_spins},{basis.n_exc}) = {dim} exceeds the cap {cap}")
    states = basis.states
    index = basis.index()
    offset = 0.5 * float(np.sum(omegas))
    diag = np.array([float(sum(omegas[i] for i in s)) - offset for s in states]) if dim else np.zeros(0)
    indptr, indices, data = coupling.indptr, coupling.indices, coupling.data
    rows, cols, vals = [], [], []
    for a, s in enumerate(states):
        occupied = set(s)
        for pos, j in enumerate(s):
            rest = s[:pos] + s[pos + 1:]
            for p in range(indptr[j], indptr[j + 1]):
                i = indices[p]
                if i in occupied:
                    continue
                target = tuple(sorted(rest + (i,)))
                rows.append(index[target])
                cols.append(a)
                vals.append(data[p])
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    mat = mat + sparse.diags(diag)
    return mat.tocsr()


def build_sector_hamiltonian(realization, net, n_exc, cap=SECTOR_CAP):
    """Sparse symmetric block of the Hamiltonian with ``n_exc`` excitations."""
    om = np.asarray(realization.omegas, dtype=float)
    basis = SectorBasis(om.size, int(n_exc))
    return _sector_matrix(om, _coupling(net, om.size), basis, cap)


def collective_hop_matrix(basis, cap=SECTOR_CAP):
    """S^+ S^- restricted to the sector: n on the diagonal plus unit hops between all pairs."""
    n = basis.n_spins
    ones = np.ones((n, n))
    np.fill_diagonal(ones, 0.0)
    hop = _sector_matrix(np.zeros(n), sparse.csr_matrix(ones), basis, cap)
    return hop + basis.n_exc * sparse.identity(basis.dimension, format="csr")


def symmetric_state(basis):
    dim = basis.dimension
    return SectorState(basis, np.full(dim, 1.0 / np.sqrt(dim), dtype=complex))


def _propagate_eig(h, psi0, times):
    e, v = linalg.eigh(h.toarray() if sparse.issparse(h) else h)
    c = v.T @ psi0
    return v @ (np.exp(-1j * np.outer(e, times)) * c[:, None]), (e, v, c)


def _propagate_poly(h, psi0, times):
    """Taylor-polynomial propagator (scipy's expm_multiply) on a time grid."""
    out = np.empty((psi0.size, times.size), dtype=complex)
    a = -1j * sparse.csr_matrix(h)
    psi, t_prev = psi0.astype(complex), 0.0
    for k, t in enumerate(times):
        if t != t_prev:
            psi = splinalg.expm_multiply(a * (t - t_prev), psi)
            t_prev = t
        out[:, k] = psi
    return out


def _check_times(times):
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.size == 0 or np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValidationError("times must be a nonempty nondecreasing sequence of t >= 0")
    return t


def evolve_fidelity(h_sector, initial, times, eig_limit=EIG_LIMIT):
    """Evolve ``initial`` and return (t, F(t), eta(t)) rows plus a summary dict.

    F is the overlap with the symmetric state of the same sector and
    eta = (4/N^2) <S^+ S^->.  The summary holds the infinite-time average of
    F (exact, from degeneracy classes) when the block is diagonalized, else
    the trapezoidal mean over the supplied times.
    """
    basis = initial.basis
    if h_sector.shape != (basis.dimension, basis.dimension):
        raise ValidationError("Hamiltonian and state dimensions differ")
    t = _check_times(times)
    psi0 = initial.amplitudes
    sym = symmetric_state(basis).amplitudes
    if basis.dimension <= eig_limit:
        psi_t, (e, v, c) = _propagate_eig(h_sector, psi0, t)
        proj = (v.T @ sym).conj() * c
        f_bar = float(sum(abs(proj[cls].sum()) ** 2 for cls in degeneracy_classes(e)))
        method = "eigen"
    else:
        psi_t = _propagate_poly(h_sector, psi0, t)
        method = "polynomial"
        f_bar = None
    norms = np.linalg.norm(psi_t, axis=0)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_TOL:
        raise PropagationError(f"norm drifted by {drift:.3g} during propagation")
    fid = np.abs(sym.conj() @ psi_t) ** 2
    hop = collective_hop_matrix(basis)
    n = basis.n_spins
    eta = 4.0 / n**2 * np.real(np.einsum("ik,ik->k", psi_t.conj(), hop @ psi_t))
    if f_bar is None:
        f_bar = float(np.trapezoid(fid, t) / (t[-1] - t[0])) if t[-1] > t[0] else float(fid[0])
    summary = {"F_bar": f_bar, "method": method, "dimension": basis.dimension, "norm_drift": drift,
               "n_exc": basis.n_exc, "N": n}
    return np.column_stack([t, fid, eta]), summary


def product_amplitudes(n_spins, n_exc, theta0, phi0=0.0):
    """Amplitude of each n-excitation configuration in the product state (all equal)."""
    c, s = np.cos(theta0 / 2.0), np.sin(theta0 / 2.0)
    return c ** (n_spins - n_exc) * s ** n_exc * np.exp(1j * n_exc * phi0)


def full_evolve(realization, net, theta0=np.pi / 2, phi0=0.0, times=(0.0,), r0=1.0, cap=FULL_CAP):
    """eta(t) for a pure product initial state, propagated block by block.

    The product state is a superposition of symmetric states of every sector;
    each block evolves independently and eta sums the block contributions.
    """
    if r0 != 1.0:
        raise ValidationError("full quantum evolution supports pure states only (r0 = 1)")
    n = realization.n
    if n > cap:
        raise DimensionCap(f"full evolution limited to N <= {cap}, got {n}")
    t = _check_times(times)
    om = np.asarray(realization.omegas, dtype=float)
    coupling = _coupling(net, n)
    eta = np.zeros(t.size)
    energy = 0.0
    weight = 0.0
    for k in range(n + 1):
        basis = SectorBasis(n, k)
        amp = product_amplitudes(n, k, theta0, phi0)
        p_k = abs(amp) ** 2 * basis.dimension
        if p_k < 1e-300:
            continue
        h = _sector_matrix(om, coupling, basis, SECTOR_CAP)
        psi0 = np.full(basis.dimension, amp, dtype=complex)
        psi_t, _ = _propagate_eig(h, psi0, t)
        hop = collective_hop_matrix(basis)
        eta += 4.0 / n**2 * np.real(np.einsum("ik,ik->k", psi_t.conj(), hop @ psi_t))
        energy += float(np.real(psi0.conj() @ (h @ psi0)))
        weight += float(np.sum(np.abs(psi_t) ** 2, axis=0).max())
    meta = {"N": n, "theta0": theta0, "phi0": phi0, "source": "exact", "energy": energy,
            **{k: v for k, v in realization.describe().items() if k != "n"}}
    return CoherenceTrace(t, eta, meta)


def full_hamiltonian(realization, net, cap=FULL_CAP):
    """The Hamiltonian on all 2^N basis states (bit i set = site i excited)."""
    n = realization.n
    if n > cap:
        raise DimensionCap(f"full Hilbert space limited to N <= {cap}, got {n}")
    om = np.asarray(realization.omegas, dtype=float)
    coupling = _coupling(net, n).tocoo()
    dim = 1 << n
    configs = np.arange(dim)
    bits = (configs[:, None] >> np.arange(n)) & 1
    diag = bits @ om - 0.5 * om.sum()
    rows, cols, vals = [], [], []
    for i, j, w in zip(coupling.row, coupling.col, coupling.data):
        # s_i^+ s_j^-: j excited, i empty
        src = configs[(bits[:, j] == 1) & (bits[:, i] == 0)]
        dst = src ^ (1 << j) ^ (1 << i)
        rows.append(dst)
        cols.append(src)
        vals.append(np.full(src.size, w))
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    return (mat + sparse.diags(diag)).tocsr()


def excitation_number(n):
    """Excitation count of every 2^N basis state."""
    configs = np.arange(1 << n)
    return ((configs[:, None] >> np.arange(n)) & 1).sum(axis=1)
