"""Interaction geometries and their normalization.

Every generator returns an :class:`InteractionNetwork` whose couplings share
one sign and obey sum_{i != j} |J_ij| = N - 1 (each undirected edge counted
twice).  All edges carry the same magnitude (N - 1) / (2 E).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import EmptyGraph, ParseError, ValidationError


class Sign(int, Enum):
    ATTRACTIVE = -1
    REPULSIVE = 1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        if text in ("-", "-1", "attractive", "neg"):
            return cls.ATTRACTIVE
        if text in ("+", "1", "+1", "repulsive", "pos"):
            return cls.REPULSIVE
        raise ValidationError(f"unknown coupling sign {value!r}")

    @property
    def symbol(self):
        return "-" if self is Sign.ATTRACTIVE else "+"

    def flipped(self):
        return Sign.REPULSIVE if self is Sign.ATTRACTIVE else Sign.ATTRACTIVE


@dataclass(frozen=True)
class InteractionNetwork:
    """Undirected weighted graph stored as one (i < j, weight) entry per edge."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    sign: Sign
    geometry: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=float)
        if not (rows.shape == cols.shape == weights.shape) or rows.ndim != 1:
            raise ValidationError("edge arrays must be one-dimensional and of equal length")
        if rows.size and (np.any(rows >= cols) or rows.min() < 0 or cols.max() >= self.n):
            raise ValidationError("edges must satisfy 0 <= i < j < n")
        for arr in (rows, cols, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "sign", Sign.parse(self.sign))

    @property
    def n_edges(self):
        return int(self.rows.size)

    @property
    def family(self):
        return self.geometry.get("family", "custom")

    def degrees(self):
        return np.bincount(np.concatenate([self.rows, self.cols]), minlength=self.n)

    def total_weight(self):
        """sum over ordered pairs i != j of |J_ij|."""
        return 2.0 * float(np.abs(self.weights).sum())

    def to_sparse(self):
        """Symmetric CSR coupling matrix with an empty diagonal."""
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        return sparse.csr_matrix((w, (r, c)), shape=(self.n, self.n))

    def to_dense(self):
        m = np.zeros((self.n, self.n))
        m[self.rows, self.cols] = self.weights
        m[self.cols, self.rows] = self.weights
        return m

    def is_connected(self):
        if self.n_edges == 0:
            return self.n <= 1
        ncomp, _ = csgraph.connected_components(self.to_sparse(), directed=False)
        return ncomp == 1

    def flipped(self):
        """Same graph with every coupling negated."""
        geometry = dict(self.geometry)
        return InteractionNetwork(self.n, self.rows, self.cols, -self.weights, self.sign.flipped(), geometry)

    def describe(self):
        params = {k: v for k, v in self.geometry.items() if k != "family"}
        return {"family": self.family, "n": self.n, "sign": self.sign.symbol, "params": params,
                "edges": self.n_edges, "connectivity": connectivity(self)}


def empty_network(n, sign=Sign.ATTRACTIVE):
    """No couplings at all; used for the non-interacting baseline."""
    if n < 2:
        raise ValidationError("need n >= 2")
    z = np.zeros(0)
    return InteractionNetwork(n, z, z, z, sign, {"family": "none"})


def from_edges(n, edges, sign=Sign.ATTRACTIVE, geometry=None, normalize=True):
    """Build a network from unweighted (i, j) pairs, deduplicated."""
    sign = Sign.parse(sign)
    pairs = {(min(i, j), max(i, j)) for i, j in edges if i != j}
    if not pairs:
        raise EmptyGraph(f"graph on {n} vertices has no edges; normalization is undefined")
    pairs = sorted(pairs)
    rows = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    cols = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
    mag = (n - 1) / (2.0 * len(pairs)) if normalize else 1.0
    weights = np.full(len(pairs), sign.value * mag)
    return InteractionNetwork(n, rows, cols, weights, sign, dict(geometry or {}))


def _from_nx(graph, n, sign, geometry):
    return from_edges(n, graph.edges(), sign, geometry)


def _graph_rng(seed):
    # separate stream from the disorder draws that share the same integer seed
    return np.random.default_rng([int(seed), 0x6E6574])


def all_to_all(n, sign=Sign.ATTRACTIVE):
    n = int(n)
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    sign = Sign.parse(sign)
    rows, cols = np.triu_indices(n, k=1)
    weights = np.full(rows.size, sign.value / n)
    return InteractionNetwork(n, rows, cols, weights, sign, {"family": "all"})


def lattice(dims, periodic=True, sign=Sign.ATTRACTIVE):
    """Nearest-neighbour hypercubic lattice with the given side lengths."""
    dims = [int(d) for d in dims]
    if not dims:
        raise ValidationError("lattice needs at least one dimension")
    if any(d < 1 for d in dims):
        raise ValidationError(f"lattice side lengths must be positive, got {dims}")
    n = int(np.prod(dims))
    if n < 2:
        raise ValidationError("lattice must have at least two sites")
    index = np.arange(n).reshape(dims)
    edges = []
    for axis, length in enumerate(dims):
        if length < 2:
            continue
        shifted = np.roll(index, -1, axis=axis)
        a, b = index, shifted
        if not periodic:
            sl = [slice(None)] * len(dims)
            sl[axis] = slice(0, length - 1)
            a, b = index[tuple(sl)], shifted[tuple(sl)]
        edges.extend(zip(a.ravel().tolist(), b.ravel().tolist()))
    geometry = {"family": "lattice", "dims": list(dims), "periodic": bool(periodic)}
    return from_edges(n, edges, sign, geometry)


def watts_strogatz(n, k, p, seed=0, sign=Sign.ATTRACTIVE):
    """Ring with k nearest neighbours, each edge rewired at one end with probability p.

    Rewiring redraws the new endpoint until it is neither a self-loop nor an
    existing edge, so the edge count stays exactly n*k/2.
    """
    n, k, p = int(n), int(k), float(p)
    if k % 2 or k < 2 or k >= n:
        raise ValidationError(f"Watts-Strogatz needs even k with 2 <= k < n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"rewiring probability must lie in [0, 1], got {p}")
    g = nx.watts_strogatz_graph(n, k, p, seed=_graph_rng(seed))
    geometry = {"family": "ws", "k": k, "p": p, "seed": int(seed)}
    return _from_nx(g, n, sign, geometry)


def erdos_renyi(n, p, seed=0, sign=Sign.ATTRACTIVE):
    n, p = int(n), float(p)
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"edge probability must lie in [0, 1], got {p}")
    if p == 1.0:
        g = nx.complete_graph(n)
    else:
        g = nx.fast_gnp_random_graph(n, p, seed=_graph_rng(seed)) if p < 0.2 else nx.gnp_random_graph(n, p, seed=_graph_rng(seed))
    geometry = {"family": "er", "p": p, "seed": int(seed)}
    return _from_nx(g, n, sign, geometry)


def barabasi_albert(n, m, seed=0, sign=Sign.ATTRACTIVE):
    """Preferential attachment grown from a complete graph on m + 1 vertices."""
    n, m = int(n), int(m)
    if m < 1 or m >= n:
        raise ValidationError(f"Barabasi-Albert needs 1 <= m < n, got m={m}, n={n}")
    seed_graph = nx.complete_graph(m + 1)
    if n == m + 1:
        g = seed_graph
    else:
        g = nx.barabasi_albert_graph(n, m, seed=_graph_rng(seed), initial_graph=seed_graph)
    geometry = {"family": "ba", "m": m, "seed": int(seed)}
    return _from_nx(g, n, sign, geometry)


def connectivity(net):
    """Mean vertex degree divided by N - 1."""
    return 2.0 * net.n_edges / (net.n * (net.n - 1))


# --- edge-list text format -------------------------------------------------


def _format_params(geometry):
    parts = []
    for key, value in geometry.items():
        if key == "family":
            continue
        if isinstance(value, (list, tuple)):
            value = "x".join(str(v) for v in value)
        parts.append(f"{key}:{value}")
    return ";".join(parts)


def _parse_params(text):
    params = {}
    if not text:
        return params
    for item in text.split(";"):
        key, _, value = item.partition(":")
        if key == "dims":
            params[key] = [int(v) for v in value.split("x")]
        elif key == "periodic":
            params[key] = value == "True"
        elif key in ("k", "m", "seed"):
            params[key] = int(value)
        elif key == "p":
            params[key] = float(value)
        else:
            params[key] = value
    return params


def write_edgelist(net, path_or_buffer):
    """Header ``# n=<N> sign=<+|-> family=<name> params=<...>`` then ``i j weight`` lines."""
    lines = [f"# n={net.n} sign={net.sign.symbol} family={net.family} params={_format_params(net.geometry)}"]
    lines.extend(f"{i} {j} {w!r}" for i, j, w in zip(net.rows.tolist(), net.cols.tolist(), net.weights.tolist()))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buffer, "write"):
        path_or_buffer.write(text)
    else:
        from ._io import atomic_write_text

        atomic_write_text(path_or_buffer, text)


def read_edgelist(path_or_buffer):
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, encoding="utf-8") as fh:
            text = fh.read()
    buf = io.StringIO(text)
    header = buf.readline()
    if not header.startswith("#"):
        raise ParseError("edge list must start with a '# n=...' header", header.strip(), 0)
    fields = {}
    for token in header[1:].split():
        key, eq, value = token.partition("=")
        if not eq:
            raise ParseError("malformed header token", token, header.find(token))
        fields[key] = value
    if "n" not in fields:
        raise ParseError("header lacks n=<N>", header.strip(), 0)
    n = int(fields["n"])
    sign = Sign.parse(fields.get("sign", "-"))
    geometry = {"family": fields.get("family", "custom")}
    geometry.update(_parse_params(fields.get("params", "")))
    rows, cols, weights = [], [], []
    for lineno, line in enumerate(buf, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'i j weight'", line, 0)
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        if i > j:
            i, j = j, i
        rows.append(i)
        cols.append(j)
        weights.append(w)
    weights = np.asarray(weights, dtype=float)
    if weights.size and np.any(np.sign(weights) != sign.value):
        raise ValidationError("all edge weights must carry the header sign")
    return InteractionNetwork(n, rows, cols, weights, sign, geometry)
