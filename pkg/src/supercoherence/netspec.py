"""Compact text descriptions of interaction networks.

Grammar (parameters separated by commas, optional trailing ``sign=+|-``)::

    all
    lattice:d=1000            lattice:d=10x10,periodic=false
    ws:k=4,p=1
    er:p=0.05
    ba:m=2
    none                      no couplings
    file:<path>               edge list written by network.write_edgelist

Random families are seeded at build time, so one spec describes a whole
ensemble of graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import network as nw
from .errors import ParseError, ValidationError
from .meanfield import MeanFieldAllToAll
from .network import Sign

_KEYS = {
    "all": {},
    "none": {},
    "lattice": {"d": "dims", "periodic": "bool"},
    "ws": {"k": "int", "p": "prob"},
    "er": {"p": "prob"},
    "ba": {"m": "int"},
}
_REQUIRED = {"lattice": {"d"}, "ws": {"k", "p"}, "er": {"p"}, "ba": {"m"}}


@dataclass(frozen=True)
class NetworkSpec:
    family: str
    params: dict = field(default_factory=dict)
    sign: Sign = Sign.ATTRACTIVE
    text: str = ""

    @property
    def random(self):
        return self.family in ("ws", "er", "ba")

    def build(self, n, seed=0, collective=True):
        """Concrete network for ``n`` spins.

        ``all`` maps to the O(N) collective coupling unless ``collective`` is
        False, in which case the explicit complete graph is returned.
        """
        p = self.params
        if self.family == "all":
            return MeanFieldAllToAll(self.sign) if collective else nw.all_to_all(n, self.sign)
        if self.family == "none":
            return nw.empty_network(n, self.sign)
        if self.family == "lattice":
            dims = p["d"]
            size = 1
            for d in dims:
                size *= d
            if size != n:
                raise ValidationError(f"lattice {'x'.join(map(str, dims))} has {size} sites but n={n}")
            return nw.lattice(dims, p.get("periodic", True), self.sign)
        if self.family == "ws":
            return nw.watts_strogatz(n, p["k"], p["p"], seed, self.sign)
        if self.family == "er":
            return nw.erdos_renyi(n, p["p"], seed, self.sign)
        if self.family == "ba":
            return nw.barabasi_albert(n, p["m"], seed, self.sign)
        if self.family == "file":
            net = nw.read_edgelist(p["path"])
            if net.n != n:
                raise ValidationError(f"edge list has {net.n} vertices but n={n}")
            return net
        raise ValidationError(f"unknown network family {self.family!r}")

    def natural_size(self):
        """Vertex count fixed by the spec itself (lattice dims), or None."""
        if self.family == "lattice":
            size = 1
            for d in self.params["d"]:
                size *= d
            return size
        return None


def _value(kind, raw, text, pos):
    try:
        if kind == "int":
            return int(raw)
        if kind == "prob":
            v = float(raw)
            if not 0.0 <= v <= 1.0:
                raise ParseError("expected a probability in [0, 1]", text, pos)
            return v
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ParseError("expected true or false", text, pos)
        if kind == "dims":
            dims = [int(d) for d in raw.lower().split("x")]
            if any(d < 1 for d in dims):
                raise ParseError("lattice sides must be positive", text, pos)
            return dims
    except ParseError:
        raise
    except ValueError:
        raise ParseError(f"expected {kind} value", text, pos) from None
    raise AssertionError(kind)


def parse_network_spec(text):
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty network spec", str(text), 0)
    text = text.strip()
    head, colon, rest = text.partition(":")
    family = head.strip().lower()
    if family == "file":
        if not rest:
            raise ParseError("expected a path after 'file:'", text, len(text))
        return NetworkSpec("file", {"path": rest}, Sign.ATTRACTIVE, text)
    sign = Sign.ATTRACTIVE
    if family.startswith(("all,", "none,")):
        family, _, rest = head.partition(",")
        colon = ":"
    if family not in _KEYS:
        raise ParseError(f"expected one of {', '.join(list(_KEYS) + ['file'])}", text, 0)
    allowed = _KEYS[family]
    params = {}
    pos = len(head) + len(colon)
    if rest:
        for item in rest.split(","):
            key, eq, raw = item.partition("=")
            key = key.strip().lower()
            if not eq:
                raise ParseError("expected key=value", text, pos)
            if key == "sign":
                try:
                    sign = Sign.parse(raw.strip())
                except ValidationError:
                    raise ParseError("expected sign=+ or sign=-", text, pos + len(key) + 1) from None
            elif key in allowed:
                if key in params:
                    raise ParseError(f"duplicate parameter {key}", text, pos)
                params[key] = _value(allowed[key], raw.strip(), text, pos + len(key) + 1)
            else:
                expected = ", ".join(sorted(allowed) + ["sign"])
                raise ParseError(f"unknown parameter {key!r}; expected one of {expected}", text, pos)
            pos += len(item) + 1
    missing = _REQUIRED.get(family, set()) - set(params)
    if missing:
        raise ParseError(f"missing parameter(s) {', '.join(sorted(missing))}", text, len(text))
    if family == "ws":
        k = params["k"]
        if k % 2 or k < 2:
            raise ParseError(f"ws needs an even k >= 2, got {k}", text, text.find("k=") + 2)
    if family == "ba" and params["m"] < 1:
        raise ParseError("ba needs m >= 1", text, text.find("m=") + 2)
    return NetworkSpec(family, params, sign, text)
