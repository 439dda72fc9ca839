"""Detector error model and exact minimum-weight perfect matching decoder.

The graph is built from the Pauli-twirled version of the noise model: the
coherent crosstalk modes are decoded as if each crosstalk site were a
``Z⊗Z`` flip with probability ``sin^2 theta``.

Matching works on integer weights, ``round(ln((1-p)/p) * WEIGHT_SCALE)``,
so equal-weight alternatives compare exactly and the blossom solver's fixed
scan order decides every tie.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .frame import FaultTable, build_fault_table
from .noise import DEPOL1, DEPOL2, NoiseConfig, NoiseProgram

try:
    from ._cblossom import min_weight_perfect_matching as _mwpm_compiled
except ImportError:  # pragma: no cover - extension not built
    _mwpm_compiled = None
from ._blossom import min_weight_perfect_matching as _mwpm_python

MATCHERS = {"python": _mwpm_python}
if _mwpm_compiled is not None:
    MATCHERS["compiled"] = _mwpm_compiled

WEIGHT_SCALE = 1 << 20
BOUNDARY = -1
_MAX_BRUTE_DEFECTS = 10
_CACHE_LIMIT = 1 << 16


def merge_probability(pa: float, pb: float) -> float:
    """Probability that exactly one of two independent mechanisms fires."""
    return pa + pb - 2.0 * pa * pb


@dataclass(frozen=True)
class Edge:
    u: int
    v: int  # BOUNDARY for boundary edges
    p: float
    obsflip: bool

    @property
    def weight(self) -> float:
        return math.log((1.0 - self.p) / self.p)

    @property
    def is_boundary(self) -> bool:
        return self.v == BOUNDARY


@dataclass(frozen=True)
class DetectorGraph:
    """Detectors ``0..num_detectors-1`` plus one virtual boundary node."""

    num_detectors: int
    edges: tuple
    dropped: int = 0  # hyperedge mechanisms without an exact decomposition

    def to_text(self) -> str:
        lines = []
        for e in self.edges:
            if e.is_boundary:
                lines.append(f"BEDGE {e.u} {e.p!r} {int(e.obsflip)}")
            else:
                lines.append(f"EDGE {e.u} {e.v} {e.p!r} {int(e.obsflip)}")
        return f"DETECTORS {self.num_detectors}\n" + "".join(s + "\n" for s in lines)

    @classmethod
    def from_text(cls, text: str) -> DetectorGraph:
        ndet = None
        edges = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "DETECTORS":
                ndet = int(rest[0])
            elif head == "EDGE":
                edges.append(Edge(int(rest[0]), int(rest[1]), float(rest[2]), rest[3] == "1"))
            elif head == "BEDGE":
                edges.append(Edge(int(rest[0]), BOUNDARY, float(rest[1]), rest[2] == "1"))
            else:
                raise ValueError(f"unknown graph line {raw!r}")
        if ndet is None:
            ndet = 1 + max((max(e.u, e.v) for e in edges), default=-1)
        return cls(ndet, tuple(edges))


def _split_mask(mask: int, ndet: int) -> tuple[tuple, bool]:
    dets = tuple(i for i in range(ndet) if (mask >> i) & 1)
    return dets, bool((mask >> ndet) & 1)


def _edge_key(dets: tuple) -> tuple:
    return (dets[0], BOUNDARY) if len(dets) == 1 else (dets[0], dets[1])


def _component_codes(kind: int, code: int) -> list:
    """Fault codes of the X part and the Z part of a depolarizing fault."""
    if kind == DEPOL1:
        return [1, 3] if code == 2 else []
    if kind == DEPOL2:
        a, b = divmod(code, 4)
        xs = 4 * (1 if a in (1, 2) else 0) + (1 if b in (1, 2) else 0)
        zs = 4 * (3 if a in (2, 3) else 0) + (3 if b in (2, 3) else 0)
        return [xs, zs] if xs and zs else []
    return []


def build_detector_graph(circuit, noise: NoiseConfig, table: FaultTable | None = None) -> DetectorGraph:
    """Enumerate every fault, propagate it and collect the graphlike edges."""
    ndet = len(circuit.detectors)
    if ndet == 0:
        raise ValueError("circuit has no detectors")
    twirled = noise.with_(crosstalk_mode="pta") if noise.crosstalk_mode in ("coherent", "random_sign") else noise
    program = NoiseProgram(circuit, twirled)
    if table is None:
        table = build_fault_table(circuit)

    graphlike: dict[int, float] = {}
    hyper = []
    for s in range(program.num_sites):
        rate = float(program.rates[s])
        if rate <= 0.0:
            continue
        mult = int(program.mult[s])
        share = rate / mult
        for code in range(1, mult + 1):
            mask = table.masks[s][code]
            if mask & ((1 << ndet) - 1) == 0:
                continue  # undetectable (possibly a logical) fault
            if bin(mask & ((1 << ndet) - 1)).count("1") <= 2:
                graphlike[mask] = merge_probability(graphlike.get(mask, 0.0), share)
            else:
                split = _component_codes(int(program.kinds[s]), code)
                hyper.append((mask, share, [table.masks[s][c] for c in split]))

    # graphlike mechanisms, split by observable flip for the merge rule
    parts: dict[tuple, list] = {}
    for mask in sorted(graphlike):
        dets, obs = _split_mask(mask, ndet)
        slot = parts.setdefault(_edge_key(dets), [0.0, 0.0])
        slot[obs] = merge_probability(slot[obs], graphlike[mask])

    def edge_obs(key):
        slot = parts[key]
        return slot[1] > slot[0]

    dropped = 0
    extra: list = []
    for mask, p, components in hyper:
        dets, obs = _split_mask(mask, ndet)
        found = None
        # the fault's own X and Z parts are the natural decomposition
        if len(components) == 2:
            (d1, o1), (d2, o2) = (_split_mask(m, ndet) for m in components)
            if 1 <= len(d1) <= 2 and 1 <= len(d2) <= 2 and set(d1).isdisjoint(d2):
                k1, k2 = _edge_key(d1), _edge_key(d2)
                if k1 in parts and k2 in parts:
                    found = (k1, k2)
        if found is None and len(dets) in (3, 4):
            for r in (1, 2):
                for first in itertools.combinations(dets, r):
                    rest = tuple(d for d in dets if d not in first)
                    if len(rest) > 2:
                        continue
                    k1, k2 = _edge_key(first), _edge_key(rest)
                    if k1 in parts and k2 in parts and edge_obs(k1) ^ edge_obs(k2) == obs:
                        found = (k1, k2)
                        break
                if found:
                    break
        if found is None:
            dropped += 1
            continue
        extra.extend((k, p) for k in found)
    if dropped:
        warnings.warn(f"dropped {dropped} hyperedge mechanism(s) with no two-edge decomposition",
                      RuntimeWarning, stacklevel=2)

    merged = {}
    for key, slot in parts.items():
        # parallel mechanisms with opposite observable parity: the likelier sets the flag
        merged[key] = [merge_probability(slot[0], slot[1]), slot[1] > slot[0]]
    for key, p in extra:
        merged[key][0] = merge_probability(merged[key][0], p)

    edges = []
    for (u, v), (p, obs) in sorted(merged.items(), key=lambda kv: (kv[0][0], kv[0][1] % (ndet + 1))):
        if p <= 0.0:
            continue
        edges.append(Edge(u, v, min(p, 0.5 - 1e-12), bool(obs)))
    return DetectorGraph(ndet, tuple(edges), dropped)


@dataclass(frozen=True)
class DecodeResult:
    prediction: bool
    matching: tuple  # (defect, partner) pairs; partner BOUNDARY for the boundary
    weight: int  # integer matched weight (units of 1 / WEIGHT_SCALE)

    @property
    def float_weight(self) -> float:
        return self.weight / WEIGHT_SCALE


def quantize_weight(p: float) -> int:
    return max(1, int(round(math.log((1.0 - p) / p) * WEIGHT_SCALE)))


@dataclass
class Decoder:
    """All-pairs shortest paths on a detector graph plus exact matching.

    Immutable after construction apart from a syndrome cache whose entries
    are pure functions of the syndrome, so concurrent ``decode`` calls are
    safe.
    """

    graph: DetectorGraph
    matcher: str = "compiled" if _mwpm_compiled is not None else "python"
    dist: np.ndarray = field(init=False, repr=False)
    parity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.matcher not in MATCHERS:
            raise ValueError(f"matcher {self.matcher!r} unavailable (have {sorted(MATCHERS)})")
        self._match = MATCHERS[self.matcher]
        g = self.graph
        nd = g.num_detectors
        nn = nd + 1  # boundary is node nd
        rows, cols, wts = [], [], []
        obs = np.zeros((nn, nn), dtype=np.uint8)
        for e in g.edges:
            v = nd if e.is_boundary else e.v
            w = quantize_weight(e.p)
            rows += [e.u, v]
            cols += [v, e.u]
            wts += [w, w]
            obs[e.u, v] = obs[v, e.u] = int(e.obsflip)
        adj = csr_matrix((np.array(wts, dtype=np.float64), (rows, cols)), shape=(nn, nn))
        dist, pred = dijkstra(adj, directed=True, return_predecessors=True)
        self._inf = ~np.isfinite(dist)
        self.dist = np.where(self._inf, -1, dist).astype(np.int64)
        # observable parity of each shortest path, following the predecessor tree
        parity = np.zeros((nn, nn), dtype=np.uint8)
        for s in range(nn):
            ps = pred[s]
            row = parity[s]
            known = np.zeros(nn, dtype=bool)
            known[s] = True
            for v in range(nn):
                if known[v] or ps[v] < 0:
                    continue
                chain = []
                x = v
                while not known[x]:
                    chain.append(x)
                    x = ps[x]
                acc = row[x]
                for y in reversed(chain):
                    acc ^= obs[ps[y], y]
                    row[y] = acc
                    known[y] = True
        self.parity = parity
        self._cache: dict = {}

    @property
    def num_detectors(self) -> int:
        return self.graph.num_detectors

    def _defects(self, syndrome) -> tuple:
        nd = self.graph.num_detectors
        if isinstance(syndrome, (int, np.integer)):
            s = int(syndrome)
            if s >> nd:
                raise ValueError("syndrome has bits beyond the detector count")
            out = []
            while s:
                low = s & -s
                out.append(low.bit_length() - 1)
                s ^= low
            return tuple(out)
        bits = np.asarray(syndrome).astype(bool).ravel()
        if bits.size != nd:
            raise ValueError(f"syndrome length {bits.size} != {nd} detectors")
        return tuple(int(i) for i in np.flatnonzero(bits))

    def pair_cost(self, a: int, b: int) -> int | None:
        """Integer shortest-path weight between two nodes (BOUNDARY allowed)."""
        nd = self.graph.num_detectors
        a = nd if a == BOUNDARY else a
        b = nd if b == BOUNDARY else b
        return None if self._inf[a, b] else int(self.dist[a, b])

    def path_parity(self, a: int, b: int) -> bool:
        nd = self.graph.num_detectors
        a = nd if a == BOUNDARY else a
        b = nd if b == BOUNDARY else b
        return bool(self.parity[a, b])

    def decode(self, syndrome) -> DecodeResult:
        defects = self._defects(syndrome)
        hit = self._cache.get(defects)
        if hit is not None:
            return hit
        result = self._decode(defects)
        if len(self._cache) >= _CACHE_LIMIT:
            self._cache.clear()
        self._cache[defects] = result
        return result

    def _decode(self, defects: tuple) -> DecodeResult:
        k = len(defects)
        if k == 0:
            return DecodeResult(False, (), 0)
        nd = self.graph.num_detectors
        dist, inf = self.dist, self._inf
        bcost = [None if inf[d, nd] else int(dist[d, nd]) for d in defects]
        edges = []
        for i in range(k):
            di = defects[i]
            for j in range(i + 1, k):
                dj = defects[j]
                if inf[di, dj]:
                    continue
                c = int(dist[di, dj])
                # a pair strictly dearer than sending both to the boundary is never optimal
                if bcost[i] is not None and bcost[j] is not None and c > bcost[i] + bcost[j]:
                    continue
                edges.append((i, j, c))
        for i in range(k):
            if bcost[i] is not None:
                edges.append((i, k + i, bcost[i]))
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((k + i, k + j, 0))
        try:
            mate = self._match(2 * k, edges)
        except ValueError as exc:
            raise ValueError("syndrome cannot be matched (unreachable boundary)") from exc
        pairs = []
        total = 0
        pred = 0
        for i in range(k):
            m = mate[i]
            if m == k + i:
                pairs.append((defects[i], BOUNDARY))
                total += bcost[i]
                pred ^= int(self.parity[defects[i], nd])
            elif m < k and m > i:
                pairs.append((defects[i], defects[m]))
                total += int(dist[defects[i], defects[m]])
                pred ^= int(self.parity[defects[i], defects[m]])
        return DecodeResult(bool(pred), tuple(pairs), total)


def decode(graph_or_decoder, syndrome) -> DecodeResult:
    dec = graph_or_decoder if isinstance(graph_or_decoder, Decoder) else Decoder(graph_or_decoder)
    return dec.decode(syndrome)


def brute_force_match(decoder: Decoder, defects) -> tuple[int, tuple]:
    """Exhaustive minimum over every pairing of the defects (boundary included)."""
    defects = tuple(sorted(defects))
    if len(defects) > _MAX_BRUTE_DEFECTS:
        raise ValueError(f"brute force limited to {_MAX_BRUTE_DEFECTS} defects")
    best = [None, ()]

    def rec(rest, acc, pairs):
        if best[0] is not None and acc > best[0]:
            return
        if not rest:
            if best[0] is None or acc < best[0]:
                best[0], best[1] = acc, tuple(pairs)
            return
        a = rest[0]
        c = decoder.pair_cost(a, BOUNDARY)
        if c is not None:
            rec(rest[1:], acc + c, pairs + [(a, BOUNDARY)])
        for i in range(1, len(rest)):
            c = decoder.pair_cost(a, rest[i])
            if c is not None:
                rec(rest[1:i] + rest[i + 1:], acc + c, pairs + [(a, rest[i])])

    rec(defects, 0, [])
    if best[0] is None:
        raise ValueError("defects cannot be matched")
    return best[0], best[1]
