import itertools
import warnings

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosstalk_qec import _blossom
from crosstalk_qec.circuits import Circuit, build_layout, build_memory_circuit
from crosstalk_qec.decoder import (
    BOUNDARY,
    MATCHERS,
    Decoder,
    DetectorGraph,
    Edge,
    brute_force_match,
    build_detector_graph,
    decode,
    merge_probability,
    quantize_weight,
)
from crosstalk_qec.frame import build_fault_table
from crosstalk_qec.noise import DEPOL2, NoiseConfig, NoiseProgram, pauli_pair


@pytest.fixture(scope="module")
def d3():
    lay = build_layout(3)
    circ = build_memory_circuit(lay, 3, "x")
    graph = build_detector_graph(circ, NoiseConfig(p=0.01))
    return lay, circ, graph, Decoder(graph)


def test_zero_noise_gives_empty_graph():
    circ = build_memory_circuit(build_layout(3), 2, "x")
    assert build_detector_graph(circ, NoiseConfig(p=0.0)).edges == ()


def test_merge_rule():
    assert merge_probability(0.01, 0.01) == pytest.approx(0.0198)


def test_graph_invariants(d3):
    _, _, graph, _ = d3
    keys = [(e.u, e.v) for e in graph.edges]
    assert len(keys) == len(set(keys))
    for e in graph.edges:
        assert 0 < e.p < 0.5 and e.weight > 0
        assert e.v == BOUNDARY or e.u < e.v
    assert graph.dropped == 0


def test_bulk_data_z_is_one_x_detector_edge(d3):
    lay, circ, graph, dec = d3
    centre = next(q for q in lay.data_qubits if lay.coords[q] == (3, 3))
    prog = NoiseProgram(circ, NoiseConfig(p=0.01))
    table = build_fault_table(circ)
    x_anc = set(lay.x_ancillas)
    nd = graph.num_detectors
    checked = 0
    for s, site in enumerate(prog.sites):
        if site.kind != DEPOL2 or centre not in site.qubits:
            continue
        for code in range(1, 16):
            letters = dict(zip(site.qubits, pauli_pair(code)))
            if letters[centre] != "Z" or any(v != "I" for q, v in letters.items() if q != centre):
                continue
            m = table.masks[s][code]
            dets = [i for i in range(nd) if m >> i & 1]
            if len(dets) != 2 or not all(circ.detector_info[i][1] in x_anc for i in dets):
                continue
            assert not m >> nd & 1
            edge = next(e for e in graph.edges if (e.u, e.v) == tuple(dets))
            assert not edge.obsflip
            res = dec.decode(m & ((1 << nd) - 1))
            assert res.matching == (tuple(dets),) and not res.prediction
            checked += 1
    assert checked > 0


def test_empty_syndrome(d3):
    dec = d3[3]
    res = dec.decode(0)
    assert res.prediction is False and res.matching == () and res.weight == 0
    assert brute_force_match(dec, []) == (0, ())


def test_two_defects_brute_force_is_case_enumeration(d3):
    dec = d3[3]
    a, b = 3, 17
    direct = dec.pair_cost(a, b)
    both = dec.pair_cost(a, BOUNDARY) + dec.pair_cost(b, BOUNDARY)
    assert brute_force_match(dec, [a, b])[0] == min(direct, both)


def test_decode_matches_brute_force(d3):
    dec = d3[3]
    rng = np.random.default_rng(2)
    for _ in range(200):
        k = int(rng.integers(0, 9))
        defects = sorted(int(v) for v in rng.choice(dec.num_detectors, k, replace=False))
        bits = np.zeros(dec.num_detectors, dtype=np.uint8)
        bits[defects] = 1
        res = dec.decode(bits)
        assert res.weight == brute_force_match(dec, defects)[0]


def test_matchers_agree(d3):
    graph = d3[2]
    decs = [Decoder(graph, matcher=m) for m in sorted(MATCHERS)]
    rng = np.random.default_rng(8)
    for _ in range(100):
        syn = int(rng.integers(0, 1 << graph.num_detectors))
        results = [d.decode(syn) for d in decs]
        assert all(r == results[0] for r in results)


def test_brute_force_limit(d3):
    with pytest.raises(ValueError):
        brute_force_match(d3[3], list(range(11)))


def test_text_round_trip(d3):
    graph = d3[2]
    again = DetectorGraph.from_text(graph.to_text())
    assert again.num_detectors == graph.num_detectors and again.edges == graph.edges
    assert graph.to_text().splitlines()[1].split()[0] in ("EDGE", "BEDGE")


def test_unreachable_boundary_is_an_error():
    graph = DetectorGraph(3, (Edge(0, 1, 0.1, False),))
    with pytest.raises(ValueError):
        decode(graph, 0b001)
    with pytest.raises(ValueError):
        decode(graph, [1, 0])


def test_circuit_without_detectors_is_rejected():
    circ = Circuit.from_text("QUBITS 1\nTICK\nPREP_Z 0\nTICK\nM 0\nOBSERVABLE 0\n")
    with pytest.raises(ValueError):
        build_detector_graph(circ, NoiseConfig(p=0.01))


def test_undecomposable_hyperedge_is_dropped_with_warning():
    text = "\n".join([
        "QUBITS 3", "TICK", "PREP_Z 0 1 2", "TICK NOISELESS", "CNOT 0 1",
        "TICK NOISELESS", "CNOT 0 2", "TICK NOISELESS", "M 0 1 2",
        "DETECTOR 0", "DETECTOR 1", "DETECTOR 2", "OBSERVABLE 0",
    ]) + "\n"
    circ = Circuit.from_text(text)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        graph = build_detector_graph(circ, NoiseConfig(p=0.01))
    assert graph.dropped == 1
    assert any("hyperedge" in str(w.message) for w in caught)
    assert {(e.u, e.v) for e in graph.edges} == {(1, BOUNDARY), (2, BOUNDARY)}


def test_y_faults_decompose_into_their_x_and_z_parts():
    circ = build_memory_circuit(build_layout(3), 2, "x")
    graph = build_detector_graph(circ, NoiseConfig(p=0.01))
    assert graph.dropped == 0


def test_quantized_weights_are_positive():
    assert quantize_weight(0.4999999) >= 1
    assert quantize_weight(0.01) > quantize_weight(0.1)


def _graphs(max_n=9):
    return st.integers(1, max_n).flatmap(lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(0, 30)),
                 max_size=3 * n)))


@settings(max_examples=300, deadline=None)
@given(_graphs(), st.booleans())
def test_blossom_matches_networkx(case, maxcard):
    n, raw = case
    edges = {}
    for i, j, w in raw:
        if i != j:
            edges[(min(i, j), max(i, j))] = w
    elist = [(i, j, w) for (i, j), w in sorted(edges.items())]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_weighted_edges_from(elist)
    ref = nx.max_weight_matching(g, maxcardinality=maxcard)
    ref_w = sum(g[a][b]["weight"] for a, b in ref)
    for name in ("python", "compiled"):
        if name == "python":
            mate = _blossom.max_weight_matching(n, elist, maxcard)
        elif name in MATCHERS:
            from crosstalk_qec import _cblossom
            mate = _cblossom.max_weight_matching(n, elist, maxcard)
        else:
            continue
        assert all(mate[mate[v]] == v for v in range(n) if mate[v] >= 0)
        got = sum(edges[(v, mate[v])] for v in range(n) if mate[v] > v)
        assert got == ref_w
        if maxcard:
            assert sum(m >= 0 for m in mate) // 2 == len(ref)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 4).map(lambda k: 2 * k), st.integers(0, 10**6))
def test_min_weight_perfect_matching_is_optimal(n, seed):
    rng = np.random.default_rng(seed)
    edges = [(i, j, int(rng.integers(0, 50))) for i, j in itertools.combinations(range(n), 2)]
    cost = {(i, j): c for i, j, c in edges}

    def best(rest):
        if not rest:
            return 0
        a = rest[0]
        return min(cost[(a, b)] + best(tuple(x for x in rest[1:] if x != b)) for b in rest[1:])

    mate = _blossom.min_weight_perfect_matching(n, edges)
    assert sum(cost[(v, mate[v])] for v in range(n) if mate[v] > v) == best(tuple(range(n)))
