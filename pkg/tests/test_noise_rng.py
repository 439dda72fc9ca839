import math

import numpy as np
import pytest

from crosstalk_qec.circuits import build_layout, build_memory_circuit
from crosstalk_qec.noise import (
    DEPOL1,
    DEPOL2,
    MEAS,
    XTALK,
    NoiseConfig,
    NoiseProgram,
    crosstalk_action,
    depolarizing_code,
    fault_pauli,
    pauli_pair,
    scaled_rates,
    theta_from_hardware,
)
from crosstalk_qec.rng import noise_uniforms, shot_generator


def test_rates_follow_ratios():
    r = scaled_rates(0.01)
    assert r == pytest.approx({"p1": 0.001, "p2": 0.01, "pR": 0.02, "pM": 0.05})


def test_config_text_round_trip():
    cfg = NoiseConfig(p=0.003, theta=0.02, crosstalk_mode="random_sign", crosstalk_policy="all_edges")
    assert NoiseConfig.from_text(cfg.to_text()) == cfg
    assert NoiseConfig.from_text("p = 0.01\n# comment\ntheta = 0.1\n") == NoiseConfig(p=0.01, theta=0.1)


@pytest.mark.parametrize("kw", [{"p": -0.1}, {"p": 0.5}, {"theta": 2.0}, {"crosstalk_mode": "x"},
                                {"crosstalk_policy": "x"}, {"p": 0.1, "ratio_meas": 20.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        NoiseConfig(**kw)


def test_theta_from_hardware_is_plain_product():
    assert theta_from_hardware(150e3, 150e-9) == pytest.approx(0.0225)


def test_pauli_pair_covers_fifteen_nonidentity():
    pairs = {pauli_pair(i) for i in range(1, 16)}
    assert len(pairs) == 15 and ("I", "I") not in pairs


def test_depolarizing_code_uniform():
    rng = np.random.default_rng(0)
    u = rng.random((200000, 2))
    codes = np.array([depolarizing_code(2, 0.3, a, b) for a, b in u])
    assert np.mean(codes > 0) == pytest.approx(0.3, abs=0.005)
    counts = np.bincount(codes[codes > 0], minlength=16)[1:]
    assert np.all(np.abs(counts / counts.sum() - 1 / 15) < 0.005)


def test_crosstalk_actions():
    cfg = NoiseConfig(theta=0.1, crosstalk_mode="pta")
    assert crosstalk_action(cfg, 0.0, 0.0, (0, 1)) == ("pauli", "ZZ", (0, 1))
    assert crosstalk_action(cfg, 0.5, 0.0, (0, 1)) is None
    coh = cfg.with_(crosstalk_mode="coherent")
    assert crosstalk_action(coh, 0.9, 0.9, (0, 1)) == ("rotation", 0.1, (0, 1))
    rs = cfg.with_(crosstalk_mode="random_sign")
    assert crosstalk_action(rs, 0.9, 0.9, (0, 1)) == ("rotation", -0.1, (0, 1))


def test_program_sampling_rates():
    circ = build_memory_circuit(build_layout(3), 3, "x")
    cfg = NoiseConfig(p=0.01, theta=0.2, crosstalk_mode="pta")
    prog = NoiseProgram(circ, cfg)
    hits = np.zeros(prog.num_sites)
    n = 4000
    for s in range(n):
        hits += prog.sample(noise_uniforms(3, s, prog.num_sites)) != 0
    freq = hits / n
    for kind, rate in ((DEPOL1, 0.001), (DEPOL2, 0.01), (MEAS, 0.05), (XTALK, math.sin(0.2) ** 2)):
        sel = prog.kinds == kind
        trials = n * sel.sum()
        assert abs(freq[sel].mean() - rate) < 4 * math.sqrt(rate * (1 - rate) / trials)


def test_coherent_codes_are_signs():
    circ = build_memory_circuit(build_layout(3), 1, "x")
    prog = NoiseProgram(circ, NoiseConfig(p=0.01, theta=0.05, crosstalk_mode="random_sign"))
    codes = prog.sample(noise_uniforms(0, 0, prog.num_sites))
    assert set(codes[prog.xtalk_ids]) <= {-1, 1}
    assert all(prog.kinds[s] != XTALK for s, _ in prog.fault_list(codes))


def test_fault_pauli():
    circ = build_memory_circuit(build_layout(3), 1, "x")
    prog = NoiseProgram(circ, NoiseConfig(p=0.01))
    site = next(s for s in prog.sites if s.kind == DEPOL2)
    p = fault_pauli(site, 4 * 2 + 3, circ.n)  # Y on the first qubit, Z on the second
    assert p.letter(site.qubits[0]) == "Y" and p.letter(site.qubits[1]) == "Z"
    meas = next(s for s in prog.sites if s.kind == MEAS)
    assert fault_pauli(meas, 1, circ.n) is None


def test_streams_are_order_independent():
    a = [noise_uniforms(7, s, 10) for s in range(5)]
    b = [noise_uniforms(7, s, 10) for s in reversed(range(5))][::-1]
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert not np.array_equal(noise_uniforms(7, 0, 10), noise_uniforms(8, 0, 10))
    assert not np.array_equal(shot_generator(7, 0, 0).random(4), shot_generator(7, 0, 1).random(4))
    with pytest.raises(ValueError):
        shot_generator(-1, 0, 0)
