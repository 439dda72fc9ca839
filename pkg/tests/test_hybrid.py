import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crosstalk_qec.hybrid import HybridState
from crosstalk_qec.pauli import PauliString
from dense_oracle import DenseState


def _run_random(seed, n, steps, absorb):
    rng = np.random.default_rng(seed)
    hs = HybridState(n, chi_max=None, rng=np.random.default_rng(seed + 1), absorb=absorb)
    ds = DenseState(n)
    for _ in range(steps):
        r = rng.random()
        if r < 0.4:
            if rng.random() < 0.5:
                q = int(rng.integers(n))
                g = str(rng.choice(["H", "S", "X", "Z"]))
                hs.apply_clifford(g, q)
                ds.apply_gate(g, q)
            else:
                a, b = (int(v) for v in rng.choice(n, 2, replace=False))
                hs.apply_clifford("CNOT", a, b)
                ds.apply_gate("CNOT", a, b)
        elif r < 0.7:
            p = PauliString.random(n, rng, hermitian=True)
            th = float(rng.uniform(-0.8, 0.8))
            hs.apply_pauli_rotation(th, p)
            ds.apply_rotation(th, p.to_matrix())
        elif r < 0.8:
            p = PauliString.random(n, rng, hermitian=True)
            hs.apply_pauli(p)
            ds.apply_matrix(p.to_matrix())
        else:
            q = int(rng.integers(n))
            prob_plus = 0.5 * (1 + hs.expectation(PauliString(n, z=1 << q)))
            assert prob_plus == pytest.approx(ds.prob_z(q, 1), abs=1e-9)
            out = hs.measure_z(q)
            assert ds.prob_z(q, out) > 1e-12
            ds.project_z(q, out)
    return hs, ds, rng


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_hybrid_matches_dense(seed, absorb):
    n = 4
    hs, ds, rng = _run_random(seed, n, 30, absorb)
    for _ in range(6):
        p = PauliString.random(n, rng, hermitian=True)
        assert hs.expectation(p) == pytest.approx(ds.expectation(p.to_matrix()).real, abs=1e-9)


def test_clifford_only_keeps_mps_trivial():
    n = 5
    hs = HybridState(n, rng=np.random.default_rng(0))
    hs.apply_clifford("H", 0)
    for q in range(n - 1):
        hs.apply_clifford("CNOT", q, q + 1)
    for q in range(n):
        hs.measure_z(q)
    assert hs.mps.max_bond() == 1
    assert len(set(hs.record)) == 1  # GHZ outcomes agree


def test_reset_returns_zero():
    hs = HybridState(3, rng=np.random.default_rng(1))
    hs.apply_clifford("H", 0)
    hs.apply_pauli_rotation(0.3, PauliString.from_text("ZXI"))
    hs.reset_qubit(0)
    assert hs.expectation(PauliString.from_text("ZII")) == pytest.approx(1.0)
    assert hs.record == []


def test_rejects_non_hermitian_rotation():
    hs = HybridState(2)
    with pytest.raises(ValueError):
        hs.apply_pauli_rotation(0.1, PauliString(2, x=1, k=1))
