from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellgame.errors import InvalidHiddenState
from bellgame.stats import correlations, chsh, tally
from bellgame.auditor import hp_transcript
from bellgame.strategies import (
    HPHiddenState,
    QuantumAngles,
    hp_outputs,
    hp_reconstruct_fixed,
    hp_reconstruct_settings,
    hp_sample,
    hp_sample_fixed,
    hp_trials,
    quantum_equal_prob,
)
from bellgame.strategies.hp import (
    MASK,
    from_fixed,
    setting_fraction,
    split_uniforms,
    station_a_output,
    station_b_output,
    to_fixed,
)

fixed = st.integers(0, MASK)


@pytest.mark.parametrize("lam2, a, r1", [(0.3, 0.9, 0.2), (0.5, 0.5, 0.0)])
def test_r1_mod_one(lam2, a, r1):
    h = hp_sample(a, 0.0, (0.1, lam2, 0.7))
    assert h.as_floats()["r1"] == pytest.approx(r1, abs=1e-15)


def test_r2_identity():
    h = hp_sample(0.4, 0.0, (0.0, 0.6, 0.7))
    assert h.r2 == 0


def test_reconstruct_examples():
    h = hp_sample(0.9, 0.0, (0.0, 0.3, 0.5))
    a, b = hp_reconstruct_settings(h)
    assert a == pytest.approx(0.9, abs=1e-15)
    assert b == 0.0


@settings(max_examples=300)
@given(fixed, fixed, fixed, fixed, fixed)
def test_round_trip_exact(a, b, u1, u2, u3):
    assert hp_reconstruct_fixed(hp_sample_fixed(a, b, (u1, u2, u3))) == (a, b)


def test_round_trip_ten_thousand():
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 2**63, size=(10_000, 5), dtype=np.int64).astype(object) * 2 + rng.integers(0, 2, size=(10_000, 5)).astype(object)
    for a, b, u1, u2, u3 in vals:
        assert hp_reconstruct_fixed(hp_sample_fixed(a, b, (u1, u2, u3))) == (a, b)


def test_fixed_point_helpers():
    assert to_fixed(0.5) == 1 << 63
    assert to_fixed(1.25) == to_fixed(0.25)
    assert from_fixed(to_fixed(0.3)) == pytest.approx(0.3, abs=1e-16)
    assert setting_fraction(2 * math.pi) == 0


def test_split_uniforms_bits():
    # all even bits set -> U1 just under 1, U2 = 0
    u1, u2 = split_uniforms(0x5555555555555555)
    assert float(u1) == pytest.approx(1 - 2**-32) and float(u2) == 0.0
    u1, u2 = split_uniforms(np.array([0xAAAAAAAAAAAAAAAA], dtype=np.uint64))
    assert u1[0] == 0.0 and u2[0] == pytest.approx(1 - 2**-32)


def test_split_uniforms_are_uniform_and_independent():
    lam = np.random.default_rng(1).integers(0, 2**64, size=50_000, dtype=np.uint64)
    u1, u2 = split_uniforms(lam)
    assert abs(u1.mean() - 0.5) < 0.01 and abs(u2.mean() - 0.5) < 0.01
    assert abs(np.corrcoef(u1, u2)[0, 1]) < 0.02


def test_sign_convention():
    angles = QuantumAngles()
    fa, fb = setting_fraction(angles.alpha(1)), setting_fraction(angles.beta(2))
    h = hp_sample_fixed(fa, fb, (123, 456, 0))  # lam = 0 -> U1 = 0 < 1/2
    assert hp_outputs(h, 1, 2, angles)[0] == 1
    h = hp_sample_fixed(fa, fb, (123, 456, MASK))  # U1 near 1
    assert hp_outputs(h, 1, 2, angles)[0] == -1


def test_inconsistent_state_rejected():
    angles = QuantumAngles()
    h = hp_sample_fixed(setting_fraction(angles.alpha(1)), setting_fraction(angles.beta(1)), (1, 2, 3))
    with pytest.raises(InvalidHiddenState):
        hp_outputs(h, 2, 1, angles)


def test_stations_use_only_their_arguments():
    s = hp_trials(2000, 3)
    for i in range(0, 2000, 97):
        h = s.state(i)
        r = (h.r1, h.r2)
        assert station_a_output(h.lam_star, h.lam, r, int(s.fa[i])) == s.x[i]
        assert station_b_output(h.lam_star2, h.lam, r, int(s.fb[i])) == s.y[i]
        assert hp_outputs(h, int(s.a[i]), int(s.b[i])) == (s.x[i], s.y[i])


def test_equal_fraction_and_marginals():
    angles = QuantumAngles()
    s = hp_trials(100_000, 4, angles, 1, 2)
    assert abs((s.x == s.y).mean() - quantum_equal_prob(angles, 1, 2)) <= 0.005
    assert abs((s.x == 1).mean() - 0.5) <= 0.01 and abs((s.y == 1).mean() - 0.5) <= 0.01


def test_hp_contrast_near_quantum():
    s = hp_trials(100_000, 5)
    rho = correlations(tally(hp_transcript(s)))
    assert chsh(rho[1, 2], rho[1, 1], rho[2, 1], rho[2, 2]) == pytest.approx(2 * math.sqrt(2), abs=0.03)


def test_hidden_state_floats():
    h = HPHiddenState(1 << 63, 0, 1 << 62, 0, 1 << 63)
    assert h.as_floats() == {"lam_star": 0.5, "lam_star2": 0.0, "lam": 0.25, "r1": 0.0, "r2": 0.5}


def test_trials_deterministic():
    s1, s2 = hp_trials(100, 9), hp_trials(100, 9)
    assert np.array_equal(s1.lam, s2.lam) and np.array_equal(s1.x, s2.x)
