from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellgame.errors import InvalidParameter
from bellgame.protocol import Match, make_tapes, run_match
from bellgame.stats import correlations, chsh, p_equal, tally, z_statistic
from bellgame.strategies import (
    ALL_QUADRUPLES,
    BEST_QUADRUPLES,
    LEGAL_STRATEGIES,
    REGISTRY,
    DeterministicLHV,
    IIDRandom,
    JointOutcomeDistribution,
    MemoryLHV,
    QuantumAngles,
    QuantumCheat,
    always_plus,
    make_strategy,
    quadruple_value,
    quantum_equal_prob,
    quantum_joint_distribution,
    quantum_oracle_batch,
    quantum_oracle_sample,
)
from bellgame.strategies.local import SACRIFICE
from bellgame.strategies.quantum import sample_joint

SQ = 1 / math.sqrt(2)
HIGH, LOW = (1 + SQ) / 2, (1 - SQ) / 2


# ---------------------------------------------------------------- quantum law

def test_equal_prob_same_angle():
    angles = QuantumAngles(0.3, 0.0, 0.3, 0.0)
    assert quantum_equal_prob(angles, 1, 1) == pytest.approx(1.0)


def test_default_angle_table():
    angles = QuantumAngles()
    assert quantum_equal_prob(angles, 1, 2) == pytest.approx(HIGH, abs=1e-12)
    for a, b in [(1, 1), (2, 1), (2, 2)]:
        assert quantum_equal_prob(angles, a, b) == pytest.approx(LOW, abs=1e-12)
    assert HIGH == pytest.approx(0.853553, abs=1e-6)
    assert LOW == pytest.approx(0.146447, abs=1e-6)


def test_printed_angles_put_large_probability_on_2_1():
    angles = QuantumAngles.as_printed()
    assert quantum_equal_prob(angles, 2, 1) == pytest.approx(HIGH)
    assert quantum_equal_prob(angles, 1, 2) == pytest.approx(LOW)
    # the contrast in the expected sign convention comes out at -sqrt(2) - 1, not sqrt(2) - 1
    p = {(a, b): quantum_equal_prob(angles, a, b) for a in (1, 2) for b in (1, 2)}
    assert p[1, 2] - p[1, 1] - p[2, 1] - p[2, 2] < 0


def test_angles_stored_as_given():
    angles = QuantumAngles(0.1, 0.2, 0.3, 0.4)
    assert (angles.alpha(1), angles.alpha(2), angles.beta(1), angles.beta(2)) == (0.1, 0.2, 0.3, 0.4)


@pytest.mark.parametrize("delta, expected", [
    (0.0, (0.5, 0, 0, 0.5)),
    (math.pi / 2, (0, 0.5, 0.5, 0)),
    (math.pi / 4, (0.25, 0.25, 0.25, 0.25)),
])
def test_joint_distribution_special_angles(delta, expected):
    d = quantum_joint_distribution(QuantumAngles(delta, delta, 0.0, 0.0), 1, 1)
    assert tuple(d) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=100)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_joint_distribution_normalized_with_half_marginals(alpha, beta):
    d = quantum_joint_distribution(QuantumAngles(alpha, 0, beta, 0), 1, 1)
    assert min(d) >= 0
    assert sum(d) == pytest.approx(1.0)
    assert d.marginal_x_plus == pytest.approx(0.5)
    assert d.marginal_y_plus == pytest.approx(0.5)
    assert d.equal == pytest.approx(math.cos(alpha - beta) ** 2)


def test_inverse_cdf_order():
    d = JointOutcomeDistribution(0.5, 0, 0, 0.5)
    assert sample_joint(d, 0.1) == (1, 1)
    assert sample_joint(d, 0.9) == (-1, -1)
    d = JointOutcomeDistribution(0.25, 0.25, 0.25, 0.25)
    assert [sample_joint(d, u) for u in (0.1, 0.3, 0.6, 0.8)] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]


def test_oracle_equal_fraction():
    angles = QuantumAngles()
    u = np.random.default_rng(0).random(100_000)
    x, y = quantum_oracle_batch(angles, np.full(u.size, 1), np.full(u.size, 2), u)
    assert abs((x == y).mean() - quantum_equal_prob(angles, 1, 2)) <= 0.005


@settings(max_examples=200)
@given(st.integers(1, 2), st.integers(1, 2), st.floats(0, 1, exclude_max=True))
def test_batch_agrees_with_scalar(a, b, u):
    angles = QuantumAngles()
    x, y = quantum_oracle_batch(angles, np.array([a]), np.array([b]), np.array([u]))
    assert (int(x[0]), int(y[0])) == quantum_oracle_sample(angles, a, b, u)


def test_oracle_match_contrast():
    N = 100_000
    t = run_match(make_strategy("quantum-oracle", 1), make_tapes(1, N), N)
    c = tally(t)
    p = p_equal(c)
    assert p[1, 2] - p[1, 1] - p[2, 1] - p[2, 2] == pytest.approx(math.sqrt(2) - 1, abs=0.01)
    rho = correlations(c)
    assert chsh(rho[1, 2], rho[1, 1], rho[2, 1], rho[2, 2]) == pytest.approx(2 * math.sqrt(2), abs=0.03)


def test_cheat_x_ignores_far_setting_y_does_not():
    # freeze each trial after emission; X's answer never depends on b, Y's depends on a
    m = Match(QuantumCheat(0))
    y_flips = 0
    for _ in range(400):
        m.emit()
        xs = set()
        for b in (1, 2):
            f = m.fork(full=False)
            xs.add(f.respond("X", 1))
            f.respond("Y", b)
        assert len(xs) == 1
        ys = []
        for a in (1, 2):
            f = m.fork(full=False)
            f.respond("X", a)
            ys.append(f.respond("Y", 2))
        y_flips += ys[0] != ys[1]
        x, y = m.respond("X", 1), m.respond("Y", 2)
        m.commit(1, 2, x, y)
    assert y_flips > 0


# ---------------------------------------------------------------- local strategies

def test_quadruple_values():
    assert quadruple_value(1, 1, 1, 1) == -2
    assert quadruple_value(1, 1, -1, 1) == 0
    assert {quadruple_value(*q) for q in ALL_QUADRUPLES} == {0, -2}
    assert len(BEST_QUADRUPLES) == 8


def test_sacrifice_tables_lose_exactly_their_pair():
    signs = {(1, 2): 1, (1, 1): -1, (2, 1): -1, (2, 2): -1}
    for pair, options in SACRIFICE.items():
        assert options
        for x1, x2, y1, y2 in options:
            xs, ys = {1: x1, 2: x2}, {1: y1, 2: y2}
            wins = {p: (xs[p[0]] == ys[p[1]]) == (signs[p] > 0) for p in signs}
            assert [p for p, w in wins.items() if not w] == [pair]


def test_deterministic_tables_are_followed():
    s = DeterministicLHV(tables=(1, -1, 1, 1))
    t = run_match(s, make_tapes(1, 200), 200)
    assert (t.x == np.where(t.a == 1, 1, -1)).all()
    assert (t.y == 1).all()


def test_deterministic_table_sequence_cycles():
    rows = [(1, 1, 1, 1), (-1, -1, -1, -1)]
    t = run_match(DeterministicLHV(tables=rows), make_tapes(2, 10), 10)
    assert t.x.tolist() == [1, -1] * 5


def test_deterministic_rejects_bad_tables():
    with pytest.raises(InvalidParameter):
        DeterministicLHV(tables=(1, 0, 1, 1))
    with pytest.raises(InvalidParameter):
        DeterministicLHV(tables=[(1, 1, 1)])


def test_always_plus():
    t = run_match(always_plus(), make_tapes(3, 50), 50)
    assert (t.x == 1).all() and (t.y == 1).all()


def test_iid_random_drift_is_minus_quarter():
    # independent fair outcomes are equal half the time, so E[Delta] = (1/4)(1/2)(1 - 3) = -1/4
    N = 40_000
    t = run_match(IIDRandom(5), make_tapes(5, N), N)
    z = z_statistic(tally(t))
    assert abs(z / N + 0.25) <= 4 * math.sqrt((0.5 - 0.0625) / N)
    assert abs((t.x == 1).mean() - 0.5) < 0.01


def test_memory_lhv_balances_sacrifices_and_stays_local():
    N = 20_000
    t = run_match(MemoryLHV(2), make_tapes(2, N), N)
    z = z_statistic(tally(t))
    # optimal local play: drift exactly 0, Z is a martingale
    assert abs(z) <= 4 * math.sqrt(N)
    with pytest.raises(InvalidParameter):
        MemoryLHV(explore=2.0)


def test_memory_lhv_uses_history():
    # same strategy randomness, different past settings, different future answers
    tapes_a = make_tapes(1, 300)
    tapes_b = (tapes_a[0].flipped(1), tapes_a[1])
    t1 = run_match(MemoryLHV(0), tapes_a, 300)
    t2 = run_match(MemoryLHV(0), tapes_b, 300)
    assert not np.array_equal(t1.x[1:], t2.x[1:])


def test_registry_and_factory():
    assert set(LEGAL_STRATEGIES) == {"deterministic-lhv", "memory-lhv", "iid-random"}
    assert set(REGISTRY) >= {"quantum-oracle", "quantum-cheat"}
    s = make_strategy("quantum-oracle", 3, {"angles": [0.0, 1.0, 0.0, 1.0]})
    assert s.angles == QuantumAngles(0.0, 1.0, 0.0, 1.0)
    assert make_strategy("memory-lhv", 0, {"explore": 0.3}).explore == 0.3
    with pytest.raises(InvalidParameter):
        make_strategy("no-such")
    with pytest.raises(InvalidParameter):
        make_strategy("iid-random", 0, {"bogus": 1})


def test_with_seed_changes_only_randomness():
    s = MemoryLHV(1, explore=0.4)
    c = s.with_seed(2)
    assert c.explore == 0.4 and c.seed == 2 and s.seed == 1
    assert c.stream.uniform(0) != s.stream.uniform(0)
