import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rogmap.index import ConfigError
from rogmap.occupancy import (
    MapConfig, OccState, ProbParams, Transition, apply_batch, classify_transition, dump_config,
    load_config, log_odds, probability_of, state_array, state_of,
)

P = ProbParams()


def test_log_odds_values():
    assert log_odds(0.5) == 0.0
    assert log_odds(0.7) == pytest.approx(0.8472978603872037, abs=1e-12)
    assert log_odds(0.4) == pytest.approx(-0.4054651081081645, abs=1e-12)
    for p in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            log_odds(p)


def test_probability_inverts_log_odds():
    for p in np.linspace(0.01, 0.99, 50):
        assert probability_of(log_odds(p)) == pytest.approx(p, abs=1e-12)


def test_prob_params_validation():
    with pytest.raises(ConfigError):
        ProbParams(p_min=0.5, p_max=0.4)
    with pytest.raises(ConfigError):
        ProbParams(p_hit=1.0)


def test_state_thresholds_closed_at_occ_open_at_free():
    assert state_of(P.l_occ, P) is OccState.OCCUPIED
    assert state_of(np.nextafter(P.l_occ, -1), P) is OccState.UNKNOWN
    assert state_of(P.l_free, P) is OccState.UNKNOWN
    assert state_of(np.nextafter(P.l_free, -1), P) is OccState.KNOWN_FREE
    assert state_of(0.0, P) is OccState.UNKNOWN
    v = np.array([P.l_occ, P.l_free, -5.0, 5.0, 0.0])
    assert state_array(v, P).tolist() == [2, 0, 1, 2, 0]


def test_apply_batch_examples():
    l, t = apply_batch(0.0, 1, 0, P)
    assert l == pytest.approx(0.8473, abs=1e-4) and t is Transition.RISING
    l, t = apply_batch(0.8473, 0, 3, P)
    assert l == pytest.approx(0.8473 + 3 * math.log(0.4 / 0.6), abs=1e-12)
    assert l == pytest.approx(-0.3692, abs=2e-4) and t is Transition.FALLING
    l, t = apply_batch(P.l_max, 5, 0, P)
    assert l == P.l_max and t is Transition.NONE
    l, t = apply_batch(P.l_min, 0, 5, P)
    assert l == P.l_min
    with pytest.raises(ValueError):
        apply_batch(0.0, 0, 0, P)


def test_classify_transition_table():
    O, U, F = OccState.OCCUPIED, OccState.UNKNOWN, OccState.KNOWN_FREE
    assert classify_transition(U, O) is Transition.RISING
    assert classify_transition(F, O) is Transition.RISING
    assert classify_transition(O, U) is Transition.FALLING
    assert classify_transition(O, F) is Transition.FALLING
    assert classify_transition(U, F) is Transition.NONE
    assert classify_transition(O, O) is Transition.NONE


def _bayes_hits(k, p_hit):
    """Posterior after k independent hits from a 0.5 prior, by direct Bayes updates."""
    p = 0.5
    for _ in range(k):
        p = p_hit * p / (p_hit * p + (1 - p_hit) * (1 - p))
    return p


def test_log_odds_sum_matches_bayes():
    for k in range(1, 21):
        assert probability_of(k * P.l_hit) == pytest.approx(_bayes_hits(k, 0.7), abs=1e-9)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)).filter(lambda c: sum(c) > 0), min_size=1, max_size=30))
def test_clamp_keeps_range(seq):
    l = 0.0
    for h, m in seq:
        l, _ = apply_batch(l, h, m, P)
        assert P.l_min <= l <= P.l_max


def test_config_file_round_trip(tmp_path):
    cfg = MapConfig(resolution=0.05, map_size=(3, 3, 1), inflation_distance=0.1, prob=ProbParams(p_hit=0.8))
    dump_config(cfg, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg


def test_config_file_partial_and_unknown(tmp_path):
    (tmp_path / "c.yaml").write_text("resolution: 0.2\np_occ: 0.8\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.resolution == 0.2 and cfg.prob.p_occ == 0.8 and cfg.inflation_distance == 0.3
    (tmp_path / "d.yaml").write_text("resolutoin: 0.2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "d.yaml")


def test_config_validation():
    with pytest.raises(ConfigError):
        MapConfig(resolution=0.0)
    with pytest.raises(ConfigError):
        MapConfig(map_size=(1, 1))
    assert MapConfig().replace(resolution=None, inflation_distance=0.5).inflation_distance == 0.5
