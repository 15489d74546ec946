from __future__ import annotations

import numpy as np
import pytest

from trustprop import (
    ConvergenceConfig,
    DeltaNorm,
    LayerId,
    ResidualConfig,
    ScoreVector,
    TrustMatrix,
    closed_form_score,
    generate_residual,
    initial_score,
    propagate,
    score_network,
)
from trustprop.errors import DimensionMismatchError, InvalidConfigError
from trustprop.model import ScoreKind

H = LayerId.HOSPITAL
D = LayerId.DEPARTMENT


def trust_from(values, layer=H):
    values = np.asarray(values, dtype=float)
    ids = tuple(f"{layer.tag}{i}" for i in range(values.shape[0]))
    return TrustMatrix(rows=layer, cols=layer, row_ids=ids, col_ids=ids, values=values)


def scores_from(values, layer=H, kind=ScoreKind.INITIAL):
    values = np.asarray(values, dtype=float)
    ids = tuple(f"{layer.tag}{i}" for i in range(len(values)))
    return ScoreVector(layer=layer, kind=kind, entity_ids=ids, values=values)


# --- residual generation ---

def test_constant_residual():
    vec = generate_residual(ResidualConfig.constant(0.2), 4, H)
    assert vec.values.tolist() == [0.2, 0.2, 0.2, 0.2]
    assert vec.entity_ids == ("h0", "h1", "h2", "h3")


def test_residual_determinism_bit_identical():
    config = ResidualConfig.uniform(0.0, 1.0, seed=99)
    a = generate_residual(config, 50, D)
    b = generate_residual(config, 50, D)
    assert (a.values == b.values).all()
    c = generate_residual(ResidualConfig.uniform(0.0, 1.0, seed=100), 50, D)
    assert (a.values != c.values).any()


def test_uniform_residual_within_bounds():
    vec = generate_residual(ResidualConfig.uniform(0.25, 0.5, seed=3), 1000, H)
    assert (vec.values >= 0.25).all() and (vec.values < 0.5).all()


def test_normal_residual_clipped_to_unit_interval():
    vec = generate_residual(ResidualConfig.normal(0.5, 5.0, seed=4), 2000, H)
    assert (vec.values >= 0.0).all() and (vec.values <= 1.0).all()
    assert (vec.values == 0.0).any() and (vec.values == 1.0).any()  # clipping engaged


def test_skewed_residual_mean():
    vec = generate_residual(ResidualConfig.skewed(2.0, 8.0, seed=5), 10000, H)
    assert vec.values.mean() == pytest.approx(2.0 / (2.0 + 8.0), abs=0.01)
    assert (vec.values >= 0.0).all() and (vec.values <= 1.0).all()


@pytest.mark.parametrize("mapping", [
    {"distribution": "uniform", "low": 0.9, "high": 0.1},
    {"distribution": "normal", "stdev": -1.0},
    {"distribution": "skewed", "alpha": 0.0},
    {"distribution": "constant", "value": -0.5},
    {"distribution": "nosuch"},
    {"distribution": "constant", "value": 0.2, "stray": 1},
])
def test_bad_residual_configs_rejected(mapping):
    with pytest.raises(InvalidConfigError):
        ResidualConfig.from_mapping(mapping)


def test_from_mapping_applies_default_seed():
    config = ResidualConfig.from_mapping({"distribution": "uniform"}, default_seed=77)
    assert config.seed == 77
    explicit = ResidualConfig.from_mapping({"distribution": "uniform", "seed": 5}, default_seed=77)
    assert explicit.seed == 5


# --- initial score ---

def test_initial_score_adds_fed_residuals():
    own = scores_from([0.2, 0.2], layer=H, kind=ScoreKind.RESIDUAL)
    feed = scores_from([0.4, 0.6, 0.0], layer=D, kind=ScoreKind.RESIDUAL)
    trust = TrustMatrix(rows=D, cols=H, row_ids=("d0", "d1", "d2"), col_ids=("h0", "h1"),
                        values=np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]))
    s0 = initial_score(own, feed, trust)
    assert s0.values == pytest.approx([0.2 + 0.4 + 0.3, 0.2 + 0.3])
    assert s0.kind is ScoreKind.INITIAL


def test_initial_score_rejects_wrong_orientation():
    own = scores_from([0.2, 0.2], layer=H, kind=ScoreKind.RESIDUAL)
    feed = scores_from([0.4, 0.6], layer=D, kind=ScoreKind.RESIDUAL)
    wrong = TrustMatrix(rows=H, cols=D, row_ids=("h0", "h1"), col_ids=("d0", "d1"),
                        values=np.eye(2))
    with pytest.raises(DimensionMismatchError):
        initial_score(own, feed, wrong)


# --- propagation ---

def test_fixed_point_converges_in_one_iteration():
    # uniform scores over a doubly stochastic matrix are stationary
    trust = trust_from([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    result = propagate(scores_from([1.0, 1.0, 1.0]), trust)
    assert result.converged and result.iterations == 1
    assert result.deltas[0] == 0.0


def test_zero_matrix_converges_within_two_iterations():
    result = propagate(scores_from([0.3, 0.7]), trust_from(np.zeros((2, 2))))
    assert result.converged and result.iterations <= 2
    assert result.scores.values.tolist() == [0.0, 0.0]


def test_huge_epsilon_stops_after_one_iteration():
    trust = trust_from([[0.0, 1.0], [1.0, 0.0]])
    config = ConvergenceConfig(epsilon=1e9, max_iterations=1000)
    result = propagate(scores_from([0.1, 0.9]), trust, config)
    assert result.converged and result.iterations == 1


def test_zero_max_iterations_returns_initial_unconverged():
    trust = trust_from([[0.0, 1.0], [1.0, 0.0]])
    config = ConvergenceConfig(epsilon=0.001, max_iterations=0)
    result = propagate(scores_from([0.1, 0.9]), trust, config)
    assert not result.converged and result.iterations == 0
    assert result.scores.values.tolist() == [0.1, 0.9]
    assert result.deltas == ()


def test_two_cycle_oscillates_and_hits_cap():
    trust = trust_from([[0.0, 1.0], [1.0, 0.0]])
    config = ConvergenceConfig(epsilon=0.001, max_iterations=25)
    result = propagate(scores_from([0.1, 0.9]), trust, config)
    assert not result.converged and result.iterations == 25
    assert result.deltas[-1] == pytest.approx(0.8)


def test_damping_breaks_the_two_cycle():
    trust = trust_from([[0.0, 1.0], [1.0, 0.0]])
    result = propagate(scores_from([0.1, 0.9]), trust,
                       ConvergenceConfig(epsilon=0.001, max_iterations=1000), damping=0.5)
    assert result.converged
    assert result.scores.values == pytest.approx([0.5, 0.5], abs=0.01)


def test_propagation_matches_closed_form():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        weights = rng.random((n, n))
        weights[rng.random((n, n)) < 0.3] = 0.0
        sums = weights.sum(axis=1, keepdims=True)
        values = np.divide(weights, sums, out=np.zeros_like(weights), where=sums > 0)
        trust = trust_from(values)
        s0 = scores_from(rng.random(n))
        damping = float(rng.uniform(0.5, 1.0))
        config = ConvergenceConfig(epsilon=1e-15, max_iterations=int(rng.integers(1, 12)))
        result = propagate(s0, trust, config, damping=damping)
        direct = closed_form_score(s0, trust, result.iterations, damping=damping)
        assert result.scores.values == pytest.approx(direct.values.tolist(), abs=1e-9)


def test_mass_conserved_when_rows_fully_stochastic():
    rng = np.random.default_rng(21)
    weights = rng.random((6, 6))
    np.fill_diagonal(weights, 0.0)
    values = weights / weights.sum(axis=1, keepdims=True)
    s0 = scores_from(rng.random(6), layer=D)
    result = propagate(s0, trust_from(values, layer=D),
                       ConvergenceConfig(epsilon=1e-12, max_iterations=200))
    assert result.scores.values.sum() == pytest.approx(s0.values.sum(), abs=1e-9)


def test_l1_norm_differs_from_max_abs():
    config = ConvergenceConfig(norm=DeltaNorm.L1)
    assert config.delta(np.array([0.5, -0.5])) == 1.0
    assert ConvergenceConfig().delta(np.array([0.5, -0.5])) == 0.5


def test_invalid_convergence_and_damping_rejected():
    with pytest.raises(InvalidConfigError):
        ConvergenceConfig(epsilon=0.0)
    with pytest.raises(InvalidConfigError):
        ConvergenceConfig(max_iterations=-1)
    trust = trust_from(np.zeros((1, 1)))
    with pytest.raises(InvalidConfigError):
        propagate(scores_from([0.1]), trust, damping=0.0)
    with pytest.raises(InvalidConfigError):
        propagate(scores_from([0.1]), trust, damping=1.5)


def test_empty_layer_propagates_trivially():
    trust = TrustMatrix(rows=H, cols=H, row_ids=(), col_ids=(), values=np.zeros((0, 0)))
    s0 = ScoreVector(layer=H, kind=ScoreKind.INITIAL, entity_ids=(), values=np.zeros(0))
    result = propagate(s0, trust)
    assert result.converged and result.iterations == 0


# --- whole-network scoring ---

def demo_residuals(network):
    return {
        layer: generate_residual(ResidualConfig.constant(0.2), len(network.node_ids(layer)),
                                 layer, network.node_ids(layer))
        for layer in LayerId
    }


def test_score_network_hospital_initial_oracle(demo_network, demo_trust):
    scored = score_network(demo_trust, demo_residuals(demo_network))
    hospital_initial = scored[LayerId.HOSPITAL].initial.values
    assert hospital_initial == pytest.approx([8 / 15, 11 / 30, 7 / 15, 7 / 30], abs=1e-12)


def test_score_network_department_feed_choice(demo_network, demo_trust):
    via_hospital = score_network(demo_trust, demo_residuals(demo_network))
    via_doctor = score_network(demo_trust, demo_residuals(demo_network),
                               department_feed=LayerId.DOCTOR)
    a = via_hospital[LayerId.DEPARTMENT].initial.values
    b = via_doctor[LayerId.DEPARTMENT].initial.values
    assert (a != b).any()
    # hospital and doctor layers always feed from departments, unchanged
    assert (via_hospital[LayerId.HOSPITAL].initial.values
            == via_doctor[LayerId.HOSPITAL].initial.values).all()
    with pytest.raises(InvalidConfigError):
        score_network(demo_trust, demo_residuals(demo_network),
                      department_feed=LayerId.DEPARTMENT)


def test_score_network_department_layer_oscillates(demo_network, demo_trust):
    scored = score_network(demo_trust, demo_residuals(demo_network),
                           ConvergenceConfig(epsilon=0.001, max_iterations=50))
    dept = scored[LayerId.DEPARTMENT].result
    assert not dept.converged and dept.iterations == 50
    assert scored[LayerId.HOSPITAL].result.converged
    assert scored[LayerId.DOCTOR].result.converged
