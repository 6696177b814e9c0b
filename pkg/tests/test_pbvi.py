"""Planner: belief sampling, backups, pruning, convergence, serialization."""

import numpy as np
import pytest

from pomdp_perception import (
    AlphaVector,
    Belief,
    BeliefPointSet,
    Pomdp,
    ValueFunction,
    backup,
    best_action,
    initialize_value,
    point_values,
    prune,
    read_value_function,
    sample_beliefs_uniform,
    solve,
    value,
    write_value_function,
)
from helpers import mdp_value_iteration, oracle_one_step_value, random_belief, random_pomdp


def alpha_norm_bound(pomdp: Pomdp) -> float:
    r = pomdp.reward
    return max(abs(float(r.max())), abs(float(r.min()))) / (1.0 - pomdp.discount)


# ---------------------------------------------------------------------------
# Belief sampling
# ---------------------------------------------------------------------------


def test_sampling_appends_corners_and_uniform():
    points = sample_beliefs_uniform(2, 3, seed=42)
    mat = points.matrix
    assert len(points) == 6  # 3 sampled + uniform + 2 corners
    assert np.allclose(mat.sum(axis=1), 1.0, atol=1e-9)
    rows = {tuple(np.round(r, 12)) for r in mat}
    assert (1.0, 0.0) in rows and (0.0, 1.0) in rows and (0.5, 0.5) in rows


def test_sampling_is_deterministic():
    a = sample_beliefs_uniform(5, 40, seed=7)
    b = sample_beliefs_uniform(5, 40, seed=7)
    assert np.array_equal(a.matrix, b.matrix)
    c = sample_beliefs_uniform(5, 40, seed=8)
    assert not np.array_equal(a.matrix, c.matrix)


def test_sampling_flat_dirichlet_moments():
    num_states, count = 4, 10000
    points = sample_beliefs_uniform(num_states, count, seed=123)
    mat = points.matrix
    mean = mat.mean(axis=0)
    # Per-coordinate variance of a flat Dirichlet is p(1-p)/(S+1).
    p = 1.0 / num_states
    sigma_mean = np.sqrt(p * (1 - p) / (num_states + 1) / len(points))
    assert np.all(np.abs(mean - p) < 3 * sigma_mean)


def test_sampling_count_must_be_positive():
    with pytest.raises(ValueError):
        sample_beliefs_uniform(3, 0, seed=0)


# ---------------------------------------------------------------------------
# Initialization and evaluation
# ---------------------------------------------------------------------------


def test_initialize_value_formula():
    rng = np.random.default_rng(0)
    p = random_pomdp(rng, 3, 2, 3, discount=0.95)
    reward = np.array(p.reward)
    reward[1, 0] = -5.0
    reward[reward < -5.0] = -4.0
    p = Pomdp(p.transition, p.observation, reward, 0.95)
    vf = initialize_value(p)
    assert len(vf) == 1
    assert np.allclose(vf.alphas[0].coeffs, -100.0)
    assert vf.alphas[0].action == 0


def test_initialize_value_zero_min_reward():
    p = Pomdp(
        transition=np.repeat(np.eye(2)[:, None, :], 2, axis=1),
        observation=np.repeat(np.eye(2)[:, None, :], 2, axis=1),
        reward=np.array([[0.0, 1.0], [2.0, 3.0]]),
        discount=0.5,
    )
    vf = initialize_value(p)
    assert np.allclose(vf.alphas[0].coeffs, 0.0)
    for b in (Belief.uniform(2), Belief.point_mass(2, 1)):
        assert value(vf, b) == 0.0


def test_value_and_best_action_trivia():
    constant = ValueFunction((AlphaVector(np.array([3.0, 3.0]), 2),))
    assert value(constant, Belief.uniform(2)) == pytest.approx(3.0)
    assert best_action(constant, Belief.uniform(2)) == 2

    two = ValueFunction(
        (AlphaVector(np.array([1.0, 0.0]), 0), AlphaVector(np.array([0.0, 1.0]), 1))
    )
    assert value(two, Belief.uniform(2)) == pytest.approx(0.5)


def test_best_action_tie_keeps_lowest_vector_index():
    tied = ValueFunction(
        (AlphaVector(np.array([1.0, 1.0]), 1), AlphaVector(np.array([1.0, 1.0]), 3))
    )
    assert best_action(tied, Belief.uniform(2)) == 1


def test_value_matches_naive_loop():
    rng = np.random.default_rng(1)
    alphas = tuple(
        AlphaVector(rng.normal(size=4), int(rng.integers(3))) for _ in range(9)
    )
    vf = ValueFunction(alphas)
    for _ in range(20):
        b = random_belief(rng, 4)
        naive = max(float(a.coeffs @ b.probs) for a in alphas)
        assert value(vf, b) == pytest.approx(naive, abs=1e-12)
        dots = [float(a.coeffs @ b.probs) for a in alphas]
        assert best_action(vf, b) == alphas[int(np.argmax(dots))].action


# ---------------------------------------------------------------------------
# Backup
# ---------------------------------------------------------------------------


def test_backup_discount_zero_returns_best_reward_rows():
    rng = np.random.default_rng(2)
    p = random_pomdp(rng, 3, 4, 2, discount=0.0)
    points = sample_beliefs_uniform(3, 10, seed=3)
    vf = backup(p, initialize_value(p), points)
    for alpha in vf.alphas:
        assert np.allclose(alpha.coeffs, p.reward[:, alpha.action], atol=1e-12)
    for b in points.points:
        rewards = [float(b.probs @ p.reward[:, a]) for a in range(4)]
        assert value(vf, b) == pytest.approx(max(rewards), abs=1e-12)


def test_backup_matches_one_step_expansion_oracle():
    rng = np.random.default_rng(4)
    p = random_pomdp(rng, 2, 2, 2, discount=0.8)
    points = sample_beliefs_uniform(2, 12, seed=5)
    init = initialize_value(p)
    low = float(init.alphas[0].coeffs[0])
    vf = backup(p, init, points)
    for b in points.points:
        expected = oracle_one_step_value(p, b, lambda _: low)
        assert value(vf, b) == pytest.approx(expected, abs=1e-10)


def test_backup_values_improve_monotonically_from_lower_bound():
    rng = np.random.default_rng(6)
    for seed in range(5):
        p = random_pomdp(rng, 4, 3, 3, discount=0.9)
        points = sample_beliefs_uniform(4, 25, seed=seed)
        vf = initialize_value(p)
        previous = point_values(vf, points)
        for _ in range(30):
            vf = prune(backup(p, vf, points), points)
            current = point_values(vf, points)
            assert np.all(current >= previous - 1e-9)
            previous = current


def test_backup_alpha_vectors_respect_sup_norm_bound():
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = random_pomdp(rng, 4, 2, 3, discount=0.9)
        bound = alpha_norm_bound(p) + 1e-6
        points = sample_beliefs_uniform(4, 20, seed=8)
        vf = initialize_value(p)
        for _ in range(40):
            vf = prune(backup(p, vf, points), points)
            assert np.abs(vf.matrix).max() <= bound


def test_backup_action_tags_are_the_per_point_argmax():
    rng = np.random.default_rng(9)
    p = random_pomdp(rng, 3, 3, 2, discount=0.7)
    points = sample_beliefs_uniform(3, 15, seed=10)
    vf = backup(p, initialize_value(p), points)
    assert all(0 <= a.action < 3 for a in vf.alphas)
    assert len(vf) <= len(points)


# ---------------------------------------------------------------------------
# Prune
# ---------------------------------------------------------------------------


def test_prune_drops_duplicates_and_dominated():
    points = BeliefPointSet((Belief.uniform(2), Belief.point_mass(2, 0), Belief.point_mass(2, 1)))
    duplicated = ValueFunction(
        (AlphaVector(np.array([1.0, 1.0]), 0), AlphaVector(np.array([1.0, 1.0]), 0))
    )
    assert len(prune(duplicated, points)) == 1

    dominated = ValueFunction(
        (AlphaVector(np.array([1.0, 2.0]), 0), AlphaVector(np.array([0.0, 0.5]), 1))
    )
    kept = prune(dominated, points)
    assert len(kept) == 1
    assert np.allclose(kept.alphas[0].coeffs, [1.0, 2.0])


def test_prune_preserves_values_at_all_points():
    rng = np.random.default_rng(11)
    for _ in range(20):
        alphas = tuple(
            AlphaVector(rng.normal(size=3), int(rng.integers(2))) for _ in range(12)
        )
        vf = ValueFunction(alphas)
        points = sample_beliefs_uniform(3, 15, seed=int(rng.integers(1000)))
        pruned = prune(vf, points)
        assert np.array_equal(point_values(pruned, points), point_values(vf, points))


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------


def test_solve_discount_zero_converges_fast():
    rng = np.random.default_rng(12)
    p = random_pomdp(rng, 3, 2, 2, discount=0.0)
    points = sample_beliefs_uniform(3, 10, seed=13)
    result = solve(p, points)
    assert result.converged
    assert result.iterations <= 2


def test_solve_identity_observation_matches_mdp_value_iteration():
    rng = np.random.default_rng(14)
    num_states = 2
    transition = rng.dirichlet(np.ones(num_states), size=(num_states, 2))
    reward = rng.uniform(-1.0, 1.0, size=(num_states, 2))
    p = Pomdp(
        transition=transition,
        observation=np.repeat(np.eye(num_states)[:, None, :], 2, axis=1),
        reward=reward,
        discount=0.5,
    )
    points = sample_beliefs_uniform(num_states, 30, seed=15)
    result = solve(p, points, tol=1e-6)
    assert result.converged
    exact = mdp_value_iteration(transition, reward, 0.5)
    for s in range(num_states):
        approx = value(result.value_function, Belief.point_mass(num_states, s))
        assert approx == pytest.approx(exact[s], abs=1e-3)


def test_solve_is_deterministic():
    rng = np.random.default_rng(16)
    p = random_pomdp(rng, 3, 2, 3, discount=0.6)
    points = sample_beliefs_uniform(3, 12, seed=17)
    r1 = solve(p, points)
    r2 = solve(p, points)
    assert r1.iterations == r2.iterations
    assert np.array_equal(r1.value_function.matrix, r2.value_function.matrix)
    assert np.array_equal(r1.value_function.actions, r2.value_function.actions)


def test_solve_validates_knobs():
    rng = np.random.default_rng(18)
    p = random_pomdp(rng, 2, 2, 2)
    points = sample_beliefs_uniform(2, 5, seed=19)
    with pytest.raises(ValueError):
        solve(p, points, tol=0.0)
    with pytest.raises(ValueError):
        solve(p, points, max_iter=0)


def test_represented_value_function_is_convex():
    rng = np.random.default_rng(20)
    p = random_pomdp(rng, 4, 2, 3, discount=0.85)
    points = sample_beliefs_uniform(4, 30, seed=21)
    vf = solve(p, points, max_iter=40).value_function
    for _ in range(200):
        b1, b2 = random_belief(rng, 4), random_belief(rng, 4)
        lam = float(rng.random())
        mix = Belief(lam * b1.probs + (1 - lam) * b2.probs)
        assert value(vf, mix) <= lam * value(vf, b1) + (1 - lam) * value(vf, b2) + 1e-9


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_value_function_file_round_trip(tmp_path):
    rng = np.random.default_rng(22)
    p = random_pomdp(rng, 3, 2, 3, discount=0.7)
    points = sample_beliefs_uniform(3, 10, seed=23)
    vf = solve(p, points, max_iter=30).value_function
    path = tmp_path / "vf.txt"
    write_value_function(vf, str(path))
    loaded = read_value_function(str(path))
    assert np.array_equal(loaded.matrix, vf.matrix)
    assert np.array_equal(loaded.actions, vf.actions)


def test_value_function_file_rejects_garbage(tmp_path):
    path = tmp_path / "vf.txt"
    path.write_text("alphas v1\nstates 2\ncount 2\n0 1.0 2.0\n")
    with pytest.raises(ValueError, match="expected 2"):
        read_value_function(str(path))
    path.write_text("who knows\n")
    with pytest.raises(ValueError, match="alphas v1"):
        read_value_function(str(path))
