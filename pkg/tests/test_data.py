import numpy as np
import pytest

from divgan.data import (
    ConditionalRingSpec,
    RingMixtureSpec,
    TrajectorySpec,
    nearest_mode,
    nearest_modes,
    sample_conditional_ring,
    sample_ring,
    sample_trajectories,
    save_points_csv,
)

SPEC = RingMixtureSpec()


def binomial_band(n, p, sigmas=5.0):
    mean = n * p
    half = sigmas * np.sqrt(n * p * (1 - p))
    return mean - half, mean + half


def test_centers_on_circle():
    c = SPEC.centers()
    assert c.shape == (8, 2)
    assert np.allclose(np.linalg.norm(c, axis=1), SPEC.radius, atol=1e-12)
    # first center on the positive x axis, counterclockwise order
    assert np.allclose(c[0], [SPEC.radius, 0.0])


def test_sampling_is_deterministic():
    a = sample_ring(SPEC, 100, np.random.default_rng(5))
    b = sample_ring(SPEC, 100, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_degenerate_noise_sits_on_centers():
    spec = RingMixtureSpec(std=1e-12)
    pts = sample_ring(spec, 200, np.random.default_rng(0))
    _, dist = nearest_modes(pts, spec)
    assert np.max(dist) < 1e-9


def test_mode_counts_are_uniform():
    n = 10_000
    pts = sample_ring(SPEC, n, np.random.default_rng(1))
    idx, _ = nearest_modes(pts, SPEC)
    lo, hi = binomial_band(n, 1.0 / SPEC.n_modes)
    counts = np.bincount(idx, minlength=8)
    assert np.all((counts >= lo) & (counts <= hi)), counts


def test_mean_radius_close_to_spec():
    pts = sample_ring(SPEC, 10_000, np.random.default_rng(2))
    mean_r = np.mean(np.linalg.norm(pts, axis=1))
    assert abs(mean_r - SPEC.radius) / SPEC.radius < 0.01


def test_three_sigma_rule_tail():
    # 2-dof chi^2: P(dist <= 3 std) = 1 - exp(-9/2) = 0.98889...
    pts = sample_ring(SPEC, 20_000, np.random.default_rng(3))
    _, dist = nearest_modes(pts, SPEC)
    frac = np.mean(dist <= 3 * SPEC.std)
    assert frac >= 0.985
    assert frac == pytest.approx(1.0 - np.exp(-4.5), abs=5e-3)


def test_nearest_mode_exact_center():
    for k in range(8):
        idx, dist = nearest_mode(SPEC.centers()[k], SPEC)
        assert idx == k and dist == 0.0


def test_nearest_mode_tie_breaks_to_smallest_index():
    idx, dist = nearest_mode(np.zeros(2), SPEC)
    assert idx == 0
    assert dist == pytest.approx(SPEC.radius)


def test_nearest_mode_matches_bruteforce(rng):
    for _ in range(200):
        p = rng.normal(size=2) * 3
        idx, dist = nearest_mode(p, SPEC)
        d = [float(np.linalg.norm(p - c)) for c in SPEC.centers()]
        assert idx == int(np.argmin(d))
        assert dist == pytest.approx(min(d))


def test_nearest_mode_rejects_nonfinite():
    with pytest.raises(ValueError):
        nearest_mode(np.array([np.nan, 0.0]), SPEC)


def test_spec_validation():
    with pytest.raises(ValueError):
        RingMixtureSpec(n_modes=0)
    with pytest.raises(ValueError):
        RingMixtureSpec(std=0.0)
    with pytest.raises(ValueError):
        ConditionalRingSpec(base=RingMixtureSpec(n_modes=7))
    with pytest.raises(ValueError):
        TrajectorySpec(horizon=0)


# -- conditional ring ---------------------------------------------------------


def test_conditional_single_sample():
    b = sample_conditional_ring(ConditionalRingSpec(), 1, np.random.default_rng(0))
    assert b.x.shape == (1, 4) and b.y.shape == (1, 2)
    assert b.x.sum() == 1.0


def test_conditional_samples_land_in_owned_modes():
    spec = ConditionalRingSpec()
    n = 10_000
    b = sample_conditional_ring(spec, n, np.random.default_rng(4))
    idx, _ = nearest_modes(b.y, spec.base)
    for lab in range(spec.n_labels):
        owned = set(spec.label_modes(lab))
        got = set(np.unique(idx[b.labels == lab]).tolist())
        assert got <= owned, f"label {lab} hit modes {got}"


def test_conditional_label_histogram_uniform():
    spec = ConditionalRingSpec()
    n = 10_000
    b = sample_conditional_ring(spec, n, np.random.default_rng(6))
    lo, hi = binomial_band(n, 1.0 / spec.n_labels)
    counts = np.bincount(b.labels, minlength=4)
    assert np.all((counts >= lo) & (counts <= hi))


def test_conditional_onehot_matches_labels():
    b = sample_conditional_ring(ConditionalRingSpec(), 50, np.random.default_rng(7))
    assert np.array_equal(np.argmax(b.x, axis=1), b.labels)


# -- trajectories ---------------------------------------------------------------


def test_noiseless_trajectories_on_circle():
    spec = TrajectorySpec(noise_std=0.0)
    b = sample_trajectories(spec, 100, np.random.default_rng(8))
    pts = np.concatenate([b.x, b.y], axis=1).reshape(-1, 2)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - spec.circle_radius)) < 1e-9


def test_trajectory_direction_frequencies():
    n = 10_000
    b = sample_trajectories(TrajectorySpec(), n, np.random.default_rng(9))
    lo, hi = binomial_band(n, 0.5)
    assert lo <= np.sum(b.labels) <= hi


def test_noiseless_context_and_future_contiguous_in_angle():
    spec = TrajectorySpec(noise_std=0.0)
    b = sample_trajectories(spec, 20, np.random.default_rng(10))
    full = np.concatenate([b.x, b.y], axis=1)
    angles = np.arctan2(full[..., 1], full[..., 0])
    deltas = np.angle(np.exp(1j * np.diff(angles, axis=1)))
    assert np.allclose(np.abs(deltas), spec.angle_step, atol=1e-9)
    # constant sign per trajectory: contexts and futures share one rotation
    assert np.all(np.abs(np.sum(np.sign(deltas), axis=1)) == deltas.shape[1])


def test_trajectory_shapes():
    spec = TrajectorySpec(context_len=3, horizon=7)
    b = sample_trajectories(spec, 11, np.random.default_rng(11))
    assert b.x.shape == (11, 3, 2)
    assert b.y.shape == (11, 7, 2)


# -- csv dump -------------------------------------------------------------------


def test_save_points_csv(tmp_path):
    y = np.array([[1.5, -2.0], [0.0, 3.25]])
    path = tmp_path / "points.csv"
    save_points_csv(path, y, labels=[0, 1])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "label,y0,y1"
    assert lines[1].startswith("0,1.5,")
    path2 = tmp_path / "plain.csv"
    save_points_csv(path2, y)
    assert path2.read_text().splitlines()[0] == "y0,y1"
