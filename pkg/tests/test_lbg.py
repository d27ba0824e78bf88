import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subclust.data import SubspaceDataset, SynthSpec, synth_generate
from subclust.errors import AmbientMismatch, TooManyCenters
from subclust.lbg import (
    InitStrategy,
    LbgConfig,
    Method,
    assign,
    distance_matrix,
    init_prototypes,
    lbg_cluster,
    update_prototypes,
)
from subclust.linalg import Subspace, orthonormalize, principal_angles, random_subspace, sin2_theta1
from subclust.prototypes import SvbfConfig, svbf_fit

from conftest import seeds, span

METHODS = list(Method)


def random_dataset(seed, N=12, n=10, l=3, labels=True):
    rng = np.random.default_rng(seed)
    samples = [random_subspace(rng, n, l) for _ in range(N)]
    cl = rng.integers(0, 3, N) if labels else None
    return SubspaceDataset(samples, cl)


def best_matching_errors(labels, classes, m):
    """Brute force: fewest misassigned samples over all maps group -> center."""
    groups = np.unique(classes)
    best = None
    for perm in itertools.permutations(range(m), len(groups)):
        err = sum(np.sum(labels[classes == g] != perm[i]) for i, g in enumerate(groups))
        best = err if best is None else min(best, err)
    return best


# -- init -----------------------------------------------------------------------


def test_init_single_center_is_a_sample():
    ds = random_dataset(0)
    (P,) = init_prototypes(ds, LbgConfig(num_centers=1, prototype_dim=3, seed=4))
    assert any(np.array_equal(P.basis, X.basis) for X in ds.samples)


def test_init_all_samples_distinct():
    ds = random_dataset(1, N=8)
    protos = init_prototypes(ds, LbgConfig(num_centers=8, prototype_dim=3, seed=2))
    hits = sorted(next(j for j, X in enumerate(ds.samples) if np.array_equal(P.basis, X.basis)) for P in protos)
    assert hits == list(range(8))


def test_init_truncates_and_pads():
    ds = random_dataset(2, l=3)
    for k in (1, 5):
        protos = init_prototypes(ds, LbgConfig(num_centers=3, prototype_dim=k, seed=0))
        for P in protos:
            assert P.subspace_dim == k
            # every prototype shares a direction with (or contains) some sample
            assert min(sin2_theta1(P, X) for X in ds.samples) < 1e-14


def test_init_random_deterministic():
    ds = random_dataset(3)
    cfg = LbgConfig(num_centers=4, prototype_dim=2, init_strategy=InitStrategy.RANDOM_ORTHONORMAL, seed=9)
    a, b = init_prototypes(ds, cfg), init_prototypes(ds, cfg)
    assert all(np.array_equal(x.basis, y.basis) for x, y in zip(a, b))


def test_init_too_many_centers():
    with pytest.raises(TooManyCenters):
        init_prototypes(random_dataset(0, N=3), LbgConfig(num_centers=4))


# -- assign ---------------------------------------------------------------------


def test_assign_to_self():
    ds = random_dataset(5)
    labels, distortion = assign(ds, ds.samples)
    assert np.array_equal(labels, np.arange(len(ds)))
    assert distortion < 1e-14


def test_assign_single_prototype(rng):
    ds = random_dataset(6)
    P = random_subspace(rng, 10, 2)
    labels, distortion = assign(ds, [P])
    assert np.all(labels == 0)
    assert distortion == pytest.approx(np.mean([sin2_theta1(P, X) for X in ds.samples]), abs=1e-14)


def test_assign_nearest_angle():
    def line(deg):
        t = np.deg2rad(deg)
        return span([np.cos(t), np.sin(t)])

    ds = SubspaceDataset([line(30), line(80)])
    labels, _ = assign(ds, [line(0), line(90)])
    assert labels.tolist() == [0, 1]


def test_assign_ties_lowest_index():
    ds = SubspaceDataset([span([1.0, 0.0, 0.0])])
    P = span([0.0, 1.0, 0.0])
    labels, _ = assign(ds, [P, P, P])
    assert labels.tolist() == [0]


def test_assign_ambient_mismatch():
    with pytest.raises(AmbientMismatch):
        assign(random_dataset(0), [span([1.0, 0.0])])


@given(seeds, st.integers(1, 6))
def test_assign_labels_optimal(seed, m):
    ds = random_dataset(seed, N=20)
    rng = np.random.default_rng(seed + 1)
    protos = [random_subspace(rng, 10, 2) for _ in range(m)]
    labels, _ = assign(ds, protos)
    D = distance_matrix(ds, protos)
    for j in range(len(ds)):
        assert np.all(D[j, labels[j]] <= D[j] + 1e-12)


# -- update ---------------------------------------------------------------------


@pytest.mark.parametrize("method", METHODS)
def test_update_singletons(method):
    ds = random_dataset(7, N=4)
    cfg = LbgConfig(num_centers=4, prototype_dim=3, prototype_method=method)
    rng = np.random.default_rng(0)
    current = [random_subspace(rng, 10, 3) for _ in range(4)]
    new = update_prototypes(ds, np.arange(4), current, cfg)
    for P, X in zip(new, ds.samples):
        assert np.all(principal_angles(P, X) < 1e-8)


def test_update_common_direction(rng):
    w = rng.standard_normal(12)
    samples = [orthonormalize(np.column_stack([w, rng.standard_normal((12, 3))])) for _ in range(6)]
    ds = SubspaceDataset(samples)
    cfg = LbgConfig(num_centers=1, prototype_dim=1)
    (P,) = update_prototypes(ds, np.zeros(6, int), [random_subspace(rng, 12, 1)], cfg)
    assert sum(sin2_theta1(P, X) for X in samples) < 1e-10


def test_update_heals_empty_cluster_from_worst_sample(rng):
    ds = random_dataset(8, N=10, l=3)
    current = [random_subspace(rng, 10, 2), random_subspace(rng, 10, 2)]
    labels = np.zeros(10, int)
    cfg = LbgConfig(num_centers=2, prototype_dim=2, prototype_method=Method.FLAG_MEAN)
    new = update_prototypes(ds, labels, current, cfg)
    # oracle: direct scan for the sample farthest from its assigned center
    worst = max(range(10), key=lambda j: sin2_theta1(current[0], ds.samples[j]))
    assert np.array_equal(new[1].basis, ds.samples[worst].basis[:, :2])


def test_update_guard_never_worsens_cluster(rng):
    ds = random_dataset(9, N=15, l=3)
    protos = [random_subspace(rng, 10, 2) for _ in range(3)]
    labels, _ = assign(ds, protos)
    for method in METHODS:
        cfg = LbgConfig(num_centers=3, prototype_dim=2, prototype_method=method)
        new = update_prototypes(ds, labels, protos, cfg)
        for i in range(3):
            idx = np.flatnonzero(labels == i)
            before = sum(sin2_theta1(protos[i], ds.samples[j]) for j in idx)
            after = sum(sin2_theta1(new[i], ds.samples[j]) for j in idx)
            assert after <= before + 1e-10


# -- full loop ------------------------------------------------------------------


def test_identical_groups_reach_zero(rng):
    bases = [random_subspace(rng, 9, 2) for _ in range(3)]
    samples = [bases[g] for g in range(3) for _ in range(4)]
    ds = SubspaceDataset(samples, np.repeat(np.arange(3), 4))
    for seed in range(5):
        model = lbg_cluster(ds, LbgConfig(num_centers=3, prototype_dim=2, seed=seed, max_outer_iters=20))
        assert model.distortion < 1e-14
        assert model.iterations_used < 20


def test_seeds_from_distinct_groups_zero_after_one_iteration(rng):
    bases = [random_subspace(rng, 9, 2) for _ in range(2)]
    ds = SubspaceDataset([bases[0], bases[1]] * 3)
    model = lbg_cluster(ds, LbgConfig(num_centers=2, prototype_dim=2), initial_prototypes=bases)
    assert model.distortion_history[1] < 1e-14
    assert model.iterations_used == 1


def test_single_center_matches_single_fit():
    ds = random_dataset(10, N=15, l=3)
    cfg = LbgConfig(num_centers=1, prototype_dim=2, max_outer_iters=1)
    model = lbg_cluster(ds, cfg)
    fit = svbf_fit(ds.samples, SvbfConfig(prototype_dim=2, init="given"), initial=init_prototypes(ds, cfg)[0])
    assert model.distortion == pytest.approx(fit.objective / len(ds), abs=1e-12)
    assert np.all(model.labels == 0)


@pytest.mark.parametrize("seed", range(3))
def test_noiseless_synthetic_recovery(seed):
    ds = synth_generate(SynthSpec(seed=seed))
    model = lbg_cluster(ds, LbgConfig(num_centers=5, prototype_dim=1, seed=seed, max_outer_iters=20))
    assert model.distortion < 1e-8
    assert best_matching_errors(model.labels, ds.class_labels, 5) == 0


@given(seeds, st.sampled_from(METHODS), st.integers(1, 3))
def test_distortion_history_monotone(seed, method, k):
    ds = synth_generate(SynthSpec(num_prototypes=3, samples_per_prototype=5, ambient_dim=12, sample_dim=3,
                                  noise_level=0.5, seed=seed))
    model = lbg_cluster(ds, LbgConfig(num_centers=4, prototype_dim=k, prototype_method=method, seed=seed))
    assert np.all(np.diff(model.distortion_history) <= 1e-8)
    assert np.all((model.labels >= 0) & (model.labels < 4))


def test_determinism_across_threads():
    ds = synth_generate(SynthSpec(noise_level=0.4, seed=3))
    for method in METHODS:
        cfg = LbgConfig(num_centers=6, prototype_dim=2, prototype_method=method, seed=11)
        a = lbg_cluster(ds, cfg, threads=1)
        b = lbg_cluster(ds, cfg, threads=4)
        assert np.array_equal(a.labels, b.labels)
        assert a.distortion_history == b.distortion_history
        assert all(np.array_equal(x.basis, y.basis) for x, y in zip(a.prototypes, b.prototypes))


def test_permutation_equivariance():
    ds = synth_generate(SynthSpec(noise_level=0.2, seed=5))
    cfg = LbgConfig(num_centers=5, prototype_dim=1, seed=1)
    init = init_prototypes(ds, cfg)
    perm = np.random.default_rng(0).permutation(len(ds))
    a = lbg_cluster(ds, cfg, initial_prototypes=init)
    b = lbg_cluster(ds.subset(perm), cfg, initial_prototypes=init)
    assert np.array_equal(a.labels[perm], b.labels)
    assert a.distortion == pytest.approx(b.distortion, abs=1e-10)


def test_prototype_dim_too_large():
    with pytest.raises(ValueError):
        lbg_cluster(random_dataset(0), LbgConfig(num_centers=2, prototype_dim=11))


def test_config_validation():
    with pytest.raises(ValueError):
        LbgConfig(num_centers=0)
    with pytest.raises(ValueError):
        LbgConfig(num_centers=2, prototype_method="kmeans")
