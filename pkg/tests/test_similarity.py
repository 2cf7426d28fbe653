import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import best_modularity_partition, spectral_bisection
from echoscope.corpus import ClientClassifier, TweetRecord
from echoscope.errors import InputError, NumericalError
from echoscope.similarity import (Partition, SimilarityNetwork, build_similarity, canonical_partition,
                                  cross_weight_fraction, louvain, modularity, normalized_cut, read_similarity,
                                  retweet_count_vectors, subsample_se, write_partition, write_similarity)
from echoscope.synth import planted_matrix


def counts_from_rows(rows):
    """rows: influencer -> list of per-user counts."""
    return {(i, f"u{k}"): c for i, vec in rows.items() for k, c in enumerate(vec) if c}


def net_of(w):
    w = np.asarray(w, dtype=float)
    return SimilarityNetwork(tuple(f"x{i}" for i in range(len(w))), w, 0)


def part_of(labels):
    return Partition({f"x{i}": int(c) for i, c in enumerate(labels)})


def test_cosine_examples():
    net = build_similarity(counts_from_rows({"a": [1, 1, 0], "b": [1, 0, 1], "c": [2, 2, 0], "d": [0, 0, 0, 5]}))
    s = dict(zip(net.influencers, range(net.size)))
    m = net.matrix
    assert m[s["a"], s["b"]] == pytest.approx(0.5)
    assert m[s["a"], s["c"]] == pytest.approx(1.0)
    assert m[s["a"], s["d"]] == 0.0
    assert np.all(np.diag(m) == 0)
    assert net.user_dimension == 4


def test_zero_vectors_are_excluded():
    net = build_similarity(counts_from_rows({"a": [1], "b": [1]}), influencers=["a", "b", "z"])
    assert net.influencers == ("a", "b") and net.excluded == ("z",)
    with pytest.raises(InputError):
        build_similarity(counts_from_rows({"a": [1]}), influencers=["a", "z"])
    with pytest.raises(InputError):
        build_similarity({("a", "u"): -1, ("b", "u"): 1})


count_rows = st.dictionaries(st.sampled_from(list("abcdef")), st.lists(st.integers(0, 4), min_size=5, max_size=5),
                             min_size=2)


@settings(max_examples=60, deadline=None)
@given(count_rows, st.lists(st.integers(1, 7), min_size=6, max_size=6))
def test_similarity_invariants(rows, scales):
    try:
        net = build_similarity(counts_from_rows(rows))
    except InputError:
        return
    m = net.matrix
    assert np.array_equal(m, m.T)
    assert (m >= 0).all() and (m <= 1).all()
    for a, i in enumerate(net.influencers):
        for b, j in enumerate(net.influencers):
            if a != b:
                overlap = any(x and y for x, y in zip(rows[i], rows[j]))
                assert (m[a, b] > 0) == overlap
    scaled = {i: [c * scales[k] for c in v] for k, (i, v) in enumerate(sorted(rows.items()))}
    assert np.allclose(build_similarity(counts_from_rows(scaled)).matrix, m, atol=1e-12)


def _rt(i, u, v, kind="retweet", client="Twitter Web App"):
    return TweetRecord(f"t{i}", u, 0.0, kind, v, (), client)


def test_retweet_count_vectors():
    recs = [_rt(1, "u", "a"), _rt(2, "u", "a"), _rt(3, "w", "a", kind="quote"), _rt(4, "u", "b", client="Bot"),
            _rt(5, "a", "a"), _rt(6, "u", "zzz")]
    assert retweet_count_vectors(recs, ["a", "b"]) == {("a", "u"): 2, ("b", "u"): 1}
    assert retweet_count_vectors(recs, ["a", "b"], kind="quote") == {("a", "w"): 1}
    assert retweet_count_vectors(recs, ["a", "b"], official=ClientClassifier()) == {("a", "u"): 2}


def two_cliques():
    w = np.zeros((6, 6))
    w[:3, :3] = 1
    w[3:, 3:] = 1
    np.fill_diagonal(w, 0)
    return w


def test_louvain_two_cliques_matches_exhaustive_optimum():
    w = two_cliques()
    best, _ = best_modularity_partition(w)
    part = louvain(net_of(w), seed=3)
    assert sorted(map(sorted, part.communities())) == sorted(sorted(f"x{i}" for i in b) for b in best)
    assert part.n_communities == 2


def test_louvain_complete_graph_is_one_community():
    w = np.ones((6, 6)) - np.eye(6)
    assert louvain(net_of(w), seed=0).n_communities == 1


def test_louvain_is_seed_deterministic():
    rng = np.random.default_rng(0)
    w = rng.random((15, 15))
    w = np.triu(w, 1)
    w = w + w.T
    net = net_of(w)
    assert louvain(net, seed=5).assignment == louvain(net, seed=5).assignment


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_louvain_never_worse_than_one_community(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    w = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.6), 1)
    w = w + w.T
    if w.sum() == 0:
        return
    net = net_of(w)
    q = modularity(net, louvain(net, seed=seed))
    assert q >= -1e-12
    _, best = best_modularity_partition(w)
    assert q <= best + 1e-12


def test_modularity_and_cut_examples():
    tri = np.ones((3, 3)) - np.eye(3)
    assert modularity(net_of(tri), part_of([0, 0, 0])) == pytest.approx(0.0, abs=1e-15)
    assert modularity(net_of(two_cliques()), part_of([0, 0, 0, 1, 1, 1])) == pytest.approx(0.5, abs=1e-12)
    assert normalized_cut(net_of(two_cliques()), part_of([0, 0, 0, 1, 1, 1])) == 0.0
    assert normalized_cut(net_of(tri), part_of([0, 1, 1])) == pytest.approx(2 / 3, abs=1e-12)
    bip = np.zeros((4, 4))
    bip[:2, 2:] = 1
    bip[2:, :2] = 1
    assert normalized_cut(net_of(bip), part_of([0, 0, 1, 1])) == 1.0


def test_metrics_reject_zero_weight_and_partial_partitions():
    with pytest.raises(NumericalError):
        modularity(net_of(np.zeros((2, 2))), part_of([0, 1]))
    with pytest.raises(NumericalError):
        normalized_cut(net_of(np.zeros((2, 2))), part_of([0, 1]))
    with pytest.raises(InputError):
        modularity(net_of(two_cliques()), Partition({"x0": 0}))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_metric_ranges(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    w = np.triu(rng.random((n, n)), 1)
    w = w + w.T
    labels = rng.integers(0, 3, size=n)
    net, part = net_of(w), part_of(labels)
    assert -0.5 - 1e-12 <= modularity(net, part) <= 1 + 1e-12
    assert 0 <= normalized_cut(net, part) <= 1
    assert normalized_cut(net, part_of(np.zeros(n))) == 0.0
    assert 0 <= cross_weight_fraction(net, part) <= 1


def test_canonical_partition_relabels_by_first_appearance():
    p = canonical_partition(["a", "b", "c"], [7, 3, 7])
    assert p.assignment == {"a": 0, "b": 1, "c": 0}


def planted_net(eps, seed, users=300, infl=20):
    counts, _, inf_side = planted_matrix(n_users=users, n_influencers=infl, epsilon=eps, seed=seed)
    d = {(f"i{j:02d}", f"u{i:04d}"): int(c) for (i, j), c in np.ndenumerate(counts) if c}
    return build_similarity(d), inf_side


def test_subsample_se_basics():
    net, _ = planted_net(0.05, 0)
    a = subsample_se(net, "modularity", 0.8, 20, seed=4)
    assert a == subsample_se(net, "modularity", 0.8, 20, seed=4)
    assert a[1] >= 0
    with pytest.raises(InputError):
        subsample_se(net, "conductance")
    with pytest.raises(InputError):
        subsample_se(net, fraction=1.0)
    with pytest.raises(InputError):
        subsample_se(net, repetitions=1)
    with pytest.raises(InputError):
        subsample_se(net.induced([0, 1]), fraction=0.4)


def test_subsample_se_constant_metric_has_zero_se():
    w = np.ones((5, 5)) - np.eye(5)
    mean, se = subsample_se(net_of(w), "normalized_cut", 0.8, 10, seed=0)
    assert (mean, se) == (0.0, 0.0)


@pytest.mark.slow
def test_subsample_mean_close_to_full_network():
    net, _ = planted_net(0.05, 1)
    full = modularity(net, louvain(net, seed=0))
    mean, _ = subsample_se(net, "modularity", 0.8, 100, seed=0)
    assert abs(mean - full) <= 0.05


@pytest.mark.slow
def test_separation_degrades_with_mixing():
    # Louvain may merge everything at high mixing, so the bipartition is
    # recovered spectrally to keep two groups at every level
    eps = [0.05, 0.15, 0.3, 0.45]
    agree = 0
    for seed in range(20):
        q, cut = [], []
        for e in eps:
            net, _ = planted_net(e, seed)
            p = canonical_partition(net.influencers, spectral_bisection(net.matrix))
            q.append(modularity(net, p))
            cut.append(normalized_cut(net, p))
        agree += all(np.diff(q) < 0) and all(np.diff(cut) > 0)
    assert agree > 10, f"monotone on {agree}/20 seeds"


def test_similarity_and_partition_io(tmp_path):
    net = net_of(two_cliques())
    write_similarity(net, tmp_path / "s.tsv")
    again = read_similarity(tmp_path / "s.tsv")
    assert again.influencers == net.influencers and np.array_equal(again.matrix, net.matrix)
    write_partition(part_of([0, 0, 0, 1, 1, 1]), net.influencers, tmp_path / "p.tsv")
    assert (tmp_path / "p.tsv").read_text().splitlines()[1] == "x0\t0"
