"""Smoke tests for the python module: the worked numeric example, parameter
selection, and one small end-to-end pass through each index type."""

import math
import random

import pytest

import fusedann


def test_fuse_worked_example():
    out = fusedann.fuse([5.0, 0.0], [-3.0], alpha=3.0, beta=1.5, m=1)
    assert out[0] == pytest.approx(9.3333, abs=1e-3)
    assert out[1] == pytest.approx(6.0)

    q2 = fusedann.fuse([-5.0, 0.0], [3.0], alpha=3.0, beta=1.5, m=1)
    assert q2[0] == pytest.approx(-9.3333, abs=1e-3)
    assert q2[1] == pytest.approx(-6.0)


def test_partition_blocks_remainder():
    blocks = fusedann.partition_blocks([1, 2, 3, 4, 5], 2)
    assert blocks == [[1, 2], [3, 4], [5]]


def test_select_fusion_params():
    p = fusedann.select_fusion_params(10.0, 2.0, 100, 10, 1.0)
    assert p.beta == pytest.approx(10.0)
    assert p.alpha == pytest.approx(10.0 * math.sqrt(10.0), rel=1e-9)
    with pytest.raises(fusedann.FusedAnnError):
        fusedann.select_fusion_params(1.0, 0.0, 8, 2, 1.0)


def test_formula_helpers():
    assert fusedann.adjusted_candidate_count(10, math.exp(-1.0), 0.5, 2.0, 2.0) == 12
    r = fusedann.optimal_radius(4.0, 10000, 1.0, 0.05, 2.0)
    assert r == pytest.approx(2.013581, abs=1e-5)


def test_geometry_helpers():
    assert fusedann.point_segment_distance([5.0, 3.0], [0.0, 0.0], [10.0, 0.0]) == pytest.approx(3.0)
    assert fusedann.hausdorff_distance([0, 0], [1, 0], [0, 0], [2, 0]) == pytest.approx(1.0)
    sim = fusedann.line_similarity([-1, 0], [1, 0], [0, -1], [0, 1], 0.4, 0.4, 0.2, 10.0)
    assert sim == pytest.approx(0.6)


def test_hybrid_index_end_to_end():
    rng = random.Random(5)
    values = [[-1.0], [0.0], [1.0]]
    contents, attrs = [], []
    for i in range(300):
        contents.append([rng.gauss(0, 1) for _ in range(8)])
        attrs.append(values[i % 3])
    idx = fusedann.HybridIndex.build(contents, attrs)
    assert idx.size == 300

    hits = idx.query(contents[7], attrs[7], k=3, eps=0.05)
    assert hits[0]["id"] == 7
    assert hits[0]["score"] == pytest.approx(0.0)
    for h in hits:
        assert h["attribute_distance"] == 0.0

    budget = idx.candidate_budget(values[0], 10, 0.05)
    assert budget >= 10


def test_chain_end_to_end():
    rng = random.Random(7)
    records = []
    for i in range(200):
        content = [rng.gauss(0, 1) for _ in range(6)]
        attrs = [[float(i % 2)], [float(i % 3)]]
        records.append((content, attrs))
    chain = fusedann.TransformChain.build(records, priority=[1, 0])
    assert chain.num_attributes == 2

    content, attrs = records[11]
    hits = chain.query(content, attrs, k=5, eps=0.05)
    assert hits[0]["id"] == 11

    monotone, variances = chain.verify_monotone_priority(content, attrs, k=10)
    assert len(variances) == 2

    updated, recomputed = chain.with_priority([0, 1])
    assert recomputed == 2
    rebuilt = fusedann.TransformChain.build(records, priority=[0, 1])
    assert updated.fused_points == rebuilt.fused_points


def test_range_index_end_to_end():
    rng = random.Random(11)
    contents, attrs = [], []
    for _ in range(800):
        contents.append([rng.gauss(0, 1) for _ in range(8)])
        attrs.append([rng.random()])
    rix = fusedann.RangeIndex.build(contents, attrs, alpha=10.0, beta=2.0,
                                    radius_k=30, max_lines=200)
    assert rix.num_lines > 0

    hits = rix.query(contents[3], [0.0], [1.0], k=5, eps=0.01)
    assert hits and hits[0]["id"] == 3
    # Exhaustive check that everything returned is in range.
    for h in hits:
        assert 0.0 <= attrs[h["id"]][0] <= 1.0


def test_vector_roundtrip(tmp_path):
    path = str(tmp_path / "v.fvecs")
    vectors = [[1.0, 2.0], [3.0, -4.0]]
    fusedann.save_vectors_fvecs(path, vectors)
    assert fusedann.load_vectors(path, "fvecs") == vectors


def test_token_embedding():
    vecs = fusedann.embed_tokens(["a", "b", "a"], m=4, seed=3)
    assert vecs[0] == vecs[2]
    assert vecs[0] != vecs[1]
    dist = math.dist(vecs[0], vecs[1])
    assert dist >= 1.0
