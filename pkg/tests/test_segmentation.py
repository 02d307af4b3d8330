import csv
import json

import numpy as np
import pytest

from pgfl.errors import InputError
from pgfl.graph import build_graph, chain_graph
from pgfl.segmentation import default_merge_tol, segment_dyads


def test_constant_estimate_connected_graph_one_segment():
    g = chain_graph(5)
    P = np.full((5, 5), 0.37)
    part = segment_dyads(P, g)
    assert part.num_segments == 1
    assert part.segment_size[0] == 25
    assert np.isclose(part.segment_mean[0], 0.37)


def test_constant_estimate_q_components_q_squared_segments():
    for q, edges, n in ((2, [(0, 1), (2, 3)], 4), (3, [(0, 1)], 4)):
        g = build_graph(n, edges)
        assert g.q == q
        P = np.full((n, n), 0.5)
        part = segment_dyads(P, g)
        assert part.num_segments == q * q


def test_segment_count_monotone_in_eps():
    rng = np.random.default_rng(17)
    n = 12
    g = chain_graph(n)
    P = np.round(rng.random((n, n)), 1)  # many near-ties
    counts = [
        segment_dyads(P, g, eps=e).num_segments
        for e in (0.0, 0.05, 0.1, 0.3, 1.0)
    ]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 1  # eps >= range: everything merges


def test_blockwise_estimate_segments():
    # 2-block constant matrix on a chain: 4 dyad blocks = 4 segments
    n = 6
    P = np.full((n, n), 0.2)
    P[:3, :3] = 0.8
    P[3:, 3:] = 0.8
    part = segment_dyads(P, chain_graph(n))
    assert part.num_segments == 4
    assert part.label_of(0, 0) == part.label_of(2, 2)
    assert part.label_of(0, 0) != part.label_of(0, 5)
    sizes = sorted(part.segment_size.tolist())
    assert sizes == [9, 9, 9, 9]


def test_default_merge_tol_scales_with_range():
    P = np.array([[0.0, 10.0], [10.0, 0.0]])
    assert np.isclose(default_merge_tol(P), 1e-5)
    assert default_merge_tol(np.zeros((3, 3))) == 0.0


def test_segment_rejects_bad_input():
    g = chain_graph(4)
    with pytest.raises(InputError):
        segment_dyads(np.zeros((3, 3)), g)
    with pytest.raises(InputError):
        segment_dyads(np.zeros((4, 4)), g, eps=-1.0)


def test_partition_outputs(tmp_path):
    g = build_graph(3, [(0, 1), (1, 2)])
    P = np.full((3, 3), 0.4)
    part = segment_dyads(P, g)
    csv_path = tmp_path / "part.csv"
    part.to_csv(csv_path)
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["i", "j", "segment_id"]
    assert len(rows) == 1 + 9
    json_path = tmp_path / "seg.json"
    part.to_summary_json(json_path)
    summary = json.loads(json_path.read_text())
    assert summary["n"] == 3
    assert summary["num_segments"] == 1
    assert summary["segments"][0]["size"] == 9
