import numpy as np
import pytest

from pilotsim import (CHART, FeatureSet, build_scenario, covariance_set,
                      laplacian_eigenmaps, dissimilarity_matrix,
                      random_assignment)
from pilotsim.matio import (export_assignment_csv, export_chart_csv,
                            load_covariances, load_features, save_covariances,
                            save_features)


@pytest.fixture()
def small_covs(unit_cell):
    scen = build_scenario(unit_cell(N=6, M=4), rng=1)
    return covariance_set(scen, quadrature_points=64)


def test_covariance_roundtrip(small_covs, tmp_path):
    path = tmp_path / "covs.mat"
    save_covariances(path, small_covs)
    loaded = load_covariances(path)
    np.testing.assert_array_equal(loaded.blocks, small_covs.blocks)
    assert loaded.block_diagonal
    np.testing.assert_array_equal(loaded.compound(3), small_covs.compound(3))


def test_covariance_header(small_covs, tmp_path):
    path = tmp_path / "covs.mat"
    save_covariances(path, small_covs)
    with open(path, "rb") as fh:
        assert fh.readline() == b"pilotsim-mat 1\n"
        assert fh.readline() == b"cov 6 4 3\n"


def test_feature_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    feats = FeatureSet(kind=CHART, vectors=rng.standard_normal((10, 2)))
    path = tmp_path / "chart.mat"
    save_features(path, feats)
    loaded = load_features(path)
    assert loaded.kind == CHART
    np.testing.assert_array_equal(loaded.vectors, feats.vectors)


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.mat"
    path.write_bytes(b"not a matrix file\n")
    with pytest.raises(ValueError, match="magic"):
        load_covariances(path)


def test_load_rejects_truncated_payload(small_covs, tmp_path):
    path = tmp_path / "covs.mat"
    save_covariances(path, small_covs)
    data = path.read_bytes()
    path.write_bytes(data[:-16])
    with pytest.raises(ValueError, match="payload"):
        load_covariances(path)


def test_wrong_header_kind(small_covs, tmp_path):
    cov_path = tmp_path / "covs.mat"
    save_covariances(cov_path, small_covs)
    with pytest.raises(ValueError, match="feature"):
        load_features(cov_path)


def test_chart_csv_export(unit_cell, tmp_path):
    scen = build_scenario(unit_cell(N=12, M=4), rng=3)
    d = dissimilarity_matrix(covariance_set(scen, quadrature_points=64))
    chart = laplacian_eigenmaps(d, neighbors=3, chart_dim=2)
    path = tmp_path / "chart.csv"
    export_chart_csv(path, chart)
    lines = path.read_text().splitlines()
    assert lines[0] == "ue_index,coord_1,coord_2"
    assert len(lines) == 13
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert float(first[1]) == pytest.approx(chart.vectors[0, 0], rel=1e-9)


def test_assignment_csv_export(tmp_path):
    pa = random_assignment(8, 3, rng=4)
    path = tmp_path / "assign.csv"
    export_assignment_csv(path, pa)
    lines = path.read_text().splitlines()
    assert lines[0] == "ue_index,pilot_index,method,seed"
    assert len(lines) == 9
    for ue, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert int(cells[0]) == ue
        assert int(cells[1]) == pa.pilots[ue]
        assert cells[2] == "RANDOM"
