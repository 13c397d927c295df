import numpy as np
import pytest

from ofidesign.structures import (
    INDEFINITE,
    POSITIVE_DEFINITE,
    PSD_SINGULAR,
    CandidateSet,
    ContinuousDesign,
    DataSet,
    ExactDesign,
    InfoMatrix,
    as_points,
    classify_eigenvalues,
    point_key,
)


def test_as_points_promotes_scalars_to_column():
    pts = as_points([1.0, 2.0, 3.0])
    assert pts.shape == (3, 1)


def test_as_points_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        as_points(np.empty((0, 2)))
    with pytest.raises(ValueError):
        as_points([[np.nan, 0.0]])


def test_candidate_set_rejects_duplicates():
    with pytest.raises(ValueError):
        CandidateSet(np.array([[0.0, 1.0], [0.0, 1.0]]))


def test_candidate_index_of_exact_match():
    cs = CandidateSet(np.array([[-1.0, -1.0], [1.0, 1.0]]))
    assert cs.index_of([1.0, 1.0]) == 1
    with pytest.raises(KeyError):
        cs.index_of([0.5, 0.5])


def test_point_key_is_exact():
    assert point_key([0.1 + 0.2]) != point_key([0.3])


def test_continuous_design_weight_sum_enforced():
    pts = np.array([[0.0], [1.0]])
    with pytest.raises(ValueError):
        ContinuousDesign(pts, np.array([0.6, 0.6]))


def test_continuous_design_negative_weight_needs_improper_flag():
    pts = np.array([[0.0], [1.0]])
    with pytest.raises(ValueError):
        ContinuousDesign(pts, np.array([-0.25, 1.25]))
    improper = ContinuousDesign(pts, np.array([-0.25, 1.25]), proper=False)
    assert not improper.proper


def test_continuous_design_json_round_trip():
    design = ContinuousDesign(np.array([[0.0, 1.0], [1.0, 0.0]]),
                              np.array([0.25, 0.75]))
    back = ContinuousDesign.from_json(design.to_json())
    np.testing.assert_array_equal(back.points, design.points)
    np.testing.assert_array_equal(back.weights, design.weights)


def test_exact_design_counts_validation():
    pts = np.array([[0.0], [1.0]])
    with pytest.raises(ValueError):
        ExactDesign(pts, np.array([0, 0]))
    with pytest.raises(ValueError):
        ExactDesign(pts, np.array([-1, 2]))
    with pytest.raises(ValueError):
        ExactDesign(pts, np.array([1.5, 0.5]))


def test_exact_design_to_continuous_normalizes():
    design = ExactDesign(np.array([[0.0], [1.0]]), np.array([3, 1]))
    cont = design.to_continuous()
    np.testing.assert_allclose(cont.weights, [0.75, 0.25])
    assert design.n == 4


def test_exact_design_json_round_trip():
    design = ExactDesign(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([2, 5]))
    back = ExactDesign.from_json(design.to_json())
    np.testing.assert_array_equal(back.counts, design.counts)


def test_dataset_append_run_tracks_counts_and_boundaries():
    data = DataSet.empty(np.array([[0.0], [1.0], [2.0]]))
    data.append_run([2, 0, 1], [np.array([1.0, 2.0]), np.empty(0),
                                np.array([3.0])])
    data.append_run([0, 1, 0], [np.empty(0), np.array([4.0]), np.empty(0)])
    assert data.total_n == 4
    assert data.n_runs == 2
    assert data.run_sizes == [3, 1]
    np.testing.assert_array_equal(data.counts(), [2, 1, 1])


def test_dataset_append_run_rejects_count_mismatch():
    data = DataSet.empty(np.array([[0.0], [1.0]]))
    with pytest.raises(ValueError):
        data.append_run([2, 0], [np.array([1.0]), np.empty(0)])


def test_dataset_run_sizes_must_account_for_observations():
    with pytest.raises(ValueError):
        DataSet(np.array([[0.0]]), [np.array([1.0, 2.0])], [1])


def test_dataset_copy_is_independent():
    data = DataSet.empty(np.array([[0.0], [1.0]]))
    data.append_run([1, 1], [np.array([1.0]), np.array([2.0])])
    clone = data.copy()
    clone.append_run([1, 0], [np.array([9.0]), np.empty(0)])
    assert data.total_n == 2
    assert clone.total_n == 3


def test_dataset_add_point_extends_support():
    data = DataSet.empty(np.array([[0.0, 0.0]]))
    idx = data.add_point([1.0, 1.0])
    assert idx == 1
    assert data.add_point([1.0, 1.0]) == 1  # idempotent
    with pytest.raises(ValueError):
        data.add_point([1.0])


def test_dataset_json_round_trip():
    data = DataSet.empty(np.array([[0.0], [1.0]]))
    data.append_run([2, 1], [np.array([1.0, 2.0]), np.array([3.0])])
    back = DataSet.from_json(data.to_json())
    assert back.total_n == 3
    assert back.run_sizes == [3]
    np.testing.assert_array_equal(back.groups[0], data.groups[0])


def test_info_matrix_classification_matches_eigenvalues():
    pd = InfoMatrix.from_values(np.diag([1.0, 2.0, 3.0]))
    assert pd.definiteness == POSITIVE_DEFINITE
    assert pd.is_positive_definite
    singular = InfoMatrix.from_values(np.diag([1.0, 1.0, 0.0]))
    assert singular.definiteness == PSD_SINGULAR
    indef = InfoMatrix.from_values(np.diag([1.0, 1.0, -1.0]))
    assert indef.definiteness == INDEFINITE


def test_info_matrix_rejects_asymmetry():
    m = np.array([[1.0, 0.5], [0.2, 1.0]])
    with pytest.raises(ValueError):
        InfoMatrix.from_values(m)


def test_info_matrix_json_round_trip_row_major():
    m = InfoMatrix.from_values(np.array([[2.0, 0.5], [0.5, 1.0]]))
    payload = m.to_json()
    assert payload["values"] == [2.0, 0.5, 0.5, 1.0]
    back = InfoMatrix.from_json(payload)
    np.testing.assert_array_equal(back.values, m.values)
    assert back.definiteness == m.definiteness


def test_classification_threshold_scales_with_trace():
    # a tiny negative eigenvalue relative to the scale still counts as
    # singular rather than indefinite
    eigs = np.array([-1e-12, 1.0, 1.0])
    assert classify_eigenvalues(eigs) == PSD_SINGULAR
