"""
Tests for threshold selection and grid-search tuning
"""
import numpy as np
import pytest

from tests.helpers import linear_model, random_model
from src.detectors.odin_detector import OdinParams, odin_scores, softmax_scores
from src.detectors.tuner import (
    TuneGrid, TuneResult, load_tuned_params, odin_scores_over_epsilons, save_tuned_params,
    threshold_for_tpr, tune, tuning_size_curve,
)
from src.utils.errors import DataError, FormatError, ParameterError
from src.utils.rng import get_rng


# threshold_for_tpr

def test_threshold_four_scores():
    scores = np.array([0.9, 0.8, 0.7, 0.6])
    delta = threshold_for_tpr(scores, 0.95)
    assert delta < 0.6
    assert delta == np.nextafter(0.6, -np.inf)
    assert np.mean(scores > delta) == 1.0


def test_threshold_total_tie():
    scores = np.full(10, 0.42)
    delta = threshold_for_tpr(scores, 0.95)
    assert delta == np.nextafter(0.42, -np.inf)
    assert np.mean(scores > delta) == 1.0


def test_threshold_hundred_scores():
    scores = np.arange(1, 101) / 100.0
    get_rng(0).shuffle(scores)
    delta = threshold_for_tpr(scores, 0.95)
    assert delta == np.nextafter(0.06, -np.inf)
    assert int(np.sum(scores > delta)) == 95


def test_threshold_is_largest_admissible():
    rng = get_rng(3)
    for _ in range(50):
        scores = np.round(rng.uniform(0, 1, size=int(rng.integers(1, 60))), 2)
        target = float(rng.uniform(0.05, 0.99))
        delta = threshold_for_tpr(scores, target)
        assert np.mean(scores > delta) >= target - 1e-12
        # one ulp up is the rank score itself, which admits too few
        assert np.mean(scores > np.nextafter(delta, np.inf)) < target


def test_threshold_errors():
    with pytest.raises(DataError):
        threshold_for_tpr(np.array([]), 0.95)
    with pytest.raises(ParameterError):
        threshold_for_tpr(np.array([0.5]), 1.0)


# Grid

def test_default_grid():
    grid = TuneGrid()
    assert grid.temperatures == [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
    assert len(grid.epsilons) == 21
    assert grid.epsilons[0] == 0.0 and grid.epsilons[-1] == 0.004
    assert grid.epsilons[1] == pytest.approx(0.0002)
    assert grid.target_tpr == 0.95


def test_grid_validation():
    with pytest.raises(DataError):
        TuneGrid(temperatures=[], epsilons=[0.0])
    with pytest.raises(ParameterError):
        TuneGrid(temperatures=[-1.0], epsilons=[0.0])
    with pytest.raises(ParameterError):
        TuneGrid(temperatures=[1.0], epsilons=[-0.1])


# tune

def test_singleton_grid_returns_baseline(small_model, rng):
    in_holdout = rng.uniform(0, 1, size=(40, small_model.input_dim))
    ood_holdout = rng.uniform(0, 1, size=(30, small_model.input_dim))
    result = tune(small_model, in_holdout, ood_holdout, TuneGrid.baseline())

    assert result.params.temperature == 1.0
    assert result.params.epsilon == 0.0
    in_scores = softmax_scores(small_model, in_holdout, 1.0)
    assert result.params.delta == threshold_for_tpr(in_scores, 0.95)
    out_scores = softmax_scores(small_model, ood_holdout, 1.0)
    assert result.holdout_fpr == np.mean(out_scores > result.params.delta)
    assert len(result.grid_table) == 1


def test_tuned_fpr_never_exceeds_any_grid_point():
    rng = get_rng(11)
    grid = TuneGrid(temperatures=[1, 10, 1000], epsilons=[0.0, 0.002, 0.004])
    for trial in range(20):
        model = random_model(trial, dims=(4, 6, 3), bias_scale=1.0)
        in_holdout = rng.uniform(0, 1, size=(30, 4))
        ood_holdout = rng.uniform(0, 1, size=(30, 4)) * rng.uniform(0.2, 1.0)
        result = tune(model, in_holdout, ood_holdout, grid)

        assert result.holdout_fpr == result.grid_table['holdout_fpr'].min()
        baseline = result.grid_table.query('temperature == 1 and epsilon == 0')['holdout_fpr'].iloc[0]
        assert result.holdout_fpr <= baseline


def test_tuner_picks_the_largest_temperature_when_it_separates_best():
    # identity logits: in-samples have gaps (1, 20), OOD samples gaps (3, 3)
    model = linear_model(np.eye(3))
    in_holdout = np.tile([20.0, 19.0, 0.0], (10, 1))
    ood_holdout = np.tile([3.0, 0.0, 0.0], (10, 1))
    grid = TuneGrid(temperatures=[1, 2, 5], epsilons=[0.0])

    result = tune(model, in_holdout, ood_holdout, grid)
    table = result.grid_table.set_index('temperature')['holdout_fpr']
    assert table[1.0] == 1.0 and table[2.0] == 1.0 and table[5.0] == 0.0
    assert result.params.temperature == 5.0
    assert result.holdout_fpr == 0.0


def test_ties_prefer_smaller_epsilon_then_temperature(small_model, rng):
    # identical in/out sets make every grid point tie at FPR == TPR
    X = rng.uniform(0, 1, size=(20, small_model.input_dim))
    grid = TuneGrid(temperatures=[10, 1], epsilons=[0.001, 0.0])
    result = tune(small_model, X, X, grid)
    assert (result.params.temperature, result.params.epsilon) == (1.0, 0.0)


def test_shared_gradient_scores_match_direct_scores(small_model, rng):
    X = rng.uniform(0, 1, size=(8, small_model.input_dim))
    epsilons = [0.0, 0.001, 0.004]
    for scores, epsilon in zip(odin_scores_over_epsilons(small_model, X, 20.0, epsilons), epsilons):
        np.testing.assert_allclose(scores, odin_scores(small_model, X, 20.0, epsilon), rtol=0, atol=1e-15)


def test_empty_holdouts_are_data_errors(small_model):
    with pytest.raises(DataError):
        tune(small_model, np.zeros((0, small_model.input_dim)), np.zeros((3, small_model.input_dim)))


# Records

def test_record_round_trip(tmp_path, small_model, rng):
    result = tune(small_model, rng.uniform(0, 1, size=(25, 6)), rng.uniform(0, 1, size=(25, 6)),
                  TuneGrid(temperatures=[1, 1000], epsilons=[0.0, 0.0014]))
    path = tmp_path / 'tuned.json'
    save_tuned_params(result, str(path))
    loaded = load_tuned_params(str(path))

    assert loaded.to_record() == result.to_record()
    assert set(loaded.to_record()) == {'temperature', 'epsilon', 'delta', 'target_tpr', 'holdout_fpr'}


def test_record_errors(tmp_path):
    with pytest.raises(FormatError):
        TuneResult.from_record({'temperature': 1.0})
    bad = tmp_path / 'bad.json'
    bad.write_text('{not json')
    with pytest.raises(FormatError):
        load_tuned_params(str(bad))
    with pytest.raises(DataError):
        load_tuned_params(str(tmp_path / 'absent.json'))


def test_tuning_size_curve_reports_each_size(small_model, rng):
    in_tuning = rng.uniform(0, 1, size=(30, 6))
    in_test = rng.uniform(0, 1, size=(30, 6))
    pool = rng.uniform(0, 1, size=(40, 6)) * 0.5
    ood_test = rng.uniform(0, 1, size=(30, 6)) * 0.5
    grid = TuneGrid(temperatures=[1, 100], epsilons=[0.0, 0.002])

    curve = tuning_size_curve(small_model, in_tuning, in_test, pool, ood_test, [5, 20, 40], grid, seed=1)
    assert curve['tuning_size'].tolist() == [5, 20, 40]
    assert curve['test_fpr'].between(0, 1).all()
    with pytest.raises(ParameterError):
        tuning_size_curve(small_model, in_tuning, in_test, pool, ood_test, [41], grid)
