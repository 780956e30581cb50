"""
Full-scale checks on MNIST: the 784-256-256-256-10 classifier, noise OOD sets,
the digit-split experiment and the large-temperature limit.

Run with MNIST_DIR pointing at the four IDX files: pytest -m slow
"""
import os

import numpy as np
import pytest

from src.analysis.diagnostics import accuracy_by_tpr, limit_rank_agreement, detection_error_limit
from src.analysis.logit_stats import exact_score_batch
from src.datasets.containers import ImageTensor, LabeledDataset
from src.datasets.file_formats import load_labeled
from src.datasets.generators import gen_gaussian_noise, gen_uniform_noise
from src.datasets.splits import class_split, holdout_split, subsample
from src.detectors.odin_detector import odin_scores, softmax_scores
from src.detectors.tuner import TuneGrid, tune
from src.distances.statistical_distances import mmd_squared
from src.metrics.detection_metrics import ScoreSet, fpr_at_tpr
from src.net.mlp import forward_batch
from src.net.trainer import MlpTrainer, TrainConfig, accuracy

pytestmark = pytest.mark.slow

HOLDOUT_N = 1000
GRID = TuneGrid(temperatures=[1, 10, 100, 1000], epsilons=[0.0, 0.001, 0.002, 0.004])


def _find(directory, stem):
    for name in (stem, stem + '.gz'):
        path = os.path.join(directory, name)
        if os.path.exists(path):
            return path
    pytest.skip(f"{stem} not found in {directory}")


def _rows(data):
    return data.inputs if isinstance(data, LabeledDataset) else data.flatten()


def _noise(kind, n=10000):
    generator = gen_gaussian_noise if kind == 'gaussian' else gen_uniform_noise
    return generator(n, 28, 28, seed=1)


@pytest.fixture(scope='module')
def mnist(mnist_dir):
    train = load_labeled(_find(mnist_dir, 'train-images-idx3-ubyte'), _find(mnist_dir, 'train-labels-idx1-ubyte'))
    test = load_labeled(_find(mnist_dir, 't10k-images-idx3-ubyte'), _find(mnist_dir, 't10k-labels-idx1-ubyte'))
    return train, test


@pytest.fixture(scope='module')
def mnist_model(mnist):
    train, _ = mnist
    return MlpTrainer(TrainConfig(epochs=30, seed=0)).fit(train, [784, 256, 256, 256, 10])


def _tune_and_compare(model, in_data, ood):
    """Tune on the holdouts, then FPR at 95% TPR on the rest for ODIN and the baseline"""
    in_tune, in_test = holdout_split(in_data, HOLDOUT_N, seed=0)
    ood_tune, ood_test = holdout_split(ood, HOLDOUT_N, seed=0)
    result = tune(model, _rows(in_tune), _rows(ood_tune), GRID)

    params = result.params
    odin = fpr_at_tpr(ScoreSet(odin_scores(model, _rows(in_test), params.temperature, params.epsilon),
                               odin_scores(model, _rows(ood_test), params.temperature, params.epsilon)))
    baseline = fpr_at_tpr(ScoreSet(softmax_scores(model, _rows(in_test), 1.0),
                                   softmax_scores(model, _rows(ood_test), 1.0)))
    return result, odin, baseline


def test_classifier_accuracy(mnist, mnist_model):
    _, test = mnist
    assert accuracy(mnist_model, test) >= 0.97


@pytest.mark.parametrize('kind', ['gaussian', 'uniform'])
def test_noise_is_easy_to_detect(mnist, mnist_model, kind):
    _, test = mnist
    result, odin, baseline = _tune_and_compare(mnist_model, test, _noise(kind))

    assert baseline <= 0.02
    assert odin <= baseline
    table = result.grid_table
    assert result.holdout_fpr <= table.query('temperature == 1 and epsilon == 0')['holdout_fpr'].iloc[0]


def test_large_temperature_limit(mnist, mnist_model):
    _, test = mnist
    in_rows = subsample(test, 2000, seed=0).inputs
    out_rows = _noise('uniform', 2000).flatten()
    in_logits = forward_batch(mnist_model, in_rows)
    out_logits = forward_batch(mnist_model, out_rows)

    limit = detection_error_limit(lambda t: exact_score_batch(in_logits, t),
                                  lambda t: exact_score_batch(out_logits, t), [1e6, 1e7])
    errors = limit['detection_error'].to_numpy()
    assert abs(errors[1] - errors[0]) <= 1e-3
    agreement = limit_rank_agreement(np.vstack([in_logits[:1000], out_logits[:1000]]), 1e8)
    assert agreement == pytest.approx(1.0, abs=1e-9)


def test_hard_to_detect_images_are_hard_to_classify(mnist, mnist_model):
    _, test = mnist
    table = accuracy_by_tpr(mnist_model, test, 1000.0, 0.0014, [0.8])
    assert table['accuracy_above'].iloc[0] >= table['accuracy_below'].iloc[0]


def test_digit_split(mnist):
    train, test = mnist
    train_in, _, _ = class_split(train, range(5))
    test_in, test_out, _ = class_split(test, range(5))
    assert len(test_in) + len(test_out) == len(test)
    assert set(test_in.labels) == set(range(5)) and set(test_out.labels) == set(range(5, 10))

    model = MlpTrainer(TrainConfig(epochs=10, seed=0)).fit(train_in, [784, 256, 256, 256, 5])
    ood = ImageTensor(test_out.inputs, name='digits_5_9')
    result, odin, baseline = _tune_and_compare(model, test_in, ood)

    assert odin <= baseline + 0.02
    assert result.holdout_fpr <= result.grid_table.query('temperature == 1 and epsilon == 0')['holdout_fpr'].iloc[0]

    V = subsample(test_in, 1000, seed=0).inputs
    W = subsample(ood, 1000, seed=0).flatten()
    noise = _noise('gaussian', 1000).flatten()
    assert mmd_squared(V, W) < mmd_squared(V, noise)
