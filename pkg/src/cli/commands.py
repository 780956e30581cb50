#!/usr/bin/env python3
"""
Subcommand implementations

Each cmd_* takes a resolved RunConfig, writes its outputs under cfg.out_dir
and returns a small summary frame that main() prints as a table.
"""

import logging
import os
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import settings
from src.analysis import (
    accuracy_by_tpr, collect_logit_stats, conditional_expectation, detection_error_limit, exact_score_batch,
    limit_rank_agreement, limit_statistic, logit_stats_frame, score_proxy, u_stats_batch,
)
from src.datasets import (
    ImageTensor, LabeledDataset, class_split, downsample, gen_gaussian_noise, gen_uniform_noise,
    holdout_split, load_images, load_labeled, random_crop, select_classes, write_tensor,
)
from src.detectors import (
    OdinParams, TuneGrid, load_tuned_params, odin_scores, odin_scores_over_epsilons,
    save_tuned_params, softmax_scores, tune, tuning_size_curve,
)
from src.distances import dataset_distance, distance_performance_correlation, subsample_pair
from src.metrics import METRIC_NAMES, ScoreSet, evaluate, threshold_sweep
from src.net import MlpTrainer, TrainConfig, forward_batch, load_model, save_model
from src.cli.run_config import RunConfig, parse_bool, parse_float_list, parse_int_list
from src.utils.errors import DataError, ParameterError

logger = logging.getLogger(__name__)

GENERATED_SOURCE = re.compile(r'^(gaussian|uniform):(\d+)$')
Dataset = Union[ImageTensor, LabeledDataset]


# ---------------------------------------------------------------------------
# Dataset plumbing
# ---------------------------------------------------------------------------

def _rows(data: Dataset) -> np.ndarray:
    return data.inputs if isinstance(data, LabeledDataset) else data.flatten()


def _require(cfg: RunConfig, name: str) -> str:
    value = cfg.get(name)
    if value is None:
        raise ParameterError(f"--{name.replace('_', '-')} is required for '{cfg.command}'")
    return value


def _load_in_distribution(cfg: RunConfig, require_labels: bool = False) -> Tuple[Dataset, tuple]:
    """In-distribution set plus its per-sample image shape"""
    path = _require(cfg, 'in_data')
    labels_path = cfg.get('in_labels')
    classes = parse_int_list(cfg.get('in_classes'))

    images = load_images(path)
    if labels_path is None:
        if require_labels:
            raise ParameterError(f"'{cfg.command}' needs --in-labels")
        if classes:
            raise ParameterError("--in-classes needs --in-labels")
        return images, images.image_shape

    data = load_labeled(path, labels_path)
    if classes:
        data, _, label_map = class_split(data, classes)
        logger.info(f"🔢 In-distribution classes {sorted(label_map)} relabelled to 0..{len(label_map) - 1}")
    return data, images.image_shape


def _generate(kind: str, n: int, image_shape: tuple, seed: int) -> ImageTensor:
    """Noise images shaped like the in-distribution samples"""
    if len(image_shape) == 1:
        h, w = 1, image_shape[0]
    else:
        h, w = image_shape[0], int(np.prod(image_shape[1:]))
    generator = gen_gaussian_noise if kind == 'gaussian' else gen_uniform_noise
    noise = generator(n, h, w, seed)
    return ImageTensor(noise.values.reshape((n,) + tuple(image_shape)), name=kind, seed=seed)


def _load_ood_sources(cfg: RunConfig, image_shape: tuple) -> List[Dataset]:
    sources = cfg.get('ood_data') or []
    if isinstance(sources, str):
        sources = [sources]
    if not sources:
        raise ParameterError(f"'{cfg.command}' needs at least one --ood-data source")

    labels_path = cfg.get('ood_labels')
    classes = parse_int_list(cfg.get('ood_classes'))
    if classes and labels_path is None:
        raise ParameterError("--ood-classes needs --ood-labels")

    loaded = []
    for source in sources:
        match = GENERATED_SOURCE.match(source)
        if match:
            loaded.append(_generate(match.group(1), int(match.group(2)), image_shape, cfg.seed))
            continue

        if classes:
            data = load_labeled(source, labels_path)
            suffix = ''.join(str(c) for c in sorted(classes))
            loaded.append(select_classes(data, classes, name=f"{data.name}_classes{suffix}"))
        else:
            loaded.append(load_images(source))
    return loaded


def _test_part(data: Dataset, holdout_n: int, seed: int) -> Dataset:
    """The evaluation part left after removing the tuning holdout (everything when holdout_n is 0)"""
    if holdout_n == 0:
        return data
    return holdout_split(data, holdout_n, seed)[1]


def _grid(cfg: RunConfig) -> TuneGrid:
    temperatures = parse_float_list(cfg.get('grid_t')) or list(settings.temperatures)
    epsilons = parse_float_list(cfg.get('grid_eps')) or list(settings.epsilons)
    return TuneGrid(temperatures=temperatures, epsilons=epsilons, target_tpr=_target_tpr(cfg))


def _target_tpr(cfg: RunConfig) -> float:
    return float(cfg.get('target_tpr', settings.target_tpr))


def _holdout_n(cfg: RunConfig) -> int:
    holdout_n = int(cfg.get('holdout_n', settings.holdout_n))
    if holdout_n < 0:
        raise ParameterError(f"Holdout size must be non-negative, got {holdout_n}")
    return holdout_n


@dataclass
class _DetectorChoice:
    temperature: float
    epsilon: float
    delta: Optional[float] = None


def _detector_choice(cfg: RunConfig) -> _DetectorChoice:
    """Explicit --temperature/--epsilon win over a --params file; T=1, eps=0 otherwise"""
    choice = _DetectorChoice(temperature=1.0, epsilon=0.0)
    if cfg.get('params'):
        tuned = load_tuned_params(cfg.get('params'))
        choice = _DetectorChoice(tuned.params.temperature, tuned.params.epsilon, tuned.params.delta)
    if cfg.get('temperature') is not None:
        choice.temperature = float(cfg.get('temperature'))
    if cfg.get('epsilon') is not None:
        choice.epsilon = float(cfg.get('epsilon'))
    # validates T and eps
    OdinParams(temperature=choice.temperature, epsilon=choice.epsilon)
    return choice


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(cfg: RunConfig) -> pd.DataFrame:
    data, _ = _load_in_distribution(cfg, require_labels=True)
    classes = parse_int_list(cfg.get('classes'))
    if classes:
        data, _, _ = class_split(data, classes)

    test_data = None
    if cfg.get('test_data'):
        test_data = load_labeled(cfg.get('test_data'), _require(cfg, 'test_labels'))
        if classes:
            test_data, _, _ = class_split(test_data, classes)

    hidden_dims = parse_int_list(cfg.get('hidden_dims')) or list(settings.hidden_dims)
    dims = [data.input_dim] + hidden_dims + [int(data.labels.max()) + 1]

    optimizer = cfg.get('optimizer', settings.optimizer)
    overrides = dict(
        epochs=int(cfg.get('epochs', settings.epochs)),
        batch_size=int(cfg.get('batch_size', settings.batch_size)),
        weight_decay=float(cfg.get('weight_decay', 0.0)),
        seed=cfg.seed,
    )
    if cfg.get('learning_rate') is not None:
        overrides['learning_rate'] = float(cfg.get('learning_rate'))
    if optimizer == 'sgd_nesterov':
        config = TrainConfig.sgd_default(momentum=settings.momentum, **overrides)
    else:
        overrides.setdefault('learning_rate', settings.learning_rate)
        config = TrainConfig(optimizer=optimizer, **overrides)

    logger.info(f"🏋️ Training {dims} on {len(data)} samples with {config.optimizer} for {config.epochs} epochs")
    trainer = MlpTrainer(config)
    model = trainer.fit(data, dims, test_data)

    model_path = cfg.get('model_out') or cfg.output_path('model.odn')
    save_model(model, model_path)

    history = pd.DataFrame(trainer.history,
                           columns=['epoch', 'loss', 'accuracy', 'learning_rate']
                           + (['test_accuracy'] if test_data is not None else []))
    cfg.write_table(history, 'training_log')
    return history.tail(1) if len(history) else pd.DataFrame([{'model': model_path, 'epochs': 0}])


def cmd_tune(cfg: RunConfig) -> pd.DataFrame:
    model = load_model(_require(cfg, 'model'))
    in_data, image_shape = _load_in_distribution(cfg)
    ood = _load_ood_sources(cfg, image_shape)[0]

    holdout_n = _holdout_n(cfg)
    if holdout_n == 0:
        raise ParameterError("Tuning needs a holdout: --holdout-n must be at least 1")
    in_tune, in_test = holdout_split(in_data, holdout_n, cfg.seed)
    ood_tune, ood_test = holdout_split(ood, holdout_n, cfg.seed)

    grid = _grid(cfg)
    result = tune(model, _rows(in_tune), _rows(ood_tune), grid)
    save_tuned_params(result, cfg.output_path('tuned_params.json'))
    cfg.write_table(result.grid_table, 'tune_grid')

    sizes = parse_int_list(cfg.get('tuning_sizes'))
    if sizes:
        curve = tuning_size_curve(model, _rows(in_tune), _rows(in_test), _rows(ood_tune),
                                  _rows(ood_test), sizes, grid, cfg.seed)
        cfg.write_table(curve, 'tuning_sizes')

    return pd.DataFrame([result.to_record()])


def _eval_rows(model, in_rows: np.ndarray, in_name: str, ood: Dataset, ood_rows: np.ndarray,
               temperature: float, epsilon: float, target_tpr: float):
    in_scores = odin_scores(model, in_rows, temperature, epsilon)
    out_scores = odin_scores(model, ood_rows, temperature, epsilon)
    return evaluate(ScoreSet(in_scores, out_scores, in_name, ood.name), target_tpr)


def _sensitivity_deltas(scores: ScoreSet, points: int, extra: List[float]) -> List[float]:
    """Evenly spaced deltas across the observed score range plus the given ones, ascending"""
    if points < 2:
        raise ParameterError(f"--sensitivity-points must be at least 2, got {points}")
    observed = np.concatenate([scores.in_scores, scores.out_scores])
    grid = np.linspace(observed.min(), observed.max(), points)
    return sorted(set(grid.tolist()) | set(extra))


def cmd_eval(cfg: RunConfig) -> pd.DataFrame:
    model = load_model(_require(cfg, 'model'))
    in_data, image_shape = _load_in_distribution(cfg)
    sources = _load_ood_sources(cfg, image_shape)
    choice = _detector_choice(cfg)
    target_tpr = _target_tpr(cfg)
    holdout_n = _holdout_n(cfg)
    compare = parse_bool(cfg.get('compare_baseline'), 'compare_baseline')
    points = int(cfg.get('sensitivity_points', 21))

    in_rows = _rows(_test_part(in_data, holdout_n, cfg.seed))
    in_name = getattr(in_data, 'name', 'in')
    in_scores = odin_scores(model, in_rows, choice.temperature, choice.epsilon)
    baseline_in = softmax_scores(model, in_rows, 1.0) if compare else None

    rows, tuned_rows = [], []
    for ood in sources:
        ood_rows = _rows(_test_part(ood, holdout_n, cfg.seed))
        scores = ScoreSet(in_scores, odin_scores(model, ood_rows, choice.temperature, choice.epsilon),
                          in_name, ood.name)
        odin = evaluate(scores, target_tpr)
        odin.curves.to_csv(cfg.output_path(f"curves_{ood.name}_odin.csv"), index=False)
        baseline = None
        if compare:
            baseline = evaluate(ScoreSet(baseline_in, softmax_scores(model, ood_rows, 1.0), in_name, ood.name),
                                target_tpr)
            baseline.curves.to_csv(cfg.output_path(f"curves_{ood.name}_baseline.csv"), index=False)

        for metric in METRIC_NAMES:
            row = {'in_name': in_name, 'out_name': ood.name, 'metric': metric}
            if compare:
                row['baseline'] = baseline.metrics()[metric]
            row['odin'] = odin.metrics()[metric]
            rows.append(row)

        marked = [odin.delta] + ([choice.delta] if choice.delta is not None else [])
        sensitivity = threshold_sweep(scores, _sensitivity_deltas(scores, points, marked))
        sensitivity.insert(0, 'temperature', choice.temperature)
        sensitivity.insert(1, 'epsilon', choice.epsilon)
        sensitivity['at_target_tpr'] = sensitivity['delta'] == odin.delta
        sensitivity['tuned'] = sensitivity['delta'] == choice.delta
        cfg.write_table(sensitivity, f"threshold_sensitivity_{ood.name}")

        if choice.delta is not None:
            at_tuned = threshold_sweep(scores, [choice.delta]).iloc[0]
            tuned_rows.append({'in_name': in_name, 'out_name': ood.name, 'delta': choice.delta,
                               'tpr': float(at_tuned['tpr']), 'fpr': float(at_tuned['fpr'])})
            logger.info(f"🎯 {ood.name}: at the tuned delta {choice.delta:.6f} "
                        f"TPR={at_tuned['tpr']:.4f} FPR={at_tuned['fpr']:.4f}")

    if tuned_rows:
        cfg.write_table(pd.DataFrame(tuned_rows), 'tuned_delta')

    columns = ['in_name', 'out_name', 'metric'] + (['baseline'] if compare else []) + ['odin']
    table = pd.DataFrame(rows, columns=columns)
    cfg.write_table(table, 'metrics')
    return table


def cmd_sweep(cfg: RunConfig) -> pd.DataFrame:
    model = load_model(_require(cfg, 'model'))
    in_data, image_shape = _load_in_distribution(cfg)
    ood = _load_ood_sources(cfg, image_shape)[0]
    holdout_n = _holdout_n(cfg)
    grid = _grid(cfg)

    in_rows = _rows(_test_part(in_data, holdout_n, cfg.seed))
    ood_rows = _rows(_test_part(ood, holdout_n, cfg.seed))

    rows = []
    for temperature in grid.temperatures:
        in_by_eps = odin_scores_over_epsilons(model, in_rows, temperature, grid.epsilons)
        out_by_eps = odin_scores_over_epsilons(model, ood_rows, temperature, grid.epsilons)
        for epsilon, in_scores, out_scores in zip(grid.epsilons, in_by_eps, out_by_eps):
            report = evaluate(ScoreSet(in_scores, out_scores), grid.target_tpr)
            for metric, value in report.metrics().items():
                rows.append({'temperature': temperature, 'epsilon': epsilon, 'metric': metric, 'value': value})

    table = pd.DataFrame(rows, columns=['temperature', 'epsilon', 'metric', 'value'])
    cfg.write_table(table, 'sweep')
    return table.pivot_table(index=['temperature', 'epsilon'], columns='metric', values='value',
                             sort=False).reset_index().head(10)


def cmd_analyze(cfg: RunConfig) -> pd.DataFrame:
    model = load_model(_require(cfg, 'model'))
    in_data, image_shape = _load_in_distribution(cfg)
    sources = _load_ood_sources(cfg, image_shape)
    temperature = float(cfg.get('temperature', 1.0))
    epsilon = float(cfg.get('epsilon', 0.0))
    n_bins = int(cfg.get('bins', settings.n_bins))
    in_name = getattr(in_data, 'name', 'in')

    sets = [(in_name, _rows(in_data))] + [(ood.name, _rows(ood)) for ood in sources]

    stats = []
    for name, rows in sets:
        stats.extend(collect_logit_stats(model, rows, temperature, name))
    frame = logit_stats_frame(stats)
    frame['score_proxy'] = score_proxy(frame['u1'], frame['u2'], temperature)
    cfg.write_table(frame, 'logit_stats')

    binned = []
    for name, group in frame.groupby('source', sort=False):
        for response, given in (('u2', 'u1'), ('grad_norm_l1', 'score')):
            table = conditional_expectation(group[given], group[response], n_bins).to_frame()
            table.insert(0, 'source', name)
            table.insert(1, 'response', f"{response}|{given}")
            binned.append(table)
    cfg.write_table(pd.concat(binned, ignore_index=True), 'binned_expectations')

    # large-temperature behaviour on the first OOD set
    in_logits = forward_batch(model, sets[0][1])
    out_logits = forward_batch(model, sets[1][1])
    limit_temperatures = parse_float_list(cfg.get('limit_temperatures')) or [1e4, 1e5, 1e6, 1e7]
    limit = detection_error_limit(lambda t: exact_score_batch(in_logits, t),
                                  lambda t: exact_score_batch(out_logits, t),
                                  limit_temperatures, _target_tpr(cfg))
    all_logits = np.vstack([in_logits, out_logits])
    target = (model.num_classes - 1) * u_stats_batch(all_logits)[0]
    statistics = [limit_statistic(exact_score_batch(all_logits, t), model.num_classes, t)
                  for t in limit['temperature']]
    limit['limit_statistic_mean'] = [float(np.mean(s)) for s in statistics]
    limit['limit_target_mean'] = float(np.mean(target))
    limit['limit_max_abs_gap'] = [float(np.max(np.abs(s - target))) for s in statistics]
    cfg.write_table(limit, 'temperature_limit')
    agreement = limit_rank_agreement(all_logits, 1e8)

    summary = {
        'temperature': temperature,
        'epsilon': epsilon,
        'limit_rank_agreement': agreement,
        'limit_tail_change': float(abs(limit['detection_error'].diff().iloc[-1])) if len(limit) > 1 else 0.0,
    }

    if isinstance(in_data, LabeledDataset):
        tprs = parse_float_list(cfg.get('accuracy_tprs')) or [0.5, 0.6, 0.7, 0.8, 0.9, 0.95]
        accuracy = accuracy_by_tpr(model, in_data, temperature, epsilon, tprs)
        cfg.write_table(accuracy, 'threshold_accuracy')

    cfg.write_record(summary, 'analysis_summary')
    return pd.DataFrame([summary])


def cmd_distance(cfg: RunConfig) -> pd.DataFrame:
    in_data, image_shape = _load_in_distribution(cfg)
    sources = _load_ood_sources(cfg, image_shape)
    max_samples = cfg.get('max_samples')
    in_name = getattr(in_data, 'name', 'in')

    model = load_model(cfg.get('model')) if cfg.get('model') else None
    choice = _detector_choice(cfg) if model is not None else None

    rows = []
    for ood in sources:
        V, W = _rows(in_data), _rows(ood)
        if max_samples is not None:
            V, W = subsample_pair(V, W, int(max_samples), cfg.seed)
        elif len(V) != len(W):
            raise DataError(f"{in_name} has {len(V)} samples but {ood.name} has {len(W)}; "
                            "pass --max-samples to compare seeded subsamples of a common size")
        row = dataset_distance(V, W, in_name, ood.name).to_dict()
        if model is not None:
            report = _eval_rows(model, _rows(in_data), in_name, ood, _rows(ood),
                                choice.temperature, choice.epsilon, _target_tpr(cfg))
            row['fpr_at_tpr'] = report.fpr_at_tpr
        rows.append(row)

    table = pd.DataFrame(rows)
    cfg.write_table(table, 'distances')

    if model is not None and len(rows) >= 2:
        correlation = distance_performance_correlation(table['mmd_squared'], table['fpr_at_tpr'])
        cfg.write_record({'spearman_mmd_vs_fpr': correlation, 'num_sets': len(rows)}, 'distance_correlation')
        logger.info(f"📉 Spearman(MMD², FPR) over {len(rows)} OOD sets: {correlation:.4f}")
    return table


def cmd_gen(cfg: RunConfig) -> pd.DataFrame:
    kind = _require(cfg, 'kind')
    out_file = cfg.get('out_file') or cfg.output_path(f"{kind}.otn")
    n = cfg.get('n')
    height, width = cfg.get('height'), cfg.get('width')

    if kind in ('gaussian', 'uniform'):
        if n is None or height is None or width is None:
            raise ParameterError(f"'gen --kind {kind}' needs --n, --height and --width")
        generator = gen_gaussian_noise if kind == 'gaussian' else gen_uniform_noise
        tensor = generator(int(n), int(height), int(width), cfg.seed)
    else:
        source = load_images(_require(cfg, 'source'))
        if height is None or width is None:
            raise ParameterError(f"'gen --kind {kind}' needs --height and --width")
        if kind == 'crop':
            tensor = random_crop(source, int(height), int(width), cfg.seed)
        else:
            tensor = downsample(source, int(height), int(width))
        if n is not None:
            tensor = tensor.subset(np.arange(min(int(n), len(tensor))))

    write_tensor(out_file, tensor, metadata={'generator': kind, 'seed': cfg.seed})
    return pd.DataFrame([{'file': os.path.basename(out_file), 'generator': kind,
                          'shape': 'x'.join(str(d) for d in tensor.values.shape)}])


COMMANDS = {
    'train': cmd_train,
    'tune': cmd_tune,
    'eval': cmd_eval,
    'sweep': cmd_sweep,
    'analyze': cmd_analyze,
    'distance': cmd_distance,
    'gen': cmd_gen,
}
