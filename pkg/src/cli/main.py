#!/usr/bin/env python3
"""
Command-line front end

    python run.py train    --in-data train-images --in-labels train-labels --out runs/mnist
    python run.py tune     --model runs/mnist/model.odn --in-data t10k-images --ood-data gaussian:10000
    python run.py eval     --model runs/mnist/model.odn --params runs/mnist/tuned_params.json \\
                           --in-data t10k-images --ood-data gaussian:10000 --ood-data uniform:10000 --compare-baseline
    python run.py sweep    --model ... --grid-t 1,10,100,1000 --grid-eps 0,0.002,0.004
    python run.py analyze  --model ... --temperature 1000
    python run.py distance --in-data ... --ood-data ... [--model ... --params ...]
    python run.py gen      --kind gaussian --n 10000 --height 28 --width 28 --out-file noise.otn

Exit codes: 0 success, 2 parameter error, 3 data error, 4 format error,
5 domain error, 1 anything else. Failures also print one JSON line
{"error": <category>, "message": ...} on stderr.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from tabulate import tabulate

from config.settings import settings, VALID_FORMATS, VALID_OPTIMIZERS
from src.cli.commands import COMMANDS
from src.cli.run_config import RunConfig, load_config_file
from src.utils.errors import OdinError, ParameterError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
COMMON_KEYS = ('command', 'seed', 'format', 'out', 'config', 'log_level')


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--seed', type=int, default=settings.seed,
                        help=f'Seed for every randomized step (default: {settings.seed})')
    parser.add_argument('--format', choices=VALID_FORMATS, default=settings.output_format,
                        help='Table output format')
    parser.add_argument('--out', default=settings.output_dir, help='Output directory')
    parser.add_argument('--config', help='JSON file of flag values; explicit flags override it')
    parser.add_argument('--log-level', default=settings.log_level,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'])


def _add_in_data(parser: argparse.ArgumentParser):
    parser.add_argument('--in-data', help='In-distribution images (IDX or raw tensor, .gz accepted)')
    parser.add_argument('--in-labels', help='IDX labels for --in-data')
    parser.add_argument('--in-classes', help='Comma-separated classes kept (relabelled densely)')


def _add_ood_data(parser: argparse.ArgumentParser):
    parser.add_argument('--ood-data', action='append',
                        help='OOD source: a file, gaussian:N or uniform:N (repeatable)')
    parser.add_argument('--ood-labels', help='IDX labels for file OOD sources')
    parser.add_argument('--ood-classes', help='Comma-separated classes kept from file OOD sources')


def _add_detector(parser: argparse.ArgumentParser, grid: bool = False):
    parser.add_argument('--model', help='Weight file written by train')
    parser.add_argument('--temperature', type=float, help='Temperature T')
    parser.add_argument('--epsilon', type=float, help='Perturbation magnitude')
    parser.add_argument('--target-tpr', type=float, default=settings.target_tpr,
                        help=f'TPR fixing the threshold (default: {settings.target_tpr})')
    parser.add_argument('--holdout-n', type=int, default=settings.holdout_n,
                        help=f'Samples per set held out for tuning (default: {settings.holdout_n})')
    if grid:
        parser.add_argument('--grid-t', help='Comma-separated temperatures')
        parser.add_argument('--grid-eps', help='Comma-separated perturbation magnitudes')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='ODIN out-of-distribution detection toolkit')
    subparsers = parser.add_subparsers(dest='command', required=True)

    train = subparsers.add_parser('train', help='Train the dense classifier')
    _add_common(train)
    _add_in_data(train)
    train.add_argument('--classes', help='Comma-separated class subset to train on')
    train.add_argument('--test-data', help='Optional test images for per-epoch accuracy')
    train.add_argument('--test-labels', help='IDX labels for --test-data')
    train.add_argument('--hidden-dims', help='Comma-separated hidden widths (default: %s)'
                       % ','.join(str(d) for d in settings.hidden_dims))
    train.add_argument('--optimizer', choices=VALID_OPTIMIZERS, default=settings.optimizer)
    train.add_argument('--epochs', type=int, default=settings.epochs)
    train.add_argument('--batch-size', type=int, default=settings.batch_size)
    train.add_argument('--learning-rate', type=float, help='Default 1e-3 for adam, 0.1 for sgd_nesterov')
    train.add_argument('--weight-decay', type=float, default=0.0)
    train.add_argument('--model-out', help='Weight file path (default: <out>/model.odn)')

    tune = subparsers.add_parser('tune', help='Grid-search T and eps on holdouts')
    _add_common(tune)
    _add_in_data(tune)
    _add_ood_data(tune)
    _add_detector(tune, grid=True)
    tune.add_argument('--tuning-sizes', help='Comma-separated OOD tuning-set sizes for the size curve')

    evaluate = subparsers.add_parser('eval', help='Detection metrics on the test split')
    _add_common(evaluate)
    _add_in_data(evaluate)
    _add_ood_data(evaluate)
    _add_detector(evaluate)
    evaluate.add_argument('--params', help='Tuned parameter record written by tune')
    evaluate.add_argument('--compare-baseline', action='store_true', default=False,
                          help='Also evaluate T=1, eps=0')
    evaluate.add_argument('--sensitivity-points', type=int, default=21,
                          help='Evenly spaced deltas in the threshold-sensitivity tables')

    sweep = subparsers.add_parser('sweep', help='Metrics over a (T, eps) grid, long format')
    _add_common(sweep)
    _add_in_data(sweep)
    _add_ood_data(sweep)
    _add_detector(sweep, grid=True)

    analyze = subparsers.add_parser('analyze', help='Logit statistics and diagnostics')
    _add_common(analyze)
    _add_in_data(analyze)
    _add_ood_data(analyze)
    _add_detector(analyze)
    analyze.add_argument('--bins', type=int, default=settings.n_bins)
    analyze.add_argument('--limit-temperatures', help='Ascending temperatures for the large-T limit')
    analyze.add_argument('--accuracy-tprs', help='TPR levels for the threshold-split accuracy')

    distance = subparsers.add_parser('distance', help='MMD and energy distance between datasets')
    _add_common(distance)
    _add_in_data(distance)
    _add_ood_data(distance)
    _add_detector(distance)
    distance.add_argument('--params', help='Tuned parameter record for the paired FPR')
    distance.add_argument('--max-samples', type=int, nargs='?', const=settings.max_distance_samples,
                          help='Compare seeded subsamples of a common size (bare flag: %d); '
                               'without it the sets must be the same size' % settings.max_distance_samples)

    gen = subparsers.add_parser('gen', help='Write a synthetic or transformed OOD tensor')
    _add_common(gen)
    gen.add_argument('--kind', choices=['gaussian', 'uniform', 'crop', 'resize'], required=False)
    gen.add_argument('--n', type=int)
    gen.add_argument('--height', type=int)
    gen.add_argument('--width', type=int)
    gen.add_argument('--source', help='Source tensor for crop / resize')
    gen.add_argument('--out-file', help='Tensor path (default: <out>/<kind>.otn)')

    parser._odin_subparsers = subparsers.choices
    return parser


def resolve_config(argv: Optional[List[str]] = None) -> RunConfig:
    """Parse argv with defaults < --config file < explicit flags"""
    parser = build_parser()
    preliminary, _ = parser.parse_known_args(argv)

    if preliminary.config:
        overrides = load_config_file(preliminary.config)
        subparser = parser._odin_subparsers[preliminary.command]
        known = {action.dest for action in subparser._actions}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ParameterError(f"Unknown keys in {preliminary.config}: {unknown}")
        subparser.set_defaults(**overrides)

    args = parser.parse_args(argv)
    values = {k: v for k, v in vars(args).items() if k not in COMMON_KEYS}
    values['log_level'] = args.log_level
    return RunConfig(command=args.command, seed=args.seed, output_format=args.format,
                     out_dir=args.out, values=values)


def _fail(error: str, message: str, code: int) -> int:
    logger.error(f"❌ {error}: {message}")
    sys.stderr.write(json.dumps({'error': error, 'message': message}) + '\n')
    return code


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code"""
    try:
        cfg = resolve_config(argv)
        logging.basicConfig(level=getattr(logging, str(cfg.values['log_level']).upper(), logging.INFO),
                            format=LOG_FORMAT, stream=sys.stderr)
        if not settings.validate_configuration():
            raise ParameterError("Invalid environment configuration (see log)")

        logger.info(f"🚀 Running '{cfg.command}' (seed {cfg.seed}) into {cfg.out_dir}")
        summary = COMMANDS[cfg.command](cfg)
        cfg.save()

        print(tabulate(summary, headers='keys', tablefmt='github', showindex=False, floatfmt='.6g'))
        return 0

    except OdinError as e:
        return _fail(e.category, str(e), e.exit_code)
    except Exception as e:
        logger.exception("Unexpected failure")
        return _fail('internal', f"{type(e).__name__}: {e}", 1)


if __name__ == "__main__":
    sys.exit(main())
