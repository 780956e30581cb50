#!/usr/bin/env python3
"""
Resolved command configuration and output writers

Precedence: settings defaults (env / .env) < --config JSON file < explicit flags.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.utils.errors import DataError, FormatError, ParameterError

logger = logging.getLogger(__name__)


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON object of flag values; keys may use dashes or underscores"""
    if not os.path.exists(path):
        raise DataError(f"Config file not found: {path}")
    try:
        with open(path, 'r') as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e.msg})", offset=e.pos)
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: expected a JSON object of flag values")
    return {key.lstrip('-').replace('-', '_'): value for key, value in raw.items()}


def parse_float_list(value: Union[str, Sequence[float], None]) -> Optional[List[float]]:
    """'1,2,5' or [1, 2, 5] -> [1.0, 2.0, 5.0]"""
    if value is None:
        return None
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(',') if part.strip()]
    else:
        parts = list(value)
    try:
        return [float(part) for part in parts]
    except (TypeError, ValueError):
        raise ParameterError(f"Expected a comma-separated list of numbers, got {value!r}")


def parse_int_list(value: Union[str, Sequence[int], None]) -> Optional[List[int]]:
    floats = parse_float_list(value)
    if floats is None:
        return None
    if any(v != int(v) for v in floats):
        raise ParameterError(f"Expected a comma-separated list of integers, got {value!r}")
    return [int(v) for v in floats]


TRUE_WORDS = ('true', 'yes', '1', 'on')
FALSE_WORDS = ('false', 'no', '0', 'off', '')


def parse_bool(value: Any, name: str) -> bool:
    """JSON booleans pass through; config strings must be a recognised yes/no word"""
    if value is None:
        return False
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, str):
        word = value.strip().lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
    raise ParameterError(f"--{name.replace('_', '-')} expects true or false, got {value!r}")


@dataclass
class RunConfig:
    """Everything one command invocation needs, after precedence is applied"""
    command: str
    seed: int
    output_format: str
    out_dir: str
    values: Dict[str, Any] = field(default_factory=dict)

    def get(self, name: str, default: Any = None) -> Any:
        value = self.values.get(name)
        return default if value is None else value

    def to_dict(self) -> Dict[str, Any]:
        return {'command': self.command, 'seed': self.seed, 'format': self.output_format,
                'out': self.out_dir, **{k: v for k, v in sorted(self.values.items())}}

    def output_path(self, filename: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, filename)

    def save(self) -> str:
        path = self.output_path('run_config.json')
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2, default=_json_default)
        return path

    def write_table(self, frame: pd.DataFrame, stem: str) -> str:
        """Write a table as <stem>.csv or <stem>.json per the output format"""
        path = self.output_path(f"{stem}.{self.output_format}")
        if self.output_format == 'csv':
            frame.to_csv(path, index=False)
        else:
            # NaN becomes null; floats keep every bit
            records = frame.astype(object).where(frame.notna(), None).to_dict(orient='records')
            with open(path, 'w') as f:
                json.dump(records, f, indent=2, default=_json_default)
        logger.info(f"💾 Wrote {len(frame)} rows to {path}")
        return path

    def write_record(self, record: Dict[str, Any], stem: str) -> str:
        path = self.output_path(f"{stem}.json")
        with open(path, 'w') as f:
            json.dump(record, f, indent=2, default=_json_default)
        return path


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
