#!/usr/bin/env python3
"""
Configuration settings for the ODIN toolkit
Defaults for seeds, detector tuning, training and output locations.
Every value can be overridden from the environment (or a .env file).
"""

import os
import logging
from typing import Dict, Any, List
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

# Default temperature search grid
DEFAULT_TEMPERATURES = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]
DEFAULT_EPSILON_MAX = 0.004
DEFAULT_EPSILON_STEPS = 21

VALID_OPTIMIZERS = ('adam', 'sgd_nesterov')
VALID_FORMATS = ('csv', 'json')
VALID_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def _parse_int_list(raw: str) -> List[int]:
    return [int(part) for part in raw.split(',') if part.strip()]


class Settings:
    """Configuration settings for the ODIN toolkit"""

    def __init__(self):
        # Reproducibility
        self.seed = int(os.getenv('ODIN_SEED', '0'))

        # Detector parameters
        self.target_tpr = float(os.getenv('ODIN_TARGET_TPR', '0.95'))
        self.holdout_n = int(os.getenv('ODIN_HOLDOUT_N', '1000'))  # OOD images held out for tuning
        self.temperatures = list(DEFAULT_TEMPERATURES)
        self.epsilon_max = float(os.getenv('ODIN_EPSILON_MAX', str(DEFAULT_EPSILON_MAX)))
        self.epsilon_steps = int(os.getenv('ODIN_EPSILON_STEPS', str(DEFAULT_EPSILON_STEPS)))

        # Training (three 256-wide hidden layers, 30 epochs of Adam)
        self.hidden_dims = _parse_int_list(os.getenv('ODIN_HIDDEN_DIMS', '256,256,256'))
        self.optimizer = os.getenv('ODIN_OPTIMIZER', 'adam').lower()
        self.epochs = int(os.getenv('ODIN_EPOCHS', '30'))
        self.batch_size = int(os.getenv('ODIN_BATCH_SIZE', '128'))
        self.learning_rate = float(os.getenv('ODIN_LEARNING_RATE', '1e-3'))
        self.momentum = float(os.getenv('ODIN_MOMENTUM', '0.9'))

        # Analysis / distances
        self.n_bins = int(os.getenv('ODIN_BINS', '20'))
        self.max_distance_samples = int(os.getenv('ODIN_MAX_DISTANCE_SAMPLES', '1000'))

        # Output
        self.output_dir = os.getenv('ODIN_OUTPUT_DIR', 'output')
        self.output_format = os.getenv('ODIN_OUTPUT_FORMAT', 'csv').lower()
        self.log_level = os.getenv('ODIN_LOG_LEVEL', 'INFO').upper()

    @property
    def epsilons(self) -> List[float]:
        """Evenly spaced perturbation magnitudes from 0 to epsilon_max inclusive"""
        if self.epsilon_steps == 1:
            return [0.0]
        step = self.epsilon_max / (self.epsilon_steps - 1)
        return [i * step for i in range(self.epsilon_steps - 1)] + [self.epsilon_max]

    def validate_configuration(self) -> bool:
        """Validate configuration settings"""
        issues = []

        if not 0.0 < self.target_tpr < 1.0:
            issues.append("Target TPR must lie strictly between 0 and 1")

        if self.holdout_n < 0:
            issues.append("Holdout size must be non-negative")

        if self.epsilon_max < 0 or self.epsilon_steps < 1:
            issues.append("Epsilon grid needs a non-negative maximum and at least one step")

        if any(dim <= 0 for dim in self.hidden_dims):
            issues.append("Hidden layer widths must be positive")

        if self.optimizer not in VALID_OPTIMIZERS:
            issues.append(f"Optimizer must be one of {VALID_OPTIMIZERS}")

        if self.epochs < 0 or self.batch_size <= 0:
            issues.append("Epochs must be non-negative and batch size positive")

        if self.learning_rate <= 0:
            issues.append("Learning rate must be positive")

        if not 0.0 <= self.momentum < 1.0:
            issues.append("Momentum must lie in [0, 1)")

        if self.n_bins < 1:
            issues.append("Bin count must be at least 1")

        if self.max_distance_samples < 2:
            issues.append("Distance sample cap must be at least 2")

        if self.output_format not in VALID_FORMATS:
            issues.append(f"Output format must be one of {VALID_FORMATS}")

        if self.log_level not in VALID_LOG_LEVELS:
            issues.append(f"Log level must be one of {VALID_LOG_LEVELS}")

        if issues:
            logger.error("⚠️ Configuration issues:")
            for issue in issues:
                logger.error(f"  - {issue}")
            return False

        return True

    def get_summary(self) -> Dict[str, Any]:
        """Get configuration summary for logging"""
        return {
            'seed': self.seed,
            'target_tpr': self.target_tpr,
            'holdout_n': self.holdout_n,
            'temperatures': self.temperatures,
            'epsilon_grid': f"{self.epsilon_steps} steps in [0, {self.epsilon_max}]",
            'hidden_dims': self.hidden_dims,
            'optimizer': self.optimizer,
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'learning_rate': self.learning_rate,
            'n_bins': self.n_bins,
            'output_dir': self.output_dir,
            'output_format': self.output_format,
        }

# Global settings instance
settings = Settings()
