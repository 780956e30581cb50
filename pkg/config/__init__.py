# Configuration Module
"""
Configuration and settings for the ODIN toolkit

Available modules:
- settings: Defaults for seeds, tuning grids, training and outputs
"""

__all__ = ['settings']
