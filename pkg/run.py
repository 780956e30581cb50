#!/usr/bin/env python3
"""
Launcher for the ODIN toolkit
Run `python run.py <command> --help` for the options of each subcommand.
"""

import sys
import os

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
