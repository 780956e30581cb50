# Command-line front end
from .main import build_parser, main, resolve_config
from .run_config import RunConfig

__all__ = ['build_parser', 'main', 'resolve_config', 'RunConfig']
