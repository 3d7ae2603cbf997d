"""
Logging setup shared by the CLI and the services.
"""
import logging
import sys

_LEVELS = {
    'debug': logging.DEBUG,
    'info': logging.INFO,
    'warning': logging.WARNING,
    'error': logging.ERROR,
}


def setup_logging(level: str = 'info') -> None:
    """
    Configure the root logger once; later calls only change the level.

    Args:
        level: One of debug, info, warning, error (case-insensitive)
    """
    root = logging.getLogger()
    root.setLevel(_LEVELS.get(level.lower(), logging.INFO))

    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        root.addHandler(handler)

    # DegenerateInput and friends go through the same handler
    logging.captureWarnings(True)
