import logging
import sys
from typing import Optional


def set_up_script_logger(logfile: Optional[str] = None, verbose: str = "INFO"):
    """Route the root logger to stderr (and ``logfile``) at level ``verbose``.

    Library modules only log; command line entry points call this once.
    """
    level = getattr(logging, str(verbose).upper(), None)
    if not isinstance(level, int):
        raise ValueError(f"Unknown logging level `{verbose}`")
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
    formatter = logging.Formatter("%(message)s")
    screen = logging.StreamHandler(sys.stderr)
    screen.setLevel(level)
    screen.setFormatter(formatter)
    root_logger.addHandler(screen)
    if logfile is not None:
        handler = logging.FileHandler(logfile, mode="w")
        handler.setLevel(level)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)
    return root_logger
