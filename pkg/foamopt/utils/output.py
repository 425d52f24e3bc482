import inspect
import logging
import shutil
import sys

from logging import FileHandler, StreamHandler
from os import makedirs
from os.path import isfile, isdir
from typing import Optional


class Output:
    """Run directory of one optimization and the loggers writing into it.

    Args:
        root: the base folder where run directories are created
        run_name: name of the run directory under ``root``
        logfile (optional): if given, a file logger (propagating to the root one) writes there
        append (optional): if True, an existing run directory is reused (restart)
        screen (optional): if True, the root logger prints to screen
        verbose (optional): logging level name
    """

    def __init__(
        self,
        root: str,
        run_name: str,
        logfile: Optional[str] = None,
        append: bool = False,
        screen: bool = False,
        verbose: str = "info",
    ):

        logger = logging.getLogger("")
        logger.setLevel(getattr(logging, verbose.upper()))

        if len(logger.handlers) == 0 and (screen or verbose.lower() == "debug"):
            logger.addHandler(logging.StreamHandler(sys.stdout))

        logging.debug("* Initialize Output")

        self.append = append
        self.screen = screen
        self.verbose = verbose

        self.root = set_if_none(root, ".")
        self.run_name = run_name
        self.workdir = f"{self.root}/{self.run_name}"

        if "/" in run_name:
            raise ValueError(f"run_name `{run_name}` must not contain `/`")

        if isdir(self.workdir) and not append:
            raise RuntimeError(
                f"run {self.run_name} already exists under {self.root}; "
                "pick another run_name or set append: true to resume it"
            )

        # a directory created by this instance can be removed again on early failure
        self.fresh = not isdir(self.workdir)
        makedirs(self.workdir, exist_ok=True)

        self._loggers = []
        self.logfile = logfile
        if logfile is not None:
            self.logfile = self.open_logfile(
                file_name=logfile, screen=screen, propagate=True
            )
            logging.debug(f"  ...logfile {self.logfile} to")

    def generate_file(self, file_name: str, exist_ok: bool = False):
        """Path of ``file_name`` inside the run directory (relative names only)."""

        if file_name.startswith("/"):
            raise ValueError("filename should be a relative path file name")
        file_name = f"{self.workdir}/{file_name}"

        if isfile(file_name) and not (self.append or exist_ok):
            raise RuntimeError(
                f"Tried to create file `{file_name}` but it already exists and this run is not a restart"
            )

        logging.debug(f"  ...generate file name {file_name}")
        return file_name

    def open_logfile(
        self,
        file_name: str,
        screen: bool = False,
        propagate: bool = False,
    ):
        """Attach a ``%(message)s`` file handler to the logger named after the file.

        Non-propagating loggers are used for machine-readable logs such as
        ``convergence.csv``.

        Returns:
            the full path, which is also the logger name
        """

        file_name = self.generate_file(file_name)

        logger = logging.getLogger(file_name)
        logger.propagate = propagate
        logger.setLevel(getattr(logging, self.verbose.upper()))

        if len(logger.handlers) == 0:

            formatter = logging.Formatter("%(message)s")
            fh = FileHandler(file_name, mode="a" if self.append else "w")
            fh.setLevel(logging.DEBUG)
            fh.setFormatter(formatter)
            logger.addHandler(fh)
            if screen:
                ch = StreamHandler(sys.stdout)
                ch.setLevel(logging.DEBUG)
                ch.setFormatter(formatter)
                logger.addHandler(ch)
        self._loggers.append(file_name)

        logging.debug(f"  ...open log file {file_name}")

        return file_name

    def close(self):
        """Flush and detach the file handlers opened by this run."""
        for name in self._loggers:
            logger = logging.getLogger(name)
            for handler in list(logger.handlers):
                handler.close()
                logger.removeHandler(handler)
        self._loggers = []

    def cleanup(self):
        """Remove the run directory if this instance created it."""
        self.close()
        if self.fresh and isdir(self.workdir):
            logging.debug(f"  ...remove partial run directory {self.workdir}")
            shutil.rmtree(self.workdir, ignore_errors=True)

    @classmethod
    def get_output(cls, kwargs: dict = {}):

        d = inspect.signature(cls.__init__)
        _kwargs = {
            key: kwargs[key]
            for key in list(d.parameters.keys())
            if key not in ["self", "kwargs"] and key in kwargs
        }
        return cls(**_kwargs)


def set_if_none(x, y):
    return y if x is None else x

