"""
Atomic file output and format-by-suffix loading of run artifacts.
"""
from typing import Union, List, Tuple
import contextlib
import contextvars
import json
import logging
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import yaml


# pending moves of the innermost ``atomic_write_group``
_MOVE_SET = contextvars.ContextVar("_move_set", default=None)

_BINARY = {"json": False, "yaml": False, "npz": True, "text": False}


def _delete_files_if_exist(paths):
    for f in paths:
        Path(f).unlink(missing_ok=True)


def _process_moves(moves: List[Tuple[Path, Path]]):
    """copy (possibly across filesystems) to a temp name next to the target; then atomic rename"""
    try:
        for from_name, to_name in moves:
            tmp_path = to_name.parent / (f".tmp-{to_name.name}~")
            shutil.move(from_name, tmp_path)
            tmp_path.rename(to_name)
    finally:
        _delete_files_if_exist([m[0] for m in moves])


def _submit_move(from_name: Path, to_name: Path):
    if _MOVE_SET.get() is None:
        _process_moves([(from_name, to_name)])
    else:
        _MOVE_SET.get().append((from_name, to_name))


@contextlib.contextmanager
def atomic_write_group():
    """Defer all ``atomic_write`` renames inside the block to its end.

    Either every file of the group shows up or, if the block raises, none does.
    """
    if _MOVE_SET.get() is not None:
        # nested groups are folded into the outermost one
        yield
        return
    token = _MOVE_SET.set(list())
    try:
        yield
    except:  # noqa
        _delete_files_if_exist([m[0] for m in _MOVE_SET.get()])
        _MOVE_SET.reset(token)
        raise
    moves = _MOVE_SET.get()
    _MOVE_SET.reset(token)
    _process_moves(moves)


@contextlib.contextmanager
def atomic_write(
    filename: Union[Path, str, List[Union[Path, str]]],
    binary: bool = False,
):
    aslist: bool = True
    if not isinstance(filename, list):
        aslist = False
        filename = [filename]
    filename = [Path(f) for f in filename]

    with contextlib.ExitStack() as stack:
        files = [
            stack.enter_context(
                tempfile.NamedTemporaryFile(
                    mode="w" + ("b" if binary else ""), delete=False
                )
            )
            for _ in filename
        ]
        try:
            if not aslist:
                yield files[0]
            else:
                yield files
        except:  # noqa
            # ^ noqa cause we want to delete them no matter what if there was a failure
            _delete_files_if_exist([Path(f.name) for f in files])
            raise

    for tp, fname in zip(files, filename):
        _submit_move(Path(tp.name), fname)


def save_file(
    item,
    supported_formats: dict,
    filename: str,
    enforced_format: str = None,
):
    """
    Save ``item`` atomically as json, yaml, npz (dict of arrays) or text.
    """

    path = os.path.dirname(os.path.realpath(filename))
    if not os.path.isdir(path):
        logging.debug(f"save_file make dirs {path}")
        os.makedirs(path, exist_ok=True)

    format, filename = adjust_format_name(
        supported_formats=supported_formats,
        filename=str(filename),
        enforced_format=enforced_format,
    )

    if format not in _BINARY:
        raise NotImplementedError(
            f"Output format {format} not supported:"
            f" try from {supported_formats.keys()}"
        )

    with atomic_write(filename, binary=_BINARY[format]) as write_to:
        if format == "json":
            json.dump(item, write_to, indent=1)
        elif format == "yaml":
            yaml.dump(item, write_to)
        elif format == "npz":
            np.savez(write_to, **item)
        else:
            write_to.write(item)

    return filename


def load_file(supported_formats: dict, filename: str, enforced_format: str = None):
    """
    Load a json, yaml, npz or text file; the format is inferred from the suffix.
    """
    filename = str(filename)
    if enforced_format is None:
        format = match_suffix(supported_formats=supported_formats, filename=filename)
    else:
        format = enforced_format

    if not os.path.isfile(filename):
        abs_path = str(Path(filename).resolve())
        raise OSError(f"file {filename} at {abs_path} is not found")

    if format == "json":
        with open(filename) as fin:
            return json.load(fin)
    elif format == "yaml":
        with open(filename) as fin:
            return yaml.load(fin, Loader=yaml.SafeLoader)
    elif format == "npz":
        with np.load(filename, allow_pickle=False) as data:
            return {k: data[k] for k in data.files}
    elif format == "text":
        with open(filename) as fin:
            return fin.read()
    else:
        raise NotImplementedError(
            f"Input format not supported:" f" try from {supported_formats.keys()}"
        )


def adjust_format_name(
    supported_formats: dict, filename: str, enforced_format: str = None
):
    """
    Recognize whether proper suffix is added to the filename.
    If not, add it and return the formatted file name

    Args:

        supported_formats (dict): list of supported formats and corresponding suffix
        filename (str): initial filename
        enforced_format (str): default format

    Returns:

        newformat (str): the chosen format
        newname (str): the adjusted filename

    """
    if enforced_format is None:
        newformat = match_suffix(supported_formats=supported_formats, filename=filename)
    else:
        newformat = enforced_format

    newname = f"{filename}"

    suffix = supported_formats[newformat]
    if not isinstance(suffix, (set, list, tuple)):
        suffix = [suffix]

    if len(suffix) > 0 and not any(filename.endswith(f".{suf}") for suf in suffix):
        newname += f".{suffix[0]}"

    return newformat, newname


def match_suffix(supported_formats: dict, filename: str):
    """
    Recognize format based on suffix; falls back to the first supported format.
    """
    for form, suffs in supported_formats.items():
        if not isinstance(suffs, (set, list, tuple)):
            suffs = [suffs]
        for suff in suffs:
            if filename.lower().endswith(f".{suff}"):
                return form

    return list(supported_formats.keys())[0]
