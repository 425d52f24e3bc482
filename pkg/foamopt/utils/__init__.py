from .auto_init import instantiate
from .savenload import (
    save_file,
    load_file,
    atomic_write,
    atomic_write_group,
)
from .config import Config
from .output import Output
from .multiprocessing import num_tasks

__all__ = [
    instantiate,
    save_file,
    load_file,
    atomic_write,
    atomic_write_group,
    Config,
    Output,
    num_tasks,
]
