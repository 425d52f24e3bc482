import os
from typing import Optional

_has_sched_getaffinity: bool = hasattr(os, "sched_getaffinity")

THREADS_ENV = "FOAMOPT_THREADS"


def num_tasks(requested: Optional[int] = None) -> int:
    """Number of worker threads: ``requested``, else ``$FOAMOPT_THREADS``, else the allowed cores."""
    # sched_getaffinity gives number of _allowed_ cores
    # this is correct for SLURM jobs, for example
    num_avail: int
    if _has_sched_getaffinity:
        num_avail = len(os.sched_getaffinity(0))
    else:
        # on macOS sched_getaffinity() is not available
        num_avail = os.cpu_count() or 1
    if requested is None:
        requested = os.environ.get(THREADS_ENV, num_avail if _has_sched_getaffinity else 1)
    n_proc = int(requested)
    if n_proc <= 0:
        raise ValueError(f"Number of threads must be positive, got {n_proc}")
    return min(n_proc, num_avail)
