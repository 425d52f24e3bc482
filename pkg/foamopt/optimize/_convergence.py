from collections import OrderedDict
from typing import Mapping, Sequence, Tuple


def volume_error(volume_fraction: float, target: float) -> float:
    """Relative excess ``(V / V_0 - v) / v`` of the volume constraint."""
    return (volume_fraction - target) / target


def window_change(values: Sequence[float]) -> float:
    """``|max(J) - mean(J)| / mean(J)`` over ``values``."""
    mean = sum(values) / len(values)
    if mean == 0.0:
        return 0.0 if max(values) == 0.0 else float("inf")
    return abs(max(values) - mean) / abs(mean)


def convergence_check(
    objective: Sequence[float],
    volume_fraction: Sequence[float],
    k: int,
    target: float,
    window: int = 5,
    volume_tol: float = 1e-4,
) -> float:
    """Relative objective change ``ch(k)`` over the last ``window`` iterations.

    ``ch`` is 1 for ``k < window``, keeps its previous value while the volume
    constraint is violated by more than ``volume_tol`` (relative), and is
    otherwise ``window_change`` of ``objective[k - window + 1 : k + 1]``.

    Args:
        objective, volume_fraction: per-iteration ``J`` and ``V / V_0``, index 0 first
        k: iteration index
        target: volume fraction bound ``v``
    """
    if k >= len(objective) or k >= len(volume_fraction):
        raise IndexError(f"trace holds {len(objective)} iterations, asked for k = {k}")
    ch = 1.0
    for i in range(window, k + 1):
        if volume_error(volume_fraction[i], target) > volume_tol:
            continue
        ch = window_change(objective[i - window + 1 : i + 1])
    return ch


class ConvergenceCriterion:
    """Stop condition of the optimization loop.

    Args:
        window: number of recent iterations compared
        volume_tol: relative violation of the volume constraint that freezes ``ch``
        tol: ``ch`` below which the run has converged
        max_iter: iteration cap
    """

    def __init__(self, window: int = 5, volume_tol: float = 1e-4, tol: float = 1e-3, max_iter: int = 200):
        if window < 1:
            raise ValueError(f"Argument window should be a positive integer, got {window}")
        if tol <= 0.0 or volume_tol < 0.0:
            raise ValueError("tol should be positive and volume_tol non-negative")
        if max_iter < 0:
            raise ValueError(f"max_iter should not be negative, got {max_iter}")
        self.window = int(window)
        self.volume_tol = float(volume_tol)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.objective = []
        self.ch = 1.0

    def __call__(self, k: int, objective: float, volume_fraction: float, target: float) -> Tuple[float, bool, str]:
        """Record iteration ``k`` and decide whether to stop.

        Returns:
            ``(ch, stop, reason)``
        """
        self.objective.append(float(objective))
        self.objective = self.objective[-self.window :]
        if k >= self.window and volume_error(volume_fraction, target) <= self.volume_tol:
            self.ch = window_change(self.objective)

        if k >= self.window and self.ch < self.tol:
            return self.ch, True, f"ch = {self.ch:.3e} below {self.tol:g}"
        if k >= self.max_iter:
            return self.ch, True, "max iterations"
        return self.ch, False, ""

    def state_dict(self) -> "OrderedDict[str, object]":
        return OrderedDict([("objective", list(self.objective)), ("ch", self.ch)])

    def load_state_dict(self, state_dict: Mapping) -> None:
        self.objective = [float(v) for v in state_dict["objective"]]
        self.ch = float(state_dict["ch"])
