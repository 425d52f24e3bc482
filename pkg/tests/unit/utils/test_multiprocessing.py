import pytest

from foamopt.utils import num_tasks
from foamopt.utils.multiprocessing import THREADS_ENV


def test_requested():
    assert num_tasks(1) == 1


def test_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")
    assert num_tasks() == 1


@pytest.mark.parametrize("n", [0, -2])
def test_non_positive(n):
    with pytest.raises(ValueError):
        num_tasks(n)
