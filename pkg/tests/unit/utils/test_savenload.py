import numpy as np
import pytest

from foamopt.utils import atomic_write, atomic_write_group, load_file, save_file
from foamopt.utils.savenload import adjust_format_name, match_suffix

FORMATS = {"json": "json", "yaml": ("yml", "yaml"), "npz": "npz", "text": "txt"}


@pytest.mark.parametrize("suffix", ["json", "yaml", "yml"])
def test_save_load_mapping(tmp_path, suffix):
    item = {"n_seeds": 3, "radii": [0.1, 0.2]}
    filename = save_file(item, FORMATS, str(tmp_path / f"item.{suffix}"))
    assert load_file(FORMATS, filename) == item


def test_save_load_npz(tmp_path):
    item = {"values": np.arange(6.0).reshape(2, 3), "origin": np.zeros(2)}
    filename = save_file(item, FORMATS, str(tmp_path / "grid.npz"))
    loaded = load_file(FORMATS, filename)
    assert np.array_equal(loaded["values"], item["values"])


def test_save_creates_directories(tmp_path):
    filename = save_file("hello", FORMATS, str(tmp_path / "a" / "b" / "note.txt"))
    assert load_file(FORMATS, filename) == "hello"


def test_load_missing(tmp_path):
    with pytest.raises(OSError):
        load_file(FORMATS, str(tmp_path / "missing.json"))


def test_format_names():
    assert match_suffix(FORMATS, "a.YML") == "yaml"
    assert match_suffix(FORMATS, "a.unknown") == "json"
    assert adjust_format_name(FORMATS, "seeds", enforced_format="json") == ("json", "seeds.json")
    assert adjust_format_name(FORMATS, "c.yml") == ("yaml", "c.yml")


def test_atomic_write_failure_leaves_nothing(tmp_path):
    target = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as f:
            f.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()


def test_atomic_write_group(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    with atomic_write_group():
        with atomic_write(a) as f:
            f.write("a")
        assert not a.exists()
        with atomic_write(b) as f:
            f.write("b")
    assert a.read_text() == "a"
    assert b.read_text() == "b"


def test_atomic_write_group_failure(tmp_path):
    a = tmp_path / "a.txt"
    with pytest.raises(KeyError):
        with atomic_write_group():
            with atomic_write(a) as f:
                f.write("a")
            raise KeyError("boom")
    assert not a.exists()
