import numpy as np
import pytest

from foamopt.optimize import TRACE_FIELDS, OptProblem, OptTrace, build_problem, cell_length
from foamopt.voronoi import SeedSet


@pytest.fixture()
def problem():
    return OptProblem(3, 2, [0.0, 0.0], [2.0, 1.0], r_lo=0.01, r_hi=0.11)


@pytest.fixture()
def seeds():
    return SeedSet([[0.5, 0.5], [1.0, 0.25], [1.5, 0.75]], [0.02, 0.06, 0.11], [0.0, 0.0], [2.0, 1.0])


class TestProblem:
    def test_variables(self, problem):
        assert problem.n_variables == 9
        assert problem.variables.tolist() == list(range(9))
        frozen = OptProblem(3, 2, [0.0, 0.0], [2.0, 1.0], 0.01, 0.11, optimize_radii=False)
        assert frozen.variables.tolist() == list(range(6))
        radii_only = OptProblem(3, 2, [0.0, 0.0], [2.0, 1.0], 0.01, 0.11, optimize_positions=False)
        assert radii_only.variables.tolist() == [6, 7, 8]

    def test_encode(self, problem, seeds):
        x = problem.encode(seeds)
        assert np.allclose(x, [0.25, 0.5, 0.5, 0.25, 0.75, 0.75, 0.1, 0.5, 1.0])
        back = problem.decode(x, seeds)
        assert np.allclose(back.positions, seeds.positions)
        assert np.allclose(back.radii, seeds.radii)

    def test_decode_clips(self, problem, seeds):
        back = problem.decode(np.full(9, 2.0), seeds)
        assert np.allclose(back.positions, [[2.0, 1.0]] * 3)
        assert np.allclose(back.radii, 0.11)

    def test_frozen_radii(self, seeds):
        problem = OptProblem(3, 2, [0.0, 0.0], [2.0, 1.0], 0.01, 0.11, optimize_radii=False)
        back = problem.decode(np.zeros(6), seeds)
        assert np.allclose(back.positions, 0.0)
        assert np.allclose(back.radii, seeds.radii)

    def test_scale_gradient(self, problem):
        scaled = problem.scale_gradient(np.ones(9))
        assert np.allclose(scaled, [2.0, 1.0] * 3 + [0.1] * 3)

    def test_clamp(self, problem):
        wild = SeedSet([[-1.0, 0.5], [1.0, 3.0], [1.5, 0.5]], [0.001, 0.05, 1.0])
        clamped = problem.clamp(wild)
        assert np.allclose(clamped.positions, [[0.0, 0.5], [1.0, 1.0], [1.5, 0.5]])
        assert np.allclose(clamped.radii, [0.01, 0.05, 0.11])

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_seeds=0),
            dict(bbox_lo=[0.0]),
            dict(bbox_lo=[3.0, 0.0]),
            dict(r_lo=0.0),
            dict(r_lo=0.2),
            dict(w=1.5),
            dict(v=0.0),
            dict(v=1.1),
            dict(optimize_positions=False, optimize_radii=False),
        ],
    )
    def test_invalid(self, kwargs):
        args = dict(n_seeds=3, dim=2, bbox_lo=[0.0, 0.0], bbox_hi=[2.0, 1.0], r_lo=0.01, r_hi=0.11)
        args.update(kwargs)
        with pytest.raises(ValueError):
            OptProblem(**args)


def test_build_problem(unit_square):
    problem = build_problem(unit_square, n_seeds=16, l_a=0.05, V0=1.0, v=0.25)
    margin = 0.25 * np.sqrt(2.0)
    assert np.allclose(problem.bbox_lo, -margin)
    assert np.allclose(problem.bbox_hi, 1.0 + margin)
    assert problem.r_lo == pytest.approx(0.1)
    # l_cell / 4 = 0.0625 is below 2 r_lo
    assert problem.r_hi == pytest.approx(0.2)
    assert problem.v == 0.25
    assert cell_length(1.0, 16, 2) == pytest.approx(0.25)
    problem = build_problem(unit_square, n_seeds=4, l_a=0.01, V0=1.0)
    assert problem.r_hi == pytest.approx(0.125)


class TestTrace:
    def record(self, k, J):
        return dict(iter=k, C=2.0 * J, S=0.1, J=J, V_frac=0.3, ch=1.0, seconds=0.5, flagged=0)

    def test_append(self):
        trace = OptTrace()
        for k, J in enumerate([3.0, 2.0, 1.0]):
            trace.append(**self.record(k, J))
        assert len(trace) == 3
        assert np.allclose(trace.column("C"), [6.0, 4.0, 2.0])
        assert list(trace[0]) == TRACE_FIELDS

    def test_missing_field(self):
        record = self.record(0, 1.0)
        del record["ch"]
        with pytest.raises(KeyError):
            OptTrace().append(**record)

    def test_row(self):
        assert OptTrace.header().split(", ") == TRACE_FIELDS
        row = OptTrace.row(self.record(4, 1.5))
        assert row.split(", ")[0] == "4"
        assert len(row.split(", ")) == len(TRACE_FIELDS)

    def test_sparkline(self):
        trace = OptTrace()
        assert trace.sparkline() == ""
        for k in range(100):
            trace.append(**self.record(k, 1.0 / (k + 1)))
        line = trace.sparkline(width=40)
        assert len(line) == 40
        assert line[0] == "@" and line[-1] == " "

    def test_state_dict(self):
        trace = OptTrace([self.record(0, 1.0)])
        again = OptTrace()
        again.load_state_dict(trace.state_dict())
        assert again.records == trace.records
