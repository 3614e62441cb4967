import json
import math
import tempfile

import rann_py


def test_gauss_legendre_integrates_cubic():
    nodes, weights = rann_py.gauss_legendre(-1.0, 1.0, 2)
    assert math.isclose(sum(weights), 2.0)
    assert abs(sum(w * x**3 for x, w in zip(nodes, weights))) < 1e-14


def test_basis_is_reproducible():
    a = rann_py.Basis(10, 2, 1.0, 7)
    b = rann_py.Basis(10, 2, 1.0, 7)
    assert len(a) == 10 and a.dim == 2
    assert a.weights == b.weights
    assert all(0.0 < v <= 1.0 for v in a.eval([0.1, -0.3]))


def test_slab_solve_matches_centre_value():
    problem = rann_py.Problem("slab-critical")
    assert problem.schedule() == [[0]]
    solution = problem.solve(seed=1, neurons=200)
    points, values = solution.scalar_flux(grid=11, angular_nodes=200)
    assert len(points) == 11 and len(values[0]) == 1
    centre = values[5][0]
    assert centre > 0.0
    assert values[0][0] < centre


def test_run_config_reports_benchmark():
    with tempfile.TemporaryDirectory() as out:
        passed, report = rann_py.run_config("solve", "[run]\nproblem = slab-critical\n", output=out)
        assert passed
        assert len(json.loads(report)["benchmark"]) == 5


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
    print("ok")
