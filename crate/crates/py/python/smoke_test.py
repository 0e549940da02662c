"""Smoke test for the pymodap extension module."""

import math

import pymodap


def main():
    sys = pymodap.generate_model_problem(10)
    assert len(sys) == 22 and sys.dim == 10

    x = [0.0] * 10
    d, h = sys.phi(x)
    assert h == 1
    assert abs(math.sqrt(sum(v * v for v in sys.psi(x, 0.5))) - 0.5) < 1e-12
    direction, violated = sys.positive_slice(21, x)
    assert violated and len(direction) == 10

    out = pymodap.solve(sys)
    assert out.converged, out
    assert sys.eps_membership(out.solution)

    ap = pymodap.solve(sys, variant="ap", rate=1.0, max_iterations=2000)
    assert ap.status == "BudgetExhausted"
    modap = pymodap.solve(sys, variant="modap", rate=1.0, max_iterations=2000, workers=4)
    assert modap.converged

    seq = pymodap.solve(sys, initial_point=[300.0] * 10, record_iterates=True)
    par = pymodap.solve(sys, initial_point=[300.0] * 10, record_iterates=True, workers=3)
    assert seq.iterates == par.iterates

    rnd, witness = pymodap.random_feasible_system(5, 12, seed=4)
    assert rnd.eps_membership(witness, 1e-12)

    report = pymodap.cost_report(2, 4)
    assert report["c_map"] == 44 and report["c_p"] == 110
    k = pymodap.k_max(100, 200, tau_op=1.0, tau_tr=1.0, latency=1.0)
    assert abs(k - 19.92) < 0.01

    try:
        pymodap.InequalitySystem([[0.0, 0.0]], [1.0])
    except pymodap.ModapError as e:
        assert "row 0" in str(e)
    else:
        raise AssertionError("zero row accepted")

    print("pymodap smoke test passed")


if __name__ == "__main__":
    main()
