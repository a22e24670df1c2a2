"""Smoke test for the pyanisum extension module.

Build and install first, e.g.:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pyanisum-*.whl
"""

import json
import math

import pyanisum as pa


def main():
    l2 = pa.Space(2, 2.0)
    basis = [[1.0, 0.0], [0.0, 1.0]]

    strong = pa.strong_norm(l2, basis, 2.0)
    assert strong.bound == "Exact"
    assert abs(strong.value - math.sqrt(2.0)) < 1e-12

    aniso = pa.aniso_norm(l2, basis, 2.0, 1.0, 2.0)
    assert aniso.bound == "Lower" and aniso.converged
    assert abs(aniso.value - math.sqrt(2.0)) < 1e-6

    weak = pa.weak_norm(l2, basis, 2.0)
    assert weak.value <= aniso.value + 1e-9

    lower, upper = pa.mixed_norm(l2, basis, 2.0, 1.0)
    assert lower.value <= upper.value * (1 + 1e-9)

    try:
        pa.aniso_norm(l2, basis, 2.0, 1.0, 3.0)
    except pa.RegimeError as err:
        assert "s < r" in str(err)
    else:
        raise AssertionError("s < r must be rejected")

    linf = pa.Space(3, float("inf"))
    assert linf.norm([1.0, -3.0, 2.0]) == 3.0
    assert linf.dual_norm([1.0, -3.0, 2.0]) == 6.0

    identity = pa.Operator(l2, l2, basis)
    assert abs(identity.norm().value - 1.0) < 1e-12
    pi2 = pa.pi_qp(identity, 2.0, 2.0, restarts=8)
    assert abs(pi2.value - math.sqrt(2.0)) < 0.02 * math.sqrt(2.0)

    scalar = pa.Space(1, 2.0)
    one = pa.Operator(scalar, scalar, [[1.0]])
    dom = pa.domination_weak(one, 2.0, 1.0, 2.0)
    assert abs(dom.c - 1.0) < 1e-9 and dom.train_residual <= 1e-12
    assert abs(sum(dom.weights) - 1.0) < 1e-12

    assert "unit-basis" in pa.check_ids()
    report = json.loads(pa.run_check("unit-basis", seed=7, instances=4))
    assert report["status"] == "pass"
    suite = json.loads(pa.run_suite(seed=7, checks=["scalar-collapse"]))
    assert suite["counts"]["pass"] == 1

    print("pyanisum smoke test passed")


if __name__ == "__main__":
    main()
