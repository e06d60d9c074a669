"""Smoke test for the qecheck Python bindings.

Build and install first, e.g. `maturin build --release` in crates/python
followed by `pip install` of the wheel, then run `python python/smoke_test.py`.
"""

import json
import math

import qecheck_py as qc


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    sphere = qc.Instance(["th", "ph"], [[0.2, 2.9], [0.0, 6.0]], ["1", "0", "sin(th)^2"], lambda_=1.0)
    for p in sphere.sample(20):
        close(sphere.scalar_curvature(p), 2.0, 1e-10)
    ric = sphere.curvature([1.0, 0.5])["ricci"]["data"]
    close(ric[3], math.sin(1.0) ** 2, 1e-12)

    cosh = qc.Instance(["x"], [[-2, 2]], ["1"], potential=("U", "cosh(x)"), m=2, lambda_=-2.0, label="cosh")
    pts = cosh.sample(50)
    assert max(abs(v) for p in pts for v in cosh.qe_residual(p)) <= 1e-9
    for name in ["E4", "E5", "E9", "TRACE"]:
        assert cosh.check_identity(name, pts, 1e-7)["pass"], name
    mu = cosh.mu_constancy(pts, 1e-8)
    assert mu["pass"]
    close(mu["mean"], -1.0, 1e-10)
    lift = cosh.warp_lift()
    assert lift.dim == 3
    assert lift.einstein(-2.0, lift.sample(30), 1e-7)["pass"]

    try:
        qc.Instance(["x"], [[0, 1]], ["1"], potential=("U", "x"), m="inf")
    except ValueError as e:
        assert "finite m" in str(e)
    else:
        raise AssertionError("U-form with infinite m accepted")

    sol = qc.solve_ode(
        {"kind": "LINE", "n": 1, "m": 2.0, "lambda": -2.0, "rho": 0.0, "form": "U"},
        {"r0": -2.0, "phi": 1.0, "dphi": 0.0, "w": math.cosh(2), "dw": -math.sinh(2)},
        2.0,
    )
    assert sol["status"]["kind"] == "reached_end", sol["status"]
    assert max(abs(w - math.cosh(r)) for r, w in zip(sol["r"], sol["w"])) <= 1e-8

    shot = qc.shoot_closed_surface(2.0, 1.0, samples=11)
    assert shot["trivial_defect"] <= 1e-6 and shot["min_nontrivial_defect"] > 1e-2

    names = qc.catalog_names()
    assert "cosh_line" in names and len(names) >= 8
    report = qc.run(qc.catalog_config("cosh_line"))
    assert report["pass"] and report["version"] == qc.ENGINE_VERSION
    broken = qc.run(qc.catalog_config("flat_trivial_broken"))
    assert not broken["pass"]
    cfg = json.loads(qc.catalog_config("product_kahler_qe"))
    assert qc.run(json.dumps(cfg))["pass"]

    print("smoke test passed:", qc.ENGINE_VERSION, len(names), "fixtures")


if __name__ == "__main__":
    main()
