"""Smoke test for the basin_uq extension module.

Build and install with `maturin develop -m crates/python/Cargo.toml`, or
copy `target/release/libbasin_uq.so` to `basin_uq.so` on PYTHONPATH.
"""

import math
import pathlib
import sys
import tempfile

import basin_uq

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "crates" / "core" / "scenarios"


def check(cond, msg):
    if not cond:
        sys.exit(f"FAIL: {msg}")
    print(f"ok: {msg}")


def main():
    sc = basin_uq.Scenario.load(SCENARIOS / "multilayer.json")
    check(sc.parameter_names == ["beta_sd", "beta_sh", "k2_sh"], "multilayer has three uncertain parameters")

    mid = [(lo + hi) / 2 for lo, hi in sc.bounds]
    prof = basin_uq.simulate(sc, mid)
    check(len(prof.interfaces) == sc.layer_count + 1, "one interface per layer boundary")
    check(all(a > b for a, b in zip(prof.interfaces, prof.interfaces[1:])), "interfaces are ordered top down")
    check(all(0 < p < 1 for p in prof.phi), "porosity lies in (0, 1)")
    check(set(prof.material) == {"sand", "shale"}, "both materials present")

    grid = basin_uq.SparseGrid(3, 12, weights=[4, 4, 1])
    check(len(grid) == 133, "anisotropic grid has 133 points")
    check(math.isclose(sum(grid.weights), 1.0, abs_tol=1e-12), "quadrature weights sum to one")

    bounds = [(0.0, 2.0), (-1.0, 1.0)]
    g2 = basin_uq.SparseGrid(2, 4)
    pts = basin_uq.collocation_points(g2, bounds)
    vals = [[x * x + y] for x, y in pts]
    s = basin_uq.Surrogate.from_values(g2, bounds, ["f"], vals)
    check(abs(s([1.5, 0.25])[0] - 2.5) < 1e-10, "quadratic reproduced exactly")
    check(abs(s.mean()[0] - 4.0 / 3.0) < 1e-12, "mean of x^2 + y")
    first, total = s.sobol()
    check(abs(sum(first[0]) - 1.0) < 1e-10, "additive function has no interactions")

    with tempfile.TemporaryDirectory() as tmp:
        m = basin_uq.run(
            "build-surrogate", SCENARIOS / "multilayer.json", pathlib.Path(tmp) / "s", w=[4.0]
        )
        check(m["evaluations"]["collocation_points"] > 0, "build-surrogate reports its solves")
        bundle = basin_uq.AlignedSurrogate.load(pathlib.Path(tmp) / "s" / "surrogate.json")
        psi = bundle.interfaces(mid)
        check(abs(psi[0] - prof.interfaces[0]) < 1e-6, "seafloor matches the full model")
        z = (psi[1] + psi[2]) / 2
        check(bundle.material(z, mid) in {"sand", "shale"}, "classification inside the column")
        phi = bundle.predict("porosity", z, mid)
        check(0 < phi < 1, "aligned porosity prediction")

    check(basin_uq.ks_distance([0.0, 1.0], [0.0, 1.0]) == 0.0, "identical samples have zero distance")
    try:
        basin_uq.SparseGrid(2, 3, knots="leja")
    except ValueError:
        print("ok: unknown knot family raises ValueError")
    else:
        sys.exit("FAIL: unknown knot family accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
