"""Smoke test for the fbpool extension.

Build with `cargo build --release -p fbpool-py` and copy
target/release/libfbpool.so next to this file as fbpool.so.
"""
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fbpool  # noqa: E402


def main():
    s = fbpool.slice_minimize(2.0)
    assert s.energy == 10.0 and s.a == 0.0
    s = fbpool.slice_minimize(0.5)
    assert (s.a, s.b, s.energy) == (-0.5, 0.5, 2.0)
    assert s.eval(0.0) == 0.0 and s.eval(1.0) == 0.5
    assert fbpool.slice_oracle(0.5, 400).energy >= s.energy

    u, summary = fbpool.solve(2.0, hy=1 / 16)
    assert u.nx > 0 and len(u) == (u.nx + 1) * (u.ny + 1)
    e = fbpool.energy(u)
    assert math.isclose(e["total"], summary["final_energy"]["total"], rel_tol=1e-9)
    half = fbpool.energy(u, sub=(u.rect[0], 0.0, -1.0, 1.0))["total"]
    assert 0.0 < half < e["total"]

    fb = fbpool.free_boundary(u)
    assert fb["length"] > 0.0 and "branch_points" in fb

    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "u.dump")
        u.save(p)
        assert fbpool.Field.load(p).values() == u.values()

    plane = fbpool.Field((-1.0, 1.0, -1.0, 1.0), 64, 64, [
        -1.0 + 2.0 * j / 64 for j in range(65) for _ in range(65)
    ])
    assert abs(plane.interpolate(0.3, 0.25) - 0.25) < 1e-12
    assert abs(fbpool.weiss(plane, (0.0, 0.0), 0.5) - math.pi) < 0.05

    d = fbpool.regdist_eval("flat", 0.0, 0.5, q=1.0)
    assert abs(d - 0.5 / math.pi) < 1e-6

    r = fbpool.radial([10, 100, 1000, 10000])
    assert r["passed"]

    try:
        fbpool.slice_minimize(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative boundary value accepted")
    print("ok")


if __name__ == "__main__":
    main()
