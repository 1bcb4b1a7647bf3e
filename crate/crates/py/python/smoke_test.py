"""Smoke test for the energy_space extension module.

Builds the cdylib with cargo, copies it next to a temporary import path as
energy_space.so and exercises the bindings.

    python3 crates/py/python/smoke_test.py
"""

import json
import math
import os
import shutil
import subprocess
import sys
import tempfile

CRATE = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build():
    subprocess.run(
        ["cargo", "build", "--release", "--manifest-path", os.path.join(CRATE, "Cargo.toml")],
        check=True,
    )
    meta = subprocess.run(
        ["cargo", "metadata", "--format-version", "1", "--no-deps",
         "--manifest-path", os.path.join(CRATE, "Cargo.toml")],
        check=True, capture_output=True, text=True,
    )
    target = json.loads(meta.stdout)["target_directory"]
    lib = os.path.join(target, "release", "libenergy_space_py.so")
    out = tempfile.mkdtemp(prefix="energy_space_")
    shutil.copy(lib, os.path.join(out, "energy_space.so"))
    return out


def close(a, b, tol=1e-9):
    assert abs(a - b) <= tol, (a, b)


def main():
    sys.path.insert(0, build())
    import energy_space as es

    net = es.Network.generate("path:3")
    assert len(net) == 3 and net.origin == "0"
    space = es.EnergySpace(net)
    v1 = space.kernel(1)
    for got, want in zip(v1, [0.0, 1.0, 1.0]):
        close(got, want)
    close(space.resistance(1), 1.0)

    seg = es.EnergySpace(es.Network.generate("integer_segment:8"))
    gram = seg.gram([1, 2, 3, 4])
    for i in range(4):
        for j in range(4):
            close(gram[i][j], min(i, j) + 1)

    delta = es.Multiplier.delta(net, 1)
    close(space.restricted_norm(delta), math.sqrt(2))
    close(space.point_mass_norm(1), math.sqrt(2))
    assert [ok for ok, _ in space.certify(delta, 1.4)] == [False]
    assert [ok for ok, _ in space.certify(delta, 1.415)] == [True]

    report = space.analyze(delta, estimate=True)
    assert report["verdict"] == "certified", report
    close(report["verdict_bound"], math.sqrt(2), 1e-7)

    c = es.Multiplier.constant(net, 2 - 1j)
    assert not c.is_real()
    close(space.restricted_norm(c), abs(2 - 1j))

    close(space.escape_prob(1), 0.5)
    walk = space.escape_prob_mc(1, samples=20000, seed=3)
    assert walk == space.escape_prob_mc(1, samples=20000, seed=3)
    assert abs(walk["mc_estimate"] - 0.5) < 5 * walk["mc_stderr"] + 1e-12

    custom = es.Network([("a", "b", 2.0), ("b", "c", 1.0)], "a")
    close(es.EnergySpace(custom).resistance("c"), 1.5)
    again = es.Network.from_json(custom.to_json())
    assert again.ids == custom.ids

    try:
        space.kernel(7)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown vertex accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
