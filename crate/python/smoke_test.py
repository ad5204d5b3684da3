"""Smoke test for the Python extension.

Build and copy the module next to this file first:

    cargo build -p monostab-py --release
    cp target/release/libmonostab.so python/monostab.so
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import monostab  # noqa: E402


def main():
    assert set(monostab.families()) == {"ar1", "rca1", "portfolio", "resource", "piecewise_exp"}

    ar1 = monostab.Model.from_json(
        '{"family": "ar1", "params": {"a": [[0.5]]},'
        ' "shocks": [{"dist": "uniform", "low": -1.0, "high": 1.0}]}'
    )
    assert ar1.family == "ar1" and ar1.state_dim == 1
    assert ar1.apply([2.0], [0.25]) == [1.25]
    assert len(ar1.config_hash()) == 64

    fp = monostab.iterate(ar1, [0.5], [0.0])
    assert abs(fp["point"][0] - 1.0) <= 1e-9

    report = monostab.certify(ar1, [0.5], [-0.5], route="contraction", seed=7)
    assert report["overall"]["status"] == "certified-modulo-numerics", report["overall"]
    split = report["splitting"]
    assert split["m"] == 2 and split["prob_bound"] == 1.0 / 256.0

    again = monostab.certify(ar1, [0.5], [-0.5], route="contraction", seed=7, workers=4)
    assert again == report

    cross = monostab.crossing(ar1, [1.0], [-1.0], 2, reps=20000, seed=1)
    assert cross["estimate"] >= 1.0 / 256.0 - 3 * cross["std_error"]

    paths = monostab.simulate(ar1, [0.0], 10, reps=3, seed=2)
    assert len(paths) == 3 and len(paths[0]) == 11 and paths[0][0] == [0.0]

    for family in monostab.families():
        model = monostab.Model.builtin(family)
        rep = monostab.coupling(model, horizon=50, reps=200, seed=3)
        assert rep["violations"] == 0, family

    conv = monostab.convergence(ar1, starts=[[-10.0], [0.0], [10.0]], samples=20000, seed=5)
    assert conv["passed"], conv["max_final_distance"]

    unstable = monostab.Model.from_json(
        '{"family": "ar1", "params": {"a": [[1.5]]},'
        ' "shocks": [{"dist": "uniform", "low": -1.0, "high": 1.0}]}'
    )
    assert not monostab.tightness(unstable, reps=200, seed=6)["passed"]

    identity = monostab.Model.from_json(
        '{"family": "ar1", "params": {"a": [[1.0]]},'
        ' "shocks": [{"dist": "discrete", "atoms": [0.0], "weights": [1.0]}]}'
    )
    verdict = monostab.probe_uniqueness(identity, [0.0], [[-1.0], [1.0]])
    assert verdict["verdict"] == "refuted", verdict

    try:
        monostab.Model.from_json('{"family": "ar1"}')
    except ValueError:
        pass
    else:
        raise AssertionError("bad config accepted")

    print("python smoke test ok")


if __name__ == "__main__":
    main()
