"""Smoke test for the tetratomo extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

import json
import math

import tetratomo as tt


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    s = tt.PauliVector(0.1, -0.3, 0.5)
    p = tt.outcome_probabilities(s)
    assert close(sum(p), 1.0)
    back = tt.reconstruct_pauli(p)
    assert all(close(u, v) for u, v in zip(back.to_list(), s.to_list()))

    counts = tt.sample_clicks(s, 2000, seed=7)
    assert sum(counts) == 2000
    assert counts == tt.sample_clicks(s, 2000, seed=7)

    est = tt.ml_estimate_four([46, 18, 18, 18])
    assert est.branch == "interior"
    assert close(est.state.norm(), 0.84)

    est = tt.ml_estimate_four([5, 0, 0, 0])
    assert est.branch == "boundary" and close(est.state.norm(), 1.0)

    pure = tt.ml_estimate_four([3, 2, 1, 1], mode="force-boundary")
    assert close(pure.state.norm(), 1.0)
    assert json.loads(pure.to_json())["branch"] == "boundary"

    pred = tt.predictions(tt.PauliVector(0, 0, 0), 1000)
    assert close(pred["msd_generic"], 9 / 1000)
    assert pred["msd_antialigned"] is None

    v = tt.two_qubit_exhaustive("nonadaptive", "pure")
    assert close(v, (5 - math.sqrt(3)) / 3, 1e-8)

    probs, posts = tt.run_network(s)
    assert all(close(a, b) for a, b in zip(probs, p))
    assert all(close(u, v) for u, v in zip(posts[0], tt.TetraFrame().vectors()[0]))

    sq, fid, _ = tt.run_trial(tt.PauliVector(0, 0, 1), 200, seed=3, strategy="selflearn", mode="force-boundary")
    assert 0.0 <= sq <= 4.0 and 0.0 <= fid <= 1.0

    csv, summary = tt.run_experiment(json.dumps({"experiment": "custom", "N": [50], "trials": 4, "seed": 1}))
    assert csv.splitlines()[0] == "series,seed,N,strategy,alignment,angle_deg,sq_dist,fidelity"
    assert json.loads(summary)["experiment"] == "custom"

    try:
        tt.PauliVector(1, 1, 0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
