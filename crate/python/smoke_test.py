"""Smoke test for the essmin_py extension.

Build and install first:
    pip install -e crates/py --no-build-isolation
then run:
    python3 python/smoke_test.py
"""

import json
import math

import essmin_py as em


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    assert set(em.BUILTINS) == {"weil", "zhang_zagier", "hultberg", "faltings"}

    weil = em.GreenFunction("weil")
    assert weil.name == "weil"
    close(weil(3 + 4j), math.log(5), 1e-12)
    close(weil(0.5j), 0.0, 0.0)

    p = em.IntPoly("x^2 - 2")
    assert p.degree == 2 and p.is_irreducible()
    assert sorted(round(r.real, 9) for r in p.roots()) == [-1.414213562, 1.414213562]
    assert em.IntPoly("x - 1").resultant(em.IntPoly("x + 1")) == "2"

    w = json.loads(em.eval_witness(weil, json.dumps({"kind": "lemniscate", "P": "x^2 - 2"})))
    close(w["value"], 0.5 * math.log(2), 1e-8)

    hultberg = em.GreenFunction("hultberg")
    assert em.cap1_bound(hultberg, em.IntPoly("x")) >= math.log(2) - 1e-6

    zz = em.GreenFunction("zhang_zagier")
    cert = json.loads(em.exchange(zz, [em.IntPoly(s) for s in ["x", "x - 1", "x^2 - x + 1"]]))
    assert 0.10 <= cert["lambda"] <= 0.127228, cert["lambda"]

    report, code = em.run_bounds(weil, eps=0.05, budget_witness=50)
    report = json.loads(report)
    assert code == 0 and report["lower"] == 0.0 and report["upper"] <= 0.02

    best = json.loads(em.search(zz, budget=64))
    assert best["value"] <= 0.20

    tau = em.inverse_j(1728)
    close(abs(tau - 1j), 0.0, 1e-10)
    assert math.isfinite(em.g_hyp(1000 + 10j))

    # a composite spec passed as a JSON string
    spec = {"terms": [{"w": "1", "kind": "log_plus", "num": ["0", "1"], "den": ["1"]}]}
    g = em.GreenFunction(json.dumps(spec))
    close(g(2.0), math.log(2), 1e-12)

    try:
        em.GreenFunction("no_such_green")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown name accepted")

    failed = [c for c in em.verify("golden") if not c[1]]
    assert not failed, failed
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
