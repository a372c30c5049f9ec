"""Smoke test for the Python extension module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math

import tropicalimit as tl


def main() -> None:
    t = tl.TSeries.t()
    lam = tl.TSeries.lam()
    one = tl.TSeries([(1.0, 0.0, "0", 0)])
    a = one + t * lam
    assert a.classify() == "bounded", a.classify()
    assert a.std() == 1
    assert (a - a).classify() == "zero_mod_trunc"
    assert t.log_norm() == "-1"
    assert abs(a.sample(1e-3) - (1 + 1e-3 * math.log(1e3))) < 1e-12
    assert (one + t).invert() * (one + t) == one

    assert set(tl.BUILTIN_SCENARIOS) >= {"bump", "intro"}
    na = tl.na_integral("builtin:intro")
    assert abs(na - 1.3553095762745941) < 1e-8, na

    r = tl.arch_integral("builtin:bump", 1e-3)
    assert abs(r["value"].real - 1.2069003224378765) < 1e-6, r
    assert r["abs_value"] <= r["bound"]

    report = tl.run_scenario(tl.builtin_scenario("bump"))
    assert report["passed"], report["verdicts"]
    assert len(report["rows"]) == 2

    assert tl.a_priori_bound(1, 1, 1.0, 1.0, 1.0) > 0
    try:
        tl.run_scenario("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("invalid scenario accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
