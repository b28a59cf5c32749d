"""End-to-end smoke test for the Python bindings.

Run after `pip install -e . --no-build-isolation` from the repository root:

    python python/smoke_test.py
"""

from fractions import Fraction

import metricbv_py as m


def frac(x):
    """Reports carry exact scalars as ints or 'p/q' strings."""
    return Fraction(x)


def main():
    # marked-ray star: exact measures
    for levels in (1, 2, 3):
        s = m.star_space(levels)
        assert s.metric == "geodesic"
        assert s.edges == 2 ** (levels + 1)
        assert frac(s.h1_total()) == Fraction(3, 4) - Fraction(1, 2 ** (levels + 1))
        e = m.star_marked_set(levels)
        expect = sum(Fraction(1, 4**j) for j in range(1, levels + 1))
        assert frac(e.measure(s)) == expect

    s = m.star_space(3)
    e = m.star_marked_set(3)
    chi = m.indicator(s, e)

    # indicator variation: one curve crossing the hub
    assert frac(m.var_total(s, chi)) == 1
    system = m.variation(s, chi, mode="pv")
    assert frac(system["total"]) == 1

    # the two-sided bracket collapses onto 2J for the marked rays
    bracket = m.tv_bracket(s, chi)
    assert frac(bracket["lower"]) == 6
    assert frac(bracket["upper"]) == 6

    # level-set sweep integrates back to the variation
    sweep = m.coarea_sweep(s, chi)
    assert frac(sweep["integral"]) == 1

    # ball geometry at the hub
    assert frac(m.ball_measure(s, "vertex:0", "1/128")) == Fraction(16, 128)
    profile = m.density_profile(s, "vertex:0", ["1/8", "1/32", "1/128"])
    assert frac(profile["limit_ratio"]) == 16

    # perimeter bound at the hub stays under the density constant
    bound = m.perimeter_bound(s, e, 32)
    assert frac(bound["bound"]) == 16

    # a continuous random function on a path: classical behavior
    space, f = m.random_instance(5, n=5, path=True, jumps=0.0)
    assert f.is_continuous(space)
    total = frac(m.var_total(space, f))
    assert frac(m.coarea_sweep(space, f)["integral"]) == total
    check = m.poincare(space, f, "edge:0:1/8", "1/16", p=1.0, c=4, lam=3)
    assert check["ok"]

    # round trips
    s2 = m.Space.from_json(s.to_json())
    assert s2.edges == s.edges
    chi2 = m.Function.from_json(chi.to_json(), s2)
    assert frac(m.var_total(s2, chi2)) == 1
    e2 = m.Subset.from_json(e.to_json(), s2)
    assert frac(e2.measure(s2)) == frac(e.measure(s))

    # error taxonomy: bad input vs failed precondition
    try:
        m.poincare(s, chi, "vertex:0", "1/8")
        raise AssertionError("jumpy function must be rejected")
    except ValueError:
        pass
    try:
        m.perimeter_bound(s, e, 2)
        raise AssertionError("tiny density constant must fail the scan")
    except RuntimeError:
        pass

    # smoothing: continuous replacement with controlled variation
    smooth, pv = m.smooth_jumps(s, chi, "1/100", 32)
    assert smooth.is_continuous(s)
    assert frac(pv) <= 6 * (3 + 4 * 32)

    # diagnostics bundle on the deep star: empty scanned boundary
    deep = 10
    sd = m.star_space(deep)
    ed = m.star_marked_set(deep)
    radii = [Fraction(1, 2 ** (2 * k + 1)) for k in range(1, deep + 1)]
    scan = m.mtb_scan(sd, ed, ["vertex:0"], [str(r) for r in radii])
    assert not scan["records"][0]["in_boundary"]

    print("smoke test ok")


if __name__ == "__main__":
    main()
