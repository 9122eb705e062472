"""Smoke test for the Python bindings. Build them first, e.g.

    pip install maturin
    pip install --no-build-isolation ./crates/liouville-py
"""
import math

import liouville_py as lv


def main():
    g = math.sqrt(8 / 3)
    k = lv.lqft_constants(g)
    assert abs(k["central_charge"] - 26) < 1e-12

    verdict, _ = lv.seiberg_check([(0, 0, g), (1, 0, g), (1, 1, g)], g)
    assert verdict == "strict"
    verdict, reasons = lv.seiberg_check([(0, 0, 1.9), (1, 0, 1.9)], g)
    assert verdict == "fail" and reasons

    v = lv.spin_correlation([(0.0, 0.0), (2.0, 0.0)])
    assert abs(v - 2 ** -0.25) < 1e-14

    pts, vals, var = lv.sample_field(16, 1.0, 0.125, 3)
    assert len(pts) == len(vals) == 256 and min(var) > 0
    w = lv.gmc_weights(16, 1.0, 0.125, 1.0, 3)
    assert all(x > 0 for x in w)

    vals, cells = lv.sphere_gff(128, 1)
    assert abs(sum(v * c for v, c in zip(vals, cells))) < 1e-9

    assert abs(lv.Mobius.rotation(math.pi / 2).apply(1.0, 0.0)[1] - 1) < 1e-12
    lq = lv.Lqft(256)
    value, stderr, ess = lq.correlation([(0, 0, g), (1, 0, g), (1, 1, g)], g, 1.0, 200, 1)
    assert value > 0 and stderr > 0 and ess > 0
    ratio, _ = lq.kpz([(0, 0, g), (1, 0, g), (1, 1, g)], lv.Mobius.rotation(0.4), g, 100, 2)
    assert abs(ratio - 1) < 1e-9

    chain = lv.IsingChain(8, lv.critical_beta(), 5)
    chain.sweep(50)
    assert chain.spin(100, 100) == 1
    assert -1 <= chain.magnetization() <= 1

    try:
        lv.lqft_constants(2.5)
    except ValueError as e:
        assert "2.5" in str(e)
    else:
        raise AssertionError("supercritical gamma accepted")
    print("python smoke test ok")


if __name__ == "__main__":
    main()
