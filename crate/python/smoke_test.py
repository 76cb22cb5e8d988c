"""Smoke test for the selpy extension: import, call each entry point once."""

import math

import selpy


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    assert "goe" in selpy.labels()
    goe = selpy.SpacingLaw.surmise("goe")
    close(goe.mean, 1.0, 1e-12)
    close(goe.entropy(), goe.entropy(closed=True), 1e-8)
    close(goe.cdf(50.0), 1.0, 1e-15)
    c, beta, alpha, b = goe.coefficients
    close(c, math.pi / 2, 1e-15)
    assert (beta, alpha) == (1, 2)

    p0 = selpy.SpacingLaw.surmise("p0")
    close(p0.variance, (math.pi - 2) / 2, 1e-10)
    assert p0.kl_to(goe) > 0

    xs = goe.sample(20000, seed=1)
    assert len(xs) == 20000 and xs == goe.sample(20000, seed=1)

    g = selpy.coarse_grain(goe, 8.0, 256)
    close(sum(g["masses"]), 1.0, 1e-12)
    close(g["coarse_entropy"], goe.entropy(), 1e-3)

    m = selpy.maxent([(1, 0.0), (2, 1.0)], support="full_line")
    close(m["entropy"], 0.5 * math.log(2 * math.pi * math.e), 1e-8)

    k = selpy.kl_fit(selpy.SpacingLaw.erlang(1.0, 1), lam=2.0, points=[1.0])
    close(k["density"][0], 0.5 * math.exp(-1.0), 1e-10)

    s = selpy.matrix_spacings(1, 5000, seed=3)
    close(sum(s) / len(s), 1.0, 1e-9)
    assert len(selpy.component_spacings(2, 100, seed=3)) == 100

    d = selpy.dyson(1, 2, paths=200, t_final=1.0, seed=4)
    assert d["ordering_violations"] == 0 and len(d["gaps"]) == 200
    r = selpy.bessel_ou(3, paths=200, t_final=1.0, seed=4)
    assert all(p[0] > 0 for p in r["final_positions"])
    assert selpy.bessel_ou_kernel(2, 1.0, 1.0, 0.5) > 0

    reps = selpy.fp_relax(t_final=1.0, reports=10)
    assert all(a["free_energy"] >= b["free_energy"] for a, b in zip(reps, reps[1:]))

    rows = selpy.calogero_scan(gamma=1.0, n_max=1, cells=1500)
    assert all(row["sum"] > 1 + math.log(math.pi) for row in rows)
    assert selpy.calogero_level("two_level", 3.0, 0) == 2.0

    try:
        selpy.SpacingLaw.surmise("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("bad label accepted")

    res = selpy.verify(seed=0, only=[3, 5])
    assert [r[0] for r in res] == [3, 5] and all(r[2] for r in res)
    print("selpy smoke test ok")


if __name__ == "__main__":
    main()
