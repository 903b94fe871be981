"""Smoke test for the gflbdp extension module.

Run after `cargo build -p gflbdp-python --features extension-module --release`.
If `gflbdp` is not importable, the built shared library is copied into a
temporary directory under the module name and imported from there.
"""

import cmath
import glob
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        import gflbdp  # noqa: F401

        return gflbdp
    except ImportError:
        pass
    libs = sorted(
        glob.glob(os.path.join(ROOT, "target", "*", "libgflbdp.so")),
        key=os.path.getmtime,
        reverse=True,
    )
    if not libs:
        sys.exit("libgflbdp.so not found; build with --features extension-module")
    tmp = tempfile.mkdtemp(prefix="gflbdp-py-")
    shutil.copy(libs[0], os.path.join(tmp, "gflbdp.so"))
    sys.path.insert(0, tmp)
    import gflbdp

    return gflbdp


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    g = load()

    close(g.mittag_leffler(1.0, 1.0, 1.0, 1.0), math.e, 1e-12)

    p = g.ProcessParams(1.0, 1.0)
    close(g.extinction_prob(p, 1.0, tol=1e-12), 0.5, 1e-10)
    close(g.mean(p, 2.0), 1.0, 1e-9)
    assert p.is_simulable() and "ProcessParams" in repr(p)

    c = g.joint_cf(g.ProcessParams(1.0, 0.5), 0.5, 0.3, 1.0)
    assert isinstance(c, complex) and abs(c) <= 1.0 + 1e-12

    try:
        g.ProcessParams(1.0, 1.0, rho=1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("rho > 1 must be rejected")

    q = g.ProcessParams(1.0, 1.0, alpha=0.5, gamma=0.9, rho=0.8)
    a = g.mc_estimate("extinction", q, 1.0, n_paths=4000, seed=11)
    b = g.mc_estimate("extinction", q, 1.0, n_paths=4000, seed=11)
    assert (a.value, a.stderr) == (b.value, b.stderr)
    assert a.n_paths == 4000 and a.seed == 11 and a.failures == 0
    want = g.extinction_prob(q, 1.0)
    assert abs(a.value - want) < 4.0 * a.stderr, (a, want)

    cf = g.mc_estimate("cf", g.ProcessParams(1.0, 0.5), 1.0, n_paths=2000, seed=1, u=0.5, v=0.3)
    assert cf.imag is not None

    gp = g.GeneticParams(10, 5, 1.0, 1.0)
    close(g.genetic_mean(gp, 0.0), 5.0, 1e-12)
    est = g.mc_estimate("genetic_mean", gp, 1.0, n_paths=4000, seed=2)
    assert abs(est.value - g.genetic_mean(gp, 1.0)) < 4.0 * est.stderr

    times, states = g.sample_path(q, 2.0, seed=7, index=0)
    assert len(states) == len(times) and times[0] == 0.0
    assert all(x <= y for x, y in zip(times, times[1:]))
    assert (times, states) == g.sample_path(q, 2.0, seed=7, index=0)

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
