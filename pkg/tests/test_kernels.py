import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoflow import kernels
from isoflow.root_system import dihedral_roots, polar_inverse

BACKENDS = kernels.backends()
needs_c = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def _setup(g, m1, m2, r, frac):
    rs = dihedral_roots(g, m1, m2)
    return (np.ascontiguousarray(rs.roots), np.ascontiguousarray(rs.mult_array, dtype=float),
            float(rs.n), polar_inverse(r, frac * math.pi / g))


CASES = st.tuples(st.sampled_from([(1, 3, 3), (2, 1, 3), (3, 1, 1), (4, 1, 3), (6, 2, 2)]),
                  st.floats(0.3, 3.0), st.floats(0.001, 0.999))


def test_backend_name():
    assert kernels.BACKEND in BACKENDS


def test_python_backend_outside_is_nan():
    py = BACKENDS["python"]
    roots, mult, n, _ = _setup(2, 1, 1, 1.0, 0.5)
    s, a2, margin, wall = py.root_sums(roots, mult, np.array([1.0, -0.1]))
    assert np.all(np.isnan(s)) and math.isnan(a2) and margin < 0 and wall == 1


@needs_c
@given(CASES)
def test_root_sums_parity(case):
    (g, m1, m2), r, frac = case
    roots, mult, n, x = _setup(g, m1, m2, r, frac)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    sp, ap, mp, wp = py.root_sums(roots, mult, x)
    sc, ac, mc, wc = cy.root_sums(roots, mult, x)
    assert np.allclose(sc, sp, rtol=1e-14, atol=0)
    assert ac == pytest.approx(ap, rel=1e-14)
    assert mc == mp and wc == wp


@needs_c
@given(CASES, st.sampled_from([kernels.EUCLIDEAN, kernels.SPHERICAL]))
def test_field_parity(case, kind):
    (g, m1, m2), r, frac = case
    roots, mult, n, x = _setup(g, m1, m2, r, frac)
    fp = BACKENDS["python"].field(kind, roots, mult, n, x)
    fc = BACKENDS["cython"].field(kind, roots, mult, n, x)
    scale = float(np.linalg.norm(BACKENDS["python"].field(kernels.EUCLIDEAN, roots, mult, n, x)))
    assert np.linalg.norm(fc - fp) <= 1e-14 * scale


@needs_c
@given(CASES, st.sampled_from([kernels.EUCLIDEAN, kernels.SPHERICAL]), st.floats(1e-4, 1e-2))
def test_step_parity(case, kind, h):
    (g, m1, m2), r, frac = case
    roots, mult, n, x = _setup(g, m1, m2, 1.0, frac)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    f0 = py.field(kind, roots, mult, n, x)
    xp, fp, Kp, ep = py.dp5_step(kind, roots, mult, n, x, f0, -h, 1e-10, 1e-12)
    xc, fc, Kc, ec = cy.dp5_step(kind, roots, mult, n, x, f0, -h, 1e-10, 1e-12)
    # a step that leaves the chamber yields NaN states and an infinite error in both
    assert np.allclose(xc, xp, rtol=1e-13, atol=1e-15, equal_nan=True)
    assert math.isfinite(ec) == math.isfinite(ep)
    if math.isfinite(ep):
        assert np.allclose(Kc, Kp, rtol=1e-12, atol=1e-14 * np.abs(Kp).max())
        # the normalized error only matters near the acceptance threshold 1
        assert ec == pytest.approx(ep, rel=1e-5, abs=1e-6)


def _run_pure(code):
    env = dict(os.environ, ISOFLOW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_env_forces_fallback():
    assert _run_pure("from isoflow import kernels; print(kernels.BACKEND)") == "python"


def test_trajectories_agree_across_backends():
    code = ("import math, numpy as np;"
            "from isoflow import FlowSpec, integrate;"
            "from isoflow.root_system import dihedral_roots, polar_inverse;"
            "rs = dihedral_roots(3, 1, 1);"
            "tr = integrate(FlowSpec('spherical', rs, polar_inverse(1, 0.3), (-1.0, 1.0)));"
            "print(repr(tr.termination.t_hit)); print(repr(float(tr(-0.5)[0])))")
    pure = _run_pure(code).split()
    from isoflow import FlowSpec, integrate
    tr = integrate(FlowSpec("spherical", dihedral_roots(3, 1, 1), polar_inverse(1, 0.3), (-1.0, 1.0)))
    assert float(pure[0]) == pytest.approx(tr.termination.t_hit, abs=1e-10)
    assert float(pure[1]) == pytest.approx(float(tr(-0.5)[0]), abs=1e-10)
