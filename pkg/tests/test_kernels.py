import os
import subprocess
import sys

import numpy as np
import pytest

from edadecomp import kernels
from edadecomp.deconv import biexp_kernel, ridge_gram_band


def dense_from_band(gband):
    n = gband.shape[1]
    G = np.diag(gband[0]).astype(float)
    for d in range(1, gband.shape[0]):
        G += np.diag(gband[d, : n - d], d) + np.diag(gband[d, : n - d], -d)
    return G


@pytest.fixture
def gband():
    return ridge_gram_band(biexp_kernel().taps, 300, 0.01)


def test_matvec_matches_dense(backend, gband, rng):
    impl = kernels.get_backend(backend)
    x = rng.normal(size=gband.shape[1])
    assert np.allclose(impl.band_matvec(gband, x), dense_from_band(gband) @ x, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("density", [0.02, 0.3, 1.0])
def test_subsolve_matches_dense(backend, gband, rng, density):
    impl = kernels.get_backend(backend)
    n = gband.shape[1]
    free = np.flatnonzero(rng.random(n) < density)
    if free.size == 0:
        free = np.array([7])
    rhs = rng.normal(size=free.size)
    G = dense_from_band(gband)[np.ix_(free, free)]
    z = impl.band_subsolve(gband, free, rhs)
    assert np.allclose(G @ z, rhs, rtol=1e-9, atol=1e-10)


def test_subsolve_empty(backend, gband):
    impl = kernels.get_backend(backend)
    assert impl.band_subsolve(gband, np.array([], dtype=np.intp), np.zeros(0)).size == 0


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
def test_backends_agree(gband, rng):
    py, c = kernels.get_backend("python"), kernels.get_backend("compiled")
    free = np.flatnonzero(rng.random(gband.shape[1]) < 0.4)
    rhs = rng.normal(size=free.size)
    x = rng.normal(size=gband.shape[1])
    assert np.allclose(py.band_matvec(gband, x), c.band_matvec(gband, x), rtol=1e-13, atol=1e-15)
    assert np.allclose(py.band_subsolve(gband, free, rhs), c.band_subsolve(gband, free, rhs), rtol=1e-10)


def test_unknown_backend():
    with pytest.raises(ValueError, match="not available"):
        kernels.get_backend("fortran")


def test_env_forces_fallback():
    env = dict(os.environ, EDADECOMP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import edadecomp.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
