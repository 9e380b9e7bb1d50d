import os
import subprocess
import sys

import numpy as np
import pytest

from monolab import _pykernels, kernels

try:
    from monolab import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def random_inputs(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    return rng, d


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    rng, d = random_inputs(seed)
    sx, sxs = rng.normal(size=(30, d)), rng.normal(size=(30, d))
    px, pxs = rng.normal(size=(50, d)), rng.normal(size=(50, d))
    g = rng.normal(size=(7, 11))
    s, t = np.sort(rng.normal(size=11)), np.sort(rng.normal(size=9))
    f = rng.normal(size=30)
    pairs = [
        (lambda m: m.fitzpatrick_values(px, pxs, sx, sxs)),
        (lambda m: m.maxplus_lines(g, s, t)),
        (lambda m: m.conjugate_bruteforce(sx, sxs, f, px, pxs)),
    ]
    for fn in pairs:
        a, b = np.asarray(fn(_ckernels)), np.asarray(fn(_pykernels))
        assert np.abs(a - b).max() <= 1e-12 * (1 + np.abs(b).max())
    ga, ia, ja = _ckernels.pairwise_min_gap(sx, sxs)
    gb, ib, jb = _pykernels.pairwise_min_gap(sx, sxs)
    assert ga == pytest.approx(gb, abs=1e-12)
    da, _ = _ckernels.directed_hausdorff(px, sx)
    db, _ = _pykernels.directed_hausdorff(px, sx)
    assert da == pytest.approx(db, abs=1e-12)


def test_maxplus_lines_against_definition():
    rng = np.random.default_rng(9)
    g = rng.normal(size=(4, 8))
    s, t = np.linspace(-1, 1, 8), np.linspace(-2, 2, 5)
    expected = np.max(t[None, :, None] * s[None, None, :] + g[:, None, :], axis=2)
    assert np.allclose(kernels.maxplus_lines(g, s, t), expected)


def test_pairwise_min_gap_definition():
    x = np.array([[0.0], [1.0], [3.0]])
    xs = np.array([[1.0], [0.0], [2.0]])
    gap, i, j = kernels.pairwise_min_gap(x, xs)
    assert gap == pytest.approx(-1.0)
    assert {i, j} == {0, 1}


def test_hausdorff_is_symmetric_and_zero_on_equal_sets():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(20, 2)), rng.normal(size=(15, 2))
    assert kernels.hausdorff(a, b) == kernels.hausdorff(b, a)
    assert kernels.hausdorff(a, a[::-1]) == 0.0


def test_use_backend_switches_and_restores():
    previous = kernels.use_backend("python")
    try:
        assert kernels.BACKEND == "python"
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
    finally:
        kernels.use_backend(previous)


def test_environment_forces_fallback():
    env = dict(os.environ, MONOLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from monolab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
