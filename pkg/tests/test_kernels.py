import numpy as np
import pytest

from liouville_lab import _kernels
from liouville_lab.surface import build_surface

try:
    from liouville_lab._kernels import _shells  # noqa: F401
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled kernels not built")


def run_both(fn, *args):
    prev = _kernels.use_backend("python")
    try:
        py = fn(*args)
        _kernels.use_backend("cython")
        cy = fn(*args)
    finally:
        _kernels.use_backend(prev)
    return py, cy


@needs_ext
@pytest.mark.parametrize("spec", ["torus", "sphere", "disk"])
def test_backends_agree(spec, rng):
    s = build_surface(spec, 24 if spec != "disk" else (16, 32))
    mass = rng.lognormal(size=s.n_nodes) * s.weights
    mass /= mass.sum()
    py, cy = run_both(_kernels.concentration_fields, s, mass, 4.0)
    for a, b in zip(py, cy):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)
    pb, cb = run_both(_kernels.ball_masses, s, mass, 0.3)
    assert np.allclose(pb, cb, rtol=1e-12, atol=1e-15)


def test_ball_masses_against_direct(torus32, rng):
    mass = rng.random(torus32.n_nodes)
    out = _kernels.ball_masses(torus32, mass, 0.2)
    for x in (0, 100, 555):
        assert out[x] == pytest.approx(mass[torus32.distances_from(x) <= 0.2].sum(), rel=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.use_backend("fortran")


def test_env_fallback(monkeypatch):
    import importlib

    monkeypatch.setenv("LIOUVILLE_LAB_PURE_PYTHON", "1")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("LIOUVILLE_LAB_PURE_PYTHON")
        importlib.reload(_kernels)
