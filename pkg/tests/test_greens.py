import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouville_lab.errors import ConfigurationError
from liouville_lab.greens import (SingularSet, export_csv, green_function, green_residual,
                                  log_tilde_h, tilde_h)
from liouville_lab.surface import build_surface


def test_sphere_antipode_value(sphere64):
    # continuum oracle: c = (log 2 - 1)/(4 pi), so G(antipode) = -1/(4 pi)
    g = green_function(sphere64, sphere64.north_pole)
    assert g.values[sphere64.south_pole] == pytest.approx(-1 / (4 * np.pi), rel=1e-3)


@pytest.mark.parametrize("name", ["torus64", "sphere64"])
def test_zero_mean(name, request):
    s = request.getfixturevalue(name)
    g = green_function(s, 17)
    assert abs(s.integrate(g.values)) < 1e-8


def test_torus_evenness(torus64):
    p = torus64.nearest_node((0.5, 0.5))
    g = green_function(torus64, p)
    for v in [(3, 0), (5, 7), (-2, 11)]:
        a = torus64.nearest_node((0.5 + v[0] / 64, 0.5 + v[1] / 64))
        b = torus64.nearest_node((0.5 - v[0] / 64, 0.5 - v[1] / 64))
        assert g.values[a] == pytest.approx(g.values[b], abs=1e-12)


def test_torus_residual(torus64):
    g = green_function(torus64, 1000)
    assert green_residual(torus64, g) < 1e-6


def test_sphere_residual_at_pole(sphere64):
    g = green_function(sphere64, sphere64.north_pole)
    assert green_residual(sphere64, g) < 5e-2


@pytest.mark.xfail(strict=True, reason="closed-form G against the finite-difference "
                                       "Laplacian leaves about 5.2e-2 at generic nodes")
def test_sphere_residual_generic_node(sphere64):
    g = green_function(sphere64, sphere64.nearest_node((1.0, 0.3)))
    assert green_residual(sphere64, g) < 5e-2


def test_disk_boundary_pole_rejected(disk):
    with pytest.raises(ConfigurationError):
        green_function(disk, int(np.flatnonzero(disk.boundary)[0]))


def test_empty_set_gives_h(torus32):
    h = 1 + 0.5 * np.sin(2 * np.pi * torus32.nodes[:, 0])
    assert np.array_equal(tilde_h(torus32, SingularSet.empty(h)), h)
    assert np.all(tilde_h(torus32, SingularSet.empty()) == 1.0)


def test_exponent_two_alpha(torus64):
    p = torus64.nearest_node((0.5, 0.5))
    lh = log_tilde_h(torus64, SingularSet((p,), (1.0,)))
    ks = np.arange(1, 6)
    xs = [torus64.nearest_node((0.5 + k / 64, 0.5)) for k in ks]
    diff = [lh[x] - 2 * np.log(k / 64) for x, k in zip(xs, ks)]
    assert np.all(np.isfinite(diff))
    # a wrong exponent would drift by about 2 log 5 = 3.2 over these nodes
    assert np.ptp(diff) < 0.25


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0])
def test_neighbour_ratio(torus64, alpha):
    p = torus64.nearest_node((0.3, 0.6))
    h = tilde_h(torus64, SingularSet((p,), (alpha,)))
    d = torus64.distances_from(p)
    nb = np.flatnonzero(np.isclose(d, 1 / 64))
    assert len(nb) == 4
    ratio = h[nb] / d[nb] ** (2 * alpha)
    assert ratio.max() / ratio.min() < 1.1


def test_vanishes_only_at_points(sphere64):
    pts = (5, 2000)
    h = tilde_h(sphere64, SingularSet(pts, (0.5, 0.8)))
    assert np.all(h >= 0)
    assert set(np.flatnonzero(h == 0)) == set(pts)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 32 * 32 - 1), st.integers(0, 32 * 32 - 1),
       st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_factorization(p1, p2, a1, a2):
    if p1 == p2:
        return
    s = build_surface("torus", 32)
    h = 1.5 + np.cos(2 * np.pi * s.nodes[:, 1])
    both = tilde_h(s, SingularSet((p1, p2), (a1, a2), h))
    one = tilde_h(s, SingularSet((p1,), (a1,), h))
    two = tilde_h(s, SingularSet((p2,), (a2,), h))
    prod = one * two / h
    assert np.allclose(both, prod, rtol=1e-10, atol=0)


def test_singular_set_validation(torus32):
    with pytest.raises(ConfigurationError):
        SingularSet((1, 1), (0.5, 0.5))
    with pytest.raises(ConfigurationError):
        SingularSet((1,), (1.5,))
    with pytest.raises(ConfigurationError):
        SingularSet((1, 2), (0.5,))
    s = SingularSet.from_chart(torus32, [(0.26, 0.25)], [0.5])
    assert s.snap_offsets[0] == pytest.approx(0.01, abs=1e-12)


def test_export_csv(tmp_path, torus32):
    path = tmp_path / "g.csv"
    vals = green_function(torus32, 0).values
    export_csv(path, torus32, vals, "G")
    lines = path.read_text().splitlines()
    assert lines[0] == "node,c0,c1,G"
    assert len(lines) == torus32.n_nodes + 1
    assert float(lines[5].split(",")[3]) == vals[4]
