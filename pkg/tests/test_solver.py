import json

import numpy as np
import pytest

from liouville_lab.bubbles import BubbleParams, make_bubble
from liouville_lab.errors import ConfigurationError
from liouville_lab.functional import Problem, eval_I_rho
from liouville_lab.greens import SingularSet
from liouville_lab.solver import (SolverConfig, arclength_continuation, compactness_scan,
                                  concentration_point, local_masses, quadratic_convergence,
                                  read_trace, residual_norm, resolved, rho_continuation, solve,
                                  undo_change_of_variables)
from liouville_lab.surface import build_surface

PI = np.pi


@pytest.fixture(scope="module")
def t32():
    return build_surface("torus", 32)


def problem(s, rho, alpha=0.5, at=(0.25, 0.25)):
    return Problem(s, SingularSet.from_chart(s, [at], [alpha]), rho)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig("Bisection")
    with pytest.raises(ConfigurationError):
        SolverConfig(tol=0.0)


def test_constants_need_no_iterations(t32):
    P = Problem(t32, SingularSet.empty(), 3.0)
    res = solve(P)
    assert res.converged and res.iterations == 0
    assert np.all(res.u == 0)


def test_open_surface_rejected(disk):
    with pytest.raises(ConfigurationError):
        solve(Problem(disk, SingularSet.empty(), 2.0))


@pytest.mark.parametrize("method", ["GradientFlow", "Newton"])
def test_subcritical_solve(t32, method):
    P = problem(t32, 2 * PI)
    res = solve(P, SolverConfig(method, max_iter=500))
    assert res.converged and res.residual <= 1e-8
    assert abs(t32.integrate(res.u)) < 1e-10
    assert res.I_rho <= eval_I_rho(P, np.zeros(t32.n_nodes))
    if method == "GradientFlow":
        assert np.all(np.diff(res.I_history) <= 1e-12)
    else:
        assert quadratic_convergence(res.residual_history)


def test_undo_change_of_variables(t32):
    P = problem(t32, 2 * PI)
    res = solve(P)
    chk = undo_change_of_variables(P, res.u)
    assert chk["normalization"] == pytest.approx(1.0, abs=1e-10)
    assert chk["residual"] < 1e-6


def test_supercritical_from_bubble():
    s = build_surface("torus", 64)
    P = problem(s, 6 * PI, alpha=0.6)
    u0 = make_bubble(s, BubbleParams(0.0, 2.0, s.nearest_node((0.25, 0.75))))
    res = solve(P, SolverConfig("Newton"), u0)
    assert res.converged and res.residual <= 1e-8
    assert undo_change_of_variables(P, res.u)["normalization"] == pytest.approx(1.0, abs=1e-8)


def test_quadratic_convergence_rule():
    assert quadratic_convergence([1.0, 1e-2, 1e-5, 1e-11])
    assert not quadratic_convergence([1.0, 0.5, 0.25, 0.125])
    assert not quadratic_convergence([1e-3])


def test_continuation_and_resume(tmp_path, t32):
    P = problem(t32, PI)
    rhos = np.linspace(PI, 3 * PI, 5)
    path = tmp_path / "trace.jsonl"
    out = rho_continuation(P, rhos, trace_path=str(path))
    recs = read_trace(path)
    assert [r["rho"] for r in recs] == list(rhos)
    assert all(r["converged"] and r["residual"] <= 1e-8 for r in recs)
    again = rho_continuation(P, rhos, trace_path=str(path), resume=True)
    assert again["records"] == recs
    assert read_trace(path) == recs
    # deterministic metadata
    path2 = tmp_path / "trace2.jsonl"
    rho_continuation(P, rhos, trace_path=str(path2))
    strip = [json.dumps({k: v for k, v in r.items()}, sort_keys=True) for r in read_trace(path2)]
    assert strip == [json.dumps(r, sort_keys=True) for r in recs]
    assert np.allclose(out["u_last"], again["u_last"], atol=1e-8)


def test_continuation_validation(t32):
    P = problem(t32, PI)
    with pytest.raises(ConfigurationError):
        rho_continuation(P, [1.0, 3.0, 2.0])
    with pytest.raises(ConfigurationError):
        rho_continuation(P, [6 * PI])
    with pytest.raises(ConfigurationError):
        rho_continuation(P, [])


def test_local_masses(t32):
    P = problem(t32, 2 * PI)
    res = solve(P)
    m = local_masses(P, res.u)
    assert {"concentration", "max", "p0"} <= set(m)
    assert 0 < m["max"]["mass"] <= P.rho + 1e-9
    c, r = concentration_point(P, res.u)
    assert 0 <= c < t32.n_nodes and r > 0
    assert resolved(P, res.u)


def test_arclength_passes_fold(t32):
    # the minimiser branch folds near 4.4 pi and turns back below 4 pi
    P = problem(t32, 3 * PI)
    u0 = solve(P).u
    out = arclength_continuation(P, u0, direction="up", max_steps=40,
                                 rho_bounds=(2 * PI, 6 * PI))
    rhos = [r["rho"] for r in out["records"]]
    assert max(rhos) > 4 * PI
    assert rhos[-1] < max(rhos)
    assert all(r["residual"] <= 1e-8 for r in out["records"])
    assert out["status"] in {"max_steps", "unresolved", "rho_bounds", "step_collapse"}


def test_arclength_needs_solution(t32):
    P = problem(t32, 3 * PI)
    with pytest.raises(ConfigurationError):
        arclength_continuation(P, np.sin(2 * PI * t32.nodes[:, 0]))


def test_compactness_scan(t32):
    P = problem(t32, 5 * PI, alpha=0.6)
    rep = compactness_scan(P, [])
    assert rep["pass"] and "warning" in rep
    with pytest.raises(ConfigurationError):
        compactness_scan(P, [4 * PI * 1.6])


def test_residual_norm_zero_at_solution(t32):
    P = problem(t32, 2 * PI)
    assert residual_norm(P, solve(P).u) <= 1e-8
