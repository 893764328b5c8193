"""Randomized verification of every module's core properties.

Each check runs a batch of small random instances (networks of up to 8
nodes by default) and returns ``None`` on success or a message naming the
first violated property.  The consensus and quadratic-recast checks
accept injectable replacements for the piece under test, so the test
suite can verify that a deliberately broken update is actually caught.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .consensus import AdmmConfig, ConsensusState, admm_step
from .errors import WsnMleError
from .fusion import (
    build_global_model,
    decompose_information,
    information_total,
    ml_variance,
    select_retainers,
)
from .gain_optimizer import (
    OptimizerConfig,
    build_Q,
    build_R,
    g_value,
    lambda_max_estimate,
    optimize,
    safe_eta0,
    update_y,
)
from .network_model import (
    GainDomain,
    GainVector,
    NetworkModel,
    local_model,
    local_noise_covariance,
    information_value,
    node_information,
    sample_channels,
)
from .topology import random_connected_graph

__all__ = ["CheckResult", "PROPERTY_CHECKS", "run_all"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_scenario(rng: np.random.Generator, n_max: int, sigma_n: float = 0.1):
    n = int(rng.integers(2, n_max + 1))
    seed = int(rng.integers(0, 2**31))
    g = random_connected_graph(n, "gnp", p=0.6, seed=seed)
    h = sample_channels(g, "complex_gaussian", seed=seed + 1)
    model = NetworkModel(
        graph=g, h=h, sigma_v_sq=1.0, sigma_n_sq=sigma_n, theta=2.0 + 1.0j
    )
    return g, model


def _random_global(rng, n_max, domain=GainDomain.FIXED_ENERGY):
    g, model = _random_scenario(rng, n_max)
    a = GainVector.random(g.n, domain, rng)
    plan = select_retainers(g, node_information(model, a))
    gm = build_global_model(model, plan, a)
    return g, model, a, gm


def check_topology(rng, cases, n_max):
    """Connectivity, adjacency symmetry, and generation determinism."""
    for _ in range(cases):
        n = int(rng.integers(1, n_max + 1))
        seed = int(rng.integers(0, 2**31))
        model = "geometric" if rng.random() < 0.5 else "gnp"
        g = random_connected_graph(n, model, radius=0.7, p=0.5, seed=seed)
        g2 = random_connected_graph(n, model, radius=0.7, p=0.5, seed=seed)
        if g.edges != g2.edges:
            return f"generation not deterministic for seed {seed}"
        for i in range(n):
            for j in g.adjacency[i]:
                if i not in g.adjacency[j]:
                    return f"adjacency asymmetry at ({i}, {j})"
        # build_graph already rejects disconnected graphs; re-check reachability.
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in g.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != n:
            return f"graph with seed {seed} not connected"
    return None


def check_information(rng, cases, n_max):
    """Phase invariance and noise monotonicity of the local information."""
    for _ in range(cases):
        g, model = _random_scenario(rng, max(n_max, 2))
        a = GainVector.random(g.n, GainDomain.FIXED_ENERGY, rng)
        i = int(rng.integers(0, g.n))
        m = local_model(model, i, a)
        info = information_value(m, local_noise_covariance(m, model.sigma_n_sq))
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
        rotated = GainVector(phase * a.a, GainDomain.FIXED_ENERGY)
        m_rot = local_model(model, i, rotated)
        info_rot = information_value(m_rot, local_noise_covariance(m_rot, model.sigma_n_sq))
        if abs(info - info_rot) > 1e-10 * max(1.0, info):
            return f"information not phase invariant: {info} vs {info_rot}"
        info_2n = information_value(m, local_noise_covariance(m, 2.0 * model.sigma_n_sq))
        if not info_2n < info:
            return "doubling transmission noise did not decrease information"
    return None


def check_partition(rng, cases, n_max):
    """Per-receiver information shares sum to the global information."""
    for _ in range(cases):
        g, model, a, gm = _random_global(rng, n_max)
        I0 = decompose_information(gm, a)
        total = information_total(gm, a)
        if abs(float(np.sum(I0)) - total) > 1e-12 * total:
            return f"partition mismatch: {np.sum(I0)} vs {total}"
        if abs(ml_variance(gm, a) * total - 1.0) > 1e-12:
            return "variance is not the reciprocal information"
    return None


def check_consensus(rng, cases, n_max, step_fn=admm_step):
    """Convergence to the mean and stationarity of the consensus round."""
    for _ in range(cases):
        n = int(rng.integers(2, n_max + 1))
        g = random_connected_graph(n, "gnp", p=0.6, seed=int(rng.integers(0, 2**31)))
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        cfg = AdmmConfig(rho=float(rng.uniform(0.2, 1.5)), max_iter=5000, tol=1e-9)
        state = ConsensusState.zeros(n)
        target = np.mean(x)
        ok = False
        for _ in range(cfg.max_iter):
            state = step_fn(g, cfg, state, x)
            if float(np.max(np.abs(state.y - target))) <= cfg.tol:
                ok = True
                break
        if not ok:
            return f"consensus did not reach the mean (n={n}, rho={cfg.rho:.3f})"
        # One more round from the converged state must barely move.
        nxt = step_fn(g, cfg, state, x)
        if float(np.max(np.abs(nxt.y - state.y))) > 1e-6:
            return "converged state is not nearly stationary"
    return None


def _rank_one_top_left(H, V, ytilde):
    return (np.conj(H.T) @ np.outer(ytilde, np.conj(ytilde)) @ H) * V


def check_hadamard(rng, cases, n_max, top_left=_rank_one_top_left):
    """Quadratic recast of the gain-dependent noise energy."""
    for _ in range(cases):
        g, model, a, gm = _random_global(rng, n_max)
        H = gm.H
        V = np.diag(gm.v_diag)
        ar = rng.standard_normal(gm.n) + 1j * rng.standard_normal(gm.n)
        yt = rng.standard_normal(gm.m) + 1j * rng.standard_normal(gm.m)
        D = np.diag(ar)
        lhs = complex(np.conj(yt) @ (H @ D @ V @ np.conj(D.T) @ np.conj(H.T) @ yt))
        rhs = complex(np.conj(ar) @ (top_left(H, V, yt) @ ar))
        if abs(lhs - rhs) > 1e-9 * max(1.0, abs(lhs)):
            return f"quadratic recast violated: {lhs} vs {rhs}"
    return None


def check_equivalence(rng, cases, n_max):
    """The three evaluations of the reformulated objective agree."""
    cfg = OptimizerConfig()
    for _ in range(cases):
        g, model, a, gm = _random_global(rng, n_max)
        eta0 = safe_eta0(gm, cfg)
        R = build_R(gm, a.a, eta0)
        eta_schur = eta0 - information_total(gm, a.a)
        e1 = np.zeros(gm.m + 1, dtype=complex)
        e1[0] = 1.0
        eta_inv = 1.0 / float(np.real(np.linalg.solve(R, e1)[0]))
        y = update_y(R, "solve")
        y_gs = update_y(R, "gram_schmidt")
        eta_g = g_value(y, R)
        if abs(eta_inv - eta_schur) > 1e-8 * eta_schur:
            return f"inverse-entry evaluation off: {eta_inv} vs {eta_schur}"
        if abs(eta_g - eta_schur) > 1e-8 * eta_schur:
            return f"quadratic-form evaluation off: {eta_g} vs {eta_schur}"
        if float(np.max(np.abs(y.y - y_gs.y))) > 1e-8:
            return "solve and Gram-Schmidt auxiliary vectors disagree"
    return None


def check_optimizer(rng, cases, n_max):
    """Monotone objective, feasible iterates, and a valid diagonal load."""
    cfg = OptimizerConfig()
    for _ in range(cases):
        domain = GainDomain.FIXED_ENERGY if rng.random() < 0.5 else GainDomain.UNIMODULAR
        g, model = _random_scenario(rng, n_max)
        a0 = GainVector.ones(g.n, domain)
        plan = select_retainers(g, node_information(model, a0))
        gm = build_global_model(model, plan, a0)
        trace = optimize(gm, cfg, a0)
        etas = np.asarray(trace.etas)
        if np.any(np.diff(etas) > 1e-10):
            return f"objective increased along the trace (max jump {np.max(np.diff(etas)):.2e})"
        a = trace.gains.a
        if domain is GainDomain.FIXED_ENERGY:
            if abs(float(np.sum(np.abs(a) ** 2)) - gm.n) > 1e-9 * gm.n:
                return "final gains violate the energy constraint"
        else:
            if float(np.max(np.abs(np.abs(a) - 1.0))) > 1e-12:
                return "final gains violate the unit-modulus constraint"
        if trace.var_final > ml_variance(gm, a0):
            return "optimization did not improve on the initial gains"
        ytilde = update_y(build_R(gm, a, safe_eta0(gm, cfg)), "solve").tail
        Q, _ = build_Q(gm, ytilde, safe_eta0(gm, cfg))
        lam = cfg.lambda_margin * lambda_max_estimate(Q) + cfg.eps_abs
        mineig = float(np.min(np.linalg.eigvalsh(lam * np.eye(gm.n + 1) - Q)))
        if mineig < -1e-9:
            return f"diagonal load leaves a negative eigenvalue {mineig:.2e}"
    return None


PROPERTY_CHECKS = (
    ("topology", check_topology),
    ("local_information", check_information),
    ("information_partition", check_partition),
    ("consensus", check_consensus),
    ("quadratic_recast", check_hadamard),
    ("objective_equivalence", check_equivalence),
    ("gain_optimizer", check_optimizer),
)


def run_all(seed: int = 0, cases: int = 100, n_max: int = 8, overrides: dict | None = None):
    """Run every property check; returns one :class:`CheckResult` each.

    ``overrides`` maps check names to keyword arguments (used by the test
    suite to inject broken components).
    """
    overrides = overrides or {}
    results = []
    for name, fn in PROPERTY_CHECKS:
        rng = np.random.default_rng(np.random.SeedSequence((seed, zlib.crc32(name.encode()))))
        kwargs = overrides.get(name, {})
        try:
            detail = fn(rng, cases, n_max, **kwargs)
        except (WsnMleError, AssertionError) as exc:
            detail = f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, passed=detail is None, detail=detail or ""))
    return results
