"""ADMM-based distributed average consensus and decentralized estimation.

Every node holds a local copy ``y_i`` of the network average and a
multiplier ``lambda_i``.  One synchronous round updates, with ``d_i`` the
external degree and ``x_i`` the node's initial value,

    y_i  <-  (rho d_i y_i + rho sum_nbrs y_j - lambda_i + x_i) / (1 + 2 rho d_i)
    lambda_i  <-  lambda_i + rho (d_i y_i_new - sum_nbrs y_j_new)

where the y-update reads the neighbors' previous iterates and the
multiplier update reads their new ones (two synchronization barriers per
round).  The local copies converge to the mean of the initial values for
any rho > 0 on a connected graph.

The decentralized ML estimator runs two such instances in lockstep -- one
on the per-node information values, one on the per-node projections --
and forms the running ratio at every node.  Both streams have real update
coefficients, so complex values propagate exactly as two independent real
consensus problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotConverged, ZeroInformation
from .topology import Graph

__all__ = [
    "AdmmConfig",
    "ConsensusState",
    "admm_step",
    "run_average_consensus",
    "decentralized_mle",
    "DecentralizedRun",
]

#: Nodes whose information copy is below this in magnitude emit no estimate.
EPS_GUARD = 1e-9


@dataclass(frozen=True)
class AdmmConfig:
    """Step constant, iteration cap, and stopping tolerance."""

    rho: float = 0.5
    max_iter: int = 10000
    tol: float = 1e-8

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")


@dataclass(frozen=True)
class ConsensusState:
    """Per-node local copies and multipliers after ``k`` rounds."""

    y: np.ndarray
    lam: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, n: int, dtype=complex) -> "ConsensusState":
        return cls(y=np.zeros(n, dtype=dtype), lam=np.zeros(n, dtype=dtype), k=0)


def _adjacency_matrix(g: Graph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    for i, j in g.edges:
        A[i, j] = 1.0
        A[j, i] = 1.0
    return A


def admm_step(g: Graph, cfg: AdmmConfig, state: ConsensusState, x: np.ndarray) -> ConsensusState:
    """One synchronous consensus round."""
    x = np.asarray(x)
    if x.size != g.n or state.y.size != g.n or state.lam.size != g.n:
        raise DimensionMismatch("state and initial values must have one entry per node")
    A = _adjacency_matrix(g)
    d = A.sum(axis=1)
    rho = cfg.rho
    y_new = (rho * d * state.y + rho * (A @ state.y) - state.lam + x) / (1.0 + 2.0 * rho * d)
    lam_new = state.lam + rho * (d * y_new - A @ y_new)
    return ConsensusState(y=y_new, lam=lam_new, k=state.k + 1)


def run_average_consensus(g: Graph, cfg: AdmmConfig, x: np.ndarray) -> np.ndarray:
    """Iterate to the mean of ``x``; return the full trajectory.

    Row ``k`` of the result holds the local copies after ``k`` rounds
    (row 0 is the zero initialization).  Stops once
    ``max_i |y_i - mean(x)| <= tol``; raises :class:`NotConverged` with
    the final disagreement if the cap is hit first.
    """
    x = np.asarray(x, dtype=complex)
    if x.size != g.n:
        raise DimensionMismatch(f"{x.size} initial values for {g.n} nodes")
    A = _adjacency_matrix(g)
    d = A.sum(axis=1)
    denom = 1.0 + 2.0 * cfg.rho * d
    target = np.mean(x)
    y = np.zeros(g.n, dtype=complex)
    lam = np.zeros(g.n, dtype=complex)
    traj = [y.copy()]
    disagreement = float(np.max(np.abs(y - target)))
    for _ in range(cfg.max_iter):
        y = (cfg.rho * d * y + cfg.rho * (A @ y) - lam + x) / denom
        lam = lam + cfg.rho * (d * y - A @ y)
        traj.append(y.copy())
        disagreement = float(np.max(np.abs(y - target)))
        if disagreement <= cfg.tol:
            return np.array(traj)
    raise NotConverged(
        f"disagreement {disagreement:.3e} > tol {cfg.tol:.3e} after {cfg.max_iter} rounds",
        disagreement,
    )


@dataclass(frozen=True)
class DecentralizedRun:
    """Trajectories of the two consensus streams and the local estimates.

    ``theta[k, i]`` is node i's estimate after k rounds; entries are NaN
    while the node's information copy is below the guard threshold.
    """

    I: np.ndarray        # (k+1, n) real
    P: np.ndarray        # (k+1, n) complex
    theta: np.ndarray    # (k+1, n) complex, NaN where guarded
    converged: bool
    iterations: int
    disagreement: float  # final scaled disagreement, max over the two streams

    @property
    def theta_final(self) -> np.ndarray:
        return self.theta[-1]


def decentralized_mle(
    g: Graph, cfg: AdmmConfig, I0: np.ndarray, P0: np.ndarray
) -> DecentralizedRun:
    """Drive every node's (information, projection) pair to the averages.

    The ratio ``P_i(k) / I_i(k)`` converges at every node to the
    centralized ML estimate ``sum(P0) / sum(I0)``.  Both streams share
    the iteration counter; the run stops when each stream's disagreement,
    scaled by ``max(1, |stream mean|)``, is within ``cfg.tol``, or at
    ``cfg.max_iter`` (reported via ``converged``, not an exception).
    """
    I0 = np.asarray(I0, dtype=float)
    P0 = np.asarray(P0, dtype=complex)
    if I0.size != g.n or P0.size != g.n:
        raise DimensionMismatch(f"streams must have one entry per node ({g.n})")
    total = float(np.sum(I0))
    if total <= 0.0:
        raise ZeroInformation("total initial information must be positive")
    A = _adjacency_matrix(g)
    d = A.sum(axis=1)
    denom = 1.0 + 2.0 * cfg.rho * d
    mean_I = float(np.mean(I0))
    mean_P = complex(np.mean(P0))
    scale_I = max(1.0, abs(mean_I))
    scale_P = max(1.0, abs(mean_P))

    yI = np.zeros(g.n)
    lamI = np.zeros(g.n)
    yP = np.zeros(g.n, dtype=complex)
    lamP = np.zeros(g.n, dtype=complex)
    traj_I = [yI.copy()]
    traj_P = [yP.copy()]
    converged = False
    iterations = 0
    disagreement = np.inf
    for k in range(cfg.max_iter):
        yI = (cfg.rho * d * yI + cfg.rho * (A @ yI) - lamI + I0) / denom
        lamI = lamI + cfg.rho * (d * yI - A @ yI)
        yP = (cfg.rho * d * yP + cfg.rho * (A @ yP) - lamP + P0) / denom
        lamP = lamP + cfg.rho * (d * yP - A @ yP)
        traj_I.append(yI.copy())
        traj_P.append(yP.copy())
        iterations = k + 1
        dev_I = float(np.max(np.abs(yI - mean_I))) / scale_I
        dev_P = float(np.max(np.abs(yP - mean_P))) / scale_P
        disagreement = max(dev_I, dev_P)
        if disagreement <= cfg.tol:
            converged = True
            break
    I = np.array(traj_I)
    P = np.array(traj_P)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(np.abs(I) < EPS_GUARD, np.nan + 1j * np.nan, P / I)
    return DecentralizedRun(
        I=I,
        P=P,
        theta=theta,
        converged=converged,
        iterations=iterations,
        disagreement=disagreement,
    )
