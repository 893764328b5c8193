"""Information-driven compression and the centralized ML estimate.

Every node broadcasts its amplified observation to all neighbors, which
would leave each broadcast duplicated across the network.  The
compression step keeps exactly one external copy per sender -- at the
neighbor holding the highest information value -- and discards the rest.
Every node additionally keeps its own raw observation as a self row.

The surviving rows are stacked into a :class:`GlobalModel` whose sensing
matrix has exactly one nonzero per row and whose combined noise
covariance is diagonal (each retained reception carries an independent
noise draw).  All estimator algebra therefore reduces to per-row scalar
operations; no dense inverse appears anywhere in this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularCovariance, ZeroInformation
from .network_model import GainVector, NetworkModel
from .topology import Graph

__all__ = [
    "SelectionPlan",
    "GlobalModel",
    "select_retainers",
    "build_global_model",
    "noise_cov_rows",
    "information_total",
    "ml_estimate",
    "ml_variance",
    "decompose_information",
    "sample_received",
    "plan_to_json",
    "global_model_to_json",
]


@dataclass(frozen=True)
class SelectionPlan:
    """Which directed links survive compression.

    ``retained`` lists the surviving ``(receiver, sender)`` pairs,
    self links included, sorted.  ``r`` counts the discarded external
    links: ``r = 2|E| - (retained external links)``.
    """

    retained: tuple[tuple[int, int], ...]
    r: int

    def rows_at(self, i: int) -> tuple[int, ...]:
        """Senders retained at receiver ``i``, ascending."""
        return tuple(s for k, s in self.retained if k == i)


def select_retainers(g: Graph, info: np.ndarray) -> SelectionPlan:
    """Assign each broadcast to the neighbor with the highest information.

    For every sender ``i``, the external neighbor ``j`` maximizing
    ``info[j]`` retains the reception ``(j, i)``; ties break to the
    smallest node id.  All other copies of the broadcast are discarded.
    Self links ``(i, i)`` are always retained.
    """
    info = np.asarray(info, dtype=float)
    if info.size != g.n:
        raise DimensionMismatch(f"{info.size} information values for {g.n} nodes")
    if not np.all(np.isfinite(info)) or np.any(info < 0.0):
        raise ValueError("information values must be finite and nonnegative")
    retained = [(i, i) for i in range(g.n)]
    external = 0
    for sender in range(g.n):
        nbrs = g.adjacency[sender]
        if not nbrs:
            continue
        best = max(nbrs, key=lambda j: (info[j], -j))
        retained.append((best, sender))
        external += 1
    return SelectionPlan(retained=tuple(sorted(retained)), r=2 * g.num_edges - external)


@dataclass(frozen=True)
class GlobalModel:
    """Compressed stacked observation model.

    Rows are ordered by ``(receiver, sender)``.  Row ``r`` observes
    ``h[r] * a[sender[r]] * (theta + fresh observation noise)`` plus
    transmission noise of variance ``sigma_rows[r]``.

    ``H`` materializes the dense M-by-N sensing matrix (one nonzero per
    row); the per-row arrays are what the estimator actually uses.
    """

    n: int
    row_receiver: np.ndarray
    row_sender: np.ndarray
    row_h: np.ndarray
    sigma_rows: np.ndarray   # transmission-noise variance per row (diag of Sigma)
    v_diag: np.ndarray       # per-node observation-noise variances (diag of V)
    sigma_n_sq: float
    gains: GainVector        # gains the selection plan was computed under

    @property
    def m(self) -> int:
        return self.row_h.size

    @property
    def row_map(self) -> tuple[tuple[int, int, int], ...]:
        return tuple(
            (r, int(self.row_receiver[r]), int(self.row_sender[r])) for r in range(self.m)
        )

    @property
    def H(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=complex)
        H[np.arange(self.m), self.row_sender] = self.row_h
        return H

    def row_sigma_v(self) -> np.ndarray:
        """Observation-noise variance of each row's sender."""
        return self.v_diag[self.row_sender]


def build_global_model(model: NetworkModel, plan: SelectionPlan, gains: GainVector) -> GlobalModel:
    """Stack the retained rows of every node into one global model."""
    if gains.n != model.n:
        raise DimensionMismatch(f"{gains.n} gains for {model.n} nodes")
    receivers = []
    senders = []
    hs = []
    sig = []
    for k, s in plan.retained:  # already sorted by (receiver, sender)
        receivers.append(k)
        senders.append(s)
        hs.append(model.h[(k, s)])
        noisy = (k != s) or model.noisy_self_link
        sig.append(model.sigma_n_sq if noisy else 0.0)
    return GlobalModel(
        n=model.n,
        row_receiver=np.array(receivers, dtype=int),
        row_sender=np.array(senders, dtype=int),
        row_h=np.array(hs, dtype=complex),
        sigma_rows=np.array(sig, dtype=float),
        v_diag=model.sigma_v_sq.copy(),
        sigma_n_sq=float(model.sigma_n_sq),
        gains=gains,
    )


def _gain_array(a) -> np.ndarray:
    if isinstance(a, GainVector):
        return a.a
    return np.asarray(a, dtype=complex)


def noise_cov_rows(gm: GlobalModel, a) -> np.ndarray:
    """Diagonal of the combined noise covariance under gains ``a``."""
    a = _gain_array(a)
    if a.size != gm.n:
        raise DimensionMismatch(f"{a.size} gains for {gm.n} nodes")
    cov = np.abs(gm.row_h * a[gm.row_sender]) ** 2 * gm.row_sigma_v() + gm.sigma_rows
    if np.any(cov <= 0.0):
        raise SingularCovariance(
            f"zero combined noise in rows {np.nonzero(cov <= 0.0)[0].tolist()}"
        )
    return cov


def information_total(gm: GlobalModel, a) -> float:
    """Global Fisher information: sum over rows of |h a|^2 / cov."""
    a = _gain_array(a)
    cov = noise_cov_rows(gm, a)
    return float(np.sum(np.abs(gm.row_h * a[gm.row_sender]) ** 2 / cov))


def ml_estimate(y: np.ndarray, gm: GlobalModel, gains=None) -> complex:
    """Centralized ML estimate of the parameter from the received vector."""
    a = gm.gains.a if gains is None else _gain_array(gains)
    y = np.asarray(y, dtype=complex)
    if y.size != gm.m:
        raise DimensionMismatch(f"received vector has {y.size} entries for {gm.m} rows")
    cov = noise_cov_rows(gm, a)
    signal = gm.row_h * a[gm.row_sender]
    info = float(np.sum(np.abs(signal) ** 2 / cov))
    if info <= 0.0:
        raise ZeroInformation("total information is zero")
    return complex(np.sum(np.conj(signal) * y / cov) / info)


def ml_variance(gm: GlobalModel, gains=None) -> float:
    """Variance of the centralized ML estimate: reciprocal information."""
    a = gm.gains.a if gains is None else _gain_array(gains)
    info = information_total(gm, a)
    if info <= 0.0:
        raise ZeroInformation("total information is zero")
    return 1.0 / info


def decompose_information(gm: GlobalModel, gains=None, y=None):
    """Split the global information across receivers.

    Returns the per-node information values ``I_i(0)`` (each node's share
    over its retained rows) and, when a received vector ``y`` is given,
    the per-node projections ``P_i(0)``.  Because the rows partition by
    receiver, the sums reproduce the global quantities exactly:
    ``sum(I) == information_total`` and ``sum(P)`` equals the global
    matched-filter projection.
    """
    a = gm.gains.a if gains is None else _gain_array(gains)
    cov = noise_cov_rows(gm, a)
    signal = gm.row_h * a[gm.row_sender]
    info_rows = np.abs(signal) ** 2 / cov
    I0 = np.zeros(gm.n)
    np.add.at(I0, gm.row_receiver, info_rows)
    if y is None:
        return I0
    y = np.asarray(y, dtype=complex)
    if y.size != gm.m:
        raise DimensionMismatch(f"received vector has {y.size} entries for {gm.m} rows")
    proj_rows = np.conj(signal) * y / cov
    P0 = np.zeros(gm.n, dtype=complex)
    np.add.at(P0, gm.row_receiver, proj_rows)
    return I0, P0


def sample_received(
    model: NetworkModel,
    gm: GlobalModel,
    gains=None,
    *,
    size: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Draw received vectors for the retained rows.

    Each row gets an independent observation-noise draw (variance of the
    sender's sensor) and, on noisy rows, an independent transmission-noise
    draw.  Returns shape ``(M,)`` or ``(size, M)``; deterministic per
    seed.
    """
    a = gm.gains.a if gains is None else _gain_array(gains)
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    shape = (1 if size is None else size, gm.m)
    sv = np.sqrt(gm.row_sigma_v() / 2.0)
    v = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * sv
    sn = np.sqrt(gm.sigma_rows / 2.0)
    w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * sn
    signal = gm.row_h * a[gm.row_sender]
    y = signal * (model.theta + v) + w
    return y[0] if size is None else y


def plan_to_json(plan: SelectionPlan) -> str:
    doc = {"retained": [[k, s] for k, s in plan.retained], "r": plan.r}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def global_model_to_json(gm: GlobalModel) -> str:
    doc = {
        "n": gm.n,
        "m": gm.m,
        "row_map": [[r, k, s] for r, k, s in gm.row_map],
        "row_h": [[z.real, z.imag] for z in gm.row_h.tolist()],
        "sigma_rows": gm.sigma_rows.tolist(),
        "v_diag": gm.v_diag.tolist(),
        "sigma_n_sq": gm.sigma_n_sq,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
