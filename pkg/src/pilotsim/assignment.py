"""Pilot assignment strategies and co-pilot set bookkeeping.

The main scheme walks the UE population as a nearest-neighbour chain in
feature space while handing out pilots in cyclic order, so that UEs
sharing a pilot end up far apart in the feature geometry. Baselines:
balanced random assignment, a greedy max-min-dissimilarity scheduler
operating directly on the dissimilarity matrix, and an exhaustive
optimiser for small instances used as a test oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .features import DissimilarityMatrix, FeatureSet
from .scenario import ActiveSet

logger = logging.getLogger(__name__)

NN_CMD = "NN_CMD"
NN_CHART = "NN_CHART"
NN_POSITION = "NN_POSITION"
RANDOM = "RANDOM"
SGPS = "SGPS"
BRUTE_FORCE = "BRUTE_FORCE"


@dataclass(frozen=True)
class PilotAssignment:
    """Mapping UE index -> pilot index (1-based, in 1..tau)."""

    pilots: np.ndarray          # (N,) int
    n_pilots: int               # tau
    method: str
    seed: int | None = None
    feature_kind: str | None = None
    chain: np.ndarray | None = None  # UE visit order of the greedy chain

    @property
    def n_users(self) -> int:
        return self.pilots.size

    def multiplicities(self) -> np.ndarray:
        """Usage count of each pilot index 1..tau."""
        return np.bincount(self.pilots, minlength=self.n_pilots + 1)[1:]

    def is_balanced(self) -> bool:
        counts = self.multiplicities()
        return counts.max() - counts.min() <= 1


@dataclass(frozen=True)
class CopilotSets:
    """Per active UE: its full pilot group and its active interferers."""

    groups: dict          # active UE k -> np.ndarray of all UEs with k's pilot (incl. k)
    interferers: dict     # active UE k -> np.ndarray of active co-pilot UEs != k

    def group(self, k: int) -> np.ndarray:
        return self.groups[k]

    def interferers_of(self, k: int) -> np.ndarray:
        return self.interferers[k]


def _feature_array(features) -> np.ndarray:
    vec = features.vectors if isinstance(features, FeatureSet) else np.asarray(features, dtype=float)
    if vec.ndim != 2:
        raise ValueError("features must be a 2-D (N, dim) array")
    return np.ascontiguousarray(vec, dtype=float)


def nearest_neighbor_assignment(features, tau: int, rng=None,
                                start: int | None = None) -> PilotAssignment:
    """Greedy nearest-neighbour chain assignment over all N UEs.

    Starting from a random UE, pilots 1..tau are handed out cyclically;
    each next pilot goes to the unassigned UE with the smallest squared
    Euclidean feature distance to the previously assigned one. Distance
    ties break toward the smaller UE index.

    Parameters
    ----------
    features : FeatureSet or (N, dim) array
        One feature vector per UE, active and inactive alike.
    tau : int
        Number of orthogonal pilots.
    rng : np.random.Generator | int | None
        Only consumed to pick the chain's starting UE.
    start : int, optional
        Explicit starting UE; overrides the random draw.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    f = _feature_array(features)
    n = f.shape[0]
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    current = int(gen.integers(n)) if start is None else int(start)

    pilots = np.zeros(n, dtype=int)
    assigned = np.zeros(n, dtype=bool)
    chain = np.empty(n, dtype=int)
    pilots[current] = 1
    assigned[current] = True
    chain[0] = current
    for step in range(1, n):
        diff = f - f[current]
        d2 = np.einsum("ij,ij->i", diff, diff)
        d2[assigned] = np.inf
        current = int(np.argmin(d2))          # first minimum = lowest index
        pilots[current] = step % tau + 1
        assigned[current] = True
        chain[step] = current

    kind = features.kind if isinstance(features, FeatureSet) else None
    method = {"CMD_ROW": NN_CMD, "CHART": NN_CHART, "POSITION": NN_POSITION}.get(kind, "NN")
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("%s chain order: %s", method, chain.tolist())
    return PilotAssignment(pilots=pilots, n_pilots=tau, method=method,
                           feature_kind=kind, chain=chain)


def random_assignment(n: int, tau: int, rng=None, balanced: bool = True) -> PilotAssignment:
    """Uniformly random pilot assignment.

    Balanced mode (default) shuffles the cyclic pilot list so every pilot
    is used floor(N/tau) or ceil(N/tau) times; the iid mode draws each
    UE's pilot independently.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if balanced:
        base = np.arange(n) % tau + 1
        pilots = gen.permutation(base)
    else:
        pilots = gen.integers(1, tau + 1, size=n)
    return PilotAssignment(pilots=pilots, n_pilots=tau, method=RANDOM)


def sgps_assignment(dissimilarity: DissimilarityMatrix, tau: int) -> PilotAssignment:
    """Greedy max-min-dissimilarity pilot scheduling.

    UEs are processed in descending order of total similarity to the
    population; each UE takes the pilot whose current holders are most
    dissimilar to it (empty pilots count as dissimilarity 1), subject to
    the per-pilot cap ceil(N/tau). Deterministic: ordering ties break by
    UE index, pilot ties by pilot index.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    d = dissimilarity.values
    n = d.shape[0]
    cap = math.ceil(n / tau)
    total_similarity = (1.0 - d).sum(axis=1)
    order = np.argsort(-total_similarity, kind="stable")

    members: list[list[int]] = [[] for _ in range(tau)]
    pilots = np.zeros(n, dtype=int)
    for ue in order:
        best_p, best_score = -1, -1.0
        for p in range(tau):
            if len(members[p]) >= cap:
                continue
            score = 1.0 if not members[p] else float(d[ue, members[p]].min())
            if score > best_score:
                best_p, best_score = p, score
        members[best_p].append(int(ue))
        pilots[ue] = best_p + 1
    return PilotAssignment(pilots=pilots, n_pilots=tau, method=SGPS)


def copilot_sets(assignment: PilotAssignment, active: ActiveSet) -> CopilotSets:
    """Pilot groups and active interferer sets for each active UE."""
    pilots = assignment.pilots
    active_idx = np.asarray(active.indices)
    active_mask = np.zeros(assignment.n_users, dtype=bool)
    active_mask[active_idx] = True

    groups = {}
    interferers = {}
    for k in active_idx:
        same = np.flatnonzero(pilots == pilots[k])
        groups[int(k)] = same
        interferers[int(k)] = same[(same != k) & active_mask[same]]
    return CopilotSets(groups=groups, interferers=interferers)


def assignment_objective(dissimilarity: DissimilarityMatrix,
                         assignment: PilotAssignment,
                         active: ActiveSet | None = None) -> float:
    """Minimum dissimilarity over all co-pilot pairs (1.0 if none exist).

    With an active set given, only pairs of active UEs count.
    """
    d = dissimilarity.values
    pilots = assignment.pilots
    idx = np.arange(pilots.size) if active is None else np.asarray(active.indices)
    best = 1.0
    for p in range(1, assignment.n_pilots + 1):
        group = idx[pilots[idx] == p]
        if group.size < 2:
            continue
        sub = d[np.ix_(group, group)]
        iu = np.triu_indices(group.size, k=1)
        best = min(best, float(sub[iu].min()))
    return best


def _balanced_group_sizes(n: int, tau: int) -> list[int]:
    base, extra = divmod(n, tau)
    return [base + 1] * extra + [base] * (tau - extra)


def brute_force_assignment(dissimilarity: DissimilarityMatrix, tau: int,
                           active: ActiveSet | None = None,
                           max_users: int = 12) -> PilotAssignment:
    """Exhaustive maximiser of the min intra-group dissimilarity.

    Test oracle only: enumerates every balanced partition of the UEs into
    tau pilot groups and keeps the one with the largest objective.
    Refuses instances with more than ``max_users`` UEs.
    """
    d = dissimilarity.values
    n = d.shape[0]
    if n > max_users:
        raise ValueError(f"brute_force_assignment is limited to N <= {max_users}")
    sizes = _balanced_group_sizes(n, tau)

    best_pilots: np.ndarray | None = None
    best_obj = -1.0
    pilots = np.zeros(n, dtype=int)

    idx = np.arange(n) if active is None else np.asarray(active.indices)
    active_mask = np.zeros(n, dtype=bool)
    active_mask[idx] = True

    def objective() -> float:
        best = 1.0
        for p in range(1, tau + 1):
            group = np.flatnonzero((pilots == p) & active_mask)
            for a, b in combinations(group, 2):
                best = min(best, float(d[a, b]))
        return best

    def recurse(ue: int, remaining: list[int]) -> None:
        nonlocal best_pilots, best_obj
        if ue == n:
            obj = objective()
            if obj > best_obj:
                best_obj = obj
                best_pilots = pilots.copy()
            return
        seen_fresh_sizes = set()
        for p in range(tau):
            if remaining[p] == 0:
                continue
            if remaining[p] == sizes[p]:
                # untouched groups of equal size are interchangeable
                if sizes[p] in seen_fresh_sizes:
                    continue
                seen_fresh_sizes.add(sizes[p])
            remaining[p] -= 1
            pilots[ue] = p + 1
            recurse(ue + 1, remaining)
            remaining[p] += 1
        pilots[ue] = 0

    recurse(0, list(sizes))
    assert best_pilots is not None
    return PilotAssignment(pilots=best_pilots, n_pilots=tau, method=BRUTE_FORCE)
