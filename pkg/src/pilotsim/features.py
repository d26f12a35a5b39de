"""Covariance-based UE features feeding the pilot assignment.

Three feature families are produced: rows of the pairwise covariance
dissimilarity matrix, a low-dimensional chart of those rows obtained
with Laplacian Eigenmaps, and the plain UE positions used by the
genie baseline.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import connected_components
from sklearn.manifold import trustworthiness

from .channel import CovarianceSet
from .scenario import Scenario

logger = logging.getLogger(__name__)

CMD_ROW = "CMD_ROW"
CHART = "CHART"
POSITION = "POSITION"
FEATURE_KINDS = (CMD_ROW, CHART, POSITION)


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric N-by-N matrix of pairwise covariance dissimilarities."""

    values: np.ndarray  # (N, N) float, zero diagonal, entries in [0, 1]

    @property
    def n_users(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeatureSet:
    """Per-UE feature vectors of one kind, stacked as rows."""

    kind: str
    vectors: np.ndarray  # (N, dim) float

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("feature vectors must be finite")

    @property
    def n_users(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def cmd(r_a: np.ndarray, r_b: np.ndarray) -> float:
    """Covariance matrix distance between two Hermitian PSD matrices.

    1 - trace(r_a^H r_b) / (||r_a||_F ||r_b||_F); 0 for matrices equal up
    to positive scale, 1 for orthogonal supports. The trace term is an
    elementwise conjugate product, so the matrix product is never formed.
    The result is clamped to [0, 1] against round-off.
    """
    sa = np.vdot(r_a, r_a).real
    sb = np.vdot(r_b, r_b).real
    if sa <= 0.0 or sb <= 0.0:
        raise ValueError("cmd is undefined for a zero matrix")
    t = np.vdot(r_a, r_b).real
    if t <= 0.0:
        # Numerically non-positive trace products clamp to the far end.
        return 1.0
    d = 1.0 - math.sqrt((t * t) / (sa * sb))
    return min(max(d, 0.0), 1.0)


def dissimilarity_matrix(covariances: CovarianceSet) -> DissimilarityMatrix:
    """Pairwise CMD between all UE covariances.

    Exploits the block-diagonal sector structure: the trace product of
    two compound covariances is the sum over sectors of the blockwise
    products, computed as one Gram matrix of the flattened blocks.
    """
    n = covariances.n_users
    if n < 2:
        raise ValueError("dissimilarity_matrix needs at least two UEs")
    x = covariances.blocks.reshape(n, -1)
    gram = (x.conj() @ x.T).real
    power = np.diag(gram).copy()
    bad = np.flatnonzero(power <= 0.0)
    if bad.size:
        n0 = int(bad[0])
        other = 0 if n0 != 0 else 1
        raise ValueError(
            f"cmd is undefined for a zero matrix: covariance of UE {n0} "
            f"(offending pair ({n0}, {other}))"
        )
    ratio = np.square(gram) / np.outer(power, power)
    d = np.where(gram > 0.0, 1.0 - np.sqrt(ratio), 1.0)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    np.clip(d, 0.0, 1.0, out=d)
    return DissimilarityMatrix(values=d)


def cmd_feature(dissimilarity: DissimilarityMatrix) -> FeatureSet:
    """Feature vectors taken directly as the rows of the dissimilarity matrix."""
    return FeatureSet(kind=CMD_ROW, vectors=dissimilarity.values.copy())


def position_feature(scenario: Scenario) -> FeatureSet:
    """Genie feature from exact UE geometry.

    Cartesian positions by default; the "azimuth" config alternative maps
    each UE to the unit vector of its incident angle so that Euclidean
    feature distance is monotone in angular separation.
    """
    if scenario.config.position_feature == "azimuth":
        az = scenario.boresight[:, 0]
        vectors = np.column_stack((np.cos(az), np.sin(az)))
    else:
        vectors = scenario.positions.copy()
    return FeatureSet(kind=POSITION, vectors=vectors)


def _knn_adjacency(d: np.ndarray, neighbors: int) -> np.ndarray:
    """Binary symmetric kNN adjacency; ties broken by lower UE index."""
    n = d.shape[0]
    w = np.zeros((n, n), dtype=float)
    order = np.argsort(d, axis=1, kind="stable")
    for i in range(n):
        picked = [j for j in order[i] if j != i][:neighbors]
        w[i, picked] = 1.0
    return np.maximum(w, w.T)


def _bridge_components(w: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Join disconnected components with minimal-dissimilarity edges.

    For every pair of components the single smallest-dissimilarity
    cross edge is added; each repair is recorded in the run log.
    """
    n_comp, labels = connected_components(scipy.sparse.csr_matrix(w), directed=False)
    if n_comp == 1:
        return w
    w = w.copy()
    for a in range(n_comp):
        for b in range(a + 1, n_comp):
            rows = np.flatnonzero(labels == a)
            cols = np.flatnonzero(labels == b)
            sub = d[np.ix_(rows, cols)]
            i, j = np.unravel_index(np.argmin(sub), sub.shape)
            u, v = int(rows[i]), int(cols[j])
            w[u, v] = w[v, u] = 1.0
            logger.warning(
                "kNN graph disconnected: bridging components %d-%d with edge (%d, %d), d=%.6g",
                a, b, u, v, d[u, v],
            )
    return w


def _fix_sign(vec: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Flip sign so the first component exceeding tol*max is positive."""
    scale = np.max(np.abs(vec))
    if scale == 0.0:
        return vec
    nz = np.flatnonzero(np.abs(vec) > tol * scale)
    if nz.size and vec[nz[0]] < 0:
        return -vec
    return vec


def laplacian_eigenmaps(dissimilarity: DissimilarityMatrix, neighbors: int,
                        chart_dim: int) -> FeatureSet:
    """Spectral chart of the UEs from their dissimilarity matrix.

    Builds the binary kNN graph (union-symmetrised, components bridged if
    needed), forms the unnormalised graph Laplacian and solves the
    generalised eigenproblem against the degree matrix. The chart
    coordinates are the eigenvectors of the smallest 2..chart_dim+1
    eigenvalues, skipping the constant one; each coordinate vector is
    scaled to unit norm with its first nonzero component positive.
    """
    d = dissimilarity.values
    n = d.shape[0]
    if not 1 <= neighbors < n:
        raise ValueError("neighbors must satisfy 1 <= neighbors < N")
    if not 1 <= chart_dim <= n - 2:
        raise ValueError("chart_dim must satisfy 1 <= chart_dim <= N - 2")

    w = _bridge_components(_knn_adjacency(d, neighbors), d)
    deg = w.sum(axis=1)
    lap = np.diag(deg) - w
    try:
        _, vecs = scipy.linalg.eigh(lap, np.diag(deg),
                                    subset_by_index=[0, chart_dim])
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(
            f"chart eigen-solve failed (N={n}, neighbors={neighbors}): {exc}"
        ) from exc

    coords = np.empty((n, chart_dim), dtype=float)
    for c in range(chart_dim):
        v = vecs[:, c + 1]
        v = v / np.linalg.norm(v)
        coords[:, c] = _fix_sign(v)
    return FeatureSet(kind=CHART, vectors=coords)


def chart_quality(chart: FeatureSet, reference: DissimilarityMatrix,
                  neighborhood: int) -> float:
    """Trustworthiness of the chart against the reference dissimilarity.

    1.0 means every chart-space neighbourhood is faithful to the
    reference ranking; random embeddings score near 0.5.
    """
    if neighborhood >= chart.n_users:
        raise ValueError("neighborhood must be < N")
    return float(
        trustworthiness(reference.values, chart.vectors,
                        n_neighbors=neighborhood, metric="precomputed")
    )
