"""One-ring correlated channel synthesis and covariance computation.

A UE/sector link is a superposition of L paths; each path has an iid
complex Gaussian gain and an angle drawn uniformly from the link's AoA
interval. The per-path large-scale factor combines free-space path loss
with a parabolic sector antenna pattern evaluated at the path angle's
offset from the sector boresight.

Covariances are available on two routes: a deterministic Gauss-Legendre
quadrature of the defining integral, and a plain sample average over
channel draws, which serves as the independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import block_diag

from .scenario import Scenario, SystemConfig, UserRecord, sector_orientations


@dataclass(frozen=True)
class AntennaPattern:
    """Parabolic sector pattern: gain, attenuation floor and beamwidth."""

    g_max_db: float
    a_max_db: float
    theta_3db: float  # radians

    @classmethod
    def from_config(cls, config: SystemConfig) -> "AntennaPattern":
        return cls(config.g_a_max_db, config.a_max_db, config.theta_3db)


@lru_cache(maxsize=8)
def _leggauss(points: int):
    """Gauss-Legendre nodes/weights; cached, the node count rarely varies."""
    return np.polynomial.legendre.leggauss(points)


def wrap_angle(angle):
    """Wrap an angle (or array) to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(angle), 2.0 * np.pi)


def array_response(theta: float, m: int, delta_r: float) -> np.ndarray:
    """ULA steering vector for arrival angle ``theta``.

    Entry i has unit modulus and phase -2*pi*i*delta_r*cos(theta).
    """
    phase = -2.0 * np.pi * delta_r * np.arange(m) * np.cos(theta)
    return np.exp(1j * phase)


def _steering_matrix(thetas: np.ndarray, m: int, delta_r: float) -> np.ndarray:
    """Stack of steering vectors, shape (m, len(thetas))."""
    phase = -2.0 * np.pi * delta_r * np.outer(np.arange(m), np.cos(thetas))
    return np.exp(1j * phase)


def antenna_gain_db(theta, boresight: float, pattern: AntennaPattern):
    """Sector antenna gain in dB at arrival angle ``theta``.

    The pattern argument is the offset from the sector boresight wrapped
    to (-pi, pi]; attenuation is quadratic in that offset and clipped at
    the maximum attenuation.
    """
    offset = wrap_angle(np.asarray(theta, dtype=float) - boresight)
    att = np.minimum(12.0 * (offset / pattern.theta_3db) ** 2, pattern.a_max_db)
    return pattern.g_max_db - att


def path_gain(distance, wavelength: float, gain_db):
    """Free-space large-scale factor: 10^(G/10) * (lambda / (4 pi d))^2."""
    if np.any(np.asarray(distance) <= 0):
        raise ValueError("distance must be > 0")
    return 10.0 ** (np.asarray(gain_db, dtype=float) / 10.0) * (
        wavelength / (4.0 * np.pi * np.asarray(distance))
    ) ** 2


def _link_gains(user: UserRecord, sector: int, config: SystemConfig,
                thetas: np.ndarray) -> np.ndarray:
    """Linear large-scale factor of each path angle on one UE/sector link."""
    pattern = AntennaPattern.from_config(config)
    orient = sector_orientations(config.S)[sector]
    g_db = antenna_gain_db(thetas, orient, pattern)
    return path_gain(user.distance, config.wavelength, g_db)


def sample_channel(user: UserRecord, sector: int, config: SystemConfig,
                   rng: np.random.Generator) -> np.ndarray:
    """One realization of the M-dim channel of a UE/sector link.

    Sum of L paths with iid CN(0,1) gains and angles uniform on the
    link's AoA interval, scaled by 1/sqrt(L).
    """
    lo = float(user.aoa_low[sector])
    hi = float(user.aoa_high[sector])
    thetas = rng.uniform(lo, hi, size=config.L)
    alphas = (rng.standard_normal(config.L) + 1j * rng.standard_normal(config.L)) / math.sqrt(2.0)
    betas = _link_gains(user, sector, config, thetas)
    steer = _steering_matrix(thetas, config.M, config.delta_r)
    return steer @ (np.sqrt(betas) * alphas) / math.sqrt(config.L)


def sample_channel_block(user: UserRecord, sector: int, config: SystemConfig,
                         rng: np.random.Generator, draws: int,
                         chunk: int = 4096) -> np.ndarray:
    """(draws, M) stack of independent `sample_channel` realizations.

    Batched sampler for Monte Carlo estimates; draws angles and gains in
    chunks to bound peak memory.
    """
    lo = float(user.aoa_low[sector])
    hi = float(user.aoa_high[sector])
    out = np.empty((draws, config.M), dtype=complex)
    done = 0
    while done < draws:
        t = min(chunk, draws - done)
        thetas = rng.uniform(lo, hi, size=(t, config.L))
        alphas = (rng.standard_normal((t, config.L))
                  + 1j * rng.standard_normal((t, config.L))) / math.sqrt(2.0)
        betas = _link_gains(user, sector, config, thetas)
        weights = np.sqrt(betas) * alphas / math.sqrt(config.L)
        steer = np.exp(-2j * np.pi * config.delta_r
                       * np.cos(thetas)[:, :, None] * np.arange(config.M))
        out[done:done + t] = np.einsum("tlm,tl->tm", steer, weights)
        done += t
    return out


def sample_channel_matrix(scenario: Scenario, active_idx: np.ndarray,
                          rng: np.random.Generator) -> np.ndarray:
    """Compound channel matrix (M*S, K) for the given active UEs.

    Vectorised equivalent of stacking `sample_channel` over sectors for
    each active UE; sector blocks are concatenated in sector order.
    """
    cfg = scenario.config
    k = len(active_idx)
    m, s, l = cfg.M, cfg.S, cfg.L

    lo = scenario.aoa_low[active_idx][:, :, None]        # (K, S, 1)
    hi = scenario.aoa_high[active_idx][:, :, None]
    thetas = rng.uniform(lo, hi, size=(k, s, l))
    alphas = (rng.standard_normal((k, s, l)) + 1j * rng.standard_normal((k, s, l))) / math.sqrt(2.0)

    pattern = AntennaPattern.from_config(cfg)
    orient = scenario.sector_orient[None, :, None]       # (1, S, 1)
    g_db = antenna_gain_db(thetas - orient, 0.0, pattern)
    betas = path_gain(scenario.distances[active_idx][:, None, None], cfg.wavelength, g_db)

    phase = -2.0 * np.pi * cfg.delta_r * np.arange(m)[:, None, None, None] * np.cos(thetas)[None]
    steer = np.exp(1j * phase)                           # (M, K, S, L)
    weights = np.sqrt(betas) * alphas / math.sqrt(l)     # (K, S, L)
    h = np.einsum("mksl,ksl->ksm", steer, weights)       # (K, S, M)
    return h.reshape(k, s * m).T.copy()                  # (MS, K)


def analytic_covariance(user: UserRecord, sector: int, config: SystemConfig,
                        quadrature_points: int | None = None) -> np.ndarray:
    """Channel covariance of one UE/sector link by deterministic quadrature.

    Averages beta(theta) * a(theta) a(theta)^H over the uniform AoA
    interval with Gauss-Legendre nodes; the zero-spread interval reduces
    to the exact rank-1 matrix at the incident angle.
    """
    q = config.quadrature_points if quadrature_points is None else quadrature_points
    if q < 2:
        raise ValueError("quadrature_points must be >= 2")
    lo = float(user.aoa_low[sector])
    hi = float(user.aoa_high[sector])
    if hi <= lo:
        theta = float(user.boresight_angles[sector])
        a = array_response(theta, config.M, config.delta_r)
        beta = float(_link_gains(user, sector, config, np.array([theta]))[0])
        r = beta * np.outer(a, a.conj())
        return 0.5 * (r + r.conj().T)

    nodes, weights = _leggauss(q)
    thetas = 0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes
    # Interval average: GL weights sum to 2, so the uniform density cancels.
    w = 0.5 * weights * _link_gains(user, sector, config, thetas)
    steer = _steering_matrix(thetas, config.M, config.delta_r)
    r = (steer * w) @ steer.conj().T
    return 0.5 * (r + r.conj().T)


def compound_covariance(user: UserRecord, config: SystemConfig,
                        quadrature_points: int | None = None) -> np.ndarray:
    """Block-diagonal M*S covariance of the compound channel of one UE.

    Sector links are statistically independent, so cross-sector blocks
    are exactly zero.
    """
    blocks = [analytic_covariance(user, s, config, quadrature_points)
              for s in range(config.S)]
    return block_diag(*blocks)


@dataclass(frozen=True)
class CovarianceSet:
    """Per-UE compound channel covariances, stored as sector blocks.

    `blocks[n, s]` is the M-by-M covariance of UE n's link to sector s;
    the compound covariance is block-diagonal with those blocks, with
    structurally zero off-diagonal sector blocks.
    """

    blocks: np.ndarray  # (N, S, M, M) complex
    block_diagonal: bool = True

    @property
    def n_users(self) -> int:
        return self.blocks.shape[0]

    @property
    def n_sectors(self) -> int:
        return self.blocks.shape[1]

    @property
    def antennas(self) -> int:
        return self.blocks.shape[2]

    @property
    def compound_dim(self) -> int:
        return self.n_sectors * self.antennas

    def compound(self, n: int) -> np.ndarray:
        """Dense (M*S, M*S) covariance of UE n."""
        return block_diag(*self.blocks[n])


def covariance_set(scenario: Scenario, quadrature_points: int | None = None) -> CovarianceSet:
    """Analytic covariances of all N UEs."""
    cfg = scenario.config
    blocks = np.empty((scenario.n_users, cfg.S, cfg.M, cfg.M), dtype=complex)
    for n in range(scenario.n_users):
        user = scenario.user(n)
        for s in range(cfg.S):
            blocks[n, s] = analytic_covariance(user, s, cfg, quadrature_points)
    return CovarianceSet(blocks=blocks)


def sample_covariance(samples) -> np.ndarray:
    """Sample average (1/T) sum h h^H over channel draws, symmetrised.

    Accepts a sequence of vectors or a (T, dim) array.
    """
    x = np.asarray(samples)
    if x.ndim == 1:
        x = x[None, :]
    if x.size == 0 or x.shape[0] == 0:
        raise ValueError("sample_covariance needs at least one sample")
    r = x.T @ x.conj() / x.shape[0]
    return 0.5 * (r + r.conj().T)
