"""Pilot transmission, LMMSE channel estimation and uplink detection.

All matrix inverses are realised as Hermitian positive-definite solves;
an explicit ridge is added (and logged) only when the configured noise
power is exactly zero, which is the one case where the systems can be
singular.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, hadamard

logger = logging.getLogger(__name__)

# Unit-average-energy alphabets; all power scaling is carried by p_u.
QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2.0)
BPSK = np.array([1.0 + 0j, -1.0 + 0j])
CONSTELLATIONS = {"qpsk": QPSK, "bpsk": BPSK}


@dataclass(frozen=True)
class PilotBook:
    """tau orthogonal unit-modulus pilot sequences, stacked as columns."""

    matrix: np.ndarray  # (tau, tau) complex

    @property
    def tau(self) -> int:
        return self.matrix.shape[0]

    def sequence(self, pilot_index: int) -> np.ndarray:
        """Pilot column for a 1-based pilot index."""
        return self.matrix[:, pilot_index - 1]


def build_pilot_book(tau: int) -> PilotBook:
    """Orthogonal unit-modulus pilot book with Gram tau*I.

    Power-of-two lengths use the real Hadamard (BPSK) alphabet; other
    lengths fall back to the DFT book, which keeps the same correlation
    algebra with a complex alphabet. The choice is logged.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if tau & (tau - 1) == 0:
        book = hadamard(tau).astype(complex)
        logger.info("pilot book: Hadamard (BPSK alphabet), tau=%d", tau)
    else:
        grid = np.arange(tau)
        book = np.exp(-2j * np.pi * np.outer(grid, grid) / tau)
        logger.info("pilot book: DFT (tau=%d is not a power of two)", tau)
    return PilotBook(matrix=book)


def complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly symmetric complex Gaussian noise, per-entry variance as given."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def pilot_signal_matrix(active_pilots: np.ndarray, book: PilotBook, p_u: float) -> np.ndarray:
    """(K, tau) matrix whose rows are the active UEs' scaled pilot sequences."""
    return math.sqrt(p_u) * book.matrix[:, np.asarray(active_pilots) - 1].T


def pilot_rx(h_active: np.ndarray, active_pilots: np.ndarray, book: PilotBook,
             p_u: float, noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """Received pilot block Y = H Psi + N of shape (M*S, tau).

    ``active_pilots`` holds the 1-based pilot index of each column of the
    compound channel matrix ``h_active``.
    """
    psi = pilot_signal_matrix(active_pilots, book, p_u)
    noise = complex_noise(rng, (h_active.shape[0], book.tau), noise_power)
    return h_active @ psi + noise


def correlate(y: np.ndarray, psi_k: np.ndarray, p_u: float, tau: int) -> np.ndarray:
    """Correlator output (1 / (p_u tau)) Y conj(psi_k) for one UE."""
    return y @ psi_k.conj() / (p_u * tau)


def correlate_all(y: np.ndarray, psi: np.ndarray, p_u: float, tau: int) -> np.ndarray:
    """Correlator outputs of all K active UEs as columns of an (M*S, K) array."""
    return y @ psi.conj().T / (p_u * tau)


def _chol_solve_psd(a: np.ndarray, b: np.ndarray, context: str) -> np.ndarray:
    """Solve a x = b for Hermitian positive-definite a, with logged ridge fallback."""
    try:
        return cho_solve(cho_factor(a, check_finite=False), b, check_finite=False)
    except np.linalg.LinAlgError:
        ridge = 1e-12 * np.trace(a).real / a.shape[0]
        logger.warning("%s: matrix numerically singular, adding ridge %.3e", context, ridge)
        return cho_solve(cho_factor(a + ridge * np.eye(a.shape[0]), check_finite=False),
                         b, check_finite=False)


@dataclass
class EstimationResult:
    """LMMSE estimate of one UE's compound channel plus diagnostics.

    Unpacks as the (estimate, error covariance) pair; `q_condition` is a
    cheap spectral-condition estimate of the correlator covariance from
    its Cholesky factor.
    """

    h_hat: np.ndarray           # (M*S,) complex
    error_cov: np.ndarray       # (M*S, M*S) Hermitian PSD
    q_condition: float

    def __iter__(self):
        return iter((self.h_hat, self.error_cov))


def estimator_matrices(r_k: np.ndarray, interferer_covs, pilot_noise_var: float):
    """Estimation matrix R_k Q_k^{-1} and error covariance for one UE.

    Q_k is the covariance of the correlator output: the UE's own
    covariance plus those of its active co-pilot interferers plus the
    scaled noise. Returns (estimation matrix, error covariance).
    """
    est, err, _ = _estimator_with_condition(r_k, interferer_covs, pilot_noise_var)
    return est, err


def _estimator_with_condition(r_k, interferer_covs, pilot_noise_var):
    dim = r_k.shape[0]
    q = r_k + pilot_noise_var * np.eye(dim)
    for r_j in interferer_covs:
        q = q + r_j
    if pilot_noise_var == 0.0:
        ridge = 1e-12 * np.trace(q).real / dim
        logger.warning("lmmse_estimate: zero pilot noise, regularising with ridge %.3e", ridge)
        q = q + ridge * np.eye(dim)
    try:
        factor = cho_factor(q, check_finite=False)
    except np.linalg.LinAlgError:
        ridge = 1e-12 * np.trace(q).real / dim
        logger.warning("lmmse_estimate: matrix numerically singular, adding ridge %.3e", ridge)
        q = q + ridge * np.eye(dim)
        factor = cho_factor(q, check_finite=False)
    diag = np.abs(np.diag(factor[0]))
    q_condition = float((diag.max() / diag.min()) ** 2)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("lmmse_estimate: cond(Q) ~ %.3e", q_condition)
    # R_k Q^{-1} = (Q^{-1} R_k)^H for Hermitian R_k, Q.
    est = cho_solve(factor, r_k, check_finite=False).conj().T
    err = r_k - est @ r_k
    err = 0.5 * (err + err.conj().T)
    return est, err, q_condition


def lmmse_estimate(r_k: np.ndarray, interferer_covs, y_p: np.ndarray,
                   p_u: float, tau: int, noise_power: float) -> EstimationResult:
    """LMMSE channel estimate and its error covariance for one UE.

    The estimate is R_k Q_k^{-1} y_p computed through a Hermitian solve,
    and the error covariance is R_k - R_k Q_k^{-1} R_k, symmetrised. The
    result unpacks as (estimate, error covariance).
    """
    est, err, cond = _estimator_with_condition(
        r_k, interferer_covs, noise_power / (p_u * tau))
    return EstimationResult(h_hat=est @ y_p, error_cov=err, q_condition=cond)


def lmmse_combiner(h_hat: np.ndarray, error_cov_sum: np.ndarray,
                   p_u: float, noise_power: float) -> np.ndarray:
    """LMMSE receive combiner W, one column per active UE.

    W solves (H_hat H_hat^H + sum of error covariances + (noise/p_u) I) W = H_hat
    with a single factorisation shared across columns.
    """
    dim = h_hat.shape[0]
    a = h_hat @ h_hat.conj().T + error_cov_sum + (noise_power / p_u) * np.eye(dim)
    if noise_power == 0.0:
        ridge = 1e-12 * np.trace(a).real / dim
        logger.warning("lmmse_combiner: zero noise power, regularising with ridge %.3e", ridge)
        a = a + ridge * np.eye(dim)
    return _chol_solve_psd(a, h_hat, "lmmse_combiner")


@dataclass
class DetectionResult:
    """Combiner, soft symbols, hard decisions and (optionally) per-UE SINR."""

    combiner: np.ndarray            # (M*S, K)
    soft: np.ndarray                # (K,) or (K, T)
    hard: np.ndarray                # same shape, constellation points
    hard_index: np.ndarray          # same shape, int indices into the alphabet
    sinr: np.ndarray | None = None  # (K,)


def slice_symbols(soft: np.ndarray, constellation: np.ndarray) -> np.ndarray:
    """Indices of the nearest constellation points (minimum distance)."""
    dist = np.abs(soft[..., None] - constellation)
    return np.argmin(dist, axis=-1)


def detect(w: np.ndarray, y: np.ndarray, constellation="qpsk") -> DetectionResult:
    """LMMSE detection: soft symbols W^H y plus minimum-distance decisions.

    ``y`` may be a single received vector or a (M*S, T) block of symbols.
    """
    points = CONSTELLATIONS[constellation] if isinstance(constellation, str) else np.asarray(constellation)
    soft = w.conj().T @ y
    idx = slice_symbols(soft, points)
    return DetectionResult(combiner=w, soft=soft, hard=points[idx], hard_index=idx)


def instantaneous_sinr(k: int, w: np.ndarray, h_hat: np.ndarray, error_covs,
                       p_u: float, noise_power: float) -> float:
    """Post-combining SINR of UE k for one channel realization.

    |w_k^H h_hat_k|^2 over the combiner-filtered interference: the other
    UEs' estimated channels, all estimation error covariances and the
    scaled noise.
    """
    w_k = w[:, k]
    h_k = h_hat[:, k]
    dim = h_hat.shape[0]
    b = h_hat @ h_hat.conj().T - np.outer(h_k, h_k.conj())
    for r_err in error_covs:
        b = b + r_err
    b = b + (noise_power / p_u) * np.eye(dim)
    num = abs(np.vdot(w_k, h_k)) ** 2
    den = np.vdot(w_k, b @ w_k).real
    return float(num / den)


def uplink_sinr_all(w: np.ndarray, h_hat: np.ndarray, error_cov_sum: np.ndarray,
                    p_u: float, noise_power: float) -> np.ndarray:
    """Vector of per-UE SINRs sharing one interference-matrix build."""
    dim = h_hat.shape[0]
    a = h_hat @ h_hat.conj().T + error_cov_sum + (noise_power / p_u) * np.eye(dim)
    aw = a @ w
    s = np.einsum("mk,mk->k", w.conj(), h_hat)
    q = np.einsum("mk,mk->k", w.conj(), aw).real
    return (np.abs(s) ** 2) / (q - np.abs(s) ** 2)
