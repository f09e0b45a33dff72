"""Pilot-based MMSE channel estimation and iterative estimation/detection.

A frame is one pilot block of K channel uses followed by ``L`` data blocks
of K uses each, all through the same channel.  Matrices here are complex
and column-per-channel-use: ``Y = H X + W`` with ``X`` of shape K x uses.
"""

from dataclasses import dataclass

import numpy as np

from .baselines import hard_detect
from .errors import ConfigurationError
from .mimo import ComplexChannel, RealSystem, SnrSpec, draw_channel, noise_variance, pam_alphabet, realify
from .nbbp import NbbpConfig


def dft_pilots(k: int, symbol_energy: float) -> np.ndarray:
    """Scaled unitary DFT pilots; every entry has power ``symbol_energy``."""
    t = np.arange(k)
    return np.sqrt(symbol_energy) * np.exp(-2j * np.pi * np.outer(t, t) / k)


@dataclass(frozen=True, eq=False)
class Frame:
    """One received frame.

    ``data_indices`` holds rail level indices with shape (L, K uses, 2K);
    ``y_data`` is (L, N, K uses).  ``noise_var`` is per real component.
    """

    pilots: np.ndarray
    data: np.ndarray
    data_indices: np.ndarray
    channel: ComplexChannel
    y_pilot: np.ndarray
    y_data: np.ndarray
    noise_var: float
    m: int

    @property
    def blocks(self) -> int:
        return self.data.shape[0]

    @property
    def channel_uses(self) -> int:
        return (self.blocks + 1) * self.pilots.shape[0]


def make_frame(n: int, k: int, blocks: int, m: int, snr_db: float, seed=None,
               user_variances=None) -> Frame:
    alpha = pam_alphabet(m)
    rng = np.random.default_rng(seed)
    ch = draw_channel(n, k, user_variances, rng_seed=rng)
    nv = noise_variance(SnrSpec(snr_db, alpha.symbol_energy), float(ch.user_variances.sum()))
    pilots = dft_pilots(k, alpha.symbol_energy)
    idx = rng.integers(0, alpha.size, (blocks, k, 2 * k))
    lev = alpha.levels[idx]
    data = lev[..., :k] + 1j * lev[..., k:]  # (L, uses, K)

    def noise(shape):
        return np.sqrt(nv) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    y_pilot = ch.entries @ pilots + noise((n, k))
    y_data = np.einsum("nk,luk->lnu", ch.entries, data) + noise((blocks, n, k))
    return Frame(pilots, data, idx, ch, y_pilot, y_data, nv, m)


def mmse_estimate(y_pilot: np.ndarray, x_pilot: np.ndarray, sigma2: float, prior_var) -> np.ndarray:
    """H_hat = Y X^H (X X^H + sigma2 * diag(1/prior_var))^-1.

    ``sigma2`` is the complex noise variance N0 and ``prior_var`` the
    per-user channel variance (scalar or length K).
    """
    x = np.asarray(x_pilot)
    k = x.shape[0]
    if np.linalg.matrix_rank(x) < k:
        raise ConfigurationError("pilot matrix is rank deficient")
    if np.isinf(sigma2):
        return np.zeros((y_pilot.shape[0], k), dtype=complex)
    prior = np.broadcast_to(np.asarray(prior_var, dtype=np.float64), (k,))
    gram = x @ x.conj().T + np.diag(sigma2 / prior)
    # solve from the right: H_hat gram = Y X^H
    return np.linalg.solve(gram.T, (y_pilot @ x.conj().T).T).T


def refine_estimate(y_all: np.ndarray, detected_data: np.ndarray, pilots: np.ndarray,
                    sigma2: float, prior_var=1.0) -> np.ndarray:
    """MMSE estimate with detected data treated as extra pilots.

    ``y_all`` stacks pilot then data observations column-wise (N x (L+1)K);
    ``detected_data`` is K x LK.  A rank-deficient stack falls back to the
    pilot-only estimate.
    """
    k = pilots.shape[0]
    x = np.concatenate([pilots, detected_data], axis=1)
    if np.linalg.matrix_rank(x) < k:
        return mmse_estimate(y_all[:, :k], pilots, sigma2, prior_var)
    return mmse_estimate(y_all, x, sigma2, prior_var)


@dataclass(frozen=True, eq=False)
class ReceiveResult:
    decisions: np.ndarray
    mse_trace: list
    channel_estimate: np.ndarray


def _detect_blocks(frame: Frame, h_est: np.ndarray, kind: str, config):
    k = frame.pilots.shape[0]
    hr = realify(h_est)
    y = np.swapaxes(frame.y_data, 1, 2).reshape(-1, h_est.shape[0])  # (L*uses, N)
    yr = np.concatenate([y.real, y.imag], axis=-1)
    hb = np.broadcast_to(hr, (len(yr),) + hr.shape)
    sys = RealSystem(hb, None, yr, frame.noise_var)
    idx = hard_detect(kind, sys, frame.m, config)
    return idx.reshape(frame.blocks, k, 2 * k)


def iterative_receive(frame: Frame, detector_kind: str = "nbbp", est_iters: int = 2,
                      config: NbbpConfig | None = None, perfect_csi: bool = False) -> ReceiveResult:
    """Pilot estimate, detect every data block, refine, re-detect.

    Returns rail level indices (L, K uses, 2K), the channel MSE of the
    estimate used in each pass, and the final estimate.  With
    ``perfect_csi`` the true channel is used in every pass.
    """
    if est_iters < 1:
        raise ConfigurationError("est_iters must be >= 1")
    alpha = pam_alphabet(frame.m)
    h_true = frame.channel.entries
    n0 = 2.0 * frame.noise_var
    prior = frame.channel.user_variances
    k = frame.pilots.shape[0]
    h_est = h_true if perfect_csi else mmse_estimate(frame.y_pilot, frame.pilots, n0, prior)
    trace = []
    y_all = np.concatenate([frame.y_pilot] + list(frame.y_data), axis=1)
    for it in range(est_iters):
        trace.append(float(np.mean(np.abs(h_est - h_true) ** 2)))
        idx = _detect_blocks(frame, h_est, detector_kind, config)
        if it == est_iters - 1 or perfect_csi:
            break
        lev = alpha.levels[idx]
        sym = lev[..., :k] + 1j * lev[..., k:]  # (L, uses, K)
        detected = sym.reshape(-1, k).T
        h_est = refine_estimate(y_all, detected, frame.pilots, n0, prior)
    return ReceiveResult(idx, trace, h_est)
