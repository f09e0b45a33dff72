"""Reference detectors: matched filter, zero forcing, MMSE and bit-level BP."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .mimo import PamAlphabet, RealSystem, pam_alphabet
from .nbbp import NbbpConfig, OpCounter, PosteriorTable, detect


class LinearDetectorKind(str, Enum):
    MF = "mf"
    ZF = "zf"
    MMSE = "mmse"


@dataclass(frozen=True, eq=False)
class LinearResult:
    estimate: np.ndarray
    indices: np.ndarray
    posterior: PosteriorTable
    failures: int = 0


def _gram(h):
    ht = np.swapaxes(h, -1, -2)
    return ht @ h, ht


def _solve(a, b):
    """Batched solve; singular systems come back as NaN rows plus a count."""
    try:
        return np.linalg.solve(a, b[..., None])[..., 0], 0
    except np.linalg.LinAlgError:
        pass
    a2 = a.reshape((-1,) + a.shape[-2:])
    b2 = b.reshape((-1, b.shape[-1]))
    out = np.full(b2.shape, np.nan)
    bad = 0
    for t in range(len(a2)):
        try:
            out[t] = np.linalg.solve(a2[t], b2[t])
        except np.linalg.LinAlgError:
            bad += 1
    return out.reshape(b.shape), bad


def _point_mass(idx, alphabet):
    p = np.zeros(idx.shape + (alphabet.size,))
    np.put_along_axis(p, idx[..., None], 1.0, axis=-1)
    return PosteriorTable(p, np.zeros(idx.shape), alphabet)


def _gaussian_posterior(xhat, gain, spread, alphabet):
    """P(s) proportional to exp(-(xhat - gain*s)**2 / (2*spread))."""
    spread = np.maximum(spread, 1e-300)
    d = xhat[..., None] - gain[..., None] * alphabet.levels
    logp = -0.5 * d * d / spread[..., None]
    peak = logp.max(axis=-1, keepdims=True)
    e = np.exp(logp - peak)
    z = e.sum(axis=-1, keepdims=True)
    return PosteriorTable(e / z, (np.log(z) + peak)[..., 0], alphabet)


def linear_detect(kind, sys: RealSystem, alphabet: PamAlphabet | None = None, m: int = 16,
                  soft: bool = False, counter: OpCounter | None = None) -> LinearResult:
    """MF, ZF or MMSE estimate of ``x`` followed by slicing.

    With ``soft=False`` the posterior is a point mass on the sliced level.
    With ``soft=True`` each estimate is modeled as ``gain * x_j`` plus
    Gaussian noise of the detector's post-filter variance, which gives a
    usable soft input for a decoder.
    """
    kind = LinearDetectorKind(kind)
    alphabet = alphabet or pam_alphabet(m)
    es = alphabet.energy
    h = np.asarray(sys.h, dtype=np.float64)
    nv = np.asarray(sys.noise_var, dtype=np.float64)
    nvb = nv.reshape(nv.shape + (1,))
    k2, n2 = h.shape[-1], h.shape[-2]
    gram, ht = _gram(h)
    hty = np.einsum("...ji,...j->...i", h, sys.y)
    failures = 0
    if counter is not None:
        counter.add(n2 * k2)  # H^T y
        if kind is not LinearDetectorKind.MF:
            # Gram matrix, explicit inverse, and applying it
            counter.add(n2 * k2 * k2 + k2**3 + k2 * k2)
        else:
            counter.add(n2 * k2 + k2)

    if kind is LinearDetectorKind.MF:
        norms = np.diagonal(gram, axis1=-2, axis2=-1)
        xhat = hty / norms
        gain = np.ones_like(xhat)
        if soft:
            cross = gram**2
            interf = (cross.sum(axis=-1) - norms**2) * es
            spread = (interf + nvb * norms) / norms**2
    else:
        reg = np.zeros_like(nvb) if kind is LinearDetectorKind.ZF else nvb / es
        a = gram + reg[..., None] * np.eye(k2)
        xhat, failures = _solve(a, hty)
        gain = np.ones_like(xhat)
        if soft:
            inv_diag = np.diagonal(np.linalg.pinv(a), axis1=-2, axis2=-1)
            if kind is LinearDetectorKind.ZF:
                spread = nvb * inv_diag
            else:
                gain = 1.0 - reg * inv_diag
                spread = es * gain * (1.0 - gain)

    idx = alphabet.slice(np.nan_to_num(xhat))
    if soft:
        post = _gaussian_posterior(np.nan_to_num(xhat), gain, spread, alphabet)
    else:
        post = _point_mass(idx, alphabet)
    return LinearResult(xhat, idx, post, failures)


def bit_weights(m: int) -> np.ndarray:
    """Weights [1, 2, ..., 2**(beta/2 - 1)] expressing a rail as a sum of +-1 bits."""
    alpha = pam_alphabet(m)
    return 2.0 ** np.arange(alpha.bits)


def bit_level_channel(h: np.ndarray, m: int) -> np.ndarray:
    """H (I kron m): column ``j * bits + p`` is ``m_p`` times column ``j``."""
    w = bit_weights(m)
    hb = h[..., :, :, None] * w
    return hb.reshape(h.shape[:-1] + (h.shape[-1] * len(w),))


def bbp_detect(sys: RealSystem, m: int = 16, config: NbbpConfig | None = None,
               counter: OpCounter | None = None) -> np.ndarray:
    """Bit-level BP with scalar Gaussian interference approximation.

    Each rail value is written as ``sum_p 2**p * b_p`` with ``b_p`` in
    {-1, +1}; the expanded system is detected with binary messages.
    Returns Pr(b_p = +1) with shape (..., 2K, beta/2).
    """
    alpha = pam_alphabet(m)
    if alpha.bits < 1:
        raise ConfigurationError("QAM order too small")
    hb = bit_level_channel(np.asarray(sys.h, dtype=np.float64), m)
    expanded = RealSystem(hb, None, sys.y, sys.noise_var)
    post = detect(expanded, config, alphabet=pam_alphabet(4), counter=counter)
    p_plus = post.p[..., 1]
    return p_plus.reshape(p_plus.shape[:-1] + (sys.h.shape[-1], alpha.bits))


def bbp_rail_indices(bit_probs: np.ndarray) -> np.ndarray:
    """Hard rail level indices from B-BP bit probabilities.

    Bit ``p`` set means b_p = +1, so the level index is the natural binary
    number formed by the hard bits; Gray relabeling happens downstream.
    """
    hard = (bit_probs > 0.5).astype(np.int64)
    return (hard << np.arange(hard.shape[-1])).sum(axis=-1)


def slice_to_alphabet(x: np.ndarray, alphabet: PamAlphabet) -> np.ndarray:
    return alphabet.levels[alphabet.slice(x)]


DETECTOR_KINDS = ("nbbp", "bbp", "mmse", "zf", "mf")


def hard_detect(kind: str, sys: RealSystem, m: int = 16, config: NbbpConfig | None = None) -> np.ndarray:
    """Rail level indices from any supported detector."""
    if kind == "nbbp":
        return detect(sys, config, m=m).decisions()
    if kind == "bbp":
        return bbp_rail_indices(bbp_detect(sys, m, config))
    if kind in ("mmse", "zf", "mf"):
        return linear_detect(kind, sys, m=m).indices
    raise ConfigurationError(f"unknown detector {kind!r}; expected one of {DETECTOR_KINDS}")


def soft_detect(kind: str, sys: RealSystem, m: int = 16, config: NbbpConfig | None = None) -> np.ndarray:
    """Rail level probabilities (..., 2K, sqrt(M)) for feeding a decoder."""
    if kind == "nbbp":
        return detect(sys, config, m=m).p
    if kind == "bbp":
        p_plus = bbp_detect(sys, m, config)
        bits = p_plus.shape[-1]
        nat = np.arange(1 << bits)
        on = (nat[:, None] >> np.arange(bits)) & 1  # level index -> bits
        return np.prod(np.where(on, p_plus[..., None, :], 1.0 - p_plus[..., None, :]), axis=-1)
    if kind in ("mmse", "zf", "mf"):
        return linear_detect(kind, sys, m=m, soft=True).posterior.p
    raise ConfigurationError(f"unknown detector {kind!r}; expected one of {DETECTOR_KINDS}")
