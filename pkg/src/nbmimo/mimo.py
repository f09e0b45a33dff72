"""Uplink multiuser MIMO system model.

Complex model ``y_c = H_c x_c + w_c`` and its real-valued form
``y = H x + w`` with ``H = [[Re, -Im], [Im, Re]]`` and
``x = [Re(x_c); Im(x_c)]``.  Each complex M-QAM symbol is a pair of
sqrt(M)-PAM "rails"; rail ``j`` and rail ``j + K`` belong to user ``j``.

SNR convention
--------------
``gamma = sum_j(sigma_j**2) * Es / N0`` measured per receive antenna, with
``Es`` the mean complex constellation energy and ``N0`` the complex noise
variance.  Each real noise component therefore has variance ``N0 / 2``;
that per-real-component value is what :class:`RealSystem` stores as
``noise_var`` and what every detector consumes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .galois import GfField

SUPPORTED_QAM = (4, 16, 64, 256)


@dataclass(frozen=True, eq=False)
class PamAlphabet:
    """The sqrt(M) real levels {+-1, +-3, ..., +-(sqrt(M)-1)}, ascending."""

    m: int
    levels: np.ndarray

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def bits(self) -> int:
        """Bits carried per rail."""
        return self.size.bit_length() - 1

    @property
    def energy(self) -> float:
        """Mean of levels**2 (energy per rail)."""
        return float(np.mean(self.levels**2))

    @property
    def symbol_energy(self) -> float:
        """Mean complex M-QAM symbol energy."""
        return 2.0 * self.energy

    @property
    def gray_labels(self) -> np.ndarray:
        """Gray label of each level, in level order."""
        i = np.arange(self.size)
        return i ^ (i >> 1)

    @property
    def label_to_index(self) -> np.ndarray:
        return np.argsort(self.gray_labels)

    def slice(self, x: np.ndarray) -> np.ndarray:
        """Index of the nearest level for every entry of ``x``."""
        idx = np.rint((np.asarray(x) + self.size - 1) / 2.0)
        return np.clip(idx, 0, self.size - 1).astype(np.int64)


def pam_alphabet(m: int) -> PamAlphabet:
    root = int(round(np.sqrt(m))) if m > 0 else 0
    if root < 2 or root * root != m or root & (root - 1):
        raise ConfigurationError(f"QAM order must be an even power of two, got {m}")
    levels = np.arange(-(root - 1), root, 2, dtype=np.float64)
    levels.setflags(write=False)
    return PamAlphabet(int(m), levels)


@dataclass(frozen=True, eq=False)
class ComplexChannel:
    entries: np.ndarray
    user_variances: np.ndarray

    @property
    def n_rx(self) -> int:
        return self.entries.shape[-2]

    @property
    def n_users(self) -> int:
        return self.entries.shape[-1]


@dataclass(frozen=True, eq=False)
class SnrSpec:
    avg_snr_db: float
    symbol_energy: float

    def __post_init__(self):
        if not np.isfinite(self.avg_snr_db):
            raise ConfigurationError("avg_snr_db must be finite")


@dataclass(frozen=True, eq=False)
class RealSystem:
    """Real-valued system; arrays may carry one leading batch axis.

    ``h`` is (..., 2N, 2K), ``x`` and ``y`` are (..., 2K) and (..., 2N),
    ``noise_var`` is the variance of each real noise component.
    """

    h: np.ndarray
    x: np.ndarray | None
    y: np.ndarray | None
    noise_var: float | np.ndarray

    @property
    def n2(self) -> int:
        return self.h.shape[-2]

    @property
    def k2(self) -> int:
        return self.h.shape[-1]

    @property
    def batched(self) -> bool:
        return self.h.ndim == 3


def _check_variances(k, user_variances):
    if user_variances is None:
        return np.ones(k)
    var = np.asarray(user_variances, dtype=np.float64)
    if var.shape != (k,) or np.any(var <= 0) or abs(var.sum() - k) > 1e-9:
        raise ConfigurationError("user variances must be positive and sum to K")
    return var


def realify(hc: np.ndarray) -> np.ndarray:
    """Real 2N x 2K block form of a complex N x K matrix (batch-aware)."""
    hc = np.asarray(hc)
    re, im = hc.real, hc.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def realify_vector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1)


def complexify_vector(v: np.ndarray) -> np.ndarray:
    half = v.shape[-1] // 2
    return v[..., :half] + 1j * v[..., half:]


def draw_channel(n: int, k: int, user_variances=None, rng_seed=None, size=None):
    """I.i.d. circular complex Gaussian channel, column ``j`` of variance sigma_j**2.

    With ``size`` set, ``entries`` gains a leading axis of that length.
    """
    var = _check_variances(k, user_variances)
    rng = np.random.default_rng(rng_seed)
    shape = (n, k) if size is None else (size, n, k)
    scale = np.sqrt(var / 2.0)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return ComplexChannel(g * scale, var)


def noise_variance(snr: SnrSpec, total_user_variance: float) -> float:
    """Per-real-component noise variance N0/2 for the given SNR."""
    n0 = total_user_variance * snr.symbol_energy / 10.0 ** (snr.avg_snr_db / 10.0)
    return n0 / 2.0


def _rail_split(f: GfField, m: int):
    if f.q != m:
        raise ConfigurationError(f"field size {f.q} must equal QAM order {m}")
    return pam_alphabet(m), f.beta // 2


def symbols_to_levels(f: GfField, symbols, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Level indices (in-phase, quadrature) for GF(q) symbols.

    The upper beta/2 label bits pick the in-phase Gray label, the lower
    beta/2 bits the quadrature one.
    """
    alpha, half = _rail_split(f, m)
    s = np.asarray(symbols, dtype=np.int64)
    lab = alpha.label_to_index
    return lab[s >> half], lab[s & ((1 << half) - 1)]


def levels_to_symbols(f: GfField, i_idx, q_idx, m: int) -> np.ndarray:
    alpha, half = _rail_split(f, m)
    g = alpha.gray_labels
    return (g[np.asarray(i_idx)] << half) | g[np.asarray(q_idx)]


def modulate(f: GfField, symbols, m: int) -> np.ndarray:
    """Map GF(q) symbols onto Gray-labeled M-QAM points (q == M)."""
    alpha = pam_alphabet(m)
    i_idx, q_idx = symbols_to_levels(f, symbols, m)
    return alpha.levels[i_idx] + 1j * alpha.levels[q_idx]


def demodulate(f: GfField, points, m: int) -> np.ndarray:
    """Nearest-point inverse of :func:`modulate`."""
    alpha = pam_alphabet(m)
    points = np.asarray(points)
    return levels_to_symbols(f, alpha.slice(points.real), alpha.slice(points.imag), m)


def transmit(h: np.ndarray, x: np.ndarray, snr: SnrSpec | None, rng_seed=None,
             user_variances=None) -> RealSystem:
    """Form ``y = H x + w`` in the real domain.

    ``snr=None`` means noiseless.  ``h`` is real (..., 2N, 2K); ``x`` real
    (..., 2K).
    """
    h = np.asarray(h, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    clean = np.einsum("...ij,...j->...i", h, x)
    if snr is None:
        return RealSystem(h, x, clean, 0.0)
    k = h.shape[-1] // 2
    total = k if user_variances is None else float(np.sum(user_variances))
    nv = noise_variance(snr, total)
    rng = np.random.default_rng(rng_seed)
    w = rng.standard_normal(clean.shape) * np.sqrt(nv)
    return RealSystem(h, x, clean + w, nv)


def random_symbols(alpha: PamAlphabet, k2: int, rng, size=None) -> np.ndarray:
    """Level indices for ``k2`` rails (optionally batched)."""
    shape = (k2,) if size is None else (size, k2)
    return rng.integers(0, alpha.size, shape)


def rail_bits(alpha: PamAlphabet, idx: np.ndarray) -> np.ndarray:
    """Gray label bits of level indices, shape (..., bits), LSB first."""
    lab = alpha.gray_labels[np.asarray(idx)]
    return (lab[..., None] >> np.arange(alpha.bits)) & 1
