"""EXIT analysis of the joint detector / q-ary LDPC receiver and profile design.

Mutual information is measured per coded bit throughout, so every curve
lives in [0, 1] and the binary J-function links information to the
standard deviation of a consistent Gaussian LLR.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ConfigurationError, DomainError
from .ldpc import DegreeProfile
from .mimo import SnrSpec, draw_channel, noise_variance, pam_alphabet, realify, transmit
from .nbbp import NbbpConfig, bit_probabilities, detect

# J(sigma) = (1 - 2**(-H1 * sigma**(2*H2)))**H3, minimax fit against
# quadrature on sigma in [0.01, 10]; max abs error 4.8e-4.
J_H1 = 0.31000144
J_H2 = 0.89105836
J_H3 = 1.11232096

# c in the detector-free variable-node term c*gamma for q = 16 (gamma linear),
# from tools/calibrate_c.py.
C_CONSTANT_Q16 = 1.1553

# I values are clipped below this before inverting J inside curve formulas.
_I_MAX = 1.0 - 1e-12

# detector curves are measured on a coarse grid and interpolated
DETECTOR_GRID = np.linspace(0.0, 1.0, 11)
DEFAULT_GRID = np.linspace(0.0, 1.0, 101)


def j_function(sigma):
    """Mutual information of a consistent Gaussian LLR with std ``sigma``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise DomainError("sigma must be nonnegative")
    inner = -np.expm1(-J_H1 * sigma ** (2 * J_H2) * np.log(2.0))
    return inner**J_H3


def j_inverse(info):
    """Inverse of :func:`j_function` on [0, 1)."""
    info = np.asarray(info, dtype=np.float64)
    if np.any(info < 0) or np.any(info >= 1):
        raise DomainError("mutual information must lie in [0, 1)")
    # 1 - I**(1/H3), written to keep precision when I is close to 1
    with np.errstate(divide="ignore"):
        tail = -np.expm1(np.log1p(info - 1.0) / J_H3)
        base = -np.log2(np.where(info > 0, tail, 1.0)) / J_H1
    return np.where(info > 0, base ** (1.0 / (2 * J_H2)), 0.0)


def _jinv(info):
    return j_inverse(np.clip(info, 0.0, _I_MAX))


@dataclass(frozen=True, eq=False)
class ExitCurve:
    ia: np.ndarray
    ie: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        ia = np.asarray(self.ia, dtype=np.float64)
        ie = np.asarray(self.ie, dtype=np.float64)
        if ia.shape != ie.shape or ia.ndim != 1:
            raise ConfigurationError("ia and ie must be 1-D arrays of equal length")
        if np.any(np.diff(ia) <= 0) or ia[0] < 0 or ia[-1] > 1:
            raise ConfigurationError("I_A grid must be strictly increasing in [0, 1]")
        object.__setattr__(self, "ia", ia)
        object.__setattr__(self, "ie", np.clip(ie, 0.0, 1.0))

    def at(self, x):
        return np.interp(x, self.ia, self.ie)

    def to_csv(self) -> str:
        ctx = ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        rows = ["i_a,i_e,curve,context"]
        rows += [f"{a:.9g},{e:.9g},{self.kind},{ctx}" for a, e in zip(self.ia, self.ie)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class ExitParams:
    c: float = C_CONSTANT_Q16
    monte_carlo_trials: int = 1024
    ja_model: tuple = (J_H1, J_H2, J_H3)

    def __post_init__(self):
        if self.c <= 0:
            raise ConfigurationError("c must be positive")


# --------------------------------------------------------------------------
# closed-form node curves


def variable_exit(d_v: int, ia=DEFAULT_GRID, c_gamma: float = 0.0) -> ExitCurve:
    """I_E = J(sqrt((d_v - 1) J^-1(I_A)**2 + c*gamma)) with a detector-free channel term."""
    if d_v < 2:
        raise ConfigurationError("d_v must be >= 2")
    ia = np.asarray(ia, dtype=np.float64)
    ie = j_function(np.sqrt((d_v - 1) * _jinv(ia) ** 2 + c_gamma))
    return ExitCurve(ia, ie, "variable", {"d_v": d_v, "c_gamma": c_gamma})


def check_exit(d_c: int, ia=DEFAULT_GRID) -> ExitCurve:
    """I_E = 1 - J(J^-1(1 - I_A) sqrt(d_c - 1))."""
    if d_c < 2:
        raise ConfigurationError("d_c must be >= 2")
    ia = np.asarray(ia, dtype=np.float64)
    ie = 1.0 - j_function(_jinv(1.0 - ia) * np.sqrt(d_c - 1))
    return ExitCurve(ia, ie, "check", {"d_c": d_c})


def detector_input(d_v: int, ia):
    """A priori information reaching the detector from ``d_v`` check messages."""
    return j_function(np.sqrt(d_v) * _jinv(np.asarray(ia, dtype=np.float64)))


def combined_variable_exit(d_v: int, detector_curve: ExitCurve, ia=None) -> ExitCurve:
    """Variable node of degree ``d_v`` merged with the detector.

    ``I_E = J(sqrt((d_v - 1) J^-1(I_A)**2 + J^-1(I_E,det)**2))`` with the
    detector evaluated at the information of all ``d_v`` check messages.
    """
    if d_v < 2:
        raise ConfigurationError("d_v must be >= 2")
    ia = detector_curve.ia if ia is None else np.asarray(ia, dtype=np.float64)
    det = detector_curve.at(detector_input(d_v, ia))
    ie = j_function(np.sqrt((d_v - 1) * _jinv(ia) ** 2 + _jinv(det) ** 2))
    return ExitCurve(ia, ie, "combined", {"d_v": d_v, **detector_curve.params})


def mixture(curves, weights, kind=None) -> ExitCurve:
    """Edge-fraction weighted sum of curves on a common grid."""
    curves = list(curves)
    ia = curves[0].ia
    for c in curves[1:]:
        if not np.array_equal(c.ia, ia):
            raise ConfigurationError("curves must share an I_A grid")
    ie = sum(w * c.ie for w, c in zip(weights, curves))
    return ExitCurve(ia, ie, kind or curves[0].kind, {"mixture": len(curves)})


def profile_check_curve(profile: DegreeProfile, ia=DEFAULT_GRID) -> ExitCurve:
    pairs = profile.check_edge_fractions
    return mixture([check_exit(d, ia) for d, _ in pairs], [w for _, w in pairs], "check")


def profile_combined_curve(profile: DegreeProfile, detector_curve: ExitCurve, ia=None) -> ExitCurve:
    pairs = profile.variable_edge_fractions
    return mixture([combined_variable_exit(d, detector_curve, ia) for d, _ in pairs],
                   [w for _, w in pairs], "combined")


def _check_mix(x, pairs):
    x = np.asarray(x, dtype=np.float64)
    return sum(w * (1.0 - j_function(_jinv(1.0 - x) * np.sqrt(d - 1))) for d, w in pairs)


def check_inverse(pairs, targets) -> np.ndarray:
    """I_A the check mixture needs to output each target I_E."""
    out = []
    for t in np.atleast_1d(targets):
        if t <= 0:
            out.append(0.0)
        elif t >= 1 - 1e-12:
            out.append(1.0)
        else:
            out.append(optimize.brentq(lambda x: _check_mix(x, pairs) - t, 0.0, 1.0, xtol=1e-13))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class Feasibility:
    feasible: bool
    margin: float
    violations: np.ndarray


def check_feasibility(profile: DegreeProfile, detector_curve: ExitCurve, ia=DEFAULT_GRID,
                      tol: float = 1e-6) -> Feasibility:
    """Whether the swapped check curve stays at or below the combined curve.

    At every grid point ``x`` the combined variable curve must reach the
    input the check mixture needs to return ``x``.
    """
    ia = np.asarray(ia, dtype=np.float64)
    need = check_inverse(profile.check_edge_fractions, ia)
    have = profile_combined_curve(profile, detector_curve, ia).ie
    gap = have - need
    bad = ia[gap < -tol]
    live = need < 1.0 - 1e-9
    margin = float(gap[live].min()) if live.any() else 0.0
    return Feasibility(len(bad) == 0, margin, bad)


# --------------------------------------------------------------------------
# Monte-Carlo measurement


def bitwise_mi(llr: np.ndarray, bits: np.ndarray, bins: int = 50) -> float:
    """Histogram estimate of I(B; L) for LLRs ``log P(b=0)/P(b=1)``."""
    llr = np.asarray(llr, dtype=np.float64).ravel()
    bits = np.asarray(bits).ravel().astype(bool)
    if llr.size == 0:
        raise ConfigurationError("no samples")
    llr = np.clip(llr, -60.0, 60.0)
    lo, hi = llr.min(), llr.max()
    if hi - lo < 1e-12:
        return 0.0
    edges = np.linspace(lo, hi + 1e-9, bins + 1)
    info = 0.0
    p_b = np.array([np.mean(~bits), np.mean(bits)])
    hist = [np.histogram(llr[sel], edges)[0] / max(sel.sum(), 1) for sel in (~bits, bits)]
    mix = p_b[0] * hist[0] + p_b[1] * hist[1]
    for b in (0, 1):
        if p_b[b] == 0:
            continue
        h = hist[b]
        nz = h > 0
        info += p_b[b] * np.sum(h[nz] * np.log2(h[nz] / mix[nz]))
    return float(np.clip(info, 0.0, 1.0))


def prior_bit_llrs(bits: np.ndarray, sigma: float, rng) -> np.ndarray:
    """Consistent Gaussian LLRs: mean sigma**2/2 toward the true bit, std sigma."""
    sign = 1.0 - 2.0 * bits
    return sign * sigma * sigma / 2.0 + sigma * rng.standard_normal(bits.shape)


def rail_log_prior(llr: np.ndarray, m: int) -> np.ndarray:
    """Level log-probabilities (..., sqrt(M)) from per-bit LLRs (..., bits)."""
    alpha = pam_alphabet(m)
    lab_bits = (alpha.gray_labels[:, None] >> np.arange(alpha.bits)) & 1  # (S, bits)
    sign = 1.0 - 2.0 * lab_bits
    return 0.5 * np.einsum("...p,sp->...s", llr, sign)


def posterior_llrs(post) -> np.ndarray:
    p1 = np.clip(bit_probabilities(post), 1e-300, 1.0)
    p0 = np.clip(1.0 - bit_probabilities(post), 1e-300, 1.0)
    return np.log(p0) - np.log(p1)


def detector_exit_point(i_a: float, gamma_db: float, k: int, n: int, trials: int, seed,
                        m: int = 16, config: NbbpConfig | None = None) -> float:
    """Extrinsic bit information of NB-BP for one a priori level."""
    alpha = pam_alphabet(m)
    rng = np.random.default_rng(seed)
    uses = -(-trials // k)
    ch = draw_channel(n, k, rng_seed=rng, size=uses)
    h = realify(ch.entries)
    idx = rng.integers(0, alpha.size, (uses, 2 * k))
    sys = transmit(h, alpha.levels[idx], SnrSpec(gamma_db, alpha.symbol_energy), rng_seed=rng)
    bits = (alpha.gray_labels[idx][..., None] >> np.arange(alpha.bits)) & 1
    sigma = float(_jinv(min(i_a, 1.0)))
    log_prior = None
    if i_a > 0:
        log_prior = rail_log_prior(prior_bit_llrs(bits, sigma, rng), m)
    post = detect(sys, config, alphabet=alpha, log_prior=log_prior, extrinsic=True)
    return bitwise_mi(posterior_llrs(post), bits)


def detector_exit_curve(gamma_db: float, k: int, n: int, trials: int = 1024, seed=0,
                        ia=DETECTOR_GRID, m: int = 16, config: NbbpConfig | None = None,
                        map_fn=map) -> ExitCurve:
    """Monte-Carlo EXIT curve of one NB-BP activation.

    ``trials`` counts coded symbols (users x channel uses) per grid point.
    Every point reuses the same channels, symbols, noise and prior noise
    (common random numbers), so the points differ only in the a priori
    strength and the curve is not jagged by independent sampling errors.
    """
    if trials < 1000:
        raise ConfigurationError("trials must be >= 1000")
    ia = np.asarray(ia, dtype=np.float64)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    common = root.spawn(1)[0]
    jobs = [(float(a), gamma_db, k, n, trials, common, m, config) for a in ia]
    ie = list(map_fn(_exit_job, jobs))
    return ExitCurve(ia, np.array(ie), "detector",
                     {"gamma_db": gamma_db, "k": k, "n": n, "m": m, "trials": trials})


def _exit_job(args):
    return detector_exit_point(*args)


def awgn_symbol_exit(gamma_db: float, samples: int = 200000, seed=0, m: int = 16) -> float:
    """Bit information of Gray M-QAM over a single-user AWGN channel."""
    alpha = pam_alphabet(m)
    rng = np.random.default_rng(seed)
    nv = noise_variance(SnrSpec(gamma_db, alpha.symbol_energy), 1.0)
    idx = rng.integers(0, alpha.size, samples)
    y = alpha.levels[idx] + np.sqrt(nv) * rng.standard_normal(samples)
    logp = -(y[:, None] - alpha.levels) ** 2 / (2 * nv)
    logp -= logp.max(axis=-1, keepdims=True)
    p = np.exp(logp)
    p /= p.sum(axis=-1, keepdims=True)
    lab_bits = (alpha.gray_labels[:, None] >> np.arange(alpha.bits)) & 1
    p1 = np.clip(p @ lab_bits, 1e-300, 1)
    p0 = np.clip(1 - p @ lab_bits, 1e-300, 1)
    bits = lab_bits[idx]
    return bitwise_mi(np.log(p0) - np.log(p1), bits)


def calibrate_c(gammas_db=np.arange(0.0, 20.5, 1.0), samples: int = 200000, seed=0, m: int = 16) -> float:
    """Least-squares c so that J(sqrt(c*gamma)) tracks the AWGN symbol EXIT value."""
    target = np.array([awgn_symbol_exit(g, samples, (seed, i), m) for i, g in enumerate(gammas_db)])
    lin = 10.0 ** (np.asarray(gammas_db) / 10.0)
    res = optimize.minimize_scalar(lambda c: np.sum((j_function(np.sqrt(c * lin)) - target) ** 2),
                                   bounds=(1e-4, 10.0), method="bounded", options={"xatol": 1e-8})
    return float(res.x)


# --------------------------------------------------------------------------
# profile optimization


@dataclass(frozen=True, eq=False)
class Infeasible:
    """No candidate profile opens the tunnel; ``violations`` lists grid points."""

    margin: float
    violations: np.ndarray
    best_check: tuple = ()


def _check_candidates(check_degrees):
    degs = sorted(set(int(d) for d in check_degrees))
    cands = [((d, 1.0),) for d in degs]
    for a, b in zip(degs[:-1], degs[1:]):
        for w in (0.25, 0.5, 0.75):
            cands.append(((a, w), (b, 1.0 - w)))
    return cands


def optimize_profile(detector_curve: ExitCurve, rate_target: float, degree_candidates,
                     check_degrees=(4, 5, 6, 7, 8, 10, 12), ia=DEFAULT_GRID, tol: float = 1e-9):
    """Linear program over variable edge fractions, swept over check mixtures.

    For each check mixture the margin ``t`` is maximized subject to
    ``combined(x) - check_inverse(x) >= t`` on the grid, fractions summing
    to one and the design rate equal to ``rate_target``.  The profile with
    the largest nonnegative margin wins; otherwise :class:`Infeasible`.
    """
    if not 0 < rate_target < 1:
        raise ConfigurationError("rate_target must lie in (0, 1)")
    dv = sorted(set(int(d) for d in degree_candidates))
    if not dv or min(dv) < 2 or not check_degrees:
        raise ConfigurationError("degree candidates must be nonempty and >= 2")
    ia = np.asarray(ia, dtype=np.float64)
    cols = np.array([combined_variable_exit(d, detector_curve, ia).ie for d in dv]).T  # (G, D)
    best = None
    worst = None
    for rho in _check_candidates(check_degrees):
        need = check_inverse(rho, ia)
        live = need < 1.0 - 1e-9  # at x = 1 both curves sit at 1
        inv_mean_c = sum(w / d for d, w in rho)
        # variables: lambda_d ..., t ; minimize -t
        c_obj = np.zeros(len(dv) + 1)
        c_obj[-1] = -1.0
        a_ub = np.hstack([-cols[live], np.ones((live.sum(), 1))])
        b_ub = -need[live]
        a_eq = np.array([[1.0] * len(dv) + [0.0], [1.0 / d for d in dv] + [0.0]])
        b_eq = np.array([1.0, inv_mean_c / (1.0 - rate_target)])
        bounds = [(0, 1)] * len(dv) + [(-1, 1)]
        res = optimize.linprog(c_obj, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                               bounds=bounds, method="highs")
        if res.status != 0:
            continue
        lam, t = res.x[:-1], res.x[-1]
        if t >= -tol and (best is None or t > best[0]):
            best = (t, lam, rho)
        if worst is None or t > worst[0]:
            worst = (t, lam, rho, cols @ lam - need)
    if best is None:
        if worst is None:
            return Infeasible(-np.inf, ia.copy())
        return Infeasible(float(worst[0]), ia[worst[3] < -tol], worst[2])
    t, lam, rho = best
    lam = np.where(lam < 1e-9, 0.0, lam)
    lam = lam / lam.sum()
    prof = DegreeProfile.from_edge_fractions(list(zip(dv, lam)), list(rho), name="optimized")
    return prof
