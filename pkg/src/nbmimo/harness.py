"""Monte-Carlo experiment driver: configuration, trials, metrics, CSV output.

Configuration files are flat ``key = value`` text with ``#`` comments; see
``CONFIG_SCHEMA`` for the keys.  Every chunk of trials draws from its own
seed, derived from the master seed and the (SNR index, chunk index) pair,
and chunk results are reduced in chunk order, so output does not depend on
how many worker processes ran.
"""

import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.stats import norm
from statsmodels.stats.proportion import proportion_confint

from . import chanest, exit_chart, ldpc
from .baselines import DETECTOR_KINDS, hard_detect, linear_detect, soft_detect
from .errors import ConfigurationError
from .mimo import SnrSpec, draw_channel, pam_alphabet, rail_bits, realify, symbols_to_levels, transmit
from .nbbp import NbbpConfig, OpCounter, detect, op_count_estimate

SCENARIOS = ("uncoded-ber", "coded-ber", "exit", "design-code", "csi-ber", "complexity")
WORKERS_ENV = "NBMIMO_WORKERS"


def _ints(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _floats(text):
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(np.round(start + i * step, 9)) for i in range(count))
    return tuple(float(t) for t in text.replace(",", " ").split())


def _words(text):
    return tuple(t for t in text.replace(",", " ").split())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, description)
CONFIG_SCHEMA = {
    "scenario": (str, "one of " + ", ".join(SCENARIOS)),
    "n_antennas": (int, "receive antennas N"),
    "n_users": (int, "single-antenna users K"),
    "qam_order": (int, "M, an even power of two"),
    "snr_grid_db": (_floats, "comma list or start:stop:step (inclusive)"),
    "detectors": (_words, "comma list from " + ", ".join(DETECTOR_KINDS)),
    "iterations": (int, "NB-BP / B-BP iterations"),
    "damping": (float, "message damping in [0, 1)"),
    "trials": (int, "cap: channel uses (uncoded), frames (coded, csi), symbols per EXIT point"),
    "batch": (int, "channel uses per chunk in uncoded-ber"),
    "target_error_events": (int, "stop a point once this many bit errors are counted"),
    "target_frame_errors": (int, "stop a point once this many frame errors are counted (0 = off)"),
    "seed": (int, "master seed"),
    "code": (str, "profile preset name or path to a profile file"),
    "code_length": (int, "codeword length n in GF(q) symbols"),
    "code_seed": (int, "seed of the code construction, separate from the trial seed"),
    "max_decode_iters": (int, "LDPC decoder iteration cap"),
    "blocks": (int, "data blocks L per frame"),
    "est_iters": (int, "estimation/detection passes"),
    "perfect_csi": (_bool, "detect with the true channel"),
    "rate_target": (float, "design rate for design-code"),
    "var_degrees": (_ints, "variable degree candidates for design-code"),
    "check_degrees": (_ints, "check degree candidates for design-code"),
    "n_grid": (_ints, "complexity sweep over N"),
    "k_grid": (_ints, "complexity sweep over K"),
    "m_grid": (_ints, "complexity sweep over M"),
}


@dataclass(frozen=True)
class SimConfig:
    scenario: str = "uncoded-ber"
    n_antennas: int = 32
    n_users: int = 32
    qam_order: int = 16
    snr_grid_db: tuple = (10.0,)
    detectors: tuple = ("nbbp", "mmse")
    iterations: int = 40
    damping: float = 0.2
    trials: int = 2000
    batch: int = 20
    target_error_events: int = 200
    target_frame_errors: int = 0
    seed: int = 1
    code: str = "optimized-alpha1"
    code_length: int = 200
    code_seed: int = 1
    max_decode_iters: int = 50
    blocks: int = 4
    est_iters: int = 2
    perfect_csi: bool = False
    rate_target: float = 0.5
    var_degrees: tuple = (2, 3, 4, 6, 8, 12, 16, 20)
    check_degrees: tuple = (4, 5, 6, 7, 8, 10, 12)
    n_grid: tuple = ()
    k_grid: tuple = ()
    m_grid: tuple = ()

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.n_antennas < 1 or self.n_users < 1:
            raise ConfigurationError("n_antennas and n_users must be positive")
        pam_alphabet(self.qam_order)
        if not self.snr_grid_db:
            raise ConfigurationError("snr_grid_db must be nonempty")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.batch < 1 or self.blocks < 1 or self.est_iters < 1:
            raise ConfigurationError("batch, blocks and est_iters must be >= 1")
        for d in self.detectors:
            if d not in DETECTOR_KINDS:
                raise ConfigurationError(f"unknown detector {d!r}")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")
        self.nbbp_config  # validates iterations and damping

    @property
    def loading(self) -> float:
        return self.n_users / self.n_antennas

    @property
    def nbbp_config(self) -> NbbpConfig:
        return NbbpConfig(iterations=self.iterations, damping=self.damping)

    def header_lines(self):
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = ", ".join(str(v) for v in val)
            out.append(f"# {f.name} = {val}")
        out.append(f"# loading = {self.loading:.9g}")
        return out


def parse_config(text: str, **overrides) -> SimConfig:
    """Parse flat ``key = value`` text; errors name the offending line."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_SCHEMA:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = CONFIG_SCHEMA[key][0](val)
        except ValueError as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key}: {exc}") from None
        if key in ("scenario", "trials", "detectors", "qam_order", "damping", "iterations"):
            # checks that need no other key run here so the error can cite the line
            try:
                SimConfig(**{key: values[key]})
            except ConfigurationError as exc:
                raise ConfigurationError(f"line {lineno}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig(**values)


def load_config(path, **overrides) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


# --------------------------------------------------------------------------
# records and statistics


@dataclass(frozen=True)
class BerRecord:
    detector: str
    snr_db: float
    bit_errors: int
    bits_counted: int
    frame_errors: int
    frames: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if min(self.bit_errors, self.bits_counted, self.frame_errors, self.frames) < 0:
            raise ConfigurationError("counts must be nonnegative")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_counted if self.bits_counted else float("nan")


def ber_confidence(record: BerRecord, level: float = 0.95):
    """Wilson score interval on the bit error proportion."""
    if record.bits_counted <= 0:
        raise ConfigurationError("no bits counted")
    low, high = proportion_confint(record.bit_errors, record.bits_counted, alpha=1 - level,
                                   method="wilson")
    return float(low), float(high)


def pam_gray_ber(m: int, es_n0_db: float) -> float:
    """Exact bit error rate of Gray M-QAM (two Gray sqrt(M)-PAM rails) over AWGN."""
    alpha = pam_alphabet(m)
    lv = alpha.levels
    n0 = alpha.symbol_energy / 10.0 ** (es_n0_db / 10.0)
    sd = np.sqrt(n0 / 2.0)
    # decision region edges around each level
    edges = np.concatenate([[-np.inf], (lv[:-1] + lv[1:]) / 2.0, [np.inf]])
    lab_bits = rail_bits(alpha, np.arange(alpha.size))
    total = 0.0
    for i, x in enumerate(lv):
        probs = norm.cdf((edges[1:] - x) / sd) - norm.cdf((edges[:-1] - x) / sd)
        wrong = (lab_bits != lab_bits[i]).sum(axis=-1)
        total += float(probs @ wrong)
    return total / (alpha.size * alpha.bits)


def siso_awgn_reference(m: int, snr_grid) -> np.ndarray:
    """Analytic single-antenna AWGN BER of Gray M-QAM at Es/N0 = each grid value (dB)."""
    return np.array([pam_gray_ber(m, g) for g in snr_grid])


# --------------------------------------------------------------------------
# chunk workers (top level so they can be pickled)


def chunk_seed(master: int, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def _uncoded_chunk(args):
    cfg, snr_i, chunk, dets = args
    alpha = pam_alphabet(cfg.qam_order)
    rng = np.random.default_rng(chunk_seed(cfg.seed, snr_i, chunk))
    k, n, b = cfg.n_users, cfg.n_antennas, cfg.batch
    h = realify(draw_channel(n, k, rng_seed=rng, size=b).entries)
    idx = rng.integers(0, alpha.size, (b, 2 * k))
    sys = transmit(h, alpha.levels[idx], SnrSpec(cfg.snr_grid_db[snr_i], alpha.symbol_energy),
                   rng_seed=rng)
    truth = rail_bits(alpha, idx)
    out = {}
    for d in dets:
        est = rail_bits(alpha, hard_detect(d, sys, cfg.qam_order, cfg.nbbp_config))
        wrong = (est != truth).reshape(b, -1).sum(axis=-1)
        out[d] = (int(wrong.sum()), int(truth.size), int((wrong > 0).sum()), b)
    return out


def _coded_setup(cfg):
    profile = ldpc.load_profile(cfg.code)
    return ldpc.realize_full_rank(profile, cfg.code_length, seed=cfg.code_seed,
                                  q=cfg.qam_order)


def symbol_priors(rail_probs: np.ndarray, f, m: int) -> np.ndarray:
    """GF(q) symbol probabilities from independent I/Q rail posteriors.

    ``rail_probs`` has shape (..., 2K, sqrt(M)); returns (..., K, q).
    """
    k = rail_probs.shape[-2] // 2
    i_idx, q_idx = symbols_to_levels(f, np.arange(f.q), m)
    return rail_probs[..., :k, :][..., i_idx] * rail_probs[..., k:, :][..., q_idx]


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def _coded_chunk(args):
    cfg, snr_i, chunk, dets, pcm = args
    f = pcm.field
    enc = ldpc.encoder_for(pcm, require_full_rank=True)
    alpha = pam_alphabet(cfg.qam_order)
    rng = np.random.default_rng(chunk_seed(cfg.seed, snr_i, chunk))
    k, n, nc = cfg.n_users, cfg.n_antennas, pcm.n
    msg = rng.integers(0, f.q, (k, enc.k))
    words = enc.encode(msg)  # (K, n)
    i_idx, q_idx = symbols_to_levels(f, words, cfg.qam_order)
    idx = np.concatenate([i_idx.T, q_idx.T], axis=-1)  # (uses, 2K)
    h = realify(draw_channel(n, k, rng_seed=rng, size=nc).entries)
    sys = transmit(h, alpha.levels[idx], SnrSpec(cfg.snr_grid_db[snr_i], alpha.symbol_energy),
                   rng_seed=rng)
    out = {}
    for d in dets:
        probs = soft_detect(d, sys, cfg.qam_order, cfg.nbbp_config)  # (uses, 2K, S)
        pri = np.swapaxes(symbol_priors(probs, f, cfg.qam_order), 0, 1)  # (K, uses, q)
        res = ldpc.decode(pcm, pri, cfg.max_decode_iters)
        info = enc.info_positions
        errs = _popcount(res.decisions[:, info] ^ msg).sum(axis=-1)
        ok = res.converged
        synd_ok = bool(np.all(~pcm.syndrome(res.decisions[ok]).any(axis=-1))) if ok.any() else True
        out[d] = (int(errs.sum()), int(msg.size * f.beta), int((errs > 0).sum()), k, synd_ok)
    return out


def _csi_chunk(args):
    cfg, snr_i, chunk, dets = args
    alpha = pam_alphabet(cfg.qam_order)
    frame = chanest.make_frame(cfg.n_antennas, cfg.n_users, cfg.blocks, cfg.qam_order,
                               cfg.snr_grid_db[snr_i], seed=chunk_seed(cfg.seed, snr_i, chunk))
    truth = rail_bits(alpha, frame.data_indices)
    out = {}
    for d in dets:
        res = chanest.iterative_receive(frame, d, cfg.est_iters, cfg.nbbp_config,
                                        perfect_csi=cfg.perfect_csi)
        wrong = int((rail_bits(alpha, res.decisions) != truth).sum())
        out[d] = (wrong, int(truth.size), int(wrong > 0), 1)
    return out


# --------------------------------------------------------------------------
# drivers


def worker_count(workers=None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(int(workers), 1)


class _Pool:
    def __init__(self, workers):
        self.workers = workers
        self.ex = ProcessPoolExecutor(workers) if workers > 1 else None

    def map(self, fn, jobs):
        if self.ex is None:
            return [fn(j) for j in jobs]
        return list(self.ex.map(fn, jobs))

    def close(self):
        if self.ex is not None:
            self.ex.shutdown()


def _sweep(cfg: SimConfig, pool: _Pool, job, extra=(), max_chunks=None, frames_per_chunk=1):
    """Per SNR point, process chunks in order until every detector stops."""
    records = []
    cap = max_chunks if max_chunks is not None else -(-cfg.trials // frames_per_chunk)
    for si, snr in enumerate(cfg.snr_grid_db):
        start = time.perf_counter()
        tally = {d: [0, 0, 0, 0] for d in cfg.detectors}
        active = list(cfg.detectors)
        chunk = 0
        while active and chunk < cap:
            wave = range(chunk, min(chunk + pool.workers, cap))
            results = pool.map(job, [(cfg, si, c, tuple(active)) + tuple(extra) for c in wave])
            for res in results:
                for d in list(active):
                    t = tally[d]
                    for i in range(4):
                        t[i] += res[d][i]
                    if len(res[d]) > 4 and not res[d][4]:
                        raise RuntimeError("decoder reported convergence with a nonzero syndrome")
                    if t[0] >= cfg.target_error_events or (
                            cfg.target_frame_errors and t[2] >= cfg.target_frame_errors):
                        active.remove(d)
            chunk = wave.stop
        elapsed = time.perf_counter() - start
        for d in cfg.detectors:
            e, b, fe, fr = tally[d]
            records.append(BerRecord(d, snr, e, b, fe, fr, cfg.seed, elapsed))
    return records


def run_ber(cfg: SimConfig, workers=None):
    pool = _Pool(worker_count(workers))
    try:
        if cfg.scenario == "uncoded-ber":
            return _sweep(cfg, pool, _uncoded_chunk, frames_per_chunk=cfg.batch)
        if cfg.scenario == "coded-ber":
            return _sweep(cfg, pool, _coded_chunk, extra=(_coded_setup(cfg),))
        if cfg.scenario == "csi-ber":
            return _sweep(cfg, pool, _csi_chunk)
    finally:
        pool.close()
    raise ConfigurationError(f"scenario {cfg.scenario!r} does not produce BER records")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.9g" % v
    return str(v)


BER_COLUMNS = ("scenario", "detector", "snr_db", "bit_errors", "bits_counted", "ber", "ber_low",
               "ber_high", "frame_errors", "frames", "siso_awgn_ber", "seed")


def ber_csv(cfg: SimConfig, records) -> str:
    buf = io.StringIO()
    buf.write("\n".join(cfg.header_lines()) + "\n")
    buf.write(",".join(BER_COLUMNS) + "\n")
    for r in records:
        low, high = ber_confidence(r) if r.bits_counted else (float("nan"), float("nan"))
        ref = pam_gray_ber(cfg.qam_order, r.snr_db)
        row = (cfg.scenario, r.detector, float(r.snr_db), r.bit_errors, r.bits_counted,
               float(r.ber), low, high, r.frame_errors, r.frames, ref, r.seed)
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def run_exit(cfg: SimConfig, workers=None) -> str:
    """Detector, combined-variable and swapped check curves per SNR point."""
    profile = ldpc.load_profile(cfg.code)
    pool = _Pool(worker_count(workers))
    rows = ["snr_db,curve,i_a,i_e"]
    try:
        for si, snr in enumerate(cfg.snr_grid_db):
            det = exit_chart.detector_exit_curve(snr, cfg.n_users, cfg.n_antennas, cfg.trials,
                                                 seed=chunk_seed(cfg.seed, si), m=cfg.qam_order,
                                                 config=cfg.nbbp_config, map_fn=pool.map)
            comb = exit_chart.profile_combined_curve(profile, det, exit_chart.DEFAULT_GRID)
            need = exit_chart.check_inverse(profile.check_edge_fractions, exit_chart.DEFAULT_GRID)
            for name, xs, ys in (("detector", det.ia, det.ie), ("combined", comb.ia, comb.ie),
                                 ("check_swapped", exit_chart.DEFAULT_GRID, need)):
                rows += [f"{_fmt(float(snr))},{name},{_fmt(float(a))},{_fmt(float(e))}"
                         for a, e in zip(xs, ys)]
    finally:
        pool.close()
    return "\n".join(cfg.header_lines() + rows) + "\n"


def run_design(cfg: SimConfig, workers=None):
    """Optimize a profile at the first grid SNR; returns (text, feasible)."""
    pool = _Pool(worker_count(workers))
    try:
        det = exit_chart.detector_exit_curve(cfg.snr_grid_db[0], cfg.n_users, cfg.n_antennas,
                                             cfg.trials, seed=chunk_seed(cfg.seed, 0),
                                             m=cfg.qam_order, config=cfg.nbbp_config,
                                             map_fn=pool.map)
    finally:
        pool.close()
    res = exit_chart.optimize_profile(det, cfg.rate_target, cfg.var_degrees, cfg.check_degrees)
    head = "\n".join(cfg.header_lines()) + "\n"
    if isinstance(res, exit_chart.Infeasible):
        pts = ", ".join(_fmt(float(x)) for x in res.violations)
        return head + f"# infeasible, margin {_fmt(res.margin)}, violated I_A: {pts}\n", False
    return head + res.to_text(), True


COMPLEXITY_COLUMNS = ("n", "k", "m", "nbbp_macs_per_iter", "nbbp_analytic", "mmse_macs")


def nbbp_macs_per_iteration(n: int, k: int, m: int, seed=0) -> int:
    """Instrumented count of one iteration: difference of 2- and 1-iteration runs."""
    alpha = pam_alphabet(m)
    rng = np.random.default_rng(seed)
    h = realify(draw_channel(n, k, rng_seed=rng).entries)
    sys = transmit(h, alpha.levels[rng.integers(0, alpha.size, 2 * k)],
                   SnrSpec(20.0, alpha.symbol_energy), rng_seed=rng)
    counts = []
    for iters in (1, 2):
        c = OpCounter()
        detect(sys, NbbpConfig(iterations=iters), alphabet=alpha, counter=c)
        counts.append(c.macs)
    return counts[1] - counts[0]


def mmse_macs(n: int, k: int, m: int, seed=0) -> int:
    alpha = pam_alphabet(m)
    rng = np.random.default_rng(seed)
    h = realify(draw_channel(n, k, rng_seed=rng).entries)
    sys = transmit(h, alpha.levels[rng.integers(0, alpha.size, 2 * k)],
                   SnrSpec(20.0, alpha.symbol_energy), rng_seed=rng)
    c = OpCounter()
    linear_detect("mmse", sys, alphabet=alpha, counter=c)
    return c.macs


def run_complexity(cfg: SimConfig) -> str:
    ns = cfg.n_grid or (cfg.n_antennas,)
    ks = cfg.k_grid or (cfg.n_users,)
    ms = cfg.m_grid or (cfg.qam_order,)
    rows = [",".join(COMPLEXITY_COLUMNS)]
    for n in ns:
        for k in ks:
            for m in ms:
                vals = (n, k, m, nbbp_macs_per_iteration(n, k, m, cfg.seed),
                        op_count_estimate(n, k, m).per_iteration, mmse_macs(n, k, m, cfg.seed))
                rows.append(",".join(map(str, vals)))
    return "\n".join(cfg.header_lines() + rows) + "\n"


def run(cfg: SimConfig, workers=None) -> tuple:
    """Run any scenario; returns (records or None, CSV/text output, success flag)."""
    if cfg.scenario in ("uncoded-ber", "coded-ber", "csi-ber"):
        recs = run_ber(cfg, workers)
        return recs, ber_csv(cfg, recs), True
    if cfg.scenario == "exit":
        return None, run_exit(cfg, workers), True
    if cfg.scenario == "design-code":
        text, ok = run_design(cfg, workers)
        return None, text, ok
    return None, run_complexity(cfg), True


def with_scenario(cfg: SimConfig, scenario: str) -> SimConfig:
    return replace(cfg, scenario=scenario)
