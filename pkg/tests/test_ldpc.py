import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbmimo import ldpc
from nbmimo.errors import ConfigurationError, ConstructionError
from nbmimo.galois import gf_build

GF4 = gf_build(2)
GF16 = gf_build(4)

# cycle-free toy code over GF(4): n = 6, three checks
TOY_F = np.array([[1, 2, 0, 3, 0, 0],
                  [0, 1, 3, 0, 2, 0],
                  [0, 0, 2, 0, 0, 1]])


def toy_code():
    return ldpc.ParityCheckMatrix.from_dense(TOY_F, GF4)


def brute_codebook(dense, f):
    """All words with zero syndrome, by enumeration and table arithmetic."""
    n = dense.shape[1]
    words = np.array(list(itertools.product(range(f.q), repeat=n)))
    synd = np.zeros((len(words), dense.shape[0]), dtype=np.int64)
    for r in range(dense.shape[0]):
        for c in range(n):
            if dense[r, c]:
                synd[:, r] ^= f.mul_table[dense[r, c], words[:, c]]
    return words[~synd.any(axis=1)]


# ---------------------------------------------------------------- profiles


def test_optimized_presets_are_valid():
    for alpha, prof in ldpc.OPTIMIZED_PROFILES.items():
        assert prof.rate == pytest.approx(0.5, abs=2e-3)
        assert sum(p for _, p in prof.check) == pytest.approx(1.0, abs=1e-12)
    assert dict(ldpc.OPTIMIZED_PROFILES[1.0].variable)[8] == 0.3174
    # printed alpha = 0.25 check fractions sum to 1.0002 and are rescaled
    assert dict(ldpc.OPTIMIZED_PROFILES[0.25].check)[5] == pytest.approx(0.7287 / 1.0002)


@pytest.mark.parametrize("var,chk", [
    (((2, 0.5), (3, 0.4)), ((6, 1.0),)),
    (((1, 1.0),), ((4, 1.0),)),
    (((3, 1.0),), ((6, 0.5), (8, 0.6))),
])
def test_profile_validation(var, chk):
    with pytest.raises(ConfigurationError):
        ldpc.DegreeProfile(var, chk)


def test_profile_rate_consistency():
    assert ldpc.regular_profile(3, 6).rate == pytest.approx(0.5)
    with pytest.raises(ConfigurationError):
        ldpc.DegreeProfile(((3, 1.0),), ((6, 1.0),), rate=0.6)


def test_edge_fractions_round_trip():
    prof = ldpc.OPTIMIZED_PROFILES[0.5]
    again = ldpc.DegreeProfile.from_edge_fractions(prof.variable_edge_fractions,
                                                   prof.check_edge_fractions)
    for (d1, p1), (d2, p2) in zip(prof.variable, again.variable):
        assert d1 == d2 and p1 == pytest.approx(p2, abs=1e-12)


def test_profile_text_round_trip():
    prof = ldpc.OPTIMIZED_PROFILES[1.0]
    back = ldpc.parse_profile(prof.to_text())
    assert back.variable == prof.variable and back.check == prof.check
    assert back.name == prof.name
    with pytest.raises(ConfigurationError, match="line 2"):
        ldpc.parse_profile("rate 0.5\nvariable two 0.5\n")


def test_load_profile_by_name_and_path(tmp_path):
    assert ldpc.load_profile("regular-3-6").variable == ((3, 1.0),)
    path = tmp_path / "p.txt"
    path.write_text(ldpc.OPTIMIZED_PROFILES[0.25].to_text())
    assert ldpc.load_profile(str(path)).check == ldpc.OPTIMIZED_PROFILES[0.25].check
    with pytest.raises(ConfigurationError):
        ldpc.load_profile("no-such-profile")


# ---------------------------------------------------------------- construction


def test_regular_3_6_small():
    pcm = ldpc.realize_code(ldpc.regular_profile(3, 6), 12, seed=1)
    assert pcm.n_checks == 6
    assert np.all(pcm.check_degrees == 6)
    assert np.all(pcm.variable_degrees == 3)


@pytest.mark.parametrize("alpha", [1.0, 0.5, 0.25])
def test_optimized_realization_matches_histogram(alpha):
    prof = ldpc.OPTIMIZED_PROFILES[alpha]
    pcm = ldpc.realize_code(prof, 200, seed=3)
    deg = pcm.variable_degrees
    for d, p in prof.variable:
        assert abs(np.mean(deg == d) - p) <= 1 / 200 + 1e-12
    assert pcm.n_checks == 100
    assert deg.sum() == pcm.check_degrees.sum()
    # check side: total edges agree and histogram stays near the profile
    for d, p in prof.check:
        assert abs(np.mean(pcm.check_degrees == d) - p) < 0.1


def test_realization_is_deterministic_and_simple():
    prof = ldpc.OPTIMIZED_PROFILES[1.0]
    a = ldpc.realize_code(prof, 200, seed=5)
    b = ldpc.realize_code(prof, 200, seed=5)
    assert np.array_equal(a.to_dense(), b.to_dense())
    pairs = a.check_index * a.n + a.var_index
    assert len(np.unique(pairs)) == len(pairs)
    assert np.all(a.coeff > 0)


def test_peg_avoids_short_cycles_when_room_allows():
    pcm = ldpc.realize_code(ldpc.regular_profile(2, 4), 200, seed=1)
    assert ldpc.count_four_cycles(pcm) == 0
    pcm = ldpc.realize_code(ldpc.regular_profile(3, 6), 500, seed=1)
    assert ldpc.count_four_cycles(pcm) == 0


def test_four_cycle_counter():
    dense = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    pcm = ldpc.ParityCheckMatrix.from_dense(dense, GF4)
    assert ldpc.count_four_cycles(pcm) == 2


def test_infeasible_profile_raises():
    with pytest.raises(ConstructionError):
        ldpc.realize_code(ldpc.DegreeProfile(((20, 1.0),), ((40, 1.0),)), 12, seed=0)


def test_duplicate_and_zero_entries_rejected():
    with pytest.raises(ConfigurationError):
        ldpc.ParityCheckMatrix(3, 1, np.array([0, 0]), np.array([1, 1]), np.array([1, 2]), GF4)
    with pytest.raises(ConfigurationError):
        ldpc.ParityCheckMatrix(3, 1, np.array([0]), np.array([1]), np.array([0]), GF4)


def test_alist_round_trip():
    pcm = ldpc.realize_code(ldpc.OPTIMIZED_PROFILES[0.5], 60, seed=2)
    back = ldpc.parse_alist(pcm.to_alist())
    assert np.array_equal(back.to_dense(), pcm.to_dense())
    assert back.field.q == 16
    with pytest.raises(ConfigurationError):
        ldpc.parse_alist("6 3 5\n")


# ---------------------------------------------------------------- entries


def test_syndrome_distribution_matches_enumeration():
    dist = ldpc.bitflip_distribution(GF16, 0.1)
    coeffs = np.array([3, 7, 12])
    ref = np.zeros(16)
    for c in itertools.product(range(16), repeat=3):
        s = 0
        for h, v in zip(coeffs, c):
            s ^= int(GF16.mul(h, v))
        ref[s] += np.prod([dist[v] for v in c])
    np.testing.assert_allclose(ldpc.syndrome_distribution(coeffs, dist, GF16), ref, atol=1e-12)


def test_uniform_inputs_give_full_entropy_for_any_pair():
    uniform = np.full(4, 0.25)
    for pair in itertools.product(range(1, 4), repeat=2):
        # enumerate the 16 inputs
        counts = np.zeros(4)
        for a, b in itertools.product(range(4), repeat=2):
            counts[int(GF4.mul(pair[0], a)) ^ int(GF4.mul(pair[1], b))] += 1
        assert ldpc.entropy_bits(counts / 16) == pytest.approx(2.0)
        h = ldpc.entropy_bits(ldpc.syndrome_distribution(np.array(pair), uniform, GF4))
        assert h == pytest.approx(2.0)


def test_optimize_entries_never_lowers_row_entropy():
    pcm = ldpc.realize_code(ldpc.regular_profile(3, 6), 48, seed=4)
    opt = ldpc.optimize_entries(pcm, candidate_trials=8, seed=1)
    assert np.array_equal(opt.check_index, pcm.check_index)
    assert np.array_equal(opt.var_index, pcm.var_index)
    dist = ldpc.bitflip_distribution(GF16, 0.05)
    for (c0, h0), (c1, h1) in zip(pcm.rows, opt.rows):
        before = ldpc.entropy_bits(ldpc.syndrome_distribution(h0, dist, GF16))
        after = ldpc.entropy_bits(ldpc.syndrome_distribution(h1, dist, GF16))
        assert after >= before - 1e-12


def test_optimize_entries_binary_is_noop():
    gf2 = gf_build(1)
    pcm = ldpc.realize_code(ldpc.regular_profile(3, 6), 24, seed=1, f=gf2)
    assert np.all(pcm.coeff == 1)
    assert ldpc.optimize_entries(pcm) is pcm


# ---------------------------------------------------------------- encoding


def test_toy_encoder_matches_codebook():
    pcm = toy_code()
    book = {tuple(w) for w in brute_codebook(TOY_F, GF4)}
    enc = ldpc.encoder_for(pcm)
    assert enc.k == 3 and len(book) == 4**3
    words = {tuple(ldpc.encode(pcm, np.array(m))) for m in itertools.product(range(4), repeat=3)}
    assert words == book
    assert np.array_equal(ldpc.encode(pcm, np.zeros(3, dtype=int)), np.zeros(6))
    m = np.array([1, 2, 3])
    assert np.array_equal(ldpc.encode(pcm, m)[enc.info_positions], m)


def test_row_reduce_against_independent_rank():
    rng = np.random.default_rng(0)
    for _ in range(20):
        mat = rng.integers(0, 4, (3, 5))
        rref, piv = ldpc.row_reduce(mat, GF4)
        # the null space size from enumeration fixes the rank independently
        book = brute_codebook(mat, GF4)
        assert len(book) == 4 ** (5 - len(piv))


def test_encode_random_messages_satisfy_checks():
    pcm = ldpc.realize_full_rank(ldpc.OPTIMIZED_PROFILES[1.0], 200, seed=1)
    msg = np.random.default_rng(1).integers(0, 16, (10, pcm.k))
    assert not pcm.syndrome(ldpc.encode(pcm, msg)).any()


def test_rank_deficient_encoder_raises():
    dense = np.array([[1, 1, 0, 1], [1, 1, 0, 1], [0, 1, 1, 0]])
    pcm = ldpc.ParityCheckMatrix.from_dense(dense, GF4)
    with pytest.raises(ConstructionError):
        ldpc.encode(pcm, np.zeros(2, dtype=int))


# ---------------------------------------------------------------- decoding


def point_mass(word, q):
    p = np.zeros((len(word), q))
    p[np.arange(len(word)), word] = 1.0
    return p


def test_point_mass_priors_converge_in_one_iteration():
    pcm = ldpc.realize_full_rank(ldpc.regular_profile(3, 6), 60, seed=2)
    word = ldpc.encode(pcm, np.random.default_rng(0).integers(0, 16, pcm.k))
    res = ldpc.decode(pcm, point_mass(word, 16), 10)
    assert res.converged and res.iterations_used == 1
    assert np.array_equal(res.decisions, word)


def test_single_erasure_recovered():
    pcm = toy_code()
    word = ldpc.encode(pcm, np.array([3, 1, 2]))
    pri = point_mass(word, 4)
    pri[5] = 0.25  # symbol 5 sits in a weight-2 row
    res = ldpc.decode(pcm, pri, 5)
    assert res.converged and np.array_equal(res.decisions, word)


def test_toy_decoder_matches_exact_symbol_map():
    pcm = toy_code()
    book = brute_codebook(TOY_F, GF4)
    rng = np.random.default_rng(7)
    agree = 0
    trials = 1000
    for _ in range(trials):
        word = book[rng.integers(len(book))]
        fid = rng.uniform(0.7, 0.95, 6)
        noisy = np.where(rng.random(6) < 0.9, word, rng.integers(0, 4, 6))
        pri = np.tile(((1 - fid) / 3)[:, None], (1, 4))
        pri[np.arange(6), noisy] = fid
        like = np.prod(pri[np.arange(6), book], axis=1)
        marg = np.array([[like[book[:, i] == a].sum() for a in range(4)] for i in range(6)])
        res = ldpc.decode(pcm, pri, 20)
        agree += np.array_equal(res.decisions, marg.argmax(axis=1))
    assert agree >= 0.99 * trials


def test_converged_means_zero_syndrome():
    pcm = ldpc.realize_full_rank(ldpc.OPTIMIZED_PROFILES[0.5], 100, seed=3)
    rng = np.random.default_rng(3)
    words = ldpc.encode(pcm, rng.integers(0, 16, (20, pcm.k)))
    pri = np.full(words.shape + (16,), 0.3 / 15)
    noisy = np.where(rng.random(words.shape) < 0.75, words, rng.integers(0, 16, words.shape))
    np.put_along_axis(pri, noisy[..., None], 0.7, axis=-1)
    res = ldpc.decode(pcm, pri, 30)
    synd_zero = ~pcm.syndrome(res.decisions).any(axis=-1)
    assert np.array_equal(synd_zero, res.converged)
    assert res.converged.any() and not res.converged.all()


def test_check_kernels_agree():
    rng = np.random.default_rng(4)
    pcm = ldpc.realize_code(ldpc.OPTIMIZED_PROFILES[1.0], 40, seed=1)
    cview, *_ = ldpc._graph_views(pcm)
    msgs = rng.random((3, pcm.num_edges + 1, 16))
    msgs /= msgs.sum(axis=-1, keepdims=True)
    a = ldpc.check_node_update(msgs, cview, GF16, "direct")
    b = ldpc.check_node_update(msgs, cview, GF16, "wht")
    np.testing.assert_allclose(a, b, atol=1e-9)
    with pytest.raises(ConfigurationError):
        ldpc.check_node_update(msgs, cview, GF16, "fft")


def test_check_update_matches_enumeration():
    rng = np.random.default_rng(5)
    pcm = ldpc.ParityCheckMatrix.from_dense(np.array([[1, 1, 1]]), GF4)
    cview, *_ = ldpc._graph_views(pcm)
    msgs = rng.random((4, 4))
    msgs[3] = 0
    out = ldpc.check_node_update(msgs, cview, GF4, "direct")
    for e in range(3):
        o1, o2 = [x for x in range(3) if x != e]
        ref = np.zeros(4)
        for a, b in itertools.product(range(4), repeat=2):
            ref[a ^ b] += msgs[o1, a] * msgs[o2, b]
        np.testing.assert_allclose(out[e], ref, atol=1e-12)


def test_wht_is_self_inverse_up_to_scale():
    x = np.random.default_rng(6).random((5, 32))
    np.testing.assert_allclose(ldpc.wht(ldpc.wht(x)), 32 * x, atol=1e-10)


@pytest.mark.parametrize("kernel", ["direct", "wht"])
def test_decode_kernels_give_same_decisions(kernel):
    pcm = ldpc.realize_full_rank(ldpc.regular_profile(3, 6), 60, seed=6)
    rng = np.random.default_rng(6)
    words = ldpc.encode(pcm, rng.integers(0, 16, (5, pcm.k)))
    pri = rng.random(words.shape + (16,)) * 0.5
    np.put_along_axis(pri, words[..., None], 1.0, axis=-1)
    ref = ldpc.decode(pcm, pri, 20, kernel="direct")
    res = ldpc.decode(pcm, pri, 20, kernel=kernel)
    assert np.array_equal(ref.decisions, res.decisions)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 15))
def test_column_relabeling_invariance(seed, lam):
    """Scaling a column by lam^-1 and its symbol by lam leaves decoding unchanged."""
    pcm = ldpc.realize_full_rank(ldpc.regular_profile(3, 6), 24, seed=seed % 1000)
    rng = np.random.default_rng(seed)
    word = ldpc.encode(pcm, rng.integers(0, 16, pcm.k))
    pri = rng.random((pcm.n, 16)) * 0.6
    pri[np.arange(pcm.n), word] += 0.5
    v = int(rng.integers(pcm.n))
    coeff = pcm.coeff.copy()
    sel = pcm.var_index == v
    coeff[sel] = GF16.mul(coeff[sel], GF16.inv(lam))
    other = pcm.with_coefficients(coeff)
    pri2 = pri.copy()
    # new symbol b = lam * a carries the old probability of a
    pri2[v, GF16.mul(lam, np.arange(16))] = pri[v]
    a = ldpc.decode(pcm, pri, 15)
    b = ldpc.decode(other, pri2, 15)
    expect = a.decisions.copy()
    expect[v] = GF16.mul(lam, expect[v])
    assert np.array_equal(b.decisions, expect)
    assert a.converged == b.converged and a.iterations_used == b.iterations_used
