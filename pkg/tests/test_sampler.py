import numpy as np
import pytest

from hdpslice.accel import categorical_rows, last_admissible
from hdpslice.errors import InvariantError, NumericalError
from hdpslice.io import format_trace_row
from hdpslice.kernels import MultinomialKernel
from hdpslice.sampler import (compute_K_jt, compute_T, guard_k_cap, guard_t_cap,
                              run, sweep, update_beta_sticks, update_gamma_sticks)
from hdpslice.state import (GroupedDataset, Hyperparams, derive_z, init_state,
                            take_snapshot, restore_snapshot)
from hdpslice.sticks import StickVector, occupancy, stick_posterior_params
from hdpslice.streams import substream


def hp_small(**kw):
    base = dict(gamma0=1.0, alpha0=1.0, initial_t_cap=4, initial_k_cap=4,
                max_iterations=10, seed=3)
    base.update(kw)
    return Hyperparams(**base)


def data_small():
    return GroupedDataset([[1, 1, 2], [2, 1]], "tokens", vocab_size=2)


# ---------------------------------------------------------------- sticks

def test_gamma_stick_posterior_enumerated():
    # seating (1,1,2) with unit concentration: table 1 conditional Beta(3, 2)
    counts = occupancy([1, 1, 2], 4)
    a, b = stick_posterior_params(counts, 1.0)
    assert (a[0], b[0]) == (3.0, 2.0)


def test_update_gamma_sticks_rescales_u():
    hp = hp_small()
    st = init_state(hp, data_small(), MultinomialKernel(2))
    frac_before = st.u_slice[0] / st.gamma_sticks[0].weights[st.table_of_customer[0] - 1]
    update_gamma_sticks(st, 0, hp.alpha0, substream(1, 99))
    w = st.gamma_sticks[0].weights[st.table_of_customer[0] - 1]
    frac_after = st.u_slice[0] / w
    np.testing.assert_allclose(frac_before, frac_after, rtol=1e-12)
    assert (st.u_slice[0] <= w).all()


def test_beta_stick_posterior_enumerated():
    # five tables all serving dish 1: Beta(6, gamma0) at dish 1
    counts = occupancy([1] * 5, 4)
    a, b = stick_posterior_params(counts, 2.0)
    assert (a[0], b[0]) == (6.0, 2.0)
    # dishes (1,2,2) with gamma0=3: dish 2 conditional Beta(3, 3)
    counts = occupancy([1, 2, 2], 4)
    a, b = stick_posterior_params(counts, 3.0)
    assert (a[1], b[1]) == (3.0, 3.0)
    # no tables at all: the prior
    counts = occupancy([], 4)
    a, b = stick_posterior_params(counts, 3.0)
    assert (a[0], b[0]) == (1.0, 3.0)


def test_update_beta_sticks_rescales_v():
    hp = hp_small()
    st = init_state(hp, data_small(), MultinomialKernel(2))
    update_beta_sticks(st, hp.gamma0, substream(2, 98))
    for j in range(2):
        bw = st.beta_sticks.weights[st.dish_of_table[j] - 1]
        assert (st.v_slice[j] <= bw).all()


def test_stick_draws_conditionally_independent():
    # with seating counts held fixed, redraws of two sticks are uncorrelated
    counts = occupancy([1, 1, 2], 4)
    rng = np.random.default_rng(12)
    a, b = stick_posterior_params(counts, 1.0)
    draws = rng.beta(a, b, size=(10_000, 4))
    corr = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert abs(corr) < 0.03


# ---------------------------------------------------------------- bounds

def test_compute_T_enumerated():
    hp = hp_small(initial_t_cap=3)
    st = init_state(hp, data_small(), MultinomialKernel(2))
    st.gamma_sticks[0] = StickVector([0.5, 0.5, 0.5])  # weights 0.5, 0.25, 0.125
    st.u_slice[0] = np.array([0.2, 0.2, 0.2])
    np.testing.assert_array_equal(compute_T(st, 0), [2, 2, 2])


def test_compute_T_boundary_inclusive():
    hp = hp_small(initial_t_cap=3)
    st = init_state(hp, data_small(), MultinomialKernel(2))
    st.gamma_sticks[0] = StickVector([0.5, 0.5, 0.5])
    st.u_slice[0] = np.array([0.25, 0.125, 0.5])
    np.testing.assert_array_equal(compute_T(st, 0), [2, 3, 1])


def test_compute_T_nonmonotone_scan():
    hp = hp_small(initial_t_cap=2)
    st = init_state(hp, data_small(), MultinomialKernel(2))
    st.gamma_sticks[0] = StickVector([0.1, 0.9])  # weights 0.1, 0.81
    st.u_slice[0] = np.array([0.5, 0.5, 0.05])
    np.testing.assert_array_equal(compute_T(st, 0), [2, 2, 2])


def test_compute_T_empty_set_is_invariant_error():
    hp = hp_small(initial_t_cap=2)
    st = init_state(hp, data_small(), MultinomialKernel(2))
    st.gamma_sticks[0] = StickVector([0.1, 0.1])
    st.u_slice[0] = np.array([0.95, 0.5, 0.5])
    with pytest.raises(InvariantError):
        compute_T(st, 0)


def test_guard_passes_on_tiny_tail():
    hp = hp_small(initial_t_cap=2)
    st = init_state(hp, data_small(), MultinomialKernel(2))
    st.gamma_sticks[0] = StickVector([0.999999, 0.999])  # tail ~ 1e-9
    st.u_slice[0] = np.array([0.01, 0.5, 0.9])
    assert not guard_t_cap(st, 0)


def test_guard_fires_when_tail_dominates():
    hp = hp_small(initial_t_cap=2)
    st = init_state(hp, data_small(), MultinomialKernel(2))
    st.gamma_sticks[0] = StickVector([0.5, 0.5])  # tail 0.25
    st.u_slice[0] = np.array([0.2, 0.5, 0.9])
    assert guard_t_cap(st, 0)


def test_growth_factor_cap_sequence():
    from hdpslice.state import grown_cap
    assert grown_cap(10, 1.5) == 15
    assert grown_cap(15, 1.5) == 23


def test_guard_growth_reaches_fixed_point():
    # tails shrink geometrically, so growth settles in a few steps
    rng = np.random.default_rng(13)
    from hdpslice.state import grow_t_cap, grown_cap
    kern = MultinomialKernel(2)
    for trial in range(100):
        hp = hp_small(seed=int(rng.integers(1 << 30)))
        st = init_state(hp, data_small(), kern)
        st.u_slice[0][:] = rng.uniform(1e-4, 1e-2, size=3)
        growths = 0
        while guard_t_cap(st, 0):
            grow_t_cap(st, 0, grown_cap(int(st.t_cap[0]), hp.growth_factor),
                       kern, hp, rng)
            growths += 1
            assert growths <= 10
        assert st.gamma_sticks[0].tail[-1] < st.u_slice[0].min()


# ---------------------------------------------------------------- draws

def test_categorical_singleton_support():
    logw = np.log(np.array([[0.9, 0.5]]))
    out = categorical_rows(logw, np.array([1]), np.array([0.999]))
    assert out[0] == 1


def test_categorical_even_split():
    rng = np.random.default_rng(14)
    logw = np.zeros((10_000, 2))
    lengths = np.full(10_000, 2, dtype=np.int64)
    out = categorical_rows(logw, lengths, rng.random(10_000))
    assert abs((out == 1).mean() - 0.5) < 0.01


def test_categorical_three_to_one():
    rng = np.random.default_rng(15)
    logw = np.tile(np.log([0.75, 0.25]), (10_000, 1))
    out = categorical_rows(logw, np.full(10_000, 2, dtype=np.int64), rng.random(10_000))
    assert abs((out == 1).mean() - 0.75) < 0.01


def test_categorical_ratio_70_30():
    rng = np.random.default_rng(16)
    logw = np.tile(np.log([0.7, 0.3]), (10_000, 1))
    out = categorical_rows(logw, np.full(10_000, 2, dtype=np.int64), rng.random(10_000))
    assert abs((out == 1).mean() - 0.7) < 0.01


def test_categorical_vacant_uniform_over_four():
    # a vacant table's empty product gives equal weights
    rng = np.random.default_rng(17)
    logw = np.zeros((10_000, 4))
    out = categorical_rows(logw, np.full(10_000, 4, dtype=np.int64), rng.random(10_000))
    for k in range(1, 5):
        assert abs((out == k).mean() - 0.25) < 0.015


def test_categorical_dead_row_sentinel():
    logw = np.full((1, 3), -np.inf)
    out = categorical_rows(logw, np.array([3]), np.array([0.5]))
    assert out[0] == -1


def test_last_admissible_matches_bruteforce():
    rng = np.random.default_rng(18)
    for _ in range(300):
        w = rng.random(rng.integers(1, 9))
        th = rng.random(rng.integers(1, 7))
        got = last_admissible(w, th)
        want = [max((t + 1 for t in range(w.size) if u <= w[t]), default=0) for u in th]
        np.testing.assert_array_equal(got, want)


# ---------------------------------------------------------------- sweeps

def test_sweep_preserves_slice_validity_and_guards():
    hp = hp_small(max_iterations=50)
    data = data_small()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    for it in range(1, 51):
        st, rec = sweep(st, data, kern, hp, it)
        for j in range(2):
            gw = st.gamma_sticks[j].weights
            assert (st.u_slice[j] <= gw[st.table_of_customer[j] - 1]).all()
            assert (st.v_slice[j] <= st.beta_sticks.weights[st.dish_of_table[j] - 1]).all()
            assert st.gamma_sticks[j].tail[-1] < st.u_slice[j].min()
            assert (st.table_of_customer[j] <= st.t_cap[j]).all()
            assert (st.dish_of_table[j] <= st.k_cap).all()
        assert st.beta_sticks.tail[-1] < st.min_v()


def test_sweep_collapses_identical_tokens():
    # identical observations end in one dish in >= 95% of final states
    data = GroupedDataset([[1] * 50, [1] * 50], "tokens", vocab_size=10)
    kern = MultinomialKernel(10)
    finals = 0
    for seed in range(20):
        hp = hp_small(seed=seed, max_iterations=100)
        recs, st = run(data, kern, hp)
        finals += sum(1 for r in recs[-10:] if r.active_dishes == 1)
    assert finals >= 190


def test_sweep_deterministic_across_workers():
    hp = hp_small(max_iterations=8)
    data = data_small()
    kern = MultinomialKernel(2)
    recs1, st1 = run(data, kern, hp, workers=1)
    recs4, st4 = run(data, kern, hp, workers=4)
    assert [format_trace_row(r) for r in recs1] == [format_trace_row(r) for r in recs4]
    np.testing.assert_array_equal(st1.atoms, st4.atoms)
    for j in range(2):
        np.testing.assert_array_equal(st1.table_of_customer[j], st4.table_of_customer[j])


def test_run_zero_iterations():
    hp = hp_small(max_iterations=0)
    recs, st = run(data_small(), MultinomialKernel(2), hp)
    assert recs == []
    assert (st.table_of_customer[0] == 1).all()


def test_run_resume_matches_uninterrupted():
    hp = hp_small(max_iterations=9)
    data = data_small()
    kern = MultinomialKernel(2)
    full, st_full = run(data, kern, hp)

    hp_head = hp_small(max_iterations=4)
    head, st_mid = run(data, kern, hp_head)
    tail, st_res = run(data, kern, hp, state=st_mid, start_iteration=5)
    joined = [format_trace_row(r) for r in head + tail]
    assert joined == [format_trace_row(r) for r in full]
    np.testing.assert_array_equal(st_full.beta_sticks.raw, st_res.beta_sticks.raw)


def test_restart_budget_aborts():
    hp = hp_small(max_restarts=0, initial_t_cap=1, initial_k_cap=1)
    data = GroupedDataset([[1, 2, 3, 1, 2]], "tokens", vocab_size=3)
    st = init_state(hp, data, MultinomialKernel(3))
    with pytest.raises(NumericalError):
        for it in range(1, 20):
            st, _ = sweep(st, data, MultinomialKernel(3), hp, it)


def test_atom_update_order_independent():
    # atoms use one stream per dish, so processing order cannot matter
    from hdpslice import streams as strm
    hp = hp_small()
    data = data_small()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    z = derive_z(st)
    flat_y = data.flat()
    flat_z = np.concatenate(z)
    by_order = {}
    for order in ([1, 2, 3, 4], [4, 3, 2, 1]):
        rows = [None] * 4
        for k in order:
            rng = strm.substream(hp.seed, strm.ATOM, 1, k)
            rows[k - 1] = kern.sample_atom_posterior(flat_y[flat_z == k], rng)
        by_order[tuple(order)] = np.vstack(rows)
    np.testing.assert_array_equal(by_order[(1, 2, 3, 4)], by_order[(4, 3, 2, 1)])


def test_atom_absorbs_full_sufficient_statistics():
    # all data on one dish matches the single-cluster conjugate update
    from hdpslice.kernels import GaussianKernel, gaussian_posterior_params
    rng = np.random.default_rng(19)
    obs = rng.normal(2.0, 1.0, size=(40, 1))
    kern = GaussianKernel(1, tau_phi2=2.0, tau_y2=3.0)
    mu, tau2 = gaussian_posterior_params(obs, 2.0, 3.0)
    draws = np.array([kern.sample_atom_posterior(obs, np.random.default_rng(s))[0]
                      for s in range(4000)])
    assert abs(draws.mean() - mu[0]) < 0.01
    assert abs(draws.var() - 1.0 / tau2) < 0.005


def test_trace_reports_active_dishes_and_bounds():
    hp = hp_small(max_iterations=5)
    data = data_small()
    recs, st = run(data, MultinomialKernel(2), hp)
    for rec in recs:
        assert 1 <= rec.active_dishes <= rec.k_cap
        assert rec.K <= rec.k_cap and rec.max_T <= rec.t_cap_max
        assert np.isfinite(rec.log_joint)
