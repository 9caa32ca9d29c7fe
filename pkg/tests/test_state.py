import copy

import numpy as np
import pytest

from hdpslice.errors import DataFormatError, DomainError, NumericalError
from hdpslice.kernels import GaussianKernel, MultinomialKernel
from hdpslice.sampler import sweep
from hdpslice.state import (ChainState, GroupedDataset, Hyperparams, derive_z,
                            grow_k_cap, grow_t_cap, init_state, load_checkpoint,
                            log_beta1_density, log_joint, restore_snapshot,
                            save_checkpoint, take_snapshot)
from hdpslice.sticks import StickVector


def small_data():
    return GroupedDataset([[1, 2, 1], [2, 2]], "tokens", vocab_size=2)


def small_hp(**kw):
    base = dict(gamma0=1.0, alpha0=1.0, initial_t_cap=10, initial_k_cap=10,
                max_iterations=3, seed=9)
    base.update(kw)
    return Hyperparams(**base)


def test_hyperparams_validation():
    with pytest.raises(DomainError):
        Hyperparams(gamma0=0.0, alpha0=1.0)
    with pytest.raises(DomainError):
        Hyperparams(gamma0=1.0, alpha0=1.0, growth_factor=1.0)
    with pytest.raises(DomainError):
        Hyperparams(gamma0=1.0, alpha0=1.0, initial_t_cap=0)


def test_dataset_validation():
    with pytest.raises(DomainError):
        GroupedDataset([], "tokens", vocab_size=3)
    with pytest.raises(DomainError):
        GroupedDataset([[]], "tokens", vocab_size=3)
    with pytest.raises(DataFormatError):
        GroupedDataset([[1, 4]], "tokens", vocab_size=3)
    with pytest.raises(DataFormatError):
        GroupedDataset([np.zeros((2, 2)), np.zeros((1, 3))], "vectors")


def test_init_state_shapes_and_all_ones():
    hp = small_hp()
    kern = MultinomialKernel(2)
    st = init_state(hp, small_data(), kern)
    assert len(st.beta_sticks) == 10
    assert st.k_cap == 10 and (st.t_cap == 10).all()
    for j, n_j in enumerate((3, 2)):
        assert len(st.gamma_sticks[j]) == 10
        assert st.table_of_customer[j].shape == (n_j,)
        assert (st.table_of_customer[j] == 1).all()
        assert (st.dish_of_table[j] == 1).all()
    assert all((z == 1).all() for z in derive_z(st))


def test_init_state_slice_validity():
    st = init_state(small_hp(), small_data(), MultinomialKernel(2))
    for j in range(2):
        gw = st.gamma_sticks[j].weights
        assert (st.u_slice[j] <= gw[st.table_of_customer[j] - 1]).all()
        bw = st.beta_sticks.weights
        assert (st.v_slice[j] <= bw[st.dish_of_table[j] - 1]).all()


def test_init_state_deterministic():
    a = init_state(small_hp(), small_data(), MultinomialKernel(2))
    b = init_state(small_hp(), small_data(), MultinomialKernel(2))
    np.testing.assert_array_equal(a.beta_sticks.raw, b.beta_sticks.raw)
    np.testing.assert_array_equal(a.atoms, b.atoms)
    for j in range(2):
        np.testing.assert_array_equal(a.u_slice[j], b.u_slice[j])
        np.testing.assert_array_equal(a.v_slice[j], b.v_slice[j])


def test_derive_z_composition():
    st = init_state(small_hp(), small_data(), MultinomialKernel(2))
    st.dish_of_table[0][:2] = [3, 1]
    st.table_of_customer[0][:] = [2, 2, 1]
    assert derive_z(st)[0].tolist() == [1, 1, 3]


def test_derive_z_consistent_relabeling():
    # swapping two tables together with their dishes leaves z unchanged
    st = init_state(small_hp(), small_data(), MultinomialKernel(2))
    st.dish_of_table[0][:2] = [4, 2]
    st.table_of_customer[0][:] = [1, 2, 1]
    before = derive_z(st)[0].copy()
    st.dish_of_table[0][:2] = [2, 4]
    st.table_of_customer[0][:] = [2, 1, 2]
    np.testing.assert_array_equal(before, derive_z(st)[0])


def hand_log_joint(st, data, kern, hp):
    # independent re-evaluation of the truncated joint, written longhand
    total = 0.0
    for j, g in enumerate(data.groups):
        for i, y in enumerate(g):
            t = st.table_of_customer[j][i]
            z = st.dish_of_table[j][t - 1]
            total += kern.log_likelihood(y, st.atoms[z - 1])
            total += np.log(st.gamma_sticks[j].weights[t - 1])
        for t in range(int(st.t_cap[j])):
            total += log_beta1_density(st.gamma_sticks[j].raw[t], hp.alpha0)
            total += np.log(st.beta_sticks.weights[st.dish_of_table[j][t] - 1])
    for k in range(st.k_cap):
        total += log_beta1_density(st.beta_sticks.raw[k], hp.gamma0)
        total += kern.atom_log_prior(st.atoms[k])
    return total


def test_log_joint_single_customer_hand_case():
    hp = small_hp(initial_t_cap=1, initial_k_cap=1)
    data = GroupedDataset([[1]], "tokens", vocab_size=2)
    kern = MultinomialKernel(2, 0.5)
    st = init_state(hp, data, kern)
    got = log_joint(st, data, kern, hp)
    g = st.gamma_sticks[0].raw[0]
    b = st.beta_sticks.raw[0]
    expect = (kern.log_likelihood(1, st.atoms[0])
              + np.log(st.gamma_sticks[0].weights[0])
              + log_beta1_density(g, hp.alpha0)
              + np.log(st.beta_sticks.weights[0])
              + log_beta1_density(b, hp.gamma0)
              + kern.atom_log_prior(st.atoms[0]))
    assert got == pytest.approx(expect, abs=1e-9)


def test_log_joint_matches_longhand_random_state():
    hp = small_hp()
    data = small_data()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    st, _ = sweep(st, data, kern, hp, 1)
    got = log_joint(st, data, kern, hp)
    assert got == pytest.approx(hand_log_joint(st, data, kern, hp), abs=1e-9)


def test_log_joint_unit_likelihood_factor():
    # a customer whose likelihood factor is 1 shifts the joint by its
    # seating weight only
    hp = small_hp(initial_t_cap=2, initial_k_cap=1)
    kern = MultinomialKernel(2, 0.5)
    d1 = GroupedDataset([[1]], "tokens", vocab_size=2)
    d2 = GroupedDataset([[1, 1]], "tokens", vocab_size=2)
    s1 = init_state(hp, d1, kern)
    s1.atoms = np.array([[1.0, 0.0]])  # unit mass on word 1
    s2 = copy.deepcopy(s1)
    s2.table_of_customer[0] = np.array([1, 1], dtype=np.int64)
    s2.u_slice[0] = np.concatenate([s1.u_slice[0], [s1.u_slice[0][0]]])
    lj1 = log_joint(s1, d1, kern, hp)
    lj2 = log_joint(s2, d2, kern, hp)
    assert lj2 - lj1 == pytest.approx(np.log(s1.gamma_sticks[0].weights[0]), abs=1e-9)


def test_log_joint_nonfinite_reported():
    hp = small_hp(initial_t_cap=1, initial_k_cap=1)
    data = GroupedDataset([[2]], "tokens", vocab_size=2)
    kern = MultinomialKernel(2, 0.5)
    st = init_state(hp, data, kern)
    st.atoms = np.array([[1.0, 0.0]])  # zero mass on the observed word
    with pytest.raises(NumericalError):
        log_joint(st, data, kern, hp)


def test_slice_indicator_marginalizes_to_weight():
    # averaging the indicator u <= w over uniform u recovers the weight
    rng = np.random.default_rng(11)
    w = 0.37
    u = rng.random(100_000)
    assert abs((u <= w).mean() - w) < 0.01


def test_snapshot_roundtrip_and_independence():
    hp = small_hp()
    data = small_data()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    snap = take_snapshot(st, iteration=1)
    st.table_of_customer[0][:] = 5
    st.atoms[:] = 0.5
    st.k_cap = 99
    back = restore_snapshot(snap)
    assert back.k_cap == 10
    assert (back.table_of_customer[0] == 1).all()
    # restoring twice gives independent copies
    again = restore_snapshot(snap)
    again.table_of_customer[0][:] = 7
    assert (back.table_of_customer[0] == 1).all()


def test_snapshot_replay_reproduces_iteration():
    hp = small_hp()
    data = small_data()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    snap = take_snapshot(st, iteration=1)
    st1, rec1 = sweep(st, data, kern, hp, 1)
    st2, rec2 = sweep(restore_snapshot(snap), data, kern, hp, 1)
    from hdpslice.io import format_trace_row
    assert format_trace_row(rec1) == format_trace_row(rec2)
    np.testing.assert_array_equal(st1.beta_sticks.raw, st2.beta_sticks.raw)
    for j in range(2):
        np.testing.assert_array_equal(st1.table_of_customer[j], st2.table_of_customer[j])
        np.testing.assert_array_equal(st1.u_slice[j], st2.u_slice[j])


def test_snapshot_size_scales_with_caps():
    hp = small_hp()
    data = small_data()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    snap = take_snapshot(st)
    n_sticks = len(snap.payload.beta_sticks) + sum(len(s) for s in snap.payload.gamma_sticks)
    assert n_sticks == st.k_cap + int(st.t_cap.sum())


def test_grow_t_cap_materializes_consistently():
    hp = small_hp(initial_t_cap=2, initial_k_cap=2)
    data = small_data()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    rng = np.random.default_rng(3)
    grow_t_cap(st, 0, 5, kern, hp, rng)
    assert st.t_cap[0] == 5 and len(st.gamma_sticks[0]) == 5
    assert st.dish_of_table[0].shape == (5,) and st.v_slice[0].shape == (5,)
    assert (st.dish_of_table[0] >= 1).all() and (st.dish_of_table[0] <= st.k_cap).all()
    bw = st.beta_sticks.weights
    assert (st.v_slice[0] <= bw[st.dish_of_table[0] - 1]).all()
    assert st.atoms.shape[0] == st.k_cap


def test_grow_k_cap_extends_atoms():
    hp = small_hp(initial_t_cap=2, initial_k_cap=2)
    st = init_state(hp, small_data(), MultinomialKernel(2))
    grow_k_cap(st, 7, MultinomialKernel(2), hp, np.random.default_rng(4))
    assert st.k_cap == 7
    assert len(st.beta_sticks) == 7 and st.atoms.shape == (7, 2)


def test_checkpoint_roundtrip(tmp_path):
    hp = small_hp()
    data = small_data()
    kern = MultinomialKernel(2)
    st = init_state(hp, data, kern)
    st, _ = sweep(st, data, kern, hp, 1)
    path = tmp_path / "chain.ckpt"
    save_checkpoint(st, hp, 2, path)
    back, seed, nxt = load_checkpoint(path)
    assert (seed, nxt) == (hp.seed, 2)
    np.testing.assert_array_equal(back.beta_sticks.raw, st.beta_sticks.raw)
    np.testing.assert_array_equal(back.atoms, st.atoms)
    for j in range(2):
        np.testing.assert_array_equal(back.v_slice[j], st.v_slice[j])
    assert back.k_cap == st.k_cap


def test_checkpoint_rejects_other_files(tmp_path):
    p = tmp_path / "junk.json"
    p.write_text('{"format": "something-else"}')
    with pytest.raises(DataFormatError):
        load_checkpoint(p)
