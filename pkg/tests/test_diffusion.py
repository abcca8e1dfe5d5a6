import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imdpp import kernels
from imdpp.diffusion import (draw_realization, enumerate_realizations, mean_stderr, run_kernel,
                             sample_keys, seed_array, sigma_estimate, sigma_exact_static,
                             sigma_on_realization, simulate_campaign, trace_jsonl)
from imdpp.errors import BudgetError, InputError, SizeError
from imdpp.world import Params, array_world

from helpers import random_seeds, random_world, reference_campaign

BACKENDS = ["python"] + (["cython"] if kernels.HAVE_COMPILED else [])
FROZEN = Params(0, 0, 0)


def chain(p=1.0, pref=1.0, params=FROZEN):
    return array_world(2, 1, {(0, 1): p}, [[1.0], [pref]], params=params)


def test_empty_seed_group():
    w = chain()
    assert simulate_campaign([], w, 2) == []
    assert sigma_estimate([], w, 2) == (0.0, 0.0)


def test_isolated_seed_gives_single_event():
    w = array_world(1, 1, {}, [[0.5]], weights=[2.0], params=FROZEN)
    ev = simulate_campaign([("u0", "i0", 1)], w, 1)
    assert [(e.t, e.step, e.kind) for e in ev] == [(1, 0, "SEEDED")]
    assert sigma_estimate([(0, 0, 1)], w, 1, M=10) == (2.0, 0.0)
    assert sigma_exact_static([(0, 0, 1)], w, 1) == 2.0


def test_deterministic_chain():
    ev = simulate_campaign([(0, 0, 1)], chain(), 1)
    assert [(e.step, e.user, e.kind) for e in ev] == [(0, "u0", "SEEDED"), (1, "u1", "PROMOTED")]


def test_input_and_budget_errors():
    w = chain()
    with pytest.raises(InputError):
        simulate_campaign([("nobody", "i0", 1)], w, 1)
    with pytest.raises(InputError):
        simulate_campaign([(0, 0, 3)], w, 2)
    with pytest.raises(BudgetError):
        simulate_campaign([(0, 0, 1), (1, 0, 1)], w, 1, budget=1.5)
    with pytest.raises(InputError):
        sigma_estimate([(0, 0, 1)], w, 1, M=0)
    with pytest.raises(InputError):
        sigma_exact_static([(0, 0, 1)], chain(params=Params()), 1)


def test_repeated_seed_is_inert():
    w = chain(p=0.0)
    assert sigma_exact_static([(0, 0, 1), (0, 0, 2)], w, 2) == 1.0


def test_trace_jsonl_format():
    lines = trace_jsonl(simulate_campaign([(0, 0, 1)], chain(), 1)).splitlines()
    assert json.loads(lines[1]) == {"t": 1, "step": 1, "user": "u1", "item": "i0",
                                    "kind": "PROMOTED"}


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_kernel_matches_reference_simulator(backend, seed):
    rng = np.random.default_rng(seed)
    w = random_world(rng)
    T = int(rng.integers(1, 4))
    seeds = random_seeds(rng, w, T)
    key = kernels.sample_key(seed, 0)
    want_events, want_state = reference_campaign(w, seeds, T, key)
    events, total, _, state = run_kernel(w, seed_array(w, seeds, T), T, key, backend=backend)
    assert [tuple(map(int, e)) for e in events] == want_events
    assert total == pytest.approx(math.fsum(w.weights[y] for _, _, _, y, _ in want_events))
    for a, b in zip(state.arrays(), want_state.arrays()):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_trace_invariants(seed):
    rng = np.random.default_rng(seed)
    w = random_world(rng)
    T = int(rng.integers(1, 4))
    events = simulate_campaign(random_seeds(rng, w, T), w, T, seed)
    pairs = [(e.user, e.item) for e in events]
    assert len(pairs) == len(set(pairs))
    assert all((e.kind == "SEEDED") == (e.step == 0) for e in events)
    assert all(e.step <= w.n * w.k for e in events)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_agree_on_sample_values(rng):
    w = random_world(rng, n=6, k=3)
    arr = seed_array(w, [(0, 0, 1), (3, 2, 2)], 3)
    keys = sample_keys(5, 200)
    a = kernels.get_backend("python").sample_values(w, w.init, arr, 3, keys, None)
    b = kernels.get_backend("cython").sample_values(w, w.init, arr, 3, keys, None)
    assert np.array_equal(a[0], b[0])


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_agree_across_many_samples_on_larger_world():
    # per-edge scratch stamps must not leak from one sample into the next
    from imdpp.harness import SyntheticSpec, generate_synthetic
    w = generate_synthetic(SyntheticSpec(users=200, items=4, edge_density=0.03, seed=1)).world()
    r = np.random.default_rng(0)
    arr = seed_array(w, [(int(u), int(x), int(r.integers(1, 4)))
                         for u, x in zip(r.choice(w.n, 10), r.integers(0, w.k, 10))], 3)
    keys = sample_keys(0, 150)
    a = kernels.get_backend("python").sample_values(w, w.init, arr, 3, keys, None)
    b = kernels.get_backend("cython").sample_values(w, w.init, arr, 3, keys, None)
    assert np.array_equal(a[0], b[0])


def test_estimate_is_reproducible():
    rng = np.random.default_rng(3)
    w = random_world(rng, n=6, k=2)
    s = [(0, 0, 1), (1, 1, 2)]
    assert sigma_estimate(s, w, 2, 50, seed=9) == sigma_estimate(s, w, 2, 50, seed=9)


def test_parallel_workers_match_serial():
    rng = np.random.default_rng(4)
    w = random_world(rng, n=6, k=2)
    s = [(0, 0, 1), (1, 1, 2)]
    assert sigma_estimate(s, w, 2, 60, seed=1, workers=2) == \
        pytest.approx(sigma_estimate(s, w, 2, 60, seed=1), abs=1e-9)


def test_mean_stderr():
    assert mean_stderr([2.0, 2.0]) == (2.0, 0.0)
    m, se = mean_stderr([0.0, 2.0])
    assert m == 1.0 and se == pytest.approx(1.0)


def tiny_static(seed):
    rng = np.random.default_rng(seed)
    return random_world(rng, n=int(rng.integers(2, 5)), k=int(rng.integers(1, 3)),
                        params=FROZEN, density=0.5), rng


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_exact_evaluator_matches_enumeration(seed):
    w, rng = tiny_static(seed)
    T = int(rng.integers(1, 3))
    seeds = random_seeds(rng, w, T)
    try:
        outcomes = list(enumerate_realizations(w, T, cap=1 << 12))
    except SizeError:
        return
    want = math.fsum(p * sigma_on_realization(r, seeds, w) for r, p in outcomes)
    assert sigma_exact_static(seeds, w, T) == pytest.approx(want, abs=1e-9)
    assert math.fsum(p for _, p in outcomes) == pytest.approx(1.0)


def test_exact_on_deterministic_instance_equals_single_trace():
    w = array_world(3, 1, {(0, 1): 1.0, (1, 2): 1.0}, np.ones((3, 1)), params=FROZEN)
    assert sigma_exact_static([(0, 0, 1)], w, 1) == 3.0
    assert sigma_estimate([(0, 0, 1)], w, 1, 5) == (3.0, 0.0)


def test_seed_adopts_regardless_of_preference():
    w = array_world(1, 1, {}, [[0.5]], params=FROZEN)
    assert sigma_exact_static([(0, 0, 1)], w, 1) == 1.0


def test_realization_edge_cases(rng):
    w = random_world(rng, n=4, k=2, params=FROZEN)
    r = draw_realization(w, 2, rng)
    assert sigma_on_realization(r, [], w) == 0.0
    r.adopt[:] = 0
    r.ext[:] = 0
    blocked = array_world(3, 1, {(0, 1): 0.5, (1, 2): 0.5}, np.ones((3, 1)), params=FROZEN)
    rb = draw_realization(blocked, 1, rng)
    rb.adopt[:] = 0
    assert sigma_on_realization(rb, [(0, 0, 1), (2, 0, 1)], blocked) == 2.0


def test_realization_replay_matches_reference(rng):
    for _ in range(20):
        w = random_world(rng, n=4, k=2, params=FROZEN)
        r = draw_realization(w, 2, rng)
        seeds = random_seeds(rng, w, 2)
        a = sigma_on_realization(r, seeds, w, backend="python")
        assert a == sigma_on_realization(r, seeds, w)


def test_enumeration_cap():
    w = array_world(6, 1, {(0, i): 0.5 for i in range(1, 6)}, np.ones((6, 1)), params=FROZEN)
    with pytest.raises(SizeError):
        list(enumerate_realizations(w, 2, cap=8))
    with pytest.raises(SizeError):
        sigma_exact_static([(0, 0, 1), (0, 0, 2)], w, 2, cap=4)
