import numpy as np
import pytest
import sympy

from certrand.apps.prng import (
    GENERATOR,
    SAFE_PRIME,
    Trapdoor,
    backdoor_predict,
    make_backdoored,
    prng_bits,
    prng_next,
    seed_prng,
)
from certrand.errors import TrapdoorMismatch
from certrand.statcheck import binomial_within, monobit


@pytest.fixture(scope="module")
def backdoor():
    return make_backdoored(np.random.default_rng(4))


def test_group_parameters(backdoor):
    params, _ = backdoor
    assert sympy.isprime(SAFE_PRIME) and sympy.isprime((SAFE_PRIME - 1) // 2)
    assert pow(GENERATOR, params.q, params.p) == 1
    assert pow(params.Q, params.q, params.p) == 1


def test_fixed_seed_is_reproducible(backdoor):
    params, _ = backdoor
    a, _, _ = prng_bits(seed_prng(params, 1234), 640)
    b, _, _ = prng_bits(seed_prng(params, 1234), 640)
    assert np.array_equal(a, b)


def test_distinct_seeds_diverge_immediately(backdoor, rng):
    params, _ = backdoor
    same = 0
    for _ in range(10**4):
        s1, s2 = (int(v) for v in rng.integers(1, 2**62, size=2))
        if s1 % (params.q - 1) == s2 % (params.q - 1):
            continue
        same += prng_next(seed_prng(params, s1))[0] == prng_next(seed_prng(params, s2))[0]
    assert same == 0


def test_output_passes_monobit(backdoor):
    params, _ = backdoor
    bits, _, _ = prng_bits(seed_prng(params, 77), 10**6)
    assert monobit(bits).passed


def test_trapdoor_predicts_every_next_output(backdoor, rng):
    params, trapdoor = backdoor
    for _ in range(10**4):
        prng = seed_prng(params, int(rng.integers(1, 2**62)))
        first, prng = prng_next(prng)
        second, _ = prng_next(prng)
        assert backdoor_predict(trapdoor, first, params) == second


def test_wrong_trapdoor_is_at_chance(backdoor, rng):
    params, trapdoor = backdoor
    wrong = Trapdoor(params, (trapdoor.e + 1) % params.q)
    hits = 0
    trials = 2000
    for _ in range(trials):
        first, prng = prng_next(seed_prng(params, int(rng.integers(1, 2**62))))
        hits += backdoor_predict(wrong, first, params) == prng_next(prng)[0]
    assert binomial_within(hits, trials, 2.0**-params.width).passed


def test_params_mismatch(backdoor):
    params, trapdoor = backdoor
    other, _ = make_backdoored(np.random.default_rng(5))
    with pytest.raises(TrapdoorMismatch):
        backdoor_predict(trapdoor, 5, other)
