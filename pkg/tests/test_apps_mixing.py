import numpy as np

from certrand import bits as bitops
from certrand.apps.mixing import mix_onchain, randao_accumulate, randao_with_last_revealer
from certrand.extractors import _parity_form, two_source_extract
from certrand.statcheck import monobit


def test_zero_x_gives_zero():
    assert not mix_onchain(np.zeros(128, np.uint8), np.ones(128, np.uint8), 2).any()


def test_delegates_to_two_source(rng):
    for _ in range(50):
        x, y = bitops.random_bits(64, rng), bitops.random_bits(64, rng)
        assert np.array_equal(mix_onchain(x, y, 8, 8), two_source_extract(x, y, 8, 8))


def test_biased_accumulator_is_mixed(rng):
    trials = 10**5
    xs = rng.integers(0, 2, size=(trials, 64)).astype(np.int64)
    ys = (rng.random((trials, 64)) < 0.7).astype(np.int64)
    xm = (xs.reshape(trials, 8, 8) @ _parity_form(8)) & 1
    yb = ys.reshape(trials, 8, 8)
    z = np.stack([np.einsum("tbk,tbk->t", xm, np.roll(yb, -j, axis=1)) & 1 for j in range(8)], axis=1)
    for t in range(5):
        assert np.array_equal(z[t], mix_onchain(xs[t], ys[t], 8, 8))
    assert monobit(z.reshape(-1)).passed


def test_randao_is_xor():
    assert randao_accumulate([[1, 0, 1], [1, 1, 0]], 3).tolist() == [0, 1, 1]


def test_last_revealer_biases_randao(rng):
    ones = 0
    for _ in range(2000):
        acc, _ = randao_with_last_revealer([bitops.random_bits(8, rng)], bitops.random_bits(8, rng), lambda a: int(a[0]))
        ones += int(acc[0])
    # withholding turns a fair bit into one that is 1 three quarters of the time
    assert ones / 2000 > 0.7
