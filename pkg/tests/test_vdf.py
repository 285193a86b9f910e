import pytest

from certrand.errors import RangeError
from certrand.vdf import DEFAULT_PRIME, VdfParams, root_step, seed_from_vdf, square_step, vdf_eval, vdf_input, vdf_verify

SMALL = VdfParams(p=7, t=1, min_bits=1)


def test_zero_iterations_is_identity():
    p = VdfParams(t=0)
    assert vdf_eval(12345, p) == 12345 and vdf_verify(12345, 12345, p)


def test_p7_single_step():
    y = vdf_eval(2, SMALL)
    # oracle: y^2 = 2 (mod 7) and the residue branch takes the even root
    assert y * y % 7 == 2 and y % 2 == 0
    assert y == 4
    assert vdf_verify(2, y, SMALL)


def test_non_residue_branch_takes_odd_root_of_negation():
    # 3 is a non-residue mod 7; roots of -3 = 4 are 2 and 5
    y = root_step(3, 7)
    assert y * y % 7 == 4 and y % 2 == 1


@pytest.mark.parametrize("p", [7, 11, 19, 23, 10007])
def test_step_is_a_permutation(p):
    images = [root_step(x, p) for x in range(p)]
    assert sorted(images) == list(range(p))
    assert all(square_step(y, p) == x for x, y in zip(range(p), images))


def test_eval_verify_pairs(rng):
    params = VdfParams(t=1024)
    for _ in range(100):
        x = int.from_bytes(rng.bytes(32), "big") % params.p
        y = vdf_eval(x, params)
        assert vdf_verify(x, y, params)
        assert not vdf_verify(x, (y + 1) % params.p, params)


def test_inverse_on_many_points(rng):
    params = VdfParams(t=3)
    for _ in range(1000):
        x = int.from_bytes(rng.bytes(32), "big") % params.p
        assert vdf_verify(x, vdf_eval(x, params), params)


def test_range_checks():
    params = VdfParams(t=1)
    with pytest.raises(RangeError):
        vdf_eval(DEFAULT_PRIME, params)
    with pytest.raises(RangeError):
        vdf_verify(-1, 0, params)


@pytest.mark.parametrize("kwargs", [dict(p=13), dict(p=7), dict(p=2**255 - 19, t=1), dict(t=-1)])
def test_param_validation(kwargs):
    # 13 is 1 mod 4; 7 is too short; 2^255 - 19 is 1 mod 4 as well
    with pytest.raises(ValueError):
        VdfParams(**kwargs)


def test_composite_rejected():
    with pytest.raises(ValueError, match="prime"):
        VdfParams(p=3 * (2**256 + 1))  # 3 mod 4, wide enough, composite


def test_input_and_seed_derivation():
    params = VdfParams(t=4)
    x1, x2 = vdf_input(b"a", params), vdf_input(b"b", params)
    assert x1 != x2 and 0 <= x1 < params.p
    s = seed_from_vdf(99, 13, params)
    assert len(s) == 2 and s[1] & 0b111 == 0
    assert seed_from_vdf(99, 13, params) == s
