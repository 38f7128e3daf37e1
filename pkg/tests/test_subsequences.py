import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ideallimits.ideal import IdealSpec, TruncatedSet, parse_set_descriptor
from ideallimits.sequences import make_sequence
from ideallimits.subsequences import (
    OmegaSample,
    directed_hausdorff,
    hausdorff,
    lambda_agreement_experiment,
    lambda_gamma_zero_one_experiment,
    relative_density,
    restrict,
    sample_omega,
)

I0 = IdealSpec.alpha_density(0)
points = st.lists(st.floats(-10, 10, allow_nan=False), max_size=20)


def test_digits_are_reproducible_and_lsb_first():
    a, b = sample_omega(11, 1000), sample_omega(11, 1000)
    assert np.array_equal(a.digits, b.digits)
    word = np.random.PCG64(np.random.SeedSequence(11)).random_raw(1)[0]
    assert a.digits[:64].tolist() == [(int(word) >> i) & 1 for i in range(64)]
    assert not np.array_equal(a.digits, sample_omega(12, 1000).digits)


def test_prefix_stability():
    # a longer stream extends a shorter one with the same seed
    assert np.array_equal(sample_omega(5, 100).digits, sample_omega(5, 1000).digits[:100])


def test_normality_statistics():
    om = sample_omega(3, 10**6)
    assert om.normality_deviation < 0.005 and not om.normality_flag
    skewed = OmegaSample.from_digits([1] * 90 + [0] * 10)
    assert skewed.normality_flag
    with pytest.raises(ValueError):
        OmegaSample.from_digits([0, 2])


def test_all_zero_draw_is_redrawn():
    # one-digit streams are all zero half the time; every draw must select something
    for seed in range(40):
        om = sample_omega(seed, 1)
        assert om.digits.tolist() == [1]
    assert any(sample_omega(s, 1).attempt > 0 for s in range(40))


def test_restrict():
    x = make_sequence("convergent-fixture", 8, ell=0.0)
    om = OmegaSample.from_digits([1, 0, 1, 0, 0, 0, 0, 1])
    y = restrict(x, om)
    assert y.values.tolist() == [1.0, 1 / 3, 1 / 8]
    with pytest.raises(ValueError):
        restrict(x, OmegaSample.from_digits([1, 0]))


def test_relative_density():
    A = parse_set_descriptor("evens", 10**5)
    B = parse_set_descriptor("multiples:4", 10**5)
    assert relative_density(A, B) == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ValueError):
        relative_density(TruncatedSet.empty(5), B)


def test_hausdorff_basics():
    assert hausdorff([0.0, 1.0], [0.1, 0.9]) == pytest.approx(0.1)
    assert directed_hausdorff([], [1.0]) == 0.0
    assert directed_hausdorff([1.0], []) == math.inf
    assert hausdorff([], []) == 0.0


@given(points, points)
def test_hausdorff_matches_brute_force(a, b):
    if a and b:
        brute = max(min(abs(p - r) for r in b) for p in a)
        assert directed_hausdorff(a, b) == pytest.approx(brute)
    assert hausdorff(a, b) == hausdorff(b, a)


@given(points, points, points)
def test_hausdorff_triangle_inequality(a, b, c):
    if a and b and c:
        assert hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-9


@pytest.mark.parametrize("desc", ["alternating", "convergent", "constant"])
def test_fixture_battery_subsample_points_stay_near_reference(desc):
    n = 2**17
    kinds = {
        "alternating": make_sequence("alternating", n),
        "convergent": make_sequence("convergent-fixture", n, ell=0.4),
        "constant": make_sequence("constant", n, value=-1.0),
    }
    res = lambda_agreement_experiment(kinds[desc], I0, 0.02, M=8, base_seed=100)
    assert res.agreement_fraction == 1.0
    assert all(r.containment_violations == 0 for r in res.records)
    assert all(r.error is None for r in res.records)


def test_zero_one_fixture_directions():
    n = 2**17
    res = lambda_gamma_zero_one_experiment(make_sequence("alternating", n), I0, 0.02, M=6)
    assert res.agreement_fraction == 1.0 and res.reference["lambda_equals_gamma"]


def test_lpf_reference_lambda_differs_from_gamma(lpf_1e6):
    res = lambda_gamma_zero_one_experiment(lpf_1e6, I0, 0.02, M=4)
    assert not res.reference["lambda_equals_gamma"]
    assert res.agreement_fraction == 0.0


def test_experiment_records_and_csv():
    x = make_sequence("alternating", 2**15)
    res = lambda_agreement_experiment(x, I0, 0.02, M=5, base_seed=40)
    assert [r.seed for r in res.records] == [40, 41, 42, 43, 44]
    assert all(abs(r.selected_density - 0.5) < 0.02 for r in res.records)
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("index,seed") and len(lines) == 6
    d = res.to_dict()
    assert d["params"]["M"] == 5 and d["agreeing"] == 5


def test_parallel_equals_serial():
    x = make_sequence("alternating", 2**15)
    a = lambda_agreement_experiment(x, I0, 0.02, M=6, base_seed=1, n_jobs=1)
    b = lambda_agreement_experiment(x, I0, 0.02, M=6, base_seed=1, n_jobs=3)
    assert a.to_dict() == b.to_dict()


def test_experiment_validation():
    x = make_sequence("alternating", 2**12)
    with pytest.raises(ValueError):
        lambda_agreement_experiment(x, I0, 0.02, M=0)
    with pytest.raises(ValueError):
        lambda_agreement_experiment(x, I0, -1.0, M=2)


def test_short_subsequence_is_recorded_not_raised():
    # too few indices for the block construction: the sample carries the error
    x = make_sequence("alternating", 300)
    res = lambda_agreement_experiment(x, I0, 0.02, M=2, min_blocks=8)
    assert all(r.error and not r.agree for r in res.records)
