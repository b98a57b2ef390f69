import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flatwalk.hamiltonian import (
    HamiltonianError,
    HamiltonianSpec,
    SupportPattern,
    TermDistribution,
    operator_norm_bound,
    parse_clock_shift,
    parse_pauli,
    sample_term,
)


def test_parse_single_string():
    spec = parse_pauli([("ZZI", 1.0)])
    (pattern, coeff), = spec.terms
    assert pattern.support == {0, 1}
    assert pattern.weight == 2
    assert pattern.entries == ((0, 3), (1, 3))
    assert coeff == 1.0


def test_parse_two_single_site_terms():
    spec = parse_pauli([("XII", 0.5), ("IXI", 0.5)])
    assert [p.weight for p in spec.patterns] == [1, 1]
    assert spec.sum_c2 == pytest.approx(0.5)


@pytest.mark.parametrize(
    "terms",
    [[("III", 1.0)], [("XI", 1.0), ("XII", 1.0)], [("XQ", 1.0)], []],
    ids=["identity", "mixed-lengths", "bad-letter", "empty"],
)
def test_parse_pauli_errors(terms):
    with pytest.raises(HamiltonianError):
        parse_pauli(terms)


def test_clock_shift_single_site():
    spec = parse_clock_shift([({0: (1, 0)}, 1.0)], n=2, q=3)
    assert spec.patterns[0].entries == ((0, 3),)
    assert spec.basis == "clock_shift"


def test_clock_shift_identity_factor():
    with pytest.raises(HamiltonianError):
        parse_clock_shift([({0: (0, 0)}, 1.0)], n=2, q=3)


def test_clock_shift_out_of_range():
    with pytest.raises(HamiltonianError):
        parse_clock_shift([({0: (3, 0)}, 1.0)], n=2, q=3)


def test_clock_shift_complex_coefficient():
    spec = parse_clock_shift([({0: (1, 0), 1: (0, 1)}, 2j)], n=2, q=2)
    assert spec.weights[0] == pytest.approx(4.0)
    assert spec.patterns[0].entries == ((0, 2), (1, 1))


def test_identity_entry_forbidden():
    with pytest.raises(HamiltonianError):
        SupportPattern(((0, 0),))


def test_sampling_probabilities():
    dist = HamiltonianSpec.from_terms(
        2, 2, [(SupportPattern(((0, 3),)), 1.0), (SupportPattern(((1, 3),)), 2.0)]
    ).distribution()
    assert dist.probabilities() == pytest.approx([0.2, 0.8])


def test_single_term_always_drawn():
    spec = parse_pauli([("ZX", 0.3)])
    rng = np.random.default_rng(0)
    assert {sample_term(spec.distribution(), spec.patterns, rng) for _ in range(50)} == {spec.patterns[0]}


def test_uniform_frequencies():
    from scipy import stats

    dist = TermDistribution([1.0, 1.0, 1.0, 1.0])
    draws = dist.sample_indices(np.random.default_rng(11), 10_000)
    counts = np.bincount(draws, minlength=4)
    sigma = np.sqrt(10_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 2500) <= 3 * sigma)
    assert stats.chisquare(counts).pvalue > 0.001


def test_weighted_frequencies_chi_square():
    from scipy import stats

    weights = np.array([0.1, 2.0, 0.5, 1.4])
    draws = TermDistribution(weights).sample_indices(np.random.default_rng(5), 50_000)
    counts = np.bincount(draws, minlength=4)
    assert stats.chisquare(counts, 50_000 * weights / weights.sum()).pvalue > 0.001


def test_empty_distribution():
    with pytest.raises(HamiltonianError):
        TermDistribution([])


@pytest.mark.parametrize("coeffs,expected", [((1, -2), 3.0), ((0.5,), 0.5), ((3 + 4j,), 5.0)])
def test_operator_norm_bound(coeffs, expected):
    letters = ["ZI", "IZ"]
    spec = parse_pauli([(letters[i], c) for i, c in enumerate(coeffs)])
    assert operator_norm_bound(spec) == pytest.approx(expected)


def test_duplicates_merge_with_warning():
    with pytest.warns(UserWarning, match="duplicate"):
        spec = parse_pauli([("ZI", 1.0), ("ZI", 0.5)])
    assert len(spec.terms) == 1
    assert spec.terms[0][1] == 1.5


def test_json_round_trip():
    spec = parse_pauli([("ZZI", 1.0), ("IXY", -0.25j)])
    again = HamiltonianSpec.from_dict(spec.to_dict())
    assert again == spec


def test_json_pauli_shorthand():
    spec = HamiltonianSpec.from_dict({"n": 3, "q": 2, "pauli_terms": [["ZZI", 1.0]]})
    assert spec.patterns[0].support == {0, 1}


def test_json_explicit_terms():
    spec = HamiltonianSpec.from_dict(
        {"n": 3, "q": 2, "terms": [{"sites": [0, 1], "ops": [3, 3], "coeff": [1.0, 0.0]}]}
    )
    assert spec == parse_pauli([("ZZI", 1.0)])


def test_site_out_of_range():
    with pytest.raises(HamiltonianError):
        HamiltonianSpec.from_terms(2, 2, [(SupportPattern(((2, 1),)), 1.0)])


@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=6), st.randoms())
def test_sum_c2_order_invariant(coeffs, rand):
    patterns = [SupportPattern(((i, 3),)) for i in range(len(coeffs))]
    terms = list(zip(patterns, coeffs))
    spec = HamiltonianSpec.from_terms(len(coeffs), 2, terms)
    rand.shuffle(terms)
    shuffled = HamiltonianSpec.from_terms(len(coeffs), 2, terms)
    assert spec.sum_c2 == pytest.approx(shuffled.sum_c2)
    assert spec.sum_c2 == pytest.approx(sum(c * c for c in coeffs))
