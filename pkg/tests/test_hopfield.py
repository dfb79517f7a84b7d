import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import GOLDEN_X
from echomem import hopfield
from echomem.errors import (
    DimensionError,
    EmptyPatternListError,
    PatternLengthError,
    ZeroEntryError,
)
from echomem.hopfield import DynamicsConfig, MatchKind

GOLDEN_RAW = np.array([
    [1, 1, -1, 1, -1, -1, 1],
    [1, 1, -1, 1, -1, -1, 1],
    [-1, -1, 1, -1, 1, 1, -1],
    [1, 1, -1, 1, -1, -1, 1],
    [-1, -1, 1, -1, 1, 1, -1],
    [-1, -1, 1, -1, 1, 1, -1],
    [1, 1, -1, 1, -1, -1, 1],
])


def bipolar(n, size=None, rng=None):
    rng = rng or np.random.default_rng()
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=(size, n) if size else n)


bipolar_st = st.integers(3, 40).flatmap(
    lambda n: st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)
)


class TestHebbianTrain:
    def test_raw_outer_product_matches_worked_example(self):
        assert np.array_equal(hopfield.raw_outer_product(GOLDEN_X), GOLDEN_RAW)

    def test_two_neurons(self):
        W = hopfield.hebbian_train([[1, -1]])
        assert np.array_equal(W, [[0.0, -0.5], [-0.5, 0.0]])

    def test_matches_double_loop(self, rng):
        X = bipolar(8, 2, rng)
        W = hopfield.hebbian_train(X)
        expected = oracles.hebbian_weights(X.tolist())
        assert np.array_equal(W, np.array([[float(v) for v in row] for row in expected]))

    def test_golden_pattern_normalised(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        expected = GOLDEN_RAW / 7.0
        np.fill_diagonal(expected, 0.0)
        assert np.array_equal(W, expected)

    def test_result_is_read_only(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        with pytest.raises(ValueError):
            W[0, 1] = 3.0

    @pytest.mark.parametrize(
        "patterns, exc",
        [
            ([], EmptyPatternListError),
            ([[1, -1, 1], [1, -1]], PatternLengthError),
            ([[1, 0, -1]], ZeroEntryError),
        ],
    )
    def test_errors_are_distinct(self, patterns, exc):
        with pytest.raises(exc):
            hopfield.hebbian_train(patterns)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 30), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_symmetric_zero_diagonal(self, n, p, seed):
        W = hopfield.hebbian_train(bipolar(n, p, np.random.default_rng(seed)))
        assert np.array_equal(W, W.T)
        assert np.all(np.diag(W) == 0)


class TestEnergy:
    def test_zero_state(self, rng):
        W = hopfield.hebbian_train(bipolar(9, 3, rng))
        assert hopfield.energy(W, np.zeros(9), np.zeros(9)) == 0.0

    def test_stored_pattern_energy(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        assert hopfield.energy(W, GOLDEN_X) == pytest.approx(-3.0, abs=1e-12)

    def test_bias_term(self):
        W = hopfield.hebbian_train([[1, -1]])
        # -1/2 * 2 * (-1/2) * 1 * 1 - (0.25 * 1 + 0.5 * 1)
        assert hopfield.energy(W, [1, 1], np.array([0.25, 0.5])) == pytest.approx(0.5 - 0.75)

    def test_dimension_mismatch(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        with pytest.raises(DimensionError):
            hopfield.energy(W, [1, -1, 1])

    @pytest.mark.parametrize("n, p", [(6, 1), (8, 1), (10, 1), (10, 2)])
    def test_stored_patterns_are_local_minima(self, n, p, rng):
        X = bipolar(n, p, rng)
        W = hopfield.hebbian_train(X)
        exact_w = oracles.hebbian_weights(X.tolist())
        # exhaustive table of every state's energy
        table = {tuple(s): oracles.energy(exact_w, s) for s in oracles.all_states(n)}
        for x in X.tolist():
            e = table[tuple(x)]
            assert hopfield.energy(W, x) == pytest.approx(float(e), abs=1e-12)
            for i in range(n):
                y = list(x)
                y[i] = -y[i]
                assert table[tuple(y)] >= e


class TestStep:
    def test_stored_pattern_is_fixed(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        assert np.array_equal(hopfield.step(W, GOLDEN_X), GOLDEN_X)

    def test_two_neuron_hand_example(self):
        W = np.array([[0.0, -0.5], [-0.5, 0.0]])
        assert hopfield.step(W, [1, 1]).tolist() == [-1, -1]

    @pytest.mark.parametrize("flip", range(7))
    def test_single_flip_restored(self, flip):
        W = hopfield.hebbian_train([GOLDEN_X])
        x = list(GOLDEN_X)
        x[flip] = -x[flip]
        counts = oracles.hebbian_counts([GOLDEN_X])
        assert oracles.step(counts, x) == GOLDEN_X
        assert hopfield.step(W, x).tolist() == GOLDEN_X

    def test_tie_gives_neutral_neuron(self):
        # fields are (1 - x_i) / 3 for x = [1, 1, -1]: exact ties on the first two
        W = hopfield.hebbian_train([[1, 1, 1]])
        assert hopfield.step(W, [1, 1, -1]).tolist() == [0, 0, 1]

    def test_neutral_entries_persist_as_inputs(self):
        W = hopfield.hebbian_train([[1, -1, 1, -1]])
        out = hopfield.step(W, [0, 0, 0, 0])
        assert out.tolist() == [0, 0, 0, 0]

    def test_bias_shifts_field(self):
        W = np.zeros((2, 2))
        cfg = DynamicsConfig(bias=np.array([1.0, -1.0]))
        assert hopfield.step(W, [1, 1], cfg).tolist() == [1, -1]

    def test_dimension_mismatch(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        with pytest.raises(DimensionError):
            hopfield.step(W, [1, 1])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 40), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_sign_flip_equivariance(self, n, p, seed):
        rng = np.random.default_rng(seed)
        W = hopfield.hebbian_train(bipolar(n, p, rng))
        x = bipolar(n, rng=rng)
        h = W @ x
        if np.any(np.abs(h) < 1e-9):
            return
        assert np.array_equal(hopfield.step(W, -x), -hopfield.step(W, x))

    @settings(max_examples=60, deadline=None)
    @given(bipolar_st)
    def test_single_pattern_and_negation_fixed(self, x):
        W = hopfield.hebbian_train([x])
        x = np.array(x)
        assert np.array_equal(hopfield.step(W, x), x)
        assert np.array_equal(hopfield.step(W, -x), -x)


class TestRunToConvergence:
    def test_stored_pattern(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        tr = hopfield.run_to_convergence(W, GOLDEN_X)
        assert tr.converged and len(tr.states) == 2 and tr.iterations == 1
        assert tr.energies[0] == tr.energies[1]

    def test_reversed_state(self):
        W = hopfield.hebbian_train([GOLDEN_X])
        neg = [-v for v in GOLDEN_X]
        tr = hopfield.run_to_convergence(W, neg)
        assert tr.converged and tr.final.tolist() == neg

    @pytest.mark.parametrize("n", [4, 7, 10])
    def test_exhaustive_single_pattern(self, n, rng):
        x = bipolar(n, rng=rng)
        W = hopfield.hebbian_train([x])
        for s in oracles.all_states(n):
            tr = hopfield.run_to_convergence(W, s, DynamicsConfig(max_iterations=20))
            f = tr.final
            if tr.converged:
                assert (np.array_equal(f, x) or np.array_equal(f, -x) or np.any(f == 0))
            else:
                assert len(tr.states) == 21
                assert not np.array_equal(tr.states[-1], tr.states[-2])

    def test_two_cycle_is_reported_not_converged(self):
        W = np.array([[0.0, 1.0], [1.0, 0.0]])
        tr = hopfield.run_to_convergence(W, [1, -1], DynamicsConfig(max_iterations=7))
        assert not tr.converged
        assert len(tr.states) == 8
        assert tr.final.tolist() == [-1, 1]

    def test_matches_naive_oracle(self, rng):
        X = bipolar(8, 2, rng)
        W = hopfield.hebbian_train(X)
        counts = oracles.hebbian_counts(X.tolist())
        for s in itertools.islice(oracles.all_states(8), 0, 256, 3):
            tr = hopfield.run_to_convergence(W, s)
            ref, conv = oracles.run(counts, s)
            assert [t.tolist() for t in tr.states] == ref
            assert tr.converged == conv

    def test_max_iterations_validated(self):
        with pytest.raises(ValueError):
            DynamicsConfig(max_iterations=0)


class TestMatchState:
    def setup_method(self):
        # first seed whose 3-pattern majority is a genuine mixture state
        for seed in range(100):
            stored = bipolar(9, 3, np.random.default_rng(seed))
            mix = np.sign(stored.sum(axis=0)).astype(np.int8)
            if not any(np.array_equal(mix, s) or np.array_equal(mix, -s) for s in stored):
                break
        self.stored, self.mixture = stored, mix

    def test_retrieval(self):
        m = hopfield.match_state(self.stored[0], self.stored)
        assert m.kind is MatchKind.RETRIEVAL and m.index == 0 and m.overlap == 1.0

    def test_reversed(self):
        m = hopfield.match_state(-self.stored[1], self.stored)
        assert m.kind is MatchKind.REVERSED and m.index == 1 and m.overlap == 1.0

    def test_mixture_is_spurious(self):
        mix = self.mixture
        # constructed mixture differs from every stored pattern and its negation
        for s in self.stored:
            assert not np.array_equal(mix, s) and not np.array_equal(mix, -s)
        m = hopfield.match_state(mix, self.stored)
        assert m.kind is MatchKind.SPURIOUS and m.index is None
        assert 0 < m.overlap < 1

    def test_state_with_zeros_is_spurious(self):
        x = self.stored[0].copy()
        x[0] = 0
        assert hopfield.match_state(x, self.stored).kind is MatchKind.SPURIOUS

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            hopfield.match_state([1, -1], self.stored)


def test_format_state():
    assert hopfield.format_state([1, 0, -1]) == "+0-"
