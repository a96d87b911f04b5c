"""Grid construction, lexicalization, permutation and transition statistics."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entgrid import (
    AnnotatedDocument,
    EntityGrid,
    Role,
    ValidationError,
    build_grid,
    inverse_order,
    lexicalize,
    permute_sentences,
    transition_index,
    transition_probabilities,
)
from entgrid.grids import grids_equivalent, role_token, split_lexicalized, with_entity_order

S, O, X, A = Role.SUBJECT, Role.OBJECT, Role.OTHER, Role.ABSENT


def column_roles(grid: EntityGrid, entity: str):
    return tuple(Role(int(c)) for c in grid.column(entity))


# ------------------------------------------------------------------ oracles


def transition_probs_oracle(grid: EntityGrid, k: int) -> np.ndarray:
    """Brute-force window scan, independent of the vectorized implementation."""
    counts = np.zeros(4**k)
    windows = 0
    for j in range(grid.num_entities):
        column = [int(c) for c in grid.cells[:, j]]
        for start in range(grid.num_sentences - k + 1):
            counts[transition_index(column[start : start + k])] += 1
            windows += 1
    return counts / windows


# -------------------------------------------------------------- build_grid


class TestBuildGrid:
    def test_lease_doc_matches_printed_grid(self, lease_doc):
        grid = build_grid(lease_doc)
        assert grid.num_sentences == 4
        assert grid.num_entities == 16
        assert column_roles(grid, "paper") == (X, X, S, A)
        assert column_roles(grid, "ldi") == (X, A, S, S)
        assert column_roles(grid, "corp.") == (S, A, X, A)
        assert column_roles(grid, "receivables") == (X, A, X, A)

    def test_rank_rule_merges_same_sentence_mentions(self):
        doc = AnnotatedDocument("d", [[("widget", "O"), ("widget", "X")]])
        grid = build_grid(doc)
        assert grid.role_at(0, 0) == O

    def test_rank_rule_subject_beats_object(self):
        doc = AnnotatedDocument("d", [[("widget", "O"), ("widget", "S"), ("widget", "X")]])
        assert build_grid(doc).role_at(0, 0) == S

    def test_minimal_single_mention_grid(self):
        grid = build_grid(AnnotatedDocument("d", [[("e", "S")]]))
        assert grid.entities == ("e",)
        assert grid.cells.shape == (1, 1)
        assert grid.role_at(0, 0) == S

    def test_empty_document_rejected(self):
        with pytest.raises(ValidationError, match="empty document"):
            AnnotatedDocument("d", [])

    def test_first_mention_column_order(self, lease_doc):
        grid = build_grid(lease_doc)
        assert grid.entities[:3] == ("ldi", "corp.", "cleveland")
        assert grid.entities[-1] == "equipment"

    def test_entity_normalization(self):
        doc = AnnotatedDocument("d", [[("New  York", "S")], [("new york", "O")]])
        grid = build_grid(doc)
        assert grid.entities == ("new york",)
        assert column_roles(grid, "new york") == (S, O)


# ------------------------------------------------------------- lexicalize


class TestLexicalize:
    def test_subject_token(self):
        grid = build_grid(AnnotatedDocument("d", [[("obama", "S")]]))
        assert lexicalize(grid, "lexicalized")[0, 0] == "obama-S"

    def test_absent_cell_is_bare_in_both_modes(self):
        grid = build_grid(AnnotatedDocument("d", [[("a", "S")], [("b", "O")]]))
        for mode in ("lexicalized", "unlexicalized"):
            tokens = lexicalize(grid, mode)
            assert tokens[1, 0] == "-"
            assert tokens[0, 1] == "-"

    def test_unlexicalized_tokens_are_role_chars(self):
        grid = build_grid(AnnotatedDocument("d", [[("registry", "O")]]))
        assert lexicalize(grid, "unlexicalized")[0, 0] == "O"

    def test_unknown_mode_rejected(self):
        grid = build_grid(AnnotatedDocument("d", [[("a", "S")]]))
        with pytest.raises(ValidationError):
            lexicalize(grid, "fancy")

    def test_hyphenated_entity_splits_at_final_hyphen(self):
        token = role_token("non-recourse", X, "lexicalized")
        assert token == "non-recourse-X"
        assert split_lexicalized(token) == ("non-recourse", "X")


# ---------------------------------------------------- permutation operators


class TestPermutations:
    def test_identity_is_noop(self, lease_doc):
        grid = build_grid(lease_doc)
        assert permute_sentences(grid, range(4)) == grid

    def test_reversal_permutation_equals_inverse_order(self, lease_doc):
        grid = build_grid(lease_doc)
        assert permute_sentences(grid, [3, 2, 1, 0]) == inverse_order(grid)

    def test_lease_doc_swap_first_two(self, lease_doc):
        grid = permute_sentences(build_grid(lease_doc), [1, 0, 2, 3])
        assert column_roles(grid, "ldi") == (A, X, S, S)

    def test_inverse_order_lease_doc(self, lease_doc):
        grid = inverse_order(build_grid(lease_doc))
        assert column_roles(grid, "paper") == (A, S, X, X)

    def test_inverse_single_sentence_unchanged(self):
        grid = build_grid(AnnotatedDocument("d", [[("e", "S")]]))
        assert inverse_order(grid) == grid

    def test_non_bijective_permutation_rejected(self, lease_doc):
        with pytest.raises(ValidationError, match="bijection"):
            permute_sentences(build_grid(lease_doc), [0, 0, 1, 2])

    @given(st.permutations(list(range(4))))
    def test_document_permutation_covariance(self, perm):
        doc = AnnotatedDocument("d", [
            [("alpha", "S"), ("beta", "O")],
            [("beta", "S")],
            [("gamma", "X"), ("alpha", "O")],
            [("delta", "S"), ("gamma", "O")],
        ])
        direct = build_grid(permute_sentences(doc, perm))
        original = build_grid(doc)
        expected = permute_sentences(original, perm)
        assert with_entity_order(direct, original.entities) == expected

    @given(st.integers(2, 8), st.randoms(use_true_random=False))
    def test_inverse_is_involution(self, n, rnd):
        sentences = [[(f"e{rnd.randrange(4)}", "S")] for _ in range(n)]
        doc = AnnotatedDocument("d", sentences)
        assert inverse_order(inverse_order(doc)) == doc


# ------------------------------------------------- transition probabilities


class TestTransitionProbabilities:
    def test_single_window_grid(self):
        grid = build_grid(AnnotatedDocument("d", [[("e", "S")], [("e", "O")]]))
        probs = transition_probabilities(grid, 2)
        assert probs[transition_index([S, O])] == 1.0
        assert probs.sum() == 1.0
        assert np.count_nonzero(probs) == 1

    def test_vector_sums_to_one(self, lease_doc):
        probs = transition_probabilities(build_grid(lease_doc), 2)
        assert abs(probs.sum() - 1.0) < 1e-12

    def test_lease_doc_absent_absent_frequency(self, lease_doc):
        # frozen from the brute-force window scan: 17 of the 16 * 3 windows
        grid = build_grid(lease_doc)
        oracle = transition_probs_oracle(grid, 2)
        idx = transition_index([A, A])
        assert oracle[idx] == 17 / 48
        probs = transition_probabilities(grid, 2)
        assert probs[idx] == 17 / 48

    def test_too_long_transition_rejected(self, lease_doc):
        with pytest.raises(ValidationError, match="grid too short"):
            transition_probabilities(build_grid(lease_doc), 5)

    def test_k_below_two_rejected(self, lease_doc):
        with pytest.raises(ValidationError):
            transition_probabilities(build_grid(lease_doc), 1)

    def test_matches_oracle_on_random_grids(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            I = int(rng.integers(2, 7))
            J = int(rng.integers(1, 6))
            k = int(rng.integers(2, I + 1))
            cells = rng.integers(0, 4, size=(I, J)).astype(np.int8)
            grid = EntityGrid(entities=tuple(f"e{j}" for j in range(J)), cells=cells)
            np.testing.assert_allclose(
                transition_probabilities(grid, k), transition_probs_oracle(grid, k), atol=1e-12
            )

    @given(st.permutations(list(range(4))))
    @settings(max_examples=30)
    def test_sum_invariant_under_permutation(self, perm):
        doc = AnnotatedDocument("d", [
            [("alpha", "S"), ("beta", "O")],
            [("beta", "S")],
            [("gamma", "X")],
            [("delta", "S"), ("alpha", "X")],
        ])
        grid = build_grid(permute_sentences(doc, perm))
        assert abs(transition_probabilities(grid, 2).sum() - 1.0) < 1e-12


# ------------------------------------------------------------- equivalence


class TestGridEquivalence:
    def test_column_order_is_representational(self):
        doc = AnnotatedDocument("d", [[("a", "S"), ("b", "O")], [("b", "S")]])
        grid = build_grid(doc)
        reordered = with_entity_order(grid, ("b", "a"))
        assert grids_equivalent(grid, reordered)
        assert grid != reordered

    def test_different_cells_not_equivalent(self):
        g1 = build_grid(AnnotatedDocument("d", [[("a", "S")], [("b", "O")]]))
        g2 = build_grid(AnnotatedDocument("d", [[("b", "O")], [("a", "S")]]))
        assert not grids_equivalent(g1, g2)
