"""Sentence graphs, path extraction, 3D grids, tree enumeration, thread shuffles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entgrid import (
    AnnotatedDocument,
    Post,
    Role,
    Thread,
    ValidationError,
    build_conv_grid,
    build_grid,
    build_sentence_graph,
    enumerate_valid_trees,
    extract_paths,
    path_documents,
    permute_thread,
    thread_as_document,
    with_parent_vector,
)
from entgrid.conversation import conv_grids_equivalent

S, O, X, A, P = Role.SUBJECT, Role.OBJECT, Role.OTHER, Role.ABSENT, Role.PAD


def simple_thread(parents, sentences_per_post=1, entity="e"):
    posts = []
    for k, parent in enumerate([None] + list(parents), start=1):
        sents = [[(f"{entity}{k}", "S")] for _ in range(sentences_per_post)]
        posts.append(Post(post_id=k, parent_id=parent, sentences=sents))
    return Thread(thread_id="t", posts=tuple(posts))


# ---------------------------------------------------------- tree enumeration


def count_trees_oracle(n: int) -> int:
    """Independent recursive counter over chronologically valid parents."""
    if n == 2:
        return 1
    return (n - 1) * count_trees_oracle(n - 1)


class TestEnumerateValidTrees:
    def test_two_posts_single_tree(self):
        assert enumerate_valid_trees(2) == [(1,)]

    def test_three_posts(self):
        assert enumerate_valid_trees(3) == [(1, 1), (1, 2)]

    def test_five_posts_has_24_trees(self):
        assert len(enumerate_valid_trees(5)) == 24

    @pytest.mark.parametrize("n", range(2, 9))
    def test_counts_match_factorial_and_oracle(self, n):
        trees = enumerate_valid_trees(n)
        assert len(trees) == count_trees_oracle(n)
        assert len(set(trees)) == len(trees)
        for tree in trees:
            assert all(1 <= parent < k for parent, k in zip(tree, range(2, n + 1)))

    def test_cap_enforced(self):
        with pytest.raises(ValidationError, match="enumeration too large"):
            enumerate_valid_trees(9)
        assert len(enumerate_valid_trees(9, cap=9)) == 40320

    def test_lexicographic_order(self):
        trees = enumerate_valid_trees(4)
        assert trees[0] == (1, 1, 1)
        assert trees == sorted(trees)


# ------------------------------------------------------------ thread checks


class TestThreadValidation:
    def test_forward_reply_rejected(self):
        with pytest.raises(ValidationError, match="invalid reply structure"):
            Thread("t", (
                Post(1, None, [[("a", "S")]]),
                Post(2, 3, [[("b", "S")]]),
                Post(3, 1, [[("c", "S")]]),
            ))

    def test_missing_parent_rejected(self):
        with pytest.raises(ValidationError, match="invalid reply structure"):
            Thread("t", (Post(1, None, [[("a", "S")]]), Post(2, None, [[("b", "S")]])))

    def test_root_with_parent_rejected(self):
        with pytest.raises(ValidationError, match="post 1"):
            Thread("t", (Post(1, 1, [[("a", "S")]]),))


# ------------------------------------------------------------ sentence graph


class TestSentenceGraph:
    def test_registry_thread_links(self, registry_thread):
        graph = build_sentence_graph(registry_thread)
        # first sentence of each reply links to the LAST sentence of its parent
        assert graph.parent[2] == 1   # post 2 -> post 1
        assert graph.parent[5] == 1   # post 3 -> post 1
        assert graph.parent[9] == 1   # post 4 -> post 1
        assert graph.parent[13] == 12  # post 5 -> post 4
        # within-post chaining
        assert graph.parent[1] == 0
        assert graph.parent[4] == 3
        assert graph.parent[0] == -1
        assert sum(1 for p in graph.parent if p == -1) == 1

    def test_single_post_chain(self):
        thread = Thread("t", (Post(1, None, [[("a", "S")], [("a", "O")], [("a", "X")]]),))
        graph = build_sentence_graph(thread)
        assert graph.parent == (-1, 0, 1)
        assert extract_paths(thread) == [(0, 1, 2)]

    def test_two_posts_chain(self):
        thread = simple_thread([1])
        assert build_sentence_graph(thread).parent == (-1, 0)
        assert extract_paths(thread) == [(0, 1)]


class TestExtractPaths:
    def test_registry_thread_paths(self, registry_thread):
        paths = extract_paths(registry_thread)
        assert [len(p) for p in paths] == [5, 6, 8]
        assert paths[0] == (0, 1, 2, 3, 4)
        assert paths[1] == (0, 1, 5, 6, 7, 8)
        assert paths[2] == (0, 1, 9, 10, 11, 12, 13, 14)

    def test_chain_conversation_single_path(self):
        thread = simple_thread([1, 2, 3], sentences_per_post=2)
        paths = extract_paths(thread)
        assert len(paths) == 1
        assert paths[0] == tuple(range(8))

    def test_star_has_one_path_per_reply(self):
        thread = simple_thread([1, 1, 1, 1])
        assert len(extract_paths(thread)) == 4

    def test_path_lengths_cover_all_sentences(self, registry_thread):
        paths = extract_paths(registry_thread)
        covered = {s for path in paths for s in path}
        assert covered == set(range(registry_thread.total_sentences))
        # shared prefixes duplicate, so the sum exceeds the sentence count
        assert sum(len(p) for p in paths) > registry_thread.total_sentences

    def test_chain_equality_of_sum_and_count(self):
        thread = simple_thread([1, 2], sentences_per_post=3)
        paths = extract_paths(thread)
        assert sum(len(p) for p in paths) == thread.total_sentences


# ------------------------------------------------------------------ 3D grid


class TestConversationGrid:
    def test_registry_matrix(self, registry_thread):
        grid = build_conv_grid(registry_thread)
        assert grid.depth == 8
        assert grid.num_paths == 3
        assert grid.path_lengths == (5, 6, 8)
        matrix = grid.entity_matrix("registry")
        expected = np.array([
            [O, O, O],
            [O, O, O],
            [O, O, O],
            [A, A, A],
            [A, A, A],
            [P, A, A],
            [P, P, S],
            [P, P, A],
        ], dtype=np.int8)
        np.testing.assert_array_equal(matrix, expected)

    def test_shared_prefix_rows_identical(self, registry_thread):
        grid = build_conv_grid(registry_thread)
        for j in (0, 1):  # the two root-post sentences are shared by all paths
            level = grid.cells[:, j, :]
            assert (level == level[:, :1]).all()

    def test_single_post_grid_equals_monologue_grid(self):
        post = Post(1, None, [[("a", "S"), ("b", "O")], [("b", "S")]])
        thread = Thread("t", (post,))
        conv = build_conv_grid(thread)
        mono = build_grid(thread_as_document(thread))
        assert conv.num_paths == 1
        np.testing.assert_array_equal(conv.cells[:, :, 0].T, mono.cells)

    def test_paths_reproduce_monologue_grids(self, registry_thread):
        # non-PAD cells of each path column equal the grid of that path's sentences
        grid = build_conv_grid(registry_thread)
        for p, doc in enumerate(path_documents(registry_thread)):
            mono = build_grid(doc)
            length = grid.path_lengths[p]
            for entity in mono.entities:
                i = grid.entities.index(entity)
                np.testing.assert_array_equal(grid.cells[i, :length, p], mono.column(entity))
            # entities absent from this path are fully absent, never PAD, in range
            for i, entity in enumerate(grid.entities):
                if entity not in mono.entities:
                    assert (grid.cells[i, :length, p] == A).all()

    def test_pad_only_beyond_path_length(self, registry_thread):
        grid = build_conv_grid(registry_thread)
        for p, length in enumerate(grid.path_lengths):
            assert (grid.cells[:, length:, p] == P).all()
            assert not (grid.cells[:, :length, p] == P).any()


# ------------------------------------------------------------ thread shuffle


class TestPermuteThread:
    def test_identity(self, registry_thread):
        same = permute_thread(registry_thread, range(15))
        assert same == registry_thread

    def test_global_reversal_slots(self, registry_thread):
        reversed_thread = permute_thread(registry_thread, range(14, -1, -1))
        flat = registry_thread.all_sentences()
        assert reversed_thread.posts[0].sentences == (flat[14], flat[13])
        assert [len(p.sentences) for p in reversed_thread.posts] == [2, 3, 4, 4, 2]
        assert reversed_thread.parent_vector == registry_thread.parent_vector

    def test_structure_preserved(self, registry_thread):
        rng = np.random.default_rng(3)
        shuffled = permute_thread(registry_thread, rng.permutation(15))
        orig = build_conv_grid(registry_thread)
        perm = build_conv_grid(shuffled)
        assert perm.num_paths == orig.num_paths
        assert perm.depth == orig.depth
        assert perm.path_lengths == orig.path_lengths

    def test_size_mismatch_rejected(self, registry_thread):
        with pytest.raises(ValidationError):
            permute_thread(registry_thread, range(14))

    def test_equivalence_check_detects_identity(self, registry_thread):
        grid = build_conv_grid(registry_thread)
        assert conv_grids_equivalent(grid, build_conv_grid(permute_thread(registry_thread, range(15))))
        rng = np.random.default_rng(0)
        assert not conv_grids_equivalent(
            grid, build_conv_grid(permute_thread(registry_thread, rng.permutation(15)))
        )


# ----------------------------------------------------------------- rebuilds


class TestWithParentVector:
    def test_relink(self, registry_thread):
        chain = with_parent_vector(registry_thread, (1, 2, 3, 4))
        assert chain.parent_vector == (1, 2, 3, 4)
        assert len(extract_paths(chain)) == 1

    def test_wrong_length_rejected(self, registry_thread):
        with pytest.raises(ValidationError):
            with_parent_vector(registry_thread, (1, 2))


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_random_thread_path_invariants(data):
    n = data.draw(st.integers(2, 6))
    parents = [data.draw(st.integers(1, k - 1)) for k in range(2, n + 1)]
    thread = simple_thread(parents, sentences_per_post=data.draw(st.integers(1, 3)))
    paths = extract_paths(thread)
    leaves = set(range(1, n + 1)) - set(parents)
    assert len(paths) == len(leaves)
    total = sum(len(p) for p in paths)
    assert total >= thread.total_sentences
    is_chain = sorted(parents) == list(range(1, n))
    assert (total == thread.total_sentences) == is_chain
    for path in paths:
        assert path[0] == 0
        assert list(path) == sorted(path)
