"""Shared fixtures: a hand-checked news document and forum thread."""

import pytest

from entgrid import AnnotatedDocument, Post, Thread

# 4-sentence news-wire item about a leasing company; 16 entities. The expected
# grid (alphabetical entity order) is frozen in tests that consume it.
LEASE_DOC_SENTENCES = [
    [("ldi", "X"), ("corp.", "S"), ("cleveland", "X"), ("million", "O"),
     ("paper", "X"), ("receivables", "X")],
    [("program", "S"), ("funds", "O"), ("sale", "X"), ("paper", "X"), ("leases", "X")],
    [("ldi", "S"), ("paper", "S"), ("non-recourse", "X"), ("investors", "S"),
     ("lease", "X"), ("receivables", "X"), ("corp.", "X")],
    [("ldi", "S"), ("data-process.", "X"), ("telecomm.", "X"), ("equipment", "O")],
]


@pytest.fixture
def lease_doc() -> AnnotatedDocument:
    return AnnotatedDocument(doc_id="wsj_lease", sentences=LEASE_DOC_SENTENCES)


# 5-post troubleshooting thread about cleaning a system registry. Posts 2-4
# reply to post 1, post 5 replies to post 4; 15 sentences total. The "registry"
# entity appears in sentences 0, 1, 2, 5, 9 (object) and 13 (subject).
REGISTRY_POSTS = [
    (1, None, [
        [("troubles", "O"), ("apps", "O"), ("registry", "O"), ("junks", "S")],
        [("way", "S"), ("registry", "O"), ("cleaners", "X")],
    ]),
    (2, 1, [
        [("regedit", "O"), ("junks", "O"), ("registry", "O")],
        [("regedit", "S"), ("applications", "X")],
        [("crashes", "S"), ("setup", "X")],
    ]),
    (3, 1, [
        [("ccleaner", "O"), ("registry", "O"), ("cleaner", "X")],
        [("defaults", "S")],
        [("way", "X"), ("problems", "O")],
        [("suggestions", "O")],
    ]),
    (4, 1, [
        [("regseeker", "O"), ("registry", "O"), ("junk", "O")],
        [("regseeker", "S")],
        [("files", "O"), ("indexing", "O")],
        [("drive", "S")],
    ]),
    (5, 4, [
        [("guyz", "X"), ("registry", "S")],
        [("suggestions", "O"), ("ccleaners", "X"), ("regedit", "X"),
         ("defragmentation", "X"), ("process", "X")],
    ]),
]


def make_registry_thread() -> Thread:
    posts = tuple(
        Post(post_id=pid, parent_id=parent, sentences=sentences)
        for pid, parent, sentences in REGISTRY_POSTS
    )
    return Thread(thread_id="registry", posts=posts)


@pytest.fixture
def registry_thread() -> Thread:
    return make_registry_thread()
