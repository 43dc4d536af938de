import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primeie import autodiff as ad
from primeie import crf


def brute_log_partition(em, trans, start, end):
    """Enumerate all T^L paths and logsumexp their scores."""
    L, T = em.shape
    scores = []
    for path in itertools.product(range(T), repeat=L):
        s = start[path[0]] + em[0, path[0]]
        for t in range(1, L):
            s += trans[path[t - 1], path[t]] + em[t, path[t]]
        s += end[path[-1]]
        scores.append(s)
    m = max(scores)
    return m + np.log(sum(np.exp(s - m) for s in scores))


def brute_viterbi(em, trans, start, end):
    """Best path by enumeration; ties broken toward the smaller label tuple."""
    L, T = em.shape
    best_path, best_score = None, -np.inf
    for path in itertools.product(range(T), repeat=L):
        s = start[path[0]] + em[0, path[0]]
        for t in range(1, L):
            s += trans[path[t - 1], path[t]] + em[t, path[t]]
        s += end[path[-1]]
        if s > best_score + 1e-12 or (abs(s - best_score) <= 1e-12 and (best_path is None or path < best_path)):
            best_path, best_score = path, s
    return list(best_path), best_score


def random_table(T, r, tensor=True):
    trans = r.normal(size=(T, T))
    start = r.normal(size=T)
    end = r.normal(size=T)
    if tensor:
        return crf.TransitionTable(
            transition=ad.tensor(trans), start=ad.tensor(start), end=ad.tensor(end)
        ), (trans, start, end)
    return trans, start, end


def test_log_partition_single_step_ln3():
    with ad.precision(np.float64):
        em = ad.tensor(np.zeros((1, 3)))
        table = crf.zero_table(3)
        assert crf.log_partition(em, table).item() == pytest.approx(np.log(3.0), rel=1e-9)


def test_log_partition_matches_enumeration():
    r = np.random.default_rng(0)
    with ad.precision(np.float64):
        for L in range(1, 7):
            for T in range(2, 6):
                em = r.normal(size=(L, T))
                table, (tr, s, e) = random_table(T, r)
                got = crf.log_partition(ad.tensor(em), table).item()
                want = brute_log_partition(em, tr, s, e)
                assert got == pytest.approx(want, rel=1e-8), (L, T)


def test_nll_is_nonnegative():
    r = np.random.default_rng(1)
    with ad.precision(np.float64):
        for _ in range(20):
            L, T = r.integers(1, 7), r.integers(2, 6)
            em = ad.tensor(r.normal(size=(L, T)))
            table, _ = random_table(T, r)
            labels = list(r.integers(0, T, size=L))
            assert crf.nll(em, table, labels).item() >= -1e-10


def test_nll_gradient_passes_fd():
    r = np.random.default_rng(2)
    with ad.precision(np.float64):
        L, T = 5, 4
        em = ad.param(r.normal(size=(L, T)))
        table = crf.TransitionTable(
            transition=ad.param(r.normal(size=(T, T))),
            start=ad.param(r.normal(size=T)),
            end=ad.param(r.normal(size=T)),
        )
        labels = [0, 2, 1, 3, 0]
        err = ad.fd_check(
            lambda: crf.nll(em, table, labels),
            [em, table.transition, table.start, table.end],
            epsilon=1e-5,
        )
    assert err <= 1e-6


def test_viterbi_matches_enumeration():
    r = np.random.default_rng(3)
    with ad.precision(np.float64):
        for trial in range(60):
            L, T = int(r.integers(1, 7)), int(r.integers(2, 6))
            em = r.normal(size=(L, T))
            table, (tr, s, e) = random_table(T, r)
            path, score = crf.viterbi(ad.tensor(em), table)
            bpath, bscore = brute_viterbi(em, tr, s, e)
            assert score == pytest.approx(bscore, rel=1e-9)
            assert path == bpath, trial


def test_viterbi_tie_break_prefers_smallest_sequence():
    # All-zero scores: every path ties, so the decode must be all label 0.
    em = ad.tensor(np.zeros((4, 3)))
    path, score = crf.viterbi(em, crf.zero_table(3))
    assert path == [0, 0, 0, 0]
    assert score == pytest.approx(0.0)


def test_viterbi_tie_break_nontrivial():
    # Two optimal paths: [0,1] and [1,0]. Lexicographic order picks [0,1].
    em = ad.tensor(np.array([[1.0, 1.0], [1.0, 1.0]]))
    table = crf.zero_table(2)
    tm = np.ones((2, 2), dtype=bool)
    tm[0, 1] = False
    tm[1, 0] = False
    table = crf.TransitionTable(
        transition=table.transition, start=table.start, end=table.end, trans_mask=tm
    )
    path, _ = crf.viterbi(em, table)
    assert path == [0, 1]


def test_viterbi_all_masked_raises():
    em = ad.tensor(np.zeros((2, 2)))
    table = crf.TransitionTable(
        transition=ad.tensor(np.zeros((2, 2))),
        start=ad.tensor(np.zeros(2)),
        end=ad.tensor(np.zeros(2)),
        start_mask=np.ones(2, dtype=bool),
    )
    with pytest.raises(ValueError, match="masked"):
        crf.viterbi(em, table)


def test_masked_transitions_never_decoded():
    r = np.random.default_rng(4)
    space = crf.typed_bio(("a", "b"))
    tm, sm = crf.bio_mask(space)
    for _ in range(50):
        L = int(r.integers(1, 8))
        em = ad.tensor(r.normal(size=(L, len(space.labels))) * 3)
        table, _ = random_table(len(space.labels), r)
        table = crf.TransitionTable(
            transition=table.transition, start=table.start, end=table.end,
            trans_mask=tm, start_mask=sm,
        )
        path, _ = crf.viterbi(em, table)
        assert not sm[path[0]]
        for a, b in zip(path, path[1:]):
            assert not tm[a, b]


def test_bio_mask_untyped_counts():
    space = crf.untyped_bio()
    tm, sm = crf.bio_mask(space)
    # Forbidden: start->I and O->I.
    assert list(sm) == [False, False, True]
    assert tm.sum() == 1
    assert tm[space.index("O"), space.index("I")]


def test_bio_mask_typed_two_types():
    space = crf.typed_bio(("x", "y"))
    tm, sm = crf.bio_mask(space)
    o, bx, ix, by, iy = (space.index(l) for l in ("O", "B-x", "I-x", "B-y", "I-y"))
    assert list(np.flatnonzero(sm)) == [ix, iy]
    # Forbidden transitions: into I-x from O, B-y, I-y; into I-y from O, B-x, I-x.
    expected = {(o, ix), (by, ix), (iy, ix), (o, iy), (bx, iy), (ix, iy)}
    assert {(int(a), int(b)) for a, b in zip(*np.nonzero(tm))} == expected


def test_sequence_score_rejects_masked_gold():
    space = crf.untyped_bio()
    tm, sm = crf.bio_mask(space)
    table = crf.zero_table(3)
    table = crf.TransitionTable(
        transition=table.transition, start=table.start, end=table.end,
        trans_mask=tm, start_mask=sm,
    )
    em = ad.tensor(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        crf.sequence_score(em, table, [space.index("O"), space.index("I")])
    # Legal sequence passes.
    crf.sequence_score(em, table, [space.index("B"), space.index("I")])


def test_restrict_subtable_grads_flow_to_full_table():
    r = np.random.default_rng(5)
    T = 5
    full = crf.TransitionTable(
        transition=ad.param(r.normal(size=(T, T))),
        start=ad.param(r.normal(size=T)),
        end=ad.param(r.normal(size=T)),
    )
    sub = full.restrict([0, 2, 4])
    em = ad.tensor(r.normal(size=(3, 3)))
    ad.backward(crf.nll(em, sub, [0, 1, 2]))
    g = full.transition.grad
    assert g is not None
    kept = np.ix_([0, 2, 4], [0, 2, 4])
    mask = np.zeros((T, T), dtype=bool)
    mask[kept] = True
    assert np.any(g[mask] != 0)
    assert np.all(g[~mask] == 0)


label_lists = st.lists(
    st.sampled_from(["O", "B-a", "I-a", "B-b", "I-b"]), min_size=0, max_size=12
)


@settings(max_examples=200, deadline=None)
@given(label_lists)
def test_repair_then_spans_roundtrip(labels):
    repaired = crf.repair_bio(labels)
    spans = crf.bio_spans(repaired)
    assert crf.spans_to_bio(spans, len(labels), typed=True) == repaired


@settings(max_examples=200, deadline=None)
@given(label_lists)
def test_repair_output_is_mask_legal(labels):
    space = crf.typed_bio(("a", "b"))
    tm, sm = crf.bio_mask(space)
    repaired = [space.index(l) for l in crf.repair_bio(labels)]
    if repaired:
        assert not sm[repaired[0]]
    for a, b in zip(repaired, repaired[1:]):
        assert not tm[a, b]


def test_bio_spans_hand_case():
    labels = ["B-a", "I-a", "O", "B-b", "B-a", "I-a", "I-a"]
    assert crf.bio_spans(labels) == [(0, 2, "a"), (3, 4, "b"), (4, 7, "a")]


def test_spans_to_bio_untyped():
    out = crf.spans_to_bio([(1, 3, "")], 4, typed=False)
    assert out == ["O", "B", "I", "O"]


def test_label_space_validation():
    with pytest.raises(ValueError):
        crf.LabelSpace(labels=("O", "I-a"), kind="typed-BIO")
    with pytest.raises(ValueError):
        crf.LabelSpace(labels=("B", "I"), kind="untyped-BIO")
