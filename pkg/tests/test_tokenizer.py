import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primeie import autodiff as ad
from primeie.corpus import Corpus, Sentence
from primeie.tokenizer import (
    CLS,
    SEP,
    UNK,
    Alignment,
    SubwordVocab,
    build_vocab,
    detokenize,
    encode_input,
    encode_word,
    load_vocab,
    pool_word_vectors,
    save_vocab,
)


def corpus_of(*token_lists):
    return Corpus(sentences=tuple(
        Sentence(doc_id="d", sent_id=f"s{i}", language="x", tokens=tuple(ts))
        for i, ts in enumerate(token_lists)
    ))


def test_tiny_corpus_vocab():
    vocab = build_vocab(corpus_of(["a", "b"]), target_size=10)
    assert vocab.pieces[:4] == ("[CLS]", "[SEP]", "[PAD]", "[UNK]")
    assert "a" in vocab.pieces and "b" in vocab.pieces


def test_vocab_determinism(tmp_path):
    corpus = corpus_of(["aa", "bb", "aa"], ["cc", "aa", "bb"])
    p1, p2 = tmp_path / "v1.json", tmp_path / "v2.json"
    save_vocab(build_vocab(corpus, target_size=8, seed=0), p1)
    save_vocab(build_vocab(corpus, target_size=8, seed=0), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_vocab_file_round_trip(tmp_path, tiny_vocab):
    p = tmp_path / "v.json"
    save_vocab(tiny_vocab, p)
    assert load_vocab(p) == tiny_vocab
    # File format: a single JSON object whose pieces list excludes specials.
    import json
    obj = json.loads(p.read_text())
    assert set(obj) == {"pieces"}
    assert "[CLS]" not in obj["pieces"]


def test_word_outside_top_k_still_encodes_without_unk():
    corpus = corpus_of(["common"] * 5 + ["rare"])
    vocab = build_vocab(corpus, target_size=1)
    assert vocab.piece_id("rare") is None
    ids = encode_word(vocab, "rare")
    assert UNK not in ids
    assert detokenize(vocab, ids) == "rare"


def test_whole_word_single_piece(tiny_vocab):
    assert encode_word(tiny_vocab, "rebels") == [tiny_vocab.piece_id("rebels")]


def test_continuation_split():
    vocab = SubwordVocab(pieces=(
        "[CLS]", "[SEP]", "[PAD]", "[UNK]",
        "characteristic", "##ally", "c", "##c",
    ))
    ids = encode_word(vocab, "characteristically")
    assert [vocab.piece(i) for i in ids] == ["characteristic", "##ally"]


def test_unseen_characters_become_unk(tiny_vocab):
    assert encode_word(tiny_vocab, "ΔΦΩ") == [UNK, UNK, UNK]


def test_every_training_word_encodes_without_unk(tiny_corpus, tiny_vocab):
    for sent in tiny_corpus.sentences:
        for word in sent.tokens:
            assert UNK not in encode_word(tiny_vocab, word)


def test_unprimed_layout():
    vocab = SubwordVocab(pieces=("[CLS]", "[SEP]", "[PAD]", "[UNK]", "hi"))
    ids, segments, align = encode_input(vocab, [], ["hi"])
    assert ids == [CLS, vocab.piece_id("hi"), SEP]
    assert segments == [0, 0, 0]
    assert align.word_to_pieces == ((1, 2),)
    assert align.prime_pieces == (1, 1)


def test_primed_layout_string():
    words = ["crowds", "protested", "the", "conviction", "of", "Ildar", "Dadin"]
    vocab = build_vocab(corpus_of(words), target_size=32)
    ids, segments, _ = encode_input(vocab, ["conviction"], words)
    assert detokenize(vocab, ids) == (
        "[CLS] conviction [SEP] crowds protested the conviction of Ildar Dadin [SEP]"
    )
    first_sep = ids.index(SEP)
    assert segments == [0] * (first_sep + 1) + [1] * (len(ids) - first_sep - 1)


def test_segment_ids_cover_prime_through_first_sep():
    vocab = build_vocab(corpus_of(["x", "y"]), target_size=8)
    ids, segments, _ = encode_input(vocab, ["y", "y"], ["x", "y"])
    sep_positions = [i for i, t in enumerate(ids) if t == SEP]
    assert len(sep_positions) == 2
    assert segments[: sep_positions[0] + 1] == [0] * (sep_positions[0] + 1)
    assert segments[sep_positions[0] + 1:] == [1] * (len(ids) - sep_positions[0] - 1)


words_strategy = st.lists(
    st.text(alphabet="abcdef", min_size=1, max_size=8), min_size=1, max_size=10
)


@settings(max_examples=100, deadline=None)
@given(words_strategy, st.lists(st.text(alphabet="abcdef", min_size=1, max_size=8), max_size=3))
def test_alignment_ranges_disjoint_ordered_covering(sentence, prime):
    vocab = build_vocab(corpus_of(sentence), target_size=4)
    ids, _, align = encode_input(vocab, prime, sentence)
    assert align.n_pieces == len(ids)
    prev_end = None
    covered = []
    for start, end in align.word_to_pieces:
        assert start < end
        if prev_end is not None:
            assert start == prev_end
        prev_end = end
        covered.extend(range(start, end))
    # Sentence pieces are exactly the ids strictly between the last SEP-pair.
    sep_positions = [i for i, t in enumerate(ids) if t == SEP]
    sentence_lo = (sep_positions[0] + 1) if len(sep_positions) == 2 else 1
    assert covered == list(range(sentence_lo, len(ids) - 1))


@settings(max_examples=100, deadline=None)
@given(words_strategy, st.lists(st.text(alphabet="abcdef", min_size=1, max_size=8), min_size=1, max_size=3))
def test_prime_only_shifts_sentence_pieces(sentence, prime):
    vocab = build_vocab(corpus_of(sentence + prime), target_size=16)
    bare_ids, _, bare_align = encode_input(vocab, [], sentence)
    primed_ids, _, primed_align = encode_input(vocab, prime, sentence)
    shift = primed_align.word_to_pieces[0][0] - bare_align.word_to_pieces[0][0]
    for (a, b), (c, d) in zip(bare_align.word_to_pieces, primed_align.word_to_pieces):
        assert (c, d) == (a + shift, b + shift)
    bare_lo = bare_align.word_to_pieces[0][0]
    bare_hi = bare_align.word_to_pieces[-1][1]
    assert primed_ids[bare_lo + shift: bare_hi + shift] == bare_ids[bare_lo:bare_hi]


def test_pool_single_piece_identity():
    v = np.array([[1.0, 2.0], [5.0, 6.0], [0.0, 0.0]])
    align = Alignment(word_to_pieces=((1, 2),), prime_pieces=(1, 1), n_pieces=3)
    np.testing.assert_allclose(pool_word_vectors(v, align), [[5.0, 6.0]])


def test_pool_two_ranges_hand_case():
    v = np.array([[0.0], [1.0], [3.0], [3.0], [5.0], [0.0]])
    align = Alignment(word_to_pieces=((1, 3), (3, 5)), prime_pieces=(1, 1), n_pieces=6)
    np.testing.assert_allclose(pool_word_vectors(v, align), [[2.0], [4.0]])


def test_pool_matches_naive_loop():
    r = np.random.default_rng(0)
    v = r.normal(size=(9, 4))
    ranges = ((1, 2), (2, 5), (5, 8))
    align = Alignment(word_to_pieces=ranges, prime_pieces=(1, 1), n_pieces=9)
    got = pool_word_vectors(v, align)
    for i, (s, e) in enumerate(ranges):
        expect = np.zeros(4)
        for j in range(s, e):
            expect += v[j]
        np.testing.assert_allclose(got[i], expect / (e - s), rtol=1e-6)


def test_pool_length_mismatch_raises():
    align = Alignment(word_to_pieces=((1, 2),), prime_pieces=(1, 1), n_pieces=4)
    with pytest.raises(ValueError, match="pieces"):
        pool_word_vectors(np.zeros((3, 2)), align)


def test_pool_accepts_tensors_with_grad():
    v = ad.param(np.arange(8.0).reshape(4, 2))
    align = Alignment(word_to_pieces=((1, 3),), prime_pieces=(1, 1), n_pieces=4)
    out = pool_word_vectors(v, align)
    ad.backward(ad.sum_(out))
    np.testing.assert_allclose(v.grad, [[0, 0], [0.5, 0.5], [0.5, 0.5], [0, 0]])


def test_pool_is_linear():
    r = np.random.default_rng(1)
    a, b = r.normal(size=(5, 3)), r.normal(size=(5, 3))
    align = Alignment(word_to_pieces=((0, 2), (2, 5)), prime_pieces=(0, 0), n_pieces=5)
    lhs = pool_word_vectors(2.0 * a + b, align)
    rhs = 2.0 * pool_word_vectors(a, align) + pool_word_vectors(b, align)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9)


def test_specials_never_match_words():
    vocab = build_vocab(corpus_of(["[CLS]"]), target_size=4)
    ids = encode_word(vocab, "[CLS]")
    assert CLS not in ids
    assert detokenize(vocab, ids) == "[CLS]"
