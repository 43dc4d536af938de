"""Subword vocabulary, primed input encoding, and piece-to-word pooling.

The vocabulary is whole-word-plus-character-fallback: the most frequent
whole words are kept as single pieces, and every observed character is
available both as an initial piece ("c") and a continuation piece
("##c"), so any word over seen characters encodes without UNK while
rare words still split into multiple pieces.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import json

import numpy as np

from . import autodiff as ad
from .corpus import Corpus

CLS, SEP, PAD, UNK = 0, 1, 2, 3
_SPECIAL_STRINGS = ("[CLS]", "[SEP]", "[PAD]", "[UNK]")
CONTINUATION = "##"


@dataclass(frozen=True)
class SubwordVocab:
    pieces: tuple[str, ...]  # includes the 4 specials at ids 0..3

    def __post_init__(self):
        if self.pieces[:4] != _SPECIAL_STRINGS:
            raise ValueError("pieces must start with the 4 special tokens")
        if len(set(self.pieces)) != len(self.pieces):
            raise ValueError("duplicate pieces")
        object.__setattr__(self, "_id_of", {p: i for i, p in enumerate(self.pieces)})

    def __len__(self) -> int:
        return len(self.pieces)

    def piece_id(self, piece: str) -> int | None:
        i = self._id_of.get(piece)
        return None if i is not None and i < 4 else i  # specials never match words

    def piece(self, piece_id: int) -> str:
        return self.pieces[piece_id]


@dataclass(frozen=True)
class Alignment:
    """Piece-position ranges for the sentence words of one encoded input."""

    word_to_pieces: tuple[tuple[int, int], ...]
    prime_pieces: tuple[int, int]
    n_pieces: int


def build_vocab(
    corpus: Corpus, target_size: int, seed: int = 0, reserved: tuple[str, ...] = ()
) -> SubwordVocab:
    """Specials, then reserved pieces, then top-K words, then char pieces.

    Reserved pieces get stable low ids independent of word frequencies,
    which keeps prime separators and role codes fixed across corpora
    drawn from the same ontology.
    """
    if target_size < 1:
        raise ValueError(f"target_size must be >= 1, got {target_size}")
    del seed  # construction is deterministic; accepted for interface stability
    counts: Counter[str] = Counter()
    chars: set[str] = set()
    for sent in corpus.sentences:
        for tok in sent.tokens:
            counts[tok] += 1
            chars.update(tok)
    for piece in reserved:
        chars.update(piece)
    top = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:target_size]]
    pieces = list(_SPECIAL_STRINGS)
    seen = set(pieces)
    for p in list(reserved) + top:
        if p not in seen:
            pieces.append(p)
            seen.add(p)
    for c in sorted(chars):
        for p in (c, CONTINUATION + c):
            if p not in seen:
                pieces.append(p)
                seen.add(p)
    return SubwordVocab(pieces=tuple(pieces))


def save_vocab(vocab: SubwordVocab, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"pieces": list(vocab.pieces[4:])}, f, ensure_ascii=False)
        f.write("\n")


def load_vocab(path) -> SubwordVocab:
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    return SubwordVocab(pieces=_SPECIAL_STRINGS + tuple(obj["pieces"]))


def encode_word(vocab: SubwordVocab, word: str) -> list[int]:
    """Greedy longest-match-first split; unseen characters become UNK."""
    ids: list[int] = []
    pos = 0
    while pos < len(word):
        prefix = CONTINUATION if pos > 0 else ""
        match = None
        for end in range(len(word), pos, -1):
            match = vocab.piece_id(prefix + word[pos:end])
            if match is not None:
                ids.append(match)
                pos = end
                break
        if match is None:
            ids.append(UNK)
            pos += 1
    return ids


def encode_input(
    vocab: SubwordVocab, prime_words: list[str], sentence_words: list[str]
) -> tuple[list[int], list[int], Alignment]:
    if not sentence_words:
        raise ValueError("sentence_words must be non-empty")
    ids = [CLS]
    prime_start = len(ids)
    for w in prime_words:
        ids.extend(encode_word(vocab, w))
    prime_end = len(ids)
    if prime_words:
        ids.append(SEP)
    ranges = []
    for w in sentence_words:
        start = len(ids)
        ids.extend(encode_word(vocab, w))
        ranges.append((start, len(ids)))
    ids.append(SEP)
    first_sep = ids.index(SEP)
    segments = [0 if i <= first_sep else 1 for i in range(len(ids))]
    return ids, segments, Alignment(
        word_to_pieces=tuple(ranges),
        prime_pieces=(prime_start, prime_end),
        n_pieces=len(ids),
    )


def pool_word_vectors(vectors, alignment: Alignment):
    """Mean of each word's piece vectors; accepts ndarray or Tensor."""
    n = vectors.shape[0] if isinstance(vectors, np.ndarray) else vectors.values.shape[0]
    if n != alignment.n_pieces:
        raise ValueError(f"{n} vectors for {alignment.n_pieces} pieces")
    if isinstance(vectors, ad.Tensor):
        return ad.pool_rows(vectors, list(alignment.word_to_pieces))
    return np.stack([vectors[s:e].mean(axis=0) for s, e in alignment.word_to_pieces])


def detokenize(vocab: SubwordVocab, piece_ids: list[int]) -> str:
    words: list[str] = []
    for pid in piece_ids:
        piece = vocab.piece(pid)
        if piece.startswith(CONTINUATION) and words:
            words[-1] += piece[len(CONTINUATION):]
        else:
            words.append(piece)
    return " ".join(words)
