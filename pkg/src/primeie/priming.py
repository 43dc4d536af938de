"""Primed encoder inputs.

A prime is a short query segment prepended to the sentence so the same
sentence can be re-encoded once per question being asked of it: which
spans realize a given trigger, which span fills a given role of a given
trigger, or what role a given candidate token plays.  The separator ";"
and the role-code integer strings are ordinary vocabulary pieces, kept
whole via the vocabulary's reserved-piece list.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Ontology, Sentence, TokenSpan
from .tokenizer import Alignment, SubwordVocab, encode_input

ROLE_SEPARATOR = ";"


def reserved_pieces(ontology: Ontology) -> tuple[str, ...]:
    """Pieces the vocabulary must keep whole for priming to be stable."""
    return (ROLE_SEPARATOR, *sorted(set(ontology.role_code.values()), key=int))


@dataclass(frozen=True)
class PrimedInput:
    piece_ids: tuple[int, ...]
    segment_ids: tuple[int, ...]
    alignment: Alignment
    prime_kind: str  # none | trigger | trigger_role | token
    prime_token_piece_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.prime_kind not in ("none", "trigger", "trigger_role", "token"):
            raise ValueError(f"unknown prime_kind {self.prime_kind!r}")
        if self.prime_token_piece_range is not None:
            lo, hi = self.prime_token_piece_range
            if not (0 < lo <= hi and self.segment_ids[hi - 1] == 0):
                raise ValueError("prime_token_piece_range must lie in segment 0")


def _encode(vocab: SubwordVocab, prime_words: list[str], sentence: Sentence, kind: str,
            token_range: tuple[int, int] | None = None) -> PrimedInput:
    ids, segments, alignment = encode_input(vocab, prime_words, list(sentence.tokens))
    return PrimedInput(
        piece_ids=tuple(ids),
        segment_ids=tuple(segments),
        alignment=alignment,
        prime_kind=kind,
        prime_token_piece_range=token_range,
    )


def prime_none(vocab: SubwordVocab, sentence: Sentence) -> PrimedInput:
    return _encode(vocab, [], sentence, "none")


def trigger_words(sentence: Sentence, trigger: TokenSpan) -> list[str]:
    return list(sentence.tokens[trigger.start:trigger.end])


def prime_trigger(vocab: SubwordVocab, words: list[str], sentence: Sentence) -> PrimedInput:
    if not words:
        raise ValueError("trigger words must be non-empty")
    return _encode(vocab, list(words), sentence, "trigger")


def prime_trigger_role(
    vocab: SubwordVocab, words: list[str], role: str, ontology: Ontology, sentence: Sentence
) -> PrimedInput:
    if not words:
        raise ValueError("trigger words must be non-empty")
    code = ontology.role_code.get(role)
    if code is None:
        raise ValueError(f"role {role!r} has no role code")
    return _encode(vocab, list(words) + [ROLE_SEPARATOR, code], sentence, "trigger_role")


def prime_token(vocab: SubwordVocab, token_index: int, sentence: Sentence) -> PrimedInput:
    if not (0 <= token_index < len(sentence.tokens)):
        raise ValueError(f"token index {token_index} out of range for length {len(sentence.tokens)}")
    word = sentence.tokens[token_index]
    ids, segments, alignment = encode_input(vocab, [word], list(sentence.tokens))
    return PrimedInput(
        piece_ids=tuple(ids),
        segment_ids=tuple(segments),
        alignment=alignment,
        prime_kind="token",
        prime_token_piece_range=alignment.prime_pieces,
    )
