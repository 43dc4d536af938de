"""Event ontology and corpus data model.

Immutable value types for sentences, entity/event mentions, and the
ontology that constrains them, plus corpus IO, long-sentence splitting,
and the offset remapping that lets split-piece predictions be scored
against the unsplit reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class CorpusError(ValueError):
    """Raised for parse or validation failures in corpus/ontology files."""


@dataclass(frozen=True)
class Ontology:
    ontology_id: str
    event_types: tuple[str, ...]
    roles_for: dict[str, tuple[str, ...]]
    role_code: dict[str, str]
    entity_types: tuple[str, ...]
    legal_triples: frozenset[tuple[str, str, str]]

    def __post_init__(self):
        codes = list(self.role_code.values())
        if len(set(codes)) != len(codes):
            raise CorpusError("role_code is not injective")
        for role, code in self.role_code.items():
            if not (code.isdigit() and int(code) >= 1):
                raise CorpusError(f"role_code for {role!r} must be a decimal string >= 1, got {code!r}")
        for et, roles in self.roles_for.items():
            if et not in self.event_types:
                raise CorpusError(f"roles_for references unknown event type {et!r}")
            for role in roles:
                if role not in self.role_code:
                    raise CorpusError(f"role {role!r} has no role_code entry")
        for ent, et, role in self.legal_triples:
            if ent not in self.entity_types:
                raise CorpusError(f"legal triple references unknown entity type {ent!r}")
            if et not in self.event_types:
                raise CorpusError(f"legal triple references unknown event type {et!r}")
            if role not in self.roles_for.get(et, ()):
                raise CorpusError(f"legal triple role {role!r} not in roles_for[{et!r}]")

    def all_roles(self) -> tuple[str, ...]:
        """Roles in first-appearance order across event types."""
        seen: dict[str, None] = {}
        for et in self.event_types:
            for role in self.roles_for.get(et, ()):
                seen.setdefault(role)
        return tuple(seen)

    def is_legal(self, entity_type: str, event_type: str, role: str) -> bool:
        return (entity_type, event_type, role) in self.legal_triples


@dataclass(frozen=True, order=True)
class TokenSpan:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise CorpusError(f"invalid span [{self.start},{self.end})")

    def shift(self, offset: int) -> "TokenSpan":
        return TokenSpan(self.start + offset, self.end + offset)


@dataclass(frozen=True)
class EntityMention:
    span: TokenSpan
    entity_type: str
    head_index: int | None = None

    def __post_init__(self):
        if self.head_index is not None and not (self.span.start <= self.head_index < self.span.end):
            raise CorpusError(f"head_index {self.head_index} outside span [{self.span.start},{self.span.end})")

    def head(self) -> int:
        """Head token index; falls back to the first token when unannotated."""
        return self.head_index if self.head_index is not None else self.span.start


@dataclass(frozen=True)
class EventMention:
    trigger: TokenSpan
    event_type: str
    arguments: tuple[tuple[TokenSpan, str], ...] = ()


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    sent_id: str
    language: str
    tokens: tuple[str, ...]
    entities: tuple[EntityMention, ...] = ()
    events: tuple[EventMention, ...] = ()
    origin_offset: int = 0
    parent_sent_id: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError(f"{self.doc_id}/{self.sent_id}: tokens empty")
        if self.origin_offset < 0:
            raise CorpusError(f"{self.doc_id}/{self.sent_id}: origin_offset negative")
        n = len(self.tokens)
        for ent in self.entities:
            if ent.span.end > n:
                raise CorpusError(f"{self.doc_id}/{self.sent_id}: entity span [{ent.span.start},{ent.span.end}) exceeds length {n}")
        for ev in self.events:
            if ev.trigger.end > n:
                raise CorpusError(f"{self.doc_id}/{self.sent_id}: trigger span [{ev.trigger.start},{ev.trigger.end}) exceeds length {n}")
            for span, _role in ev.arguments:
                if span.end > n:
                    raise CorpusError(f"{self.doc_id}/{self.sent_id}: argument span [{span.start},{span.end}) exceeds length {n}")

    def validate_against(self, ontology: Ontology) -> None:
        for ev in self.events:
            if ev.event_type not in ontology.event_types:
                raise CorpusError(f"{self.doc_id}/{self.sent_id}: unknown event type {ev.event_type!r}")
            allowed = ontology.roles_for.get(ev.event_type, ())
            for _span, role in ev.arguments:
                if role not in allowed:
                    raise CorpusError(
                        f"{self.doc_id}/{self.sent_id}: role {role!r} not allowed for event type {ev.event_type!r}"
                    )
        for ent in self.entities:
            if ent.entity_type not in ontology.entity_types:
                raise CorpusError(f"{self.doc_id}/{self.sent_id}: unknown entity type {ent.entity_type!r}")


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    ontology_id: str = ""

    def __post_init__(self):
        seen = set()
        for s in self.sentences:
            key = (s.doc_id, s.sent_id)
            if key in seen:
                raise CorpusError(f"duplicate (doc_id, sent_id) {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


# ---------------------------------------------------------------------------
# Serialization.  Corpus files are line-delimited JSON; the ontology is a
# single JSON object.  Optional fields (head_index, origin_offset,
# parent_sent_id) are omitted when at their defaults so hand-written files
# stay minimal.

def ontology_to_dict(ontology: Ontology) -> dict:
    return {
        "ontology_id": ontology.ontology_id,
        "event_types": list(ontology.event_types),
        "roles_for": {et: list(rs) for et, rs in ontology.roles_for.items()},
        "role_code": dict(ontology.role_code),
        "entity_types": list(ontology.entity_types),
        "legal_triples": sorted(list(t) for t in ontology.legal_triples),
    }


def ontology_from_dict(obj: dict) -> Ontology:
    try:
        return Ontology(
            ontology_id=obj.get("ontology_id", ""),
            event_types=tuple(obj["event_types"]),
            roles_for={et: tuple(rs) for et, rs in obj["roles_for"].items()},
            role_code=dict(obj["role_code"]),
            entity_types=tuple(obj["entity_types"]),
            legal_triples=frozenset(tuple(t) for t in obj["legal_triples"]),
        )
    except KeyError as e:
        raise CorpusError(f"ontology missing field {e.args[0]!r}") from None


def load_ontology(path) -> Ontology:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise CorpusError(f"{path}: {e}") from None
    return ontology_from_dict(obj)


def save_ontology(ontology: Ontology, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(ontology_to_dict(ontology), f, indent=2, sort_keys=True)
        f.write("\n")


def sentence_to_dict(sent: Sentence) -> dict:
    obj: dict = {
        "doc_id": sent.doc_id,
        "sent_id": sent.sent_id,
        "language": sent.language,
        "tokens": list(sent.tokens),
        "entities": [
            {
                "start": e.span.start,
                "end": e.span.end,
                "entity_type": e.entity_type,
                **({"head_index": e.head_index} if e.head_index is not None else {}),
            }
            for e in sent.entities
        ],
        "events": [
            {
                "trigger": {"start": ev.trigger.start, "end": ev.trigger.end},
                "event_type": ev.event_type,
                "arguments": [
                    {"start": sp.start, "end": sp.end, "role": role} for sp, role in ev.arguments
                ],
            }
            for ev in sent.events
        ],
    }
    if sent.origin_offset:
        obj["origin_offset"] = sent.origin_offset
    if sent.parent_sent_id is not None:
        obj["parent_sent_id"] = sent.parent_sent_id
    return obj


def sentence_from_dict(obj: dict) -> Sentence:
    try:
        return Sentence(
            doc_id=obj["doc_id"],
            sent_id=obj["sent_id"],
            language=obj["language"],
            tokens=tuple(obj["tokens"]),
            entities=tuple(
                EntityMention(
                    span=TokenSpan(e["start"], e["end"]),
                    entity_type=e["entity_type"],
                    head_index=e.get("head_index"),
                )
                for e in obj.get("entities", ())
            ),
            events=tuple(
                EventMention(
                    trigger=TokenSpan(ev["trigger"]["start"], ev["trigger"]["end"]),
                    event_type=ev["event_type"],
                    arguments=tuple(
                        (TokenSpan(a["start"], a["end"]), a["role"]) for a in ev.get("arguments", ())
                    ),
                )
                for ev in obj.get("events", ())
            ),
            origin_offset=obj.get("origin_offset", 0),
            parent_sent_id=obj.get("parent_sent_id"),
        )
    except KeyError as e:
        raise CorpusError(f"record missing field {e.args[0]!r}") from None


def load_corpus(path, ontology: Ontology | None = None) -> Corpus:
    sentences = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: {e.msg}") from None
            try:
                sent = sentence_from_dict(obj)
                if ontology is not None:
                    sent.validate_against(ontology)
            except CorpusError as e:
                raise CorpusError(f"{path}:{lineno}: {e}") from None
            sentences.append(sent)
    return Corpus(
        sentences=tuple(sentences),
        ontology_id=ontology.ontology_id if ontology is not None else "",
    )


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for sent in corpus.sentences:
            f.write(json.dumps(sentence_to_dict(sent), sort_keys=True))
            f.write("\n")


# ---------------------------------------------------------------------------
# Long-sentence splitting.  Pieces are cut greedily left to right at
# exactly max_len.  Events attach to the piece containing the trigger
# start; arguments that fall outside that piece are dropped from the
# piece-local gold (the unsplit corpus remains the scoring reference).

def _clip_to_piece(span: TokenSpan, lo: int, hi: int) -> TokenSpan | None:
    """Shift span into piece-local coordinates if fully inside [lo, hi)."""
    if span.start >= lo and span.end <= hi:
        return TokenSpan(span.start - lo, span.end - lo)
    return None


def split_long_sentences(corpus: Corpus, max_len: int) -> Corpus:
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    out = []
    for sent in corpus.sentences:
        n = len(sent.tokens)
        if n <= max_len:
            out.append(sent)
            continue
        bounds = [(lo, min(lo + max_len, n)) for lo in range(0, n, max_len)]
        for piece_idx, (lo, hi) in enumerate(bounds):
            entities = []
            for ent in sent.entities:
                local = _clip_to_piece(ent.span, lo, hi)
                if local is None:
                    continue
                head = ent.head_index - lo if ent.head_index is not None else None
                entities.append(EntityMention(span=local, entity_type=ent.entity_type, head_index=head))
            events = []
            for ev in sent.events:
                if not (lo <= ev.trigger.start < hi):
                    continue
                trig = TokenSpan(ev.trigger.start - lo, min(ev.trigger.end, hi) - lo)
                args = []
                for span, role in ev.arguments:
                    local = _clip_to_piece(span, lo, hi)
                    if local is not None:
                        args.append((local, role))
                events.append(EventMention(trigger=trig, event_type=ev.event_type, arguments=tuple(args)))
            out.append(
                Sentence(
                    doc_id=sent.doc_id,
                    sent_id=f"{sent.sent_id}.{piece_idx}",
                    language=sent.language,
                    tokens=sent.tokens[lo:hi],
                    entities=tuple(entities),
                    events=tuple(events),
                    origin_offset=sent.origin_offset + lo,
                    parent_sent_id=sent.sent_id,
                )
            )
    return Corpus(sentences=tuple(out), ontology_id=corpus.ontology_id)


def remap_to_reference(
    spans: list[tuple[Sentence, TokenSpan]], corpus: Corpus
) -> list[tuple[str, str, TokenSpan]]:
    """Map piece-local spans to (doc_id, parent sent_id, unsplit span)."""
    known = {(s.doc_id, s.sent_id) for s in corpus.sentences}
    out = []
    for sent, span in spans:
        if (sent.doc_id, sent.sent_id) not in known:
            raise CorpusError(f"unknown sentence {sent.doc_id}/{sent.sent_id}")
        parent = sent.parent_sent_id if sent.parent_sent_id is not None else sent.sent_id
        out.append((sent.doc_id, parent, span.shift(sent.origin_offset)))
    return out
