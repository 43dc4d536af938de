"""Synthetic corpus generation from flat slot templates.

Two modes: `simple` builds one event per sentence; `two_event` joins two
look-alike clauses whose verbs are shared across event types, so the clause
an argument belongs to cannot be recovered from the event type alone.  A
bilingual injective lexicon with anchor words simulates zero-shot transfer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .corpus import (
    Corpus,
    CorpusError,
    EntityMention,
    EventMention,
    Ontology,
    Sentence,
    TokenSpan,
)

SIMPLE = "simple"
TWO_EVENT = "two_event"
MODES = (SIMPLE, TWO_EVENT)

LANG_A = "syn-a"
LANG_B = "syn-b"

ANY_TYPE = "*"
SLOT_MARK = "$"


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class EventSchema:
    trigger_slot: str
    event_type: str  # ANY_TYPE draws uniformly at generation time
    args: tuple[tuple[str, str], ...] = ()  # (slot, role)


@dataclass(frozen=True)
class GrammarSpec:
    templates: tuple[tuple[str, ...], ...]
    slot_fillers: dict[str, tuple[str, ...]]
    event_schema: tuple[EventSchema, ...]
    lexicon: dict[str, str]
    anchor_words: frozenset[str]
    slot_entity_types: dict[str, str]
    connectors: tuple[str, ...] = ("and",)

    def __post_init__(self):
        if len(self.templates) != len(self.event_schema):
            raise GrammarError("one event schema per template required")
        if not self.templates:
            raise GrammarError("grammar needs at least one template")
        for t, (template, schema) in enumerate(zip(self.templates, self.event_schema)):
            slots = {tok[1:] for tok in template if tok.startswith(SLOT_MARK)}
            for slot in slots:
                if slot not in self.slot_fillers or not self.slot_fillers[slot]:
                    raise GrammarError(f"template {t}: slot {slot!r} has no fillers")
            if schema.trigger_slot not in slots:
                raise GrammarError(
                    f"template {t}: trigger slot {schema.trigger_slot!r} not in template")
            for slot, _ in schema.args:
                if slot not in slots:
                    raise GrammarError(f"template {t}: argument slot {slot!r} not in template")
        images = list(self.lexicon.values())
        if len(set(images)) != len(images):
            raise GrammarError("lexicon must be injective")
        for word in self.anchor_words:
            if self.lexicon.get(word) != word:
                raise GrammarError(f"anchor word {word!r} must map to itself")
        for slot in self.slot_entity_types:
            if slot not in self.slot_fillers:
                raise GrammarError(f"entity type given for unknown slot {slot!r}")

    def validate_against(self, ontology: Ontology) -> None:
        for t, schema in enumerate(self.event_schema):
            if schema.event_type == ANY_TYPE:
                allowed = ontology.event_types
            else:
                if schema.event_type not in ontology.event_types:
                    raise GrammarError(
                        f"template {t}: unknown event type {schema.event_type!r}")
                allowed = (schema.event_type,)
            for _, role in schema.args:
                for etype in allowed:
                    if role not in ontology.roles_for.get(etype, ()):
                        raise GrammarError(
                            f"template {t}: role {role!r} not allowed for {etype!r}")
        for slot, etype in self.slot_entity_types.items():
            if etype not in ontology.entity_types:
                raise GrammarError(f"slot {slot!r}: unknown entity type {etype!r}")

    def vocabulary(self) -> frozenset[str]:
        words = set()
        for template in self.templates:
            for tok in template:
                if not tok.startswith(SLOT_MARK):
                    words.add(tok)
        for fillers in self.slot_fillers.values():
            for filler in fillers:
                words.update(filler.split())
        words.update(self.connectors)
        return frozenset(words)

    def function_words(self) -> frozenset[str]:
        """Words fixed by the templates themselves rather than drawn from pools."""
        words = set(self.connectors)
        for template in self.templates:
            for tok in template:
                if not tok.startswith(SLOT_MARK):
                    words.add(tok)
        return frozenset(words)


# -- serialization ------------------------------------------------------------

def grammar_to_dict(spec: GrammarSpec) -> dict:
    return {
        "templates": [list(t) for t in spec.templates],
        "slot_fillers": {k: list(v) for k, v in sorted(spec.slot_fillers.items())},
        "event_schema": [
            {"trigger_slot": s.trigger_slot, "event_type": s.event_type,
             "args": [list(a) for a in s.args]}
            for s in spec.event_schema
        ],
        "lexicon": dict(sorted(spec.lexicon.items())),
        "anchor_words": sorted(spec.anchor_words),
        "slot_entity_types": dict(sorted(spec.slot_entity_types.items())),
        "connectors": list(spec.connectors),
    }


def grammar_from_dict(data: dict) -> GrammarSpec:
    try:
        return GrammarSpec(
            templates=tuple(tuple(t) for t in data["templates"]),
            slot_fillers={k: tuple(v) for k, v in data["slot_fillers"].items()},
            event_schema=tuple(
                EventSchema(trigger_slot=s["trigger_slot"],
                            event_type=s["event_type"],
                            args=tuple((a[0], a[1]) for a in s["args"]))
                for s in data["event_schema"]
            ),
            lexicon=dict(data["lexicon"]),
            anchor_words=frozenset(data["anchor_words"]),
            slot_entity_types=dict(data["slot_entity_types"]),
            connectors=tuple(data.get("connectors", ("and",))),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise GrammarError(f"bad grammar file: {exc}") from exc


def save_grammar(spec: GrammarSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(grammar_to_dict(spec), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def load_grammar(path) -> GrammarSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return grammar_from_dict(json.load(fh))


# -- default toy world --------------------------------------------------------

def default_ontology() -> Ontology:
    roles = ("agent", "target", "instrument", "partner", "place",
             "giver", "recipient", "item", "detainee", "cause")
    return Ontology(
        ontology_id="toy-events-v1",
        event_types=("attack", "meet", "transfer", "arrest", "protest"),
        roles_for={
            "attack": ("agent", "target", "instrument"),
            "meet": ("agent", "partner", "place"),
            "transfer": ("giver", "recipient", "item"),
            "arrest": ("agent", "detainee", "place"),
            "protest": ("agent", "cause"),
        },
        role_code={role: str(i + 1) for i, role in enumerate(roles)},
        entity_types=("person", "org", "place", "thing", "weapon"),
        legal_triples=frozenset(
            [("person", "attack", "agent"), ("org", "attack", "agent"),
             ("person", "attack", "target"), ("org", "attack", "target"),
             ("place", "attack", "target"), ("thing", "attack", "target"),
             ("weapon", "attack", "instrument"), ("thing", "attack", "instrument"),
             ("person", "meet", "agent"), ("org", "meet", "agent"),
             ("person", "meet", "partner"), ("org", "meet", "partner"),
             ("place", "meet", "place"),
             ("person", "transfer", "giver"), ("org", "transfer", "giver"),
             ("person", "transfer", "recipient"), ("org", "transfer", "recipient"),
             ("thing", "transfer", "item"),
             ("person", "arrest", "agent"), ("org", "arrest", "agent"),
             ("person", "arrest", "detainee"),
             ("place", "arrest", "place"),
             ("person", "protest", "agent"), ("org", "protest", "agent"),
             ("thing", "protest", "cause")]),
    )


_PEOPLE = ("soldiers", "rebels", "workers", "students", "farmers", "guards",
           "miners", "clerks", "pilgrims", "senators", "nomads", "angry mobs",
           "young cadets", "envoys",
           # single-token proper names keep many argument spans one token wide
           "Farid", "Nadia", "Omar", "Lena", "Tariq", "Sumi", "Ravik", "Anwar")
_ORGS = ("parliament", "the guild", "the union", "the syndicate", "the ministry",
         "the council", "the consulate", "the tribunal")
_PLACES = ("the plaza", "the harbor", "the depot", "the citadel", "the bazaar",
           "the garrison", "the granary", "the quay", "the foundry",
           "Korvan", "Meshra", "Talpur", "Veyd")
_THINGS = ("the shipment", "the ledger", "the relic", "the harvest",
           "the manifesto", "the toll", "the edict", "the ration",
           "the stipend", "the charter", "grain", "silver", "timber", "medicine")
_WEAPONS = ("mortars", "sabres", "slings", "muskets", "torches", "catapults")
_TIMES = ("yesterday", "overnight", "at dawn", "last week", "after the truce")


def simple_grammar(anchor_fraction: float = 0.3, seed: int = 0) -> GrammarSpec:
    # Each event type is realized by several templates that move the argument
    # slots around the trigger (active, passive, fronted adjuncts, untyped
    # $WHEN distractors, typed non-argument entities), so token position
    # alone does not determine a role: roles hinge on word identity plus a
    # handful of function words.
    templates = (
        ("$WHEN", "$PER", "$ATTACKV", "$PLACE", "with", "$WEAPON", "."),
        ("$PER", "$ATTACKV", "$PER2", "$WHEN", "."),
        ("near", "$PLACE", "$PER", "$ATTACKV", "$PER2", "."),
        ("$PER2", "was", "$ATTACKV", "by", "$PER", "$WHEN", "."),
        ("$WHEN", "$PER2", "was", "$ATTACKV", "by", "$PER", "."),
        ("$PER", "with", "$WEAPON", "$ATTACKV", "$PER2", "."),
        ("$PER", "$MEETV", "$PER2", "at", "$PLACE", "."),
        ("$ORG", "$MEETV", "$PER", "."),
        ("at", "$PLACE", "$ORG", "$MEETV", "$PER", "."),
        ("$PER", "and", "$PER2", "$MEETV", "$WHEN", "."),
        ("$PER2", "was", "$MEETV", "by", "$PER", "at", "$PLACE", "."),
        ("$WHEN", "$ORG", "$MEETV", "$PER2", "at", "$PLACE", "."),
        ("$PER", "$TRANSFERV", "$THING", "to", "$PER2", "."),
        ("$ORG", "$TRANSFERV", "$THING", "to", "$ORG2", "$WHEN", "."),
        ("$WHEN", "$THING", "was", "$TRANSFERV", "to", "$PER", "by", "$PER2", "."),
        ("$PER", "$TRANSFERV", "$PER2", "$THING", "."),
        ("$THING", "was", "$TRANSFERV", "by", "$ORG", "to", "$ORG2", "."),
        ("to", "$PER2", "$PER", "$TRANSFERV", "$THING", "$WHEN", "."),
        ("$PER", "$ARRESTV", "$PER2", "near", "$PLACE", "."),
        ("$WHEN", "$PER", "$ARRESTV", "$PER2", "."),
        ("$PER2", "was", "$ARRESTV", "by", "$PER", "at", "$PLACE", "."),
        ("at", "$PLACE", "$ORG", "$ARRESTV", "$PER", "."),
        ("$WHEN", "at", "$PLACE", "$PER2", "was", "$ARRESTV", "."),
        ("$ORG", "$ARRESTV", "$PER", "$WHEN", "."),
        ("$PER", "$PROTESTV", "$THING", "."),
        ("$ORG", "$PROTESTV", "$THING", "$WHEN", "."),
        ("$WHEN", "$PER", "$PROTESTV", "$THING", "at", "$PLACE", "."),
        ("$THING", "was", "$PROTESTV", "by", "$PER", "."),
        ("$PER", "and", "$PER2", "$PROTESTV", "$THING", "."),
        ("$THING", "was", "$PROTESTV", "$WHEN", "by", "$ORG", "."),
    )
    event_schema = (
        EventSchema("ATTACKV", "attack",
                    (("PER", "agent"), ("PLACE", "target"), ("WEAPON", "instrument"))),
        EventSchema("ATTACKV", "attack", (("PER", "agent"), ("PER2", "target"))),
        # the fronted $PLACE is a typed entity but not an argument
        EventSchema("ATTACKV", "attack", (("PER", "agent"), ("PER2", "target"))),
        EventSchema("ATTACKV", "attack", (("PER", "agent"), ("PER2", "target"))),
        EventSchema("ATTACKV", "attack", (("PER", "agent"), ("PER2", "target"))),
        EventSchema("ATTACKV", "attack",
                    (("PER", "agent"), ("WEAPON", "instrument"), ("PER2", "target"))),
        EventSchema("MEETV", "meet",
                    (("PER", "agent"), ("PER2", "partner"), ("PLACE", "place"))),
        EventSchema("MEETV", "meet", (("ORG", "agent"), ("PER", "partner"))),
        EventSchema("MEETV", "meet",
                    (("ORG", "agent"), ("PER", "partner"), ("PLACE", "place"))),
        EventSchema("MEETV", "meet", (("PER", "agent"), ("PER2", "partner"))),
        EventSchema("MEETV", "meet",
                    (("PER", "agent"), ("PER2", "partner"), ("PLACE", "place"))),
        EventSchema("MEETV", "meet",
                    (("ORG", "agent"), ("PER2", "partner"), ("PLACE", "place"))),
        EventSchema("TRANSFERV", "transfer",
                    (("PER", "giver"), ("THING", "item"), ("PER2", "recipient"))),
        EventSchema("TRANSFERV", "transfer",
                    (("ORG", "giver"), ("THING", "item"), ("ORG2", "recipient"))),
        EventSchema("TRANSFERV", "transfer",
                    (("PER2", "giver"), ("THING", "item"), ("PER", "recipient"))),
        EventSchema("TRANSFERV", "transfer",
                    (("PER", "giver"), ("PER2", "recipient"), ("THING", "item"))),
        EventSchema("TRANSFERV", "transfer",
                    (("ORG", "giver"), ("THING", "item"), ("ORG2", "recipient"))),
        EventSchema("TRANSFERV", "transfer",
                    (("PER", "giver"), ("THING", "item"), ("PER2", "recipient"))),
        EventSchema("ARRESTV", "arrest",
                    (("PER", "agent"), ("PER2", "detainee"), ("PLACE", "place"))),
        EventSchema("ARRESTV", "arrest", (("PER", "agent"), ("PER2", "detainee"))),
        EventSchema("ARRESTV", "arrest",
                    (("PER", "agent"), ("PER2", "detainee"), ("PLACE", "place"))),
        EventSchema("ARRESTV", "arrest",
                    (("ORG", "agent"), ("PER", "detainee"), ("PLACE", "place"))),
        # agentless passive: only the detainee and the place are arguments
        EventSchema("ARRESTV", "arrest",
                    (("PER2", "detainee"), ("PLACE", "place"))),
        EventSchema("ARRESTV", "arrest", (("ORG", "agent"), ("PER", "detainee"))),
        EventSchema("PROTESTV", "protest", (("PER", "agent"), ("THING", "cause"))),
        EventSchema("PROTESTV", "protest", (("ORG", "agent"), ("THING", "cause"))),
        # trailing $PLACE is a typed entity but not an argument
        EventSchema("PROTESTV", "protest", (("PER", "agent"), ("THING", "cause"))),
        EventSchema("PROTESTV", "protest", (("PER", "agent"), ("THING", "cause"))),
        # coordinated subjects: two mentions fill the same role
        EventSchema("PROTESTV", "protest",
                    (("PER", "agent"), ("PER2", "agent"), ("THING", "cause"))),
        EventSchema("PROTESTV", "protest", (("ORG", "agent"), ("THING", "cause"))),
    )
    slot_fillers = {
        "PER": _PEOPLE, "PER2": _PEOPLE,
        "ORG": _ORGS, "ORG2": _ORGS,
        "PLACE": _PLACES, "THING": _THINGS, "WEAPON": _WEAPONS,
        "WHEN": _TIMES,
        "ATTACKV": ("stormed", "raided", "ambushed", "shelled", "besieged"),
        "MEETV": ("met", "convened", "greeted", "hosted"),
        "TRANSFERV": ("sold", "handed", "shipped", "ceded"),
        "ARRESTV": ("detained", "arrested", "seized", "apprehended"),
        "PROTESTV": ("protested", "denounced", "picketed", "boycotted"),
    }
    slot_entity_types = {
        "PER": "person", "PER2": "person", "ORG": "org", "ORG2": "org",
        "PLACE": "place", "THING": "thing", "WEAPON": "weapon",
    }
    spec = GrammarSpec(
        templates=templates, slot_fillers=slot_fillers, event_schema=event_schema,
        lexicon={}, anchor_words=frozenset(), slot_entity_types=slot_entity_types)
    return with_lexicon(spec, anchor_fraction=anchor_fraction, seed=seed)


def two_event_ontology() -> Ontology:
    return Ontology(
        ontology_id="look-alike-v1",
        event_types=("grab", "hold", "move"),
        roles_for={"grab": ("agent", "theme"), "hold": ("agent", "theme"),
                   "move": ("agent", "theme")},
        role_code={"agent": "1", "theme": "2"},
        entity_types=("person", "thing"),
        legal_triples=frozenset(
            [(etype, event, role)
             for event in ("grab", "hold", "move")
             for etype, role in (("person", "agent"), ("thing", "theme"))]),
    )


def two_event_grammar(anchor_fraction: float = 0.3, seed: int = 0) -> GrammarSpec:
    # Look-alike clauses: the verb surface form never determines the event
    # type, so argument attachment requires knowing which trigger is queried.
    templates = (
        ("$PER", "$VERB", "the", "$OBJ",),
        ("$PER", "$VERB", "the", "$OBJ", "again"),
        ("$PER", "quietly", "$VERB", "the", "$OBJ"),
    )
    schema = EventSchema("VERB", ANY_TYPE, (("PER", "agent"), ("OBJ", "theme")))
    slot_fillers = {
        "PER": ("wardens", "scouts", "bakers", "smiths", "weavers", "heralds",
                "porters", "scribes"),
        "VERB": ("took", "held", "moved", "raised", "turned", "carried"),
        "OBJ": ("crate", "banner", "kettle", "lantern", "plough", "anvil",
                "barrel", "bell"),
    }
    spec = GrammarSpec(
        templates=templates, slot_fillers=slot_fillers,
        event_schema=(schema, schema, schema),
        lexicon={}, anchor_words=frozenset(),
        slot_entity_types={"PER": "person", "OBJ": "thing"},
        connectors=("and", "while", "as"))
    return with_lexicon(spec, anchor_fraction=anchor_fraction, seed=seed)


_CODE_LETTERS = "abcdefghij"


def _image_code(index: int) -> str:
    """Short pseudo-word for lexicon images: q + letters drawn from a
    ten-letter alphabet, so unseen words stay a few pieces long instead of
    ballooning into character soup that overruns trained positions."""
    letters = []
    while True:
        letters.append(_CODE_LETTERS[index % 10])
        index //= 10
        if not index:
            break
    return "q" + "".join(reversed(letters))


def with_lexicon(spec: GrammarSpec, anchor_fraction: float, seed: int = 0) -> GrammarSpec:
    """Attach an injective A->B lexicon with the given anchor share.

    Anchors are sampled separately from the template-fixed function words and
    from the pool-drawn content words, so a single unlucky draw cannot skew
    the function/content balance that the transfer experiments turn on.
    """
    if not 0.0 <= anchor_fraction <= 1.0:
        raise GrammarError("anchor_fraction must lie in [0, 1]")
    vocab = sorted(spec.vocabulary())
    vocab_set = set(vocab)
    rng = np.random.default_rng([seed, 83])
    function_words = spec.function_words()
    picked = []
    for stratum in (sorted(w for w in vocab if w in function_words),
                    sorted(w for w in vocab if w not in function_words)):
        k = int(round(anchor_fraction * len(stratum)))
        if stratum and k:
            idx = rng.choice(len(stratum), size=k, replace=False)
            picked.extend(stratum[int(i)] for i in idx)
    anchors = frozenset(picked)
    lexicon = {}
    taken: set[str] = set()
    next_code = 0
    for word in vocab:
        if word in anchors:
            lexicon[word] = word
            continue
        image = _image_code(next_code)
        next_code += 1
        while image in vocab_set or image in taken:
            image = _image_code(next_code)
            next_code += 1
        taken.add(image)
        lexicon[word] = image
    return replace(spec, lexicon=lexicon, anchor_words=anchors)


# -- generation ---------------------------------------------------------------

def _draw(rng, options):
    return options[int(rng.integers(0, len(options)))]


def _draw_distinct(rng, options, used, tries: int = 20):
    pick = _draw(rng, options)
    while pick in used and tries > 0:
        pick = _draw(rng, options)
        tries -= 1
    return pick


def _expand_clause(spec, template_index, rng, used_fillers):
    """Instantiate one template; returns (tokens, slot spans, slot picks)."""
    template = spec.templates[template_index]
    tokens: list[str] = []
    spans: dict[str, TokenSpan] = {}
    for tok in template:
        if not tok.startswith(SLOT_MARK):
            tokens.append(tok)
            continue
        slot = tok[1:]
        filler = _draw_distinct(rng, spec.slot_fillers[slot],
                                used_fillers.get(slot.rstrip("0123456789"), set()))
        used_fillers.setdefault(slot.rstrip("0123456789"), set()).add(filler)
        words = filler.split()
        spans[slot] = TokenSpan(len(tokens), len(tokens) + len(words))
        tokens.extend(words)
    return tokens, spans


def _clause_annotations(spec, template_index, spans, event_type):
    schema = spec.event_schema[template_index]
    event = EventMention(
        trigger=spans[schema.trigger_slot],
        event_type=event_type,
        arguments=tuple((spans[slot], role) for slot, role in schema.args))
    entities = tuple(
        EntityMention(span=spans[slot], entity_type=spec.slot_entity_types[slot])
        for slot in sorted(spans, key=lambda s: spans[s].start)
        if slot in spec.slot_entity_types)
    return event, entities


def _clause_type(spec, template_index, ontology, rng, forbidden=()):
    declared = spec.event_schema[template_index].event_type
    if declared != ANY_TYPE:
        return declared
    options = [t for t in ontology.event_types if t not in forbidden]
    return _draw(rng, options)


def generate_corpus(spec: GrammarSpec, ontology: Ontology, n: int, seed: int,
                    mode: str = SIMPLE) -> Corpus:
    """Generate n sentences; deterministic given (spec, seed, mode)."""
    if n < 1:
        raise GrammarError("n must be at least 1")
    if mode not in MODES:
        raise GrammarError(f"unknown mode {mode!r}")
    spec.validate_against(ontology)
    if mode == TWO_EVENT:
        if len(ontology.event_types) < 2:
            raise GrammarError("two_event mode needs at least two event types")
        for t, schema in enumerate(spec.event_schema):
            if schema.event_type != ANY_TYPE:
                raise GrammarError(
                    f"two_event mode requires wildcard event types (template {t})")
    sentences = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])  # per-sentence stream: shardable
        if mode == SIMPLE:
            used: dict[str, set] = {}
            t = int(rng.integers(0, len(spec.templates)))
            tokens, spans = _expand_clause(spec, t, rng, used)
            etype = _clause_type(spec, t, ontology, rng)
            event, entities = _clause_annotations(spec, t, spans, etype)
            events = (event,)
        else:
            used = {}
            t1 = int(rng.integers(0, len(spec.templates)))
            t2 = int(rng.integers(0, len(spec.templates)))
            tokens, spans1 = _expand_clause(spec, t1, rng, used)
            type1 = _clause_type(spec, t1, ontology, rng)
            connector = _draw(rng, spec.connectors)
            offset = len(tokens) + 1
            tokens.append(connector)
            tokens2, spans2 = _expand_clause(spec, t2, rng, used)
            tokens.extend(tokens2)
            spans2 = {slot: span.shift(offset) for slot, span in spans2.items()}
            type2 = _clause_type(spec, t2, ontology, rng, forbidden=(type1,))
            ev1, ent1 = _clause_annotations(spec, t1, spans1, type1)
            ev2, ent2 = _clause_annotations(spec, t2, spans2, type2)
            events = (ev1, ev2)
            entities = ent1 + ent2
            _check_two_event(events)
        sentence = Sentence(
            doc_id=f"d{i // 50:04d}", sent_id=f"s{i:06d}", language=LANG_A,
            tokens=tuple(tokens), entities=entities, events=events)
        sentence.validate_against(ontology)
        sentences.append(sentence)
    return Corpus(sentences=tuple(sentences), ontology_id=ontology.ontology_id)


def _check_two_event(events) -> None:
    # Generator self-check: two distinct-type events with at least one
    # argument span belonging to exactly one of them.
    if len(events) != 2 or events[0].event_type == events[1].event_type:
        raise GrammarError("two_event generation produced a malformed sentence")
    spans1 = {span for span, _ in events[0].arguments}
    spans2 = {span for span, _ in events[1].arguments}
    if not (spans1 ^ spans2):
        raise GrammarError("two_event sentence lacks a discriminating argument")


# -- translation --------------------------------------------------------------

def _flip_language(language: str) -> str:
    if language == LANG_A:
        return LANG_B
    if language == LANG_B:
        return LANG_A
    raise CorpusError(f"cannot flip unknown language {language!r}")


def translate_corpus(corpus: Corpus, spec: GrammarSpec) -> Corpus:
    """Token-by-token substitution via the lexicon; structure unchanged."""
    sentences = []
    for sentence in corpus:
        translated = []
        for tok in sentence.tokens:
            if tok not in spec.lexicon:
                raise CorpusError(
                    f"{sentence.doc_id}/{sentence.sent_id}: token {tok!r} not in lexicon")
            translated.append(spec.lexicon[tok])
        sentences.append(replace(
            sentence, tokens=tuple(translated),
            language=_flip_language(sentence.language)))
    return Corpus(sentences=tuple(sentences), ontology_id=corpus.ontology_id)


def invert_lexicon(spec: GrammarSpec) -> GrammarSpec:
    return replace(spec, lexicon={v: k for k, v in spec.lexicon.items()})
