"""Extraction models: trigger taggers, argument taggers, candidate classifier.

Six model kinds share one toy encoder and differ in how queries reach it
and in their output heads:

- trigger-baseline: unprimed encode, per-word linear over typed BIO,
  argmax decode with I-repair.
- trigger-primed: one encode per prime token; an untyped-BIO CRF span
  head over the sentence plus a type head over CLS and the prime vector.
  A trigger is emitted iff the type head predicts a real type; if the
  span head is silent at the prime, the prime token itself is the span.
- args-baseline: unprimed encode; word ⊕ trigger-vector ⊕ event-type
  embedding into a bi-LSTM, CRF over the roles allowed for the event
  type (role-BIO).
- args-trigger-primed: same head, but the encoder input is primed with
  the trigger words.
- args-role-primed: one encode per allowed role (trigger ; role-code
  prime); untyped-BIO CRF; every decoded span takes the queried role.
- candidates: gold entity mentions in sequence; head-token vector ⊕
  trigger vector ⊕ event-type ⊕ entity-type embeddings, linear into an
  unmasked CRF over roles ∪ NONE, with illegal (entity, event, role)
  triples forced to NONE after decoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import crf
from .corpus import EntityMention, EventMention, Ontology, Sentence, TokenSpan
from .encoder import EncoderConfig, encode, init_encoder
from .priming import (
    PrimedInput,
    prime_none,
    prime_token,
    prime_trigger,
    prime_trigger_role,
    trigger_words,
)
from .tokenizer import SubwordVocab, pool_word_vectors

TRIGGER_BASELINE = "trigger-baseline"
TRIGGER_PRIMED = "trigger-primed"
ARGS_BASELINE = "args-baseline"
ARGS_TRIGGER_PRIMED = "args-trigger-primed"
ARGS_ROLE_PRIMED = "args-role-primed"
CANDIDATES = "candidates"
KINDS = (
    TRIGGER_BASELINE,
    TRIGGER_PRIMED,
    ARGS_BASELINE,
    ARGS_TRIGGER_PRIMED,
    ARGS_ROLE_PRIMED,
    CANDIDATES,
)

NONE_TYPE = "NONE"


@dataclass(frozen=True)
class ModelConfig:
    hidden: int = 64
    heads: int = 4
    layers: int = 2
    feedforward: int = 128
    max_positions: int = 128
    recurrent: int = 64
    event_dim: int = 16
    entity_dim: int = 16
    type_loss_weight: float = 1.0
    use_trigger_vector: bool = True
    negative_prime_ratio: float = 3.0

    def encoder(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=vocab_size,
            hidden=self.hidden,
            heads=self.heads,
            layers=self.layers,
            feedforward=self.feedforward,
            max_positions=self.max_positions,
        )


@dataclass(frozen=True)
class TriggerPrediction:
    span: TokenSpan
    event_type: str
    score: float


@dataclass(frozen=True)
class ArgumentPrediction:
    trigger: TokenSpan
    event_type: str
    span: TokenSpan
    role: str
    score: float


@dataclass
class Model:
    kind: str
    config: ModelConfig
    ontology: Ontology
    vocab: SubwordVocab
    params: dict[str, ad.Tensor]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def encoder_config(self) -> EncoderConfig:
        return self.config.encoder(len(self.vocab))

    @property
    def typed_trigger_space(self) -> crf.LabelSpace:
        return crf.typed_bio(self.ontology.event_types)

    @property
    def role_space(self) -> crf.LabelSpace:
        return crf.typed_bio(self.ontology.all_roles())

    @property
    def candidate_space(self) -> crf.LabelSpace:
        return crf.candidate_roles(self.ontology.all_roles())

    @property
    def type_head_labels(self) -> tuple[str, ...]:
        # NONE first so an untrained all-equal head defaults to "no trigger".
        return (NONE_TYPE, *self.ontology.event_types)

    def role_restriction(self, event_type: str) -> list[int]:
        """Indices of the per-event-type role-BIO labels in the full space."""
        space = self.role_space
        indices = [space.index("O")]
        for role in self.ontology.roles_for.get(event_type, ()):
            indices.append(space.index(f"B-{role}"))
            indices.append(space.index(f"I-{role}"))
        return indices

    def transition_table(self, head: str, mask_space: crf.LabelSpace | None = None) -> crf.TransitionTable:
        table = crf.TransitionTable(
            transition=self.params[f"{head}.trans"],
            start=self.params[f"{head}.start"],
            end=self.params[f"{head}.end"],
        )
        if mask_space is not None:
            tm, sm = crf.bio_mask(mask_space)
            table = crf.TransitionTable(
                transition=table.transition, start=table.start, end=table.end,
                trans_mask=tm, start_mask=sm,
            )
        return table

    def encoder_params(self) -> dict[str, ad.Tensor]:
        return {k[4:]: v for k, v in self.params.items() if k.startswith("enc.")}

    def parameters(self) -> list[ad.Tensor]:
        return [self.params[name] for name in sorted(self.params)]


def _xavier_param(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> ad.Tensor:
    r = math.sqrt(6.0 / (fan_in + fan_out))
    return ad.param(rng.uniform(-r, r, size=shape if shape is not None else (fan_in, fan_out)))


def _add_linear(params, rng, name: str, d_in: int, d_out: int) -> None:
    params[f"{name}.w"] = _xavier_param(rng, d_in, d_out)
    params[f"{name}.b"] = ad.param(np.zeros(d_out))


def _add_bilstm(params, rng, name: str, d_in: int, hidden: int) -> None:
    for direction in ("fw", "bw"):
        params[f"{name}.{direction}.wx"] = _xavier_param(rng, d_in, 4 * hidden)
        params[f"{name}.{direction}.wh"] = _xavier_param(rng, hidden, 4 * hidden)
        params[f"{name}.{direction}.b"] = ad.param(np.zeros(4 * hidden))


def _add_crf(params, name: str, n_labels: int) -> None:
    params[f"{name}.trans"] = ad.param(np.zeros((n_labels, n_labels)))
    params[f"{name}.start"] = ad.param(np.zeros(n_labels))
    params[f"{name}.end"] = ad.param(np.zeros(n_labels))


def init_model(
    kind: str, ontology: Ontology, vocab: SubwordVocab, config: ModelConfig, seed: int
) -> Model:
    enc = init_encoder(config.encoder(len(vocab)), seed)
    params = {f"enc.{k}": v for k, v in enc.items()}
    rng = np.random.default_rng([seed, 1])
    d, h = config.hidden, config.recurrent
    n_types = len(ontology.event_types)
    n_roles = len(ontology.all_roles())
    args_in = d + (d if config.use_trigger_vector else 0) + config.event_dim
    if kind == TRIGGER_BASELINE:
        _add_linear(params, rng, "head", d, 2 * n_types + 1)
    elif kind == TRIGGER_PRIMED:
        _add_bilstm(params, rng, "span", d, h)
        _add_linear(params, rng, "span.out", 2 * h, 3)
        _add_crf(params, "span", 3)
        _add_linear(params, rng, "type", 2 * d, n_types + 1)
    elif kind in (ARGS_BASELINE, ARGS_TRIGGER_PRIMED):
        params["event_emb"] = _xavier_param(rng, n_types, config.event_dim)
        _add_bilstm(params, rng, "args", args_in, h)
        _add_linear(params, rng, "args.out", 2 * h, 2 * n_roles + 1)
        _add_crf(params, "args", 2 * n_roles + 1)
    elif kind == ARGS_ROLE_PRIMED:
        params["event_emb"] = _xavier_param(rng, n_types, config.event_dim)
        _add_bilstm(params, rng, "role", args_in, h)
        _add_linear(params, rng, "role.out", 2 * h, 3)
        _add_crf(params, "role", 3)
    elif kind == CANDIDATES:
        params["event_emb"] = _xavier_param(rng, n_types, config.event_dim)
        params["entity_emb"] = _xavier_param(
            rng, len(ontology.entity_types), config.entity_dim)
        cand_in = 2 * d + config.event_dim + config.entity_dim
        _add_linear(params, rng, "cand", cand_in, n_roles + 1)
        _add_crf(params, "cand", n_roles + 1)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return Model(kind=kind, config=config, ontology=ontology, vocab=vocab, params=params)


# ---------------------------------------------------------------------------
# shared forward pieces


def _encode_pooled(model: Model, primed: PrimedInput):
    """Word vectors, CLS vector, and mean prime vector for one input."""
    out = encode(model.encoder_params(), model.encoder_config,
                 primed.piece_ids, primed.segment_ids)
    words = pool_word_vectors(out, primed.alignment)
    cls_vec = ad.reshape(ad.narrow(out, 0, 0, 1), (model.config.hidden,))
    lo, hi = primed.alignment.prime_pieces
    prime_vec = None
    if hi > lo:
        prime_vec = ad.reshape(ad.pool_rows(out, [(lo, hi)]), (model.config.hidden,))
    return words, cls_vec, prime_vec


def _linear(model: Model, name: str, x: ad.Tensor) -> ad.Tensor:
    return ad.add(ad.matmul(x, model.params[f"{name}.w"]), model.params[f"{name}.b"])


def _bilstm(model: Model, name: str, x: ad.Tensor) -> ad.Tensor:
    p = model.params
    fw = (p[f"{name}.fw.wx"], p[f"{name}.fw.wh"], p[f"{name}.fw.b"])
    bw = (p[f"{name}.bw.wx"], p[f"{name}.bw.wh"], p[f"{name}.bw.b"])
    return ad.bilstm(x, fw, bw)


def _trigger_vector(words: ad.Tensor, trigger: TokenSpan, n_words: int) -> ad.Tensor:
    if trigger.end > n_words:
        raise ValueError(f"trigger span [{trigger.start},{trigger.end}) exceeds sentence length {n_words}")
    pooled = ad.pool_rows(words, [(trigger.start, trigger.end)])
    return ad.reshape(pooled, (words.shape[1],))


def _args_features(model: Model, words: ad.Tensor, trigger: TokenSpan, event_type: str) -> ad.Tensor:
    n = words.shape[0]
    parts = [words]
    if model.config.use_trigger_vector:
        parts.append(ad.tile_rows(_trigger_vector(words, trigger, n), n))
    type_idx = model.ontology.event_types.index(event_type)
    event_row = ad.reshape(ad.take(model.params["event_emb"], [type_idx]),
                           (model.config.event_dim,))
    parts.append(ad.tile_rows(event_row, n))
    return ad.concat(parts, axis=1)


# ---------------------------------------------------------------------------
# per-kind emissions


def trigger_baseline_logits(model: Model, sentence: Sentence) -> ad.Tensor:
    words, _, _ = _encode_pooled(model, prime_none(model.vocab, sentence))
    return _linear(model, "head", words)


def trigger_primed_forward(model: Model, sentence: Sentence, prime_index: int):
    """(untyped-BIO emissions over words, event-type logits) for one prime."""
    primed = prime_token(model.vocab, prime_index, sentence)
    words, cls_vec, prime_vec = _encode_pooled(model, primed)
    span_emissions = _linear(model, "span.out", _bilstm(model, "span", words))
    pair = ad.reshape(ad.concat([cls_vec, prime_vec], axis=0), (1, 2 * model.config.hidden))
    type_logits = ad.reshape(_linear(model, "type", pair),
                             (len(model.type_head_labels),))
    return span_emissions, type_logits


def args_emissions(model: Model, sentence: Sentence, trigger: TokenSpan, event_type: str):
    """(emissions over the restricted role-BIO space, restricted table)."""
    if model.kind == ARGS_TRIGGER_PRIMED:
        primed = prime_trigger(model.vocab, trigger_words(sentence, trigger), sentence)
    else:
        primed = prime_none(model.vocab, sentence)
    words, _, _ = _encode_pooled(model, primed)
    feats = _args_features(model, words, trigger, event_type)
    full = _linear(model, "args.out", _bilstm(model, "args", feats))
    indices = model.role_restriction(event_type)
    emissions = ad.take(full, indices, axis=1)
    space = crf.typed_bio(model.ontology.roles_for.get(event_type, ()))
    table = model.transition_table("args").restrict(indices)
    tm, sm = crf.bio_mask(space)
    table = crf.TransitionTable(
        transition=table.transition, start=table.start, end=table.end,
        trans_mask=tm, start_mask=sm,
    )
    return emissions, table, space


def role_primed_emissions(model: Model, sentence: Sentence, trigger: TokenSpan,
                          event_type: str, role: str):
    primed = prime_trigger_role(
        model.vocab, trigger_words(sentence, trigger), role, model.ontology, sentence)
    words, _, _ = _encode_pooled(model, primed)
    feats = _args_features(model, words, trigger, event_type)
    return _linear(model, "role.out", _bilstm(model, "role", feats))


def candidate_features(model: Model, sentence: Sentence, trigger: TokenSpan,
                       event_type: str, candidates: tuple[EntityMention, ...]):
    words, _, _ = _encode_pooled(model, prime_none(model.vocab, sentence))
    n = words.shape[0]
    head_vecs = ad.take(words, [c.head() for c in candidates])
    trig = ad.tile_rows(_trigger_vector(words, trigger, n), len(candidates))
    type_idx = model.ontology.event_types.index(event_type)
    event_row = ad.reshape(ad.take(model.params["event_emb"], [type_idx]),
                           (model.config.event_dim,))
    event_rows = ad.tile_rows(event_row, len(candidates))
    ent_rows = ad.take(model.params["entity_emb"],
                       [model.ontology.entity_types.index(c.entity_type) for c in candidates])
    return ad.concat([head_vecs, trig, event_rows, ent_rows], axis=1)


def candidate_emissions(model: Model, sentence: Sentence, trigger: TokenSpan,
                        event_type: str, candidates: tuple[EntityMention, ...]):
    if not candidates:
        raise ValueError("candidates must be non-empty")
    feats = candidate_features(model, sentence, trigger, event_type, candidates)
    return _linear(model, "cand", feats)


# ---------------------------------------------------------------------------
# training instances and losses


@dataclass(frozen=True)
class TriggerBaselineInstance:
    sentence: Sentence
    labels: tuple[int, ...]
    positive: bool = True


@dataclass(frozen=True)
class TriggerPrimedInstance:
    sentence: Sentence
    prime_index: int
    span_labels: tuple[int, ...]
    type_label: int
    positive: bool


@dataclass(frozen=True)
class ArgsInstance:
    sentence: Sentence
    trigger: TokenSpan
    event_type: str
    labels: tuple[int, ...]
    positive: bool


@dataclass(frozen=True)
class RoleInstance:
    sentence: Sentence
    trigger: TokenSpan
    event_type: str
    role: str
    labels: tuple[int, ...]
    positive: bool


@dataclass(frozen=True)
class CandidateInstance:
    sentence: Sentence
    trigger: TokenSpan
    event_type: str
    candidates: tuple[EntityMention, ...]
    labels: tuple[int, ...]
    positive: bool


def _paint_spans(length: int, spans: list[tuple[TokenSpan, str]], typed: bool) -> list[str]:
    """BIO labels from spans; overlapping later spans are skipped."""
    labels = ["O"] * length
    for span, name in spans:
        if any(labels[i] != "O" for i in range(span.start, span.end)):
            continue
        labels[span.start] = f"B-{name}" if typed else "B"
        for i in range(span.start + 1, span.end):
            labels[i] = f"I-{name}" if typed else "I"
    return labels


def _matching_arguments(sentence: Sentence, trigger: TokenSpan, event_type: str):
    out = []
    for ev in sentence.events:
        if ev.trigger == trigger and ev.event_type == event_type:
            out.extend(ev.arguments)
    return out


def trigger_baseline_labels(model: Model, sentence: Sentence) -> tuple[int, ...]:
    space = model.typed_trigger_space
    spans = [(ev.trigger, ev.event_type) for ev in sentence.events]
    return tuple(space.index(l) for l in _paint_spans(len(sentence.tokens), spans, typed=True))


def trigger_primed_targets(model: Model, sentence: Sentence, prime_index: int):
    """(span labels, type label) for priming with token `prime_index`."""
    untyped = crf.untyped_bio()
    for ev in sentence.events:
        if ev.trigger.start <= prime_index < ev.trigger.end:
            labels = _paint_spans(len(sentence.tokens), [(ev.trigger, "")], typed=False)
            return (
                tuple(untyped.index(l) for l in labels),
                model.type_head_labels.index(ev.event_type),
            )
    return (tuple([untyped.index("O")] * len(sentence.tokens)), 0)


def args_labels(model: Model, sentence: Sentence, trigger: TokenSpan, event_type: str) -> tuple[int, ...]:
    space = crf.typed_bio(model.ontology.roles_for.get(event_type, ()))
    spans = list(_matching_arguments(sentence, trigger, event_type))
    return tuple(space.index(l) for l in _paint_spans(len(sentence.tokens), spans, typed=True))


def role_labels(model: Model, sentence: Sentence, trigger: TokenSpan, event_type: str, role: str) -> tuple[int, ...]:
    untyped = crf.untyped_bio()
    spans = [(sp, "") for sp, r in _matching_arguments(sentence, trigger, event_type) if r == role]
    return tuple(untyped.index(l) for l in _paint_spans(len(sentence.tokens), spans, typed=False))


def candidate_labels(model: Model, sentence: Sentence, trigger: TokenSpan, event_type: str,
                     candidates: tuple[EntityMention, ...]) -> tuple[int, ...]:
    space = model.candidate_space
    by_span: dict[TokenSpan, str] = {}
    for sp, role in _matching_arguments(sentence, trigger, event_type):
        by_span.setdefault(sp, role)
    return tuple(space.index(by_span.get(c.span, "NONE")) for c in candidates)


def loss(model: Model, instance) -> ad.Tensor:
    if model.kind == TRIGGER_BASELINE:
        logits = trigger_baseline_logits(model, instance.sentence)
        logp = ad.log_softmax(logits, axis=-1)
        n = len(instance.labels)
        picked = ad.take_flat(logp, [i * logp.shape[1] + l for i, l in enumerate(instance.labels)])
        return ad.scale(ad.sum_(picked), -1.0 / n)
    if model.kind == TRIGGER_PRIMED:
        emissions, type_logits = trigger_primed_forward(
            model, instance.sentence, instance.prime_index)
        table = model.transition_table("span", crf.untyped_bio())
        span_nll = crf.nll(emissions, table, list(instance.span_labels))
        type_logp = ad.log_softmax(type_logits, axis=-1)
        type_nll = ad.scale(ad.take_flat(type_logp, [instance.type_label]), -1.0)
        return ad.add(span_nll, ad.scale(ad.reshape(type_nll, ()), model.config.type_loss_weight))
    if model.kind in (ARGS_BASELINE, ARGS_TRIGGER_PRIMED):
        emissions, table, _ = args_emissions(
            model, instance.sentence, instance.trigger, instance.event_type)
        return crf.nll(emissions, table, list(instance.labels))
    if model.kind == ARGS_ROLE_PRIMED:
        emissions = role_primed_emissions(
            model, instance.sentence, instance.trigger, instance.event_type, instance.role)
        table = model.transition_table("role", crf.untyped_bio())
        return crf.nll(emissions, table, list(instance.labels))
    if model.kind == CANDIDATES:
        emissions = candidate_emissions(
            model, instance.sentence, instance.trigger, instance.event_type, instance.candidates)
        table = model.transition_table("cand")
        return crf.nll(emissions, table, list(instance.labels))
    raise ValueError(f"unknown model kind {model.kind!r}")


# ---------------------------------------------------------------------------
# decoding


def detect_triggers_baseline(model: Model, sentence: Sentence) -> list[TriggerPrediction]:
    space = model.typed_trigger_space
    with ad.no_grad():
        logits = trigger_baseline_logits(model, sentence)
        probs = ad.softmax(logits, axis=-1).values
    picks = np.argmax(logits.values, axis=1)
    labels = crf.repair_bio([space.labels[i] for i in picks])
    out = []
    for start, end, etype in crf.bio_spans(labels):
        score = float(np.mean([probs[i, picks[i]] for i in range(start, end)]))
        out.append(TriggerPrediction(span=TokenSpan(start, end), event_type=etype, score=score))
    return out


def detect_triggers_primed(model: Model, sentence: Sentence) -> list[TriggerPrediction]:
    best: dict[tuple[TokenSpan, str], float] = {}
    table = model.transition_table("span", crf.untyped_bio())
    for t in range(len(sentence.tokens)):
        with ad.no_grad():
            emissions, type_logits = trigger_primed_forward(model, sentence, t)
            type_probs = ad.softmax(type_logits, axis=-1).values
        type_idx = int(np.argmax(type_logits.values))
        if type_idx == 0:
            continue
        event_type = model.type_head_labels[type_idx]
        score = float(type_probs[type_idx])
        with ad.no_grad():
            path, _ = crf.viterbi(emissions, table)
        spans = crf.bio_spans([crf.untyped_bio().labels[i] for i in path])
        span = next((TokenSpan(s, e) for s, e, _ in spans if s <= t < e),
                    TokenSpan(t, t + 1))
        key = (span, event_type)
        if score > best.get(key, -math.inf):
            best[key] = score
    return [TriggerPrediction(span=sp, event_type=et, score=sc)
            for (sp, et), sc in sorted(best.items(), key=lambda kv: (kv[0][0], kv[0][1]))]


def _decode_args(model: Model, sentence: Sentence, trigger: TokenSpan, event_type: str):
    with ad.no_grad():
        emissions, table, space = args_emissions(model, sentence, trigger, event_type)
        path, score = crf.viterbi(emissions, table)
    labels = [space.labels[i] for i in path]
    return [
        ArgumentPrediction(trigger=trigger, event_type=event_type,
                           span=TokenSpan(s, e), role=role, score=float(score))
        for s, e, role in crf.bio_spans(labels)
    ]


def extract_args_baseline(model: Model, sentence: Sentence, trigger: TokenSpan,
                          event_type: str) -> list[ArgumentPrediction]:
    return _decode_args(model, sentence, trigger, event_type)


def extract_args_trigger_primed(model: Model, sentence: Sentence, trigger: TokenSpan,
                                event_type: str) -> list[ArgumentPrediction]:
    return _decode_args(model, sentence, trigger, event_type)


def extract_args_role_primed(model: Model, sentence: Sentence, trigger: TokenSpan,
                             event_type: str) -> list[ArgumentPrediction]:
    out = []
    untyped = crf.untyped_bio()
    table = model.transition_table("role", untyped)
    for role in model.ontology.roles_for.get(event_type, ()):
        with ad.no_grad():
            emissions = role_primed_emissions(model, sentence, trigger, event_type, role)
            path, score = crf.viterbi(emissions, table)
        for s, e, _ in crf.bio_spans([untyped.labels[i] for i in path]):
            out.append(ArgumentPrediction(
                trigger=trigger, event_type=event_type,
                span=TokenSpan(s, e), role=role, score=float(score)))
    return out


def classify_candidates(model: Model, sentence: Sentence, trigger: TokenSpan, event_type: str,
                        candidates: tuple[EntityMention, ...]) -> list[tuple[EntityMention, str]]:
    space = model.candidate_space
    with ad.no_grad():
        emissions = candidate_emissions(model, sentence, trigger, event_type, candidates)
        path, _ = crf.viterbi(emissions, model.transition_table("cand"))
    out = []
    for cand, label_idx in zip(candidates, path):
        role = space.labels[label_idx]
        if role != "NONE" and not model.ontology.is_legal(cand.entity_type, event_type, role):
            role = "NONE"
        out.append((cand, role))
    return out


def arguments_from_candidates(model: Model, sentence: Sentence, trigger: TokenSpan,
                              event_type: str) -> list[ArgumentPrediction]:
    if not sentence.entities:
        return []
    with ad.no_grad():
        emissions = candidate_emissions(model, sentence, trigger, event_type, sentence.entities)
    decided = classify_candidates(model, sentence, trigger, event_type, sentence.entities)
    out = []
    for i, (cand, role) in enumerate(decided):
        if role == "NONE":
            continue
        score = float(emissions.values[i, model.candidate_space.index(role)])
        out.append(ArgumentPrediction(trigger=trigger, event_type=event_type,
                                      span=cand.span, role=role, score=score))
    return out


def extract_arguments(model: Model, sentence: Sentence, trigger: TokenSpan,
                      event_type: str) -> list[ArgumentPrediction]:
    if model.kind in (ARGS_BASELINE, ARGS_TRIGGER_PRIMED):
        return _decode_args(model, sentence, trigger, event_type)
    if model.kind == ARGS_ROLE_PRIMED:
        return extract_args_role_primed(model, sentence, trigger, event_type)
    if model.kind == CANDIDATES:
        return arguments_from_candidates(model, sentence, trigger, event_type)
    raise ValueError(f"{model.kind!r} is not an argument model")


def detect_triggers(model: Model, sentence: Sentence) -> list[TriggerPrediction]:
    if model.kind == TRIGGER_BASELINE:
        return detect_triggers_baseline(model, sentence)
    if model.kind == TRIGGER_PRIMED:
        return detect_triggers_primed(model, sentence)
    raise ValueError(f"{model.kind!r} is not a trigger model")


def extract_events(trigger_model: Model | None, args_model: Model, sentence: Sentence,
                   gold_triggers: list[tuple[TokenSpan, str]] | None = None) -> list[EventMention]:
    if gold_triggers is not None:
        triggers = list(gold_triggers)
    else:
        if trigger_model is None:
            raise ValueError("need a trigger model or gold triggers")
        triggers = [(p.span, p.event_type) for p in detect_triggers(trigger_model, sentence)]
    events = []
    for span, etype in triggers:
        args = extract_arguments(args_model, sentence, span, etype)
        events.append(EventMention(
            trigger=span, event_type=etype,
            arguments=tuple((a.span, a.role) for a in args)))
    return events
