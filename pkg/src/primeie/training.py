"""Optimization: instance building, Adam, early stopping, multi-seed runs."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import models as M
from . import scoring
from .corpus import Corpus, Ontology
from .models import Model, ModelConfig
from .tokenizer import SubwordVocab


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    batch_size: int = 16
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    type_loss_weight: float = 1.0
    negative_downsample: bool = False
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    linear_decay: bool = False

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("moment decays must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.type_loss_weight < 0:
            raise ValueError("type_loss_weight must be non-negative")


@dataclass(frozen=True)
class TrainReport:
    epoch_losses: tuple[float, ...]
    dev_f1: tuple[float, ...]
    best_epoch: int
    wall_time: float

    def __post_init__(self):
        if self.epoch_losses and not 1 <= self.best_epoch <= len(self.epoch_losses):
            raise ValueError("best_epoch out of range")


def report_to_dict(report: TrainReport) -> dict:
    return {"epoch_losses": list(report.epoch_losses),
            "dev_f1": list(report.dev_f1),
            "best_epoch": report.best_epoch,
            "wall_time": report.wall_time}


# -- instance building --------------------------------------------------------

def _trigger_token_indices(sentence) -> set[int]:
    out = set()
    for event in sentence.events:
        out.update(range(event.trigger.start, event.trigger.end))
    return out


def _unique_gold_triggers(sentence):
    seen = []
    for event in sentence.events:
        key = (event.trigger, event.event_type)
        if key not in seen:
            seen.append(key)
    return seen


def build_instances(model: Model, corpus: Corpus, seed: int = 0) -> list:
    """One training instance list for the model's kind.

    Trigger models draw one instance per sentence (baseline) or per sampled
    prime token (primed, negatives at config.negative_prime_ratio per
    sentence).  Argument models draw one instance per gold trigger, per
    (trigger, allowed role) for the role-primed kind, and per trigger over
    the entity candidate sequence for the candidate kind.
    """
    kind = model.kind
    rng = np.random.default_rng([seed, 31])
    instances = []
    for sentence in corpus:
        if kind == M.TRIGGER_BASELINE:
            labels = M.trigger_baseline_labels(model, sentence)
            instances.append(M.TriggerBaselineInstance(
                sentence, labels, positive=bool(sentence.events)))
        elif kind == M.TRIGGER_PRIMED:
            positives = sorted(_trigger_token_indices(sentence))
            pool = [t for t in range(len(sentence.tokens)) if t not in positives]
            n_neg = min(len(pool),
                        int(round(model.config.negative_prime_ratio * len(positives))))
            chosen = sorted(rng.choice(len(pool), size=n_neg, replace=False)) \
                if n_neg else []
            for t in positives:
                span_labels, type_label = M.trigger_primed_targets(model, sentence, t)
                instances.append(M.TriggerPrimedInstance(
                    sentence, t, span_labels, type_label, positive=True))
            for i in chosen:
                t = pool[int(i)]
                span_labels, type_label = M.trigger_primed_targets(model, sentence, t)
                instances.append(M.TriggerPrimedInstance(
                    sentence, t, span_labels, type_label, positive=False))
        elif kind in (M.ARGS_BASELINE, M.ARGS_TRIGGER_PRIMED):
            for trigger, etype in _unique_gold_triggers(sentence):
                labels = M.args_labels(model, sentence, trigger, etype)
                positive = any(i != 0 for i in labels)
                instances.append(M.ArgsInstance(sentence, trigger, etype, labels, positive))
        elif kind == M.ARGS_ROLE_PRIMED:
            for trigger, etype in _unique_gold_triggers(sentence):
                for role in model.ontology.roles_for.get(etype, ()):
                    labels = M.role_labels(model, sentence, trigger, etype, role)
                    positive = any(i != 0 for i in labels)
                    instances.append(M.RoleInstance(
                        sentence, trigger, etype, role, labels, positive))
        elif kind == M.CANDIDATES:
            candidates = tuple(sorted(sentence.entities,
                                      key=lambda e: (e.span.start, e.span.end)))
            if not candidates:
                continue
            for trigger, etype in _unique_gold_triggers(sentence):
                labels = M.candidate_labels(model, sentence, trigger, etype, candidates)
                positive = any(i != 0 for i in labels)
                instances.append(M.CandidateInstance(
                    sentence, trigger, etype, candidates, labels, positive))
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    return instances


def downsample_negatives(instances: list, seed: int) -> list:
    """Keep all positives; sample negatives down to the positive count."""
    positives = [i for i, inst in enumerate(instances) if inst.positive]
    negatives = [i for i, inst in enumerate(instances) if not inst.positive]
    if len(negatives) <= len(positives):
        return list(instances)
    rng = np.random.default_rng([seed, 57])
    keep = rng.choice(len(negatives), size=len(positives), replace=False)
    kept = set(positives) | {negatives[int(i)] for i in keep}
    return [inst for i, inst in enumerate(instances) if i in kept]


# -- dev evaluation -----------------------------------------------------------

def decode_corpus(model: Model, corpus: Corpus) -> scoring.Predictions:
    """Decode every sentence; argument models run over the gold triggers."""
    events = {}
    for sentence in corpus:
        key = (sentence.doc_id, sentence.sent_id)
        if model.kind in (M.TRIGGER_BASELINE, M.TRIGGER_PRIMED):
            events[key] = tuple(
                scoring.PredictedEvent(trigger=p.span, event_type=p.event_type,
                                       score=p.score)
                for p in M.detect_triggers(model, sentence))
        else:
            decoded = []
            for trigger, etype in _unique_gold_triggers(sentence):
                args = M.extract_arguments(model, sentence, trigger, etype)
                decoded.append(scoring.PredictedEvent(
                    trigger=trigger, event_type=etype, score=1.0,
                    arguments=tuple(scoring.PredictedArgument(
                        span=p.span, role=p.role, score=p.score) for p in args)))
            events[key] = tuple(decoded)
    return scoring.Predictions(events)


def dev_f1(model: Model, corpus: Corpus) -> float:
    """Dev metric for early stopping: the model's own task F1.

    Trigger models score detected triggers; argument models score decoded
    arguments under gold triggers.
    """
    report = scoring.score(decode_corpus(model, corpus), corpus)
    if model.kind in (M.TRIGGER_BASELINE, M.TRIGGER_PRIMED):
        return report.trigger.f1
    return report.argument.f1


# -- optimization -------------------------------------------------------------

class _Adam:
    def __init__(self, params: dict, config: TrainConfig, total_steps: int):
        self.params = params
        self.config = config
        self.total_steps = total_steps
        self.step_count = 0
        self.m = {name: np.zeros_like(p.values) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.values) for name, p in params.items()}

    def step(self) -> None:
        c = self.config
        self.step_count += 1
        t = self.step_count
        lr = c.learning_rate
        if c.linear_decay:
            lr *= max(0.0, 1.0 - (t - 1) / self.total_steps)
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            self.m[name] = c.beta1 * self.m[name] + (1 - c.beta1) * g
            self.v[name] = c.beta2 * self.v[name] + (1 - c.beta2) * g * g
            m_hat = self.m[name] / (1 - c.beta1 ** t)
            v_hat = self.v[name] / (1 - c.beta2 ** t)
            p.values -= (lr * m_hat / (np.sqrt(v_hat) + c.epsilon)).astype(p.values.dtype)


def _batches(order: np.ndarray, batch_size: int):
    for i in range(0, len(order), batch_size):
        yield order[i:i + batch_size]


def train(kind: str, ontology: Ontology, vocab: SubwordVocab,
          train_corpus: Corpus, dev_corpus: Corpus, config: TrainConfig,
          model_config: ModelConfig | None = None) -> tuple[Model, TrainReport]:
    """Train one model; returns the best-dev checkpoint and a report."""
    start = time.perf_counter()
    model_config = model_config or ModelConfig()
    model_config = replace(model_config, type_loss_weight=config.type_loss_weight)
    model = M.init_model(kind, ontology, vocab, model_config, config.seed)

    instances = build_instances(model, train_corpus, seed=config.seed)
    if config.negative_downsample:
        instances = downsample_negatives(instances, config.seed)
    if not instances:
        raise TrainingError(f"no training instances for kind {kind!r}")

    n_batches = (len(instances) + config.batch_size - 1) // config.batch_size
    optimizer = _Adam(model.params, config, total_steps=config.max_epochs * n_batches)
    shuffle_rng = np.random.default_rng([config.seed, 1000003])

    epoch_losses: list[float] = []
    dev_scores: list[float] = []
    best_f1 = -1.0
    best_epoch = 0
    best_values: dict[str, np.ndarray] = {}
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(instances))
        total_loss = 0.0
        for batch_no, batch in enumerate(_batches(order, config.batch_size), start=1):
            losses = [M.loss(model, instances[int(i)]) for i in batch]
            batch_loss = losses[0]
            for extra in losses[1:]:
                batch_loss = ad.add(batch_loss, extra)
            batch_loss = ad.scale(batch_loss, 1.0 / len(losses))
            value = batch_loss.item()
            if not np.isfinite(value):
                raise TrainingError(
                    f"loss diverged at epoch {epoch} batch {batch_no}")
            for p in model.params.values():
                p.zero_grad()
            ad.backward(batch_loss)
            optimizer.step()
            total_loss += value * len(losses)
        epoch_losses.append(total_loss / len(instances))

        f1 = dev_f1(model, dev_corpus)
        dev_scores.append(f1)
        if f1 > best_f1:
            best_f1 = f1
            best_epoch = epoch
            best_values = {name: p.values.copy() for name, p in model.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    for name, p in model.params.items():
        p.values = best_values[name]
    report = TrainReport(epoch_losses=tuple(epoch_losses),
                         dev_f1=tuple(dev_scores),
                         best_epoch=best_epoch,
                         wall_time=time.perf_counter() - start)
    return model, report


def _train_worker(args):
    kind, ontology, vocab, train_corpus, dev_corpus, config, model_config = args
    model, report = train(kind, ontology, vocab, train_corpus, dev_corpus,
                          config, model_config)
    return {name: p.values for name, p in model.params.items()}, report


def train_multiseed(kind: str, ontology: Ontology, vocab: SubwordVocab,
                    train_corpus: Corpus, dev_corpus: Corpus, config: TrainConfig,
                    seeds: list[int], model_config: ModelConfig | None = None,
                    jobs: int = 1) -> list[tuple[Model, TrainReport]]:
    """Independent runs differing only in seed; result order matches seeds."""
    if not seeds:
        raise ValueError("train_multiseed needs at least one seed")
    tasks = [(kind, ontology, vocab, train_corpus, dev_corpus,
              replace(config, seed=s), model_config) for s in seeds]
    results = []
    if jobs > 1 and len(seeds) > 1:
        shape_config = replace(model_config or ModelConfig(),
                               type_loss_weight=config.type_loss_weight)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for values, report in pool.map(_train_worker, tasks):
                model = M.init_model(kind, ontology, vocab, shape_config, 0)
                for name, p in model.params.items():
                    p.values = values[name]
                results.append((model, report))
    else:
        for task in tasks:
            results.append(train(*task))
    return results
