"""Evaluation: exact-match P/R/F1, seed aggregation, union decoding, output diffs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .corpus import Corpus, CorpusError, TokenSpan

TRIGGER_LEVEL = "trigger"
ARGUMENT_LEVEL = "argument"
LEVELS = (TRIGGER_LEVEL, ARGUMENT_LEVEL)


@dataclass(frozen=True)
class PredictedArgument:
    span: TokenSpan
    role: str
    score: float = 0.0


@dataclass(frozen=True)
class PredictedEvent:
    trigger: TokenSpan
    event_type: str
    arguments: tuple[PredictedArgument, ...] = ()
    score: float = 0.0


@dataclass
class Predictions:
    """Decoded events keyed by (doc_id, sent_id), one entry per corpus sentence."""

    events: dict[tuple[str, str], tuple[PredictedEvent, ...]]

    @staticmethod
    def empty(corpus: Corpus) -> "Predictions":
        return Predictions({(s.doc_id, s.sent_id): () for s in corpus})

    def keys(self):
        return self.events.keys()

    def total_events(self) -> int:
        return sum(len(v) for v in self.events.values())


def predictions_to_lines(pred: Predictions) -> list[str]:
    lines = []
    for (doc_id, sent_id), events in sorted(pred.events.items()):
        row = {
            "doc_id": doc_id,
            "sent_id": sent_id,
            "events": [
                {
                    "trigger": {"start": ev.trigger.start, "end": ev.trigger.end},
                    "event_type": ev.event_type,
                    "score": ev.score,
                    "arguments": [
                        {"start": a.span.start, "end": a.span.end,
                         "role": a.role, "score": a.score}
                        for a in ev.arguments
                    ],
                }
                for ev in events
            ],
        }
        lines.append(json.dumps(row, sort_keys=True))
    return lines


def save_predictions(pred: Predictions, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in predictions_to_lines(pred):
            fh.write(line + "\n")


def load_predictions(path) -> Predictions:
    events: dict[tuple[str, str], tuple[PredictedEvent, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                key = (row["doc_id"], row["sent_id"])
                parsed = tuple(
                    PredictedEvent(
                        trigger=TokenSpan(ev["trigger"]["start"], ev["trigger"]["end"]),
                        event_type=ev["event_type"],
                        score=float(ev.get("score", 0.0)),
                        arguments=tuple(
                            PredictedArgument(span=TokenSpan(a["start"], a["end"]),
                                              role=a["role"],
                                              score=float(a.get("score", 0.0)))
                            for a in ev.get("arguments", ())
                        ),
                    )
                    for ev in row["events"]
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad prediction row: {exc}") from exc
            if key in events:
                raise CorpusError(f"{path}:{lineno}: duplicate sentence id {key}")
            events[key] = parsed
    return Predictions(events)


# -- match items --------------------------------------------------------------
# Trigger identity: (span, event type).  Argument identity: (event type, span,
# role); the owning trigger's span does not participate in argument matching.

def _gold_items(sentence, level):
    if level == TRIGGER_LEVEL:
        return [(ev.trigger, ev.event_type) for ev in sentence.events]
    return [(ev.event_type, span, role)
            for ev in sentence.events for span, role in ev.arguments]


def _pred_items(events, level):
    if level == TRIGGER_LEVEL:
        return [(ev.trigger, ev.event_type) for ev in events]
    return [(ev.event_type, a.span, a.role) for ev in events for a in ev.arguments]


def _item_span(item, level) -> TokenSpan:
    return item[0] if level == TRIGGER_LEVEL else item[1]


def _item_type(item, level) -> str:
    return item[1] if level == TRIGGER_LEVEL else item[0]


def _overlaps(a, b, level) -> bool:
    if _item_type(a, level) != _item_type(b, level):
        return False
    sa, sb = _item_span(a, level), _item_span(b, level)
    return sa.start < sb.end and sb.start < sa.end


def _greedy_match(pred_items, gold_items):
    """Match predictions to gold greedily in order; each gold item used once.

    Returns (matched pred indices, matched gold indices).
    """
    used = [False] * len(gold_items)
    pred_hits, gold_hits = set(), set()
    for i, item in enumerate(pred_items):
        for j, gold in enumerate(gold_items):
            if not used[j] and gold == item:
                used[j] = True
                pred_hits.add(i)
                gold_hits.add(j)
                break
    return pred_hits, gold_hits


# -- P/R/F1 -------------------------------------------------------------------

@dataclass(frozen=True)
class LevelScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def make_level_score(tp: int, fp: int, fn: int) -> LevelScore:
    # 0/0 gives 1 for P and R only when both prediction and gold sets are
    # empty; F1 keeps the 0/0 -> 0 convention.
    both_empty = tp + fp == 0 and tp + fn == 0
    precision = 1.0 if both_empty else (tp / (tp + fp) if tp + fp else 0.0)
    recall = 1.0 if both_empty else (tp / (tp + fn) if tp + fn else 0.0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return LevelScore(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class ScoreReport:
    trigger: LevelScore
    argument: LevelScore

    def level(self, level: str) -> LevelScore:
        if level not in LEVELS:
            raise ValueError(f"unknown level {level!r}")
        return self.trigger if level == TRIGGER_LEVEL else self.argument


def _check_keys(pred: Predictions, gold: Corpus) -> None:
    gold_keys = {(s.doc_id, s.sent_id) for s in gold}
    if set(pred.keys()) != gold_keys:
        extra = sorted(set(pred.keys()) - gold_keys)[:3]
        missing = sorted(gold_keys - set(pred.keys()))[:3]
        raise ValueError(
            f"prediction sentence ids do not match the corpus "
            f"(extra={extra}, missing={missing})")


def _score_level(pred: Predictions, gold: Corpus, level: str) -> LevelScore:
    tp = fp = fn = 0
    for sentence in gold:
        pred_items = _pred_items(pred.events[(sentence.doc_id, sentence.sent_id)], level)
        gold_items = _gold_items(sentence, level)
        pred_hits, gold_hits = _greedy_match(pred_items, gold_items)
        tp += len(pred_hits)
        fp += len(pred_items) - len(pred_hits)
        fn += len(gold_items) - len(gold_hits)
    return make_level_score(tp, fp, fn)


def score(pred: Predictions, gold: Corpus) -> ScoreReport:
    """Exact-match scores at both levels against a reference corpus."""
    _check_keys(pred, gold)
    return ScoreReport(trigger=_score_level(pred, gold, TRIGGER_LEVEL),
                       argument=_score_level(pred, gold, ARGUMENT_LEVEL))


# -- seed aggregation ---------------------------------------------------------

@dataclass(frozen=True)
class LevelStats:
    precision: float
    precision_stdev: float
    recall: float
    recall_stdev: float
    f1: float
    f1_stdev: float


@dataclass(frozen=True)
class AggregateReport:
    trigger: LevelStats
    argument: LevelStats
    n_runs: int

    def level(self, level: str) -> LevelStats:
        if level not in LEVELS:
            raise ValueError(f"unknown level {level!r}")
        return self.trigger if level == TRIGGER_LEVEL else self.argument


def _mean_stdev(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def average_seeds(reports: list[ScoreReport]) -> AggregateReport:
    """Mean and sample standard deviation of P/R/F1 across runs."""
    if not reports:
        raise ValueError("average_seeds needs at least one report")
    stats = {}
    for level in LEVELS:
        fields = {}
        for metric in ("precision", "recall", "f1"):
            mean, stdev = _mean_stdev(
                [getattr(r.level(level), metric) for r in reports])
            fields[metric] = mean
            fields[f"{metric}_stdev"] = stdev
        stats[level] = LevelStats(**fields)
    return AggregateReport(trigger=stats[TRIGGER_LEVEL],
                           argument=stats[ARGUMENT_LEVEL],
                           n_runs=len(reports))


# -- union of seeds -----------------------------------------------------------

def union_decode(runs: list[Predictions]) -> Predictions:
    """Merge per-seed predictions by set union.

    Events merge on (sentence, trigger span, event type); arguments on
    (span, role).  Duplicates keep the best score.
    """
    if not runs:
        raise ValueError("union_decode needs at least one prediction set")
    keys = set(runs[0].keys())
    for other in runs[1:]:
        if set(other.keys()) != keys:
            raise ValueError("prediction sets cover different sentences")
    merged: dict[tuple[str, str], tuple[PredictedEvent, ...]] = {}
    for key in keys:
        events: dict[tuple, dict] = {}
        order: list[tuple] = []
        for run in runs:
            for ev in run.events[key]:
                ekey = (ev.trigger, ev.event_type)
                if ekey not in events:
                    events[ekey] = {"score": ev.score, "args": {}, "arg_order": []}
                    order.append(ekey)
                entry = events[ekey]
                entry["score"] = max(entry["score"], ev.score)
                for a in ev.arguments:
                    akey = (a.span, a.role)
                    if akey not in entry["args"]:
                        entry["args"][akey] = a.score
                        entry["arg_order"].append(akey)
                    else:
                        entry["args"][akey] = max(entry["args"][akey], a.score)
        merged[key] = tuple(
            PredictedEvent(
                trigger=ekey[0], event_type=ekey[1], score=events[ekey]["score"],
                arguments=tuple(
                    PredictedArgument(span=span, role=role,
                                      score=events[ekey]["args"][(span, role)])
                    for span, role in events[ekey]["arg_order"]),
            )
            for ekey in order
        )
    return Predictions(merged)


# -- two-system diff ----------------------------------------------------------

DIFF_CATEGORIES = ("both_correct", "only_correct", "substitution",
                   "similar", "deletion", "insertion")


@dataclass(frozen=True)
class SystemDiff:
    both_correct: int
    only_correct: int
    substitution: int
    similar: int
    deletion: int
    insertion: int

    def total(self) -> int:
        return sum(getattr(self, f) for f in DIFF_CATEGORIES)


@dataclass(frozen=True)
class DiffReport:
    level: str
    a: SystemDiff
    b: SystemDiff


def _diff_one_side(pred_items, other_items, gold_items, gold_hits_self,
                   gold_hits_other, pred_hits, level):
    """Categorize one system's items for one sentence.

    Every predicted item and every gold item lands in exactly one category.
    A gold item covered by an inexact overlapping prediction counts as a
    substitution on the gold side, so per-system category counts sum to
    |gold| + |pred| - |matches|.
    """
    counts = dict.fromkeys(DIFF_CATEGORIES, 0)
    for j in range(len(gold_items)):
        if j in gold_hits_self:
            if j in gold_hits_other:
                counts["both_correct"] += 1
            else:
                counts["only_correct"] += 1
        elif any(_overlaps(p, gold_items[j], level) for p in pred_items):
            counts["substitution"] += 1
        else:
            counts["deletion"] += 1
    for i, item in enumerate(pred_items):
        if i in pred_hits:
            continue
        if any(_overlaps(item, g, level) for g in gold_items):
            counts["substitution"] += 1
        elif any(_overlaps(item, o, level) for o in other_items):
            counts["similar"] += 1
        else:
            counts["insertion"] += 1
    return counts


def diff_outputs(pred_a: Predictions, pred_b: Predictions, gold: Corpus,
                 level: str) -> DiffReport:
    """Contrast two systems' outputs against gold at one level."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    _check_keys(pred_a, gold)
    _check_keys(pred_b, gold)
    totals_a = dict.fromkeys(DIFF_CATEGORIES, 0)
    totals_b = dict.fromkeys(DIFF_CATEGORIES, 0)
    for sentence in gold:
        key = (sentence.doc_id, sentence.sent_id)
        gold_items = _gold_items(sentence, level)
        items_a = _pred_items(pred_a.events[key], level)
        items_b = _pred_items(pred_b.events[key], level)
        hits_a, gold_a = _greedy_match(items_a, gold_items)
        hits_b, gold_b = _greedy_match(items_b, gold_items)
        for name, n in _diff_one_side(items_a, items_b, gold_items,
                                      gold_a, gold_b, hits_a, level).items():
            totals_a[name] += n
        for name, n in _diff_one_side(items_b, items_a, gold_items,
                                      gold_b, gold_a, hits_b, level).items():
            totals_b[name] += n
    return DiffReport(level=level, a=SystemDiff(**totals_a), b=SystemDiff(**totals_b))


# -- report emission ----------------------------------------------------------

def score_to_dict(report: ScoreReport) -> dict:
    out = {}
    for level in LEVELS:
        s = report.level(level)
        out[level] = {"tp": s.tp, "fp": s.fp, "fn": s.fn,
                      "precision": s.precision, "recall": s.recall, "f1": s.f1}
    return out


def aggregate_to_dict(report: AggregateReport) -> dict:
    out = {"n_runs": report.n_runs}
    for level in LEVELS:
        s = report.level(level)
        out[level] = {
            "precision": s.precision, "precision_stdev": s.precision_stdev,
            "recall": s.recall, "recall_stdev": s.recall_stdev,
            "f1": s.f1, "f1_stdev": s.f1_stdev,
        }
    return out


def diff_to_dict(report: DiffReport) -> dict:
    def side(d: SystemDiff, name: str) -> dict:
        out = {}
        for f in DIFF_CATEGORIES:
            key = f"{name}_only_correct" if f == "only_correct" else f
            out[key] = getattr(d, f)
        return out

    return {"level": report.level, "a": side(report.a, "a"), "b": side(report.b, "b")}


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [headers] + rows) for i in range(len(headers))]
    def fmt(row):
        return "  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def format_score_report(report: ScoreReport) -> str:
    rows = []
    for level in LEVELS:
        s = report.level(level)
        rows.append([level, s.tp, s.fp, s.fn,
                     f"{s.precision:.4f}", f"{s.recall:.4f}", f"{s.f1:.4f}"])
    return _table(["level", "tp", "fp", "fn", "precision", "recall", "f1"], rows)


def format_aggregate_report(report: AggregateReport) -> str:
    rows = []
    for level in LEVELS:
        s = report.level(level)
        rows.append([level,
                     f"{s.precision:.4f}±{s.precision_stdev:.4f}",
                     f"{s.recall:.4f}±{s.recall_stdev:.4f}",
                     f"{s.f1:.4f}±{s.f1_stdev:.4f}"])
    return _table(["level", "precision", "recall", "f1"],
                  rows) + f"\n(n={report.n_runs} runs)"


def format_diff_report(report: DiffReport) -> str:
    rows = []
    for name, side in (("a", report.a), ("b", report.b)):
        rows.append([name] + [getattr(side, f) for f in DIFF_CATEGORIES])
    headers = ["system"] + list(DIFF_CATEGORIES)
    return _table(headers, rows)
