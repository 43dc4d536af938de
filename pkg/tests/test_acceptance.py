"""Binding end-to-end gates for the package.

Ten checks, each printing one PASS/FAIL line with its measured numbers.
The cheap ones are exact oracles (CRF enumeration, finite-difference
gradients, byte-level prime construction, hand-computed scores); the
expensive ones are small but real training runs probing learnability,
trigger-conditioning necessity, low-resource behavior, zero-shot
transfer through the anchor lexicon, decode legality, and experiment
determinism.  The thresholds are the contract: do not loosen them.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

import primeie.experiments as E
import primeie.models as M
import primeie.syngen as syngen
import primeie.training as training
from primeie import checkpoint
from primeie.corpus import (
    Corpus,
    EventMention,
    Ontology,
    Sentence,
    TokenSpan,
    load_corpus,
    load_ontology,
)
from primeie.priming import prime_trigger, prime_trigger_role, reserved_pieces
from primeie.scoring import (
    PredictedArgument,
    PredictedEvent,
    Predictions,
    diff_outputs,
    score,
    union_decode,
)
from primeie.tokenizer import build_vocab, detokenize, load_vocab
from primeie.training import TrainConfig


def announce(capsys, number: int, ok: bool, detail: str) -> None:
    """One uncaptured line per gate so a full run reads as a checklist."""
    with capsys.disabled():
        print(f"[acceptance {number:2d}] {'PASS' if ok else 'FAIL'} - {detail}",
              flush=True)


# -- 1: exact sequence-model oracle -------------------------------------------

def test_crf_matches_exhaustive_enumeration(capsys):
    t0 = time.perf_counter()
    worst, mismatches, cases = E.crf_check(trials=200, max_length=6,
                                           max_labels=5, seed=0)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and mismatches == 0 and dt < 10.0
    announce(capsys, 1, ok,
             f"log-partition worst rel err {worst:.2e}, {mismatches} viterbi "
             f"mismatches over {cases} cases, {dt:.1f}s")
    assert worst <= 1e-6
    assert mismatches == 0
    assert dt < 10.0


# -- 2: finite-difference audit of every model kind ---------------------------

def test_every_model_kind_passes_gradient_audit(capsys):
    coords_per_param = 5
    ontology, corpus, vocab = E._grad_check_world()
    min_coords = None
    for kind in M.KINDS:
        model = M.init_model(kind, ontology, vocab, E.GRAD_CHECK_CONFIG, seed=0)
        n = sum(min(coords_per_param, t.values.size) for t in model.parameters())
        min_coords = n if min_coords is None else min(min_coords, n)
    t0 = time.perf_counter()
    worst = {}
    for bits in (32, 64):
        results = E.gradient_audit(bits=bits, coords_per_param=coords_per_param,
                                   seed=0)
        worst[bits] = max(results.values())
    dt = time.perf_counter() - t0
    ok = (worst[32] <= E.GRAD_TOLERANCE[32] and worst[64] <= E.GRAD_TOLERANCE[64]
          and min_coords >= 100 and dt < 60.0)
    announce(capsys, 2, ok,
             f"worst rel err {worst[32]:.2e} @32-bit, {worst[64]:.2e} @64-bit, "
             f">={min_coords} coords/model, {dt:.1f}s")
    assert worst[32] <= E.GRAD_TOLERANCE[32]
    assert worst[64] <= E.GRAD_TOLERANCE[64]
    assert min_coords >= 100
    assert dt < 60.0


# -- 3: byte-exact primed inputs -----------------------------------------------

def test_primed_inputs_detokenize_to_reference_strings(capsys):
    ontology = Ontology(
        ontology_id="hand-check",
        event_types=("justice",),
        roles_for={"justice": ("defendant",)},
        role_code={"defendant": "13"},
        entity_types=("person",),
        legal_triples=frozenset({("person", "justice", "defendant")}),
    )
    words = "crowds protested the conviction of Ildar Dadin".split()
    sentence = Sentence(doc_id="d0", sent_id="s0", language="en",
                        tokens=tuple(words))
    vocab = build_vocab(Corpus(sentences=(sentence,)), target_size=len(words),
                        reserved=reserved_pieces(ontology))

    got_trigger = detokenize(
        vocab, list(prime_trigger(vocab, ["protested"], sentence).piece_ids))
    want_trigger = ("[CLS] protested [SEP] "
                    "crowds protested the conviction of Ildar Dadin [SEP]")
    got_role = detokenize(
        vocab,
        list(prime_trigger_role(vocab, ["conviction"], "defendant", ontology,
                                sentence).piece_ids))
    want_role = ("[CLS] conviction ; 13 [SEP] "
                 "crowds protested the conviction of Ildar Dadin [SEP]")
    ok = got_trigger == want_trigger and got_role == want_role
    announce(capsys, 3, ok,
             "trigger and trigger+role primes detokenize byte-exactly")
    assert got_trigger == want_trigger
    assert got_role == want_role


# -- 4: scorer hand cases and set invariants -----------------------------------

def _one_sentence_gold(n_tokens: int, events: tuple[EventMention, ...]) -> Corpus:
    sent = Sentence(doc_id="d", sent_id="s", language="x",
                    tokens=tuple(f"w{i}" for i in range(n_tokens)),
                    events=events)
    return Corpus(sentences=(sent,))


def _random_events(rng, n_tokens: int, event_types, roles,
                   unique_items: bool = False) -> tuple:
    """Random event sets; with unique_items, no (type, span, role) repeats.

    Gold annotation states each item once, so gold draws dedupe; prediction
    draws keep duplicates to exercise the merge paths.
    """
    events = []
    seen_triggers: set = set()
    seen_args: set = set()
    for _ in range(int(rng.integers(0, 4))):
        t_start = int(rng.integers(0, n_tokens))
        trigger = TokenSpan(t_start, t_start + 1)
        event_type = str(rng.choice(event_types))
        if unique_items:
            if (trigger, event_type) in seen_triggers:
                continue
            seen_triggers.add((trigger, event_type))
        args = []
        for _ in range(int(rng.integers(0, 4))):
            a_start = int(rng.integers(0, n_tokens))
            span = TokenSpan(a_start, a_start + int(rng.integers(1, 3)))
            if span.end > n_tokens:
                continue
            role = str(rng.choice(roles))
            if unique_items:
                if (event_type, span, role) in seen_args:
                    continue
                seen_args.add((event_type, span, role))
            args.append((span, role))
        events.append(EventMention(trigger=trigger, event_type=event_type,
                                   arguments=tuple(args)))
    return tuple(events)


def _as_predictions(gold: Corpus, events: tuple) -> Predictions:
    key = (gold.sentences[0].doc_id, gold.sentences[0].sent_id)
    return Predictions({key: tuple(
        PredictedEvent(trigger=ev.trigger, event_type=ev.event_type,
                       arguments=tuple(PredictedArgument(span=s, role=r)
                                       for s, r in ev.arguments))
        for ev in events)})


def test_scorer_hand_case_and_set_invariants(capsys):
    # Hand case: gold has four arguments, the prediction recovers one of
    # them plus one spurious span: P=1/2, R=1/4, F1=1/3.
    gold_event = EventMention(
        trigger=TokenSpan(4, 5), event_type="e",
        arguments=(
            (TokenSpan(0, 1), "r1"), (TokenSpan(1, 2), "r2"),
            (TokenSpan(2, 3), "r3"), (TokenSpan(3, 4), "r4"),
        ))
    gold = _one_sentence_gold(10, (gold_event,))
    pred = _as_predictions(gold, (EventMention(
        trigger=TokenSpan(4, 5), event_type="e",
        arguments=((TokenSpan(0, 1), "r1"), (TokenSpan(8, 9), "r1"))),))
    got = score(pred, gold).argument
    hand_ok = (math.isclose(got.precision, 0.5)
               and math.isclose(got.recall, 0.25)
               and math.isclose(got.f1, 1.0 / 3.0))

    # Random prediction sets: the union of runs never loses recall, and
    # the diff categories partition |gold| + |pred| - |matches| per side.
    rng = np.random.default_rng(42)
    event_types = ("e1", "e2")
    roles = ("r1", "r2", "r3")
    union_violations = 0
    partition_violations = 0
    trials = 1000
    for _ in range(trials):
        n_tokens = int(rng.integers(4, 12))
        gold = _one_sentence_gold(
            n_tokens,
            _random_events(rng, n_tokens, event_types, roles, unique_items=True))
        runs = [
            _as_predictions(
                gold, _random_events(rng, n_tokens, event_types, roles))
            for _ in range(3)
        ]
        merged = union_decode(runs)
        for level in ("trigger", "argument"):
            member = [score(r, gold).level(level) for r in runs]
            pooled = score(merged, gold).level(level)
            if pooled.tp < max(m.tp for m in member):
                union_violations += 1
            # the recall ratio only tracks retrieval when gold is non-empty;
            # empty gold scores 1.0 for empty outputs by the 0/0 convention
            if pooled.tp + pooled.fn > 0:
                if pooled.recall < max(m.recall for m in member) - 1e-12:
                    union_violations += 1
            diff = diff_outputs(runs[0], runs[1], gold, level)
            for side, run in ((diff.a, runs[0]), (diff.b, runs[1])):
                s = score(run, gold).level(level)
                want = (s.tp + s.fn) + (s.tp + s.fp) - s.tp
                if side.total() != want:
                    partition_violations += 1
    ok = hand_ok and union_violations == 0 and partition_violations == 0
    announce(capsys, 4, ok,
             f"hand case P={got.precision:.2f} R={got.recall:.2f} "
             f"F1={got.f1:.4f}; {union_violations} union and "
             f"{partition_violations} partition violations in {trials} trials")
    assert hand_ok
    assert union_violations == 0
    assert partition_violations == 0


# -- 5: learnability of the trigger-primed argument model ----------------------

LEARNABILITY_TRAIN = TrainConfig(learning_rate=1e-3, batch_size=16,
                                 max_epochs=50, patience=5, seed=0)


@pytest.fixture(scope="session")
def learnability_run():
    ontology, grammar = E.default_world(syngen.SIMPLE)
    train_c = syngen.generate_corpus(grammar, ontology, n=4000, seed=10)
    dev_c = syngen.generate_corpus(grammar, ontology, n=500, seed=11)
    test_c = syngen.generate_corpus(grammar, ontology, n=500, seed=12)
    vocab = build_vocab(train_c, target_size=400,
                        reserved=reserved_pieces(ontology))
    t0 = time.perf_counter()
    model, report = training.train(M.ARGS_TRIGGER_PRIMED, ontology, vocab,
                                   train_c, dev_c, LEARNABILITY_TRAIN)
    dt = time.perf_counter() - t0
    f1 = score(training.decode_corpus(model, test_c), test_c).argument.f1
    return f1, len(report.epoch_losses), dt


def test_trigger_primed_arguments_are_learnable(capsys, learnability_run):
    f1, epochs, dt = learnability_run
    ok = f1 >= 0.90 and epochs <= 50 and dt < 900.0
    announce(capsys, 5, ok,
             f"argument F1 {f1:.4f} after {epochs} epochs in {dt:.0f}s "
             f"(4000 train sentences)")
    assert f1 >= 0.90
    assert epochs <= 50
    assert dt < 900.0


# -- 6: trigger conditioning is necessary, priming supplies it -----------------

ABLATION_TRAIN = TrainConfig(learning_rate=1e-3, max_epochs=10, patience=3,
                             seed=0)
ABLATION_SEEDS = (1, 2, 3, 4, 5)


@pytest.fixture(scope="session")
def ablation_runs():
    ontology = syngen.two_event_ontology()
    grammar = syngen.two_event_grammar()
    train_c = syngen.generate_corpus(grammar, ontology, n=600, seed=20,
                                     mode=syngen.TWO_EVENT)
    dev_c = syngen.generate_corpus(grammar, ontology, n=150, seed=21,
                                   mode=syngen.TWO_EVENT)
    test_c = syngen.generate_corpus(grammar, ontology, n=200, seed=22,
                                    mode=syngen.TWO_EVENT)
    vocab = build_vocab(train_c, target_size=400,
                        reserved=reserved_pieces(ontology))
    blind_config = dataclasses.replace(M.ModelConfig(), use_trigger_vector=False)
    scores = {"ablated": [], "role-primed": []}
    for seed in ABLATION_SEEDS:
        cfg = dataclasses.replace(ABLATION_TRAIN, seed=seed)
        for name, kind, model_cfg in (
            ("ablated", M.ARGS_BASELINE, blind_config),
            ("role-primed", M.ARGS_ROLE_PRIMED, M.ModelConfig()),
        ):
            model, _ = training.train(kind, ontology, vocab, train_c, dev_c,
                                      cfg, model_cfg)
            f1 = score(training.decode_corpus(model, test_c), test_c).argument.f1
            scores[name].append(f1)
    return {k: sum(v) / len(v) for k, v in scores.items()}


def test_unprimed_model_cannot_attach_arguments_to_the_right_event(
        capsys, ablation_runs):
    ablated = ablation_runs["ablated"]
    primed = ablation_runs["role-primed"]
    ok = ablated <= 0.60 and primed >= 0.85
    announce(capsys, 6, ok,
             f"two-clause corpus, {len(ABLATION_SEEDS)}-seed mean argument F1: "
             f"ablated {ablated:.3f} (need <=0.60), role-primed {primed:.3f} "
             f"(need >=0.85)")
    assert ablated <= 0.60
    assert primed >= 0.85


# -- 7 + 8: the low-resource and transfer experiment ---------------------------

SWEEP_FRACTIONS = (0.2, 1.0)


@pytest.fixture(scope="session")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cfg = E.ExperimentConfig(out_dir=str(out), fractions=SWEEP_FRACTIONS)
    t0 = time.perf_counter()
    csv_path = E.run_experiment(cfg)
    dt = time.perf_counter() - t0
    return cfg, csv_path, dt


def _mean_f1(csv_path, system: str, pair: str, fraction: float) -> float:
    values = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if (row["system"] == system and row["language_pair"] == pair
                    and float(row["fraction"]) == fraction
                    and row["level"] == "argument"):
                values.append(float(row["f1"]))
    assert values, f"no rows for {system}/{pair}/f={fraction}"
    return sum(values) / len(values)


def test_priming_gap_is_widest_in_low_resource(capsys, sweep):
    cfg, csv_path, dt = sweep
    base_02 = _mean_f1(csv_path, "baseline", E.PAIR_IN_LANGUAGE, 0.2)
    prime_02 = _mean_f1(csv_path, "primed", E.PAIR_IN_LANGUAGE, 0.2)
    base_10 = _mean_f1(csv_path, "baseline", E.PAIR_IN_LANGUAGE, 1.0)
    prime_10 = _mean_f1(csv_path, "primed", E.PAIR_IN_LANGUAGE, 1.0)
    gap_02 = prime_02 - base_02
    gap_10 = prime_10 - base_10
    ok = prime_02 > base_02 and gap_02 >= gap_10 - 0.02 and dt < 5400.0
    announce(capsys, 7, ok,
             f"fraction 0.2: primed {prime_02:.3f} vs baseline {base_02:.3f} "
             f"(gap {gap_02:+.3f}); fraction 1.0 gap {gap_10:+.3f}; "
             f"sweep took {dt / 60:.1f} min")
    assert prime_02 > base_02
    assert gap_02 >= gap_10 - 0.02
    assert dt < 5400.0


def test_anchored_transfer_beats_zero_anchor_control(capsys, sweep):
    cfg, csv_path, _ = sweep
    data_dir = os.path.join(cfg.out_dir, "data")
    ontology = load_ontology(os.path.join(data_dir, "ontology.json"))
    vocab = load_vocab(os.path.join(data_dir, "vocab.json"))
    grammar = syngen.load_grammar(os.path.join(data_dir, "grammar.json"))
    test_c = load_corpus(os.path.join(data_dir, "test.jsonl"), ontology)
    control_c = syngen.translate_corpus(
        test_c, syngen.with_lexicon(grammar, anchor_fraction=0.0))

    anchored, control = {}, {}
    for system, _kind in cfg.systems:
        anchored[system] = _mean_f1(csv_path, system, E.PAIR_TRANSLATED, 1.0)
        floors = []
        for seed in cfg.seeds:
            run_dir = os.path.join(cfg.out_dir, "runs",
                                   E.run_name(system, 1.0, seed))
            model = checkpoint.load_model(
                os.path.join(run_dir, "model.json"), ontology, vocab)
            pred = training.decode_corpus(model, control_c)
            floors.append(score(pred, control_c).argument.f1)
        control[system] = sum(floors) / len(floors)

    lifts = {s: anchored[s] - control[s] for s in anchored}
    ok = (all(lift >= 0.2 for lift in lifts.values())
          and anchored["primed"] >= anchored["baseline"])
    announce(capsys, 8, ok,
             "translated-test argument F1 (5-seed means): "
             + "; ".join(f"{s} {anchored[s]:.3f} vs control {control[s]:.3f} "
                         f"(lift {lifts[s]:+.3f})" for s in anchored))
    for system, lift in lifts.items():
        assert lift >= 0.2, f"{system} lift {lift:.3f} below 0.2"
    assert anchored["primed"] >= anchored["baseline"]


# -- 9: decode legality ---------------------------------------------------------

def test_candidate_decodes_never_emit_illegal_triples(capsys):
    ontology, grammar = E.default_world(syngen.SIMPLE)
    train_c = syngen.generate_corpus(grammar, ontology, n=200, seed=30)
    dev_c = syngen.generate_corpus(grammar, ontology, n=50, seed=31)
    test_c = syngen.generate_corpus(grammar, ontology, n=200, seed=32)
    translated = syngen.translate_corpus(test_c, grammar)
    vocab = build_vocab(train_c, target_size=120,
                        reserved=reserved_pieces(ontology))

    trained, _ = training.train(
        M.CANDIDATES, ontology, vocab, train_c, dev_c,
        TrainConfig(learning_rate=1e-3, max_epochs=3, patience=3, seed=0))
    # Untrained models emit arbitrary scores, so they probe the legality
    # mask harder than a converged model does.
    models = [trained] + [
        M.init_model(M.CANDIDATES, ontology, vocab, M.ModelConfig(), seed=s)
        for s in (1, 2, 3)
    ]
    decodes = 0
    illegal = 0
    for model in models:
        for corpus in (test_c, translated):
            for sentence in corpus:
                entity_types = {e.span: e.entity_type for e in sentence.entities}
                for event in sentence.events:
                    args = M.extract_arguments(model, sentence, event.trigger,
                                               event.event_type)
                    decodes += 1
                    for a in args:
                        triple = (entity_types[a.span], a.event_type, a.role)
                        if triple not in ontology.legal_triples:
                            illegal += 1
    ok = illegal == 0
    announce(capsys, 9, ok,
             f"{illegal} illegal (entity, event, role) triples over "
             f"{decodes} candidate decodes by 4 models")
    assert illegal == 0


# -- 10: experiment determinism -------------------------------------------------

TINY_MODEL = M.ModelConfig(hidden=16, heads=2, layers=1, feedforward=24,
                           max_positions=96, recurrent=12, event_dim=6,
                           entity_dim=6)


def test_repeated_experiment_produces_identical_csv(capsys, tmp_path):
    def run(out_dir):
        cfg = E.ExperimentConfig(
            out_dir=str(out_dir), train_n=40, dev_n=12, test_n=12,
            vocab_size=60, seeds=(1,), fractions=(1.0,),
            train=TrainConfig(learning_rate=1e-3, max_epochs=2, patience=2),
            model=TINY_MODEL)
        return Path(E.run_experiment(cfg)).read_bytes()

    first = run(tmp_path / "first")
    second = run(tmp_path / "second")
    ok = first == second
    announce(capsys, 10, ok,
             f"two identically configured sweeps wrote byte-identical "
             f"summary CSVs ({len(first)} bytes)")
    assert first == second
