"""Experiment sweeps: data prep, fraction subsetting, multi-run training, CSV.

A sweep trains {baseline, primed} argument systems over seeds and train
fractions, scores each run on the in-language test set and optionally on its
translated counterpart, and writes one canonical CSV.  Re-running the same
configuration reproduces the CSV byte for byte.
"""
from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import checkpoint
from . import crf
from . import models as M
from . import scoring
from . import syngen
from . import training
from .corpus import Corpus, Ontology, load_corpus, load_ontology, save_corpus, save_ontology
from .models import ModelConfig
from .priming import reserved_pieces
from .tokenizer import SubwordVocab, build_vocab, save_vocab
from .training import TrainConfig, TrainReport

CSV_COLUMNS = ("system", "language_pair", "fraction", "seed", "level",
               "precision", "recall", "f1")

PAIR_IN_LANGUAGE = "a-a"
PAIR_TRANSLATED = "a-b"


class ExperimentError(ValueError):
    pass


def schema_path(name: str) -> str:
    """Path of a published JSON schema (e.g. "checkpoint", "score-report")."""
    return os.path.join(os.path.dirname(__file__), "schemas", f"{name}.schema.json")


def load_schema(name: str) -> dict:
    with open(schema_path(name), "r", encoding="utf-8") as fh:
        return json.load(fh)


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: str
    ontology_path: str | None = None
    grammar_path: str | None = None
    train_path: str | None = None
    dev_path: str | None = None
    test_path: str | None = None
    mode: str = syngen.SIMPLE
    train_n: int = 800
    dev_n: int = 200
    test_n: int = 300
    data_seed: int = 0
    anchor_fraction: float = 0.3
    vocab_size: int = 400
    systems: tuple[tuple[str, str], ...] = (
        ("baseline", M.ARGS_BASELINE),
        ("primed", M.ARGS_ROLE_PRIMED),
    )
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    fractions: tuple[float, ...] = (1.0,)
    translate: bool = True
    gold_triggers: bool = True
    jobs: int = 1
    train: TrainConfig = field(default_factory=lambda: TrainConfig(max_epochs=15, patience=3))
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if not self.seeds:
            raise ExperimentError("at least one seed required")
        if not self.fractions:
            raise ExperimentError("at least one fraction required")
        for f in self.fractions:
            if not 0.0 < f <= 1.0:
                raise ExperimentError(f"fraction {f} outside (0, 1]")
        if self.mode not in syngen.MODES:
            raise ExperimentError(f"unknown mode {self.mode!r}")
        for name, kind in self.systems:
            if kind not in M.KINDS:
                raise ExperimentError(f"system {name!r}: unknown model kind {kind!r}")
        if self.jobs < 1:
            raise ExperimentError("jobs must be at least 1")
        for label, path in (("ontology", self.ontology_path),
                            ("grammar", self.grammar_path),
                            ("train", self.train_path),
                            ("dev", self.dev_path),
                            ("test", self.test_path)):
            if path is not None and not os.path.exists(path):
                raise ExperimentError(f"{label} file not found: {path}")


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file + rename so readers never see partials."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- data preparation ----------------------------------------------------------

@dataclass(frozen=True)
class DataBundle:
    ontology: Ontology
    grammar: syngen.GrammarSpec
    vocab: SubwordVocab
    train: Corpus
    dev: Corpus
    test: Corpus
    test_translated: Corpus | None


def default_world(mode: str, anchor_fraction: float = 0.3,
                  seed: int = 0) -> tuple[Ontology, syngen.GrammarSpec]:
    if mode == syngen.TWO_EVENT:
        return (syngen.two_event_ontology(),
                syngen.two_event_grammar(anchor_fraction=anchor_fraction, seed=seed))
    return (syngen.default_ontology(),
            syngen.simple_grammar(anchor_fraction=anchor_fraction, seed=seed))


def prepare_data(cfg: ExperimentConfig) -> DataBundle:
    """Load the configured files, generating any split that has no path."""
    data_dir = os.path.join(cfg.out_dir, "data")
    os.makedirs(data_dir, exist_ok=True)
    if cfg.ontology_path:
        ontology = load_ontology(cfg.ontology_path)
    else:
        ontology, _ = default_world(cfg.mode, cfg.anchor_fraction, cfg.data_seed)
        save_ontology(ontology, os.path.join(data_dir, "ontology.json"))
    if cfg.grammar_path:
        grammar = syngen.load_grammar(cfg.grammar_path)
    else:
        _, grammar = default_world(cfg.mode, cfg.anchor_fraction, cfg.data_seed)
        syngen.save_grammar(grammar, os.path.join(data_dir, "grammar.json"))

    def split(path, name, n, seed_offset):
        if path:
            return load_corpus(path, ontology)
        corpus = syngen.generate_corpus(grammar, ontology, n=n,
                                        seed=cfg.data_seed + seed_offset, mode=cfg.mode)
        save_corpus(corpus, os.path.join(data_dir, f"{name}.jsonl"))
        return corpus

    train = split(cfg.train_path, "train", cfg.train_n, 0)
    dev = split(cfg.dev_path, "dev", cfg.dev_n, 1)
    test = split(cfg.test_path, "test", cfg.test_n, 2)
    test_translated = None
    if cfg.translate:
        test_translated = syngen.translate_corpus(test, grammar)
        save_corpus(test_translated, os.path.join(data_dir, "test-translated.jsonl"))
    vocab = build_vocab(train, target_size=cfg.vocab_size, seed=cfg.data_seed,
                        reserved=reserved_pieces(ontology))
    save_vocab(vocab, os.path.join(data_dir, "vocab.json"))
    return DataBundle(ontology=ontology, grammar=grammar, vocab=vocab,
                      train=train, dev=dev, test=test, test_translated=test_translated)


def subset_by_fraction(corpus: Corpus, fraction: float) -> Corpus:
    """Keep whole documents, in order, until the event-count target is met."""
    if not 0.0 < fraction <= 1.0:
        raise ExperimentError(f"fraction {fraction} outside (0, 1]")
    if fraction == 1.0:
        return corpus
    total = sum(len(s.events) for s in corpus)
    target = fraction * total
    by_doc: dict[str, list] = {}
    for sentence in corpus:
        by_doc.setdefault(sentence.doc_id, []).append(sentence)
    kept: list = []
    events = 0
    for doc_id, sentences in by_doc.items():
        if events >= target:
            break
        kept.extend(sentences)
        events += sum(len(s.events) for s in sentences)
    return Corpus(sentences=tuple(kept), ontology_id=corpus.ontology_id)


# -- single runs ---------------------------------------------------------------

def report_to_dict(report: TrainReport) -> dict:
    return {
        "epoch_losses": [float(x) for x in report.epoch_losses],
        "dev_f1": [float(x) for x in report.dev_f1],
        "best_epoch": report.best_epoch,
        "wall_time": float(report.wall_time),
    }


def _score_rows(system: str, pair: str, fraction: float, seed: int,
                report: scoring.ScoreReport) -> list[tuple]:
    rows = []
    for level in scoring.LEVELS:
        s = report.level(level)
        rows.append((system, pair, repr(float(fraction)), str(seed), level,
                     f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}"))
    return rows


def _run_one(job) -> list[tuple]:
    (run_dir, system, kind, fraction, seed, ontology, vocab, subset, dev,
     test, test_translated, train_cfg, model_cfg, gold_triggers) = job
    if kind not in (M.TRIGGER_BASELINE, M.TRIGGER_PRIMED) and not gold_triggers:
        raise ExperimentError(
            f"system {system!r} ({kind}) decodes arguments and needs gold triggers")
    os.makedirs(run_dir, exist_ok=True)
    config = dataclasses.replace(train_cfg, seed=seed)
    model, report = training.train(kind, ontology, vocab, subset, dev,
                                   config, model_cfg)
    atomic_write_text(os.path.join(run_dir, "model.json"),
                      json.dumps(checkpoint.model_to_dict(model), sort_keys=True) + "\n")
    atomic_write_text(os.path.join(run_dir, "train-report.json"),
                      json.dumps(report_to_dict(report), sort_keys=True) + "\n")
    rows = []
    for pair, corpus in ((PAIR_IN_LANGUAGE, test), (PAIR_TRANSLATED, test_translated)):
        if corpus is None:
            continue
        pred = training.decode_corpus(model, corpus)
        atomic_write_text(os.path.join(run_dir, f"pred-{pair}.jsonl"),
                          "\n".join(scoring.predictions_to_lines(pred)) + "\n")
        result = scoring.score(pred, corpus)
        atomic_write_text(os.path.join(run_dir, f"score-{pair}.json"),
                          json.dumps(scoring.score_to_dict(result), sort_keys=True) + "\n")
        rows.extend(_score_rows(system, pair, fraction, seed, result))
    return rows


def run_name(system: str, fraction: float, seed: int) -> str:
    return f"{system}-f{fraction:g}-s{seed}"


def run_experiment(cfg: ExperimentConfig, echo=None) -> str:
    """Execute the full sweep; returns the path of the summary CSV."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    data = prepare_data(cfg)
    subsets = {f: subset_by_fraction(data.train, f) for f in cfg.fractions}
    jobs = []
    for fraction in cfg.fractions:
        for system, kind in cfg.systems:
            for seed in cfg.seeds:
                run_dir = os.path.join(cfg.out_dir, "runs",
                                       run_name(system, fraction, seed))
                jobs.append((run_dir, system, kind, fraction, seed,
                             data.ontology, data.vocab, subsets[fraction], data.dev,
                             data.test, data.test_translated,
                             cfg.train, cfg.model, cfg.gold_triggers))
    rows: list[tuple] = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for done, out in enumerate(pool.map(_run_one, jobs), start=1):
                rows.extend(out)
                if echo:
                    echo(f"finished {done}/{len(jobs)} runs")
    else:
        for done, job in enumerate(jobs, start=1):
            rows.extend(_run_one(job))
            if echo:
                echo(f"finished {done}/{len(jobs)}: {os.path.basename(job[0])}")
    rows.sort()
    csv_path = os.path.join(cfg.out_dir, "summary.csv")
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(row) for row in rows)
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    return csv_path


# -- self-check commands ---------------------------------------------------------

def _enumerate_scores(emissions: np.ndarray, trans: np.ndarray,
                      start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Scores of every label sequence, enumerated in lexicographic order."""
    length, n = emissions.shape
    grids = np.meshgrid(*([np.arange(n)] * length), indexing="ij")
    seqs = np.stack([g.reshape(-1) for g in grids], axis=1)  # (n**L, L) lex order
    scores = emissions[np.arange(length), seqs].sum(axis=1)
    scores += start[seqs[:, 0]] + end[seqs[:, -1]]
    if length > 1:
        scores += trans[seqs[:, :-1], seqs[:, 1:]].sum(axis=1)
    return scores


def crf_check(trials: int = 200, max_length: int = 6, max_labels: int = 5,
              seed: int = 0) -> tuple[float, int, int]:
    """Compare log_partition and viterbi against exhaustive enumeration.

    Returns (worst relative error, viterbi mismatches, cases).  Half the
    trials use integer-ish scores so ties actually occur and exercise the
    lexicographic tie-break.
    """
    worst = 0.0
    mismatches = 0
    cases = 0
    rng = np.random.default_rng(seed)
    with ad.precision(np.float64):
        for length in range(1, max_length + 1):
            for n in range(1, max_labels + 1):
                for trial in range(trials):
                    if trial % 2:
                        draw = lambda *shape: rng.integers(-2, 3, size=shape).astype(np.float64) * 0.5
                    else:
                        draw = lambda *shape: rng.standard_normal(shape)
                    em = draw(length, n)
                    trans = draw(n, n)
                    start = draw(n)
                    end = draw(n)
                    table = crf.TransitionTable(
                        transition=ad.tensor(trans), start=ad.tensor(start),
                        end=ad.tensor(end))
                    scores = _enumerate_scores(em, trans, start, end)
                    want_z = float(np.logaddexp.reduce(scores))
                    got_z = float(crf.log_partition(ad.tensor(em), table).values)
                    err = abs(got_z - want_z) / max(abs(want_z), 1e-12)
                    worst = max(worst, err)
                    # np.argmax returns the first maximum; enumeration order is
                    # lexicographic, matching the decoder's documented tie-break.
                    best = int(np.argmax(scores))
                    want_path = _path_from_rank(best, length, n)
                    got_path, _ = crf.viterbi(ad.tensor(em), table)
                    if list(got_path) != want_path:
                        mismatches += 1
                    cases += 1
    return worst, mismatches, cases


def _path_from_rank(rank: int, length: int, n: int) -> list[int]:
    # meshgrid(indexing="ij") flattens with the LAST position varying fastest.
    path = []
    for _ in range(length):
        rank, label = divmod(rank, n)
        path.append(label)
    return list(reversed(path))


def _grad_check_world():
    ontology, grammar = default_world(syngen.SIMPLE)
    corpus = syngen.generate_corpus(grammar, ontology, n=8, seed=11)
    vocab = build_vocab(corpus, target_size=120, seed=0,
                        reserved=reserved_pieces(ontology))
    return ontology, corpus, vocab


GRAD_CHECK_CONFIG = ModelConfig(hidden=16, heads=2, layers=1, feedforward=24,
                                max_positions=64, recurrent=12, event_dim=6,
                                entity_dim=6)


def gradient_audit(bits: int = 32, coords_per_param: int = 3, seed: int = 0,
                   kinds=M.KINDS) -> dict[str, float]:
    """fd_check the full batch loss of each model kind; returns worst errors."""
    if bits not in (32, 64):
        raise ExperimentError("bits must be 32 or 64")
    ontology, corpus, vocab = _grad_check_world()
    out = {}
    for kind in kinds:
        def audit():
            model = M.init_model(kind, ontology, vocab, GRAD_CHECK_CONFIG, seed=seed)
            instances = training.build_instances(model, corpus, seed=seed)[:4]
            params = model.parameters()

            def batch_loss():
                total = M.loss(model, instances[0])
                for inst in instances[1:]:
                    total = total + M.loss(model, inst)
                return total * (1.0 / len(instances))

            rng = np.random.default_rng([seed, 7])
            # Parameters sit at ~1e-1 scale, so eps = 1e-4 keeps the central
            # difference's truncation error under the 64-bit tolerance.
            return ad.fd_check(batch_loss, params, epsilon=1e-4,
                               max_coords_per_param=coords_per_param, rng=rng)

        if bits == 64:
            with ad.precision(np.float64):
                out[kind] = audit()
        else:
            out[kind] = audit()
    return out


GRAD_TOLERANCE = {32: 1e-3, 64: 1e-6}
