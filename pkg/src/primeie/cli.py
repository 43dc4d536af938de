"""Command-line front end: data generation through scored experiments."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import checkpoint
from . import experiments as E
from . import models as M
from . import scoring
from . import syngen
from . import training
from .corpus import CorpusError, load_corpus, load_ontology, save_corpus, save_ontology
from .priming import reserved_pieces
from .tokenizer import build_vocab, load_vocab, save_vocab

HANDLED_ERRORS = (CorpusError, syngen.GrammarError, checkpoint.CheckpointError,
                  training.TrainingError, E.ExperimentError, ValueError, OSError)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise E.ExperimentError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise E.ExperimentError(f"expected comma-separated numbers, got {text!r}")


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise E.ExperimentError("config file must hold a JSON object")
    return data


def _build_configs(data: dict, seed: int | None = None):
    try:
        train_cfg = training.TrainConfig(**data.get("train", {}))
        model_cfg = M.ModelConfig(**data.get("model", {}))
    except TypeError as exc:
        raise E.ExperimentError(f"bad config: {exc}")
    if seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=seed)
    return train_cfg, model_cfg


def _world(args):
    """Resolve (ontology, grammar) from flags, falling back to the defaults."""
    ontology = grammar = None
    if args.ontology:
        ontology = load_ontology(args.ontology)
    if args.grammar:
        grammar = syngen.load_grammar(args.grammar)
    mode = getattr(args, "mode", syngen.SIMPLE)
    anchor = getattr(args, "anchor_fraction", 0.3)
    if ontology is None or grammar is None:
        d_onto, d_gram = E.default_world(mode, anchor_fraction=anchor)
        ontology = ontology or d_onto
        grammar = grammar or d_gram
    return ontology, grammar


# -- commands -------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    ontology, grammar = _world(args)
    grammar.validate_against(ontology)
    corpus = syngen.generate_corpus(grammar, ontology, n=args.n, seed=args.seed,
                                    mode=args.mode)
    if args.translate:
        corpus = syngen.translate_corpus(corpus, grammar)
    save_corpus(corpus, args.out)
    if args.dump_ontology:
        save_ontology(ontology, args.dump_ontology)
    if args.dump_grammar:
        syngen.save_grammar(grammar, args.dump_grammar)
    print(f"wrote {len(corpus)} sentences to {args.out}")
    return 0


def cmd_vocab(args) -> int:
    ontology = load_ontology(args.ontology)
    corpus = load_corpus(args.corpus, ontology)
    vocab = build_vocab(corpus, target_size=args.size, seed=args.seed,
                        reserved=reserved_pieces(ontology))
    save_vocab(vocab, args.out)
    print(f"wrote {len(vocab)} pieces to {args.out}")
    return 0


def cmd_train(args) -> int:
    ontology = load_ontology(args.ontology)
    vocab = load_vocab(args.vocab)
    train_corpus = load_corpus(args.corpus, ontology)
    dev_corpus = load_corpus(args.dev, ontology)
    train_cfg, model_cfg = _build_configs(_load_config_file(args.config), args.seed)
    model, report = training.train(args.model, ontology, vocab, train_corpus,
                                   dev_corpus, train_cfg, model_cfg)
    E.atomic_write_text(args.out, json.dumps(
        checkpoint.model_to_dict(model), sort_keys=True) + "\n")
    report_path = args.report or os.path.splitext(args.out)[0] + ".report.json"
    E.atomic_write_text(report_path, json.dumps(
        E.report_to_dict(report), sort_keys=True) + "\n")
    best = report.dev_f1[report.best_epoch - 1] if report.dev_f1 else 0.0
    print(f"wrote {args.out} (best epoch {report.best_epoch}, dev F1 {best:.4f})")
    return 0


def cmd_decode(args) -> int:
    ontology = load_ontology(args.ontology)
    vocab = load_vocab(args.vocab)
    corpus = load_corpus(args.corpus, ontology)
    runs = []
    for path in args.checkpoint:
        model = checkpoint.load_model(path, ontology, vocab)
        if model.kind not in (M.TRIGGER_BASELINE, M.TRIGGER_PRIMED) and not args.gold_triggers:
            raise E.ExperimentError(
                f"{path}: {model.kind} decodes arguments over gold triggers; "
                "pass --gold-triggers to confirm")
        runs.append(training.decode_corpus(model, corpus))
    pred = runs[0] if len(runs) == 1 else scoring.union_decode(runs)
    E.atomic_write_text(args.out,
                        "\n".join(scoring.predictions_to_lines(pred)) + "\n")
    print(f"wrote {pred.total_events()} events to {args.out}")
    return 0


def cmd_score(args) -> int:
    gold = load_corpus(args.gold)
    pred = scoring.load_predictions(args.pred)
    report = scoring.score(pred, gold)
    if args.out:
        E.atomic_write_text(args.out, json.dumps(
            scoring.score_to_dict(report), sort_keys=True) + "\n")
    print(scoring.format_score_report(report))
    return 0


def cmd_diff(args) -> int:
    gold = load_corpus(args.gold)
    pred_a = scoring.load_predictions(args.pred_a)
    pred_b = scoring.load_predictions(args.pred_b)
    report = scoring.diff_outputs(pred_a, pred_b, gold, args.level)
    if args.out:
        E.atomic_write_text(args.out, json.dumps(
            scoring.diff_to_dict(report), sort_keys=True) + "\n")
    print(scoring.format_diff_report(report))
    return 0


def cmd_experiment(args) -> int:
    data = _load_config_file(args.config)
    train_cfg, model_cfg = _build_configs(data)
    systems = tuple((name, kind) for name, kind in data.get("systems", ()))
    cfg = E.ExperimentConfig(
        out_dir=args.out,
        ontology_path=args.ontology, grammar_path=args.grammar,
        train_path=args.corpus, dev_path=args.dev, test_path=args.test,
        mode=args.mode, train_n=args.train_n, dev_n=args.dev_n, test_n=args.test_n,
        data_seed=args.data_seed, anchor_fraction=args.anchor_fraction,
        vocab_size=args.vocab_size,
        seeds=args.seeds, fractions=args.fractions,
        translate=not args.no_translate, gold_triggers=args.gold_triggers,
        jobs=args.jobs, train=train_cfg, model=model_cfg,
        **({"systems": systems} if systems else {}))
    csv_path = E.run_experiment(cfg, echo=lambda msg: print(msg, file=sys.stderr))
    print(csv_path)
    return 0


def cmd_grad_check(args) -> int:
    errors = E.gradient_audit(bits=args.bits, coords_per_param=args.coords,
                              seed=args.seed)
    for kind, err in errors.items():
        print(f"{kind}: max relative error {err:.3e}")
    worst = max(errors.values())
    tol = E.GRAD_TOLERANCE[args.bits]
    ok = worst <= tol
    print(f"worst {worst:.3e} vs tolerance {tol:.0e} at {args.bits}-bit: "
          f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_crf_check(args) -> int:
    worst, mismatches, cases = E.crf_check(trials=args.trials, seed=args.seed)
    print(f"log partition: max relative error {worst:.3e} over {cases} cases")
    print(f"viterbi: {mismatches} mismatches vs enumeration")
    ok = worst <= 1e-6 and mismatches == 0
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="primeie",
        description="Primed event extraction: synthetic data, training, scoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic corpus")
    p.add_argument("--mode", choices=syngen.MODES, default=syngen.SIMPLE)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--ontology", help="ontology JSON (default: built-in toy world)")
    p.add_argument("--grammar", help="grammar JSON (default: built-in grammar)")
    p.add_argument("--anchor-fraction", type=float, default=0.3)
    p.add_argument("--translate", action="store_true",
                   help="emit the lexicon-translated corpus instead")
    p.add_argument("--dump-ontology", help="also write the ontology here")
    p.add_argument("--dump-grammar", help="also write the grammar here")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("vocab", help="build a subword vocabulary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ontology", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--model", choices=M.KINDS, required=True)
    p.add_argument("--ontology", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True, help="training corpus")
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--report", help="train report path (default: <out>.report.json)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help='JSON file {"train": {...}, "model": {...}}')
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="decode a corpus with trained checkpoints")
    p.add_argument("--checkpoint", nargs="+", required=True,
                   help="one or more; several are merged by union decoding")
    p.add_argument("--ontology", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gold-triggers", action="store_true",
                   help="decode arguments over the corpus gold triggers")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", help="also write the report as JSON")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("diff", help="contrast two prediction files against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--level", choices=scoring.LEVELS, default=scoring.ARGUMENT_LEVEL)
    p.add_argument("--out", help="also write the report as JSON")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("experiment",
                       help="train/score {baseline, primed} x seeds x fractions")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--ontology")
    p.add_argument("--grammar")
    p.add_argument("--corpus", help="training corpus (default: generated)")
    p.add_argument("--dev")
    p.add_argument("--test")
    p.add_argument("--mode", choices=syngen.MODES, default=syngen.SIMPLE)
    p.add_argument("--train-n", type=int, default=800)
    p.add_argument("--dev-n", type=int, default=200)
    p.add_argument("--test-n", type=int, default=300)
    p.add_argument("--vocab-size", type=int, default=400)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--anchor-fraction", type=float, default=0.3)
    p.add_argument("--seeds", type=_ints, default=(1, 2, 3, 4, 5))
    p.add_argument("--fractions", type=_floats, default=(1.0,))
    p.add_argument("--no-translate", action="store_true",
                   help="skip the translated test set")
    p.add_argument("--gold-triggers", action="store_true", default=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", help='JSON overrides {"train","model","systems"}')
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("grad-check", help="audit gradients of every model kind")
    p.add_argument("--bits", type=int, choices=(32, 64), default=32)
    p.add_argument("--coords", type=int, default=4, help="coordinates per parameter")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("crf-check", help="compare the chain decoder to enumeration")
    p.add_argument("--trials", type=int, default=200, help="per (length, labels) pair")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_crf_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HANDLED_ERRORS as exc:
        message = " ".join(str(exc).split()) or exc.__class__.__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
