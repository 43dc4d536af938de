#!/usr/bin/env python3
"""Zero-shot transfer between the synthetic languages.

Trains on language A and scores on the translated test set twice: once
through the grammar's own lexicon (anchor words keep their surface) and
once through a 0-anchor lexicon in which every surface form changes.
Anchors stand in for the shared token space a multilingual encoder gives
you; with none, nothing ties the languages together and transfer should
collapse toward zero.
"""

import argparse
import os
import statistics
import sys
from collections import defaultdict

import primeie.scoring as S
import primeie.syngen as G
import primeie.training as T
from primeie.checkpoint import load_model
from primeie.corpus import load_corpus, load_ontology
from primeie.experiments import ExperimentConfig, run_experiment, run_name
from primeie.tokenizer import load_vocab


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", default="1,2,3,4,5")
    p.add_argument("--train-n", type=int, default=800)
    p.add_argument("--anchor-fraction", type=float, default=0.3)
    p.add_argument("--jobs", type=int, default=1)
    return p.parse_args()


def main():
    args = parse_args()
    seeds = tuple(int(s) for s in args.seeds.split(","))
    cfg = ExperimentConfig(out_dir=args.out, seeds=seeds, train_n=args.train_n,
                           anchor_fraction=args.anchor_fraction, jobs=args.jobs)
    run_experiment(cfg, echo=lambda msg: print(msg, file=sys.stderr))

    data_dir = os.path.join(args.out, "data")
    onto = load_ontology(os.path.join(data_dir, "ontology.json"))
    grammar = G.load_grammar(os.path.join(data_dir, "grammar.json"))
    vocab = load_vocab(os.path.join(data_dir, "vocab.json"))
    test = load_corpus(os.path.join(data_dir, "test.jsonl"), onto)
    translated = G.translate_corpus(test, grammar)
    control = G.translate_corpus(test, G.with_lexicon(grammar, 0.0))

    table = defaultdict(list)
    for system, _ in cfg.systems:
        for seed in seeds:
            run_dir = os.path.join(args.out, "runs", run_name(system, 1.0, seed))
            model = load_model(os.path.join(run_dir, "model.json"), onto, vocab)
            for label, corpus in (("anchored", translated), ("0-anchor", control)):
                f1 = S.score(T.decode_corpus(model, corpus), corpus).argument.f1
                table[(system, label)].append(f1)

    print(f"\n{'system':>10}  {'anchored':>9}  {'0-anchor':>9}  {'lift':>7}")
    for system, _ in cfg.systems:
        anchored = statistics.mean(table[(system, "anchored")])
        floor = statistics.mean(table[(system, "0-anchor")])
        print(f"{system:>10}  {anchored:>9.4f}  {floor:>9.4f}  {anchored - floor:>+7.4f}")


if __name__ == "__main__":
    main()
