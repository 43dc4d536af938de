import os

# Pin BLAS to one thread before numpy loads: the suite works on tiny matrices
# and the acceptance runtime bounds assume a single CPU core.
for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np
import pytest

from primeie.corpus import (
    Corpus,
    EntityMention,
    EventMention,
    Ontology,
    Sentence,
    TokenSpan,
)
from primeie.tokenizer import build_vocab


@pytest.fixture(scope="session")
def tiny_ontology():
    return Ontology(
        ontology_id="tiny-v1",
        event_types=("attack", "meet"),
        roles_for={"attack": ("agent", "target"), "meet": ("agent", "partner")},
        role_code={"agent": "1", "target": "2", "partner": "3"},
        entity_types=("person", "thing"),
        legal_triples=frozenset(
            {
                ("person", "attack", "agent"),
                ("thing", "attack", "target"),
                ("person", "meet", "agent"),
                ("person", "meet", "partner"),
            }
        ),
    )


@pytest.fixture(scope="session")
def tiny_sentence():
    return Sentence(
        doc_id="d0",
        sent_id="s0",
        language="syn-a",
        tokens=("rebels", "stormed", "the", "depot", "."),
        entities=(
            EntityMention(span=TokenSpan(0, 1), entity_type="person", head_index=0),
            EntityMention(span=TokenSpan(3, 4), entity_type="thing", head_index=3),
        ),
        events=(
            EventMention(
                trigger=TokenSpan(1, 2),
                event_type="attack",
                arguments=((TokenSpan(0, 1), "agent"), (TokenSpan(3, 4), "target")),
            ),
        ),
    )


@pytest.fixture(scope="session")
def tiny_corpus(tiny_sentence):
    return Corpus(sentences=(tiny_sentence,), ontology_id="tiny-v1")


@pytest.fixture(scope="session")
def tiny_vocab(tiny_corpus):
    return build_vocab(tiny_corpus, target_size=64, seed=0, reserved=(";", "1", "2", "3"))


def rng(seed=0):
    return np.random.default_rng(seed)
