"""Model checkpoints: one JSON file holding every tensor plus metadata.

Tensors are stored as little-endian float32 bytes in base64.  The metadata
block pins the ontology and model kind so a checkpoint cannot be decoded
against a world it was not trained for.
"""
from __future__ import annotations

import base64
import dataclasses
import json

import numpy as np

from . import autodiff as ad
from .corpus import Ontology
from .models import Model, ModelConfig, init_model
from .tokenizer import SubwordVocab

VERSION = "prime-ie/1"


class CheckpointError(ValueError):
    pass


def _encode_tensor(t: ad.Tensor) -> dict:
    raw = np.ascontiguousarray(t.values, dtype="<f4")
    return {
        "shape": list(raw.shape),
        "dtype": "f32",
        "data": base64.b64encode(raw.tobytes()).decode("ascii"),
    }


def _decode_tensor(name: str, entry: dict) -> np.ndarray:
    if entry.get("dtype") != "f32":
        raise CheckpointError(f"tensor {name!r}: unsupported dtype {entry.get('dtype')!r}")
    shape = tuple(entry["shape"])
    raw = base64.b64decode(entry["data"])
    expected = int(np.prod(shape, dtype=np.int64)) * 4
    if len(raw) != expected:
        raise CheckpointError(
            f"tensor {name!r}: {len(raw)} bytes for shape {list(shape)} (want {expected})")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).copy()


def model_to_dict(model: Model) -> dict:
    return {
        "version": VERSION,
        "metadata": {
            "prime_kind": model.kind,
            "ontology_id": model.ontology.ontology_id,
            "label_spaces": {
                "event_types": list(model.ontology.event_types),
                "roles": list(model.ontology.all_roles()),
                "entity_types": list(model.ontology.entity_types),
            },
            "config": dataclasses.asdict(model.config),
        },
        "tensors": {name: _encode_tensor(t) for name, t in sorted(model.params.items())},
    }


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def model_from_dict(data: dict, ontology: Ontology, vocab: SubwordVocab) -> Model:
    if data.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {data.get('version')!r}")
    try:
        meta = data["metadata"]
        kind = meta["prime_kind"]
        spaces = meta["label_spaces"]
        config = ModelConfig(**meta["config"])
        tensors = data["tensors"]
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    if meta["ontology_id"] != ontology.ontology_id:
        raise CheckpointError(
            f"checkpoint is for ontology {meta['ontology_id']!r}, "
            f"got {ontology.ontology_id!r}")
    recorded = (tuple(spaces["event_types"]), tuple(spaces["roles"]),
                tuple(spaces["entity_types"]))
    current = (ontology.event_types, ontology.all_roles(), ontology.entity_types)
    if recorded != current:
        raise CheckpointError(
            f"label spaces changed under ontology {ontology.ontology_id!r}")
    # Rebuild the skeleton to get the authoritative name/shape layout; any
    # missing, extra, or misshapen tensor is a corrupt or foreign file.
    skeleton = init_model(kind, ontology, vocab, config, seed=0)
    if set(tensors) != set(skeleton.params):
        missing = sorted(set(skeleton.params) - set(tensors))
        extra = sorted(set(tensors) - set(skeleton.params))
        raise CheckpointError(f"tensor names do not match: missing {missing}, extra {extra}")
    params = {}
    for name, reference in skeleton.params.items():
        values = _decode_tensor(name, tensors[name])
        if values.shape != reference.values.shape:
            raise CheckpointError(
                f"tensor {name!r}: shape {list(values.shape)} does not match "
                f"{list(reference.values.shape)}")
        params[name] = ad.param(values)
    return Model(kind=kind, config=config, ontology=ontology, vocab=vocab, params=params)


def load_model(path, ontology: Ontology, vocab: SubwordVocab) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(data, ontology, vocab)
