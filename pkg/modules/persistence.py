import base64
import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .ensemble import BoostModel, ForestModel, VotingModel
from .errors import ModelFileError, ModelVersionError
from .fileio import atomic_write_text
from .tree import TreeModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _tree_state(tree):
    return {
        "n_features": tree.n_features,
        "max_depth": tree.max_depth,
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _tree_from_state(state):
    return TreeModel(
        state["feature"], state["threshold"], state["left"], state["right"],
        np.array(state["value"], dtype=np.float64), state["n_features"], state["max_depth"],
    )


def _pack_bits(mask):
    return {"shape": list(mask.shape), "bits": base64.b64encode(np.packbits(mask).tobytes()).decode("ascii")}


def _unpack_bits(packed):
    shape = tuple(packed["shape"])
    raw = np.frombuffer(base64.b64decode(packed["bits"]), dtype=np.uint8)
    return np.unpackbits(raw, count=int(np.prod(shape))).astype(bool).reshape(shape)


def encode_model(model):
    """(kind, hyperparameters, state) for a trained model"""
    if isinstance(model, TreeModel):
        return "tree", {"max_depth": model.max_depth}, _tree_state(model)
    if isinstance(model, ForestModel):
        hyper = {
            "n_estimators": model.n_estimators,
            "max_samples": model.max_samples,
            "max_depth": model.max_depth,
            "seed": model.seed,
        }
        state = {"trees": [_tree_state(t) for t in model.trees], "inbag": _pack_bits(model.inbag)}
        return "forest", hyper, state
    if isinstance(model, BoostModel):
        hyper = {
            "n_estimators": model.n_estimators,
            "learning_rate": model.learning_rate,
            "max_depth": model.max_depth,
            "seed": model.seed,
            "algorithm": "SAMME",
        }
        state = {
            "n_classes": model.n_classes,
            "stages": [{"tree": _tree_state(t), "alpha": alpha} for t, alpha in model.stages],
        }
        return "adaboost", hyper, state
    if isinstance(model, VotingModel):
        members = []
        for member in model.members:
            kind, hyper, state = encode_model(member)
            members.append({"kind": kind, "hyperparameters": hyper, "state": state})
        return "voting", {"weights": list(model.weights), "voting": "soft"}, {"members": members}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def decode_model(kind, hyper, state):
    if kind == "tree":
        return _tree_from_state(state)
    if kind == "forest":
        trees = tuple(_tree_from_state(t) for t in state["trees"])
        inbag = _unpack_bits(state["inbag"])
        inbag.setflags(write=False)
        return ForestModel(trees, inbag, hyper["max_samples"], hyper["n_estimators"],
                           hyper["seed"], hyper["max_depth"])
    if kind == "adaboost":
        stages = tuple((_tree_from_state(s["tree"]), s["alpha"]) for s in state["stages"])
        return BoostModel(stages, hyper["learning_rate"], state["n_classes"], hyper["n_estimators"],
                          hyper["max_depth"], hyper["seed"])
    if kind == "voting":
        members = tuple(decode_model(m["kind"], m["hyperparameters"], m["state"]) for m in state["members"])
        return VotingModel(members, tuple(hyper["weights"]))
    raise ModelFileError(f"unknown model kind '{kind}'")


def _checksum(body):
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def model_document(model, provenance=None):
    kind, hyper, state = encode_model(model)
    body = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "hyperparameters": hyper,
        "state": state,
        "provenance": provenance or {},
    }
    return {**body, "checksum": _checksum(body)}


def save_model(model, path, provenance=None):
    """Write a self-describing JSON model file with an embedded sha256 checksum"""
    document = model_document(model, provenance)
    path = atomic_write_text(path, json.dumps(document, sort_keys=True))
    logger.info("Saved %s model to %s", document["kind"], path)
    return path


def load_model(path, with_provenance=False):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: truncated or malformed model file ({exc.msg})")
    except UnicodeDecodeError as exc:
        raise ModelFileError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})")
    if not isinstance(document, dict) or "format_version" not in document:
        raise ModelFileError(f"{path}: not a model file")
    if document["format_version"] != FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format_version {document['format_version']} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    body = {key: value for key, value in document.items() if key != "checksum"}
    if document.get("checksum") != _checksum(body):
        raise ModelFileError(f"{path}: checksum mismatch")
    try:
        model = decode_model(document["kind"], document["hyperparameters"], document["state"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: invalid model state ({exc})")
    if with_provenance:
        return model, document.get("provenance", {})
    return model
