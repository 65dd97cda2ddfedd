"""Self-describing model checkpoints.

Layout: an ASCII magic line, the byte length of a JSON header, the
header itself (names, shapes, config, vocabulary, relation inventory),
then one contiguous little-endian float64 payload per array in header
order.  Loading validates shapes and the format version and never needs
external configuration; identical models save to identical bytes.
"""

from __future__ import annotations

import json
from typing import Dict, List, Tuple

import numpy as np

from .classifier_head import HeadParams
from .config import VARIANT_D, config_from_dict, config_to_dict
from .corpus_io import DepTypeInventory, EmbeddingTable, Vocabulary
from .errors import FormatError
from .network import ModelParams, TrainedModel
from .rae_pretrain import CompositionParams
from .tensor_core import assert_finite, parameter
from .tree_conv import CWindowParams, DWindowParams

MAGIC = b"treeconv-checkpoint\n"
FORMAT_VERSION = 1


def _array_entries(model: TrainedModel) -> List[Tuple[str, np.ndarray]]:
    entries = [(name, t.data) for name, t in model.params.named()
               if name != "embeddings"]
    if model.rae is not None:
        entries.extend((name, t.data) for name, t in model.rae.named())
    entries.append(("table", model.table.vectors))
    return entries


def save_checkpoint(model: TrainedModel, path) -> None:
    entries = _array_entries(model)
    for name, arr in entries:
        assert_finite(arr, f"checkpoint array {name}")
    header = {
        "format_version": FORMAT_VERSION,
        "variant": model.variant,
        "config": config_to_dict(model.config),
        "label_names": model.label_names,
        "vocabulary": {
            "tokens": model.vocab.tokens_in_order(),
            "unk_index": model.vocab.unk_index,
        },
        "inventory": None if model.inventory is None else {
            "dedicated": list(model.inventory.dedicated),
        },
        "has_rae": model.rae is not None,
        "train_embeddings_stored": model.params.embeddings is not None,
        "arrays": [{"name": name, "shape": list(arr.shape)}
                   for name, arr in entries],
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(blob)}\n".encode("ascii"))
        fh.write(blob)
        fh.write(b"\n")
        for _, arr in entries:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> TrainedModel:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise FormatError(f"{path} is not a treeconv checkpoint")
        length_line = fh.readline()
        try:
            header_len = int(length_line.strip())
        except ValueError:
            raise FormatError(f"{path}: malformed header length")
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise FormatError(f"{path}: malformed checkpoint header")
        if fh.read(1) != b"\n":
            raise FormatError(f"{path}: header/payload separator missing")

        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise FormatError(
                f"{path}: checkpoint format version {version} is not "
                f"supported (expected {FORMAT_VERSION})"
            )

        arrays: Dict[str, np.ndarray] = {}
        order = []
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise FormatError(f"{path}: truncated payload at {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            order.append(spec["name"])
        if fh.read(1) != b"":
            raise FormatError(f"{path}: trailing bytes after payload")

    config = config_from_dict(header["config"])
    if header["variant"] != config.variant:
        raise FormatError(f"{path}: variant tag disagrees with config")

    vocab = Vocabulary(
        index={tok: i for i, tok in enumerate(header["vocabulary"]["tokens"])},
        unk_index=header["vocabulary"]["unk_index"],
    )
    table = EmbeddingTable(arrays.pop("table"))

    inventory = None
    if header["inventory"] is not None:
        dedicated = tuple(header["inventory"]["dedicated"])
        inventory = DepTypeInventory(
            slot_ids={rel: i for i, rel in enumerate(dedicated)},
            shared_slot=len(dedicated),
            dedicated=dedicated,
        )

    rae = None
    if header["has_rae"]:
        rae = CompositionParams(
            W_comp=parameter(arrays.pop("rae.W_comp"), "rae.W_comp"),
            b_comp=parameter(arrays.pop("rae.b_comp"), "rae.b_comp"),
            W_rec=parameter(arrays.pop("rae.W_rec"), "rae.W_rec"),
            b_rec=parameter(arrays.pop("rae.b_rec"), "rae.b_rec"),
        )

    if config.variant == VARIANT_D:
        if inventory is None:
            raise FormatError(f"{path}: dependency checkpoint lacks inventory")
        rel_names = sorted(
            (name for name in arrays if name.startswith("conv.W_rel")),
            key=lambda n: int(n.removeprefix("conv.W_rel")),
        )
        if len(rel_names) != inventory.n_slots:
            raise FormatError(
                f"{path}: {len(rel_names)} relation matrices for "
                f"{inventory.n_slots} inventory slots"
            )
        conv = DWindowParams(
            W_p=parameter(arrays.pop("conv.W_p"), "conv.W_p"),
            W_rel=[parameter(arrays.pop(n), n) for n in rel_names],
            b=parameter(arrays.pop("conv.b"), "conv.b"),
        )
    else:
        conv = CWindowParams(
            W_p=parameter(arrays.pop("conv.W_p"), "conv.W_p"),
            W_l=parameter(arrays.pop("conv.W_l"), "conv.W_l"),
            W_r=parameter(arrays.pop("conv.W_r"), "conv.W_r"),
            b=parameter(arrays.pop("conv.b"), "conv.b"),
        )

    head = HeadParams(
        W_h=parameter(arrays.pop("head.W_h"), "head.W_h"),
        b_h=parameter(arrays.pop("head.b_h"), "head.b_h"),
        W_o=parameter(arrays.pop("head.W_o"), "head.W_o"),
        b_o=parameter(arrays.pop("head.b_o"), "head.b_o"),
    )
    embeddings = None
    if header.get("train_embeddings_stored"):
        embeddings = parameter(table.vectors.copy(), "embeddings")
    params = ModelParams(config.variant, conv, head, embeddings)

    _validate_shapes(config, params, table, inventory)
    model = TrainedModel(config=config, params=params, vocab=vocab,
                         table=table, inventory=inventory, rae=rae,
                         label_names=header["label_names"])
    return model


def _validate_shapes(config, params: ModelParams, table: EmbeddingTable,
                     inventory) -> None:
    from .network import slot_count

    problems = []
    n_c, n_e, n_h = config.n_c, config.n_e, config.n_h
    if params.conv.W_p.data.shape != (n_c, n_e):
        problems.append(f"conv.W_p {params.conv.W_p.data.shape} != ({n_c}, {n_e})")
    if params.head.W_h.data.shape != (n_h, slot_count(config) * n_c):
        problems.append(
            f"head.W_h {params.head.W_h.data.shape} != "
            f"({n_h}, {slot_count(config) * n_c})"
        )
    if params.head.W_o.data.shape != (config.classes, n_h):
        problems.append(
            f"head.W_o {params.head.W_o.data.shape} != ({config.classes}, {n_h})"
        )
    if table.dim != n_e:
        problems.append(f"table dim {table.dim} != n_e {n_e}")
    if problems:
        raise FormatError("checkpoint shapes do not validate: "
                          + "; ".join(problems))
