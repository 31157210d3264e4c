"""CVXM checkpoint container for the MLP and the classical baselines.

Layout (little-endian):
    magic "CVXM" | version u16
    config_len u32 | config JSON (flat string->string map, sorted keys)
    tensor_count u32
    per tensor: name_len u16, name UTF-8, ndim u8, ndim x (dim u32),
                float32 row-major payload

Tensors are stored float32. The MLP keeps float32 tensors in memory, so
load(save(model)) reproduces the exact same values and a second save is
byte-identical. Baselines compute in float64 and are rounded to float32
here at the file boundary; saving a loaded baseline is byte-stable.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .baselines import BaselineModel
from .errors import DataError, FormatError
from .model import LayerParams, ModelParams, N_BLOCKS

CVXM_MAGIC = b"CVXM"
CVXM_VERSION = 1


def save_checkpoint(path: str | Path, config: dict[str, str],
                    tensors: dict[str, np.ndarray]) -> None:
    for k, v in config.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise FormatError("config must map strings to strings")
    buf = bytearray()
    buf += CVXM_MAGIC
    buf += struct.pack("<H", CVXM_VERSION)
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf += struct.pack("<I", len(blob))
    buf += blob
    buf += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        t = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = name.encode("utf-8")
        buf += struct.pack("<H", len(raw))
        buf += raw
        buf += struct.pack("<B", t.ndim)
        for d in t.shape:
            buf += struct.pack("<I", d)
        buf += t.tobytes()
    Path(path).write_bytes(bytes(buf))


def load_checkpoint(path: str | Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"cannot read checkpoint file {path}: {e}") from None
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"truncated {what}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4, "header") != CVXM_MAGIC:
        raise FormatError("bad magic")
    (version,) = struct.unpack("<H", take(2, "header"))
    if version != CVXM_VERSION:
        raise FormatError(f"unsupported version {version}")
    (clen,) = struct.unpack("<I", take(4, "header"))
    try:
        config = json.loads(take(clen, "config block").decode("utf-8"))
    except json.JSONDecodeError:
        raise FormatError("malformed config block") from None
    (count,) = struct.unpack("<I", take(4, "header"))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2, "tensor table"))
        name = take(nlen, "tensor table").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, "tensor table"))
        shape = tuple(struct.unpack("<I", take(4, "tensor table"))[0]
                      for _ in range(ndim))
        size = int(np.prod(shape)) if shape else 1
        raw = take(size * 4, "tensor payload")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(
            np.float32)
    if pos != len(data):
        raise FormatError(f"count mismatch: {len(data) - pos} trailing bytes")
    return config, tensors


def save_model(path: str | Path, params: ModelParams,
               extra: dict[str, str] | None = None) -> None:
    config = {
        "kind": "mlp",
        "input_dim": str(params.input_dim),
        "hidden_dim": str(params.hidden_dim),
        "output_dim": str(params.output_dim),
        "leaky_slope": repr(params.leaky_slope),
        "dropout_p": repr(params.dropout_p),
    }
    config.update(extra or {})
    tensors: dict[str, np.ndarray] = {}
    for i, L in enumerate(params.layers, start=1):
        tensors[f"w{i}"] = L.w
        tensors[f"b{i}"] = L.b
        if L.has_bn:
            tensors[f"gamma{i}"] = L.gamma
            tensors[f"beta{i}"] = L.beta
            tensors[f"rmean{i}"] = L.running_mean
            tensors[f"rvar{i}"] = L.running_var
    save_checkpoint(path, config, tensors)


def _model_from(config: dict[str, str],
                tensors: dict[str, np.ndarray]) -> ModelParams:
    try:
        layers = []
        for i in range(1, N_BLOCKS + 1):
            if i < N_BLOCKS:
                layers.append(LayerParams(
                    w=tensors[f"w{i}"], b=tensors[f"b{i}"],
                    gamma=tensors[f"gamma{i}"], beta=tensors[f"beta{i}"],
                    running_mean=tensors[f"rmean{i}"],
                    running_var=tensors[f"rvar{i}"],
                ))
            else:
                layers.append(LayerParams(w=tensors[f"w{i}"], b=tensors[f"b{i}"]))
        return ModelParams(
            layers=layers,
            input_dim=int(config["input_dim"]),
            hidden_dim=int(config["hidden_dim"]),
            output_dim=int(config["output_dim"]),
            leaky_slope=float(config["leaky_slope"]),
            dropout_p=float(config["dropout_p"]),
        )
    except KeyError as e:
        raise FormatError(f"checkpoint missing entry {e.args[0]!r}") from None


def save_baseline(path: str | Path, model: BaselineModel,
                  extra: dict[str, str] | None = None) -> None:
    config = {"kind": model.kind}
    tensors: dict[str, np.ndarray] = {}
    if model.kind == "linear":
        tensors["w"] = model.w
        tensors["b"] = np.array([model.b], dtype=np.float32)
    elif model.kind == "gnb":
        tensors["priors"] = model.priors
        tensors["means"] = model.means
        tensors["variances"] = model.variances
    elif model.kind == "svm_rbf":
        config["gamma"] = repr(model.gamma)
        tensors["sv"] = model.sv
        tensors["coef"] = model.coef
        tensors["b"] = np.array([model.b], dtype=np.float32)
    else:
        raise FormatError(f"unknown baseline kind {model.kind!r}")
    config.update(extra or {})
    save_checkpoint(path, config, tensors)


def _baseline_from(config: dict[str, str],
                   tensors: dict[str, np.ndarray]) -> BaselineModel:
    kind = config["kind"]
    try:
        if kind == "linear":
            return BaselineModel(kind="linear", w=tensors["w"],
                                 b=float(tensors["b"][0]))
        if kind == "gnb":
            return BaselineModel(kind="gnb", priors=tensors["priors"],
                                 means=tensors["means"],
                                 variances=tensors["variances"])
        if kind == "svm_rbf":
            return BaselineModel(kind="svm_rbf", sv=tensors["sv"],
                                 coef=tensors["coef"],
                                 b=float(tensors["b"][0]),
                                 gamma=float(config["gamma"]))
    except KeyError as e:
        raise FormatError(f"checkpoint missing entry {e.args[0]!r}") from None
    raise FormatError(f"unknown model kind {kind!r}")


def load_any(path: str | Path) -> tuple[ModelParams | BaselineModel, dict[str, str]]:
    """Load either model family; the config block's kind key dispatches."""
    config, tensors = load_checkpoint(path)
    kind = config.get("kind")
    if kind == "mlp":
        return _model_from(config, tensors), config
    return _baseline_from(config, tensors), config
