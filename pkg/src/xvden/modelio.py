"""Model files: a JSON header followed by a raw float64 parameter block.

Layout: u32 little-endian header length, the UTF-8 JSON header, then the
parameter block.  The header carries the architecture (kind, layer specs,
activations, concatenation order), the preprocessing fingerprint flags, and
a manifest of named parameters with byte offsets into the block.  Round
trips are bit-exact: parameters are written as raw little-endian float64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .archive import write_atomic
from .denoiser import DenoiserModel, StackedDaeModel
from .errors import FormatError
from .nnet import DenseLayer, Network
from .plda import Fingerprint, PldaModel

MODEL_FORMAT_VERSION = 1
HEADER_LEN = struct.Struct("<I")


def _fingerprint_header(fp: Fingerprint) -> dict:
    return {"center": fp.center, "length_norm": fp.length_norm, "has_mean": fp.mean is not None}


def _network_header(net: Network, prefix: str, params: list, offset: int) -> tuple[dict, int]:
    layers = []
    for i, layer in enumerate(net.layers):
        layers.append({"in_dim": layer.in_dim, "out_dim": layer.out_dim, "activation": layer.activation})
        for name, arr in ((f"{prefix}layer{i}.weights", layer.weights), (f"{prefix}layer{i}.bias", layer.bias)):
            params.append({"name": name, "shape": list(arr.shape), "offset": offset, "_arr": arr})
            offset += arr.size * 8
    return {"layers": layers}, offset


def save_model(model: DenoiserModel | PldaModel, path: str | Path) -> None:
    params: list[dict] = []
    offset = 0
    if isinstance(model, PldaModel):
        header: dict = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "plda",
            "dim": model.dim,
            "fingerprint": _fingerprint_header(model.fingerprint),
        }
        for name, arr in (("mu", model.mu), ("between", model.between), ("within", model.within)):
            params.append({"name": name, "shape": list(arr.shape), "offset": offset, "_arr": arr})
            offset += arr.size * 8
        if model.fingerprint.mean is not None:
            arr = model.fingerprint.mean
            params.append({"name": "fingerprint.mean", "shape": list(arr.shape), "offset": offset, "_arr": arr})
            offset += arr.size * 8
    elif isinstance(model, DenoiserModel):
        header = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": model.kind,
            "dim": model.dim,
            "concat_order": ["block_output", "residual"],
            "fingerprint": _fingerprint_header(model.fingerprint),
        }
        if model.kind == "dae":
            net_header, offset = _network_header(model.model, "", params, offset)
            header["network"] = net_header
        else:
            blocks = []
            for b, block in enumerate(model.model.blocks):
                block_header, offset = _network_header(block, f"block{b}.", params, offset)
                blocks.append(block_header)
            header["blocks"] = blocks
        if model.fingerprint.mean is not None:
            arr = model.fingerprint.mean
            params.append({"name": "fingerprint.mean", "shape": list(arr.shape), "offset": offset, "_arr": arr})
            offset += arr.size * 8
    else:
        raise FormatError(f"cannot serialize object of type {type(model).__name__}")

    arrays = [p.pop("_arr") for p in params]
    header["params"] = params
    header["param_count"] = offset // 8
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    block = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    write_atomic(path, HEADER_LEN.pack(len(header_bytes)) + header_bytes + block)


def _read_param(block: bytes, entry: dict, path) -> np.ndarray:
    shape = tuple(entry["shape"])
    count = int(np.prod(shape)) if shape else 1
    offset = entry["offset"]
    if offset + count * 8 > len(block):
        raise FormatError(f"{path}: parameter '{entry['name']}' overruns the block")
    arr = np.frombuffer(block, dtype="<f8", count=count, offset=offset)
    return arr.reshape(shape).astype(np.float64)


def _load_fingerprint(header: dict, by_name: dict) -> Fingerprint:
    fp = header.get("fingerprint", {})
    mean = by_name.get("fingerprint.mean")
    if fp.get("has_mean") and mean is None:
        raise FormatError("fingerprint declares a mean but the block has none")
    return Fingerprint(center=bool(fp.get("center")), length_norm=bool(fp.get("length_norm")), mean=mean)


def _load_network(net_header: dict, by_name: dict, prefix: str, path) -> Network:
    layers = []
    for i, spec in enumerate(net_header["layers"]):
        try:
            weights = by_name[f"{prefix}layer{i}.weights"]
            bias = by_name[f"{prefix}layer{i}.bias"]
        except KeyError as exc:
            raise FormatError(f"{path}: missing parameter {exc} for layer {i}") from exc
        if weights.shape != (spec["out_dim"], spec["in_dim"]):
            raise FormatError(f"{path}: layer {i} weight shape {weights.shape} != header spec")
        layers.append(DenseLayer(weights, bias, spec["activation"]))
    return Network(layers)


def load_model(path: str | Path) -> DenoiserModel | PldaModel:
    data = Path(path).read_bytes()
    if len(data) < HEADER_LEN.size:
        raise FormatError(f"{path}: truncated model file")
    (header_len,) = HEADER_LEN.unpack_from(data, 0)
    if HEADER_LEN.size + header_len > len(data):
        raise FormatError(f"{path}: header length {header_len} overruns the file")
    try:
        header = json.loads(data[HEADER_LEN.size : HEADER_LEN.size + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: invalid model header: {exc}") from exc
    version = header.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported model format version {version}")
    block = data[HEADER_LEN.size + header_len :]
    if len(block) % 8:
        raise FormatError(f"{path}: parameter block length {len(block)} is not a multiple of 8")
    if header.get("param_count") != len(block) // 8:
        raise FormatError(
            f"{path}: header declares {header.get('param_count')} parameters, block holds {len(block) // 8}"
        )
    by_name = {entry["name"]: _read_param(block, entry, path) for entry in header.get("params", [])}

    kind = header.get("kind")
    if kind == "plda":
        model = PldaModel(
            mu=by_name["mu"],
            between=by_name["between"],
            within=by_name["within"],
            fingerprint=_load_fingerprint(header, by_name),
        )
        return model
    if kind == "dae":
        net = _load_network(header["network"], by_name, "", path)
        return DenoiserModel(model=net, dim=header["dim"], fingerprint=_load_fingerprint(header, by_name))
    if kind == "stacked":
        blocks = [
            _load_network(block_header, by_name, f"block{b}.", path)
            for b, block_header in enumerate(header["blocks"])
        ]
        stacked = StackedDaeModel(blocks, header["dim"])
        return DenoiserModel(model=stacked, dim=header["dim"], fingerprint=_load_fingerprint(header, by_name))
    raise FormatError(f"{path}: unknown architecture tag '{kind}'")
