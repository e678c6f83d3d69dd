"""Binary checkpoint files.

Layout (all integers little-endian)::

    b"KDEH"  u32 version
    repeated records:
        u32 name length, UTF-8 name, u8 rank, rank x u64 dims, float32 payload
    u32 CRC-32 of every preceding byte

Non-tensor metadata (config echo, generator state) is JSON stored as a rank-1
record of byte values; float32 holds every value in 0..255 exactly.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CorruptFile, VersionMismatch
from .net.model import ModelSpec
from .train import TrainConfig, TrainState

MAGIC = b"KDEH"
VERSION = 1


def _encode_json(obj) -> np.ndarray:
    return np.frombuffer(json.dumps(obj, sort_keys=True).encode("utf-8"), dtype=np.uint8)


def _decode_json(arr: np.ndarray):
    return json.loads(bytes(arr.astype(np.uint8)).decode("utf-8"))


def write_records(path: str | Path, records: dict[str, np.ndarray], version: int = VERSION):
    out = bytearray(MAGIC)
    out += struct.pack("<I", version)
    for name, arr in records.items():
        arr = np.asarray(arr)
        raw = name.encode("utf-8")
        out += struct.pack("<I", len(raw)) + raw
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}Q", *arr.shape)
        out += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    out += struct.pack("<I", zlib.crc32(out))
    with open(path, "wb") as f:
        f.write(out)


def read_records(path: str | Path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise CorruptFile(f"{path}: not a checkpoint file")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise VersionMismatch(f"{path}: checkpoint version {version}, expected {VERSION}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptFile(f"{path}: checksum mismatch")
    records = {}
    pos = 8
    try:
        while pos < len(body):
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            name = body[pos : pos + n].decode("utf-8")
            pos += n
            (rank,) = struct.unpack_from("<B", body, pos)
            pos += 1
            dims = struct.unpack_from(f"<{rank}Q", body, pos)
            pos += 8 * rank
            count = int(np.prod(dims, dtype=np.int64))
            if pos + 4 * count > len(body):
                raise CorruptFile(f"{path}: record {name!r} overruns the file")
            records[name] = np.frombuffer(body, dtype="<f4", count=count, offset=pos).reshape(dims)
            pos += 4 * count
    except (struct.error, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from None
    return records


def save_checkpoint(state: TrainState, path: str | Path) -> None:
    records = {
        "meta.config": _encode_json(
            {"train": vars(state.config), "model": vars(state.spec)}
        ),
        "meta.rng": _encode_json(state.rng.bit_generator.state),
        "meta.epoch": np.array(state.epoch, dtype=np.float64),
    }
    for kind, group in (("param", state.params), ("buffer", state.buffers), ("opt", state.opt)):
        for name, arr in group.items():
            records[f"{kind}.{name}"] = arr
    write_records(path, records)


def load_checkpoint(path: str | Path) -> TrainState:
    records = read_records(path)
    try:
        meta = _decode_json(records.pop("meta.config"))
        rng_state = _decode_json(records.pop("meta.rng"))
        epoch = int(records.pop("meta.epoch"))
    except (KeyError, ValueError) as exc:
        raise CorruptFile(f"{path}: bad metadata ({exc})") from None
    config = TrainConfig(**meta["train"])
    spec = ModelSpec(**meta["model"])
    groups = {"param": {}, "buffer": {}, "opt": {}}
    for name, arr in records.items():
        kind, _, key = name.partition(".")
        if kind not in groups:
            raise CorruptFile(f"{path}: unexpected record {name!r}")
        groups[kind][key] = arr.astype(np.float32)
    bitgen = getattr(np.random, rng_state["bit_generator"])()
    bitgen.state = rng_state
    return TrainState(
        config=config,
        spec=spec,
        params=groups["param"],
        buffers=groups["buffer"],
        opt=groups["opt"],
        rng=np.random.Generator(bitgen),
        epoch=epoch,
    )
