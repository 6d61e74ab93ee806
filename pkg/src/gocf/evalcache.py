"""Append-only, CRC-checksummed store for position evaluations.

File layout, repeated records, all integers little-endian:

    offset  size  field
    0       8     position hash (uint64)
    8       1     side to move (0 black, 1 white)
    9       2     komi in half points (int16)
    11      1     ruleset (0 japanese, 1 chinese)
    12      4     visits (uint32)
    16      2     engine id length E (uint16)
    18      4     payload length P (uint32)
    22      E     engine id (utf-8)
    22+E    P     evaluation payload (utf-8 JSON)
    22+E+P  4     crc32 over bytes [0, 22+E+P) of the record (uint32)

A truncated or checksum-failing tail record is discarded on open, which makes
interrupted writers safe: the next run simply re-evaluates the lost entry.
"""

from __future__ import annotations

import struct
import threading
import zlib
from pathlib import Path

from .engine import Evaluation

_HEADER = struct.Struct("<QBhBIHI")

_RULESETS = {"japanese": 0, "chinese": 1}
_SIDES = {"black": 0, "white": 1}


def cache_key(position_hash: int, to_move: str, komi: float, ruleset: str,
              visits: int, engine_id: str) -> tuple:
    half_komi = round(komi * 2)
    if abs(half_komi - komi * 2) > 1e-9:
        raise ValueError(f"komi {komi} is not a half-point value")
    return (position_hash, _SIDES[to_move], half_komi, _RULESETS[ruleset],
            visits, engine_id)


class EvalCache:
    """Keyed evaluation store backed by the append-only log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[tuple, Evaluation] = {}
        self._lock = threading.Lock()
        self._fh = None
        self._load()
        self._fh = open(self.path, "ab")

    def _load(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists():
            self.path.touch()
            return
        data = self.path.read_bytes()
        pos = 0
        good_end = 0
        while pos + _HEADER.size <= len(data):
            (phash, side, half_komi, ruleset, visits,
             eng_len, pay_len) = _HEADER.unpack_from(data, pos)
            end = pos + _HEADER.size + eng_len + pay_len + 4
            if end > len(data):
                break
            body_end = end - 4
            (crc,) = struct.unpack_from("<I", data, body_end)
            if zlib.crc32(data[pos:body_end]) != crc:
                break
            eng_start = pos + _HEADER.size
            engine_id = data[eng_start:eng_start + eng_len].decode("utf-8")
            payload = data[eng_start + eng_len:body_end].decode("utf-8")
            key = (phash, side, half_komi, ruleset, visits, engine_id)
            self._entries[key] = Evaluation.from_payload(payload)
            pos = end
            good_end = end
        if good_end < len(data):
            # drop the torn tail so appends start from a clean boundary
            with open(self.path, "r+b") as fh:
                fh.truncate(good_end)

    def get(self, key: tuple) -> Evaluation | None:
        return self._entries.get(key)

    def put(self, key: tuple, evaluation: Evaluation) -> None:
        phash, side, half_komi, ruleset, visits, engine_id = key
        eng = engine_id.encode("utf-8")
        payload = evaluation.to_payload().encode("utf-8")
        header = _HEADER.pack(phash, side, half_komi, ruleset, visits,
                              len(eng), len(payload))
        body = header + eng + payload
        rec = body + struct.pack("<I", zlib.crc32(body))
        with self._lock:
            self._entries[key] = evaluation
            self._fh.write(rec)
            self._fh.flush()

    def __len__(self) -> int:
        return len(self._entries)

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
