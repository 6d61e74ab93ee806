import struct

import pytest

from gocf.engine import Evaluation
from gocf.evalcache import EvalCache, cache_key


def _ev(best="dd", wr=0.52):
    return Evaluation(best_move=best, winrates={best: wr, "pass": 0.46},
                      visits_used=50, engine_id="mock-1")


def test_put_get_and_reopen(tmp_path):
    path = tmp_path / "c.cache"
    key = cache_key(0xDEADBEEF, "black", 6.5, "japanese", 50, "mock-1")
    with EvalCache(path) as cache:
        assert cache.get(key) is None
        cache.put(key, _ev())
        assert cache.get(key).best_move == "dd"
        assert len(cache) == 1
    with EvalCache(path) as cache:
        hit = cache.get(key)
        assert hit is not None
        assert hit.winrates == _ev().winrates
        assert hit.engine_id == "mock-1"


def test_distinct_keys_do_not_collide(tmp_path):
    with EvalCache(tmp_path / "c.cache") as cache:
        k1 = cache_key(1, "black", 6.5, "japanese", 50, "mock-1")
        k2 = cache_key(1, "white", 6.5, "japanese", 50, "mock-1")
        k3 = cache_key(1, "black", 7.5, "japanese", 50, "mock-1")
        k4 = cache_key(1, "black", 6.5, "chinese", 50, "mock-1")
        k5 = cache_key(1, "black", 6.5, "japanese", 100, "mock-1")
        k6 = cache_key(1, "black", 6.5, "japanese", 50, "other")
        for i, k in enumerate((k1, k2, k3, k4, k5, k6)):
            cache.put(k, _ev(wr=0.5 + i / 100))
        assert len({cache.get(k).winrates["dd"]
                    for k in (k1, k2, k3, k4, k5, k6)}) == 6


def test_overwrite_keeps_latest(tmp_path):
    path = tmp_path / "c.cache"
    key = cache_key(7, "black", 6.5, "japanese", 50, "mock-1")
    with EvalCache(path) as cache:
        cache.put(key, _ev(wr=0.51))
        cache.put(key, _ev(wr=0.52))
        assert cache.get(key).winrates["dd"] == 0.52
    with EvalCache(path) as cache:
        assert cache.get(key).winrates["dd"] == 0.52


def test_torn_tail_is_discarded_and_good_prefix_survives(tmp_path):
    path = tmp_path / "c.cache"
    key1 = cache_key(1, "black", 6.5, "japanese", 50, "mock-1")
    key2 = cache_key(2, "black", 6.5, "japanese", 50, "mock-1")
    with EvalCache(path) as cache:
        cache.put(key1, _ev(wr=0.51))
        cache.put(key2, _ev(wr=0.52))
    data = path.read_bytes()
    path.write_bytes(data[:-7])  # half-written final record
    with EvalCache(path) as cache:
        assert cache.get(key1) is not None
        assert cache.get(key2) is None
        cache.put(key2, _ev(wr=0.53))
    with EvalCache(path) as cache:
        assert cache.get(key1).winrates["dd"] == 0.51
        assert cache.get(key2).winrates["dd"] == 0.53


def test_corrupted_crc_truncates_from_bad_record(tmp_path):
    path = tmp_path / "c.cache"
    key1 = cache_key(1, "black", 6.5, "japanese", 50, "mock-1")
    key2 = cache_key(2, "black", 6.5, "japanese", 50, "mock-1")
    with EvalCache(path) as cache:
        cache.put(key1, _ev())
        first_len = path.stat().st_size
        cache.put(key2, _ev())
    data = bytearray(path.read_bytes())
    data[first_len + 30] ^= 0xFF  # flip a byte inside the second record
    path.write_bytes(bytes(data))
    with EvalCache(path) as cache:
        assert cache.get(key1) is not None
        assert cache.get(key2) is None


def test_documented_header_layout(tmp_path):
    path = tmp_path / "c.cache"
    key = cache_key(0x0123456789ABCDEF, "white", 7.5, "chinese", 400, "eng")
    with EvalCache(path) as cache:
        cache.put(key, _ev())
    raw = path.read_bytes()
    phash, side, half_komi, ruleset, visits, eng_len, pay_len = \
        struct.unpack_from("<QBhBIHI", raw, 0)
    assert phash == 0x0123456789ABCDEF
    assert side == 1
    assert half_komi == 15
    assert ruleset == 1
    assert visits == 400
    assert raw[22:22 + eng_len] == b"eng"
    assert len(raw) == 22 + eng_len + pay_len + 4


def test_non_half_point_komi_rejected():
    with pytest.raises(ValueError):
        cache_key(1, "black", 6.3, "japanese", 50, "mock-1")
