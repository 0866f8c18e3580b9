import struct

import numpy as np
import pytest
from mmreason.utils import (
    SEED_STREAMS,
    U16,
    U32,
    ByteReader,
    dump_json,
    read_json,
    read_jsonl,
    seed_streams,
    write_json,
    write_jsonl,
)


class TestSeedStreams:
    def test_named_streams(self):
        assert set(seed_streams(0)) == set(SEED_STREAMS)

    def test_deterministic(self):
        first, second = seed_streams(42), seed_streams(42)
        for name in SEED_STREAMS:
            assert np.array_equal(first[name].random(5), second[name].random(5))

    def test_streams_differ(self):
        draws = {
            name: rng.random(5).tobytes() for name, rng in seed_streams(42).items()
        }
        assert len(set(draws.values())) == len(SEED_STREAMS)
        assert seed_streams(43)["init"].random() != seed_streams(42)["init"].random()


def test_json_is_stable(tmp_path):
    assert dump_json({"b": 1, "a": "ü"}) == '{\n  "a": "ü",\n  "b": 1\n}\n'
    path = write_json({"x": [1.5, None]}, tmp_path / "sub" / "x.json")
    assert read_json(path) == {"x": [1.5, None]}


def test_jsonl(tmp_path):
    path = write_jsonl([{"id": "a"}, {"id": "b"}], tmp_path / "x.jsonl")
    assert path.read_text(encoding="utf-8") == '{"id": "a"}\n{"id": "b"}\n'
    assert read_jsonl(path) == [{"id": "a"}, {"id": "b"}]


class TestByteReader:
    def error(self, message, offset):
        return ValueError(f"{message} at {offset}")

    def test_reads_in_order(self):
        buffer = U16.pack(7) + U32.pack(9) + struct.pack("<2f", 1.5, -2.0)
        reader = ByteReader(buffer, self.error)
        assert reader.unpack(U16, "count") == 7
        assert reader.unpack(U32, "size") == 9
        values = reader.float32(2, "values")
        assert values.tolist() == [1.5, -2.0]
        assert values.flags.writeable
        assert reader.at_end

    def test_truncation_reports_offset(self):
        reader = ByteReader(U16.pack(1) + b"\x00", self.error)
        reader.unpack(U16, "count")
        message = "truncated size: need 4 bytes, 1 left at 2"
        with pytest.raises(ValueError, match=message):
            reader.unpack(U32, "size")
