"""Scene-log serialization: exact round trips and malformed-input handling."""

import numpy as np
import pytest

from trafficlab.config import ExpertConfig
from trafficlab.dynamics import Limits
from trafficlab.errors import LogFormatError
from trafficlab.world import gen_expert_log, gen_map, map_spec, read_log, write_log


@pytest.fixture(scope="module")
def log():
    spec = map_spec("straight", {"length": 120.0, "lanes": 2, "lane_width": 3.5}, 0)
    graph = gen_map(spec)
    return gen_expert_log(graph, spec, ExpertConfig(), Limits(), 13, 90, 6)


def assert_logs_identical(a, b):
    assert a.map_spec == b.map_spec
    assert a.map_id == b.map_id
    assert a.dt == b.dt
    assert a.n_steps == b.n_steps
    assert a.metadata == b.metadata
    for fa, fb in zip(a.steps, b.steps):
        assert fa.keys() == fb.keys()
        for aid in fa:
            sa, sb = fa[aid], fb[aid]
            # bit-exact float round trip
            assert (sa.x, sa.y, sa.heading, sa.speed) == (sb.x, sb.y, sb.heading, sb.speed)
            assert (sa.length, sa.width) == (sb.length, sb.width)


def test_text_round_trip_bit_exact(log, tmp_path):
    p = tmp_path / "scene.log"
    write_log(log, p)
    assert_logs_identical(log, read_log(p))


def test_binary_round_trip_bit_exact(log, tmp_path):
    p = tmp_path / "scene.slz"
    write_log(log, p, binary=True)
    assert p.read_bytes()[:4] == b"SLZ1"
    assert_logs_identical(log, read_log(p))
    # binary framing is smaller than the text payload
    q = tmp_path / "scene.log"
    write_log(log, q)
    assert p.stat().st_size < q.stat().st_size


def test_missing_magic_reports_offset_zero(tmp_path):
    p = tmp_path / "bad.log"
    p.write_text("not a log\n")
    with pytest.raises(LogFormatError) as ei:
        read_log(p)
    assert ei.value.offset == 0


def test_bad_step_json_reports_byte_offset(log, tmp_path):
    p = tmp_path / "scene.log"
    write_log(log, p)
    raw = p.read_bytes()
    lines = raw.split(b"\n")
    target = next(i for i, l in enumerate(lines) if l.startswith(b'{"s"') or l.startswith(b'{"t"'))
    offset = sum(len(l) + 1 for l in lines[:target])
    lines[target] = lines[target][:-1] + b","  # break the JSON
    p.write_bytes(b"\n".join(lines))
    with pytest.raises(LogFormatError) as ei:
        read_log(p)
    assert ei.value.offset == offset


def test_out_of_order_steps_rejected(log, tmp_path):
    p = tmp_path / "scene.log"
    write_log(log, p)
    text = p.read_text().replace('{"s"', '{"s"', 1)
    lines = text.split("\n")
    i0 = next(i for i, l in enumerate(lines) if l.startswith('{"s"'))
    lines[i0], lines[i0 + 1] = lines[i0 + 1], lines[i0]
    p.write_text("\n".join(lines))
    with pytest.raises(LogFormatError, match="out of order"):
        read_log(p)


def test_unknown_section_skipped_with_warning(log, tmp_path):
    p = tmp_path / "scene.log"
    write_log(log, p)
    lines = p.read_text().split("\n")
    lines.insert(1, '{"x": 1}')
    lines.insert(1, "#% SECTION annotations")
    p.write_text("\n".join(lines))
    with pytest.warns(UserWarning, match="annotations"):
        out = read_log(p)
    assert_logs_identical(log, out)


def test_truncated_log_rejected(log, tmp_path):
    p = tmp_path / "scene.log"
    write_log(log, p)
    text = p.read_text()
    p.write_text(text[: len(text) // 2])
    with pytest.raises(LogFormatError):
        read_log(p)


def test_corrupt_binary_frame(log, tmp_path):
    p = tmp_path / "scene.slz"
    write_log(log, p, binary=True)
    raw = bytearray(p.read_bytes())
    raw[20] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(LogFormatError):
        read_log(p)
    p.write_bytes(bytes(raw[:8]))
    with pytest.raises(LogFormatError):
        read_log(p)


def test_unsupported_binary_version(log, tmp_path):
    p = tmp_path / "scene.slz"
    write_log(log, p, binary=True)
    raw = bytearray(p.read_bytes())
    raw[4] = 9
    p.write_bytes(bytes(raw))
    with pytest.raises(LogFormatError, match="version"):
        read_log(p)
