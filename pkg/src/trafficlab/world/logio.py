"""Scene-log serialization.

Text layout (UTF-8, one JSON payload per line):

    #% SCENELOG 1
    #% SECTION header
    {"map_spec": ..., "map_id": ..., "dt": ..., "n_steps": ...,
     "agents": [[id, length, width], ...], "metadata": {...}}
    #% SECTION steps
    {"t": 0, "s": {"a00": [x, y, heading, speed], ...}}
    ...
    #% SECTION end

Floats survive the round trip bit-exactly (shortest-repr JSON encoding).
Unknown sections are skipped with a warning; malformed content raises
LogFormatError carrying the byte offset of the offending line.  The binary
variant wraps the same text in a zlib frame:
magic b"SLZ1" + version byte + 4-byte big-endian payload length + deflate data.
"""

import json
import os
import warnings
import zlib

from ..errors import LogFormatError
from .types import AgentState, SceneLog, validate_log

MAGIC_TEXT = "#% SCENELOG 1"
MAGIC_BIN = b"SLZ1"
BIN_VERSION = 1


def _to_text(log):
    agents = {}
    for frame in log.steps:
        for aid, st in frame.items():
            agents.setdefault(aid, (st.length, st.width))
    header = {
        "map_spec": log.map_spec,
        "map_id": log.map_id,
        "dt": log.dt,
        "n_steps": log.n_steps,
        "agents": [[aid, lw[0], lw[1]] for aid, lw in sorted(agents.items())],
        "metadata": log.metadata,
    }
    lines = [MAGIC_TEXT, "#% SECTION header", json.dumps(header, sort_keys=True),
             "#% SECTION steps"]
    for t, frame in enumerate(log.steps):
        states = {aid: [st.x, st.y, st.heading, st.speed] for aid, st in sorted(frame.items())}
        lines.append(json.dumps({"t": t, "s": states}, sort_keys=True))
    lines.append("#% SECTION end")
    return "\n".join(lines) + "\n"


def write_log(log, path, binary=False):
    """Serialize a SceneLog; `binary` selects the compressed framing."""
    text = _to_text(log)
    tmp = f"{path}.tmp.{os.getpid()}"
    if binary:
        payload = zlib.compress(text.encode("utf-8"), level=6)
        with open(tmp, "wb") as f:
            f.write(MAGIC_BIN)
            f.write(bytes([BIN_VERSION]))
            f.write(len(payload).to_bytes(4, "big"))
            f.write(payload)
    else:
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(text)
    os.replace(tmp, path)


def _parse_text(raw):
    lines = []
    offset = 0
    for line in raw.split("\n"):
        lines.append((offset, line))
        offset += len(line.encode("utf-8")) + 1
    if not lines or lines[0][1].strip() != MAGIC_TEXT:
        raise LogFormatError("missing scene-log magic line", offset=0)

    header = None
    step_rows = []
    section = None
    known = {"header", "steps", "end"}
    for off, line in lines[1:]:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#%"):
            parts = stripped.split()
            if len(parts) < 3 or parts[1] != "SECTION":
                raise LogFormatError(f"bad section marker: {stripped!r}", offset=off)
            section = parts[2]
            if section not in known:
                warnings.warn(f"skipping unknown scene-log section {section!r}")
            continue
        if section not in known:
            continue  # content of an unknown section
        if section == "header":
            if header is not None:
                raise LogFormatError("duplicate header payload", offset=off)
            try:
                header = json.loads(stripped)
            except json.JSONDecodeError as e:
                raise LogFormatError(f"bad header JSON: {e}", offset=off)
        elif section == "steps":
            try:
                row = json.loads(stripped)
            except json.JSONDecodeError as e:
                raise LogFormatError(f"bad step JSON: {e}", offset=off)
            if "t" not in row or "s" not in row:
                raise LogFormatError("step row missing 't' or 's'", offset=off)
            if row["t"] != len(step_rows):
                raise LogFormatError(
                    f"step index {row['t']} out of order (expected {len(step_rows)})",
                    offset=off,
                )
            step_rows.append((off, row))
        elif section == "end":
            raise LogFormatError("content after end marker", offset=off)

    if header is None:
        raise LogFormatError("log has no header section", offset=0)
    if section != "end":
        raise LogFormatError("log truncated: no end marker", offset=len(raw.encode("utf-8")))

    dims = {}
    for entry in header.get("agents", []):
        if len(entry) != 3:
            raise LogFormatError(f"bad agent entry {entry!r}", offset=0)
        dims[entry[0]] = (float(entry[1]), float(entry[2]))

    steps = []
    for off, row in step_rows:
        frame = {}
        for aid, vals in row["s"].items():
            if aid not in dims:
                raise LogFormatError(f"step references unknown agent {aid!r}", offset=off)
            if len(vals) != 4:
                raise LogFormatError(f"bad state vector for {aid!r}", offset=off)
            length, width = dims[aid]
            try:
                frame[aid] = AgentState(aid, vals[0], vals[1], vals[2], vals[3], length, width)
            except Exception as e:
                raise LogFormatError(f"invalid state for {aid!r}: {e}", offset=off)
        steps.append(frame)
    if len(steps) != header.get("n_steps"):
        raise LogFormatError(
            f"header claims {header.get('n_steps')} steps, found {len(steps)}", offset=0
        )

    log = SceneLog(
        map_spec=header.get("map_spec", {}),
        map_id=header.get("map_id", ""),
        dt=header.get("dt", 0.1),
        steps=steps,
        metadata=header.get("metadata", {}),
    )
    validate_log(log)
    return log


def read_log(path):
    """Load a scene log, auto-detecting text vs binary framing."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] == MAGIC_BIN:
        if len(blob) < 9:
            raise LogFormatError("binary log truncated before frame header", offset=len(blob))
        version = blob[4]
        if version != BIN_VERSION:
            raise LogFormatError(f"unsupported binary log version {version}", offset=4)
        length = int.from_bytes(blob[5:9], "big")
        payload = blob[9 : 9 + length]
        if len(payload) != length:
            raise LogFormatError("binary log payload shorter than declared", offset=9)
        try:
            raw = zlib.decompress(payload).decode("utf-8")
        except (zlib.error, UnicodeDecodeError) as e:
            raise LogFormatError(f"binary log payload corrupt: {e}", offset=9)
        return _parse_text(raw)
    try:
        return _parse_text(blob.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise LogFormatError(f"log is neither framed nor UTF-8 text: {e}", offset=0)
