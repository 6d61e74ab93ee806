"""SGF (FF[3]/FF[4]) reading and writing for Go game records.

Only the main line of play is extracted; variations are dropped. Two-letter
coordinates map 'a'..'s' to columns/rows 0..18 (column letter first). On
boards up to 19x19 the value ``tt`` (or an empty value) encodes a pass.
"""

from __future__ import annotations

import hashlib
import re

from .record import GameDate, GameRecord, Move


class SgfParseError(Exception):
    """Structural SGF failure; ``offset`` is the byte position in the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


_COORD_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_IDENT_RE = re.compile(rb"[A-Za-z]+")
_WS = b" \t\r\n"


def point_from_letters(value: str, board_size: int = 19) -> tuple[int, int] | None:
    """SGF letter pair -> (col, row); '' and 'tt' (size <= 19) are a pass."""
    if value == "":
        return None
    if value == "tt" and board_size <= 19:
        return None
    if len(value) != 2:
        raise ValueError(f"bad coordinate {value!r}")
    col = _COORD_LETTERS.find(value[0])
    row = _COORD_LETTERS.find(value[1])
    if not (0 <= col < board_size and 0 <= row < board_size):
        raise ValueError(f"coordinate {value!r} outside {board_size}x{board_size}")
    return col, row


def point_to_letters(point: tuple[int, int] | None) -> str:
    if point is None:
        return "tt"
    col, row = point
    return _COORD_LETTERS[col] + _COORD_LETTERS[row]


class _Scanner:
    """Tokenizer over raw SGF bytes, tracking offsets for error reporting."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.data) and self.data[self.pos] in _WS:
            self.pos += 1

    def peek(self) -> int | None:
        self.skip_ws()
        if self.pos >= len(self.data):
            return None
        return self.data[self.pos]

    def expect(self, char: bytes):
        got = self.peek()
        if got != char[0]:
            raise SgfParseError(f"expected {char.decode()!r}", self.pos)
        self.pos += 1

    def read_ident(self) -> str:
        m = _IDENT_RE.match(self.data, self.pos)
        if not m:
            raise SgfParseError("expected property identifier", self.pos)
        self.pos = m.end()
        # lowercase letters in identifiers are an FF[3] relic; drop them
        return re.sub(r"[a-z]", "", m.group().decode("ascii"))

    def read_value(self) -> str:
        self.expect(b"[")
        chunks = []
        data = self.data
        while True:
            if self.pos >= len(data):
                raise SgfParseError("unterminated property value", self.pos)
            b = data[self.pos]
            if b == 0x5C:  # backslash escape
                if self.pos + 1 >= len(data):
                    raise SgfParseError("dangling escape", self.pos)
                chunks.append(data[self.pos + 1: self.pos + 2])
                self.pos += 2
            elif b == 0x5D:  # ]
                self.pos += 1
                break
            else:
                chunks.append(data[self.pos: self.pos + 1])
                self.pos += 1
        raw = b"".join(chunks)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            return raw.decode("latin-1")


def _parse_node(scanner: _Scanner) -> dict[str, list[str]]:
    props: dict[str, list[str]] = {}
    while True:
        c = scanner.peek()
        if c is None or c in (0x3B, 0x28, 0x29):  # ; ( )
            return props
        ident = scanner.read_ident()
        values = []
        while scanner.peek() == 0x5B:  # [
            values.append(scanner.read_value())
        if not values:
            raise SgfParseError(f"property {ident} without value", scanner.pos)
        props.setdefault(ident, []).extend(values)


def _parse_gametree(scanner: _Scanner) -> list[dict[str, list[str]]]:
    """Parse one '(...)' tree, returning the main-line node list."""
    scanner.expect(b"(")
    nodes: list[dict[str, list[str]]] = []
    saw_variation = False
    while True:
        c = scanner.peek()
        if c is None:
            raise SgfParseError("unterminated game tree", scanner.pos)
        if c == 0x3B:  # ;
            scanner.pos += 1
            node = _parse_node(scanner)
            if not saw_variation:
                nodes.append(node)
        elif c == 0x28:  # ( nested variation: keep only the first
            subtree = _parse_gametree(scanner)
            if not saw_variation:
                nodes.extend(subtree)
            saw_variation = True
        elif c == 0x29:  # )
            scanner.pos += 1
            return nodes
        else:
            raise SgfParseError("unexpected character in game tree", scanner.pos)


def _parse_result(value: str | None) -> str:
    if not value:
        return "unknown"
    v = value.strip().upper()
    if v.startswith("B+"):
        return "black-win"
    if v.startswith("W+"):
        return "white-win"
    if v in ("0", "DRAW", "JIGO"):
        return "draw"
    return "unknown"


def _first_value(props: dict[str, list[str]], key: str) -> str | None:
    vals = props.get(key)
    return vals[0] if vals else None


def record_content_id(date_raw: str, black_id: str, white_id: str, result: str,
                      komi: float, setup, moves) -> str:
    """Stable id from game content (ignores file provenance)."""
    h = hashlib.blake2b(digest_size=8)
    setup_part = ";".join(f"{c}{point_to_letters(p)}" for c, p in setup)
    move_part = ";".join(f"{m.color[0]}{point_to_letters(m.point)}" for m in moves)
    h.update("|".join([date_raw, black_id, white_id, result, repr(komi),
                       setup_part, move_part]).encode("utf-8"))
    return h.hexdigest()


def parse_sgf(data: bytes, source_path: str = "<memory>") -> list[GameRecord]:
    """Parse one SGF document (possibly several game trees) into records.

    Malformed structure raises SgfParseError with a byte offset. Records with
    a board size other than 19 are returned as-is (their moves list is kept
    empty); downstream ingestion marks them out-of-scope.
    """
    scanner = _Scanner(data)
    records = []
    index = 0
    while True:
        c = scanner.peek()
        if c is None:
            break
        if c != 0x28:
            raise SgfParseError("expected '(' to open a game tree", scanner.pos)
        tree_offset = scanner.pos
        nodes = _parse_gametree(scanner)
        if not nodes:
            raise SgfParseError("empty game tree", tree_offset)
        records.append(_record_from_nodes(nodes, source_path, index, tree_offset))
        index += 1
    if not records:
        raise SgfParseError("no game tree found", 0)
    return records


def _record_from_nodes(nodes, source_path: str, index: int, offset: int) -> GameRecord:
    root = nodes[0]
    try:
        board_size = int(_first_value(root, "SZ") or "19")
    except ValueError:
        raise SgfParseError("unreadable SZ property", offset)

    date = GameDate.parse(_first_value(root, "DT"))
    black_id = (_first_value(root, "PB") or "?").strip()
    white_id = (_first_value(root, "PW") or "?").strip()
    result = _parse_result(_first_value(root, "RE"))
    komi_raw = _first_value(root, "KM")
    try:
        komi = float(komi_raw) if komi_raw not in (None, "") else 6.5
    except ValueError:
        komi = 6.5

    setup: list[tuple[str, tuple[int, int]]] = []
    moves: list[Move] = []
    if board_size == 19:
        for node in nodes:
            for key, color in (("AB", "black"), ("AW", "white")):
                for v in node.get(key, ()):
                    try:
                        pt = point_from_letters(v, board_size)
                    except ValueError as exc:
                        raise SgfParseError(str(exc), offset) from None
                    if pt is not None:
                        setup.append((color, pt))
            for key, color in (("B", "black"), ("W", "white")):
                for v in node.get(key, ()):
                    try:
                        pt = point_from_letters(v, board_size)
                    except ValueError as exc:
                        raise SgfParseError(str(exc), offset) from None
                    moves.append(Move(number=len(moves) + 1, color=color, point=pt))

    game_id = record_content_id(date.raw(), black_id, white_id, result, komi,
                                setup, moves)
    return GameRecord(
        game_id=game_id,
        date=date,
        black_id=black_id,
        white_id=white_id,
        result=result,
        komi=komi,
        board_size=board_size,
        setup_stones=setup,
        moves=moves,
        source_path=f"{source_path}#{index}" if index else source_path,
    )


def _escape_text(value: str) -> str:
    return value.replace("\\", "\\\\").replace("]", "\\]")


_RESULT_TO_SGF = {"black-win": "B+", "white-win": "W+", "draw": "0", "unknown": "?"}


def serialize_record(record: GameRecord) -> bytes:
    """Emit one record as a single-tree SGF document."""
    parts = [f"(;FF[4]GM[1]SZ[{record.board_size}]"]
    if record.date.year is not None:
        parts.append(f"DT[{record.date.raw()}]")
    parts.append(f"PB[{_escape_text(record.black_id)}]")
    parts.append(f"PW[{_escape_text(record.white_id)}]")
    parts.append(f"KM[{record.komi:g}]")
    parts.append(f"RE[{_RESULT_TO_SGF[record.result]}]")
    blacks = [point_to_letters(p) for c, p in record.setup_stones if c == "black"]
    whites = [point_to_letters(p) for c, p in record.setup_stones if c == "white"]
    if blacks:
        parts.append("AB" + "".join(f"[{v}]" for v in blacks))
    if whites:
        parts.append("AW" + "".join(f"[{v}]" for v in whites))
    for move in record.moves:
        tag = "B" if move.color == "black" else "W"
        parts.append(f";{tag}[{point_to_letters(move.point)}]")
    parts.append(")")
    return "".join(parts).encode("utf-8")
