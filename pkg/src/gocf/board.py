"""19x19 Go rules engine: stone placement, captures, legality, simple ko, Zobrist hashing.

Boards are treated as immutable values: ``apply_move`` returns a new board.
Superko is deliberately not tracked (only the simple-ko point); suicide is
illegal. Zobrist keys are derived from a fixed splitmix64 stream so hashes
are bit-identical across runs and platforms.
"""

from __future__ import annotations

BOARD_SIZE = 19
N_POINTS = BOARD_SIZE * BOARD_SIZE

EMPTY, BLACK, WHITE = 0, 1, 2

_COLOR_NAMES = {BLACK: "black", WHITE: "white"}
_COLOR_CODES = {"black": BLACK, "white": WHITE, "b": BLACK, "w": WHITE}


class IllegalMoveError(Exception):
    """Base for move rejections; ``code`` distinguishes the rule violated."""

    code = "illegal"


class OccupiedPointError(IllegalMoveError):
    code = "occupied"


class SuicideError(IllegalMoveError):
    code = "suicide"


class KoError(IllegalMoveError):
    code = "ko"


def opponent(color: int) -> int:
    return BLACK + WHITE - color


def color_code(name: str) -> int:
    try:
        return _COLOR_CODES[name]
    except KeyError:
        raise ValueError(f"unknown color {name!r}") from None


def color_name(code: int) -> str:
    return _COLOR_NAMES[code]


def point_index(point: tuple[int, int]) -> int:
    col, row = point
    return row * BOARD_SIZE + col


def index_point(idx: int) -> tuple[int, int]:
    return idx % BOARD_SIZE, idx // BOARD_SIZE


_MASK64 = (1 << 64) - 1

# Zobrist key derivation: one splitmix64 stream from this seed. Draw order is
# (point 0 black, point 0 white, point 1 black, ...) over point indices
# 0..360, followed by the black-to-move key and the white-to-move key.
ZOBRIST_SEED = 0x9E3779B97F4A7C15


def _splitmix64_stream(seed: int, count: int) -> list[int]:
    out = []
    state = seed
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        out.append(z)
    return out


_KEYS = _splitmix64_stream(ZOBRIST_SEED, 2 * N_POINTS + 2)
POINT_KEYS = {
    BLACK: tuple(_KEYS[2 * i] for i in range(N_POINTS)),
    WHITE: tuple(_KEYS[2 * i + 1] for i in range(N_POINTS)),
}
TO_MOVE_KEYS = {BLACK: _KEYS[2 * N_POINTS], WHITE: _KEYS[2 * N_POINTS + 1]}

_NEIGHBORS: list[tuple[int, ...]] = []
for _idx in range(N_POINTS):
    _col, _row = _idx % BOARD_SIZE, _idx // BOARD_SIZE
    _adj = []
    if _col > 0:
        _adj.append(_idx - 1)
    if _col < BOARD_SIZE - 1:
        _adj.append(_idx + 1)
    if _row > 0:
        _adj.append(_idx - BOARD_SIZE)
    if _row < BOARD_SIZE - 1:
        _adj.append(_idx + BOARD_SIZE)
    _NEIGHBORS.append(tuple(_adj))
NEIGHBORS = tuple(_NEIGHBORS)
del _NEIGHBORS, _idx, _col, _row, _adj


def _group_and_liberty(grid: bytearray, start: int) -> tuple[list[int], bool]:
    """Flood-fill the group at ``start``; returns (members, has_liberty)."""
    color = grid[start]
    seen = {start}
    stack = [start]
    members = []
    has_lib = False
    while stack:
        idx = stack.pop()
        members.append(idx)
        for n in NEIGHBORS[idx]:
            v = grid[n]
            if v == EMPTY:
                has_lib = True
            elif v == color and n not in seen:
                seen.add(n)
                stack.append(n)
    return members, has_lib


def _has_liberty(grid: bytearray, start: int) -> bool:
    """Early-exit liberty test for the group at ``start``."""
    color = grid[start]
    seen = {start}
    stack = [start]
    while stack:
        idx = stack.pop()
        for n in NEIGHBORS[idx]:
            v = grid[n]
            if v == EMPTY:
                return True
            if v == color and n not in seen:
                seen.add(n)
                stack.append(n)
    return False


class Board:
    """Immutable 19x19 position: grid, side to move, simple-ko point, hash."""

    __slots__ = ("grid", "to_move", "simple_ko_point", "zobrist", "move_count")

    def __init__(self, grid: bytearray, to_move: int, simple_ko_point: int | None,
                 zobrist: int, move_count: int):
        self.grid = grid
        self.to_move = to_move
        self.simple_ko_point = simple_ko_point
        self.zobrist = zobrist
        self.move_count = move_count

    @classmethod
    def empty(cls, to_move: int = BLACK) -> "Board":
        return cls(bytearray(N_POINTS), to_move, None, TO_MOVE_KEYS[to_move], 0)

    @classmethod
    def with_setup(cls, setup_stones, to_move: int = BLACK) -> "Board":
        """Start position with pre-placed stones (no captures applied)."""
        grid = bytearray(N_POINTS)
        z = TO_MOVE_KEYS[to_move]
        for color, point in setup_stones:
            c = color_code(color) if isinstance(color, str) else color
            idx = point_index(point)
            if grid[idx] != EMPTY:
                raise ValueError(f"setup stone on occupied point {point}")
            grid[idx] = c
            z ^= POINT_KEYS[c][idx]
        return cls(grid, to_move, None, z, 0)

    def stone_at(self, point: tuple[int, int]) -> int:
        return self.grid[point_index(point)]

    def apply_move(self, color: int, point: tuple[int, int] | None) -> "Board":
        """Play a stone (or pass) and return the resulting board.

        Raises OccupiedPointError / SuicideError / KoError for the three
        illegal-move cases, ValueError when ``color`` is not the side to move.
        """
        if color != self.to_move:
            raise ValueError(f"move by {color_name(color)} but "
                             f"{color_name(self.to_move)} to move")
        nxt = opponent(color)
        z = self.zobrist ^ TO_MOVE_KEYS[color] ^ TO_MOVE_KEYS[nxt]
        if point is None:
            return Board(self.grid, nxt, None, z, self.move_count + 1)

        idx = point_index(point)
        if not (0 <= point[0] < BOARD_SIZE and 0 <= point[1] < BOARD_SIZE):
            raise IllegalMoveError(f"off-board point {point}")
        if self.grid[idx] != EMPTY:
            raise OccupiedPointError(f"point {point} is occupied")
        if idx == self.simple_ko_point:
            raise KoError(f"simple-ko recapture at {point}")

        grid = bytearray(self.grid)
        grid[idx] = color
        z ^= POINT_KEYS[color][idx]

        opp = opponent(color)
        captured: list[int] = []
        seen_heads: set[int] = set()
        for n in NEIGHBORS[idx]:
            if grid[n] == opp and n not in seen_heads:
                members, has_lib = _group_and_liberty(grid, n)
                seen_heads.update(members)
                if not has_lib:
                    captured.extend(members)
        for c_idx in captured:
            grid[c_idx] = EMPTY
            z ^= POINT_KEYS[opp][c_idx]

        if not captured and not _has_liberty(grid, idx):
            raise SuicideError(f"suicide at {point}")

        ko_point = None
        if len(captured) == 1:
            own, _ = _group_and_liberty(grid, idx)
            if len(own) == 1:
                libs = [n for n in NEIGHBORS[idx] if grid[n] == EMPTY]
                if libs == captured:
                    ko_point = captured[0]

        return Board(grid, nxt, ko_point, z, self.move_count + 1)

    def is_legal(self, point: tuple[int, int] | None) -> bool:
        if point is None:
            return True
        idx = point_index(point)
        if self.grid[idx] != EMPTY or idx == self.simple_ko_point:
            return False
        color = self.to_move
        opp = opponent(color)
        grid = self.grid
        # a stone with an empty neighbor is never suicide
        for n in NEIGHBORS[idx]:
            if grid[n] == EMPTY:
                return True
        grid = bytearray(grid)
        grid[idx] = color
        for n in NEIGHBORS[idx]:
            if grid[n] == opp and not _has_liberty(grid, n):
                return True  # captures, so not suicide
        return _has_liberty(grid, idx)

    def legal_moves(self) -> set[tuple[int, int] | None]:
        """All moves accepted by apply_move; a pass (None) is always legal."""
        moves: set[tuple[int, int] | None] = {None}
        for idx in range(N_POINTS):
            if self.grid[idx] == EMPTY:
                point = index_point(idx)
                if self.is_legal(point):
                    moves.add(point)
        return moves

    def stone_counts(self) -> tuple[int, int]:
        blacks = self.grid.count(BLACK)
        whites = self.grid.count(WHITE)
        return blacks, whites

    def __eq__(self, other):
        if not isinstance(other, Board):
            return NotImplemented
        return (self.grid == other.grid and self.to_move == other.to_move
                and self.simple_ko_point == other.simple_ko_point)

    def __repr__(self):
        b, w = self.stone_counts()
        return (f"Board(move {self.move_count}, {color_name(self.to_move)} to move, "
                f"{b}B/{w}W)")


def zobrist_recompute(board: Board) -> int:
    """Full from-scratch hash; must equal the incrementally maintained value."""
    z = TO_MOVE_KEYS[board.to_move]
    for idx in range(N_POINTS):
        v = board.grid[idx]
        if v != EMPTY:
            z ^= POINT_KEYS[v][idx]
    return z


def replay_moves(moves, setup_stones=(), start_color: int | None = None) -> Board:
    """Replay (color, point) pairs from an optionally pre-set board.

    Colors may be codes or names. The side to move starts at ``start_color``
    when given, else at the first move's color (Black on an empty move list).
    Raises the apply_move errors on the first illegal move.
    """
    coded = [((color_code(c) if isinstance(c, str) else c), p) for c, p in moves]
    to_move = start_color
    if to_move is None:
        to_move = coded[0][0] if coded else BLACK
    if setup_stones:
        board = Board.with_setup(setup_stones, to_move=to_move)
    else:
        board = Board.empty(to_move)
    for c, point in coded:
        board = board.apply_move(c, point)
    return board
