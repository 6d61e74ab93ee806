"""Engine bridge: newline-delimited JSON analysis protocol plus a mock engine.

Wire dialect (one JSON object per line on stdin/stdout of a child process):

  request:  {"id": str, "moves": [["B"|"W", "<sgf letters>"|"pass"], ...],
             "rules": "japanese"|"chinese", "komi": float, "maxVisits": int,
             "includePolicy": false, "allowMoves": ["<coord>", ...]?}
  response: {"id": str, "moveInfos": [{"move": str, "winrate": float,
             "visits": int}, ...]}
  errors:   {"id": str?, "error": str}

Coordinates are SGF letter pairs ("dd"); a pass is the literal "pass".
``moveInfos`` is sorted best-first; ``allowMoves`` forces the listed moves to
be evaluated and included. The built-in mock speaks exactly this dialect
(``python -m gocf.mock_engine`` serves it on stdio).

Mock scoring (normative for tests): a candidate move's winrate is
``0.5 + 0.4 * tanh(s) / 2`` where, on the position after the move,
``s = (friendly stones within Chebyshev distance 2 of the move, including the
played stone, minus opponent stones within distance 2) / 10
+ (1 - d_center / 18) / 10`` with ``d_center`` the Manhattan distance from
the move to the center point (9, 9). A pass scores ``s = -0.2``. The best
move is the argmax, ties broken by (row, col) order.
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from queue import Empty, Queue

import numpy as np

from . import board as go
from .sgf import point_from_letters, point_to_letters

MOCK_ENGINE_ID = "mock-1"
MOCK_TOP_CANDIDATES = 8
MOCK_PASS_SCORE = -0.2
DEFAULT_TIMEOUT = 300.0


class EngineError(Exception):
    pass


class ProtocolError(EngineError):
    """Malformed engine response; carries the raw line."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message + (f": {raw!r}" if raw else ""))
        self.raw = raw


@dataclass
class Evaluation:
    best_move: str  # coordinate letters or "pass"
    winrates: dict[str, float]
    visits_used: int
    engine_id: str

    def validate(self) -> "Evaluation":
        if self.best_move not in self.winrates:
            raise ProtocolError(f"best move {self.best_move} missing from winrates")
        best = max(self.winrates.values())
        if self.winrates[self.best_move] != best:
            raise ProtocolError("best move is not the winrate argmax")
        for mv, wr in self.winrates.items():
            if not 0.0 <= wr <= 1.0:
                raise ProtocolError(f"winrate out of range for {mv}: {wr}")
        return self

    def to_payload(self) -> str:
        obj = {"best_move": self.best_move,
               "winrates": self.winrates,
               "visits_used": self.visits_used,
               "engine_id": self.engine_id}
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_payload(cls, payload: str) -> "Evaluation":
        obj = json.loads(payload)
        return cls(best_move=obj["best_move"],
                   winrates={k: float(v) for k, v in obj["winrates"].items()},
                   visits_used=int(obj["visits_used"]),
                   engine_id=obj["engine_id"])


def coord_text(point: tuple[int, int] | None) -> str:
    return "pass" if point is None else point_to_letters(point)


def _coord_point(text: str) -> tuple[int, int] | None:
    if text == "pass":
        return None
    return point_from_letters(text)


def coord_order(coord: str) -> tuple[int, int]:
    if coord == "pass":
        return (19, 19)
    col, row = point_from_letters(coord)
    return (row, col)


def mock_score(board_after: go.Board, mover: int,
               point: tuple[int, int] | None) -> float:
    if point is None:
        return MOCK_PASS_SCORE
    col, row = point
    friendly = 0
    enemy = 0
    for r in range(max(0, row - 2), min(19, row + 3)):
        base = r * 19
        for c in range(max(0, col - 2), min(19, col + 3)):
            v = board_after.grid[base + c]
            if v == mover:
                friendly += 1
            elif v != go.EMPTY:
                enemy += 1
    d_center = abs(col - 9) + abs(row - 9)
    return (friendly - enemy) / 10 + (1 - d_center / 18) / 10


def mock_winrate(score: float) -> float:
    return 0.5 + 0.4 * math.tanh(score) / 2


_ROW_GRID, _COL_GRID = np.mgrid[0:19, 0:19]
_CENTER_DIST = np.abs(_COL_GRID - 9) + np.abs(_ROW_GRID - 9)


def _box_counts(mask: np.ndarray) -> np.ndarray:
    """Per-point count of True cells within Chebyshev distance 2."""
    padded = np.zeros((25, 25), dtype=np.int64)
    padded[3:22, 3:22] = mask
    integral = padded.cumsum(0).cumsum(1)
    # inclusive 5x5 windows centered on each point
    return (integral[5:24, 5:24] - integral[5:24, 0:19]
            - integral[0:19, 5:24] + integral[0:19, 0:19])


class MockEngine:
    """Deterministic in-process engine following the mock scoring rule.

    Non-capturing candidates are scored on vectorized neighborhood counts;
    capturing candidates replay through the rules engine. Both paths produce
    bit-identical values to the scalar ``mock_score`` formula.
    """

    engine_id = MOCK_ENGINE_ID

    def __init__(self, top_candidates: int = MOCK_TOP_CANDIDATES):
        self.top_candidates = top_candidates
        self.request_count = 0

    def analyze(self, moves: list[tuple[str, tuple[int, int] | None]],
                visits: int, allow_moves: tuple[str, ...] = (),
                rules: str = "japanese", komi: float = 6.5) -> Evaluation:
        self.request_count += 1
        board = go.replay_moves(moves)
        s_board, legal = self._score_board(board)

        # rank all candidates by raw score; tanh is monotone, so this is the
        # winrate ranking, and reachable scores differ by >= 1/180, so equal
        # winrates only arise from equal scores (ties break on (row, col))
        order = np.lexsort((np.tile(np.arange(19), 19),
                            np.repeat(np.arange(19), 19),
                            -s_board.ravel()))
        legal_flat = legal.ravel()
        top: list[tuple[str, float]] = []
        for flat in order:
            if not legal_flat[flat]:
                break  # illegal points carry -inf and sort last
            row, col = int(flat) // 19, int(flat) % 19
            top.append((point_to_letters((col, row)),
                        float(s_board[row, col])))
            if len(top) > self.top_candidates:
                break
        top.append(("pass", MOCK_PASS_SCORE))
        top.sort(key=lambda cs: (-cs[1], coord_order(cs[0])))
        selected = dict(top[: self.top_candidates])

        for coord in allow_moves:
            if coord in selected:
                continue
            if coord == "pass":
                selected[coord] = MOCK_PASS_SCORE
                continue
            col, row = point_from_letters(coord)
            if not legal[row, col]:
                raise EngineError(f"allowMoves not legal here: {coord}")
            selected[coord] = float(s_board[row, col])

        winrates = {c: mock_winrate(s) for c, s in selected.items()}
        best = min(winrates.items(), key=lambda cw: (-cw[1], coord_order(cw[0])))
        return Evaluation(best_move=best[0], winrates=winrates,
                          visits_used=visits, engine_id=self.engine_id)

    def _score_board(self, board: go.Board) -> tuple[np.ndarray, np.ndarray]:
        """Score every legal placement; illegal points get -inf."""
        mover = board.to_move
        opp = go.opponent(mover)
        grid = np.frombuffer(bytes(board.grid), dtype=np.uint8).reshape(19, 19)
        empty = grid == go.EMPTY
        friendly = grid == mover
        enemy = grid == opp

        group_libs = self._group_liberty_map(board)

        def any_neighbor(mask):
            out = np.zeros((19, 19), dtype=bool)
            out[1:, :] |= mask[:-1, :]
            out[:-1, :] |= mask[1:, :]
            out[:, 1:] |= mask[:, :-1]
            out[:, :-1] |= mask[:, 1:]
            return out

        empty_nbrs = any_neighbor(empty)
        own_alive_nbrs = any_neighbor(friendly & (group_libs >= 2))
        enemy_dying_nbrs = any_neighbor(enemy & (group_libs == 1))

        playable = empty.copy()
        if board.simple_ko_point is not None:
            playable[board.simple_ko_point // 19,
                     board.simple_ko_point % 19] = False
        capturing = playable & enemy_dying_nbrs
        quiet = playable & ~capturing & (empty_nbrs | own_alive_nbrs)

        fcnt = _box_counts(friendly)
        ecnt = _box_counts(enemy)
        s_board = np.full((19, 19), -np.inf)
        s_board[quiet] = ((fcnt[quiet] + 1 - ecnt[quiet]) / 10
                          + (1 - _CENTER_DIST[quiet] / 18) / 10)
        for row, col in np.argwhere(capturing):
            point = (int(col), int(row))
            after = board.apply_move(mover, point)
            s_board[row, col] = mock_score(after, mover, point)
        return s_board, quiet | capturing

    @staticmethod
    def _group_liberty_map(board: go.Board) -> np.ndarray:
        """Liberty count of each stone's group, 0 on empty points."""
        libs = np.zeros((19, 19), dtype=np.int64)
        seen = bytearray(go.N_POINTS)
        grid = board.grid
        for start in range(go.N_POINTS):
            if grid[start] == go.EMPTY or seen[start]:
                continue
            color = grid[start]
            stack = [start]
            members = []
            group_libs: set[int] = set()
            seen[start] = 1
            while stack:
                idx = stack.pop()
                members.append(idx)
                for n in go.NEIGHBORS[idx]:
                    v = grid[n]
                    if v == go.EMPTY:
                        group_libs.add(n)
                    elif v == color and not seen[n]:
                        seen[n] = 1
                        stack.append(n)
            count = len(group_libs)
            for idx in members:
                libs[idx // 19, idx % 19] = count
        return libs

    def query(self, request: dict) -> dict:
        """Serve one wire-protocol request object."""
        try:
            moves = [(("black" if c.lower().startswith("b") else "white"),
                      _coord_point(coord))
                     for c, coord in request.get("moves", [])]
            ev = self.analyze(moves, int(request.get("maxVisits", 50)),
                              tuple(request.get("allowMoves", ())))
        except (EngineError, ValueError, go.IllegalMoveError) as exc:
            return {"id": request.get("id"), "error": str(exc)}
        infos = sorted(ev.winrates.items(), key=lambda cw: (-cw[1], coord_order(cw[0])))
        return {"id": request.get("id"),
                "moveInfos": [{"move": c, "winrate": w, "visits": ev.visits_used}
                              for c, w in infos]}

    def close(self):
        pass


def serve_stdio(stdin=None, stdout=None) -> None:
    """Run the mock engine as a line-delimited JSON server (child process)."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    engine = MockEngine()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"error": f"bad json: {exc}"}
        else:
            response = engine.query(request)
        stdout.write(json.dumps(response, sort_keys=True) + "\n")
        stdout.flush()


class ProcessEngine:
    """Adapter around an external engine child process.

    Responses are matched to requests by id, so multiple queries may be in
    flight; a crashed child is restarted once per query before giving up.
    """

    def __init__(self, command: list[str], engine_id: str | None = None,
                 timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.engine_id = engine_id or " ".join(command)
        self.timeout = timeout
        self.request_count = 0
        self._proc: subprocess.Popen | None = None
        self._responses: Queue = Queue()
        self._pending: dict[str, dict] = {}
        self._next_id = 0
        self._lock = threading.Lock()

    def _ensure_proc(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
            t = threading.Thread(target=self._reader, args=(self._proc,),
                                 daemon=True)
            t.start()

    def _reader(self, proc: subprocess.Popen):
        for line in proc.stdout:
            self._responses.put(line)
        self._responses.put(None)  # EOF marker

    def _send(self, request: dict):
        self._ensure_proc()
        self._proc.stdin.write(json.dumps(request) + "\n")
        self._proc.stdin.flush()

    def _recv(self, want_id: str, deadline: float) -> dict:
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise EngineError(f"engine timeout waiting for query {want_id}")
            try:
                line = self._responses.get(timeout=min(remaining, 1.0))
            except Empty:
                continue
            if line is None:
                raise BrokenPipeError("engine closed its stdout")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise ProtocolError("unparseable engine response", line)
            if obj.get("id") == want_id:
                return obj
            rid = obj.get("id")
            if rid is not None:
                self._pending[rid] = obj

    def analyze(self, moves, visits: int, allow_moves: tuple[str, ...] = (),
                rules: str = "japanese", komi: float = 6.5) -> Evaluation:
        with self._lock:
            self._next_id += 1
            qid = f"q{self._next_id}"
        request = {
            "id": qid,
            "moves": [["B" if c == "black" else "W", coord_text(p)]
                      for c, p in moves],
            "rules": rules,
            "komi": komi,
            "maxVisits": visits,
            "includePolicy": False,
        }
        if allow_moves:
            request["allowMoves"] = list(allow_moves)
        self.request_count += 1

        for attempt in (0, 1):
            try:
                self._send(request)
                if qid in self._pending:
                    obj = self._pending.pop(qid)
                else:
                    obj = self._recv(qid, time.monotonic() + self.timeout)
                break
            except (BrokenPipeError, OSError):
                self._proc = None
                if attempt == 1:
                    raise EngineError(
                        f"engine {self.command} crashed twice on query {qid}")
        if "error" in obj:
            raise EngineError(f"engine error for {qid}: {obj['error']}")
        infos = obj.get("moveInfos")
        if not infos:
            raise ProtocolError("response has no moveInfos", json.dumps(obj))
        winrates = {}
        for info in infos:
            try:
                winrates[info["move"]] = float(info["winrate"])
            except (KeyError, TypeError, ValueError):
                raise ProtocolError("bad moveInfo entry", json.dumps(info))
        best = max(winrates.items(), key=lambda cw: (cw[1], ))
        # trust the engine's first listed move when it attains the max
        top = infos[0]["move"]
        best_move = top if winrates[top] == best[1] else best[0]
        return Evaluation(best_move=best_move, winrates=winrates,
                          visits_used=int(infos[0].get("visits", visits)),
                          engine_id=self.engine_id).validate()

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            self._proc.wait(timeout=10)
        self._proc = None


def make_engine(spec: str, timeout: float = DEFAULT_TIMEOUT):
    """Build an engine from a command string; "mock" is served in-process."""
    if spec == "mock":
        return MockEngine()
    import shlex
    return ProcessEngine(shlex.split(spec), timeout=timeout)
