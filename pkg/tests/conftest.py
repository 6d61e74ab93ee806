import random

import pytest

from gocf import board as go


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_position(rng, n_moves: int) -> go.Board:
    """Legal random position reached by alternating play."""
    board = go.Board.empty()
    for _ in range(n_moves):
        point = None
        for _attempt in range(60):
            idx = rng.randrange(go.N_POINTS)
            if board.grid[idx] == go.EMPTY and board.is_legal(go.index_point(idx)):
                point = go.index_point(idx)
                break
        if point is None:
            candidates = sorted(board.legal_moves() - {None})
            if not candidates:
                break
            point = rng.choice(candidates)
        board = board.apply_move(board.to_move, point)
    return board
