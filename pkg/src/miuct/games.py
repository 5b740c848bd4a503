"""Value-like game positions for 9x9 Go and 9x9 NoGo.

Both games share one flat array layout (see ``kernels``) so the search
engines can run on either without caring which one they were handed.
"""

from abc import ABC, abstractmethod

import numpy as np

from . import kernels as K
from .kernels import BLACK, EMPTY, PASS, WHITE

COLUMNS = "ABCDEFGHJ"


class IllegalMove(ValueError):
    pass


class GameState(ABC):
    """Two-player, zero-sum position.  ``play`` returns a new state."""

    game: int

    def __init__(self, array=None):
        self.array = K.new_state(self.game) if array is None else array

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=np.int64)
        state_cls = Go9State if array[K.GAME] == K.GO else NoGo9State
        return state_cls(array.copy())

    @property
    def to_move(self) -> int:
        return int(self.array[K.TO_MOVE])

    @property
    def move_count(self) -> int:
        return int(self.array[K.MOVES])

    @property
    def board(self) -> np.ndarray:
        return self.array[: K.NPOINTS].reshape(K.SIZE, K.SIZE)

    def copy(self):
        return type(self)(self.array.copy())

    def legal_moves(self) -> list[int]:
        out = np.empty(K.MAX_MOVES, dtype=np.int64)
        n = K.legal_moves(self.array, out)
        return [int(m) for m in out[:n]]

    def is_legal(self, move: int) -> bool:
        return bool(K.is_legal(self.array, move))

    def play(self, move: int):
        if self.is_terminal():
            raise IllegalMove(f"game is over, cannot play {format_move(move)}")
        if not self.is_legal(move):
            raise IllegalMove(f"{format_move(move)} is illegal for {color_name(self.to_move)}")
        nxt = self.copy()
        K.play(nxt.array, move)
        return nxt

    def is_terminal(self) -> bool:
        return bool(K.is_terminal(self.array))

    def winner(self) -> int:
        """BLACK or WHITE; only defined on terminal positions."""
        if not self.is_terminal():
            raise ValueError("winner() called on a non-terminal position")
        return int(K.winner(self.array))

    def playout(self, stream) -> int:
        """Random continuation of a copy of this position; returns the winner."""
        return int(K.playout(self.array.copy(), stream))

    def swapped_colors(self):
        """Same position with every stone's colour and the side to move exchanged."""
        arr = self.array.copy()
        board = arr[: K.NPOINTS]
        stones = board != EMPTY
        board[stones] = 3 - board[stones]
        arr[K.TO_MOVE] = 3 - arr[K.TO_MOVE]
        arr[K.HASH] = K.board_hash(arr)
        return type(self)(arr)

    @classmethod
    def from_diagram(cls, rows, to_move=BLACK):
        """Build a position from 9 strings of ``.``/``X`` (Black)/``O`` (White)."""
        rows = [r.replace(" ", "") for r in rows if r.strip()]
        if len(rows) != K.SIZE or any(len(r) != K.SIZE for r in rows):
            raise ValueError("diagram must be 9 rows of 9 points")
        arr = K.new_state(cls.game)
        code = {".": EMPTY, "X": BLACK, "O": WHITE}
        for r, row in enumerate(rows):
            for c, ch in enumerate(row):
                arr[r * K.SIZE + c] = code[ch]
        arr[K.TO_MOVE] = to_move
        arr[K.HASH] = K.board_hash(arr)
        return cls(arr)

    def diagram(self) -> str:
        chars = {EMPTY: ".", BLACK: "X", WHITE: "O"}
        lines = []
        for r in range(K.SIZE):
            row = " ".join(chars[int(v)] for v in self.board[r])
            lines.append(f"{K.SIZE - r} {row}")
        return "\n".join(lines)

    def __repr__(self):
        return f"{type(self).__name__}(to_move={color_name(self.to_move)}, moves={self.move_count})"

    @abstractmethod
    def result_detail(self) -> dict:
        ...


class Go9State(GameState):
    """9x9 Go: area scoring, komi 7.5, suicide illegal, simple ko.

    The game ends after two consecutive passes or ``MOVE_CAP`` moves.
    """

    game = K.GO

    @property
    def ko_point(self):
        ko = int(self.array[K.KO])
        return None if ko < 0 else ko

    @property
    def consecutive_passes(self) -> int:
        return int(self.array[K.PASSES])

    @property
    def hash(self) -> int:
        return int(self.array[K.HASH])

    def area(self) -> tuple[int, int]:
        black, white = K.area(self.array)
        return int(black), int(white)

    def result_detail(self):
        black, white = self.area()
        return {"black_area": black, "white_area": white, "komi": K.KOMI}


class NoGo9State(GameState):
    """9x9 NoGo: captures and suicides are illegal; a player with no move loses."""

    game = K.NOGO

    def result_detail(self):
        return {"loser": color_name(self.to_move)}


def new_game(name: str) -> GameState:
    if name == "go9":
        return Go9State()
    if name == "nogo9":
        return NoGo9State()
    raise ValueError(f"unknown game {name!r}")


def color_name(color: int) -> str:
    return {BLACK: "Black", WHITE: "White"}[color]


def format_move(move: int) -> str:
    if move == PASS:
        return "pass"
    r, c = divmod(move, K.SIZE)
    return f"{COLUMNS[c]}{K.SIZE - r}"
