"""Compiled 9x9 Go / NoGo rules and the random playout.

A position is a flat ``int64`` array of length ``STATE_LEN``:

    [0, 81)     board, row-major, EMPTY / BLACK / WHITE
    TO_MOVE     BLACK or WHITE
    KO          simple-ko point or -1
    PASSES      consecutive passes (Go)
    MOVES       moves played so far, passes included
    HASH        Zobrist hash of the stones on the board
    GAME        GO or NOGO

Moves are encoded 0..80 for points and ``PASS`` (81).  All functions that
take a state expect a valid position; callers in ``games`` enforce the
legality contract before ``play`` is reached.
"""

import numpy as np
from numba import njit

from .rng import make_stream, next_u64, randbelow

SIZE = 9
NPOINTS = SIZE * SIZE
PASS = NPOINTS
MAX_MOVES = NPOINTS + 1

EMPTY, BLACK, WHITE = 0, 1, 2
GO, NOGO = 0, 1

TO_MOVE = NPOINTS
KO = NPOINTS + 1
PASSES = NPOINTS + 2
MOVES = NPOINTS + 3
HASH = NPOINTS + 4
GAME = NPOINTS + 5
STATE_LEN = NPOINTS + 6

MOVE_CAP = 300
KOMI = 7.5


def _tables():
    neigh = np.full((NPOINTS, 4), -1, dtype=np.int64)
    diag = np.full((NPOINTS, 4), -1, dtype=np.int64)
    for p in range(NPOINTS):
        r, c = divmod(p, SIZE)
        for j, (dr, dc) in enumerate(((-1, 0), (1, 0), (0, -1), (0, 1))):
            if 0 <= r + dr < SIZE and 0 <= c + dc < SIZE:
                neigh[p, j] = (r + dr) * SIZE + c + dc
        for j, (dr, dc) in enumerate(((-1, -1), (-1, 1), (1, -1), (1, 1))):
            if 0 <= r + dr < SIZE and 0 <= c + dc < SIZE:
                diag[p, j] = (r + dr) * SIZE + c + dc
    stream = make_stream(0x5EED, 9, 9)
    zobrist = np.zeros((3, NPOINTS), dtype=np.int64)
    for color in (BLACK, WHITE):
        for p in range(NPOINTS):
            v = int(next_u64(stream))
            zobrist[color, p] = v - (1 << 64) if v >= 1 << 63 else v
    return neigh, diag, zobrist


NEIGH, DIAG, ZOBRIST = _tables()


@njit(cache=True)
def new_state(game):
    s = np.zeros(STATE_LEN, dtype=np.int64)
    s[TO_MOVE] = BLACK
    s[KO] = -1
    s[GAME] = game
    return s


@njit(cache=True)
def board_hash(s):
    h = np.int64(0)
    for p in range(NPOINTS):
        if s[p] != EMPTY:
            h ^= ZOBRIST[s[p], p]
    return h


@njit(cache=True)
def scratch():
    """Work buffer for flood fills: visit stamps, a stack and the stamp counter."""
    return np.zeros(2 * NPOINTS + 1, dtype=np.int64)


@njit(cache=True)
def _has_liberty_except(s, start, exclude, buf):
    """True if the group at ``start`` has an empty neighbour other than ``exclude``."""
    buf[2 * NPOINTS] += 1
    stamp = buf[2 * NPOINTS]
    color = s[start]
    buf[start] = stamp
    buf[NPOINTS] = start
    top = 1
    while top > 0:
        top -= 1
        q = buf[NPOINTS + top]
        for j in range(4):
            n = NEIGH[q, j]
            if n < 0 or buf[n] == stamp:
                continue
            v = s[n]
            if v == EMPTY:
                if n != exclude:
                    return True
            elif v == color:
                buf[n] = stamp
                buf[NPOINTS + top] = n
                top += 1
    return False


@njit(cache=True)
def count_liberties(s, start):
    color = s[start]
    seen = np.zeros(NPOINTS, dtype=np.bool_)
    libs = np.zeros(NPOINTS, dtype=np.bool_)
    stack = np.empty(NPOINTS, dtype=np.int64)
    stack[0] = start
    top = 1
    seen[start] = True
    count = 0
    while top > 0:
        top -= 1
        q = stack[top]
        for j in range(4):
            n = NEIGH[q, j]
            if n < 0:
                continue
            v = s[n]
            if v == EMPTY:
                if not libs[n]:
                    libs[n] = True
                    count += 1
            elif v == color and not seen[n]:
                seen[n] = True
                stack[top] = n
                top += 1
    return count


@njit(cache=True)
def _remove_group(s, start):
    color = s[start]
    stack = np.empty(NPOINTS, dtype=np.int64)
    stack[0] = start
    top = 1
    s[start] = EMPTY
    s[HASH] ^= ZOBRIST[color, start]
    removed = 1
    while top > 0:
        top -= 1
        q = stack[top]
        for j in range(4):
            n = NEIGH[q, j]
            if n >= 0 and s[n] == color:
                s[n] = EMPTY
                s[HASH] ^= ZOBRIST[color, n]
                removed += 1
                stack[top] = n
                top += 1
    return removed


@njit(cache=True)
def _go_legal(s, p, buf):
    if p == PASS:
        return True
    if s[p] != EMPTY or p == s[KO]:
        return False
    me = s[TO_MOVE]
    for j in range(4):
        n = NEIGH[p, j]
        if n < 0:
            continue
        v = s[n]
        if v == EMPTY:
            return True
        if v == me:
            if _has_liberty_except(s, n, p, buf):
                return True
        elif not _has_liberty_except(s, n, p, buf):
            return True  # captures
    return False


@njit(cache=True)
def _nogo_legal(s, p, buf):
    if p < 0 or p >= NPOINTS or s[p] != EMPTY:
        return False
    me = s[TO_MOVE]
    breathes = False
    for j in range(4):
        n = NEIGH[p, j]
        if n < 0:
            continue
        v = s[n]
        if v == EMPTY:
            breathes = True
        elif v == me:
            if not breathes and _has_liberty_except(s, n, p, buf):
                breathes = True
        elif not _has_liberty_except(s, n, p, buf):
            return False  # would capture
    return breathes


@njit(cache=True)
def legal_with(s, p, buf):
    if p < 0 or p > PASS:
        return False
    if s[GAME] == GO:
        return _go_legal(s, p, buf)
    return _nogo_legal(s, p, buf)


@njit(cache=True)
def is_legal(s, p):
    return legal_with(s, p, scratch())


@njit(cache=True)
def legal_moves(s, out):
    """Write legal moves in increasing order into ``out``; return the count."""
    buf = scratch()
    n = 0
    for p in range(NPOINTS):
        if s[p] == EMPTY and legal_with(s, p, buf):
            out[n] = p
            n += 1
    if s[GAME] == GO:
        out[n] = PASS
        n += 1
    return n


@njit(cache=True)
def has_legal_point(s):
    buf = scratch()
    for p in range(NPOINTS):
        if s[p] == EMPTY and legal_with(s, p, buf):
            return True
    return False


@njit(cache=True)
def play(s, p):
    """Apply a legal move in place.  Returns the number of captured stones."""
    return play_with(s, p, scratch())


@njit(cache=True)
def play_with(s, p, buf):
    me = s[TO_MOVE]
    opp = 3 - me
    s[MOVES] += 1
    s[TO_MOVE] = opp
    if p == PASS:
        s[PASSES] += 1
        s[KO] = -1
        return 0
    s[PASSES] = 0
    s[p] = me
    s[HASH] ^= ZOBRIST[me, p]
    captured = 0
    last_cap = -1
    for j in range(4):
        n = NEIGH[p, j]
        if n >= 0 and s[n] == opp and not _has_liberty_except(s, n, -1, buf):
            last_cap = n
            captured += _remove_group(s, n)
    s[KO] = -1
    if captured == 1:
        lone = True
        for j in range(4):
            n = NEIGH[p, j]
            if n >= 0 and s[n] == me:
                lone = False
        if lone and count_liberties(s, p) == 1:
            s[KO] = last_cap
    return captured


@njit(cache=True)
def is_terminal(s):
    if s[GAME] == GO:
        return s[PASSES] >= 2 or s[MOVES] >= MOVE_CAP
    return not has_legal_point(s)


@njit(cache=True)
def area(s):
    """Area score ``(black, white)``: stones plus empty regions touching one colour."""
    black = 0
    white = 0
    seen = np.zeros(NPOINTS, dtype=np.bool_)
    stack = np.empty(NPOINTS, dtype=np.int64)
    for p in range(NPOINTS):
        v = s[p]
        if v == BLACK:
            black += 1
        elif v == WHITE:
            white += 1
        elif not seen[p]:
            seen[p] = True
            stack[0] = p
            top = 1
            size = 0
            touches = 0
            while top > 0:
                top -= 1
                q = stack[top]
                size += 1
                for j in range(4):
                    n = NEIGH[q, j]
                    if n < 0:
                        continue
                    w = s[n]
                    if w == EMPTY:
                        if not seen[n]:
                            seen[n] = True
                            stack[top] = n
                            top += 1
                    else:
                        touches |= w
            if touches == BLACK:
                black += size
            elif touches == WHITE:
                white += size
    return black, white


@njit(cache=True)
def winner(s):
    """Winner of a terminal position (BLACK or WHITE)."""
    if s[GAME] == GO:
        black, white = area(s)
        if black - white > KOMI:
            return BLACK
        return WHITE
    return 3 - s[TO_MOVE]


@njit(cache=True)
def is_true_eye(s, p, color):
    """Single-point true eye of ``color`` at empty point ``p``."""
    for j in range(4):
        n = NEIGH[p, j]
        if n >= 0 and s[n] != color:
            return False
    opp = 3 - color
    bad = 0
    edge = False
    for j in range(4):
        d = DIAG[p, j]
        if d < 0:
            edge = True
        elif s[d] == opp:
            bad += 1
    if edge:
        return bad == 0
    return bad < 2


@njit(cache=True)
def playout(s, stream):
    """Play uniformly random moves on ``s`` (in place) to the end; return the winner.

    Go excludes filling the mover's own single-point true eyes and passes
    only when nothing else is available; games stop at ``MOVE_CAP`` moves.
    """
    return _playout(s, stream, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), False)


@njit(cache=True)
def playout_trace(s, stream, moves_out, hashes_out):
    """``playout`` that also records each move and the board hash after it.

    Both buffers need ``MOVE_CAP`` slots; returns ``(winner, moves played)``.
    """
    start = s[MOVES]
    w = _playout(s, stream, moves_out, hashes_out, True)
    return w, s[MOVES] - start


@njit(cache=True)
def _playout(s, stream, moves_out, hashes_out, record):
    cand = np.empty(NPOINTS, dtype=np.int64)
    buf = scratch()
    go = s[GAME] == GO
    i_rec = 0
    while True:
        if go and (s[PASSES] >= 2 or s[MOVES] >= MOVE_CAP):
            break
        me = s[TO_MOVE]
        n = 0
        for p in range(NPOINTS):
            if s[p] == EMPTY:
                cand[n] = p
                n += 1
        chosen = -1
        while n > 0:
            i = randbelow(stream, n)
            p = cand[i]
            ok = legal_with(s, p, buf)
            if ok and go and is_true_eye(s, p, me):
                ok = False
            if ok:
                chosen = p
                break
            n -= 1
            cand[i] = cand[n]
        if chosen < 0:
            if not go:
                break
            chosen = PASS
        play_with(s, chosen, buf)
        if record:
            moves_out[i_rec] = chosen
            hashes_out[i_rec] = s[HASH]
            i_rec += 1
    return winner(s)
