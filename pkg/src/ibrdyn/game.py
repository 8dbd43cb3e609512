"""Payoff matrices, simplex states and the game transforms used throughout."""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

SIMPLEX_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


class GameParseError(ValueError):
    """Raised when a game file cannot be parsed; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PayoffMatrix:
    """Square payoff matrix of a symmetric two-player game.

    ``entries[i, j]`` is the payoff of strategy ``i`` against ``j``.  The
    underlying array is read-only, so instances can be shared freely.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"payoff matrix must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise ValueError("payoff matrix needs at least 2 strategies")
        if not np.all(np.isfinite(a)):
            raise ValueError("payoff entries must be finite")
        a.setflags(write=False)
        self._entries = a

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, PayoffMatrix):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash(self._entries.tobytes())

    def __repr__(self):
        rows = ", ".join(str([_fmt_num(v) for v in row]) for row in self._entries)
        return f"PayoffMatrix([{rows}])".replace("'", "")

    def tolist(self) -> list[list[float]]:
        return self._entries.tolist()


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


class PopulationState:
    """A point on the simplex: strategy shares that are nonnegative and sum to 1.

    Inputs whose sum is off by at most ``1e-9`` are renormalized; anything
    worse, or any negative share, is rejected.
    """

    __slots__ = ("_x",)

    def __init__(self, shares):
        x = np.array(shares, dtype=float).reshape(-1)
        if x.size < 1 or not np.all(np.isfinite(x)):
            raise ValueError("state must be a nonempty finite vector")
        if np.any(x < 0):
            raise ValueError(f"state has negative shares: {x}")
        total = x.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ValueError(f"state shares sum to {float(total):.17g}, not 1")
        if abs(total - 1.0) > SIMPLEX_TOL:
            x = x / total
        x.setflags(write=False)
        self._x = x

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def n(self) -> int:
        return self._x.size

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self._x > 0))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._x
        return self._x.astype(dtype)

    def __len__(self):
        return self._x.size

    def __getitem__(self, i):
        return self._x[i]

    def __iter__(self):
        return iter(self._x)

    def __eq__(self, other):
        if not isinstance(other, PopulationState):
            return NotImplemented
        return np.array_equal(self._x, other._x)

    def __hash__(self):
        return hash(self._x.tobytes())

    def __repr__(self):
        return f"PopulationState({self._x.tolist()})"


def vertex(n: int, i: int) -> PopulationState:
    e = np.zeros(n)
    e[i] = 1.0
    return PopulationState(e)


def barycenter(n: int) -> PopulationState:
    return PopulationState(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class OrdinalPattern:
    """Dense ranks of the payoffs (1 = lowest); ``K`` distinct values."""

    ranks: np.ndarray
    K: int

    def __eq__(self, other):
        if not isinstance(other, OrdinalPattern):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.ranks, other.ranks)

    def __hash__(self):
        return hash((self.K, self.ranks.tobytes()))

    def key(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.ranks.reshape(-1))


def parse_game(text: str) -> PayoffMatrix:
    """Parse the plain-text game format.

    ``#`` starts a comment line; the first remaining line holds ``n`` and the
    next ``n`` lines hold ``n`` whitespace-separated numbers each.  Blank
    lines are ignored.  Errors name the 1-based line number.
    """
    if text.startswith("\ufeff"):
        text = text[1:]
    lines = [
        (num, line.strip())
        for num, line in enumerate(text.replace("\r\n", "\n").split("\n"), start=1)
    ]
    body = [(num, s) for num, s in lines if s and not s.startswith("#")]
    if not body:
        raise GameParseError("empty game file")

    num, first = body[0]
    try:
        n = int(first)
    except ValueError:
        raise GameParseError(f"expected strategy count, got {first!r}", num) from None
    if n < 2:
        raise GameParseError(f"strategy count must be >= 2, got {n}", num)

    rows = body[1:]
    if len(rows) < n:
        last = rows[-1][0] if rows else num
        raise GameParseError(f"expected {n} payoff rows, found {len(rows)}", last)
    if len(rows) > n:
        raise GameParseError("unexpected extra row after the payoff matrix", rows[n][0])

    entries = []
    for num, s in rows:
        tokens = s.split()
        if len(tokens) != n:
            raise GameParseError(f"ragged row: expected {n} entries, got {len(tokens)}", num)
        row = []
        for tok in tokens:
            try:
                v = float(tok)
            except ValueError:
                raise GameParseError(f"malformed number {tok!r}", num) from None
            if not np.isfinite(v):
                raise GameParseError(f"non-finite payoff {tok!r}", num)
            row.append(v)
        entries.append(row)
    return PayoffMatrix(entries)


def format_game(A) -> str:
    a = np.asarray(A, dtype=float)
    lines = [str(a.shape[0])]
    lines += [" ".join(_fmt_num(v) for v in row) for row in a]
    return "\n".join(lines) + "\n"


def ordinal_pattern(A) -> OrdinalPattern:
    a = np.asarray(A, dtype=float)
    values, inverse = np.unique(a, return_inverse=True)
    ranks = inverse.reshape(a.shape).astype(int) + 1
    ranks.setflags(write=False)
    return OrdinalPattern(ranks=ranks, K=int(values.size))


def negate(A) -> PayoffMatrix:
    return PayoffMatrix(-np.asarray(A, dtype=float))


def _check_permutation(sigma: Sequence[int], n: int) -> np.ndarray:
    s = np.asarray(sigma, dtype=int)
    if s.shape != (n,) or sorted(s.tolist()) != list(range(n)):
        raise ValueError(f"{list(sigma)} is not a permutation of 0..{n - 1}")
    return s


def permute(A, sigma: Sequence[int]) -> PayoffMatrix:
    """Relabel strategies: the result ``B`` has ``B[sigma[i], sigma[j]] == A[i, j]``."""
    a = np.asarray(A, dtype=float)
    s = _check_permutation(sigma, a.shape[0])
    b = np.empty_like(a)
    b[np.ix_(s, s)] = a
    return PayoffMatrix(b)


def permute_state(x, sigma: Sequence[int]) -> np.ndarray:
    """Move share ``x[i]`` to slot ``sigma[i]``; consistent with :func:`permute`."""
    v = np.asarray(x, dtype=float)
    s = _check_permutation(sigma, v.size)
    out = np.empty_like(v)
    out[s] = v
    return out


def invert_permutation(sigma: Sequence[int]) -> tuple[int, ...]:
    s = np.asarray(sigma, dtype=int)
    return tuple(int(i) for i in np.argsort(s))


def transposition(n: int, i: int, j: int) -> tuple[int, ...]:
    s = list(range(n))
    s[i], s[j] = s[j], s[i]
    return tuple(s)


def average_payoffs(x, A) -> tuple[np.ndarray, float]:
    """Return the payoff of each strategy against ``x`` and the population mean."""
    a = np.asarray(A, dtype=float)
    v = np.asarray(x, dtype=float)
    pi = a @ v
    return pi, float(v @ pi)


def quasi_random_states(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points in the open simplex, shape ``(count, n)``.

    Scrambled Halton points in the unit cube are mapped to the simplex by the
    spacings of their sorted coordinates, which is uniform on the simplex.
    """
    if count <= 0:
        return np.empty((0, n))
    if n == 1:
        return np.ones((count, 1))
    u = qmc.Halton(d=n - 1, scramble=True, seed=seed).random(count)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    u.sort(axis=1)
    edges = np.hstack([np.zeros((count, 1)), u, np.ones((count, 1))])
    pts = np.diff(edges, axis=1)
    pts = np.maximum(pts, 1e-12)
    return pts / pts.sum(axis=1, keepdims=True)


def as_states(points: Iterable) -> list[PopulationState]:
    return [PopulationState(p) for p in points]
