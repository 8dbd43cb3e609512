"""Rest points, local stability, two-strategy taxonomy and dominance."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .dynamics import FieldKind, IBRField, field_function, two_strategy_polynomial
from .game import (
    PopulationState,
    invert_permutation,
    ordinal_pattern,
    permute,
    permute_state,
    quasi_random_states,
    transposition,
)
from .presets import CLOSED_FORMS, TABLE1

HYPERBOLIC_TAU = 1e-6
REST_TOL = 1e-9
MERGE_TOL = 1e-7
NEWTON_STARTS = 50
NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-12
NEWTON_HALVINGS = 20
FD_STEP = 1e-6
MAX_EXHAUSTIVE_N = 6

ATTRACTOR = "attractor"
REPELLER = "repeller"
SADDLE = "saddle"
CENTER_CANDIDATE = "center_candidate"
NONHYPERBOLIC = "nonhyperbolic"
REST_SET_SAMPLE = "rest_set_sample"


class JacobianInstabilityWarning(RuntimeWarning):
    """Finite-difference Jacobian changed too much when the step was halved."""


class ExperimentalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RestPointReport:
    """A rest point together with its local stability data.

    ``eigenvalues`` come from the Jacobian restricted to the face spanned by
    ``support``; ``invasion_rates`` are the per-capita growth rates of the
    absent strategies, which are the remaining eigenvalues in the full simplex.
    ``stability`` is the class within the face (for a vertex, within the
    simplex) and ``simplex_stability`` uses both sets.
    """

    location: PopulationState
    support: tuple[int, ...]
    eigenvalues: tuple[complex, ...]
    invasion_rates: tuple[float, ...]
    stability: str
    simplex_stability: str
    residual: float
    jacobian_stable: bool = True

    @property
    def is_interior(self) -> bool:
        return len(self.support) == self.location.n


@dataclass
class RestPointSearch:
    points: list[RestPointReport]
    empty_faces: list[tuple[int, ...]] = field(default_factory=list)
    kind: FieldKind = FieldKind.IBR

    def interior(self) -> list[RestPointReport]:
        return [p for p in self.points if p.is_interior]


def classify_rest_point(eigenvalues, tau: float = HYPERBOLIC_TAU) -> str:
    ev = np.asarray(list(eigenvalues), dtype=complex)
    if ev.size == 0:
        return NONHYPERBOLIC
    re = ev.real
    if np.all(re < -tau):
        return ATTRACTOR
    if np.all(re > tau):
        return REPELLER
    if np.any(re > tau) and np.any(re < -tau):
        return SADDLE
    if np.all(np.abs(re) <= tau) and np.any(np.abs(ev.imag) > tau):
        return CENTER_CANDIDATE
    return NONHYPERBOLIC


def _embed(y, face, n) -> np.ndarray:
    x = np.zeros(n)
    x[list(face[:-1])] = y
    x[face[-1]] = 1.0 - np.sum(y)
    return x


def _reduced_fd(f, x, face, h) -> np.ndarray:
    n = x.size
    y0 = x[list(face[:-1])]
    d = len(face) - 1
    J = np.empty((d, d))
    rows = list(face[:-1])
    for b in range(d):
        e = np.zeros(d)
        e[b] = h
        J[:, b] = (f(_embed(y0 + e, face, n))[rows] - f(_embed(y0 - e, face, n))[rows]) / (2 * h)
    return J


def _reduced_jacobian_checked(A, kind, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    face = tuple(int(i) for i in np.flatnonzero(x > 0))
    if len(face) < 2:
        return np.zeros((0, 0)), True
    f = field_function(A, kind)
    J = _reduced_fd(f, x, face, FD_STEP)
    J_half = _reduced_fd(f, x, face, FD_STEP / 2)
    ok = bool(np.all(np.abs(J - J_half) <= 1e-4 * np.abs(J_half) + 1e-8))
    return J_half, ok


def reduced_jacobian(A, kind, x) -> np.ndarray:
    """Jacobian of the field on the face containing ``x`` in its relative interior.

    The last supported coordinate is eliminated through the simplex
    constraint, giving an ``(s-1) x (s-1)`` matrix for support size ``s``.
    Central differences with step 1e-6; a warning is emitted when halving the
    step moves any entry by more than 1e-4 relative.
    """
    J, ok = _reduced_jacobian_checked(A, FieldKind.parse(kind), x)
    if not ok:
        warnings.warn(
            f"finite-difference Jacobian at {np.asarray(x).tolist()} is unstable",
            JacobianInstabilityWarning,
            stacklevel=2,
        )
    return J


def _growth_jacobian(f, x) -> np.ndarray:
    # Derivative of the per-capita growth rates; from J = diag(g) + diag(x) Dg.
    if isinstance(f, IBRField):
        T = f.T
        return (
            np.einsum("ipkm,k,m->ip", T, x, x)
            + np.einsum("ijpm,j,m->ip", T, x, x)
            + np.einsum("ijkp,j,k->ip", T, x, x)
        )
    pi = f.A @ x
    return f.A - (pi + f.A.T @ x)[None, :]


def _newton_on_face(f, face, n, y0):
    rows = list(face[:-1])
    last = face[-1]
    y = np.array(y0, dtype=float)
    for _ in range(NEWTON_MAX_ITER):
        x = _embed(y, face, n)
        g = f.growth(x)
        G = g[rows]
        if np.max(np.abs(g[list(face)])) < NEWTON_TOL:
            break
        Dg = _growth_jacobian(f, x)
        Jr = Dg[np.ix_(rows, rows)] - Dg[rows, last][:, None]
        step = np.linalg.lstsq(Jr, -G, rcond=None)[0]
        lam = 1.0
        for _ in range(NEWTON_HALVINGS + 1):
            y_new = y + lam * step
            if np.all(y_new > 0) and np.sum(y_new) < 1:
                break
            lam *= 0.5
        else:
            return None
        y = y_new
    x = _embed(y, face, n)
    if np.any(x[list(face)] <= 0):
        return None
    return x


def _face_starts(s: int, seed: int) -> np.ndarray:
    pts = quasi_random_states(s, NEWTON_STARTS, seed=seed)
    return np.vstack([np.full((1, s), 1.0 / s), pts])


def _dedup(points: list[np.ndarray]) -> list[np.ndarray]:
    points = sorted(points, key=lambda p: tuple(p))
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.max(np.abs(p - q)) > MERGE_TOL for q in kept):
            kept.append(p)
    return kept


def _report(A, kind, f, x, face, rest_set=False) -> RestPointReport:
    n = x.size
    others = [j for j in range(n) if j not in face]
    rates = tuple(float(r) for r in f.growth(x)[others])
    if len(face) >= 2:
        J, ok = _reduced_jacobian_checked(A, kind, x)
        eig = tuple(complex(v) for v in np.linalg.eigvals(J))
    else:
        ok, eig = True, ()
    simplex_class = classify_rest_point(eig + rates)
    if rest_set:
        face_class = REST_SET_SAMPLE
    elif len(face) >= 2:
        face_class = classify_rest_point(eig)
    else:
        face_class = simplex_class
    return RestPointReport(
        location=PopulationState(x),
        support=face,
        eigenvalues=eig,
        invasion_rates=rates,
        stability=face_class,
        simplex_stability=REST_SET_SAMPLE if rest_set else simplex_class,
        residual=float(np.max(np.abs(f(x)))),
        jacobian_stable=ok,
    )


def _looks_like_rest_set(reports: list[RestPointReport]) -> bool:
    if len(reports) < 3:
        return False
    locs = [np.asarray(r.location) for r in reports]
    far = [
        (a, b, c)
        for a, b, c in itertools.combinations(range(len(locs)), 3)
        if min(
            np.max(np.abs(locs[a] - locs[b])),
            np.max(np.abs(locs[a] - locs[c])),
            np.max(np.abs(locs[b] - locs[c])),
        ) >= 1e-3
    ]
    if not far:
        return False
    # Isolated rest points are hyperbolic generically; a continuum has a zero mode.
    return all(any(abs(ev) <= HYPERBOLIC_TAU for ev in r.eigenvalues) for r in reports)


def search_rest_points(A, kind=FieldKind.IBR, seed: int = 0) -> RestPointSearch:
    """Search every face of the simplex for rest points.

    Vertices are always rest points.  Each face with two or more strategies
    is searched by damped Newton from its barycenter plus 50 quasi-random
    starts.  A face where no start converges is listed in ``empty_faces``;
    that absence is heuristic.
    """
    kind = FieldKind.parse(kind)
    a = np.asarray(A, dtype=float)
    n = a.shape[0]
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive face search supports n <= {MAX_EXHAUSTIVE_N}, got {n}")
    f = field_function(a, kind)
    points: list[RestPointReport] = []
    empty: list[tuple[int, ...]] = []

    for i in range(n):
        x = np.zeros(n)
        x[i] = 1.0
        points.append(_report(a, kind, f, x, (i,)))

    for s in range(2, n + 1):
        for face in itertools.combinations(range(n), s):
            found = []
            for start in _face_starts(s, seed):
                x = _newton_on_face(f, face, n, start[:-1])
                if x is None:
                    continue
                if np.max(np.abs(f(x))) <= REST_TOL and np.max(np.abs(f.growth(x)[list(face)])) <= 1e-8:
                    found.append(x)
            found = _dedup(found)
            if not found:
                empty.append(face)
                continue
            reports = [_report(a, kind, f, x, face) for x in found]
            if _looks_like_rest_set(reports):
                reports = [_report(a, kind, f, x, face, rest_set=True) for x in found]
            points.extend(reports)
    return RestPointSearch(points=points, empty_faces=empty, kind=kind)


def find_rest_points(A, kind=FieldKind.IBR, seed: int = 0) -> list[RestPointReport]:
    return search_rest_points(A, kind, seed).points


# --- two-strategy games -----------------------------------------------------

@dataclass(frozen=True)
class TwoStrategyClass:
    """Ordinal type of a 2x2 game and its interior rest points.

    ``relabeled`` is set when the game matches a catalog pattern only after
    swapping the two strategies; rest points are always reported as the share
    of the game's own first strategy.
    """

    label: str
    interior_rest_points: tuple[float, ...]
    interior_stability: tuple[str, ...]
    dynamics_id: str | None
    relabeled: bool = False


_CATALOG = {ordinal_pattern(m).key(): label for label, m in TABLE1.items()}


def _catalog_label(A) -> str | None:
    return _CATALOG.get(ordinal_pattern(A).key())


def _bisect(p, lo, hi, tol=1e-12):
    """Bisect past ``tol`` down to adjacent floats; the extra steps are cheap."""
    flo = p(lo)
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        fm = p(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def interior_roots(coeffs, grid: int = 400) -> list[float]:
    """Roots of a polynomial in (0, 1) by sign scan plus bisection (to at least 1e-12)."""

    def p(s):
        return float(np.polynomial.polynomial.polyval(s, coeffs))

    xs = np.linspace(0.0, 1.0, grid + 1)[1:-1]
    vals = [p(s) for s in xs]
    roots = []
    for k, (s, v) in enumerate(zip(xs, vals)):
        if v == 0:
            roots.append(float(s))
        elif k + 1 < len(xs) and vals[k + 1] != 0 and (v < 0) != (vals[k + 1] < 0):
            roots.append(_bisect(p, s, xs[k + 1]))
    return roots


def classify_two_strategy(A, kind=FieldKind.IBR) -> TwoStrategyClass:
    a = np.asarray(A, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"classify_two_strategy needs a 2x2 game, got {a.shape}")
    K = ordinal_pattern(a).K
    relabeled = False
    if K == 1:
        label = "degenerate"
    elif K == 2:
        label = "two_payoff"
    else:
        label = _catalog_label(a)
        if label is None:
            label = _catalog_label(permute(a, (1, 0)))
            relabeled = label is not None
        if label is None:
            label = "degenerate"

    coeffs = two_strategy_polynomial(a, kind)
    roots = interior_roots(coeffs)
    dcoeffs = np.polynomial.polynomial.polyder(coeffs)
    classes = tuple(classify_rest_point([np.polynomial.polynomial.polyval(r, dcoeffs)]) for r in roots)
    dyn = next((cf.row_id for cf in CLOSED_FORMS if label in cf.labels), None)
    return TwoStrategyClass(label, tuple(roots), classes, dyn, relabeled)


# --- dominance ----------------------------------------------------------------

class Domination(NamedTuple):
    dominator: int
    dominated: int


@dataclass(frozen=True)
class EliminationTrace:
    rounds: tuple[Domination, ...]
    survivors: tuple[int, ...]


def strictly_dominated_pairs(A, strategies=None) -> list[Domination]:
    """Pairs ``(i, j)`` with ``pi_ik > pi_jk`` for every opponent ``k``.

    With ``strategies`` given, both players are restricted to that subset.
    """
    a = np.asarray(A, dtype=float)
    s = list(range(a.shape[0])) if strategies is None else sorted(strategies)
    sub = a[np.ix_(s, s)]
    return [
        Domination(s[i], s[j])
        for i in range(len(s))
        for j in range(len(s))
        if i != j and np.all(sub[i] > sub[j])
    ]


def weakly_dominated_pairs(A, strategies=None) -> list[Domination]:
    """Weak dominance, listed for documentation only; never used for elimination."""
    a = np.asarray(A, dtype=float)
    s = list(range(a.shape[0])) if strategies is None else sorted(strategies)
    sub = a[np.ix_(s, s)]
    return [
        Domination(s[i], s[j])
        for i in range(len(s))
        for j in range(len(s))
        if i != j and np.all(sub[i] >= sub[j]) and np.any(sub[i] > sub[j])
    ]


def iterated_elimination(A) -> EliminationTrace:
    """Remove strictly dominated pure strategies one at a time.

    Each round removes the lowest-indexed dominated strategy, crediting its
    lowest-indexed dominator, then re-examines the restricted game.
    """
    survivors = list(range(np.asarray(A).shape[0]))
    rounds = []
    while True:
        pairs = strictly_dominated_pairs(A, survivors)
        if not pairs:
            break
        victim = min(p.dominated for p in pairs)
        by = min(p.dominator for p in pairs if p.dominated == victim)
        rounds.append(Domination(by, victim))
        survivors.remove(victim)
    return EliminationTrace(tuple(rounds), tuple(survivors))


def growth_rate_gap(x, A, i: int, j: int) -> float:
    """``xdot_i/x_i - xdot_j/x_j`` under IBR."""
    v = np.asarray(x, dtype=float)
    if v[i] <= 0 or v[j] <= 0:
        raise ValueError("growth_rate_gap needs x_i > 0 and x_j > 0")
    g = IBRField(A).growth(v)
    return float(g[i] - g[j])


# --- self-negation --------------------------------------------------------------

def _is_negating_relabel(f, sigma, states, tol) -> bool:
    inv = invert_permutation(sigma)
    for x in states:
        lhs = -f(x)
        rhs = permute_state(f(permute_state(x, inv)), sigma)
        if np.max(np.abs(lhs - rhs)) > tol:
            return False
    return True


def self_negation_witness(A, samples: int = 200, tol: float = 1e-10, seed: int = 0):
    """Find a relabeling that turns the IBR flow of ``A`` into its time reversal.

    Returns a permutation ``sigma`` (as a tuple) such that
    ``-F(x) == sigma(F(sigma^-1(x)))`` on ``samples`` quasi-random interior
    states, or ``None``.  For three strategies only transpositions are tried;
    for more strategies every non-identity permutation is tried and an
    :class:`ExperimentalWarning` is issued.  Passing is a sampled
    certificate, not a proof.
    """
    a = np.asarray(A, dtype=float)
    n = a.shape[0]
    f = IBRField(a)
    states = quasi_random_states(n, samples, seed=seed)
    if n <= 3:
        candidates = [transposition(n, i, j) for i, j in itertools.combinations(range(n), 2)]
    else:
        warnings.warn(
            "self-negation for more than three strategies is a heuristic permutation search",
            ExperimentalWarning,
            stacklevel=2,
        )
        ident = tuple(range(n))
        candidates = [p for p in itertools.permutations(range(n)) if p != ident]
    for sigma in candidates:
        if _is_negating_relabel(f, sigma, states, tol):
            return sigma
    return None


# --- strict equilibria ----------------------------------------------------------

INFLOW_LOWER = 1.0 / np.sqrt(2.0) + 1e-6


def is_strict_equilibrium(A, i: int) -> bool:
    a = np.asarray(A, dtype=float)
    return all(a[i, i] > a[j, i] for j in range(a.shape[0]) if j != i)


def inflow_samples(n: int, i: int, samples: int, lower: float, seed: int = 0) -> np.ndarray:
    """States with ``x_i`` spread over ``(lower, 1)`` and the rest mixed quasi-randomly."""
    u = qmc.Halton(d=max(n - 1, 1), scramble=True, seed=seed).random(samples)
    xi = lower + (1.0 - lower) * np.clip(u[:, 0], 1e-12, 1 - 1e-12)
    if n == 2:
        mix = np.ones((samples, 1))
    else:
        rest = np.sort(np.clip(u[:, 1:], 1e-12, 1 - 1e-12), axis=1)
        mix = np.diff(np.hstack([np.zeros((samples, 1)), rest, np.ones((samples, 1))]), axis=1)
    out = np.empty((samples, n))
    others = [j for j in range(n) if j != i]
    out[:, i] = xi
    out[:, others] = (1.0 - xi)[:, None] * mix
    return out


def inflow_violations(A, i: int, samples: int, lower: float = INFLOW_LOWER, seed: int = 0) -> np.ndarray:
    """Sampled states with ``x_i > lower`` at which ``xdot_i <= 0``."""
    a = np.asarray(A, dtype=float)
    if not is_strict_equilibrium(a, i):
        raise ValueError(f"strategy {i} is not a strict equilibrium")
    f = IBRField(a)
    pts = inflow_samples(a.shape[0], i, samples, lower, seed)
    bad = [x for x in pts if f(x)[i] <= 0]
    return np.array(bad).reshape(-1, a.shape[0])


def strict_equilibrium_inflow_check(A, i: int, samples: int = 1000, lower: float = INFLOW_LOWER,
                                    seed: int = 0) -> bool:
    """True when ``xdot_i > 0`` at every sampled state with ``x_i`` in ``(lower, 1)``.

    The default ``lower`` is ``1/sqrt(2) + 1e-6``: below ``1/sqrt(2)`` a strict
    equilibrium can lose share (the 2x2 coordination game ``[[4,1],[3,2]]``
    does on ``(0.293, 0.5)``).  The vertex itself is never sampled.
    """
    return len(inflow_violations(A, i, samples, lower, seed)) == 0
