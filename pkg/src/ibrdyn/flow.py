"""Integration of the mean dynamics on the simplex and orbit diagnostics."""
from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import FieldKind, field_function
from .game import PayoffMatrix, PopulationState, negate, quasi_random_states

ABS_TOL = 1e-10
H_INITIAL = 1e-3
H_MIN = 1e-12
H_MAX = 0.1
TOL_ORBIT = 1e-6
DEFAULT_SAMPLES = 1000
CLASSIFY_HORIZON = 200.0
PROBE_HORIZON = 500.0


class StepUnderflowError(RuntimeError):
    """The adaptive step fell below the minimum; ``partial`` holds what was computed."""

    def __init__(self, message: str, partial: Trajectory):
        super().__init__(message)
        self.partial = partial


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    kind: FieldKind
    game: PayoffMatrix

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        return trajectory_csv(self.times, self.states)


def trajectory_csv(times, states) -> str:
    """Render ``t,x1,...,xn`` rows with 17 significant digits (exact round trip)."""
    states = np.asarray(states, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(states.shape[1])])
    for t, row in zip(times, states):
        w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t":
        raise ValueError("trajectory CSV must start with a 't' column")
    data = np.array([[float(v) for v in r] for r in body if r])
    return data[:, 0], data[:, 1:]


def _rk4(f, x, h, k1=None):
    if k1 is None:
        k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class AdaptiveRK4:
    """Classic RK4 with step-doubling error control on the simplex.

    A step is rejected when the doubled-step error exceeds ``atol`` in any
    component or when a share would turn negative.  Coordinates that were
    zero at the start are pinned at exactly zero, and every accepted state is
    renormalized to unit sum.
    """

    def __init__(self, f, x0, atol=ABS_TOL, h0=H_INITIAL, hmin=H_MIN, hmax=H_MAX):
        self.f = f
        self.atol = atol
        self.h = h0
        self.hmin = hmin
        self.hmax = hmax
        self.zero_mask = np.asarray(x0, dtype=float) == 0

    def step(self, x, t_limit):
        """Advance by one accepted step of at most ``t_limit``; returns ``(dt, x_new)``."""
        k1 = self.f(x)
        while True:
            h = min(self.h, self.hmax, t_limit)
            if h < self.hmin and h < t_limit:
                raise FloatingPointError(f"step size {h:.3g} below minimum {self.hmin:g}")
            full = _rk4(self.f, x, h, k1)
            half = _rk4(self.f, x, 0.5 * h, k1)
            half = _rk4(self.f, half, 0.5 * h)
            err = float(np.max(np.abs(half - full))) / 15.0
            if err <= self.atol and np.all(half >= 0):
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * (self.atol / err) ** 0.2))
                if h == min(self.h, self.hmax):
                    self.h = min(h * fac, self.hmax)
                x_new = half
                x_new[self.zero_mask & (np.abs(x_new) < 1e-15)] = 0.0
                x_new = x_new / x_new.sum()
                return h, x_new
            self.h = 0.5 * h if err <= self.atol else h * max(0.2, 0.9 * (self.atol / err) ** 0.2)


def _start(x0) -> np.ndarray:
    return np.array(PopulationState(x0).x, dtype=float)


def integrate(A, kind, x0, horizon: float, atol: float = ABS_TOL, samples: int | None = DEFAULT_SAMPLES,
              h0: float = H_INITIAL, hmin: float = H_MIN, hmax: float = H_MAX) -> Trajectory:
    """Integrate the mean dynamics from ``x0`` over ``[0, horizon]``.

    With ``samples`` set, states are recorded on an evenly spaced grid of that
    many points (steps are shortened to land on grid times); with
    ``samples=None`` every accepted step is recorded.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    kind = FieldKind.parse(kind)
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    f = field_function(game, kind)
    x = _start(x0)
    stepper = AdaptiveRK4(f, x, atol, h0, hmin, hmax)
    if samples is not None:
        grid = np.linspace(0.0, horizon, samples)
    times, states = [0.0], [x.copy()]
    t = 0.0
    gi = 1
    while t < horizon:
        target = grid[gi] if samples is not None else horizon
        try:
            dt, x = stepper.step(x, target - t)
        except FloatingPointError as exc:
            partial = Trajectory(np.array(times), np.array(states), kind, game)
            raise StepUnderflowError(f"{exc} at t={t:.6g}", partial) from None
        t = target if dt == target - t else t + dt
        if samples is None:
            times.append(t)
            states.append(x.copy())
        elif t >= target:
            times.append(float(grid[gi]))
            states.append(x.copy())
            gi += 1
    return Trajectory(np.array(times), np.array(states), kind, game)


def lyapunov_H(x, xstar) -> float:
    """``sum_i x*_i log(x_i / x*_i)``; nonpositive, zero only at ``x*``."""
    v = np.asarray(x, dtype=float)
    s = np.asarray(xstar, dtype=float)
    if np.any(v <= 0) or np.any(s <= 0):
        raise ValueError("lyapunov_H needs strictly positive states")
    return float(np.sum(s * np.log(v / s)))


# --- Poincare sections ----------------------------------------------------------

@dataclass(frozen=True)
class Crossing:
    t: float
    state: np.ndarray
    position: float
    offset: float
    distance: float | None


@dataclass
class PoincareReturns:
    """Same-direction crossings of a section through the third vertex.

    The section is ``c_k x_j == c_j x_k`` for the center ``c`` (the bisector
    ``x_j == x_k`` when no center is known or ``c_j == c_k``); ``position``
    parameterizes it by the share of the third strategy.  ``offset`` is the signed displacement from the start along the
    section and ``distance`` the distance from ``center`` (when known).
    """

    game: PayoffMatrix
    kind: FieldKind
    x0: np.ndarray
    section: tuple[int, int]
    direction: int
    center: np.ndarray | None
    start_on_section: bool
    crossings: list[Crossing]
    partial: bool
    final_time: float
    final_state: np.ndarray
    tail: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def distances(self) -> list[float]:
        """Distances from the center, with the start first when it lies on the section."""
        if self.center is None:
            return []
        free = self._free
        d = [abs(c.position - self.center[free]) for c in self.crossings]
        if self.start_on_section:
            d.insert(0, abs(self.x0[free] - self.center[free]))
        return d

    def offsets(self) -> list[float]:
        return [c.offset for c in self.crossings]

    @property
    def _free(self) -> int:
        return ({0, 1, 2} - set(self.section)).pop()


def default_section(center) -> tuple[int, int]:
    """Pair of strategies whose shares are closest at ``center`` (first pair on ties)."""
    c = np.asarray(center, dtype=float)
    pairs = [(0, 1), (0, 2), (1, 2)]
    return min(pairs, key=lambda p: (round(abs(c[p[0]] - c[p[1]]), 12), p))


def _interior_centers(A, kind):
    from .analysis import search_rest_points

    return [np.asarray(p.location) for p in search_rest_points(A, kind).interior()]


def poincare_returns(A, kind, x0, section=None, max_returns: int = 10, horizon: float = CLASSIFY_HORIZON,
                     center=None, atol: float = ABS_TOL, tail_samples: int = 50) -> PoincareReturns:
    """Integrate from ``x0`` and record returns to the section through ``center``.

    Crossings are bracketed by sign changes of ``c_k x_j - c_j x_k`` over accepted
    steps and located by root-finding on a single RK4 sub-step from the start
    of the bracketing step.  Only crossings in the reference direction count;
    the reference is the initial direction of motion when ``x0`` lies on the
    section, otherwise the direction of the first crossing.
    """
    kind = FieldKind.parse(kind)
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    if game.n != 3:
        raise ValueError("Poincare returns are implemented for three strategies")
    x = _start(x0)
    if center is None:
        centers = _interior_centers(game, kind)
        if centers:
            center = min(centers, key=lambda c: float(np.max(np.abs(c - x))))
    center = None if center is None else np.asarray(center, dtype=float)
    if section is None:
        section = default_section(center) if center is not None else (0, 1)
    j, k = section
    free = ({0, 1, 2} - {j, k}).pop()
    # The line through vertex `free` and the center; the bisector when c_j == c_k.
    bisector = center is None or abs(center[j] - center[k]) <= 1e-9
    wj, wk = (1.0, 1.0) if bisector else (center[k], center[j])

    f = field_function(game, kind)
    stepper = AdaptiveRK4(f, x, atol)

    def s_of(v):
        return wj * v[j] - wk * v[k]

    x_start = x.copy()
    on_section = abs(s_of(x)) <= 1e-14
    direction = 0
    if on_section:
        direction = int(np.sign(s_of(f(x))))
    crossings: list[Crossing] = []
    t = 0.0
    tail: deque[np.ndarray] = deque(maxlen=tail_samples)
    partial = True
    while t < horizon:
        try:
            dt, x_new = stepper.step(x, horizon - t)
        except FloatingPointError:
            break
        sa, sb = (0.0 if t == 0.0 and on_section else s_of(x)), s_of(x_new)
        if sa != 0 and (sb == 0 or (sa < 0) != (sb < 0)):
            crossing_dir = 1 if sa < 0 else -1
            if direction == 0:
                direction = crossing_dir
            if crossing_dir == direction:
                xa = x

                def g(tau, xa=xa):
                    return s_of(_rk4(f, xa, tau))

                tau = dt if sb == 0 else brentq(g, 0.0, dt, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                xc = _rk4(f, xa, tau)
                xc = xc / xc.sum()
                pos = float(xc[free])
                dist = None if center is None else abs(pos - center[free])
                crossings.append(Crossing(t + tau, xc, pos, pos - float(x_start[free]), dist))
        x = x_new
        t += dt
        tail.append(x.copy())
        if len(crossings) >= max_returns:
            partial = False
            break
    return PoincareReturns(
        game=game, kind=kind, x0=x_start, section=(j, k), direction=direction, center=center,
        start_on_section=on_section, crossings=crossings, partial=partial,
        final_time=t, final_state=x, tail=np.array(tail),
    )


# --- verdicts -----------------------------------------------------------------

CLOSED_ORBIT = "closed_orbit"
INWARD_SPIRAL = "inward_spiral"
OUTWARD_SPIRAL = "outward_spiral"
CONVERGED = "converged"
REACHED_BOUNDARY = "reached_boundary"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class OrbitVerdict:
    tag: str
    period: float | None = None
    rest_point: np.ndarray | None = None
    face: tuple[int, ...] | None = None
    evidence: tuple[float, ...] = ()
    diagnostics: str = ""


def orbit_classify(returns: PoincareReturns, rest_points=None, tol_orbit: float = TOL_ORBIT) -> OrbitVerdict:
    """Turn section returns and the end of the trajectory into a verdict.

    In order: return distances that all agree within ``tol_orbit`` give a
    closed orbit; three or more strictly monotone distances give an inward or
    outward spiral; an end state within 1e-7 of a rest point gives
    convergence; a share below 1e-9 gives a boundary verdict.  Anything else
    is ``undetermined``.
    """
    d = [v for v in returns.distances()]
    # Distances at rounding level carry no shape information.
    cut = next((i for i, v in enumerate(d) if v < 1e-9), len(d))
    d = d[:cut]
    diffs = np.diff(d)
    times = [c.t for c in returns.crossings]
    if returns.start_on_section:
        times.insert(0, 0.0)
    period = float(np.mean(np.diff(times))) if len(times) >= 2 else None
    if len(d) >= 3 and np.all(np.abs(diffs) <= tol_orbit):
        return OrbitVerdict(CLOSED_ORBIT, period=period, evidence=tuple(d))
    if len(d) >= 3 and np.all(diffs < 0):
        return OrbitVerdict(INWARD_SPIRAL, period=period, evidence=tuple(d))
    if len(d) >= 3 and np.all(diffs > 0):
        return OrbitVerdict(OUTWARD_SPIRAL, period=period, evidence=tuple(d))

    xf = np.asarray(returns.final_state, dtype=float)
    if rest_points is None:
        from .analysis import find_rest_points

        rest_points = [np.asarray(p.location) for p in find_rest_points(returns.game, returns.kind)]
    for rp in rest_points:
        rp = np.asarray(rp, dtype=float)
        if np.max(np.abs(xf - rp)) <= 1e-7:
            return OrbitVerdict(CONVERGED, rest_point=rp, evidence=tuple(d))
    if np.min(xf) < 1e-9:
        face = tuple(int(i) for i in np.flatnonzero(xf >= 1e-9))
        return OrbitVerdict(REACHED_BOUNDARY, face=face, evidence=tuple(d))
    return OrbitVerdict(
        UNDETERMINED, evidence=tuple(d),
        diagnostics=f"{len(d)} usable return distances; final state {xf.tolist()}",
    )


def classify_orbit(A, kind, x0, horizon: float = CLASSIFY_HORIZON, section=None, max_returns: int = 10,
                   center=None) -> OrbitVerdict:
    return orbit_classify(poincare_returns(A, kind, x0, section, max_returns, horizon, center))


def time_reversal_gap(A, kind, x0, horizon: float) -> float:
    """Max-norm distance from ``x0`` after running ``-A`` forward then ``A`` forward."""
    back = integrate(negate(A), kind, x0, horizon, samples=2)
    fwd = integrate(A, kind, back.final, horizon, samples=2)
    return float(np.max(np.abs(fwd.final - np.asarray(x0, dtype=float))))


def backward_return(A, kind, x0, section=None, horizon: float = CLASSIFY_HORIZON, center=None) -> PoincareReturns:
    """Returns of the time-reversed flow (the flow of ``-A``) from ``x0``."""
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    if center is None:
        centers = _interior_centers(game, kind)
        if centers:
            center = min(centers, key=lambda c: float(np.max(np.abs(c - np.asarray(x0)))))
    return poincare_returns(negate(game), kind, x0, section, 1, horizon, center)


def survival_probe(A, kind, i: int, starts=20, horizon: float = PROBE_HORIZON, threshold: float = 1e-3,
                   seed: int = 0) -> float:
    """Fraction of interior starts with ``x_i(horizon) > threshold``.

    ``starts`` is either a count (quasi-random interior points from ``seed``)
    or an explicit array of states.
    """
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    if np.isscalar(starts):
        pts = quasi_random_states(game.n, int(starts), seed=seed)
    else:
        pts = np.atleast_2d(np.asarray(starts, dtype=float))
    alive = 0
    for x0 in pts:
        traj = integrate(game, kind, x0, horizon, samples=2)
        alive += traj.final[i] > threshold
    return alive / len(pts)
