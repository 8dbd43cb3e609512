"""Finite-population simulation of the imitate-the-better-realization protocol.

Agents are kept implicitly sorted by strategy, so an agent index in
``[0, N)`` identifies a strategy through the cumulative counts.  Each
revision draws four agents: the reviser, the reviser's match opponent, the
candidate to imitate and the candidate's match opponent.  Both match
opponents are drawn from the whole population with replacement.  With
``self_exclusion`` the candidate is drawn from the other ``N - 1`` agents,
which scales the expected drift by exactly ``N / (N - 1)`` relative to the
mean-field velocity at ``counts / N``.
"""
from __future__ import annotations

import itertools
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import FieldKind
from .flow import Trajectory, integrate
from .game import PayoffMatrix, PopulationState


@dataclass(frozen=True)
class AgentPopulation:
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")
        if sum(self.counts) < 2:
            raise ValueError("a population needs at least 2 agents")

    @property
    def N(self) -> int:
        return sum(self.counts)

    @property
    def state(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.N

    @classmethod
    def from_state(cls, x, N: int) -> AgentPopulation:
        """Round ``N * x`` to integer counts by largest remainder (ties to lower index)."""
        v = PopulationState(x).x
        raw = v * N
        counts = np.floor(raw).astype(int)
        short = N - counts.sum()
        order = sorted(range(v.size), key=lambda i: (-(raw[i] - counts[i]), i))
        for i in order[:short]:
            counts[i] += 1
        return cls(tuple(int(c) for c in counts))


@dataclass(frozen=True)
class SimConfig:
    seed: int
    N: int
    horizon: float
    output_grid: int = 1000
    self_exclusion: bool = True

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.output_grid < 2:
            raise ValueError("output_grid needs at least 2 samples")


def _cumulative(counts) -> list[int]:
    return list(itertools.accumulate(counts))


def resolve_revision(cum, payoff, reviser, reviser_opp, candidate, candidate_opp, self_exclusion=True):
    """Outcome of one revision given the four sampled agent indices.

    ``candidate`` ranges over ``[0, N - 1)`` when ``self_exclusion`` is set
    (it skips the reviser) and over ``[0, N)`` otherwise.  Returns
    ``(i, j)`` when the reviser switches from ``i`` to ``j``, else ``None``.
    """
    if self_exclusion and candidate >= reviser:
        candidate += 1
    i = bisect_right(cum, reviser)
    j = bisect_right(cum, candidate)
    if i == j:
        return None
    m = bisect_right(cum, reviser_opp)
    k = bisect_right(cum, candidate_opp)
    if payoff[j][k] > payoff[i][m]:
        return i, j
    return None


def revise_once(pop: AgentPopulation, A, rng: np.random.Generator, self_exclusion: bool = True) -> AgentPopulation:
    N = pop.N
    cum = _cumulative(pop.counts)
    payoff = np.asarray(A, dtype=float).tolist()
    r, ro, co = (int(v) for v in rng.integers(0, N, size=3))
    c = int(rng.integers(0, N - 1 if self_exclusion else N))
    move = resolve_revision(cum, payoff, r, ro, c, co, self_exclusion)
    if move is None:
        return pop
    counts = list(pop.counts)
    counts[move[0]] -= 1
    counts[move[1]] += 1
    return AgentPopulation(tuple(counts))


def expected_increment(pop: AgentPopulation, A, self_exclusion: bool = True) -> np.ndarray:
    """Exact expected change of the counts in one revision, by enumerating
    every tuple of sampled agents (``N**4`` cases; meant for small ``N``)."""
    N = pop.N
    cum = _cumulative(pop.counts)
    payoff = np.asarray(A, dtype=float).tolist()
    n = len(pop.counts)
    total = np.zeros(n)
    cand_range = N - 1 if self_exclusion else N
    for r, ro, c, co in itertools.product(range(N), range(N), range(cand_range), range(N)):
        move = resolve_revision(cum, payoff, r, ro, c, co, self_exclusion)
        if move is not None:
            total[move[0]] -= 1
            total[move[1]] += 1
    return total / (N * N * cand_range * N)


def transition_probabilities(pop: AgentPopulation, A, self_exclusion: bool = True) -> dict[tuple[int, int], float]:
    """Exact probability of each switch ``i -> j`` in one revision (small ``N``)."""
    N = pop.N
    cum = _cumulative(pop.counts)
    payoff = np.asarray(A, dtype=float).tolist()
    cand_range = N - 1 if self_exclusion else N
    hits: dict[tuple[int, int], int] = {}
    for r, ro, c, co in itertools.product(range(N), range(N), range(cand_range), range(N)):
        move = resolve_revision(cum, payoff, r, ro, c, co, self_exclusion)
        if move is not None:
            hits[move] = hits.get(move, 0) + 1
    total = N * N * cand_range * N
    return {k: v / total for k, v in sorted(hits.items())}


_BATCH = 4096


def simulate(config: SimConfig, A, x0) -> Trajectory:
    """Run the finite-population process and record ``counts / N`` on a grid.

    Every agent carries a rate-1 revision clock, so events arrive at rate
    ``N`` and one unit of simulated time matches one unit of mean-field time.
    Output is a deterministic function of ``config.seed``.
    """
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    pop = AgentPopulation.from_state(x0, config.N)
    N = config.N
    counts = list(pop.counts)
    payoff = game.entries.tolist()
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    grid = np.linspace(0.0, config.horizon, config.output_grid)
    states = np.empty((grid.size, len(counts)))
    cand_range = N - 1 if config.self_exclusion else N

    gi = 0
    t = 0.0
    while True:
        waits = rng.exponential(1.0 / N, size=_BATCH)
        agents = rng.integers(0, N, size=(_BATCH, 3)).tolist()
        cands = rng.integers(0, cand_range, size=_BATCH).tolist()
        done = False
        for w, (r, ro, co), c in zip(waits.tolist(), agents, cands):
            t += w
            while gi < grid.size and grid[gi] < t:
                states[gi] = counts
                gi += 1
            if gi == grid.size:
                done = True
                break
            cum = list(itertools.accumulate(counts))
            move = resolve_revision(cum, payoff, r, ro, c, co, config.self_exclusion)
            if move is not None:
                counts[move[0]] -= 1
                counts[move[1]] += 1
        if done:
            break
    return Trajectory(grid, states / N, FieldKind.IBR, game)


@dataclass(frozen=True)
class DeviationReport:
    sup_gap: float
    t_at_sup: float
    per_strategy: tuple[float, ...]


def deviation_report(empirical: Trajectory, deterministic: Trajectory) -> DeviationReport:
    te, td = np.asarray(empirical.times), np.asarray(deterministic.times)
    if te.shape != td.shape or not np.allclose(te, td, rtol=0, atol=1e-12):
        raise ValueError("trajectories are not on the same output grid")
    diff = np.abs(np.asarray(empirical.states) - np.asarray(deterministic.states))
    row, _ = np.unravel_index(np.argmax(diff), diff.shape)
    return DeviationReport(float(diff.max()), float(te[row]), tuple(float(v) for v in diff.max(axis=0)))


@dataclass(frozen=True)
class ReplicateSummary:
    seed: int
    N: int
    sup_gap: float
    t_at_sup: float


def _one_replicate(args) -> ReplicateSummary:
    game, x0, N, seed, horizon, samples, self_exclusion, reference = args
    emp = simulate(SimConfig(seed, N, horizon, samples, self_exclusion), game, x0)
    rep = deviation_report(emp, reference)
    return ReplicateSummary(seed, N, rep.sup_gap, rep.t_at_sup)


def replicate_gaps(A, x0, N: int, seeds, horizon: float, samples: int = 1000,
                   self_exclusion: bool = True, workers: int = 1) -> list[ReplicateSummary]:
    """Sup-norm gap to the integrated mean dynamics for each seed, sorted by seed."""
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    start = AgentPopulation.from_state(x0, N).state
    reference = integrate(game, FieldKind.IBR, start, horizon, samples=samples)
    jobs = [(game, x0, N, int(s), horizon, samples, self_exclusion, reference) for s in sorted(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one_replicate, jobs))
    else:
        out = [_one_replicate(j) for j in jobs]
    return sorted(out, key=lambda r: r.seed)


def summary_csv(rows) -> str:
    lines = ["seed,N,sup_gap,t_at_sup"]
    lines += [f"{r.seed},{r.N},{r.sup_gap:.17g},{r.t_at_sup:.17g}" for r in rows]
    return "\n".join(lines) + "\n"
