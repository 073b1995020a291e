"""Simulated annealing over width-constrained flip walks on prismatoids."""
from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from .complex import SimplicialComplex, iter_bits
from .exceptions import NonpositiveTemperatureError
from .flips import Flip, _apply_masks, _candidate, _to_flip, apply_flip, ridge_index, sample_flip
from .prismatoid import Prismatoid, validate_prismatoid


@dataclass(frozen=True)
class Schedule:
    """Geometric cooling ``T(k) = t0 * rate**k`` for ``iterations`` steps."""

    t0: float = 1000.0
    rate: float = 0.99997
    iterations: int = 500_000

    def __post_init__(self):
        if not self.t0 > 0:
            raise NonpositiveTemperatureError("t0 must be positive")
        if not 0 < self.rate < 1:
            raise ValueError("rate must lie in (0, 1)")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")

    def temperature(self, k: int) -> float:
        return self.t0 * self.rate ** k


@dataclass(frozen=True)
class Objective:
    """Vertex count plus ``epsilon`` times the ``power``-mean of vertex neighborhood sizes."""

    epsilon: float = 0.01
    power: float = -3.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.power < 0:
            raise ValueError("power must be negative")

    def from_sizes(self, sizes: Counter) -> float:
        n = sum(sizes.values())
        p = self.power
        total = math.fsum(c * s ** p for s, c in sizes.items())
        return n + self.epsilon * (total / n) ** (1 / p)


def neighborhood_sizes(P: Prismatoid) -> Counter:
    """Histogram of ``|neigh(v)|`` (counting ``v`` itself) over the vertices."""
    faces = P.complex._faces
    return Counter(faces[b].bit_count() for b in iter_bits(P.complex._used))


def cost(P: Prismatoid, objective: Objective = Objective()) -> float:
    return objective.from_sizes(neighborhood_sizes(P))


def accept_probability(delta_cost: float, temperature: float) -> float:
    if not temperature > 0:
        raise NonpositiveTemperatureError(f"temperature {temperature} is not positive")
    if delta_cost < 0:
        return 1.0
    return math.exp(-delta_cost / temperature)


@dataclass(frozen=True)
class TraceEntry:
    step: int
    flip: Flip

    def to_line(self) -> str:
        return self.flip.to_line()


@dataclass
class AnnealRun:
    seed: int | None
    schedule: Schedule
    objective: Objective
    min_width: int
    exact_width: bool = False
    trace: list[TraceEntry] = field(default_factory=list)
    best: Prismatoid | None = None
    best_step: int = 0
    best_cost: float = math.inf
    final: Prismatoid | None = None
    accepted: int = 0
    rejected: int = 0
    constraint_rejected: int = 0
    iterations_done: int = 0
    timed_out: bool = False

    def summary_line(self) -> str:
        b = self.best
        return (f"run seed={self.seed} iters={self.iterations_done} best_v={b.n_vertices} "
                f"best_f={b.n_facets} best_width={_fmt_width(b.width())}")

    def trace_lines(self) -> list[str]:
        return [e.to_line() for e in self.trace]


def _fmt_width(w) -> str:
    return "inf" if w == math.inf else str(int(w))


class _Chain:
    """Mutable annealing state: the prismatoid plus its neighborhood-size histogram."""

    def __init__(self, P: Prismatoid, objective: Objective):
        self.P = P
        self.objective = objective
        self.sizes = neighborhood_sizes(P)
        self.cost = objective.from_sizes(self.sizes)

    def _support_sizes(self, s: int) -> list[int]:
        faces = self.P.complex._faces
        out = []
        for b in iter_bits(s):
            nb = faces.get(b)
            if nb is not None:
                out.append(nb.bit_count())
        return out

    def apply(self, f: int, l: int, v: int, insertion: bool) -> float:
        """Apply masks, update the histogram, return the new cost."""
        s = f | l | v
        sizes = self.sizes
        for k in self._support_sizes(s):
            sizes[k] -= 1
            if not sizes[k]:
                del sizes[k]
        _apply_masks(self.P, f, l, v, insertion)
        for k in self._support_sizes(s):
            sizes[k] += 1
        self.cost = self.objective.from_sizes(sizes)
        return self.cost


def _sample_masks(P: Prismatoid, rng: random.Random):
    idx = ridge_index(P)
    for _ in range(64):
        got = _candidate(P, idx.sample(rng))
        if got is not None:
            return got
    flip = sample_flip(P, rng, max_tries=0)
    C = P.complex
    v = 0 if flip.v is None else C._mask((flip.v,))
    if flip.inserts_vertex and C._mask(flip.l) is None:
        C._register(next(iter(flip.l)))
    return C._mask(flip.f), C._mask(flip.l), v


def _is_insertion(P: Prismatoid, f: int, l: int, v: int) -> bool:
    return bool(v) and l.bit_count() == 1 and not (l & P.complex._used)


def _width_ok(w, min_width: int, exact: bool) -> bool:
    return w == min_width if exact else w >= min_width


def anneal_step(run: AnnealRun, chain: _Chain, k: int, rng: random.Random) -> bool:
    """One proposal at temperature ``T(k)``; returns whether it was accepted."""
    P = chain.P
    f, l, v = _sample_masks(P, rng)
    insertion = _is_insertion(P, f, l, v)
    old_cost = chain.cost
    flip = _to_flip(P, f, l, v)
    new_cost = chain.apply(f, l, v, insertion)
    if not _width_ok(P.width(), run.min_width, run.exact_width):
        chain.apply(l, f, v, _is_insertion(P, l, f, v))
        run.constraint_rejected += 1
        return False
    if rng.random() < accept_probability(new_cost - old_cost, run.schedule.temperature(k)):
        run.accepted += 1
        run.trace.append(TraceEntry(k, flip))
        return True
    chain.apply(l, f, v, _is_insertion(P, l, f, v))
    run.rejected += 1
    return False


def anneal_run(start: Prismatoid, schedule: Schedule = Schedule(), objective: Objective = Objective(),
               min_width: int | None = None, seed: int | None = None, exact_width: bool = False,
               progress=None, progress_every: int = 10_000,
               deadline: float | None = None) -> AnnealRun:
    """Anneal a copy of ``start``; the best state is the one with fewest vertices, then lowest cost.

    ``deadline`` is a :func:`time.monotonic` instant; the run stops early
    (``timed_out=True``) once it has passed.
    """
    P = start.copy()
    if min_width is None:
        min_width = int(P.width()) if exact_width else P.d + 1
    if not _width_ok(P.width(), min_width, exact_width):
        raise ValueError(f"start width {P.width()} violates the width constraint {min_width}")
    rng = random.Random(seed)
    run = AnnealRun(seed, schedule, objective, min_width, exact_width)
    chain = _Chain(P, objective)
    best_key = (P.n_vertices, chain.cost)
    best_state = _snapshot(P)
    run.best_cost = chain.cost
    for k in range(schedule.iterations):
        if anneal_step(run, chain, k, rng):
            key = (P.n_vertices, chain.cost)
            if key < best_key:
                best_key, best_state = key, _snapshot(P)
                run.best_step, run.best_cost = k + 1, chain.cost
        run.iterations_done = k + 1
        if progress is not None and (k + 1) % progress_every == 0:
            progress(run, P)
        if deadline is not None and k % 256 == 255 and time.monotonic() > deadline:
            run.timed_out = True
            break
    run.final = P
    run.best = _restore(P, best_state)
    return run


def _snapshot(P: Prismatoid):
    return list(P.complex._facets), P._plus, P._minus


def _restore(template: Prismatoid, state) -> Prismatoid:
    facets, plus, minus = state
    T = template.complex
    C = SimplicialComplex._from_masks(T, facets, True)
    return Prismatoid(C, T._tokens(plus), T._tokens(minus))


def inflate_walk(P: Prismatoid, steps: int, rng: random.Random, insertion_bias: float = 1.0,
                 min_width: int | None = None, target_vertices: int | None = None
                 ) -> tuple[Prismatoid, list[Flip]]:
    """Random flip walk on a copy of ``P`` favouring vertex insertions.

    Each of ``steps`` proposals is a uniform valid flip. Insertions are kept
    whenever the width constraint holds; other flips are kept with
    probability ``1 - insertion_bias``. Stops early once ``target_vertices``
    is reached. Returns the new prismatoid and the applied flips; applying
    their inverses in reverse order restores ``P``.
    """
    Q = P.copy()
    if min_width is None:
        min_width = Q.d + 1
    applied: list[Flip] = []
    for _ in range(steps):
        if target_vertices is not None and Q.n_vertices >= target_vertices:
            break
        flip = sample_flip(Q, rng)
        keep = flip.inserts_vertex or rng.random() >= insertion_bias
        if not keep:
            continue
        inverse = apply_flip(Q, flip, check=False)
        if Q.width() < min_width:
            apply_flip(Q, inverse, check=False)
            continue
        applied.append(flip)
    return Q, applied


def deflate(P: Prismatoid, applied: Sequence[Flip]) -> Prismatoid:
    """Undo the flips recorded by :func:`inflate_walk` on a copy of ``P``."""
    Q = P.copy()
    for flip in reversed(applied):
        apply_flip(Q, flip.inverse())
    return Q


def replay_run(start: Prismatoid, run_or_flips) -> Prismatoid:
    """Re-apply the accepted flips of a run (or a flip list) to a copy of ``start``."""
    flips = run_or_flips.trace if isinstance(run_or_flips, AnnealRun) else run_or_flips
    Q = start.copy()
    for entry in flips:
        apply_flip(Q, entry.flip if isinstance(entry, TraceEntry) else entry)
    return Q


def _chain_job(start, schedule, objective, min_width, seed, exact_width, keep_trace, time_limit):
    deadline = None if time_limit is None else time.monotonic() + time_limit
    run = anneal_run(start, schedule, objective, min_width, seed, exact_width, deadline=deadline)
    if not keep_trace:
        run.trace = []
    return run


def run_chains(start: Prismatoid, seeds: Iterable[int], schedule: Schedule = Schedule(),
               objective: Objective = Objective(), min_width: int | None = None,
               exact_width: bool = False, n_jobs: int | None = None,
               keep_trace: bool = True, time_limit: float | None = None) -> list[AnnealRun]:
    """Independent chains, one per seed, optionally in parallel processes.

    ``time_limit`` caps the wall-clock seconds of each chain.
    """
    seeds = list(seeds)
    jobs = (delayed(_chain_job)(start, schedule, objective, min_width, s, exact_width, keep_trace,
                                time_limit)
            for s in seeds)
    return list(Parallel(n_jobs=n_jobs)(jobs))


def histogram(runs: Iterable[AnnealRun]) -> Counter:
    return Counter((r.best.n_vertices, r.best.n_facets) for r in runs)


def histogram_csv(runs: Iterable[AnnealRun]) -> str:
    rows = ["vertices,facets,count"]
    for (v, f), c in sorted(histogram(runs).items()):
        rows.append(f"{v},{f},{c}")
    return "\n".join(rows) + "\n"


def check_prismatoid(X) -> Prismatoid:
    """Coerce an estimator input (prismatoid or path to a PRISMATOID file)."""
    if isinstance(X, Prismatoid):
        return X
    if isinstance(X, (str, Path)):
        from .io import parse_file

        P = parse_file(X)
        if not isinstance(P, Prismatoid):
            raise TypeError(f"{X} holds a complex, not a prismatoid")
        return P
    if isinstance(X, tuple) and len(X) == 3:
        return validate_prismatoid(*X)
    raise TypeError(f"cannot interpret {type(X).__name__} as a prismatoid")


class PrismatoidAnnealer(BaseEstimator):
    """Estimator wrapper around :func:`run_chains`.

    ``fit(P)`` anneals ``n_chains`` copies of ``P`` and keeps the best final
    answer in ``best_``; per-chain results are in ``runs_``.
    """

    def __init__(self, t0=1000.0, rate=0.99997, n_iter=500_000, epsilon=0.01, power=-3.0,
                 min_width=None, exact_width=False, n_chains=1, n_jobs=None, random_state=None):
        self.t0 = t0
        self.rate = rate
        self.n_iter = n_iter
        self.epsilon = epsilon
        self.power = power
        self.min_width = min_width
        self.exact_width = exact_width
        self.n_chains = n_chains
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _seeds(self) -> list[int]:
        if isinstance(self.random_state, random.Random):
            rng = self.random_state
        else:
            rng = random.Random(self.random_state)
        return [rng.randrange(2 ** 32) for _ in range(self.n_chains)]

    def fit(self, X, y=None):
        P = check_prismatoid(X)
        schedule = Schedule(self.t0, self.rate, self.n_iter)
        objective = Objective(self.epsilon, self.power)
        self.runs_ = run_chains(P, self._seeds(), schedule, objective, self.min_width,
                                self.exact_width, self.n_jobs)
        best = min(self.runs_, key=lambda r: (r.best.n_vertices, r.best_cost))
        self.best_run_ = best
        self.best_ = best.best
        self.best_width_ = best.best.width()
        self.n_vertices_ = best.best.n_vertices
        return self

    def score(self, X, y=None) -> float:
        """Negative objective value of ``X``."""
        return -cost(check_prismatoid(X), Objective(self.epsilon, self.power))
