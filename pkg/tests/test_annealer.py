import math
import random
from collections import Counter

import numpy as np
import pytest
from sklearn.base import clone

import topoprism.annealer as annealer
from topoprism.annealer import (
    AnnealRun,
    Objective,
    PrismatoidAnnealer,
    Schedule,
    _Chain,
    accept_probability,
    anneal_run,
    anneal_step,
    cost,
    deflate,
    histogram_csv,
    inflate_walk,
    neighborhood_sizes,
    replay_run,
    run_chains,
)
from topoprism.complex import build_complex
from topoprism.exceptions import NonpositiveTemperatureError
from topoprism.flips import Flip, apply_flip
from topoprism.prismatoid import validate_prismatoid

from conftest import corpus


def power_mean_cost(P, eps=0.01, p=-3.0):
    sizes = np.array([len(P.complex.neighborhood([v])) for v in sorted(P.complex.vertices)], float)
    return len(sizes) + eps * np.mean(sizes ** p) ** (1 / p)


def inflated(n_insertions, seed=0):
    Q, _ = inflate_walk(corpus("p1039"), 10_000, random.Random(seed),
                        target_vertices=14 + n_insertions)
    return Q


# ---------------------------------------------------------------- cost
def test_cost_ann6(ann6):
    assert neighborhood_sizes(ann6) == Counter({5: 6})
    assert cost(ann6) == pytest.approx(6.05, abs=1e-12)


def test_cost_of_equal_sizes():
    assert Objective(0.01).from_sizes(Counter({7: 10})) == pytest.approx(10 + 0.07)


def test_cost_table_matches_direct_evaluation(bundled):
    assert cost(bundled) == pytest.approx(power_mean_cost(bundled), rel=1e-12)


def test_tie_breaker_below_half(bundled):
    assert cost(bundled) - bundled.n_vertices < 0.5
    Q = inflated(6)
    assert cost(Q) - Q.n_vertices < 0.5


def test_acceptance_rule():
    assert accept_probability(-1, 0.5) == 1
    assert accept_probability(-1, 1e6) == 1
    assert accept_probability(0, 10) == 1
    assert accept_probability(2, 1) == pytest.approx(math.exp(-2))
    assert accept_probability(2, 1) == pytest.approx(0.1353, abs=1e-4)
    with pytest.raises(NonpositiveTemperatureError):
        accept_probability(1, 0)


def test_schedule_and_objective_checks():
    assert Schedule(1000, 0.5, 3).temperature(2) == 250
    with pytest.raises(NonpositiveTemperatureError):
        Schedule(t0=0)
    with pytest.raises(ValueError):
        Schedule(rate=1.0)
    with pytest.raises(ValueError):
        Objective(epsilon=0)
    with pytest.raises(ValueError):
        Objective(power=1)


# ---------------------------------------------------------------- steps
def test_acceptance_frequency_two_state_fixture(ann6, monkeypatch):
    """From one state, always propose the same insertion and undo it after each acceptance."""
    C = ann6.complex
    w = C._register("w")
    masks = (C._mask_of(["1", "2"]), w, C._mask_of(["a"]))
    monkeypatch.setattr(annealer, "_sample_masks", lambda P, rng: masks)
    run = AnnealRun(0, Schedule(2.0, 0.5, 1), Objective(), min_width=3)
    chain = _Chain(ann6, Objective())
    before = chain.cost
    apply_flip(ann6, Flip(["1", "2"], ["w"], "a"))
    delta = cost(ann6) - before
    apply_flip(ann6, Flip(["w"], ["1", "2"], "a"))
    p = math.exp(-delta / 2.0)
    rng = random.Random(17)
    n = 100_000
    hits = 0
    for _ in range(n):
        if anneal_step(run, chain, 0, rng):
            hits += 1
            chain.apply(w, masks[0], masks[2], False)
    assert chain.cost == pytest.approx(before)
    assert abs(hits - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_cost_lowering_flip_is_always_accepted():
    P = inflated(3, seed=4)
    run = AnnealRun(0, Schedule(1e-9, 0.5, 1), Objective(), min_width=6)
    chain = _Chain(P, Objective())
    rng = random.Random(1)
    for _ in range(200):
        before = chain.cost
        n_before = P.n_vertices
        accepted = anneal_step(run, chain, 0, rng)
        if P.n_vertices < n_before:
            assert accepted
        if accepted:
            assert chain.cost <= before


def test_width_violations_are_reverted():
    P = inflated(4, seed=2)
    ref = P.copy()
    run = AnnealRun(0, Schedule(1e9, 0.5, 1), Objective(), min_width=99)
    chain = _Chain(P, Objective())
    rng = random.Random(0)
    for _ in range(50):
        assert not anneal_step(run, chain, 0, rng)
    assert run.constraint_rejected == 50
    assert P == ref


# ---------------------------------------------------------------- runs
def test_zero_iterations_returns_start(p1039):
    run = anneal_run(p1039, Schedule(iterations=0), seed=1)
    assert run.best == p1039 and run.final == p1039
    assert run.trace == []


def test_run_is_deterministic_and_replayable():
    start = inflated(5)
    sched = Schedule(1.0, 0.999, 1500)
    a = anneal_run(start, sched, seed=8, min_width=6)
    b = anneal_run(start, sched, seed=8, min_width=6)
    assert a.trace == b.trace
    assert (a.accepted, a.rejected, a.constraint_rejected) == (b.accepted, b.rejected, b.constraint_rejected)
    assert replay_run(start, a) == a.final
    best = replay_run(start, [e for e in a.trace if e.step < a.best_step])
    assert best == a.best


def test_every_visited_state_respects_min_width():
    start = inflated(4, seed=9)
    run = anneal_run(start, Schedule(5.0, 0.999, 1500), seed=3, min_width=6)
    Q = start.copy()
    for entry in run.trace:
        apply_flip(Q, entry.flip)
        assert Q.width() >= 6
    assert run.best.width() >= 6
    validate_prismatoid(build_complex(run.best.facets), run.best.base_plus, run.best.base_minus)


def test_exact_width_mode():
    start = inflated(3)
    run = anneal_run(start, Schedule(5.0, 0.999, 500), seed=5, exact_width=True)
    Q = start.copy()
    for entry in run.trace:
        apply_flip(Q, entry.flip)
        assert Q.width() == start.width()


def test_start_must_satisfy_constraint(ann6):
    with pytest.raises(ValueError):
        anneal_run(ann6, Schedule(iterations=1))


def test_deadline_stops_early():
    start = inflated(2)
    run = anneal_run(start, Schedule(1.0, 0.999, 10_000_000), seed=1, deadline=0.0)
    assert run.timed_out and run.iterations_done == 256


def test_summary_and_histogram():
    start = inflated(2)
    runs = run_chains(start, [1, 2], Schedule(1.0, 0.99, 300), n_jobs=1)
    line = runs[0].summary_line()
    assert line.startswith("run seed=1 iters=300 best_v=")
    assert "best_width=" in line
    csv = histogram_csv(runs)
    assert csv.splitlines()[0] == "vertices,facets,count"
    assert sum(int(r.split(",")[2]) for r in csv.splitlines()[1:]) == 2


def test_chains_in_parallel_match_sequential():
    start = inflated(2)
    sched = Schedule(1.0, 0.99, 200)
    seq = run_chains(start, [4, 5], sched, n_jobs=1)
    par = run_chains(start, [4, 5], sched, n_jobs=2)
    assert [r.trace for r in seq] == [r.trace for r in par]


# ---------------------------------------------------------------- inflation
def test_inflate_zero_steps(p1039):
    Q, applied = inflate_walk(p1039, 0, random.Random(0))
    assert Q == p1039 and applied == []


def test_inflate_ten_steps_and_deflate(p1039):
    Q, applied = inflate_walk(p1039, 10, random.Random(12), insertion_bias=1.0)
    assert 14 <= Q.n_vertices <= 24
    R = validate_prismatoid(build_complex(Q.facets), Q.base_plus, Q.base_minus)
    assert R.width() > R.d
    assert deflate(Q, applied) == p1039


# ---------------------------------------------------------------- estimator
def test_estimator_interface(p1039):
    est = PrismatoidAnnealer(t0=1.0, rate=0.99, n_iter=100, n_chains=2, random_state=0)
    assert clone(est).get_params() == est.get_params()
    start = inflated(2)
    est.fit(start)
    assert len(est.runs_) == 2
    assert est.n_vertices_ == est.best_.n_vertices <= start.n_vertices
    assert est.best_width_ >= 6
    assert est.score(est.best_) == pytest.approx(-cost(est.best_))
    again = PrismatoidAnnealer(t0=1.0, rate=0.99, n_iter=100, n_chains=2, random_state=0).fit(start)
    assert again.best_ == est.best_
