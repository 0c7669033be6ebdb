"""Event engine: determinism, timing, losses, stalls, and broadcast semantics."""

import numpy as np
import pytest

from afafed.coworker import AdaptiveConfig
from afafed.errors import ProtocolError
from afafed.model_core import (
    LossKind,
    LossModel,
    TrainingExample,
    global_gradient_arrays,
    global_risk_arrays,
    stack_examples,
    uniform_weights,
)
from afafed.network_sim import (
    ArrivalProcess,
    ComputeModel,
    CoworkerSetup,
    LinkModel,
    SimulationEngine,
)
from afafed.server import MixingConfig


def quad_shard(rng, n=12, d=2):
    w_true = rng.standard_normal(d)
    out = []
    for _ in range(n):
        x = rng.standard_normal(d)
        out.append(TrainingExample(x, float(x @ w_true + 0.05 * rng.standard_normal())))
    return out


def build_engine(
    k=1,
    seed=0,
    p_loss=0.0,
    speed=10.0,
    rate=100.0,
    payload_bits=10.0,
    arrivals=None,
    capacity=8,
    minibatch=4,
    iter_max=2,
    adaptive_kw=None,
    mixing_kw=None,
    timer_factor=3.0,
    **engine_kw,
):
    rng = np.random.default_rng(seed + 999)
    model = LossModel(LossKind.QUADRATIC, 2)
    speeds = speed if isinstance(speed, (list, tuple)) else [speed] * k
    setups = []
    for cid in range(k):
        setups.append(CoworkerSetup(
            shard=quad_shard(rng),
            link=LinkModel(p_loss=p_loss, rate=rate, payload_bits=payload_bits),
            compute=ComputeModel(speed=speeds[cid], cycles_per_iteration=10.0),
            arrivals=arrivals or ArrivalProcess(kind="poisson", rate=20.0),
            capacity=capacity,
            minibatch=minibatch,
        ))
    adaptive = AdaptiveConfig(iter_max=iter_max, **(adaptive_kw or {}))
    mixing = MixingConfig(**(mixing_kw or {}))
    return SimulationEngine(model=model, setups=setups, adaptive=adaptive,
                            mixing=mixing, w0=np.zeros(2), seed=seed,
                            timer_factor=timer_factor, **engine_kw)


# ---------------- determinism and termination ---------------- #


def rows_as_tuples(result):
    return [(r.t, r.time, r.sender, r.age, r.beta, r.lambda_checksum,
             r.fairness_index, r.global_risk, r.grad_sqnorm) for r in result.rows]


def test_identical_seeds_give_identical_traces():
    results = []
    finals = []
    for _ in range(2):
        eng = build_engine(k=3, seed=11, p_loss=0.1, eval_every=1)
        results.append(eng.run(aggregations=40))
        finals.append(eng.server.w_global.copy())
    assert rows_as_tuples(results[0]) == rows_as_tuples(results[1])
    np.testing.assert_array_equal(finals[0], finals[1])
    np.testing.assert_array_equal(results[0].accepted_by, results[1].accepted_by)
    assert results[0].events_processed == results[1].events_processed
    assert results[0].final_time == results[1].final_time


def test_different_seed_changes_trace():
    r1 = build_engine(k=2, seed=1, eval_every=1).run(aggregations=20)
    r2 = build_engine(k=2, seed=2, eval_every=1).run(aggregations=20)
    assert rows_as_tuples(r1) != rows_as_tuples(r2)


def test_profiling_is_observation_only():
    plain = build_engine(k=3, seed=5, eval_every=1)
    res_plain = plain.run(aggregations=30)
    profiled = build_engine(k=3, seed=5, eval_every=1, enable_profiling=True)
    res_prof = profiled.run(aggregations=30)
    profiled.run_profiling_epilogue()
    assert rows_as_tuples(res_plain) == rows_as_tuples(res_prof)
    np.testing.assert_array_equal(plain.server.w_global, profiled.server.w_global)
    assert res_prof.profiling_log.samples == 30


def test_single_aggregation_stop():
    res = build_engine(k=2, seed=3).run(aggregations=1)
    assert res.aggregations == 1
    assert len(res.rows) == 1
    assert res.rows[0].t == 1


def test_event_budget_stop():
    res = build_engine(k=2, seed=3).run(event_budget=50)
    assert res.events_processed <= 50


def test_horizon_stop_sets_final_time():
    res = build_engine(k=1, seed=3).run(horizon=2.5)
    assert res.final_time == 2.5
    for row in res.rows:
        assert row.time <= 2.5


def test_requires_a_stop_condition():
    with pytest.raises(ValueError):
        build_engine().run()


def test_empty_queue_terminates_cleanly():
    # two arrivals can never warm a four-example minibatch: no cluster starts,
    # the calendar drains, and the run ends with zero aggregations
    arrivals = ArrivalProcess(kind="trace", times=(0.1, 0.2))
    res = build_engine(k=1, arrivals=arrivals, capacity=8, minibatch=4).run(aggregations=5)
    assert res.aggregations == 0
    assert res.iterations_total == 0
    assert res.stall_events >= 1


def test_row_times_and_clock_are_monotone():
    res = build_engine(k=4, seed=7, p_loss=0.2, eval_every=1).run(aggregations=60)
    times = [r.time for r in res.rows]
    assert all(a <= b for a, b in zip(times, times[1:]))
    assert [r.t for r in res.rows] == list(range(1, 61))
    for r in res.rows:
        assert r.age >= 0
        assert 0.25 <= r.fairness_index <= 1.0 + 1e-12


# ---------------- timing arithmetic ---------------- #


def test_first_delivery_time_is_exact():
    # four periodic arrivals warm the buffer, one two-iteration cluster runs,
    # then the uplink delay lands the payload
    arrivals = ArrivalProcess(kind="periodic", interval=0.1)
    eng = build_engine(k=1, seed=0, arrivals=arrivals, capacity=4, minibatch=4,
                       iter_max=2, speed=10.0, rate=100.0, payload_bits=10.0)
    res = eng.run(aggregations=1)
    t = 0.0
    for _ in range(4):
        t += 0.1                      # replicate the engine's accumulation
    expected = t + 2 * (10.0 / 10.0) + 10.0 / 100.0
    assert res.rows[0].time == pytest.approx(expected, abs=1e-12)
    assert res.rows[0].age == 0
    assert res.rows[0].sender == 0


def test_first_gradient_row_is_at_the_initial_model():
    eng = build_engine(k=2, seed=9, eval_every=1)
    res = eng.run(aggregations=1)
    shard_arrays = [stack_examples(s.shard) for s in
                    (rt.setup for rt in eng.runtimes)]
    g = global_gradient_arrays(eng.model, np.zeros(2), shard_arrays, uniform_weights(2))
    assert res.rows[0].grad_sqnorm == pytest.approx(float(g @ g), rel=1e-12)


def test_risk_rows_recompute_offline_for_single_coworker():
    eng = build_engine(k=1, seed=13, eval_every=1, record_wbar=True)
    res = eng.run(aggregations=15)
    X, y = stack_examples(eng.runtimes[0].setup.shard)
    for row, wbar in zip(res.rows, res.wbar_history):
        direct = global_risk_arrays(eng.model, wbar, [(X, y)], np.array([1.0]))
        assert row.global_risk == pytest.approx(direct, rel=1e-12)


def test_eval_every_spacing():
    res = build_engine(k=1, seed=17, eval_every=5).run(aggregations=20)
    for row in res.rows:
        has_eval = row.global_risk is not None
        assert has_eval == (row.t % 5 == 0)
        assert (row.grad_sqnorm is not None) == has_eval


# ---------------- arrival processes ---------------- #


def test_periodic_arrival_count():
    arrivals = ArrivalProcess(kind="periodic", interval=1.0)
    eng = build_engine(k=1, arrivals=arrivals, capacity=4, minibatch=4)
    eng.run(horizon=10.25)
    assert eng.runtimes[0].arrival_count == 10


def test_poisson_arrival_count_confidence():
    # ~1e4 expected arrivals; the count concentrates within 4 sigma
    arrivals = ArrivalProcess(kind="poisson", rate=100.0)
    eng = build_engine(k=1, seed=23, arrivals=arrivals, capacity=4, minibatch=4,
                       speed=0.001)      # effectively no compute in the window
    eng.run(horizon=100.0)
    n = eng.runtimes[0].arrival_count
    assert abs(n - 10_000) <= 4 * np.sqrt(10_000)


def test_trace_arrivals_replay_exactly():
    times = (0.5, 0.75, 1.0, 2.0, 2.0, 3.5)
    arrivals = ArrivalProcess(kind="trace", times=times)
    eng = build_engine(k=1, arrivals=arrivals, capacity=4, minibatch=4)
    eng.run(horizon=10.0)
    assert eng.runtimes[0].arrival_count == len(times)
    # a horizon inside the trace admits only the earlier entries
    eng2 = build_engine(k=1, arrivals=arrivals, capacity=4, minibatch=4)
    eng2.run(horizon=1.9)
    assert eng2.runtimes[0].arrival_count == 3


def test_arrival_process_validation():
    with pytest.raises(ValueError):
        ArrivalProcess(kind="bogus")
    with pytest.raises(ValueError):
        ArrivalProcess(kind="poisson", rate=0.0)
    with pytest.raises(ValueError):
        ArrivalProcess(kind="periodic", interval=0.0)
    with pytest.raises(ValueError):
        ArrivalProcess(kind="trace", times=())
    with pytest.raises(ValueError):
        ArrivalProcess(kind="trace", times=(2.0, 1.0))


# ---------------- links and losses ---------------- #


def test_uplink_attempt_loss_free_and_total_loss():
    rng = np.random.default_rng(0)
    live = LinkModel(p_loss=0.0, rate=50.0, payload_bits=10.0)
    assert all(live.uplink_attempt(rng) == pytest.approx(0.2) for _ in range(100))
    dead = LinkModel(p_loss=1.0, rate=50.0, payload_bits=10.0)
    assert all(dead.uplink_attempt(rng) is None for _ in range(100))


def test_uplink_delivery_fraction_confidence():
    link = LinkModel(p_loss=0.25, rate=50.0, payload_bits=10.0)
    rng = np.random.default_rng(41)
    n = 10_000
    delivered = sum(link.uplink_attempt(rng) is not None for _ in range(n))
    assert abs(delivered / n - 0.75) <= 4 * np.sqrt(0.75 * 0.25 / n)


def test_rate_jitter_spreads_delays_around_the_mean():
    link = LinkModel(p_loss=0.0, rate=100.0, payload_bits=10.0, rate_jitter=0.5)
    rng = np.random.default_rng(43)
    delays = np.array([link.uplink_attempt(rng) for _ in range(2000)])
    base = 10.0 / 100.0
    assert delays.min() >= base / 1.5 - 1e-12
    assert delays.max() <= base / 0.5 + 1e-12
    assert delays.std() > 0.0


def test_total_loss_never_aggregates_but_keeps_computing():
    res = build_engine(k=1, seed=29, p_loss=1.0).run(event_budget=3000)
    assert res.aggregations == 0
    assert res.uplink_attempts > 1
    assert res.uplink_drops == res.uplink_attempts
    assert res.iterations_total > res.uplink_attempts  # clusters keep running


def test_link_and_compute_validation():
    with pytest.raises(ValueError):
        LinkModel(p_loss=1.5)
    with pytest.raises(ValueError):
        LinkModel(rate=0.0)
    with pytest.raises(ValueError):
        LinkModel(downlink_delay=-1.0)
    with pytest.raises(ValueError):
        LinkModel(rate_jitter=1.0)
    with pytest.raises(ValueError):
        ComputeModel(speed=0.0, cycles_per_iteration=1.0)


# ---------------- protocol semantics ---------------- #


def test_access_probabilities_form_a_distribution():
    res = build_engine(k=4, seed=31, p_loss=0.2).run(aggregations=80)
    total = res.accepted_by.sum()
    assert total == 80
    p = res.accepted_by / total
    assert p.sum() == pytest.approx(1.0)
    assert np.all(p > 0)


def test_starved_coworker_never_aggregates():
    # coworker 1 receives two examples and can never fill a minibatch
    rng = np.random.default_rng(999)
    model = LossModel(LossKind.QUADRATIC, 2)
    setups = []
    for cid in range(2):
        arrivals = (ArrivalProcess(kind="poisson", rate=20.0) if cid == 0
                    else ArrivalProcess(kind="trace", times=(0.1, 0.2)))
        setups.append(CoworkerSetup(
            shard=quad_shard(rng), link=LinkModel(rate=100.0, payload_bits=10.0),
            compute=ComputeModel(speed=10.0, cycles_per_iteration=10.0),
            arrivals=arrivals, capacity=8, minibatch=4,
        ))
    eng = SimulationEngine(model=model, setups=setups,
                           adaptive=AdaptiveConfig(iter_max=2),
                           mixing=MixingConfig(), w0=np.zeros(2), seed=31)
    res = eng.run(aggregations=25)
    assert res.aggregations == 25
    assert res.accepted_by[1] == 0
    assert res.stall_events >= 1
    assert eng.runtimes[1].iterations == 0


def test_midcluster_broadcast_applies_at_next_iteration_boundary():
    # a fast coworker triggers a coefficient broadcast while the slow one is
    # still inside its first cluster; the slow coworker's later iterations
    # must see the new coefficient without its cluster being aborted
    trace = []
    arrivals = ArrivalProcess(kind="trace", times=(0.0, 0.0, 0.0, 0.0))
    eng = build_engine(
        k=2, seed=37, speed=[10.0 / 0.12, 10.0], iter_max=10,
        arrivals=arrivals, capacity=4, minibatch=4,
        rate=1000.0, payload_bits=10.0,
        iteration_hook=lambda cid, st: trace.append((cid, st.t_local, st.lambda_last)),
    )
    eng.run(horizon=11.0)
    slow_first_cluster = [lam for cid, t_local, lam in trace
                          if cid == 1 and t_local <= 10]
    assert len(slow_first_cluster) == 10
    assert slow_first_cluster[0] == 0.5
    assert any(lam != 0.5 for lam in slow_first_cluster)


def test_first_uplink_with_positive_multiplier_boosts_sender():
    eng = build_engine(k=2, seed=41, iter_max=4)
    res = eng.run(aggregations=1)
    lam = eng.server.lambdas
    sender = int(np.argmax(res.accepted_by))
    assert lam[sender] > lam[1 - sender]
    assert lam.sum() == pytest.approx(1.0, abs=1e-12)


def test_short_timer_races_are_survivable():
    # timers shorter than the uplink delay force expiry/downlink races;
    # the run must stay causal and keep aggregating
    res = build_engine(k=2, seed=43, timer_factor=0.5,
                       rate=10.0, payload_bits=10.0).run(aggregations=30)
    assert res.aggregations == 30
    times = [r.time for r in res.rows]
    assert all(a <= b for a, b in zip(times, times[1:]))


def test_loss_free_ages_are_zero_for_single_coworker():
    res = build_engine(k=1, seed=47).run(aggregations=10)
    assert [r.age for r in res.rows] == [0] * 10


def test_engine_rejects_empty_setup():
    with pytest.raises(ValueError):
        SimulationEngine(model=LossModel(LossKind.QUADRATIC, 2), setups=[],
                         adaptive=AdaptiveConfig(), mixing=MixingConfig(),
                         w0=np.zeros(2), seed=0)


def test_epilogue_requires_profiling_enabled():
    eng = build_engine(k=1, seed=1)
    eng.run(aggregations=1)
    with pytest.raises(RuntimeError):
        eng.run_profiling_epilogue()


def test_epilogue_fills_per_coworker_stats():
    eng = build_engine(k=3, seed=53, enable_profiling=True)
    eng.run(aggregations=30)
    log = eng.run_profiling_epilogue()
    assert len(log.coworker_stats) == 3
    for f_first, f_last, zeta in log.coworker_stats:
        assert np.isfinite(f_first) and np.isfinite(f_last)
        if zeta is not None:
            assert zeta >= 0.0
    assert any(s[2] is not None for s in log.coworker_stats)
