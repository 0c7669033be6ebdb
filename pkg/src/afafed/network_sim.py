"""Deterministic virtual-time simulation of the full asynchronous protocol.

Events are processed in (time, insertion-sequence) order from a binary heap,
so any run is a pure function of its configuration and seed.  Uplinks drop
with a per-coworker Bernoulli probability and otherwise arrive after a
rate-derived delay; downlinks and coefficient broadcasts are lossless.  Local
iterations are timed individually: a cluster occupies a span of virtual time
and every event addressed to a coworker first advances its cluster to the
iteration boundary at or before the event, which is what makes a mid-cluster
broadcast take effect at the next iteration.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import coworker as cw
from . import server as srv
from .errors import ProtocolError
from .model_core import (
    LossModel,
    TrainingExample,
    global_gradient_arrays,
    global_risk_arrays,
    stack_examples,
    uniform_weights,
)
from .profiler import ProfilingLog, record_aggregation
from .stream_manager import StreamBuffer, admit, sample_minibatch


class EventKind(enum.Enum):
    DATA_ARRIVAL = "data_arrival"
    CLUSTER_COMPLETE = "cluster_complete"
    UPLINK_DELIVERY = "uplink_delivery"
    DOWNLINK_DELIVERY = "downlink_delivery"
    FAIRNESS_BROADCAST = "fairness_broadcast"
    TIMER_EXPIRY = "timer_expiry"


@dataclass
class SimEvent:
    time: float
    seq: int
    kind: EventKind
    coworker: int
    payload: object = None
    token: int = -1


class EventQueue:
    """Priority queue ordered by (time, insertion sequence)."""

    def __init__(self) -> None:
        self._heap: List[Tuple[float, int, SimEvent]] = []
        self._seq = 0

    def push(
        self, time: float, kind: EventKind, coworker: int, payload: object = None, token: int = -1
    ) -> SimEvent:
        ev = SimEvent(time=time, seq=self._seq, kind=kind, coworker=coworker,
                      payload=payload, token=token)
        heapq.heappush(self._heap, (time, self._seq, ev))
        self._seq += 1
        return ev

    def pop(self) -> Optional[SimEvent]:
        if not self._heap:
            return None
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


@dataclass(frozen=True)
class LinkModel:
    """Unreliable uplink plus ideal fixed-delay downlink for one coworker."""

    p_loss: float = 0.0
    rate: float = 1e6               # uplink bits per time unit
    payload_bits: float = 448.0
    downlink_delay: float = 0.0
    rate_jitter: float = 0.0        # half-width of a uniform rate perturbation, as a fraction

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_loss <= 1.0:
            raise ValueError("p_loss must lie in [0, 1]")
        if self.rate <= 0.0 or self.payload_bits <= 0.0:
            raise ValueError("rate and payload_bits must be positive")
        if self.downlink_delay < 0.0:
            raise ValueError("downlink_delay must be non-negative")
        if not 0.0 <= self.rate_jitter < 1.0:
            raise ValueError("rate_jitter must lie in [0, 1)")

    def uplink_attempt(self, rng: np.random.Generator) -> Optional[float]:
        """Transmission delay for one attempt, or None when the packet drops."""
        if self.p_loss > 0.0 and rng.random() < self.p_loss:
            return None
        rate = self.rate
        if self.rate_jitter > 0.0:
            rate = self.rate * (1.0 + self.rate_jitter * (2.0 * rng.random() - 1.0))
        return self.payload_bits / rate

    def mean_rtt(self) -> float:
        return self.payload_bits / self.rate + self.downlink_delay


@dataclass(frozen=True)
class ComputeModel:
    """Per-coworker compute speed; one local iteration costs a fixed cycle budget."""

    speed: float                    # CPU cycles per time unit
    cycles_per_iteration: float

    def __post_init__(self) -> None:
        if self.speed <= 0.0 or self.cycles_per_iteration <= 0.0:
            raise ValueError("speed and cycles_per_iteration must be positive")

    @property
    def iteration_duration(self) -> float:
        return self.cycles_per_iteration / self.speed


@dataclass(frozen=True)
class ArrivalProcess:
    """Data arrival law for one coworker's stream."""

    kind: str = "poisson"           # poisson | periodic | trace
    rate: float = 0.0               # poisson: mean arrivals per time unit
    interval: float = 0.0           # periodic spacing
    times: Optional[Tuple[float, ...]] = None   # trace: absolute arrival times

    def __post_init__(self) -> None:
        if self.kind not in ("poisson", "periodic", "trace"):
            raise ValueError(f"unknown arrival kind {self.kind!r}")
        if self.kind == "poisson" and self.rate <= 0.0:
            raise ValueError("poisson arrivals need a positive rate")
        if self.kind == "periodic" and self.interval <= 0.0:
            raise ValueError("periodic arrivals need a positive interval")
        if self.kind == "trace":
            if not self.times:
                raise ValueError("trace arrivals need at least one arrival time")
            if any(b < a for a, b in zip(self.times, self.times[1:])):
                raise ValueError("trace arrival times must be non-decreasing")


@dataclass
class CoworkerSetup:
    """Everything the engine needs to instantiate one coworker."""

    shard: List[TrainingExample]
    link: LinkModel
    compute: ComputeModel
    arrivals: ArrivalProcess
    capacity: int
    minibatch: int


@dataclass
class _Runtime:
    """Engine-side bookkeeping for one coworker (not protocol state)."""

    state: cw.CoworkerState
    setup: CoworkerSetup
    rng_sample: np.random.Generator
    rng_link: np.random.Generator
    rng_arrival: np.random.Generator
    timer_duration: float
    phase: str = "stalled"          # stalled | computing | waiting
    cluster_token: int = 0
    timer_token: int = 0
    iters_total: int = 0
    iters_done: int = 0
    cluster_anchor: float = 0.0
    arrival_count: int = 0
    iterations: int = 0
    stalls: int = 0
    first_ready_time: Optional[float] = None


@dataclass
class MetricsRow:
    """One row of the per-aggregation metrics stream."""

    t: int
    time: float
    sender: int
    age: int
    beta: float
    lambda_checksum: float
    fairness_index: float
    global_risk: Optional[float] = None
    grad_sqnorm: Optional[float] = None


@dataclass
class RunResult:
    rows: List[MetricsRow]
    aggregations: int
    uplink_attempts: int
    uplink_drops: int
    stall_events: int
    iterations_total: int
    accepted_by: np.ndarray
    iters_per_acceptance: List[int]
    final_time: float
    events_processed: int
    wbar_history: Optional[List[np.ndarray]] = None
    profiling_log: Optional[ProfilingLog] = None


class SimulationEngine:
    """Event-driven run of K coworkers against one aggregation server."""

    def __init__(
        self,
        model: LossModel,
        setups: Sequence[CoworkerSetup],
        adaptive: cw.AdaptiveConfig,
        mixing: srv.MixingConfig,
        w0: np.ndarray,
        seed: int,
        eval_every: int = 0,
        eval_weights: Optional[np.ndarray] = None,
        record_wbar: bool = False,
        enable_profiling: bool = False,
        timer_factor: float = 3.0,
        iteration_hook: Optional[Callable[[int, cw.CoworkerState], None]] = None,
        aggregation_hook: Optional[Callable[[srv.ServerState, srv.AggregationRecord], None]] = None,
    ) -> None:
        if not setups:
            raise ValueError("need at least one coworker")
        k = len(setups)
        self.model = model
        self.adaptive = adaptive
        self.mixing = mixing
        self.seed = seed
        self.eval_every = eval_every
        self.iteration_hook = iteration_hook
        self.aggregation_hook = aggregation_hook
        self.queue = EventQueue()
        self.now = 0.0

        lambdas = uniform_weights(k)
        self.server = srv.ServerState(w_global=np.array(w0, dtype=np.float64), lambdas=lambdas)
        self.eval_weights = (
            lambdas.copy() if eval_weights is None else np.asarray(eval_weights, dtype=np.float64)
        )
        self.shard_arrays = [stack_examples(s.shard) for s in setups]
        self.w0 = np.array(w0, dtype=np.float64)

        self.runtimes: List[_Runtime] = []
        for cid, setup in enumerate(setups):
            buf = StreamBuffer(capacity=setup.capacity, minibatch_size=setup.minibatch)
            state = cw.make_coworker(cid, self.w0, buf, lambdas[cid], adaptive)
            rt = _Runtime(
                state=state,
                setup=setup,
                rng_sample=self._rng(0, cid),
                rng_link=self._rng(1, cid),
                rng_arrival=self._rng(2, cid),
                timer_duration=timer_factor * setup.link.mean_rtt(),
            )
            self.runtimes.append(rt)

        self.rows: List[MetricsRow] = []
        self.uplink_attempts = 0
        self.uplink_drops = 0
        self.iterations_total = 0
        self.accepted_by = np.zeros(k, dtype=np.int64)
        self.iters_per_acceptance: List[int] = []
        self.events_processed = 0
        self.wbar_history: Optional[List[np.ndarray]] = [] if record_wbar else None
        self.profiling_log = (
            ProfilingLog(dim=model.dim, w_start=self.w0.copy()) if enable_profiling else None
        )

        # seed the calendar: first arrivals, then the first cluster attempts
        for cid, rt in enumerate(self.runtimes):
            self._schedule_next_arrival(cid, 0.0)
        for cid in range(k):
            self._start_cluster(cid, 0.0)

    def _rng(self, domain: int, cid: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(domain, cid)))

    # ---------------- scheduling helpers ---------------- #

    def _schedule_next_arrival(self, cid: int, now: float) -> None:
        rt = self.runtimes[cid]
        proc = rt.setup.arrivals
        if proc.kind == "poisson":
            t = now + rt.rng_arrival.exponential(1.0 / proc.rate)
        elif proc.kind == "periodic":
            t = now + proc.interval
        else:  # trace: absolute times, finite stream
            if rt.arrival_count >= len(proc.times):
                return
            t = proc.times[rt.arrival_count]
        self.queue.push(t, EventKind.DATA_ARRIVAL, cid)

    def _start_cluster(self, cid: int, now: float) -> None:
        rt = self.runtimes[cid]
        if not rt.state.buffer.ready:
            rt.stalls += 1
            rt.phase = "stalled"
            return
        rt.phase = "computing"
        rt.cluster_token += 1
        rt.iters_total = rt.state.iter_k
        rt.iters_done = 0
        rt.cluster_anchor = now
        end = now + rt.iters_total * rt.setup.compute.iteration_duration
        self.queue.push(end, EventKind.CLUSTER_COMPLETE, cid, token=rt.cluster_token)

    def _catch_up(self, cid: int, now: float) -> None:
        """Execute every pending iteration whose boundary lies at or before now."""
        rt = self.runtimes[cid]
        if rt.phase != "computing":
            return
        dur = rt.setup.compute.iteration_duration
        while rt.iters_done < rt.iters_total:
            boundary = rt.cluster_anchor + (rt.iters_done + 1) * dur
            if boundary > now:
                break
            ok = cw.run_single_iteration(rt.state, self.adaptive, self.model,
                                         rt.rng_sample, now=boundary)
            if not ok:
                raise RuntimeError(
                    f"coworker {cid} lost minibatch readiness mid-cluster at {boundary:.6g}"
                )
            rt.iters_done += 1
            rt.iterations += 1
            self.iterations_total += 1
            if self.iteration_hook is not None:
                self.iteration_hook(cid, rt.state)

    # ---------------- event handlers ---------------- #

    def _on_data_arrival(self, ev: SimEvent) -> None:
        cid = ev.coworker
        rt = self.runtimes[cid]
        self._catch_up(cid, ev.time)
        shard = rt.setup.shard
        example = shard[rt.arrival_count % len(shard)]
        admit(rt.state.buffer, example)
        rt.arrival_count += 1
        if rt.first_ready_time is None and rt.state.buffer.ready:
            rt.first_ready_time = ev.time
        self._schedule_next_arrival(cid, ev.time)
        if rt.phase == "stalled" and rt.state.buffer.ready:
            self._start_cluster(cid, ev.time)

    def _on_cluster_complete(self, ev: SimEvent) -> None:
        cid = ev.coworker
        rt = self.runtimes[cid]
        if rt.phase != "computing" or ev.token != rt.cluster_token:
            return  # the cluster was aborted by a downlink
        self._catch_up(cid, ev.time)
        if rt.iters_done != rt.iters_total:
            raise RuntimeError("cluster completion fired before all iterations elapsed")
        payload = cw.finalize_cluster(rt.state, self.adaptive)
        self.uplink_attempts += 1
        delay = rt.setup.link.uplink_attempt(rt.rng_link)
        if delay is None:
            self.uplink_drops += 1
        else:
            self.queue.push(ev.time + delay, EventKind.UPLINK_DELIVERY, cid, payload=payload)
        rt.timer_token += 1
        rt.state.timer_deadline = ev.time + rt.timer_duration
        self.queue.push(rt.state.timer_deadline, EventKind.TIMER_EXPIRY, cid,
                        token=rt.timer_token)
        rt.phase = "waiting"

    def _on_uplink_delivery(self, ev: SimEvent) -> None:
        payload: cw.UplinkPayload = ev.payload
        server = self.server
        if self.profiling_log is not None and payload.last_grad is not None:
            record_aggregation(self.profiling_log, server.w_global - payload.w,
                               payload.last_grad)
        due = self.eval_every > 0 and (server.t + 1) % self.eval_every == 0
        grad_sq = None
        if due:
            g = global_gradient_arrays(self.model, server.w_global, self.shard_arrays,
                                       self.eval_weights)
            grad_sq = float(g @ g)
        record = srv.process_uplink(server, payload, self.mixing)
        self.accepted_by[payload.sender] += 1
        self.iters_per_acceptance.append(record.iters_in_cluster)
        risk = None
        if due:
            risk = global_risk_arrays(self.model, server.w_global, self.shard_arrays,
                                      server.lambdas)
        checksum = float(np.arange(1, len(server.lambdas) + 1) @ server.lambdas)
        self.rows.append(MetricsRow(
            t=record.t, time=ev.time, sender=record.sender, age=record.age,
            beta=record.beta, lambda_checksum=checksum,
            fairness_index=record.fairness_index, global_risk=risk, grad_sqnorm=grad_sq,
        ))
        if self.wbar_history is not None:
            self.wbar_history.append(server.w_global.copy())
        if self.aggregation_hook is not None:
            self.aggregation_hook(server, record)
        # coefficient broadcast first, then the sender's model downlink
        if record.lambda_changed:
            lam = server.lambdas.copy()
            for cid, rt in enumerate(self.runtimes):
                self.queue.push(ev.time + rt.setup.link.downlink_delay,
                                EventKind.FAIRNESS_BROADCAST, cid, payload=lam)
        rt = self.runtimes[payload.sender]
        self.queue.push(ev.time + rt.setup.link.downlink_delay, EventKind.DOWNLINK_DELIVERY,
                        payload.sender, payload=(server.w_global.copy(), server.t))

    def _on_downlink_delivery(self, ev: SimEvent) -> None:
        cid = ev.coworker
        rt = self.runtimes[cid]
        self._catch_up(cid, ev.time)
        w_global, stamp = ev.payload
        cw.handle_downlink(rt.state, w_global, stamp)
        rt.timer_token += 1      # any pending timeout is now stale
        if rt.phase == "computing":
            rt.cluster_token += 1    # abort the in-flight cluster and restart fresh
            self._start_cluster(cid, ev.time)
        elif rt.phase == "waiting":
            self._start_cluster(cid, ev.time)
        # stalled: state refreshed, cluster still waits for buffer warm-up

    def _on_fairness_broadcast(self, ev: SimEvent) -> None:
        cid = ev.coworker
        self._catch_up(cid, ev.time)
        lam = ev.payload
        cw.handle_fairness_broadcast(self.runtimes[cid].state, float(lam[cid]))

    def _on_timer_expiry(self, ev: SimEvent) -> None:
        cid = ev.coworker
        rt = self.runtimes[cid]
        if ev.token != rt.timer_token or rt.phase != "waiting":
            return
        cw.handle_timer_expiry(rt.state)
        self._start_cluster(cid, ev.time)

    # ---------------- main loop ---------------- #

    def run(
        self,
        aggregations: Optional[int] = None,
        horizon: Optional[float] = None,
        event_budget: Optional[int] = None,
    ) -> RunResult:
        """Process events until T aggregations, the horizon or the budget is hit."""
        if aggregations is None and horizon is None and event_budget is None:
            raise ValueError("need at least one stopping condition")
        handlers = {
            EventKind.DATA_ARRIVAL: self._on_data_arrival,
            EventKind.CLUSTER_COMPLETE: self._on_cluster_complete,
            EventKind.UPLINK_DELIVERY: self._on_uplink_delivery,
            EventKind.DOWNLINK_DELIVERY: self._on_downlink_delivery,
            EventKind.FAIRNESS_BROADCAST: self._on_fairness_broadcast,
            EventKind.TIMER_EXPIRY: self._on_timer_expiry,
        }
        while True:
            if aggregations is not None and self.server.t >= aggregations:
                break
            if event_budget is not None and self.events_processed >= event_budget:
                break
            next_time = self.queue.peek_time()
            if next_time is None:
                break
            if horizon is not None and next_time > horizon:
                self.now = horizon
                break
            ev = self.queue.pop()
            if ev.time < self.now:
                raise ProtocolError(
                    f"event at {ev.time!r} precedes current time {self.now!r}"
                )
            self.now = ev.time
            handlers[ev.kind](ev)
            self.events_processed += 1
        if self.profiling_log is not None:
            self.profiling_log.w_end = self.server.w_global.copy()
        return RunResult(
            rows=self.rows,
            aggregations=self.server.t,
            uplink_attempts=self.uplink_attempts,
            uplink_drops=self.uplink_drops,
            stall_events=sum(rt.stalls for rt in self.runtimes),
            iterations_total=self.iterations_total,
            accepted_by=self.accepted_by.copy(),
            iters_per_acceptance=list(self.iters_per_acceptance),
            final_time=self.now,
            events_processed=self.events_processed,
            wbar_history=self.wbar_history,
            profiling_log=self.profiling_log,
        )

    # ---------------- profiling epilogue ---------------- #

    def run_profiling_epilogue(self) -> ProfilingLog:
        """Synchronised estimation pass run after the event loop has stopped.

        Every coworker evaluates its local risk at the first and last global
        models and a stochastic secant of its gradient field; pure
        observation, so it never perturbs the trace.
        """
        log = self.profiling_log
        if log is None:
            raise RuntimeError("profiling was not enabled for this run")
        log.w_end = self.server.w_global.copy()
        displacement = float(np.linalg.norm(log.w_end - log.w_start))
        log.coworker_stats = []
        from .model_core import minibatch_gradient, risk_arrays

        for cid, rt in enumerate(self.runtimes):
            X, y = self.shard_arrays[cid]
            f_first = risk_arrays(self.model, log.w_start, X, y)
            f_last = risk_arrays(self.model, log.w_end, X, y)
            zeta_hat = None
            batch = sample_minibatch(rt.state.buffer, self._rng(3, cid))
            if batch is not None and displacement > 0.0:
                g_last = minibatch_gradient(self.model, rt.state.w, batch)
                g_first = minibatch_gradient(self.model, log.w_start, batch)
                zeta_hat = float(np.linalg.norm(g_last - g_first)) / displacement
            log.coworker_stats.append((f_first, f_last, zeta_hat))
        return log
