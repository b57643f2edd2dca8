"""Live emission of simulated events over TCP with interactive steering.

A session keeps a small buffer of pre-simulated, time-scaled events split
over `parallel_instances` queues.  A refiller thread tops the buffer up
whenever it drops below twice the instance count, simulating fresh traces of
the *current* model (hot-swappable, which is how concept drifts are
injected).  An emitter thread pops the globally earliest event, sleeps until
its deadline, stamps it with the wall clock and fans it out to connected TCP
clients and in-process subscribers.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .model import ProcessModel, validate
from .sim import Event, EventLog, SimulationConfig, Trace, simulate_trace

log = logging.getLogger(__name__)

EMISSION_FORMATS = ("ndjson", "xes_fragment")

#: bounded per-client and per-subscriber queue; oldest messages dropped
CLIENT_QUEUE_SIZE = 1000


class StreamConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StreamConfig:
    parallel_instances: int = 2
    time_multiplier: float = 1.0
    host: str = "127.0.0.1"
    port: int = 9000
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    emission_format: str = "ndjson"
    #: real-time gap kept between a queue's last event and a newly enqueued trace
    trace_gap_ms: float = 200.0
    #: emit as fast as possible, ignoring event deadlines
    max_rate: bool = False

    def __post_init__(self) -> None:
        if self.parallel_instances < 1:
            raise StreamConfigError("parallel_instances must be >= 1")
        if not self.time_multiplier > 0:
            raise StreamConfigError("time_multiplier must be > 0")
        if self.emission_format not in EMISSION_FORMATS:
            raise StreamConfigError(f"emission_format must be one of {EMISSION_FORMATS}")


def event_wire_dict(event: Event, sim_time_ms: Optional[int] = None) -> dict:
    payload = {
        "case": event.case_id,
        "activity": event.activity,
        "timestamp": event.timestamp,
        "lifecycle": event.lifecycle,
        "attrs": dict(event.attributes),
    }
    if sim_time_ms is not None:
        payload["sim_time"] = sim_time_ms
    return payload


def _xes_fragment(event: Event) -> str:
    """A self-contained single-trace, single-event XES document on one line."""
    from .io import export_xes  # deferred: io imports sim

    doc = export_xes(EventLog([Trace(event.case_id, [event])]), indent=False)
    return " ".join(doc.split("\n"))


@dataclass
class _Buffered:
    deadline_ms: float  # scaled time on the session timeline
    sim_time_ms: int    # original simulated timestamp
    event: Event


class _ClientConn:
    """One TCP client; a dedicated writer thread so slow readers never block
    emission.  The outgoing queue is bounded, dropping oldest on overflow."""

    def __init__(self, sock: socket.socket, on_close):
        self.sock = sock
        self.queue: queue.Queue[Optional[bytes]] = queue.Queue(maxsize=CLIENT_QUEUE_SIZE)
        self.dropped = 0
        self._on_close = on_close
        self._thread = threading.Thread(target=self._writer, daemon=True)
        self._thread.start()

    def send(self, payload: bytes) -> None:
        try:
            self.queue.put_nowait(payload)
        except queue.Full:
            try:
                self.queue.get_nowait()
                self.dropped += 1
                self.queue.put_nowait(payload)
            except (queue.Empty, queue.Full):
                pass

    def close(self) -> None:
        try:
            self.queue.put_nowait(None)
        except queue.Full:
            try:
                self.sock.close()
            except OSError:
                pass

    def _writer(self) -> None:
        try:
            while True:
                payload = self.queue.get()
                if payload is None:
                    break
                self.sock.sendall(payload)
        except OSError:
            pass
        finally:
            try:
                self.sock.close()
            except OSError:
                pass
            self._on_close(self)


class StreamSession:
    """Runs the refiller, emitter, and TCP listener for one stream."""

    def __init__(self, model: ProcessModel, config: StreamConfig):
        violations = validate(model)
        if violations:
            from .sim import InvalidModelError
            raise InvalidModelError(violations)
        self.config = config
        self._lock = threading.RLock()
        self._model = model
        self._multiplier = config.time_multiplier
        self._queues: list[list[_Buffered]] = [[] for _ in range(config.parallel_instances)]
        #: next trace, pre-simulated by the refiller; appended by the emitter
        self._ready: Optional[tuple[ProcessModel, Trace]] = None
        self._trace_index = 0
        self._last_deadline_ms = 0.0
        self.events_emitted = 0
        self.traces_generated = 0
        self.max_buffered = 0
        self.recent_events: list[dict] = []
        self._subscribers: list[queue.Queue] = []
        self._clients: list[_ClientConn] = []
        self._stop = threading.Event()
        self._started = False
        self._t0 = 0.0
        self._server_sock: Optional[socket.socket] = None
        self._threads: list[threading.Thread] = []

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self._server_sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._server_sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._server_sock.bind((self.config.host, self.config.port))
        self._server_sock.listen()
        self._server_sock.settimeout(0.2)
        self._t0 = time.monotonic()
        self._started = True
        for target in (self._accept_loop, self._refill_loop, self._emit_loop):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=2.0)
        if self._server_sock is not None:
            try:
                self._server_sock.close()
            except OSError:
                pass
        with self._lock:
            for client in list(self._clients):
                client.close()

    @property
    def running(self) -> bool:
        return self._started and not self._stop.is_set()

    @property
    def port(self) -> int:
        assert self._server_sock is not None
        return self._server_sock.getsockname()[1]

    def _now_ms(self) -> float:
        return (time.monotonic() - self._t0) * 1000.0

    # -- control ------------------------------------------------------------

    def swap_model(self, model: ProcessModel) -> list:
        """Switch the source model; already-buffered events drain naturally.
        Returns the violation list (empty on success; non-empty = rejected)."""
        violations = validate(model)
        if violations:
            return violations
        with self._lock:
            self._model = model
            self._ready = None  # drop any pre-simulated trace of the old model
        return []

    def set_multiplier(self, value: float) -> None:
        if not value > 0:
            raise StreamConfigError("time multiplier must be > 0")
        with self._lock:
            self._multiplier = value

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=CLIENT_QUEUE_SIZE)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def buffered_count(self) -> int:
        with self._lock:
            return sum(len(q) for q in self._queues)

    def status(self) -> dict:
        with self._lock:
            return {
                "running": self.running,
                "events_emitted": self.events_emitted,
                "traces_generated": self.traces_generated,
                "buffer_size": sum(len(q) for q in self._queues),
                "current_model_name": self._model.name,
                "time_multiplier": self._multiplier,
                "connected_clients": len(self._clients),
                "recent_events": list(self.recent_events),
            }

    # -- refiller -----------------------------------------------------------

    def _refill_loop(self) -> None:
        """Keeps the *next* trace pre-simulated; the emitter appends it to the
        buffer atomically (`_append_ready_locked`) the moment occupancy drops
        below twice the instance count, so a busy scheduler cannot leave the
        buffer empty between a pop and a refill."""
        while not self._stop.is_set():
            with self._lock:
                model = self._model
                index = self._trace_index
                have = self._ready is not None
            if have:
                time.sleep(0.002)
                continue
            try:
                trace = simulate_trace(model, self.config.simulation, index)
            except Exception:
                log.exception("trace simulation failed; stream continues")
                with self._lock:
                    self._trace_index += 1
                continue
            if not trace.events:
                with self._lock:
                    self._trace_index += 1
                continue
            with self._lock:
                if self._model is not model:
                    # model swapped while this trace was being simulated:
                    # discard it so no stale behavior enters the buffer
                    continue
                self._ready = (model, trace)

    def _append_ready_locked(self) -> None:
        assert self._ready is not None
        _, trace = self._ready
        self._ready = None
        self._trace_index += 1
        self.traces_generated += 1
        base_sim = trace.events[0].timestamp
        # the queue whose last event is earliest receives the trace,
        # time-shifted to start after that event plus a fixed gap
        def queue_key(q: list[_Buffered]) -> float:
            return q[-1].deadline_ms if q else float("-inf")
        target = min(self._queues, key=queue_key)
        start_ms = max(
            self._now_ms(),
            target[-1].deadline_ms if target else 0.0,
            self._last_deadline_ms,
        ) + self.config.trace_gap_ms
        for event in trace.events:
            deadline = start_ms + (event.timestamp - base_sim) * self._multiplier
            target.append(_Buffered(deadline, event.timestamp, event))
        self.max_buffered = max(self.max_buffered,
                                sum(len(q) for q in self._queues))

    # -- emitter ------------------------------------------------------------

    def _emit_loop(self) -> None:
        # peek-sleep-pop: the head event stays buffered (and counted) until
        # its deadline, so occupancy only shrinks at emission time
        threshold = 2 * self.config.parallel_instances
        while not self._stop.is_set():
            with self._lock:
                if (self._ready is not None
                        and sum(len(q) for q in self._queues) < threshold):
                    self._append_ready_locked()
                heads = [(q[0].deadline_ms, i) for i, q in enumerate(self._queues) if q]
                deadline = min(heads)[0] if heads else None
            if deadline is None:
                time.sleep(0.002)
                continue
            if not self.config.max_rate:
                wait_s = (deadline - self._now_ms()) / 1000.0
                if wait_s > 0:
                    # sleep in slices; an earlier head may appear meanwhile
                    time.sleep(min(wait_s, 0.1))
                    continue
            with self._lock:
                heads = [(q[0].deadline_ms, i) for i, q in enumerate(self._queues) if q]
                if not heads:
                    continue
                _, qi = min(heads)
                item = self._queues[qi].pop(0)
            self._emit(item)

    def _emit(self, item: _Buffered) -> None:
        event = item.event
        sim_time = item.sim_time_ms
        event.timestamp = int(time.time() * 1000)
        wire = event_wire_dict(event, sim_time_ms=sim_time)
        if self.config.emission_format == "ndjson":
            payload = (json.dumps(wire, separators=(",", ":")) + "\n").encode("utf-8")
        else:
            payload = (_xes_fragment(event) + "\n").encode("utf-8")
        with self._lock:
            self._last_deadline_ms = max(self._last_deadline_ms, item.deadline_ms)
            self.events_emitted += 1
            self.recent_events.append(wire)
            del self.recent_events[:-100]
            clients = list(self._clients)
            subscribers = list(self._subscribers)
        for client in clients:
            client.send(payload)
        for sub in subscribers:
            try:
                sub.put_nowait(("event", wire))
            except queue.Full:
                try:
                    sub.get_nowait()
                    sub.put_nowait(("event", wire))
                except (queue.Empty, queue.Full):
                    pass

    # -- TCP listener -------------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._server_sock is not None
        while not self._stop.is_set():
            try:
                sock, addr = self._server_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            log.info("stream client connected: %s", addr)
            client = _ClientConn(sock, self._drop_client)
            with self._lock:
                self._clients.append(client)

    def _drop_client(self, client: _ClientConn) -> None:
        with self._lock:
            if client in self._clients:
                self._clients.remove(client)
