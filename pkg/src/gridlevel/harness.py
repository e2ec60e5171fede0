"""Retailer <-> smart meter interaction.

The retailer announces candidate price vectors and receives back only each
household's hourly consumption and bill. Two transports are provided: meters
living in the same process, and meters behind a TCP endpoint speaking
length-prefixed JSON (4-byte big-endian length, UTF-8 body).

Aggregates are always summed in customer order once every reply is in, so
arrival order never changes the result.
"""

from __future__ import annotations

import itertools
import json
import logging
import socket
import socketserver
import struct
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import HORIZON, HouseholdSpec, as_price_vector, as_schedule
from .hems import HouseholdBank, Infeasible, solve_household
from .retailer import CostParams, RetailerConstraints, evaluate_batch

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
_HEADER = struct.Struct("!I")
MAX_FRAME = 1 << 30


class TransportError(RuntimeError):
    pass


class MeterTimeout(TransportError):
    def __init__(self, customer_id, timeout):
        super().__init__(f"meter {customer_id} did not answer within {timeout}s")
        self.customer_id = customer_id


class SolveError(RuntimeError):
    def __init__(self, customer_id, message):
        super().__init__(f"customer {customer_id}: {message}")
        self.customer_id = customer_id


@dataclass(frozen=True)
class PriceAnnouncement:
    request_id: str
    prices: np.ndarray

    def to_wire(self) -> dict:
        return {"request_id": self.request_id, "prices": self.prices.tolist()}

    @classmethod
    def from_wire(cls, d: dict) -> "PriceAnnouncement":
        return cls(str(d["request_id"]), as_price_vector(d["prices"]))


@dataclass(frozen=True)
class ConsumptionReport:
    request_id: str
    customer_id: int
    hourly_load: np.ndarray
    bill: float

    def to_wire(self) -> dict:
        return {"request_id": self.request_id, "customer_id": self.customer_id,
                "hourly_load": self.hourly_load.tolist(), "bill": self.bill}

    @classmethod
    def from_wire(cls, d: dict) -> "ConsumptionReport":
        extra = set(d) - {"request_id", "customer_id", "hourly_load", "bill"}
        if extra:
            raise TransportError(f"unexpected report fields {sorted(extra)}")
        return cls(str(d["request_id"]), int(d["customer_id"]),
                   as_schedule(d["hourly_load"]), float(d["bill"]))


# -- framing -------------------------------------------------------------------

def send_frame(sock: socket.socket, obj) -> None:
    body = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    sock.sendall(_HEADER.pack(len(body)) + body)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            raise ConnectionError("peer closed the connection")
        buf += chunk
    return bytes(buf)


def recv_frame(sock: socket.socket):
    (n,) = _HEADER.unpack(_recv_exact(sock, _HEADER.size))
    if n > MAX_FRAME:
        raise TransportError(f"frame of {n} bytes exceeds limit")
    return json.loads(_recv_exact(sock, n).decode("utf-8"))


# -- meter side ------------------------------------------------------------------

def serve_meter(household: HouseholdSpec, announcement: PriceAnnouncement) -> ConsumptionReport:
    """Answer one announcement with the household's optimal hourly load."""
    try:
        resp = solve_household(announcement.prices, household)
    except Infeasible as exc:
        raise SolveError(household.id, str(exc)) from exc
    return ConsumptionReport(announcement.request_id, household.id,
                             resp.total_schedule, resp.bill)


class MeterSession:
    """A smart meter: answers batches of announcements for one household."""

    def __init__(self, household: HouseholdSpec, waiting: bool = True):
        self.household = household
        self._bank = HouseholdBank([household], waiting=waiting)

    @property
    def customer_id(self) -> int:
        return self.household.id

    def respond(self, announcements: Sequence[PriceAnnouncement]) -> list[ConsumptionReport]:
        if not announcements:
            return []
        prices = np.array([a.prices for a in announcements])
        try:
            loads, bills = self._bank.respond(prices)
        except Infeasible as exc:
            raise SolveError(self.customer_id, str(exc)) from exc
        return [ConsumptionReport(a.request_id, self.customer_id, _frozen(loads[i, 0]),
                                  float(bills[i, 0]))
                for i, a in enumerate(announcements)]


def _frozen(x):
    x = np.array(x)
    x.flags.writeable = False
    return x


# -- retailer side ---------------------------------------------------------------

class Transport:
    """Base class: ``announce_and_collect`` returns one aggregate per candidate."""

    customer_ids: list[int]

    def __init__(self):
        self.announcements_sent = 0
        self._batch_ids = itertools.count()

    def _announcements(self, prices_batch) -> list[PriceAnnouncement]:
        batch = next(self._batch_ids)
        return [PriceAnnouncement(f"{batch}:{i}", as_price_vector(p))
                for i, p in enumerate(prices_batch)]

    def collect_reports(self, announcements) -> list[list[ConsumptionReport]]:
        """Reports indexed ``[meter][candidate]`` in ``customer_ids`` order."""
        raise NotImplementedError

    def collect_loads(self, announcements) -> list[np.ndarray]:
        """Per meter, a ``(B, 24)`` array of loads in announcement order."""
        return [reports_to_loads(announcements, reps)
                for reps in self.collect_reports(announcements)]

    def announce_and_collect(self, prices_batch) -> np.ndarray:
        prices_batch = np.atleast_2d(np.asarray(prices_batch, dtype=float))
        anns = self._announcements(prices_batch)
        per_meter = self.collect_loads(anns)
        self.announcements_sent += len(anns) * len(per_meter)
        return sum_loads(per_meter, len(anns))

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def reports_to_loads(announcements, reports) -> np.ndarray:
    """Order one meter's reports by request id; every request needs one reply."""
    if len(reports) != len(announcements):
        raise TransportError("meter answered a different number of requests")
    pos = {a.request_id: i for i, a in enumerate(announcements)}
    loads = np.zeros((len(announcements), HORIZON))
    seen = set()
    for r in reports:
        i = pos.get(r.request_id)
        if i is None or i in seen:
            raise TransportError(f"unexpected or duplicate reply {r.request_id!r}")
        seen.add(i)
        loads[i] = r.hourly_load
    return loads


def sum_loads(per_meter: Sequence[np.ndarray], batch: int) -> np.ndarray:
    """Sum meter loads strictly in meter order (bit-reproducible)."""
    out = np.zeros((batch, HORIZON))
    for loads in per_meter:
        out = out + loads
    return out


def aggregate(announcements, per_meter) -> np.ndarray:
    """Sum per-meter report lists into one aggregate per announcement."""
    return sum_loads([reports_to_loads(announcements, r) for r in per_meter],
                     len(announcements))


class InProcessTransport(Transport):
    """Meters simulated in this process.

    With ``pooled=True`` the households are solved together in chunks of
    ``chunk`` customers, which is much faster and gives identical reports.
    """

    def __init__(self, households: Iterable[HouseholdSpec], pooled: bool = True,
                 chunk: int = 100, waiting: bool = True):
        super().__init__()
        households = list(households)
        self.customer_ids = [h.id for h in households]
        self.pooled = pooled
        if pooled:
            self._banks = [HouseholdBank(households[i:i + chunk], waiting=waiting)
                           for i in range(0, len(households), chunk)]
        else:
            self._meters = [MeterSession(h, waiting=waiting) for h in households]

    def _solve(self, announcements):
        prices = np.array([a.prices for a in announcements]).reshape(-1, HORIZON)
        for bank in self._banks:
            try:
                loads, bills = bank.respond(prices)
            except Infeasible as exc:
                raise SolveError(exc.customer_id, str(exc)) from exc
            for j, h in enumerate(bank.households):
                yield h.id, loads[:, j], bills[:, j]

    def collect_reports(self, announcements):
        if not self.pooled:
            return [m.respond(announcements) for m in self._meters]
        return [[ConsumptionReport(a.request_id, cid, _frozen(loads[i]), float(bills[i]))
                 for i, a in enumerate(announcements)]
                for cid, loads, bills in self._solve(announcements)]

    def collect_loads(self, announcements):
        if not self.pooled or not announcements:
            return super().collect_loads(announcements)
        return [loads for _, loads, _ in self._solve(announcements)]


class TcpTransport(Transport):
    """One TCP connection per meter; batches are fanned out concurrently."""

    def __init__(self, address: tuple[str, int], customer_ids: Sequence[int],
                 timeout: float = 60.0, max_workers: int = 32):
        super().__init__()
        self.address = address
        self.customer_ids = list(customer_ids)
        self.timeout = timeout
        self._socks: list[socket.socket] = []
        self._pool = ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(self.customer_ids))))
        try:
            for cid in self.customer_ids:
                self._socks.append(self._connect(cid))
        except Exception:
            self.close()
            raise

    def _connect(self, cid: int) -> socket.socket:
        try:
            sock = socket.create_connection(self.address, timeout=self.timeout)
        except OSError as exc:
            raise TransportError(f"cannot reach meters at {self.address}: {exc}") from exc
        sock.settimeout(self.timeout)
        send_frame(sock, {"protocol_version": PROTOCOL_VERSION, "customer_id": cid})
        reply = recv_frame(sock)
        if reply.get("status") != "ok":
            sock.close()
            raise TransportError(f"handshake for customer {cid} refused: {reply.get('error')}")
        return sock

    def _exchange(self, k: int, msg: dict) -> list[ConsumptionReport]:
        sock, cid = self._socks[k], self.customer_ids[k]
        try:
            send_frame(sock, msg)
            reply = recv_frame(sock)
        except socket.timeout as exc:
            raise MeterTimeout(cid, self.timeout) from exc
        except (OSError, ValueError) as exc:
            raise TransportError(f"meter {cid}: {exc}") from exc
        if reply.get("type") == "error":
            raise SolveError(cid, reply.get("error", "unknown error"))
        if reply.get("type") != "report_batch" or reply.get("batch_id") != msg["batch_id"]:
            raise TransportError(f"meter {cid} sent an unexpected reply")
        reports = [ConsumptionReport.from_wire(r) for r in reply["reports"]]
        if any(r.customer_id != cid for r in reports):
            raise TransportError(f"meter {cid} answered for another customer")
        return reports

    def collect_reports(self, announcements):
        batch_id = announcements[0].request_id.split(":")[0] if announcements else "empty"
        msg = {"type": "announce_batch", "batch_id": batch_id,
               "announcements": [a.to_wire() for a in announcements]}
        futures = [self._pool.submit(self._exchange, k, msg) for k in range(len(self._socks))]
        results, first_error = [], None
        for f in futures:
            try:
                results.append(f.result())
            except Exception as exc:  # keep draining so no reply is left half-read
                first_error = first_error or exc
        if first_error is not None:
            raise first_error
        return results

    def close(self):
        for s in self._socks:
            try:
                s.close()
            except OSError:
                pass
        self._socks = []
        self._pool.shutdown(wait=False)


class _MeterHandler(socketserver.BaseRequestHandler):
    def handle(self):
        server: MeterServer = self.server  # type: ignore[assignment]
        sock = self.request
        try:
            hello = recv_frame(sock)
        except (ConnectionError, ValueError, OSError):
            return
        cid = hello.get("customer_id")
        if hello.get("protocol_version") != PROTOCOL_VERSION or cid not in server.sessions:
            send_frame(sock, {"status": "error", "error": "unknown customer or protocol version"})
            return
        session = server.sessions[cid]
        send_frame(sock, {"protocol_version": PROTOCOL_VERSION, "customer_id": cid, "status": "ok"})
        while True:
            try:
                msg = recv_frame(sock)
            except (ConnectionError, OSError, ValueError):
                return
            if server.delay:
                threading.Event().wait(server.delay)
            batch_id = msg.get("batch_id")
            try:
                anns = [PriceAnnouncement.from_wire(a) for a in msg["announcements"]]
                reports = session.respond(anns)
                reply = {"type": "report_batch", "batch_id": batch_id,
                         "reports": [r.to_wire() for r in reports]}
            except Exception as exc:
                reply = {"type": "error", "batch_id": batch_id, "customer_id": cid,
                         "error": str(exc)}
            try:
                send_frame(sock, reply)
            except OSError:
                return


class MeterServer(socketserver.ThreadingTCPServer):
    """Hosts one meter session per household behind a single TCP endpoint.

    A client opens one connection per customer and names it in the handshake.
    ``delay`` (seconds) stalls every reply; it exists to exercise timeouts.
    """

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, households: Iterable[HouseholdSpec], address=("127.0.0.1", 0),
                 waiting: bool = True, delay: float = 0.0):
        self.sessions = {h.id: MeterSession(h, waiting=waiting) for h in households}
        self.delay = delay
        super().__init__(address, _MeterHandler)

    def start(self) -> "MeterServer":
        threading.Thread(target=self.serve_forever, daemon=True).start()
        return self

    def stop(self):
        self.shutdown()
        self.server_close()


class PricingEvaluator:
    """Price batch -> evaluated pricings, by asking the meters."""

    def __init__(self, transport: Transport, cost_params: CostParams,
                 constraints: RetailerConstraints):
        self.transport = transport
        self.cost_params = cost_params
        self.constraints = constraints

    def __call__(self, prices):
        loads = self.transport.announce_and_collect(prices)
        return evaluate_batch(prices, loads, self.cost_params, self.constraints)
