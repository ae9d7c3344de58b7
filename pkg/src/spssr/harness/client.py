"""Round driver: in-process or over TCP, with per-phase timing."""

from __future__ import annotations

import socket
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import FrameError, ShapeMismatch, TransportError, RemoteError
from ..model import Database, DemandFamily, RetrievalResult, SchemeParams, require_well_formed
from ..randomness import RandomSource
from ..scheme import (
    AnswerVector,
    QueryMatrix,
    check_demand,
    compute_answer,
    decode,
    generate_queries,
    partition_demand,
)
from . import wire
from .server import parse_endpoint


@dataclass
class RoundMetrics:
    demand: tuple[int, ...]
    uplink_bits: int
    downlink_symbols: int
    achieved_rate: Fraction
    wall_time: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"demand": list(self.demand), "uplink_bits": self.uplink_bits,
                "downlink_symbols": self.downlink_symbols,
                "achieved_rate": str(self.achieved_rate),
                "wall_time": {k: round(v, 6) for k, v in self.wall_time.items()}}


def request_answer(endpoint, query: QueryMatrix, params: SchemeParams, server: int,
                   timeout: float = 5.0) -> AnswerVector:
    """Send one QUERY frame and wait for the reply."""
    payload = wire.QueryPayload(params.M, params.K, params.L, params.q.q, query)
    try:
        with socket.create_connection(parse_endpoint(endpoint), timeout=timeout) as sock:
            sock.sendall(wire.query_frame(payload))
            with sock.makefile("rb") as stream:
                frame = wire.read_frame(stream)
    except (OSError, EOFError) as exc:
        raise TransportError(f"server {server} at {endpoint} unreachable: {exc}", server) from exc
    except FrameError as exc:
        raise TransportError(f"server {server} sent a malformed frame: {exc}", server) from exc
    if frame.msg_type == wire.ERROR:
        err = wire.ErrorPayload.decode(frame.payload)
        raise RemoteError(err.code, err.message, server)
    if frame.msg_type != wire.ANSWER:
        raise TransportError(f"server {server} replied with frame type {frame.msg_type}", server)
    try:
        entries = wire.AnswerPayload.decode(frame.payload, params.q.q).entries
    except FrameError as exc:
        raise TransportError(f"server {server} sent a malformed answer: {exc}", server) from exc
    if len(entries) != params.M:
        raise TransportError(f"server {server} returned {len(entries)} entries, expected {params.M}",
                             server)
    return AnswerVector(tuple(params.q(e) for e in entries))


def simulate_round(params: SchemeParams, family: DemandFamily, W, randomness: RandomSource,
                   transport: str = "in_process", db: Database | None = None,
                   endpoints: list[str] | None = None,
                   timeout: float = 5.0) -> tuple[RetrievalResult, RoundMetrics]:
    """Run one retrieval and measure it.

    ``transport="in_process"`` answers from ``db`` directly; ``"tcp"`` sends
    query n to ``endpoints[n-1]`` concurrently and joins all answers before
    decoding. Identical randomness gives identical results either way.
    """
    require_well_formed(family)
    check_demand(family, W)
    t0 = time.perf_counter()
    partition = partition_demand(W, params)
    queries = generate_queries(params, partition, randomness)
    t1 = time.perf_counter()

    if transport == "in_process":
        if db is None:
            raise ValueError("in_process transport needs a database")
        if (db.K, db.L, db.M, db.q.q) != (params.K, params.L, params.M, params.q.q):
            raise ShapeMismatch("database does not match scheme parameters")
        answers = [compute_answer(Q, db) for Q in queries]
    elif transport == "tcp":
        if not endpoints or len(endpoints) != params.N:
            raise ValueError(f"tcp transport needs exactly {params.N} endpoints")
        with ThreadPoolExecutor(max_workers=params.N) as pool:
            futures = [pool.submit(request_answer, ep, Q, params, n, timeout)
                       for n, (ep, Q) in enumerate(zip(endpoints, queries), start=1)]
            answers = [f.result() for f in futures]
    else:
        raise ValueError(f"unknown transport {transport!r}")
    t2 = time.perf_counter()

    result = decode(answers, queries[0], partition, params)
    t3 = time.perf_counter()
    metrics = RoundMetrics(
        demand=partition.demand,
        uplink_bits=params.N * params.query_bits,
        downlink_symbols=sum(len(a.entries) for a in answers),
        achieved_rate=result.achieved_rate,
        wall_time={"queries": t1 - t0, "answers": t2 - t1, "decode": t3 - t2, "total": t3 - t0},
    )
    return result, metrics
