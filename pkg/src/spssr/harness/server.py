"""Threaded TCP server answering one QUERY per connection.

The database and keys are immutable after load, so handler threads share
them without locking. Nothing about a query is logged beyond its shape.
"""

from __future__ import annotations

import logging
import socketserver
import threading

from ..errors import BindError, FrameError, ShapeMismatch
from ..model import Database
from ..scheme import compute_answer
from . import wire

log = logging.getLogger(__name__)


def handle_frame(frame: wire.WireFrame, db: Database) -> bytes:
    """Turn one received frame into the bytes of the reply frame."""
    if frame.msg_type != wire.QUERY:
        return wire.error_frame(wire.ERR_BAD_FRAME, f"expected QUERY, got type 0x{frame.msg_type:02x}")
    try:
        query = wire.QueryPayload.decode(frame.payload)
    except FrameError as exc:
        return wire.error_frame(exc.code, str(exc))
    if (query.M, query.K, query.L, query.q) != (db.M, db.K, db.L, db.q.q):
        return wire.error_frame(wire.ERR_SHAPE, "shape mismatch")
    try:
        answer = compute_answer(query.matrix, db)
    except ShapeMismatch:
        return wire.error_frame(wire.ERR_SHAPE, "shape mismatch")
    return wire.answer_frame(wire.AnswerPayload(tuple(answer.ints())))


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        db: Database = self.server.db
        try:
            frame = wire.read_frame(self.rfile)
        except EOFError:
            return
        except FrameError as exc:
            self.wfile.write(wire.error_frame(exc.code, str(exc)))
            return
        try:
            reply = handle_frame(frame, db)
        except Exception:  # never let one connection take the loop down
            log.exception("internal error while answering")
            reply = wire.error_frame(wire.ERR_INTERNAL, "internal error")
        self.wfile.write(reply)


class AnswerServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], db: Database, server_index: int | None = None):
        self.db = db
        self.server_index = server_index
        try:
            super().__init__(address, _Handler)
        except OSError as exc:
            raise BindError(f"cannot bind {address[0]}:{address[1]}: {exc}") from exc

    def stop(self) -> None:
        self.shutdown()
        self.server_close()

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"


def serve(endpoint: str | tuple[str, int], db: Database, server_index: int | None = None) -> None:
    """Answer queries on ``endpoint`` until interrupted."""
    server = AnswerServer(parse_endpoint(endpoint), db, server_index)
    log.info("server %s listening on %s (K=%d L=%d M=%d q=%d)", server_index, server.endpoint,
             db.K, db.L, db.M, db.q.q)
    with server:
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass


def start_background(db: Database, host: str = "127.0.0.1", port: int = 0,
                     server_index: int | None = None) -> AnswerServer:
    """Start a server on a daemon thread; call ``stop()`` when done."""
    server = AnswerServer((host, port), db, server_index)
    threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True,
                     name=f"spssr-server-{server_index}").start()
    return server


def parse_endpoint(endpoint: str | tuple[str, int]) -> tuple[str, int]:
    if isinstance(endpoint, tuple):
        return endpoint
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host, int(port)
