"""TCP transport: a framed-message server for one node and a fan-out client.

A session opens with a ``Hello`` exchange; if the protocol versions differ
the server drops the connection.  The client then sends one
``QueryRequest`` and waits for the matching ``QueryResponse``.
"""
from __future__ import annotations

import asyncio
import logging
import threading
import uuid
from typing import List, Optional, Sequence, Tuple

from .errors import ConfigError, ProtocolError
from .node import Node
from .protocol import (
    PROTOCOL_VERSION,
    Hello,
    QueryRequest,
    QueryResponse,
    read_message,
    write_message,
)

log = logging.getLogger(__name__)


def parse_address(address: str) -> Tuple[str, int]:
    """Split ``host:port`` (or ``[v6]:port``) into its parts."""
    host, sep, port = address.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ConfigError("address %r is not host:port" % (address,))
    if host.startswith("[") and host.endswith("]"):
        host = host[1:-1]
    port_num = int(port)
    if not 0 <= port_num <= 65535:
        raise ConfigError("port out of range in %r" % (address,))
    return host, port_num


async def _serve_connection(node: Node, reader, writer) -> None:
    peer = writer.get_extra_info("peername")
    try:
        while True:
            try:
                msg = await read_message(reader)
            except asyncio.IncompleteReadError:
                break
            reply = node.handle(msg)
            if reply is not None:
                await write_message(writer, reply)
    except ProtocolError as exc:
        log.warning("closing session with %s: %s", peer, exc)
    except (ConnectionError, OSError) as exc:
        log.debug("connection with %s lost: %s", peer, exc)
    finally:
        writer.close()
        try:
            await writer.wait_closed()
        except (ConnectionError, OSError):
            pass


async def start_server(node: Node, host: str, port: int) -> asyncio.AbstractServer:
    async def handler(reader, writer):
        await _serve_connection(node, reader, writer)

    return await asyncio.start_server(handler, host, port)


async def serve_forever(node: Node, host: str, port: int) -> None:
    server = await start_server(node, host, port)
    for sock in server.sockets:
        log.info("%s listening on %s", node.peer_id, sock.getsockname())
    async with server:
        await server.serve_forever()


class BackgroundServer:
    """Runs a node's TCP server on a private event loop in a daemon thread."""

    def __init__(self, node: Node, host: str = "127.0.0.1", port: int = 0):
        self.node = node
        self.host = host
        self.port = port
        self._loop = asyncio.new_event_loop()
        self._server: Optional[asyncio.AbstractServer] = None
        self._thread = threading.Thread(target=self._loop.run_forever, daemon=True)

    @property
    def address(self) -> str:
        return "%s:%d" % (self.host, self.port)

    def start(self) -> "BackgroundServer":
        self._thread.start()
        fut = asyncio.run_coroutine_threadsafe(start_server(self.node, self.host, self.port), self._loop)
        self._server = fut.result(timeout=10)
        self.port = self._server.sockets[0].getsockname()[1]
        return self

    def stop(self) -> None:
        if self._server is not None:
            async def close(server):
                server.close()
                await server.wait_closed()

            asyncio.run_coroutine_threadsafe(close(self._server), self._loop).result(timeout=10)
            self._server = None
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=10)
        self._loop.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


async def _open_session(address: str, peer_id: str):
    host, port = parse_address(address)
    reader, writer = await asyncio.open_connection(host, port)
    try:
        await write_message(writer, Hello(peer_id, PROTOCOL_VERSION))
        reply = await read_message(reader)
    except asyncio.IncompleteReadError:
        writer.close()
        raise ProtocolError("%s closed the session during handshake" % address) from None
    except BaseException:
        writer.close()
        raise
    if not isinstance(reply, Hello) or reply.protocol_version != PROTOCOL_VERSION:
        writer.close()
        raise ProtocolError("%s answered the handshake with %r" % (address, reply))
    return reply, reader, writer


async def hello(address: str, peer_id: str, timeout: float) -> Hello:
    async def exchange():
        reply, _, writer = await _open_session(address, peer_id)
        writer.close()
        return reply

    return await asyncio.wait_for(exchange(), timeout)


async def _query_one(address: str, peer_id: str, req: QueryRequest) -> Tuple[str, QueryResponse]:
    greeting, reader, writer = await _open_session(address, peer_id)
    try:
        await write_message(writer, req)
        reply = await read_message(reader)
    finally:
        writer.close()
    if not isinstance(reply, QueryResponse):
        raise ProtocolError("%s answered a query with %r" % (address, reply))
    return greeting.peer_id or address, reply


async def abroadcast_query(
    req: QueryRequest, peers: Sequence[str], timeout: float, peer_id: str = ""
) -> List[Tuple[str, QueryResponse]]:
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    if not peers:
        return []
    tasks = [asyncio.ensure_future(_query_one(address, peer_id, req)) for address in peers]
    arrived = []
    try:
        for next_done in asyncio.as_completed(tasks, timeout=timeout):
            try:
                arrived.append(await next_done)
            except asyncio.TimeoutError:
                raise
            except (OSError, ProtocolError, asyncio.IncompleteReadError) as exc:
                log.info("no answer to %s: %s", req.query_id, exc)
    except asyncio.TimeoutError:
        log.info("query %s timed out with %d of %d answers", req.query_id, len(arrived), len(peers))
    finally:
        for task in tasks:
            task.cancel()
        await asyncio.gather(*tasks, return_exceptions=True)
    return arrived


class TcpTransport:
    def __init__(self, peer_id: str = ""):
        self.peer_id = peer_id

    def new_query_id(self) -> str:
        return uuid.uuid4().hex

    def broadcast_query(
        self, req: QueryRequest, peers: Sequence[str], timeout: float
    ) -> List[Tuple[str, QueryResponse]]:
        return asyncio.run(abroadcast_query(req, peers, timeout, self.peer_id))

    def hello(self, address: str, timeout: float) -> Hello:
        return asyncio.run(hello(address, self.peer_id, timeout))
