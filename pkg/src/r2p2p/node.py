"""Responder side of a peer: answer queries from the local store.

A responding peer only matches keywords and ships canonical advertisement
XML back.  It never parses ratings or computes relevance; that work belongs
to whichever peer asked.
"""
from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .advert import serialize_advertisement
from .errors import ProtocolError
from .protocol import PROTOCOL_VERSION, Hello, Message, QueryRequest, QueryResponse
from .relevance import KeyCallCounter, counting_key_calls
from .store import Store

log = logging.getLogger(__name__)


def handle_message(msg: Message, local_store: Store, peer_id: str = "") -> Optional[Message]:
    if isinstance(msg, QueryRequest):
        hits = local_store.match_query(msg.keywords)
        return QueryResponse(msg.query_id, [serialize_advertisement(adv) for adv in hits])
    if isinstance(msg, Hello):
        if msg.protocol_version != PROTOCOL_VERSION:
            raise ProtocolError(
                "peer %r speaks protocol %d, expected %d"
                % (msg.peer_id, msg.protocol_version, PROTOCOL_VERSION)
            )
        return Hello(peer_id, PROTOCOL_VERSION)
    if isinstance(msg, QueryResponse):
        # Responses only matter to the engine that issued the query.
        return None
    raise ProtocolError("cannot handle %r" % (msg,))


@dataclass
class NodeStats:
    messages_handled: int = 0
    key_calls: KeyCallCounter = field(default_factory=KeyCallCounter)

    @property
    def relevance_key_calls(self) -> int:
        return self.key_calls.calls


class Node:
    def __init__(self, peer_id: str, store: Store):
        self.peer_id = peer_id
        self.store = store
        self.stats = NodeStats()

    @contextlib.contextmanager
    def activate(self) -> Iterator["Node"]:
        """Charge relevance computations inside the block to this node."""
        with counting_key_calls(self.stats.key_calls):
            yield self

    def handle(self, msg: Message) -> Optional[Message]:
        with self.activate():
            self.stats.messages_handled += 1
            if isinstance(msg, QueryRequest):
                self.store.refresh()
            return handle_message(msg, self.store, self.peer_id)

    def __repr__(self):
        return "Node(%r, %d documents)" % (self.peer_id, len(self.store))
