"""Deterministic in-process network for exercising many peers at once.

The simulator is single threaded: a seeded RNG draws per-message delays,
drops and payload corruption, and a heap of timestamped events delivers
messages in order.  Two networks built with the same seed and driven with
the same calls produce identical traces.

Times are integer milliseconds of simulated clock.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
import random
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .advert import DESCRIPTOR_CODES, LEVEL_CODES, RatingElement
from .node import Node
from .protocol import Message, QueryRequest, QueryResponse, encode_message
from .queryengine import QueryEngine, SearchResult
from .relevance import UserProfile
from .store import CredentialRegistry, Store


class TraceEvent(NamedTuple):
    time: int
    event: str  # send, deliver, drop, late
    src: str
    dst: str
    kind: str
    query_id: str
    digest: str


def _digest(msg: Message) -> str:
    return hashlib.sha256(encode_message(msg)).hexdigest()[:16]


class SimNetwork:
    def __init__(
        self,
        seed: int = 0,
        delay: Tuple[int, int] = (1, 20),
        drop_rate: float = 0.0,
        corrupt_rate: float = 0.0,
        drop_responses_from: Iterable[str] = (),
    ):
        if delay[0] < 0 or delay[1] < delay[0]:
            raise ValueError("delay must be a (low, high) pair with 0 <= low <= high")
        self.seed = seed
        self.rng = random.Random(seed)
        self.delay = delay
        self.drop_rate = drop_rate
        self.corrupt_rate = corrupt_rate
        self.drop_responses_from = set(drop_responses_from)
        self.nodes: Dict[str, Node] = {}
        self.now = 0
        self.trace: List[TraceEvent] = []
        # corrupted payloads that actually reached a querying peer
        self.delivered_corruptions = 0
        self._queue: list = []
        self._seq = itertools.count()

    def add_node(self, node: Node) -> Node:
        if node.peer_id in self.nodes:
            raise ValueError("duplicate peer id %r" % node.peer_id)
        self.nodes[node.peer_id] = node
        return node

    def add_peer(self, peer_id: str, store: Store) -> Node:
        return self.add_node(Node(peer_id, store))

    def transport(self, origin: str) -> "SimTransport":
        return SimTransport(self, origin)

    def _schedule(self, at: int, payload: tuple) -> None:
        heapq.heappush(self._queue, (at, next(self._seq), payload))

    def _record(self, at, event, src, dst, msg):
        self.trace.append(TraceEvent(at, event, src, dst, type(msg).__name__, msg.query_id, _digest(msg)))

    def _corrupt(self, response: QueryResponse) -> Tuple[QueryResponse, int]:
        if not self.corrupt_rate:
            return response, 0
        payloads = []
        damaged = 0
        for xml in response.advertisements:
            if self.rng.random() < self.corrupt_rate:
                # Cutting anywhere before the closing root tag leaves it unbalanced.
                cut = self.rng.randrange(0, max(1, xml.rfind("</")))
                payloads.append(xml[:cut])
                damaged += 1
            else:
                payloads.append(xml)
        return QueryResponse(response.query_id, payloads), damaged

    def broadcast_query(
        self, origin: str, req: QueryRequest, peers: Sequence[str], timeout: int
    ) -> List[Tuple[str, QueryResponse]]:
        """Fan *req* out from *origin* and gather responses until the deadline."""
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        if origin not in self.nodes:
            raise KeyError("unknown origin %r" % origin)
        start = self.now
        deadline = start + timeout
        for peer in peers:
            at = start + self.rng.randint(*self.delay)
            self._record(start, "send", origin, peer, req)
            self._schedule(at, ("request", origin, peer, req))

        arrived: List[Tuple[str, QueryResponse]] = []
        last = start
        while self._queue:
            at, _, (what, src, dst, msg, *extra) = heapq.heappop(self._queue)
            last = max(last, at)
            if what == "request":
                node = self.nodes.get(dst)
                if node is None:
                    self._record(at, "drop", src, dst, msg)
                    continue
                self._record(at, "deliver", src, dst, msg)
                reply = node.handle(msg)
                if reply is None:
                    continue
                if dst in self.drop_responses_from or self.rng.random() < self.drop_rate:
                    self._record(at, "drop", dst, src, reply)
                    continue
                reply, damaged = self._corrupt(reply)
                self._record(at, "send", dst, src, reply)
                self._schedule(at + self.rng.randint(*self.delay), ("response", dst, src, reply, damaged))
            else:
                if at > deadline:
                    self._record(at, "late", src, dst, msg)
                    continue
                self._record(at, "deliver", src, dst, msg)
                self.nodes[dst].handle(msg)
                self.delivered_corruptions += extra[0]
                arrived.append((src, msg))
        self.now = max(deadline, last)
        return arrived


class SimTransport:
    """Transport bound to one origin peer of a :class:`SimNetwork`."""

    def __init__(self, network: SimNetwork, origin: str):
        self.network = network
        self.origin = origin
        self._query_ids = itertools.count(1)

    def new_query_id(self) -> str:
        return "%s/q%d" % (self.origin, next(self._query_ids))

    def broadcast_query(
        self, req: QueryRequest, peers: Sequence[str], timeout: int
    ) -> List[Tuple[str, QueryResponse]]:
        return self.network.broadcast_query(self.origin, req, peers, timeout)


def build_network(
    stores: Dict[str, Store], seed: int = 0, **policy
) -> SimNetwork:
    network = SimNetwork(seed=seed, **policy)
    for peer_id in sorted(stores):
        network.add_peer(peer_id, stores[peer_id])
    return network


VOCABULARY = ("image", "processing", "network", "peer", "rating", "xml", "search", "vision")


def seeded_corpus(seed: int, peers: int = 10, documents: int = 100) -> Dict[str, Store]:
    """Stores for *peers* nodes sharing *documents* generated advertisements.

    Ids are ``urn:r2p2p:<peer>-<n>`` so equal seeds give equal corpora.
    """
    rng = random.Random(seed)
    registry = CredentialRegistry()
    publisher = registry.add("publisher", "author", "publisher-token")
    stores = {}
    for i in range(peers):
        peer_id = "peer-%02d" % i
        counter = itertools.count(1)
        stores[peer_id] = Store(
            registry, id_factory=lambda p=peer_id, c=counter: "urn:r2p2p:%s-%04d" % (p, next(c))
        )
    peer_ids = sorted(stores)
    for n in range(documents):
        words = rng.sample(VOCABULARY, 3)
        rating = None
        if rng.random() < 0.85:
            rating = RatingElement(rng.randint(0, 60), rng.choice(LEVEL_CODES), rng.choice(DESCRIPTOR_CODES))
        stores[peer_ids[n % len(peer_ids)]].publish_document(
            " ".join(words).title(),
            "notes on %s" % rng.choice(VOCABULARY),
            ("document %d" % n).encode(),
            rating,
            publisher,
        )
    return stores


class WorkloadQuery(NamedTuple):
    number: int
    origin: str
    keywords: Tuple[str, ...]
    profile: UserProfile
    results: List[SearchResult]
    skipped_payloads: int


def run_workload(
    network: SimNetwork,
    queries: int,
    queriers: Sequence[str],
    seed: int = 0,
    timeout: int = 50,
    profile: Optional[UserProfile] = None,
) -> List[WorkloadQuery]:
    """Issue *queries* seeded searches from *queriers* to every other peer."""
    rng = random.Random(seed)
    engines = {origin: QueryEngine(network.transport(origin), network.nodes[origin]) for origin in queriers}
    everyone = sorted(network.nodes)
    done = []
    for number in range(1, queries + 1):
        origin = rng.choice(list(queriers))
        keywords = tuple(rng.sample(VOCABULARY, rng.randint(1, 2)))
        wanted = profile or UserProfile(rng.choice(LEVEL_CODES), rng.choice((None,) + DESCRIPTOR_CODES))
        engine = engines[origin]
        results = engine.search(keywords, wanted, [p for p in everyone if p != origin], timeout)
        done.append(WorkloadQuery(number, origin, keywords, wanted, results, engine.last_report.skipped_payloads))
    return done


__all__ = [
    "SimNetwork",
    "SimTransport",
    "TraceEvent",
    "WorkloadQuery",
    "build_network",
    "run_workload",
    "seeded_corpus",
]
