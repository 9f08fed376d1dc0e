"""Querying-peer search pipeline.

``search`` fans a query out over a transport, parses every returned
advertisement locally, collapses copies of the same document held by several
peers, and orders the survivors for the caller's profile.  Payloads that fail
to parse are counted and skipped; one bad peer never sinks a search.
"""
from __future__ import annotations

import contextlib
import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

from .advert import DocumentAdvertisement, parse_advertisement, serialize_advertisement
from .errors import ConflictWarning, InvalidAdvertisement
from .node import Node
from .protocol import QueryRequest
from .relevance import RelevanceKey, UserProfile, relevance_key

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchResult:
    advertisement: DocumentAdvertisement
    sources: FrozenSet[Hashable]
    key: Optional[RelevanceKey] = None

    @property
    def id(self) -> str:
        return self.advertisement.id


def dedupe(
    advertisements: Iterable[Tuple[DocumentAdvertisement, Hashable]],
    on_conflict: Optional[Callable[[str], None]] = None,
) -> List[SearchResult]:
    """Collapse ``(advertisement, peer)`` pairs to one result per id.

    The highest revision wins.  Equal revisions with different bytes are a
    conflict: a :class:`ConflictWarning` is issued and the copy with the
    lexicographically smallest canonical XML is kept, so every peer settles
    on the same winner.  Results come back ordered by id.
    """
    best: Dict[str, Tuple[DocumentAdvertisement, str]] = {}
    sources: Dict[str, set] = {}
    conflicted = set()
    for adv, peer in advertisements:
        sources.setdefault(adv.id, set()).add(peer)
        xml = serialize_advertisement(adv)
        current = best.get(adv.id)
        if current is None:
            best[adv.id] = (adv, xml)
            continue
        held, held_xml = current
        if adv.revision > held.revision:
            best[adv.id] = (adv, xml)
        elif adv.revision == held.revision and xml != held_xml:
            conflicted.add((adv.id, adv.revision))
            if xml < held_xml:
                best[adv.id] = (adv, xml)
    for adv_id, revision in sorted(conflicted):
        # only matters if the conflicting revision is still the winning one
        if best[adv_id][0].revision != revision:
            continue
        warnings.warn(
            "advertisement %s has divergent copies at revision %d" % (adv_id, revision),
            ConflictWarning,
            stacklevel=2,
        )
        if on_conflict is not None:
            on_conflict(adv_id)
    return [SearchResult(best[adv_id][0], frozenset(sources[adv_id])) for adv_id in sorted(best)]


@dataclass
class SearchReport:
    query_id: str
    responses: int = 0
    payloads: int = 0
    skipped_payloads: int = 0
    foreign_responses: int = 0
    conflicts: List[str] = field(default_factory=list)


class QueryEngine:
    """Searches on behalf of one peer.

    *transport* needs ``new_query_id()`` and
    ``broadcast_query(req, peers, timeout)``.  When *node* is given, rating
    work is charged to that node's relevance counter.
    """

    def __init__(self, transport, node: Optional[Node] = None):
        self.transport = transport
        self.node = node
        self.skipped_payloads = 0
        self.foreign_responses = 0
        self.conflicts = 0
        self.last_report: Optional[SearchReport] = None

    def search(
        self,
        keywords: Sequence[str],
        profile: UserProfile,
        peers: Sequence[Hashable],
        timeout,
    ) -> List[SearchResult]:
        req = QueryRequest(self.transport.new_query_id(), keywords)
        report = SearchReport(req.query_id)
        responses = self.transport.broadcast_query(req, peers, timeout)
        scope = self.node.activate() if self.node is not None else contextlib.nullcontext()
        with scope:
            gathered = []
            for peer, response in responses:
                if response.query_id != req.query_id:
                    report.foreign_responses += 1
                    continue
                report.responses += 1
                for payload in response.advertisements:
                    report.payloads += 1
                    try:
                        gathered.append((parse_advertisement(payload), peer))
                    except InvalidAdvertisement as exc:
                        report.skipped_payloads += 1
                        log.info("skipping bad advertisement from %s: %s", peer, exc)
            results = [
                replace(r, key=relevance_key(r.advertisement.rating, r.id, profile))
                for r in dedupe(gathered, on_conflict=report.conflicts.append)
            ]
        results.sort(key=lambda r: r.key)
        self.skipped_payloads += report.skipped_payloads
        self.foreign_responses += report.foreign_responses
        self.conflicts += len(report.conflicts)
        self.last_report = report
        return results


def search(
    keywords: Sequence[str],
    profile: UserProfile,
    peers: Sequence[Hashable],
    timeout,
    transport,
    node: Optional[Node] = None,
) -> List[SearchResult]:
    return QueryEngine(transport, node).search(keywords, profile, peers, timeout)
