"""HTTP control API for a running node.

Operators (and local tools) publish, revise, fetch and search through this
API; peers still talk to each other over the framed TCP protocol.  Write
calls authenticate with the ``X-Principal`` and ``X-Token`` headers.
"""
from __future__ import annotations

import asyncio
import base64
import binascii
from typing import List, Optional, Sequence, Union

from fastapi import FastAPI, Header, HTTPException, Response
from pydantic import BaseModel, Field

from .advert import DocumentAdvertisement, RatingElement, serialize_advertisement
from .errors import NotFound, ProtocolError, R2P2PError, Unauthorized, ValidationError
from .node import Node
from .queryengine import QueryEngine
from .relevance import UserProfile


class RatingModel(BaseModel):
    citations: int
    level: str
    descriptor: str


class AdvertisementModel(BaseModel):
    id: str
    title: str
    summary: str
    author_id: str
    content_hash: str
    revision: int
    rating: Optional[RatingModel] = None
    xml: str

    @classmethod
    def from_advertisement(cls, adv: DocumentAdvertisement) -> "AdvertisementModel":
        rating = None
        if adv.rating is not None:
            rating = RatingModel(
                citations=adv.rating.citations, level=adv.rating.level, descriptor=adv.rating.descriptor
            )
        return cls(
            id=adv.id,
            title=adv.title,
            summary=adv.summary,
            author_id=adv.author_id,
            content_hash=adv.content_hash,
            revision=adv.revision,
            rating=rating,
            xml=serialize_advertisement(adv),
        )


class PublishRequest(BaseModel):
    title: str
    summary: str = ""
    content_base64: str
    rating: Optional[RatingModel] = None


class SearchRequest(BaseModel):
    keywords: List[str]
    level: str
    doctype: Optional[str] = None
    timeout: float = Field(2.0, gt=0)


class SearchResultModel(BaseModel):
    rank: int
    advertisement: AdvertisementModel
    sources: List[str]
    key: List[Union[int, str]]


class SearchResponse(BaseModel):
    query_id: str
    results: List[SearchResultModel]
    skipped_payloads: int


class PeerStatus(BaseModel):
    address: str
    peer_id: Optional[str] = None
    reachable: bool
    detail: str = ""


def _http_error(exc: R2P2PError) -> HTTPException:
    if isinstance(exc, Unauthorized):
        return HTTPException(status_code=403, detail=str(exc))
    if isinstance(exc, NotFound):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, ValidationError):
        return HTTPException(status_code=422, detail="%s: %s" % (type(exc).__name__, exc))
    if isinstance(exc, ProtocolError):
        return HTTPException(status_code=502, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def _rating(model: Optional[RatingModel]) -> Optional[RatingElement]:
    if model is None:
        return None
    return RatingElement(model.citations, model.level, model.descriptor)


def create_app(node: Node, peers: Sequence[str] = (), transport=None, hello_timeout: float = 2.0) -> FastAPI:
    """Build the API for *node*; *transport* is used for searches and peer checks."""
    app = FastAPI(title="r2p2p node %s" % node.peer_id)
    store = node.store
    engine = QueryEngine(transport, node) if transport is not None else None

    def credential(principal: Optional[str], token: Optional[str]):
        if not principal or token is None:
            raise HTTPException(status_code=401, detail="X-Principal and X-Token headers are required")
        try:
            return store.registry.authenticate(principal, token)
        except Unauthorized as exc:
            raise _http_error(exc)

    @app.get("/health")
    def health():
        return {"node_id": node.peer_id, "documents": len(store)}

    @app.post("/documents", response_model=AdvertisementModel, status_code=201)
    def publish(
        body: PublishRequest,
        x_principal: Optional[str] = Header(None),
        x_token: Optional[str] = Header(None),
    ):
        cred = credential(x_principal, x_token)
        try:
            content = base64.b64decode(body.content_base64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=422, detail="content_base64 is not valid base64")
        try:
            adv = store.publish_document(body.title, body.summary, content, _rating(body.rating), cred)
        except R2P2PError as exc:
            raise _http_error(exc)
        return AdvertisementModel.from_advertisement(adv)

    @app.put("/documents/{adv_id}/rating", response_model=AdvertisementModel)
    def revise(
        adv_id: str,
        body: RatingModel,
        x_principal: Optional[str] = Header(None),
        x_token: Optional[str] = Header(None),
    ):
        cred = credential(x_principal, x_token)
        try:
            adv = store.revise_rating(adv_id, _rating(body), cred)
        except R2P2PError as exc:
            raise _http_error(exc)
        return AdvertisementModel.from_advertisement(adv)

    @app.get("/documents/{adv_id}", response_model=AdvertisementModel)
    def fetch(adv_id: str):
        try:
            return AdvertisementModel.from_advertisement(store.lookup(adv_id).advertisement)
        except NotFound as exc:
            raise _http_error(exc)

    @app.get("/documents/{adv_id}/content")
    def content(adv_id: str):
        try:
            record = store.lookup(adv_id)
        except NotFound as exc:
            raise _http_error(exc)
        return Response(record.content, media_type="application/octet-stream")

    @app.post("/search", response_model=SearchResponse)
    def search(body: SearchRequest):
        if engine is None:
            raise HTTPException(status_code=503, detail="this node has no transport for searching")
        try:
            profile = UserProfile(body.level, body.doctype)
        except ValidationError as exc:
            raise _http_error(exc)
        results = engine.search(body.keywords, profile, list(peers), body.timeout)
        return SearchResponse(
            query_id=engine.last_report.query_id,
            skipped_payloads=engine.last_report.skipped_payloads,
            results=[
                SearchResultModel(
                    rank=rank,
                    advertisement=AdvertisementModel.from_advertisement(r.advertisement),
                    sources=sorted(map(str, r.sources)),
                    key=list(r.key),
                )
                for rank, r in enumerate(results, 1)
            ],
        )

    @app.get("/peers", response_model=List[PeerStatus])
    def peer_status():
        if transport is None:
            return []
        statuses = []
        for address in peers:
            try:
                reply = transport.hello(address, hello_timeout)
            except (OSError, ProtocolError, asyncio.TimeoutError) as exc:
                statuses.append(PeerStatus(address=address, reachable=False, detail=str(exc) or type(exc).__name__))
            else:
                statuses.append(PeerStatus(address=address, peer_id=reply.peer_id, reachable=True))
        return statuses

    return app
