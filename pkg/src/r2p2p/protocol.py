"""Peer messages and their wire encoding.

Every message is one small XML document in the ``urn:r2p2p`` namespace.
Advertisements travel inside a ``QueryResponse`` as escaped text rather than
as nested elements, so each payload reaches the querying peer byte-for-byte
as the responder serialized it and a damaged payload cannot break the
envelope around it.

On TCP each message is sent as a frame: a 4-byte big-endian length followed
by that many bytes of UTF-8 XML.
"""
from __future__ import annotations

import asyncio
import struct
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Tuple, Union

from .advert import NAMESPACE, NS_PREFIX
from .errors import ProtocolError

PROTOCOL_VERSION = 1
HEADER = struct.Struct(">I")
MAX_FRAME_SIZE = 16 * 1024 * 1024

ET.register_namespace(NS_PREFIX, NAMESPACE)


@dataclass(frozen=True)
class QueryRequest:
    query_id: str
    keywords: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "keywords", tuple(self.keywords))


@dataclass(frozen=True)
class QueryResponse:
    query_id: str
    advertisements: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "advertisements", tuple(self.advertisements))


@dataclass(frozen=True)
class Hello:
    peer_id: str
    protocol_version: int = PROTOCOL_VERSION


Message = Union[QueryRequest, QueryResponse, Hello]


def _root(name: str) -> ET.Element:
    return ET.Element("{%s}%s" % (NAMESPACE, name))


def _sub(parent: ET.Element, tag: str, text: str) -> ET.Element:
    child = ET.SubElement(parent, tag)
    child.text = text
    return child


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, QueryRequest):
        root = _root("QueryRequest")
        _sub(root, "QueryId", msg.query_id)
        keywords = ET.SubElement(root, "Keywords")
        for word in msg.keywords:
            _sub(keywords, "Keyword", word)
    elif isinstance(msg, QueryResponse):
        root = _root("QueryResponse")
        _sub(root, "QueryId", msg.query_id)
        ads = ET.SubElement(root, "Advertisements")
        for payload in msg.advertisements:
            _sub(ads, "Advertisement", payload)
    elif isinstance(msg, Hello):
        root = _root("Hello")
        _sub(root, "PeerId", msg.peer_id)
        _sub(root, "ProtocolVersion", str(msg.protocol_version))
    else:
        raise TypeError("not a message: %r" % (msg,))
    return ET.tostring(root, encoding="utf-8", xml_declaration=False)


def _text(root: ET.Element, tag: str) -> str:
    elem = root.find(tag)
    if elem is None:
        raise ProtocolError("<%s> missing from %s" % (tag, root.tag))
    return elem.text or ""


def decode_message(data: Union[bytes, str]) -> Message:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ProtocolError("unreadable message: %s" % exc) from None
    prefix = "{%s}" % NAMESPACE
    if not root.tag.startswith(prefix):
        raise ProtocolError("message outside the %s namespace: %s" % (NS_PREFIX, root.tag))
    kind = root.tag[len(prefix):]
    if kind == "QueryRequest":
        words = tuple(elem.text or "" for elem in root.iterfind("Keywords/Keyword"))
        return QueryRequest(_text(root, "QueryId"), words)
    if kind == "QueryResponse":
        payloads = tuple(elem.text or "" for elem in root.iterfind("Advertisements/Advertisement"))
        return QueryResponse(_text(root, "QueryId"), payloads)
    if kind == "Hello":
        version = _text(root, "ProtocolVersion")
        if not version.isdigit():
            raise ProtocolError("bad protocol version %r" % version)
        return Hello(_text(root, "PeerId"), int(version))
    raise ProtocolError("unknown message type %r" % kind)


def frame(payload: bytes) -> bytes:
    if len(payload) > MAX_FRAME_SIZE:
        raise ProtocolError("frame of %d bytes exceeds limit" % len(payload))
    return HEADER.pack(len(payload)) + payload


def unframe(buffer: bytes) -> Tuple[list, bytes]:
    """Split *buffer* into complete frame payloads plus the unconsumed tail."""
    payloads = []
    offset = 0
    while len(buffer) - offset >= HEADER.size:
        (length,) = HEADER.unpack_from(buffer, offset)
        if length > MAX_FRAME_SIZE:
            raise ProtocolError("frame of %d bytes exceeds limit" % length)
        end = offset + HEADER.size + length
        if end > len(buffer):
            break
        payloads.append(buffer[offset + HEADER.size:end])
        offset = end
    return payloads, buffer[offset:]


async def read_frame(reader: asyncio.StreamReader) -> bytes:
    header = await reader.readexactly(HEADER.size)
    (length,) = HEADER.unpack(header)
    if length > MAX_FRAME_SIZE:
        raise ProtocolError("frame of %d bytes exceeds limit" % length)
    return await reader.readexactly(length)


async def read_message(reader: asyncio.StreamReader) -> Message:
    return decode_message(await read_frame(reader))


async def write_message(writer: asyncio.StreamWriter, msg: Message) -> None:
    writer.write(frame(encode_message(msg)))
    await writer.drain()
