"""Document advertisements and their ``<Rating>`` element.

An advertisement is the XML document a peer publishes to announce a shared
document.  Its optional ``<Rating>`` child carries three relevance signals
(citation count, audience level, document type) that querying peers read to
order their search results.

The serialized form is canonical: UTF-8, a fixed child order, no attributes
besides the namespace declaration and no whitespace between elements, so two
equal advertisements always produce identical bytes.
"""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Optional, Union

from .errors import (
    InvalidCitations,
    InvalidCode,
    InvalidField,
    MalformedXml,
    MissingField,
)

NAMESPACE = "urn:r2p2p"
NS_PREFIX = "r2p2p"
ROOT_TAG = "DocumentAdvertisement"
XML_DECLARATION = '<?xml version="1.0"?>\n'

LEVEL_CODES = ("A", "B", "C", "D")
DESCRIPTOR_CODES = ("E", "F", "G")

FIELD_ORDER = ("Id", "Title", "Summary", "Author", "ContentHash", "Revision", "Rating")
RATING_ORDER = ("Citations", "Level", "Descriptor")

_CANONICAL_INT = re.compile(r"0|[1-9][0-9]*")
_POSITIVE_INT = re.compile(r"[1-9][0-9]*")
_HEX = re.compile(r"[0-9a-f]+")
# XML 1.0 Char production; anything else cannot survive a round trip.
_XML_ILLEGAL = re.compile("[^\t\n\r\x20-\ud7ff\ue000-\ufffd\U00010000-\U0010ffff]")
_IDENT_ILLEGAL = re.compile(r"[\s/\\]")


def _qualified(tag: str) -> str:
    return "{%s}%s" % (NAMESPACE, tag)


def _check_text(name: str, value: object) -> str:
    if not isinstance(value, str):
        raise InvalidField("%s must be a string, got %r" % (name, type(value).__name__))
    if _XML_ILLEGAL.search(value):
        raise InvalidField("%s contains characters not representable in XML" % name)
    return value


def _check_identifier(name: str, value: object) -> str:
    _check_text(name, value)
    if not value:
        raise InvalidField("%s must not be empty" % name)
    if _IDENT_ILLEGAL.search(value) or value in (".", ".."):
        raise InvalidField("%s %r contains whitespace or path separators" % (name, value))
    return value


@dataclass(frozen=True)
class RatingElement:
    citations: int
    level: str
    descriptor: str

    def __post_init__(self):
        if isinstance(self.citations, bool) or not isinstance(self.citations, int):
            raise InvalidCitations("citations must be an integer, got %r" % (self.citations,))
        if self.citations < 0:
            raise InvalidCitations("citations must be non-negative, got %d" % self.citations)
        if self.level not in LEVEL_CODES:
            raise InvalidCode("level %r is not one of %s" % (self.level, ", ".join(LEVEL_CODES)))
        if self.descriptor not in DESCRIPTOR_CODES:
            raise InvalidCode(
                "descriptor %r is not one of %s" % (self.descriptor, ", ".join(DESCRIPTOR_CODES))
            )


@dataclass(frozen=True)
class DocumentAdvertisement:
    id: str
    title: str
    summary: str
    author_id: str
    content_hash: str
    rating: Optional[RatingElement] = None
    revision: int = 1

    def __post_init__(self):
        _check_identifier("id", self.id)
        _check_text("title", self.title)
        if not self.title:
            raise InvalidField("title must not be empty")
        _check_text("summary", self.summary)
        _check_identifier("author_id", self.author_id)
        if not isinstance(self.content_hash, str) or not _HEX.fullmatch(self.content_hash):
            raise InvalidField("content_hash must be a lowercase hex digest")
        if self.rating is not None and not isinstance(self.rating, RatingElement):
            raise InvalidField("rating must be a RatingElement or None")
        if isinstance(self.revision, bool) or not isinstance(self.revision, int) or self.revision < 1:
            raise InvalidField("revision must be a positive integer, got %r" % (self.revision,))


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace("\r", "&#13;")
    )


def _leaf(tag: str, text: str) -> str:
    return "<%s>%s</%s>" % (tag, _escape(text), tag)


def serialize_rating(rating: RatingElement) -> str:
    return "<Rating>%s%s%s</Rating>" % (
        _leaf("Citations", str(rating.citations)),
        _leaf("Level", rating.level),
        _leaf("Descriptor", rating.descriptor),
    )


def serialize_advertisement(adv: DocumentAdvertisement) -> str:
    """Return the canonical XML text for *adv*.

    Encode the result as UTF-8 to obtain the wire bytes.
    """
    parts = [
        XML_DECLARATION,
        '<%s:%s xmlns:%s="%s">' % (NS_PREFIX, ROOT_TAG, NS_PREFIX, NAMESPACE),
        _leaf("Id", adv.id),
        _leaf("Title", adv.title),
        _leaf("Summary", adv.summary),
        _leaf("Author", adv.author_id),
        _leaf("ContentHash", adv.content_hash),
        _leaf("Revision", str(adv.revision)),
    ]
    if adv.rating is not None:
        parts.append(serialize_rating(adv.rating))
    parts.append("</%s:%s>" % (NS_PREFIX, ROOT_TAG))
    return "".join(parts)


def _parse_xml(xml: Union[str, bytes]) -> ET.Element:
    try:
        return ET.fromstring(xml)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None


def _children(elem: ET.Element, allowed: tuple, where: str) -> dict:
    if elem.attrib:
        raise InvalidField("<%s> must not carry attributes" % where)
    if elem.text and elem.text.strip():
        raise InvalidField("<%s> contains stray text" % where)
    found = {}
    for child in elem:
        if child.tail and child.tail.strip():
            raise InvalidField("<%s> contains stray text" % where)
        if child.tag not in allowed:
            raise InvalidField("unexpected element <%s> inside <%s>" % (child.tag, where))
        if child.tag in found:
            raise InvalidField("duplicate element <%s> inside <%s>" % (child.tag, where))
        found[child.tag] = child
    return found


def _leaf_text(found: dict, tag: str) -> str:
    try:
        elem = found[tag]
    except KeyError:
        raise MissingField("required element <%s> is absent" % tag) from None
    if elem.attrib:
        raise InvalidField("<%s> must not carry attributes" % tag)
    if len(elem):
        raise InvalidField("<%s> must contain text only" % tag)
    return elem.text or ""


def _rating_from_element(elem: ET.Element) -> RatingElement:
    found = _children(elem, RATING_ORDER, "Rating")
    citations = _leaf_text(found, "Citations")
    level = _leaf_text(found, "Level")
    descriptor = _leaf_text(found, "Descriptor")
    if not _CANONICAL_INT.fullmatch(citations):
        raise InvalidCitations("citations %r is not a canonical non-negative integer" % citations)
    try:
        count = int(citations)
    except ValueError:  # beyond the interpreter's int-conversion digit limit
        raise InvalidCitations("citations value is too long") from None
    # The dataclass validates the codes and raises InvalidCode.
    return RatingElement(count, level, descriptor)


def _check_root(root: ET.Element) -> None:
    if root.tag != _qualified(ROOT_TAG):
        raise InvalidField("root element must be %s:%s, got %s" % (NS_PREFIX, ROOT_TAG, root.tag))


def parse_advertisement(xml: Union[str, bytes]) -> DocumentAdvertisement:
    """Parse advertisement XML, rejecting anything outside the strict shape."""
    root = _parse_xml(xml)
    _check_root(root)
    found = _children(root, FIELD_ORDER, ROOT_TAG)
    values = {tag: _leaf_text(found, tag) for tag in FIELD_ORDER[:-1]}
    revision = values["Revision"]
    if not _POSITIVE_INT.fullmatch(revision):
        raise InvalidField("revision %r is not a canonical positive integer" % revision)
    rating = _rating_from_element(found["Rating"]) if "Rating" in found else None
    return DocumentAdvertisement(
        id=values["Id"],
        title=values["Title"],
        summary=values["Summary"],
        author_id=values["Author"],
        content_hash=values["ContentHash"],
        rating=rating,
        revision=int(revision),
    )


def extract_rating(xml: Union[str, bytes]) -> Optional[RatingElement]:
    """Pull just the ``<Rating>`` subtree out of advertisement XML.

    Only the rating is validated; the other fields are never decoded.
    Returns ``None`` for unrated advertisements.
    """
    root = _parse_xml(xml)
    ratings = root.findall("Rating")
    if not ratings:
        return None
    if len(ratings) > 1:
        raise InvalidField("duplicate element <Rating>")
    return _rating_from_element(ratings[0])
