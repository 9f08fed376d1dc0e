"""User-relative relevance ordering of search results.

Two closed tables translate between people and document kinds and the
single-letter codes stored in a ``<Rating>``.  ``relevance_key`` folds a
rating and a user profile into a tuple whose ascending order is the display
order: rated before unrated, wanted document type first, closest audience
level next, most cited next, and finally the advertisement id so that every
node sorts identically.
"""
from __future__ import annotations

import contextlib
from contextvars import ContextVar
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, List, NamedTuple, Optional, Tuple, TypeVar

from .advert import DESCRIPTOR_CODES, LEVEL_CODES, DocumentAdvertisement, RatingElement
from .errors import InvalidCode, UnknownDocType, UnknownEntity


class UserEntity(str, Enum):
    BTECH_STUDENT = "B-Tech Student"
    MTECH_STUDENT = "M-Tech Student"
    RESEARCH_SCHOLAR = "Research Scholar (PhD)"
    PROFESSOR = "Professor"


class DocType(str, Enum):
    BASICS = "Basics"
    TUTORIAL = "Tutorial"
    RESEARCH_PAPER = "Research paper"


_LEVEL_BY_ENTITY = {
    UserEntity.BTECH_STUDENT: "A",
    UserEntity.MTECH_STUDENT: "B",
    UserEntity.RESEARCH_SCHOLAR: "C",
    UserEntity.PROFESSOR: "D",
}
_DESCRIPTOR_BY_DOCTYPE = {
    DocType.BASICS: "E",
    DocType.TUTORIAL: "F",
    DocType.RESEARCH_PAPER: "G",
}
_ENTITY_BY_LEVEL = {code: entity for entity, code in _LEVEL_BY_ENTITY.items()}
_DOCTYPE_BY_DESCRIPTOR = {code: doc for doc, code in _DESCRIPTOR_BY_DOCTYPE.items()}


def level_code(user_entity) -> str:
    """Map a user kind (enum member or its table label) to its level code."""
    try:
        return _LEVEL_BY_ENTITY[UserEntity(user_entity)]
    except ValueError:
        raise UnknownEntity("unknown user entity %r" % (user_entity,)) from None


def descriptor_code(doc_type) -> str:
    try:
        return _DESCRIPTOR_BY_DOCTYPE[DocType(doc_type)]
    except ValueError:
        raise UnknownDocType("unknown document type %r" % (doc_type,)) from None


def decode_level(code: str) -> UserEntity:
    try:
        return _ENTITY_BY_LEVEL[code]
    except (KeyError, TypeError):
        raise InvalidCode("level code %r is not one of %s" % (code, ", ".join(LEVEL_CODES))) from None


def decode_descriptor(code: str) -> DocType:
    try:
        return _DOCTYPE_BY_DESCRIPTOR[code]
    except (KeyError, TypeError):
        raise InvalidCode(
            "descriptor code %r is not one of %s" % (code, ", ".join(DESCRIPTOR_CODES))
        ) from None


@dataclass(frozen=True)
class UserProfile:
    level: str
    desired_descriptor: Optional[str] = None

    def __post_init__(self):
        if self.level not in LEVEL_CODES:
            raise InvalidCode("profile level %r is not one of %s" % (self.level, ", ".join(LEVEL_CODES)))
        if self.desired_descriptor is not None and self.desired_descriptor not in DESCRIPTOR_CODES:
            raise InvalidCode(
                "profile document type %r is not one of %s"
                % (self.desired_descriptor, ", ".join(DESCRIPTOR_CODES))
            )


class RelevanceKey(NamedTuple):
    unrated_flag: int
    descriptor_mismatch: int
    level_distance: int
    negated_citations: int
    tiebreak_id: str


class KeyCallCounter:
    """Tally of ``relevance_key`` calls made while the counter is active."""

    def __init__(self):
        self.calls = 0


_active_counter: ContextVar[Optional[KeyCallCounter]] = ContextVar("r2p2p_key_counter", default=None)


@contextlib.contextmanager
def counting_key_calls(counter: KeyCallCounter) -> Iterator[KeyCallCounter]:
    """Attribute every ``relevance_key`` call inside the block to *counter*."""
    token = _active_counter.set(counter)
    try:
        yield counter
    finally:
        _active_counter.reset(token)


def relevance_key(rating: Optional[RatingElement], adv_id: str, profile: UserProfile) -> RelevanceKey:
    counter = _active_counter.get()
    if counter is not None:
        counter.calls += 1
    if rating is None:
        return RelevanceKey(1, 0, 0, 0, adv_id)
    wanted = profile.desired_descriptor
    mismatch = 0 if wanted is None or wanted == rating.descriptor else 1
    distance = abs(LEVEL_CODES.index(rating.level) - LEVEL_CODES.index(profile.level))
    return RelevanceKey(0, mismatch, distance, -rating.citations, adv_id)


S = TypeVar("S")


def sort_results(
    results: Iterable[Tuple[DocumentAdvertisement, S]], profile: UserProfile
) -> List[Tuple[DocumentAdvertisement, S]]:
    """Order ``(advertisement, source)`` pairs for *profile*, best first."""
    keyed = []
    for position, item in enumerate(results):
        adv = item[0]
        keyed.append((relevance_key(adv.rating, adv.id, profile), position, item))
    # position keeps duplicate ids in input order; keys alone are total otherwise
    keyed.sort(key=lambda entry: entry[:2])
    return [item for _, _, item in keyed]
