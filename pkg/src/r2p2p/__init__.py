"""Rated-resource peer-to-peer document sharing."""
from .advert import (
    DocumentAdvertisement,
    RatingElement,
    extract_rating,
    parse_advertisement,
    serialize_advertisement,
)
from .errors import *  # noqa: F401,F403
from .node import Node, handle_message
from .protocol import PROTOCOL_VERSION, Hello, QueryRequest, QueryResponse
from .queryengine import QueryEngine, SearchResult, dedupe, search
from .relevance import (
    DocType,
    RelevanceKey,
    UserEntity,
    UserProfile,
    decode_descriptor,
    decode_level,
    descriptor_code,
    level_code,
    relevance_key,
    sort_results,
)
from .store import Credential, CredentialRegistry, DocumentRecord, Role, Store

__version__ = "0.1.0"
