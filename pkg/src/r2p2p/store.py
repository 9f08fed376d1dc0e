"""Per-peer document store with credential-gated publishing.

Principals are listed in a local credential table (``credentials.txt``):
one ``principal_id<TAB>role<TAB>token_digest`` line each.  Only authors and
raters may publish; a rating may be revised by the document's owner or by
any rater; readers may do neither.

On disk a store is a directory holding ``records/<id>.xml`` (the canonical
advertisement) next to ``records/<id>.bin`` (the document bytes).
"""
from __future__ import annotations

import hashlib
import hmac
import logging
import os
import re
import tempfile
import threading
import uuid
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from .advert import (
    DocumentAdvertisement,
    RatingElement,
    parse_advertisement,
    serialize_advertisement,
)
from .errors import ConfigError, IntegrityError, InvalidRating, NotFound, Unauthorized

log = logging.getLogger(__name__)

DEFAULT_DIGEST = "sha256"

_TOKEN_SPLIT = re.compile(r"[^0-9a-zA-Z]+")


class Role(str, Enum):
    AUTHOR = "author"
    RATER = "rater"
    READER = "reader"


PUBLISHING_ROLES = frozenset({Role.AUTHOR, Role.RATER})


@dataclass(frozen=True)
class Credential:
    principal_id: str
    token: str
    role: Role

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))


def compute_digest(data: bytes, algorithm: str = DEFAULT_DIGEST) -> str:
    try:
        return hashlib.new(algorithm, data).hexdigest()
    except (ValueError, TypeError):
        raise ConfigError("unsupported digest algorithm %r" % (algorithm,)) from None


def check_digest_algorithm(algorithm: str) -> str:
    compute_digest(b"", algorithm)
    return algorithm


class CredentialRegistry:
    """In-process principal table.

    Only token digests are held, so the table can be written to disk as is.
    """

    def __init__(self, digest: str = DEFAULT_DIGEST):
        self.digest = check_digest_algorithm(digest)
        self._entries: Dict[str, Tuple[Role, str]] = {}

    def add(self, principal_id: str, role: Union[Role, str], token: str) -> Credential:
        if not principal_id or _has_separator(principal_id):
            raise ConfigError("invalid principal id %r" % (principal_id,))
        role = Role(role)
        self._entries[principal_id] = (role, compute_digest(token.encode("utf-8"), self.digest))
        return Credential(principal_id, token, role)

    def set_role(self, principal_id: str, role: Union[Role, str]) -> None:
        _, token_digest = self._entries[principal_id]
        self._entries[principal_id] = (Role(role), token_digest)

    def role_of(self, principal_id: str) -> Optional[Role]:
        entry = self._entries.get(principal_id)
        return entry[0] if entry else None

    def authenticate(self, principal_id: str, token: str) -> Credential:
        """Build the credential for a principal/token pair, or raise Unauthorized."""
        entry = self._entries.get(principal_id)
        if entry is None or not self._token_matches(entry[1], token):
            raise Unauthorized("unknown principal or bad token for %r" % (principal_id,))
        return Credential(principal_id, token, entry[0])

    def validate(self, cred: Credential) -> bool:
        entry = self._entries.get(cred.principal_id)
        if entry is None:
            return False
        role, token_digest = entry
        return role == cred.role and self._token_matches(token_digest, cred.token)

    def _token_matches(self, token_digest: str, token: str) -> bool:
        presented = compute_digest(token.encode("utf-8"), self.digest)
        return hmac.compare_digest(presented, token_digest)

    def __len__(self):
        return len(self._entries)

    @classmethod
    def load(cls, path: Union[str, Path], digest: str = DEFAULT_DIGEST) -> "CredentialRegistry":
        registry = cls(digest)
        path = Path(path)
        if not path.exists():
            return registry
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ConfigError("%s:%d: expected 3 tab-separated fields" % (path, lineno))
            principal_id, role, token_digest = fields
            try:
                registry._entries[principal_id] = (Role(role), token_digest)
            except ValueError:
                raise ConfigError("%s:%d: unknown role %r" % (path, lineno, role)) from None
        return registry

    def save(self, path: Union[str, Path]) -> None:
        lines = [
            "%s\t%s\t%s\n" % (principal_id, role.value, token_digest)
            for principal_id, (role, token_digest) in sorted(self._entries.items())
        ]
        _atomic_write(Path(path), "".join(lines).encode("utf-8"))


def _has_separator(text: str) -> bool:
    return any(ch in text for ch in "\t\r\n")


@dataclass(frozen=True)
class DocumentRecord:
    advertisement: DocumentAdvertisement
    content: bytes
    owner: str


def tokenize(text: str) -> List[str]:
    return [tok.lower() for tok in _TOKEN_SPLIT.split(text) if tok]


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def default_id_factory() -> str:
    return "urn:r2p2p:uuid-" + uuid.uuid4().hex


class Store:
    """Documents and advertisements held by one peer.

    Pass ``directory=None`` for a purely in-memory store.  Reads may run
    concurrently; publish and revise are serialized by a lock and persist
    the advertisement last so a failed write leaves no visible change.
    """

    def __init__(
        self,
        registry: CredentialRegistry,
        directory: Union[str, Path, None] = None,
        digest: Optional[str] = None,
        id_factory: Callable[[], str] = default_id_factory,
    ):
        self.registry = registry
        self.digest = check_digest_algorithm(digest or registry.digest)
        self.directory = Path(directory) if directory is not None else None
        self.id_factory = id_factory
        self._records: Dict[str, DocumentRecord] = {}
        self._mtimes: Dict[str, int] = {}
        self._lock = threading.RLock()
        if self.directory is not None:
            self.records_dir.mkdir(parents=True, exist_ok=True)
            self.refresh()

    @property
    def records_dir(self) -> Path:
        return self.directory / "records"

    # -- persistence -------------------------------------------------------

    def refresh(self) -> None:
        """Pick up records written to the directory by other processes."""
        if self.directory is None:
            return
        with self._lock:
            for xml_path in sorted(self.records_dir.glob("*.xml")):
                mtime = xml_path.stat().st_mtime_ns
                if self._mtimes.get(xml_path.name) == mtime:
                    continue
                record = self._load_record(xml_path)
                self._records[record.advertisement.id] = record
                self._mtimes[xml_path.name] = mtime

    def _load_record(self, xml_path: Path) -> DocumentRecord:
        adv = parse_advertisement(xml_path.read_bytes())
        if xml_path.name != adv.id + ".xml":
            raise IntegrityError("%s holds advertisement %r" % (xml_path, adv.id))
        content = xml_path.with_suffix(".bin").read_bytes()
        if compute_digest(content, self.digest) != adv.content_hash:
            raise IntegrityError("content of %s does not match its digest" % adv.id)
        return DocumentRecord(adv, content, adv.author_id)

    def _persist(self, record: DocumentRecord, write_content: bool) -> None:
        if self.directory is None:
            return
        adv = record.advertisement
        xml_path = self.records_dir / (adv.id + ".xml")
        if write_content:
            _atomic_write(xml_path.with_suffix(".bin"), record.content)
        _atomic_write(xml_path, serialize_advertisement(adv).encode("utf-8"))
        self._mtimes[xml_path.name] = xml_path.stat().st_mtime_ns

    # -- operations --------------------------------------------------------

    def publish_document(
        self,
        title: str,
        summary: str,
        content: bytes,
        rating: Optional[RatingElement],
        cred: Credential,
    ) -> DocumentAdvertisement:
        if not self.registry.validate(cred) or cred.role not in PUBLISHING_ROLES:
            raise Unauthorized("%r may not publish documents" % cred.principal_id)
        if rating is not None and not isinstance(rating, RatingElement):
            raise InvalidRating("rating must be a RatingElement")
        with self._lock:
            adv_id = self.id_factory()
            if adv_id in self._records:
                raise IntegrityError("id factory produced duplicate id %r" % adv_id)
            adv = DocumentAdvertisement(
                id=adv_id,
                title=title,
                summary=summary,
                author_id=cred.principal_id,
                content_hash=compute_digest(content, self.digest),
                rating=rating,
                revision=1,
            )
            record = DocumentRecord(adv, bytes(content), cred.principal_id)
            self._persist(record, write_content=True)
            self._records[adv_id] = record
            log.info("published %s (%s) as %s", adv_id, title, cred.principal_id)
            return adv

    def can_revise(self, cred: Credential, record: DocumentRecord) -> bool:
        if not self.registry.validate(cred) or cred.role == Role.READER:
            return False
        return cred.role == Role.RATER or cred.principal_id == record.owner

    def revise_rating(self, adv_id: str, new_rating: RatingElement, cred: Credential) -> DocumentAdvertisement:
        if not isinstance(new_rating, RatingElement):
            raise InvalidRating("rating must be a RatingElement")
        with self._lock:
            record = self.lookup(adv_id)
            if not self.can_revise(cred, record):
                raise Unauthorized("%r may not revise the rating of %s" % (cred.principal_id, adv_id))
            adv = replace(record.advertisement, rating=new_rating, revision=record.advertisement.revision + 1)
            revised = replace(record, advertisement=adv)
            self._persist(revised, write_content=False)
            self._records[adv_id] = revised
            log.info("revised %s to revision %d by %s", adv_id, adv.revision, cred.principal_id)
            return adv

    def lookup(self, adv_id: str) -> DocumentRecord:
        try:
            return self._records[adv_id]
        except KeyError:
            raise NotFound("no document with id %r" % (adv_id,)) from None

    def match_query(self, keywords: Iterable[str]) -> List[DocumentAdvertisement]:
        """Advertisements whose title or summary holds every keyword as a token."""
        wanted = set()
        for keyword in keywords:
            wanted.update(tokenize(keyword))
        if not wanted:
            return []
        hits = []
        for _, record in sorted(self._records.items()):
            adv = record.advertisement
            if wanted <= set(tokenize(adv.title)) | set(tokenize(adv.summary)):
                hits.append(adv)
        return hits

    def records(self) -> List[DocumentRecord]:
        return [self._records[adv_id] for adv_id in sorted(self._records)]

    def __len__(self):
        return len(self._records)

    def __contains__(self, adv_id):
        return adv_id in self._records
