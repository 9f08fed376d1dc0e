"""Node configuration file.

Plain ``key = value`` lines, ``#`` starts a comment, each key at most once::

    node_id = alice
    listen = 127.0.0.1:7400
    peers = 127.0.0.1:7401, 127.0.0.1:7402
    store_dir = ./alice-store
    credentials = ./alice-store/credentials.txt
    digest = sha256
    protocol_version = 1
    http_listen = 127.0.0.1:8400

Relative paths are resolved against the directory holding the file.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

from .errors import ConfigError
from .protocol import PROTOCOL_VERSION
from .store import DEFAULT_DIGEST, CredentialRegistry, Store, check_digest_algorithm
from .transport import parse_address

KNOWN_KEYS = (
    "node_id",
    "listen",
    "peers",
    "store_dir",
    "credentials",
    "digest",
    "protocol_version",
    "http_listen",
)


@dataclass(frozen=True)
class NodeConfig:
    node_id: str
    store_dir: Path
    credentials: Path
    listen: Optional[str] = None
    peers: Tuple[str, ...] = ()
    digest: str = DEFAULT_DIGEST
    protocol_version: int = PROTOCOL_VERSION
    http_listen: Optional[str] = None

    def open_registry(self) -> CredentialRegistry:
        return CredentialRegistry.load(self.credentials, self.digest)

    def open_store(self, registry: Optional[CredentialRegistry] = None) -> Store:
        try:
            return Store(registry or self.open_registry(), self.store_dir, self.digest)
        except OSError as exc:
            raise ConfigError("cannot open store directory %s: %s" % (self.store_dir, exc)) from None


def parse_config(text: str, base_dir: Union[str, Path] = ".") -> NodeConfig:
    base_dir = Path(base_dir)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError("line %d: expected 'key = value'" % lineno)
        if key not in KNOWN_KEYS:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
        if key in values:
            raise ConfigError("line %d: duplicate key %r" % (lineno, key))
        values[key] = value

    for required in ("node_id", "store_dir"):
        if not values.get(required):
            raise ConfigError("missing required key %r" % required)

    peers = tuple(p.strip() for p in values.get("peers", "").split(",") if p.strip())
    if len(set(peers)) != len(peers):
        raise ConfigError("peer list contains duplicates")
    for address in peers + tuple(values[k] for k in ("listen", "http_listen") if values.get(k)):
        parse_address(address)

    version = values.get("protocol_version", str(PROTOCOL_VERSION))
    if not version.isdigit() or int(version) != PROTOCOL_VERSION:
        raise ConfigError("unsupported protocol_version %r (this node speaks %d)" % (version, PROTOCOL_VERSION))

    store_dir = base_dir / values["store_dir"]
    credentials = base_dir / values["credentials"] if values.get("credentials") else store_dir / "credentials.txt"
    return NodeConfig(
        node_id=values["node_id"],
        store_dir=store_dir,
        credentials=credentials,
        listen=values.get("listen") or None,
        peers=peers,
        digest=check_digest_algorithm(values.get("digest") or DEFAULT_DIGEST),
        protocol_version=int(version),
        http_listen=values.get("http_listen") or None,
    )


def load_config(path: Union[str, Path]) -> NodeConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    return parse_config(text, path.parent)
