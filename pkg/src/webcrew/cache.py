"""Content-addressed artifact cache behind the ``lcs`` graph node.

Bulky artifacts (HTML pages, generated programs, program output) live here
instead of inside the message channel.  Storing an artifact broadcasts a
small announcement message carrying only the cache id, media type, byte
length, and description; agents retrieve the bytes on demand.

Ids are ``ohc-`` plus the SHA-256 of the artifact bytes, so identical
content deduplicates and replays are stable.  On disk the cache is a
directory of files named by cache id plus an ``index.json`` sidecar.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CacheIOError, CacheNotFoundError
from .formatter import RoutingTable, route
from .hypergraph import MessageHypergraph, MessageKind, NodeId, StructuredMessage

INDEX_NAME = "index.json"


def cache_id_for(data: bytes) -> str:
    return "ohc-" + hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class Artifact:
    """Raw bytes plus the metadata agents see in announcements."""

    data: bytes
    media_type: str
    description: str
    origin: str  # node id or tool name
    placeholder: bool = False

    def __post_init__(self) -> None:
        if not self.data and not self.placeholder:
            raise ValueError("empty artifact bytes require the placeholder flag")


@dataclass(frozen=True)
class CacheEntry:
    id: str
    media_type: str
    byte_length: int
    description: str
    origin: str
    stored_at: int  # logical tick of the run when first stored
    placeholder: bool = False


class ArtifactCache:
    """Directory-backed store; safe for concurrent store/retrieve calls.

    Announcement commits go through the orchestrator's single-writer path:
    :meth:`put` only persists, :meth:`announce` builds the broadcast edge,
    and :func:`store` composes the two.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._entries: dict[str, CacheEntry] = {}
        self._order: list[str] = []
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CacheIOError(f"cannot create cache directory {self.root}: {exc}") from exc
        self._load_index()

    # -- persistence ----------------------------------------------------------

    def _load_index(self) -> None:
        index_path = self.root / INDEX_NAME
        if not index_path.exists():
            return
        try:
            rows = json.loads(index_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CacheIOError(f"corrupt cache index at {index_path}: {exc}") from exc
        for row in rows:
            entry = CacheEntry(**row)
            self._entries[entry.id] = entry
            self._order.append(entry.id)

    def _write_index(self) -> None:
        rows = [vars(self._entries[cid]) for cid in self._order]
        index_path = self.root / INDEX_NAME
        try:
            index_path.write_text(
                json.dumps(rows, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            raise CacheIOError(f"cannot write cache index: {exc}") from exc

    # -- core operations --------------------------------------------------------

    def put(self, artifact: Artifact, stored_at: int = 0) -> str:
        """Persist an artifact, keyed by content hash; idempotent."""
        cid = cache_id_for(artifact.data)
        with self._lock:
            if cid in self._entries:
                return cid
            path = self.root / cid
            try:
                path.write_bytes(artifact.data)
            except OSError as exc:
                raise CacheIOError(f"cannot persist artifact {cid}: {exc}") from exc
            entry = CacheEntry(
                id=cid,
                media_type=artifact.media_type,
                byte_length=len(artifact.data),
                description=artifact.description,
                origin=artifact.origin,
                stored_at=stored_at,
                placeholder=artifact.placeholder,
            )
            self._entries[cid] = entry
            self._order.append(cid)
            self._write_index()
        return cid

    def retrieve(self, cache_id: str) -> Artifact:
        """The exact stored artifact, bytewise; CacheNotFoundError otherwise."""
        with self._lock:
            entry = self._entries.get(cache_id)
        if entry is None:
            raise CacheNotFoundError(f"no cache entry for {cache_id}")
        try:
            data = (self.root / cache_id).read_bytes()
        except OSError as exc:
            raise CacheIOError(f"cannot read artifact {cache_id}: {exc}") from exc
        return Artifact(
            data=data,
            media_type=entry.media_type,
            description=entry.description,
            origin=entry.origin,
            placeholder=entry.placeholder,
        )

    def entry(self, cache_id: str) -> CacheEntry:
        with self._lock:
            entry = self._entries.get(cache_id)
        if entry is None:
            raise CacheNotFoundError(f"no cache entry for {cache_id}")
        return entry

    def list_entries(self) -> list[CacheEntry]:
        """All entries in first-stored order; metadata only, never bytes."""
        with self._lock:
            return [self._entries[cid] for cid in self._order]

    def __contains__(self, cache_id: str) -> bool:
        with self._lock:
            return cache_id in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    # -- announcements ----------------------------------------------------------

    def announce(
        self,
        graph: MessageHypergraph,
        cache_id: str,
        table: RoutingTable | None = None,
        embed_bytes: bool = False,
    ) -> MessageHypergraph:
        """Commit the broadcast edge ({lcs} -> all eight agents) for an entry.

        The payload names the artifact, never contains it — unless
        ``embed_bytes`` (the cache-bypass ablation) forces the content
        inline as base64.
        """
        entry = self.entry(cache_id)
        payload = {
            "CACHE_ID": entry.id,
            "MEDIA_TYPE": entry.media_type,
            "BYTE_LENGTH": str(entry.byte_length),
            "DESCRIPTION": entry.description,
        }
        if embed_bytes:
            data = (self.root / cache_id).read_bytes()
            payload["ARTIFACT_BASE64"] = base64.b64encode(data).decode("ascii")
        edge = route(table or RoutingTable(), NodeId.LCS, MessageKind.CACHE_ANNOUNCEMENT)
        draft = StructuredMessage(
            author=NodeId.LCS, kind=MessageKind.CACHE_ANNOUNCEMENT, payload=payload
        )
        return graph.commit(edge, draft)


def store(
    graph: MessageHypergraph,
    cache: ArtifactCache,
    artifact: Artifact,
    table: RoutingTable | None = None,
    embed_bytes: bool = False,
) -> tuple[str, ArtifactCache, MessageHypergraph]:
    """Persist an artifact and broadcast its announcement in one step.

    Returns (cache id, cache, new graph).  Duplicate content keeps the
    single existing entry but is re-announced, so agents joining later in
    the run still see the pointer.
    """
    cid = cache.put(artifact, stored_at=graph.clock + 1)
    graph = cache.announce(graph, cid, table=table, embed_bytes=embed_bytes)
    return cid, cache, graph


@dataclass
class CacheRecorder:
    """Collects artifacts produced by tools during one agent step.

    Bytes are persisted immediately (so the producing step can already
    reference the id); the announcement edges are committed by the
    orchestrator after the step returns, preserving the single-writer,
    commit-after-step contract.
    """

    cache: ArtifactCache
    pending: list[str] = field(default_factory=list)

    def record(self, artifact: Artifact) -> str:
        cid = self.cache.put(artifact)
        self.pending.append(cid)
        return cid

    def drain(self) -> list[str]:
        out, self.pending = self.pending, []
        return out
