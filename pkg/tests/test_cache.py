import json
import random

import pytest

from webcrew.cache import Artifact, ArtifactCache, CacheRecorder, cache_id_for, store
from webcrew.errors import CacheNotFoundError
from webcrew.hypergraph import AGENT_NODES, ALL_NODES, MessageKind, NodeId, new_graph, to_trace_text


def _artifact(data: bytes, media="text/html", desc="page") -> Artifact:
    return Artifact(data=data, media_type=media, description=desc, origin="web")


class TestStoreRetrieve:
    def test_round_trip_is_bytewise_identical(self, tmp_path):
        rng = random.Random(2024)
        cache = ArtifactCache(tmp_path / "cache")
        for _ in range(20):
            data = rng.randbytes(rng.randint(1, 64 * 1024))
            cid = cache.put(_artifact(data))
            assert cache.retrieve(cid).data == data

    def test_metadata_round_trips(self, tmp_path):
        cache = ArtifactCache(tmp_path / "cache")
        cid = cache.put(_artifact(b"abc", media="application/json", desc="rows"))
        back = cache.retrieve(cid)
        assert back.media_type == "application/json"
        assert back.description == "rows"

    def test_unknown_id_not_found(self, tmp_path):
        cache = ArtifactCache(tmp_path / "cache")
        with pytest.raises(CacheNotFoundError):
            cache.retrieve("ohc-" + "0" * 64)

    def test_content_addressing_dedups(self, tmp_path):
        cache = ArtifactCache(tmp_path / "cache")
        a = cache.put(_artifact(b"same bytes"))
        b = cache.put(_artifact(b"same bytes"))
        assert a == b
        assert len(cache) == 1

    def test_distinct_bytes_distinct_ids(self, tmp_path):
        cache = ArtifactCache(tmp_path / "cache")
        assert cache.put(_artifact(b"one")) != cache.put(_artifact(b"two"))

    def test_empty_bytes_need_placeholder_flag(self, tmp_path):
        with pytest.raises(ValueError):
            Artifact(data=b"", media_type="text/plain", description="d", origin="x")
        flagged = Artifact(
            data=b"", media_type="text/plain", description="d", origin="x", placeholder=True
        )
        cache = ArtifactCache(tmp_path / "cache")
        cid = cache.put(flagged)
        assert cache.retrieve(cid).placeholder is True

    def test_on_disk_layout(self, tmp_path):
        root = tmp_path / "cache"
        cache = ArtifactCache(root)
        cid = cache.put(_artifact(b"payload"))
        assert (root / cid).read_bytes() == b"payload"
        index = json.loads((root / "index.json").read_text())
        assert index[0]["id"] == cid
        assert index[0]["byte_length"] == 7

    def test_index_reload_preserves_entries(self, tmp_path):
        root = tmp_path / "cache"
        cid = ArtifactCache(root).put(_artifact(b"persisted"))
        reopened = ArtifactCache(root)
        assert cid in reopened
        assert reopened.retrieve(cid).data == b"persisted"

    def test_list_entries_in_store_order_without_bytes(self, tmp_path):
        cache = ArtifactCache(tmp_path / "cache")
        assert cache.list_entries() == []
        ids = [cache.put(_artifact(bytes([i]) * 10)) for i in range(3)]
        rows = cache.list_entries()
        assert [r.id for r in rows] == ids
        cache.put(_artifact(bytes([0]) * 10))  # duplicate
        assert len(cache.list_entries()) == 3


class TestAnnouncements:
    def test_store_commits_broadcast_edge(self, tmp_path):
        graph = new_graph(ALL_NODES)
        cache = ArtifactCache(tmp_path / "cache")
        cid, cache, graph = store(graph, cache, _artifact(b"<html></html>"))
        assert len(graph.edges) == 1
        edge = graph.edges[0]
        assert edge.source == frozenset({NodeId.LCS})
        assert edge.targets == AGENT_NODES
        message = graph.messages_in_order()[0]
        assert message.kind is MessageKind.CACHE_ANNOUNCEMENT
        assert message.payload["CACHE_ID"] == cid
        assert message.payload["BYTE_LENGTH"] == str(len(b"<html></html>"))

    def test_duplicate_store_reannounces_single_entry(self, tmp_path):
        graph = new_graph(ALL_NODES)
        cache = ArtifactCache(tmp_path / "cache")
        cid1, cache, graph = store(graph, cache, _artifact(b"dup"))
        cid2, cache, graph = store(graph, cache, _artifact(b"dup"))
        assert cid1 == cid2
        assert len(cache) == 1
        assert len(graph.edges) == 2

    def test_announcement_payload_never_contains_bytes(self, tmp_path):
        rng = random.Random(7)
        data = rng.randbytes(1024 * 1024)
        graph = new_graph(ALL_NODES)
        cache = ArtifactCache(tmp_path / "cache")
        _, cache, graph = store(graph, cache, _artifact(data))
        trace = to_trace_text(graph).encode("utf-8")
        for offset in range(0, len(data) - 64, 64 * 1024):
            assert data[offset : offset + 64] not in trace

    def test_cache_bypass_embeds_bytes(self, tmp_path):
        graph = new_graph(ALL_NODES)
        cache = ArtifactCache(tmp_path / "cache")
        _, cache, slim = store(graph, cache, _artifact(b"inline me"))
        _, cache, fat = store(graph, cache, _artifact(b"inline me"), embed_bytes=True)
        slim_payload = slim.messages_in_order()[0].payload
        fat_payload = fat.messages_in_order()[0].payload
        assert "ARTIFACT_BASE64" not in slim_payload
        assert "ARTIFACT_BASE64" in fat_payload
        assert len(to_trace_text(fat)) > len(to_trace_text(slim))

    def test_cache_id_is_prefixed_sha256(self):
        cid = cache_id_for(b"xyz")
        assert cid.startswith("ohc-")
        assert len(cid) == 4 + 64
        assert cid == cache_id_for(b"xyz")


class TestConcurrency:
    def test_concurrent_store_and_retrieve(self, tmp_path):
        from concurrent.futures import ThreadPoolExecutor

        cache = ArtifactCache(tmp_path / "cache")
        payloads = [bytes([i % 40]) * (100 + i % 7) for i in range(200)]

        def worker(data: bytes) -> bool:
            cid = cache.put(_artifact(data))
            return cache.retrieve(cid).data == data

        with ThreadPoolExecutor(max_workers=8) as pool:
            assert all(pool.map(worker, payloads))
        assert len(cache) == len({p for p in payloads})
        reopened = ArtifactCache(tmp_path / "cache")
        assert len(reopened) == len(cache)


class TestRecorder:
    def test_recorder_defers_announcements(self, tmp_path):
        cache = ArtifactCache(tmp_path / "cache")
        recorder = CacheRecorder(cache)
        cid = recorder.record(_artifact(b"deferred"))
        assert cid in cache
        assert recorder.pending == [cid]
        graph = new_graph(ALL_NODES)
        for pending in recorder.drain():
            graph = cache.announce(graph, pending)
        assert recorder.pending == []
        assert len(graph.edges) == 1
