from __future__ import annotations

import random
import threading

import pytest

from nora.errors import ConflictError, ValidationError
from nora.store import DEFAULT_COLLECTIONS, FileStore, MemoryStore, UnknownCollectionError

# Every test taking `any_store` runs against both implementations — that IS
# the implementation-equivalence suite.


def test_put_then_get_roundtrip(any_store):
    version = any_store.put("users", "alice", {"name": "Alice", "age": 30})
    assert version == 1
    doc = any_store.get("users", "alice")
    assert doc.body == {"name": "Alice", "age": 30}
    assert doc.version == 1


def test_get_missing_returns_none(any_store):
    assert any_store.get("users", "ghost") is None


def test_versions_increment_on_every_write(any_store):
    assert any_store.put("users", "alice", {"n": 1}) == 1
    assert any_store.put("users", "alice", {"n": 2}) == 2
    assert any_store.put("users", "alice", {"n": 3}) == 3
    assert any_store.get("users", "alice").body == {"n": 3}


def test_compare_and_put_succeeds_on_current_version(any_store):
    version = any_store.put("users", "alice", {"n": 1})
    new_version = any_store.compare_and_put("users", "alice", version, {"n": 2})
    assert new_version == version + 1


def test_compare_and_put_stale_conflicts_and_leaves_body(any_store):
    any_store.put("users", "alice", {"n": 1})
    any_store.put("users", "alice", {"n": 2})
    with pytest.raises(ConflictError):
        any_store.compare_and_put("users", "alice", 1, {"n": 99})
    assert any_store.get("users", "alice").body == {"n": 2}


def test_compare_and_put_create_with_version_zero(any_store):
    assert any_store.compare_and_put("users", "new", 0, {"fresh": True}) == 1
    with pytest.raises(ConflictError):
        any_store.compare_and_put("users", "new", 0, {"fresh": False})


def test_unknown_collection_rejected(any_store):
    with pytest.raises(UnknownCollectionError):
        any_store.put("not-a-collection", "k", {})
    with pytest.raises(UnknownCollectionError):
        any_store.get("not-a-collection", "k")


def test_body_must_be_json_serializable(any_store):
    with pytest.raises(ValidationError):
        any_store.put("users", "bad", {"when": object()})


def test_returned_body_is_isolated_from_store(any_store):
    any_store.put("users", "alice", {"tags": ["a"]})
    doc = any_store.get("users", "alice")
    doc.body["tags"].append("mutated")
    assert any_store.get("users", "alice").body == {"tags": ["a"]}


def test_query_by_field_matches_linear_scan(any_store):
    for day in (3, 1, 5, 2, 4):
        any_store.put("sessions", f"alice:{day:04d}", {"user": "alice", "day": day})
    any_store.put("sessions", "bob:0001", {"user": "bob", "day": 1})
    result = any_store.query("sessions", user="alice")
    oracle = [d for d in any_store.scan("sessions") if d.body.get("user") == "alice"]
    assert [d.key for d in result] == [d.key for d in oracle]
    assert len(result) == 5
    assert [d.body["day"] for d in result] == [1, 2, 3, 4, 5]  # key order == day order


def test_query_multiple_fields(any_store):
    any_store.put("sessions", "a", {"user": "alice", "day": 1})
    any_store.put("sessions", "b", {"user": "alice", "day": 2})
    assert [d.key for d in any_store.query("sessions", user="alice", day=2)] == ["b"]


def test_linearizable_per_key_under_concurrent_cas(any_store):
    """A compare-and-put loop never loses an update."""
    any_store.put("users", "counter", {"n": 0})
    workers, per_worker = 8, 50

    def bump():
        for _ in range(per_worker):
            while True:
                doc = any_store.get("users", "counter")
                try:
                    any_store.compare_and_put("users", "counter", doc.version, {"n": doc.body["n"] + 1})
                    break
                except ConflictError:
                    continue

    threads = [threading.Thread(target=bump) for _ in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert any_store.get("users", "counter").body["n"] == workers * per_worker


# ------------------------------------------------------------ file store only

def test_file_store_survives_crash_restart(tmp_path):
    """Acknowledged writes are all present after dropping process state."""
    data_dir = tmp_path / "data"
    store = FileStore(data_dir)
    rng = random.Random(42)
    shadow: dict[tuple[str, str], dict] = {}
    collections = ("users", "sessions", "health")
    for i in range(1000):
        collection = rng.choice(collections)
        key = f"k{rng.randint(0, 40)}"
        body = {"i": i, "payload": rng.random()}
        if rng.random() < 0.3 and (collection, key) in shadow:
            version = store.get(collection, key).version
            store.compare_and_put(collection, key, version, body)
        else:
            store.put(collection, key, body)
        shadow[(collection, key)] = body
    # crash: no close(), no fsync — just drop the object and reopen the files
    del store
    revived = FileStore(data_dir)
    for (collection, key), body in shadow.items():
        assert revived.get(collection, key).body == body
    revived.close()


def test_file_store_truncates_torn_tail(tmp_path):
    data_dir = tmp_path / "data"
    store = FileStore(data_dir)
    store.put("users", "alice", {"n": 1})
    store.put("users", "bob", {"n": 2})
    store.close()
    log = data_dir / "users.log"
    with open(log, "ab") as fh:
        fh.write(b"\x00\x00\x01\x00partial-record-cut-sh")  # length says 256, body short
    revived = FileStore(data_dir)
    assert revived.get("users", "alice").body == {"n": 1}
    assert revived.get("users", "bob").body == {"n": 2}
    revived.put("users", "carol", {"n": 3})
    revived.close()
    third = FileStore(data_dir)
    assert third.get("users", "carol").body == {"n": 3}
    third.close()


def test_file_store_compaction_keeps_latest_values(tmp_path):
    data_dir = tmp_path / "data"
    store = FileStore(data_dir)
    for i in range(300):
        store.put("users", f"k{i % 3}", {"i": i})
    size_after = (data_dir / "users.log").stat().st_size
    store.close()
    # only 3 live keys: the log must have been compacted well below 300 frames
    assert size_after < 300 * 20
    revived = FileStore(data_dir)
    for k in range(3):
        assert revived.get("users", f"k{k}").body["i"] >= 297
    revived.close()


def test_file_store_reopen_preserves_versions(tmp_path):
    data_dir = tmp_path / "data"
    store = FileStore(data_dir)
    store.put("users", "alice", {"n": 1})
    store.put("users", "alice", {"n": 2})
    store.close()
    revived = FileStore(data_dir)
    assert revived.get("users", "alice").version == 2
    assert revived.put("users", "alice", {"n": 3}) == 3
    revived.close()


def test_default_collections_cover_platform_needs():
    for name in ("users", "sessions", "health", "conversations", "topics", "meetings", "reports"):
        assert name in DEFAULT_COLLECTIONS


def test_memory_and_file_agree_on_operation_sequence(tmp_path):
    """Random op fuzz: both implementations produce identical results."""
    rng = random.Random(7)
    memory = MemoryStore()
    disk = FileStore(tmp_path / "data")
    for i in range(400):
        key = f"k{rng.randint(0, 10)}"
        op = rng.random()
        if op < 0.5:
            body = {"i": i}
            assert memory.put("users", key, body) == disk.put("users", key, body)
        elif op < 0.8:
            m, d = memory.get("users", key), disk.get("users", key)
            assert (m is None) == (d is None)
            if m is not None:
                assert (m.body, m.version) == (d.body, d.version)
        else:
            m = memory.get("users", key)
            expected = m.version if (m and rng.random() < 0.7) else rng.randint(0, 3)
            body = {"cas": i}
            outcome_memory = outcome_disk = None
            try:
                outcome_memory = memory.compare_and_put("users", key, expected, body)
            except ConflictError:
                pass
            try:
                outcome_disk = disk.compare_and_put("users", key, expected, body)
            except ConflictError:
                pass
            assert outcome_memory == outcome_disk
    disk.close()
