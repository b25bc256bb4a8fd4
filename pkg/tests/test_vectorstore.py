"""Tests for the exact-scan vector stores and their binary container.

Search results are checked against an independent pure-Python oracle
(nested loops, no numpy) on randomized instances, including deliberate
score ties.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lazyrag.embedding import EmbeddingConfig, embed_text
from lazyrag.vectorstore import (
    FORMAT_VERSION,
    KIND_IMAGE,
    KIND_TEXT,
    MAGIC,
    Chunk,
    DuplicateChunkError,
    FrameRecord,
    ImageDB,
    StoreCorruptError,
    StoreError,
    TextDB,
    chunk_id_for,
    make_chunk,
    read_container,
    write_container,
)

EMB = EmbeddingConfig()


def oracle_rank(items, query, limit):
    """Reference search: dot product via python loops, ties by ascending id."""
    scored = []
    for item_id, vec in items:
        s = 0.0
        for a, b in zip(query, vec):
            s += float(a) * float(b)
        scored.append((item_id, s))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:limit]


def chunk_of(clip_id, text, model="captioner", weight="heavyweight"):
    return make_chunk(clip_id, text, model, weight, EMB)


def raw_chunk(chunk_id, clip_id, vec, text="t"):
    return Chunk(
        chunk_id=chunk_id,
        clip_id=clip_id,
        text=text,
        source_model_id="m",
        level="index",
        embedding=np.asarray(vec, dtype=np.float64),
    )


class TestChunkConstruction:
    def test_chunk_id_composition(self):
        assert chunk_id_for("clip_0001", "captioner") == "clip_0001::captioner"

    def test_make_chunk_levels(self):
        heavy = chunk_of("c", "a red car")
        light = make_chunk("c", "objects: car", "detector", "lightweight", EMB)
        assert heavy.level == "detailed"
        assert light.level == "index"
        assert heavy.chunk_id == "c::captioner"
        assert np.array_equal(heavy.embedding, embed_text("a red car", EMB))

    def test_make_chunk_rejects_unknown_weight(self):
        with pytest.raises(KeyError):
            make_chunk("c", "x", "m", "featherweight", EMB)


class TestTextDBUpsert:
    def test_insert_and_get(self):
        db = TextDB(dimension=EMB.dimension)
        n = db.upsert_chunks([chunk_of("c0", "a red car")])
        assert n == 1
        assert len(db) == 1
        assert db.get("c0::captioner").text == "a red car"
        assert db.clip_ids() == {"c0"}

    def test_same_content_upsert_is_noop(self):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        n = db.upsert_chunks([chunk_of("c0", "a red car")])
        assert n == 0
        assert len(db) == 1

    def test_conflicting_content_rejected(self):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        with pytest.raises(DuplicateChunkError):
            db.upsert_chunks([chunk_of("c0", "a blue bus")])

    def test_dimension_mismatch_rejected(self):
        db = TextDB(dimension=16)
        with pytest.raises(StoreError):
            db.upsert_chunks([chunk_of("c0", "a red car")])

    def test_membership(self):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        assert "c0::captioner" in db
        assert "c0::detector" not in db

    def test_chunks_for_clip(self):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks(
            [
                chunk_of("c0", "a red car"),
                make_chunk("c0", "objects: car", "detector", "lightweight", EMB),
                chunk_of("c1", "a blue bus"),
            ]
        )
        ids = {c.chunk_id for c in db.chunks_for_clip("c0")}
        assert ids == {"c0::captioner", "c0::detector"}


class TestTextDBSearch:
    def test_empty_store_returns_nothing(self):
        db = TextDB(dimension=EMB.dimension)
        assert db.topn(np.zeros(EMB.dimension), 5) == []

    def test_exact_match_ranks_first(self):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks(
            [
                chunk_of("c0", "a red car"),
                chunk_of("c1", "a blue bus"),
                chunk_of("c2", "a red car parked near a tree"),
            ]
        )
        hits = db.topn(embed_text("a red car", EMB), 2)
        assert [c.clip_id for c, _ in hits] == ["c0", "c2"]
        assert hits[0][1] == pytest.approx(1.0)

    def test_ties_break_by_ascending_chunk_id(self):
        db = TextDB(dimension=4)
        q = np.array([1.0, 0.0, 0.0, 0.0])
        v = [1.0, 0.0, 0.0, 0.0]
        db.upsert_chunks(
            [
                raw_chunk("b::m", "b", v),
                raw_chunk("a::m", "a", v),
                raw_chunk("c::m", "c", v),
            ]
        )
        hits = db.topn(q, 3)
        assert [c.chunk_id for c, _ in hits] == ["a::m", "b::m", "c::m"]

    def test_n_larger_than_store_returns_all(self):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        assert len(db.topn(embed_text("car", EMB), 100)) == 1

    @given(
        n_items=st.integers(1, 40),
        seed=st.integers(0, 2**31),
        limit=st.integers(1, 12),
    )
    @settings(max_examples=40)
    def test_matches_pure_python_oracle(self, n_items, seed, limit):
        rng = np.random.default_rng(seed)
        dim = 8
        # quantized coordinates force frequent exact score ties
        vectors = rng.integers(-2, 3, size=(n_items, dim)).astype(np.float64)
        query = rng.integers(-2, 3, size=dim).astype(np.float64)
        db = TextDB(dimension=dim)
        items = []
        for i, vec in enumerate(vectors):
            cid = f"c{i:03d}::m"
            db.upsert_chunks([raw_chunk(cid, f"c{i:03d}", vec)])
            items.append((cid, vec))
        expected = oracle_rank(items, query, limit)
        got = db.topn(query, limit)
        assert [(c.chunk_id, pytest.approx(s)) for c, s in got] == [
            (cid, pytest.approx(s)) for cid, s in expected
        ]


class TestImageDB:
    def test_add_and_search(self):
        db = ImageDB(dimension=EMB.dimension)
        v_car = embed_text("a red car", EMB)
        v_bus = embed_text("a blue bus", EMB)
        db.add_frames(
            [
                FrameRecord("c0_f00", "c0", v_car),
                FrameRecord("c0_f01", "c0", v_car),
                FrameRecord("c1_f00", "c1", v_bus),
            ]
        )
        assert len(db) == 3
        hits = db.topf(embed_text("red car", EMB), 2)
        assert [r.clip_id for r, _ in hits] == ["c0", "c0"]
        assert [r.frame_id for r, _ in hits] == ["c0_f00", "c0_f01"]

    def test_membership(self):
        db = ImageDB(dimension=4)
        db.add_frames([FrameRecord("f0", "c0", np.ones(4))])
        assert "f0" in db
        assert "f1" not in db

    def test_duplicate_frame_id_is_idempotent(self):
        db = ImageDB(dimension=4)
        rec = FrameRecord("f0", "c0", np.ones(4))
        assert db.add_frames([rec, rec]) == 1
        assert db.add_frames([rec]) == 0

    def test_conflicting_frame_vector_rejected(self):
        db = ImageDB(dimension=4)
        db.add_frames([FrameRecord("f0", "c0", np.ones(4))])
        with pytest.raises(DuplicateChunkError):
            db.add_frames([FrameRecord("f0", "c0", np.zeros(4))])

    @given(
        n_items=st.integers(1, 30),
        seed=st.integers(0, 2**31),
        limit=st.integers(1, 10),
    )
    @settings(max_examples=25)
    def test_matches_pure_python_oracle(self, n_items, seed, limit):
        rng = np.random.default_rng(seed)
        dim = 6
        vectors = rng.integers(-2, 3, size=(n_items, dim)).astype(np.float64)
        query = rng.integers(-2, 3, size=dim).astype(np.float64)
        db = ImageDB(dimension=dim)
        items = []
        for i, vec in enumerate(vectors):
            fid = f"f{i:03d}"
            db.add_frames([FrameRecord(fid, f"c{i:03d}", vec)])
            items.append((fid, vec))
        expected = oracle_rank(items, query, limit)
        got = db.topf(query, limit)
        assert [(r.frame_id, pytest.approx(s)) for r, s in got] == [
            (fid, pytest.approx(s)) for fid, s in expected
        ]


class TestPersistence:
    def test_text_round_trip(self, tmp_path):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks(
            [
                chunk_of("c0", "a red car"),
                make_chunk("c1", "objects: bus", "detector", "lightweight", EMB),
            ]
        )
        p = tmp_path / "text.db"
        db.persist(p)
        back = TextDB.restore(p)
        assert len(back) == len(db)
        for c in db.chunks():
            r = back.get(c.chunk_id)
            assert (r.clip_id, r.text, r.source_model_id, r.level) == (
                c.clip_id,
                c.text,
                c.source_model_id,
                c.level,
            )
            assert np.array_equal(r.embedding, c.embedding)

    def test_image_round_trip(self, tmp_path):
        db = ImageDB(dimension=EMB.dimension)
        v = embed_text("a red car", EMB)
        db.add_frames([FrameRecord("f0", "c0", v)])
        p = tmp_path / "image.db"
        db.persist(p)
        back = ImageDB.restore(p)
        assert len(back) == 1
        rec = back.frames()[0]
        assert (rec.frame_id, rec.clip_id) == ("f0", "c0")
        assert np.array_equal(rec.vector, v)

    def test_restored_store_searches_identically(self, tmp_path):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks(
            [chunk_of(f"c{i}", f"a red car number {i}") for i in range(10)]
        )
        p = tmp_path / "text.db"
        db.persist(p)
        back = TextDB.restore(p)
        q = embed_text("red car", EMB)
        assert [(c.chunk_id, s) for c, s in db.topn(q, 5)] == [
            (c.chunk_id, s) for c, s in back.topn(q, 5)
        ]

    def test_empty_store_round_trip(self, tmp_path):
        p = tmp_path / "text.db"
        TextDB(dimension=32).persist(p)
        back = TextDB.restore(p)
        assert len(back) == 0 and back.dimension == 32

    def test_kind_mismatch_rejected(self, tmp_path):
        p = tmp_path / "x.db"
        TextDB(dimension=8).persist(p)
        with pytest.raises(StoreCorruptError):
            ImageDB.restore(p)

    def test_truncated_file_rejected(self, tmp_path):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        p = tmp_path / "text.db"
        db.persist(p)
        data = p.read_bytes()
        p.write_bytes(data[:-7])
        with pytest.raises(StoreCorruptError):
            TextDB.restore(p)

    def test_bit_flip_rejected(self, tmp_path):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        p = tmp_path / "text.db"
        db.persist(p)
        data = bytearray(p.read_bytes())
        data[-3] ^= 0xFF
        p.write_bytes(bytes(data))
        with pytest.raises(StoreCorruptError):
            TextDB.restore(p)

    def test_trailing_garbage_rejected(self, tmp_path):
        db = TextDB(dimension=EMB.dimension)
        db.upsert_chunks([chunk_of("c0", "a red car")])
        p = tmp_path / "text.db"
        db.persist(p)
        p.write_bytes(p.read_bytes() + b"junk")
        with pytest.raises(StoreCorruptError):
            TextDB.restore(p)

    def test_wrong_magic_rejected(self, tmp_path):
        p = tmp_path / "x.db"
        p.write_bytes(b"NOPE" + b"\x00" * 60)
        with pytest.raises(StoreCorruptError):
            TextDB.restore(p)

    def test_header_layout(self, tmp_path):
        p = tmp_path / "x.db"
        TextDB(dimension=8).persist(p)
        raw = p.read_bytes()
        assert raw[:4] == MAGIC == b"LRVS"
        assert int.from_bytes(raw[4:6], "little") == FORMAT_VERSION == 1
        assert raw[6] == KIND_TEXT


class TestContainerPrimitive:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "k.bin"
        payloads = [b'{"a": 1}', b'{"b": [1, 2]}']
        write_container(p, KIND_IMAGE, 4, payloads)
        dim, records = read_container(p, KIND_IMAGE)
        assert dim == 4
        assert records == [{"a": 1}, {"b": [1, 2]}]

    def test_expected_kind_enforced(self, tmp_path):
        p = tmp_path / "k.bin"
        write_container(p, KIND_IMAGE, 4, [b"{}"])
        with pytest.raises(StoreCorruptError):
            read_container(p, KIND_TEXT)
