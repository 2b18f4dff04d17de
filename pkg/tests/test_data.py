import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evifuse.data import (
    MODALITIES,
    ModalityFeatures,
    SynthConfig,
    TaggedSequence,
    attach_features,
    generate,
    generate_splits,
    prototypes,
    read_conll,
    read_features,
    write_conll,
    write_features,
)
from evifuse.errors import DataError
from evifuse.tags import TAG_INDEX, TAGS, bio_violations, category_of, repair_bio

SMALL = dict(sequence_count=60, dev_count=10, test_count=10)


def _nearest_category(vectors, protos):
    # Tag id whose prototype is closest; under category granularity B-X and
    # I-X share a prototype, so compare categories.
    d = ((vectors[:, None, :] - protos[None, :, :]) ** 2).sum(-1)
    return [category_of(int(t)) for t in d.argmin(axis=1)]


class TestTags:
    def test_inventory(self):
        assert TAGS == ("O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-MISC", "I-MISC")

    def test_violations_and_repair(self):
        seq = [TAG_INDEX[t] for t in ("I-PER", "I-PER", "O", "B-LOC", "I-ORG")]
        assert bio_violations(seq) == [0, 4]
        fixed = repair_bio(seq)
        assert [TAGS[t] for t in fixed] == ["B-PER", "I-PER", "O", "B-LOC", "B-ORG"]
        assert bio_violations(fixed) == []


class TestSynthetic:
    def test_deterministic(self):
        cfg = SynthConfig(**SMALL, seed=3)
        a, b = generate(cfg), generate(cfg)
        for x, y in zip(a, b):
            assert np.array_equal(x.tokens, y.tokens) and np.array_equal(x.tags, y.tags)
            for m in x.features:
                assert x.features[m].vectors.tobytes() == y.features[m].vectors.tobytes()

    def test_seed_changes_data(self):
        a = generate(SynthConfig(**SMALL, seed=3))
        b = generate(SynthConfig(**SMALL, seed=4))
        assert any(len(x) != len(y) or not np.array_equal(x.tags, y.tags) for x, y in zip(a, b))

    def test_split_sizes_and_lengths(self):
        splits = generate_splits(SynthConfig(**SMALL, min_len=3, max_len=7))
        assert [len(splits[s]) for s in ("train", "dev", "test")] == [60, 10, 10]
        assert all(3 <= len(s) <= 7 for d in splits.values() for s in d)

    def test_entity_density_close_to_target(self):
        data = generate(SynthConfig(sequence_count=500, entity_density=0.3, seed=1))
        frac = np.mean(np.concatenate([s.tags for s in data]) != 0)
        assert abs(frac - 0.3) < 0.03

    @settings(max_examples=25, deadline=None)
    @given(
        density=st.floats(0, 1),
        rho=st.floats(0, 1),
        lo=st.integers(1, 6),
        extra=st.integers(0, 6),
        seed=st.integers(0, 2**31),
        granularity=st.sampled_from(["category", "tag"]),
    )
    def test_every_sequence_well_formed(self, density, rho, lo, extra, seed, granularity):
        cfg = SynthConfig(sequence_count=20, min_len=lo, max_len=lo + extra, entity_density=density,
                          conflict_rate=rho, seed=seed, prototype_granularity=granularity)
        for seq in generate(cfg):
            assert seq.violations() == []
            assert all(len(f) == len(seq) for f in seq.features.values())

    def test_noiseless_features_are_prototypes(self):
        cfg = SynthConfig(**SMALL, sigma_text=0.0, sigma_image=0.0, conflict_rate=0.0)
        protos = prototypes(cfg)
        for seq in generate(cfg):
            assert np.array_equal(seq.features["text"].vectors, protos["text"][seq.tags])
            assert np.array_equal(seq.features["image"].vectors, protos["image"][seq.tags])

    def test_full_conflict_is_anti_informative(self):
        cfg = SynthConfig(**SMALL, sigma_text=0.0, sigma_image=0.0, conflict_rate=1.0)
        protos = prototypes(cfg)
        for seq in generate(cfg):
            image = _nearest_category(seq.features["image"].vectors, protos["image"])
            for k, t in enumerate(seq.tags):
                gold = category_of(int(t))
                if gold is None:
                    assert image[k] is None
                else:
                    assert image[k] is not None and image[k] != gold

    def test_conflict_keeps_spans_coherent(self):
        cfg = SynthConfig(**SMALL, sigma_text=0.0, sigma_image=0.0, conflict_rate=1.0,
                          prototype_granularity="tag")
        protos = prototypes(cfg)
        for seq in generate(cfg):
            d = ((seq.features["image"].vectors[:, None] - protos["image"][None]) ** 2).sum(-1)
            image_tags = d.argmin(axis=1).tolist()
            assert bio_violations(image_tags) == []

    def test_pretrained_channel_optional(self):
        seq = generate(SynthConfig(**SMALL))[0]
        assert set(seq.features) == {"text", "image"}
        seq = generate(SynthConfig(**SMALL, sigma_pretrained=0.5))[0]
        assert set(seq.features) == set(MODALITIES)

    @pytest.mark.parametrize("kwargs", [
        {"entity_density": 1.5},
        {"conflict_rate": -0.1},
        {"sigma_text": -1.0},
        {"min_len": 5, "max_len": 4},
        {"prototype_granularity": "token"},
    ])
    def test_infeasible_config(self, kwargs):
        with pytest.raises(DataError, match="infeasible"):
            SynthConfig(**kwargs)


class TestConll:
    def test_minimal_file(self, tmp_path):
        p = tmp_path / "a.conll"
        p.write_text("EU B-ORG\n\n")
        data = read_conll(p)
        assert len(data) == 1 and len(data[0]) == 1 and TAGS[data[0].tags[0]] == "B-ORG"

    def test_extra_columns_use_last(self, tmp_path):
        p = tmp_path / "a.conll"
        p.write_text("EU NNP B-NP B-ORG\nrejects VBZ B-VP O\n")
        assert [TAGS[t] for t in read_conll(p)[0].tags] == ["B-ORG", "O"]

    def test_repair_stray_inside(self, tmp_path):
        p = tmp_path / "a.conll"
        p.write_text("John I-PER\nsmith I-PER\n")
        assert [TAGS[t] for t in read_conll(p)[0].tags] == ["B-PER", "I-PER"]

    def test_reject_mode(self, tmp_path):
        p = tmp_path / "a.conll"
        p.write_text("x O\nJohn I-PER\n")
        with pytest.raises(DataError, match=":2:"):
            read_conll(p, repair=False)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "a.conll"
        p.write_text("")
        assert read_conll(p) == []

    @pytest.mark.parametrize("body, line", [("EU\n", 1), ("a O\nb B-FOO\n", 2), ("a O\n\n x O\n", 3)])
    def test_malformed_reports_line(self, tmp_path, body, line):
        p = tmp_path / "a.conll"
        p.write_text(body)
        with pytest.raises(DataError, match=f":{line}:"):
            read_conll(p)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        words = ["EU", "rejects", "German", "call", "to", "boycott", "British", "lamb", "."]
        data = []
        for _ in range(40):
            n = int(rng.integers(1, 9))
            tags = repair_bio(rng.integers(0, len(TAGS), n).tolist())
            ws = tuple(words[int(i)] for i in rng.integers(0, len(words), n))
            data.append(TaggedSequence(np.zeros(n), tags, words=ws))
        p = tmp_path / "rt.conll"
        write_conll(p, data)
        back = read_conll(p)
        assert [s.words for s in back] == [s.words for s in data]
        assert all(np.array_equal(a.tags, b.tags) for a, b in zip(back, data))
        write_conll(tmp_path / "rt2.conll", back)
        assert (tmp_path / "rt2.conll").read_bytes() == p.read_bytes()


class TestFeatures:
    def test_minimal_file(self, tmp_path):
        p = tmp_path / "f.evifeat"
        p.write_text("EVIFEAT v1 1 2\nSEQ 1\n0.5 -1.25\n")
        feats = read_features(p)
        assert len(feats) == 1 and feats[0].width == 2 and feats[0].modality == "pretrained"
        assert feats[0].vectors.tolist() == [[0.5, -1.25]]

    def test_width_mismatch_vs_config(self, tmp_path):
        p = tmp_path / "f.evifeat"
        p.write_text("EVIFEAT v1 1 2\nSEQ 1\n0.5 -1.25\n")
        with pytest.raises(DataError, match="declared 2, expected 3"):
            read_features(p, width=3)

    def test_row_width_mismatch(self, tmp_path):
        p = tmp_path / "f.evifeat"
        p.write_text("EVIFEAT v1 1 2\nSEQ 1\n0.5 -1.25 3\n")
        with pytest.raises(DataError, match="declared 2, found 3"):
            read_features(p)

    @pytest.mark.parametrize("value", ["nan", "inf", "-inf"])
    def test_non_finite_rejected(self, tmp_path, value):
        p = tmp_path / "f.evifeat"
        p.write_text(f"EVIFEAT v1 1 2\nSEQ 1\n0.5 {value}\n")
        with pytest.raises(DataError, match="non-finite"):
            read_features(p)

    @pytest.mark.parametrize("text", ["EVIFEAT v2 1 2\n", "FEAT v1 1 2\n", "EVIFEAT v1 x 2\n",
                                      "EVIFEAT v1 2 2\nSEQ 1\n0 0\n"])
    def test_header_problems(self, tmp_path, text):
        p = tmp_path / "f.evifeat"
        p.write_text(text)
        with pytest.raises(DataError):
            read_features(p)

    def test_length_mismatch_vs_dataset(self, tmp_path):
        p = tmp_path / "f.evifeat"
        p.write_text("EVIFEAT v1 1 1\nSEQ 2\n1\n2\n")
        with pytest.raises(DataError, match="length 2, dataset has 3"):
            read_features(p, lengths=[3])

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        feats = [ModalityFeatures("pretrained", rng.normal(size=(n, 4))) for n in (3, 1, 5)]
        p = tmp_path / "f.evifeat"
        write_features(p, feats)
        back = read_features(p, width=4, lengths=[3, 1, 5])
        assert all(a.vectors.tobytes() == b.vectors.tobytes() for a, b in zip(feats, back))

    def test_attach(self):
        data = generate(SynthConfig(sequence_count=3, dev_count=0, test_count=0))
        feats = [ModalityFeatures("pretrained", np.ones((len(s), 2))) for s in data]
        attach_features(data, feats)
        assert all(s.features["pretrained"].width == 2 for s in data)
        with pytest.raises(DataError):
            attach_features(data, feats[:2])

    def test_modality_features_invariants(self):
        with pytest.raises(DataError):
            ModalityFeatures("text", np.zeros((2, 0)))
        with pytest.raises(DataError):
            ModalityFeatures("audio", np.zeros((2, 2)))
        with pytest.raises(DataError):
            ModalityFeatures("text", np.array([[np.nan]]))
