"""Filtering, per-sample scoring outcomes, aggregation, and report stability."""

import json

import numpy as np
import pytest

from alas import scoring, synthgen, tensorstore
from alas.scoring import (
    LayerReport,
    RunConfig,
    SampleScore,
    aggregate,
    build_report,
    filter_pair,
    report_json,
    response_similarity,
    score_dataset,
    score_sample,
)
from alas.tensorstore import LatentStack, ResponseRecord, read_tensor, write_tensor


class TestResponseSimilarity:
    def test_identical_embeddings(self):
        rec = ResponseRecord("x", "y", audio_embedding=[0.3, 0.4],
                             text_embedding=[0.3, 0.4])
        assert response_similarity(rec) == pytest.approx(1.0)

    def test_precomputed_wins(self):
        rec = ResponseRecord("x", "y", precomputed_similarity=0.71)
        assert response_similarity(rec) == 0.71

    def test_orthogonal_embeddings(self):
        rec = ResponseRecord("x", "y", audio_embedding=[1.0, 0.0],
                             text_embedding=[0.0, 1.0])
        assert response_similarity(rec) == pytest.approx(0.0)

    def test_zero_norm_embedding(self):
        rec = ResponseRecord("x", "y", audio_embedding=[0.0, 0.0],
                             text_embedding=[1.0, 0.0])
        with pytest.raises(ValueError, match="zero-norm"):
            response_similarity(rec)


class TestFilterPair:
    def test_boundary_kept(self):
        assert filter_pair(ResponseRecord("a", "b", precomputed_similarity=0.70), 0.7)

    def test_just_below_discarded(self):
        assert not filter_pair(ResponseRecord("a", "b", precomputed_similarity=0.699999), 0.7)

    def test_zero_threshold_keeps_nonnegative(self):
        assert filter_pair(ResponseRecord("a", "b", precomputed_similarity=0.0), 0.0)
        assert not filter_pair(ResponseRecord("a", "b", precomputed_similarity=-0.1), 0.0)


class TestRunConfig:
    def test_threshold_range(self):
        with pytest.raises(ValueError, match="threshold"):
            RunConfig(threshold=1.1)

    def test_enums_checked(self):
        with pytest.raises(ValueError, match="granularity"):
            RunConfig(granularity="phoneme")
        with pytest.raises(ValueError, match="pooling"):
            RunConfig(pooling="max")

    def test_empty_layer_selection(self):
        with pytest.raises(ValueError, match="empty"):
            RunConfig(layer_selection=())


class TestSampleScoreInvariant:
    def test_scores_and_skip_are_exclusive(self):
        with pytest.raises(ValueError, match="exactly when"):
            SampleScore("s", ((0, 0.1),), False, 1.0, skipped_reason="infeasible_path")
        with pytest.raises(ValueError, match="exactly when"):
            SampleScore("s", None, False, 1.0)

    def test_unknown_skip_reason(self):
        with pytest.raises(ValueError, match="skip reason"):
            SampleScore("s", None, False, 1.0, skipped_reason="bored")


def _edit_json(path, mutate):
    doc = json.loads(path.read_text())
    mutate(doc)
    path.write_text(json.dumps(doc))


class TestScoreSample:
    def test_low_similarity_filters_out(self, small_synth):
        _edit_json(small_synth / "samples" / "sample0000" / "responses.json",
                   lambda d: d.update(precomputed_similarity=0.2))
        manifest = tensorstore.load_manifest(small_synth)
        score = score_sample(small_synth, manifest.samples[0], manifest,
                             RunConfig(dataset_root=str(small_synth)))
        assert score.filtered_out
        assert score.per_layer is None
        assert score.response_similarity == 0.2

    def test_more_rows_than_frames_skips(self, small_synth):
        sdir = small_synth / "samples" / "sample0000"
        stack = read_tensor(sdir / "audio.alas")
        write_tensor(LatentStack(stack.data[:, :2]), sdir / "audio.alas")
        manifest = tensorstore.load_manifest(small_synth)
        score = score_sample(small_synth, manifest.samples[0], manifest,
                             RunConfig(dataset_root=str(small_synth)))
        assert score.skipped_reason == "infeasible_path"
        assert score.per_layer is None

    def test_broken_tokens_skip(self, small_synth):
        def mutate(d):
            d["word_of_token"] = None
            d["tokens"] = ["qq"] * len(d["tokens"])

        _edit_json(small_synth / "samples" / "sample0000" / "tokens.json", mutate)
        manifest = tensorstore.load_manifest(small_synth)
        score = score_sample(small_synth, manifest.samples[0], manifest,
                             RunConfig(dataset_root=str(small_synth)))
        assert score.skipped_reason == "reconstruction_failure"

    def test_unrelated_asr_words_skip(self, small_synth):
        _edit_json(small_synth / "samples" / "sample0000" / "words.json",
                   lambda d: [w.update(word=f"zzz{i}") for i, w in enumerate(d["words"])])
        manifest = tensorstore.load_manifest(small_synth)
        score = score_sample(small_synth, manifest.samples[0], manifest,
                             RunConfig(dataset_root=str(small_synth)))
        assert score.skipped_reason == "pairing_failure"

    def test_normalized_scale(self, small_synth):
        manifest = tensorstore.load_manifest(small_synth)
        raw = score_sample(small_synth, manifest.samples[0], manifest,
                           RunConfig(dataset_root=str(small_synth)))
        norm = score_sample(small_synth, manifest.samples[0], manifest,
                            RunConfig(dataset_root=str(small_synth), normalize_alas=True))
        n_words = len(json.loads(
            (small_synth / "samples" / "sample0000" / "tokens.json").read_text())["words"])
        for (_, a), (_, b) in zip(raw.per_layer, norm.per_layer):
            assert b == pytest.approx(a / (n_words - 1))

    def test_layer_selection_restricts_output(self, small_synth):
        manifest = tensorstore.load_manifest(small_synth)
        score = score_sample(small_synth, manifest.samples[0], manifest,
                             RunConfig(dataset_root=str(small_synth),
                                       layer_selection=(0, 2)))
        assert [layer for layer, _ in score.per_layer] == [0, 2]


class TestAggregate:
    def _score(self, sid, values, frames=10):
        return SampleScore(sid, tuple(enumerate(values)), False, 1.0, num_frames=frames)

    def test_single_sample(self):
        reports = aggregate([self._score("a", [0.5, 1.5])])
        assert reports[0] == LayerReport(0, 0.5, 0.0, 1)
        assert reports[1] == LayerReport(1, 1.5, 0.0, 1)

    def test_hand_mean_and_population_std(self):
        reports = aggregate([self._score("a", [0.0, 1.0]), self._score("b", [0.0, 3.0])])
        assert reports[1].mean_alas == 2.0
        assert reports[1].std_alas == 1.0
        assert reports[1].n_samples == 2

    def test_permutation_invariant(self, rng):
        scores = [self._score(f"s{i}", rng.uniform(0, 3, size=3).tolist())
                  for i in range(8)]
        forward = aggregate(scores)
        backward = aggregate(scores[::-1])
        assert forward == backward

    def test_skipped_and_filtered_never_contribute(self):
        scores = [
            self._score("a", [1.0]),
            SampleScore("b", None, True, 0.1),
            SampleScore("c", None, False, 1.0, skipped_reason="infeasible_path"),
        ]
        reports = aggregate(scores)
        assert reports[0].n_samples == 1
        assert reports[0].mean_alas == 1.0

    def test_empty_contribution_set(self):
        with pytest.raises(ValueError, match="contributing"):
            aggregate([SampleScore("b", None, True, 0.1)])

    def test_inconsistent_layer_sets(self):
        with pytest.raises(ValueError, match="inconsistent"):
            aggregate([self._score("a", [1.0]),
                       SampleScore("b", ((1, 1.0),), False, 1.0)])

    def test_length_weighted_mean(self):
        scores = [self._score("a", [1.0], frames=1), self._score("b", [3.0], frames=3)]
        unweighted = aggregate(scores)[0].mean_alas
        weighted = aggregate(scores, length_weighted=True)[0].mean_alas
        assert unweighted == 2.0
        assert weighted == pytest.approx((1.0 + 9.0) / 4.0)


class TestPlantedFixtures:
    def test_faint_noise_stays_well_aligned(self, tmp_path):
        cfg = synthgen.SynthConfig(num_samples=5, num_layers=2, hidden_dim=64,
                                   words_per_sample=(10, 10), frames_per_word=(4, 6),
                                   noise_per_layer=(0.01, 0.01, 0.01), seed=37)
        root = synthgen.generate(cfg, tmp_path / "faint")
        config = RunConfig(dataset_root=str(root))
        for r in scoring.aggregate(score_dataset(config)):
            assert r.mean_alas < 0.5

    def test_search_matches_oracle_on_planted_fixtures(self, tmp_path):
        # fixtures small enough to enumerate every legal path
        from alas.masalign import brute_force_mas, mas
        from alas.simkernel import layer_similarities
        from alas.tensorstore import load_manifest, token_map_from_file

        cfg = synthgen.SynthConfig(num_samples=4, num_layers=2, hidden_dim=32,
                                   words_per_sample=(3, 4), frames_per_word=(1, 2),
                                   noise_per_layer=(0.0, 0.1, 0.5), seed=41)
        root = synthgen.generate(cfg, tmp_path / "tiny")
        manifest = load_manifest(root)
        for entry in manifest.samples:
            token_map = token_map_from_file(root / entry.tokens_path)
            audio = read_tensor(root / entry.audio_tensor_path)
            text = read_tensor(root / entry.text_tensor_path)
            for m in layer_similarities(text, audio, token_map):
                fast, slow = mas(m), brute_force_mas(m)
                assert fast.indices.tolist() == slow.indices.tolist()
                assert fast.score == slow.score


class TestReports:
    def test_zero_noise_dataset_scores_zero(self, tmp_path):
        cfg = synthgen.SynthConfig(num_samples=3, num_layers=2, hidden_dim=16,
                                   words_per_sample=(4, 6), frames_per_word=(2, 4),
                                   noise_per_layer=(0.0, 0.0, 0.0), seed=21)
        root = synthgen.generate(cfg, tmp_path / "zero")
        config = RunConfig(dataset_root=str(root))
        scores = score_dataset(config)
        assert all(v == 0.0 for s in scores for _, v in s.per_layer)

    def test_determinism_across_thread_counts(self, small_synth):
        config = RunConfig(dataset_root=str(small_synth))
        manifest = tensorstore.load_manifest(small_synth)
        docs = []
        for threads in (1, 4, 1):
            scores = score_dataset(config, manifest, threads=threads)
            reports = aggregate(scores)
            docs.append(report_json(build_report(config, scores, reports)))
        assert docs[0] == docs[1] == docs[2]

    def test_report_schema(self, small_synth):
        config = RunConfig(dataset_root=str(small_synth))
        scores = score_dataset(config)
        doc = build_report(config, scores, aggregate(scores))
        assert list(doc) == ["config", "layers", "samples", "skipped", "filtered"]
        assert doc["skipped"] == {"infeasible_path": 0, "reconstruction_failure": 0,
                                  "pairing_failure": 0}
        assert doc["filtered"] == 0
        assert [s["sample_id"] for s in doc["samples"]] == sorted(
            s["sample_id"] for s in doc["samples"])
        parsed = json.loads(report_json(doc))
        assert parsed == doc

    def test_filter_monotone_in_threshold(self, small_synth):
        # raising the threshold never grows the kept set
        _edit_json(small_synth / "samples" / "sample0001" / "responses.json",
                   lambda d: d.update(precomputed_similarity=0.75))
        manifest = tensorstore.load_manifest(small_synth)
        kept = []
        for threshold in (0.5, 0.72, 0.9):
            config = RunConfig(dataset_root=str(small_synth), threshold=threshold)
            scores = score_dataset(config, manifest)
            kept.append({s.sample_id for s in scores if not s.filtered_out})
        assert kept[2] <= kept[1] <= kept[0]
