"""Tensor container round trips, error taxonomy, and dataset validation."""

import json
import struct
from pathlib import Path

import numpy as np
import pytest

from alas import tensorstore as ts
from alas.tensorstore import (
    BadDimsError,
    BadMagicError,
    BadRankError,
    InfValueError,
    LatentStack,
    ManifestError,
    NaNValueError,
    ResponseRecord,
    TrailingBytesError,
    TruncatedFileError,
    UnsupportedVersionError,
    read_tensor,
    validate_dataset,
    write_tensor,
)


def _write(tmp_path, arr, name="t.alas"):
    path = tmp_path / name
    write_tensor(LatentStack(np.asarray(arr, dtype=np.float32)), path)
    return path


class TestContainer:
    def test_smallest_tensor_is_40_bytes(self, tmp_path):
        path = _write(tmp_path, np.zeros((1, 1, 1)))
        # magic + version + ndim + 3 dims + 1 float
        assert path.stat().st_size == 4 + 4 + 4 + 24 + 4 == 40

    def test_round_trip_bit_exact(self, tmp_path, rng):
        arr = rng.standard_normal((3, 5, 8)).astype(np.float32)
        path = _write(tmp_path, arr)
        back = read_tensor(path)
        assert back.data.shape == (3, 5, 8)
        assert back.data.tobytes() == arr.tobytes()

    def test_full_scale_stack_header(self, tmp_path):
        # 32 transformer layers plus the projection slice, 4096-dim latents
        arr = np.zeros((33, 120, 4096), dtype=np.float32)
        path = _write(tmp_path, arr)
        blob = path.open("rb").read(36)
        assert blob[:4] == b"ALAS"
        version, ndim = struct.unpack_from("<II", blob, 4)
        assert (version, ndim) == (1, 3)
        assert struct.unpack_from("<QQQ", blob, 12) == (33, 120, 4096)
        assert read_tensor(path).data.shape == (33, 120, 4096)

    def test_same_bytes_regardless_of_input_order(self, tmp_path, rng):
        arr = rng.standard_normal((2, 3, 4)).astype(np.float32)
        a = _write(tmp_path, arr, "a.alas")
        b = _write(tmp_path, np.asfortranarray(arr), "b.alas")
        assert a.read_bytes() == b.read_bytes()


def _valid_blob():
    arr = np.arange(8, dtype="<f4").reshape(2, 2, 2)
    return (b"ALAS" + struct.pack("<II", 1, 3) + struct.pack("<QQQ", 2, 2, 2)
            + arr.tobytes())


class TestReadErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.alas"
        path.write_bytes(b"XLAS" + _valid_blob()[4:])
        with pytest.raises(BadMagicError):
            read_tensor(path)

    def test_bad_version(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[4:8] = struct.pack("<I", 2)
        path = tmp_path / "x.alas"
        path.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedVersionError):
            read_tensor(path)

    def test_bad_rank(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[8:12] = struct.pack("<I", 2)
        path = tmp_path / "x.alas"
        path.write_bytes(bytes(blob))
        with pytest.raises(BadRankError):
            read_tensor(path)

    def test_zero_dim(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[12:20] = struct.pack("<Q", 0)
        path = tmp_path / "x.alas"
        path.write_bytes(bytes(blob))
        with pytest.raises(BadDimsError):
            read_tensor(path)

    def test_truncated_payload(self, tmp_path):
        # declares 2x2x2 = 8 floats but carries only 7
        path = tmp_path / "x.alas"
        path.write_bytes(_valid_blob()[:-4])
        with pytest.raises(TruncatedFileError):
            read_tensor(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "x.alas"
        path.write_bytes(_valid_blob()[:10])
        with pytest.raises(TruncatedFileError):
            read_tensor(path)

    def test_huge_dims_do_not_allocate(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[12:20] = struct.pack("<Q", 2**60)
        path = tmp_path / "x.alas"
        path.write_bytes(bytes(blob))
        with pytest.raises(TruncatedFileError):
            read_tensor(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "x.alas"
        path.write_bytes(_valid_blob() + b"\x00\x00")
        with pytest.raises(TrailingBytesError):
            read_tensor(path)

    def test_nan_payload(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[36:40] = struct.pack("<f", float("nan"))
        path = tmp_path / "x.alas"
        path.write_bytes(bytes(blob))
        with pytest.raises(NaNValueError):
            read_tensor(path)

    def test_inf_payload(self, tmp_path):
        blob = bytearray(_valid_blob())
        blob[36:40] = struct.pack("<f", float("inf"))
        path = tmp_path / "x.alas"
        path.write_bytes(bytes(blob))
        with pytest.raises(InfValueError):
            read_tensor(path)

    def test_round_trip_after_errors_still_fine(self, tmp_path):
        path = tmp_path / "ok.alas"
        path.write_bytes(_valid_blob())
        stack = read_tensor(path)
        assert stack.data.ravel().tolist() == list(range(8))


class TestLatentStack:
    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError, match="rank 3"):
            LatentStack(np.zeros((2, 2)))

    def test_rejects_empty_dim(self):
        with pytest.raises(ValueError, match=">= 1"):
            LatentStack(np.zeros((2, 0, 2)))

    def test_rejects_non_finite(self):
        arr = np.zeros((1, 1, 2))
        arr[0, 0, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            LatentStack(arr)

    def test_properties(self):
        stack = LatentStack(np.zeros((5, 7, 3)))
        assert (stack.num_layers_plus_one, stack.seq_len, stack.hidden_dim) == (5, 7, 3)


class TestResponseRecord:
    def test_needs_some_similarity_source(self):
        with pytest.raises(ValueError, match="needs"):
            ResponseRecord("a", "b")

    def test_embedding_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths"):
            ResponseRecord("a", "b", audio_embedding=[1.0, 0.0], text_embedding=[1.0])

    def test_precomputed_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            ResponseRecord("a", "b", precomputed_similarity=1.5)


def _edit_json(path, mutate):
    doc = json.loads(Path(path).read_text())
    mutate(doc)
    Path(path).write_text(json.dumps(doc))


class TestValidateDataset:
    def test_synth_output_is_clean(self, small_synth):
        assert validate_dataset(small_synth).ok

    def test_missing_manifest_is_fatal(self, tmp_path):
        with pytest.raises(ManifestError):
            validate_dataset(tmp_path)

    def test_hidden_dim_mismatch(self, small_synth):
        sdir = small_synth / "samples" / "sample0000"
        stack = read_tensor(sdir / "text.alas")
        write_tensor(LatentStack(stack.data[:, :, :8]), sdir / "text.alas")
        assert "hidden_dim_mismatch" in validate_dataset(small_synth).codes()

    def test_layer_count_mismatch(self, small_synth):
        sdir = small_synth / "samples" / "sample0000"
        stack = read_tensor(sdir / "audio.alas")
        write_tensor(LatentStack(stack.data[:-1]), sdir / "audio.alas")
        assert "layer_count_mismatch" in validate_dataset(small_synth).codes()

    def test_not_trimmed(self, small_synth):
        _edit_json(small_synth / "manifest.json",
                   lambda d: d["samples"][0].update(trimmed=False))
        assert "not_trimmed" in validate_dataset(small_synth).codes()

    def test_missing_file(self, small_synth):
        (small_synth / "samples" / "sample0001" / "words.json").unlink()
        assert "missing_file" in validate_dataset(small_synth).codes()

    def test_corrupt_tensor_magic(self, small_synth):
        path = small_synth / "samples" / "sample0000" / "audio.alas"
        blob = bytearray(path.read_bytes())
        blob[0] = ord("X")
        path.write_bytes(bytes(blob))
        assert "tensor_bad_magic" in validate_dataset(small_synth).codes()

    def test_broken_token_grouping(self, small_synth):
        path = small_synth / "samples" / "sample0000" / "tokens.json"

        def mutate(d):
            d["word_of_token"] = None
            d["tokens"] = ["zz"] * len(d["tokens"])

        _edit_json(path, mutate)
        assert "token_word_mismatch" in validate_dataset(small_synth).codes()

    def test_token_count_mismatch(self, small_synth):
        sdir = small_synth / "samples" / "sample0000"
        stack = read_tensor(sdir / "text.alas")
        write_tensor(LatentStack(np.concatenate([stack.data, stack.data[:, :1]], axis=1)),
                     sdir / "text.alas")
        assert "token_count_mismatch" in validate_dataset(small_synth).codes()

    def test_bad_timestamps(self, small_synth):
        path = small_synth / "samples" / "sample0002" / "words.json"
        _edit_json(path, lambda d: d["words"][0].update(end=-1.0))
        assert "bad_timestamps" in validate_dataset(small_synth).codes()

    def test_bad_response_record(self, small_synth):
        path = small_synth / "samples" / "sample0000" / "responses.json"
        _edit_json(path, lambda d: d.update(precomputed_similarity=None))
        assert "bad_response_record" in validate_dataset(small_synth).codes()

    def test_invalid_manifest_field(self, small_synth):
        _edit_json(small_synth / "manifest.json",
                   lambda d: d.update(frame_duration_ms=-20.0))
        assert "invalid_manifest_field" in validate_dataset(small_synth).codes()

    def test_duplicate_and_invalid_ids(self, small_synth):
        def mutate(d):
            d["samples"][1]["id"] = d["samples"][0]["id"]
            d["samples"][2]["id"] = "Bad Id!"

        _edit_json(small_synth / "manifest.json", mutate)
        codes = validate_dataset(small_synth).codes()
        assert "duplicate_sample_id" in codes
        assert "invalid_sample_id" in codes

    def test_findings_carry_sample_ids(self, small_synth):
        (small_synth / "samples" / "sample0001" / "tokens.json").unlink()
        report = validate_dataset(small_synth)
        assert any(f.sample_id == "sample0001" for f in report.findings)
