import json

import numpy as np
import pytest
from marshmallow import ValidationError

from duplex_kit.codec import CodecFrame, CodecService, RvqCodec
from duplex_kit.constants import CODEC_FORMAT_VERSION
from duplex_kit.errors import CodebookFitError, CodecDimensionError, CodecRangeError


class TestRvqCodec:
    """Test cases for residual encoding and decoding."""

    def test_frame_has_one_code_per_depth(self, codec):
        """Test encode_frame returns in-range codes for every depth."""
        frame = codec.encode_frame(np.ones(codec.dimension))
        assert len(frame) == codec.depth_count
        assert all(0 <= c < size for c, size in zip(frame.codes, codec.codebook_sizes))

    def test_mse_non_increasing_with_depth(self):
        """Test reconstruction error never grows as depths are added, over 1000 frames."""
        full = RvqCodec.random(depths=16, codebook_size=32, dimension=8, seed=11)
        data = np.random.default_rng(5).standard_normal((1000, 8))
        errors = [full.reconstruction_mse(data, depth) for depth in range(1, 17)]
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
        codes = full.encode_batch(data)
        per_frame = [((data - full.decode_batch(codes, depth)) ** 2).sum(axis=1) for depth in range(1, 17)]
        assert all(np.all(b <= a + 1e-12) for a, b in zip(per_frame, per_frame[1:]))

    def test_exhaustive_never_worse_than_greedy(self):
        """Test the joint search is a lower bound for greedy encoding."""
        small = RvqCodec.random(depths=3, codebook_size=4, dimension=2, seed=2)
        rng = np.random.default_rng(9)
        for _ in range(20):
            x = rng.standard_normal(2)
            greedy = small.decode_frame(small.encode_frame(x))
            joint = small.decode_frame(small.encode_exhaustive(x))
            assert ((x - joint) ** 2).sum() <= ((x - greedy) ** 2).sum() + 1e-12

    def test_batch_matches_single_frames(self, codec):
        """Test batch encoding agrees with frame-by-frame encoding."""
        data = np.random.default_rng(1).standard_normal((10, codec.dimension))
        batch = codec.encode_batch(data)
        for row, codes in zip(data, batch):
            assert codec.encode_frame(row).codes == tuple(codes)

    def test_partial_depth_decode(self, codec):
        """Test decoding at depth 1 uses only the semantic codebook."""
        frame = CodecFrame((1, 2, 3, 4))
        np.testing.assert_allclose(codec.decode_frame(frame, depth=1), codec.codebooks[0].entries[1])

    def test_silence_frame_is_zero_codes(self, codec):
        """Test the zero embedding encodes to the zero codeword at every depth."""
        assert codec.silence_frame.codes == (0,) * codec.depth_count

    def test_dimension_mismatch(self, codec):
        """Test embeddings of the wrong width are rejected."""
        with pytest.raises(CodecDimensionError):
            codec.encode_frame(np.zeros(codec.dimension + 1))

    def test_code_out_of_range(self, codec):
        """Test decoding rejects codes outside a codebook."""
        with pytest.raises(CodecRangeError):
            codec.decode_frame(CodecFrame((0, 0, 99, 0)))
        with pytest.raises(CodecRangeError):
            codec.decode_batch(np.array([[0, -1, 0, 0]]))

    def test_depth_out_of_range(self, codec):
        """Test decoding depth must lie in [1, depths]."""
        with pytest.raises(CodecRangeError):
            codec.decode_frame(codec.silence_frame, depth=0)


class TestCodebookFitting:
    """Test cases for residual k-means."""

    def test_two_clusters(self):
        """Test K=2 on {0, 1, 10, 11} finds the cluster means."""
        fitted = CodecService.fit_codebooks([0.0, 1.0, 10.0, 11.0], depths=1, k=2, iterations=10, seed=0)
        centroids = sorted(fitted.codebooks[0].entries[:, 0].tolist())
        assert centroids == pytest.approx([0.5, 10.5])

    def test_fit_is_deterministic(self):
        """Test the same seed yields identical codebooks."""
        data = np.random.default_rng(4).standard_normal((64, 3))
        a = CodecService.fit_codebooks(data, depths=2, k=4, iterations=5, seed=7)
        b = CodecService.fit_codebooks(data, depths=2, k=4, iterations=5, seed=7)
        for book_a, book_b in zip(a.codebooks, b.codebooks):
            np.testing.assert_array_equal(book_a.entries, book_b.entries)

    def test_training_history_recorded(self):
        """Test every depth records a non-increasing Lloyd MSE history."""
        data = np.random.default_rng(4).standard_normal((128, 4))
        fitted = CodecService.fit_codebooks(data, depths=3, k=8, iterations=6, seed=1)
        assert len(fitted.training_mse) == 3
        for history in fitted.training_mse:
            assert 1 <= len(history) <= 6
            assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_too_few_frames(self):
        """Test fitting needs at least K training frames."""
        with pytest.raises(CodebookFitError):
            CodecService.fit_codebooks(np.zeros((3, 2)), depths=1, k=4, iterations=2, seed=0)

    def test_zero_iterations(self):
        """Test fitting needs at least one iteration."""
        with pytest.raises(CodebookFitError):
            CodecService.fit_codebooks(np.zeros((8, 2)), depths=1, k=2, iterations=0, seed=0)


class TestCodecPersistence:
    """Test cases for codec JSON."""

    def test_save_and_load(self, codec, tmp_path):
        """Test a saved codec reloads with identical tables and encodings."""
        path = str(tmp_path / "codec.json")
        CodecService.save(codec, path)
        loaded = CodecService.load(path)
        assert loaded.codebook_sizes == codec.codebook_sizes
        for a, b in zip(codec.codebooks, loaded.codebooks):
            np.testing.assert_array_equal(a.entries, b.entries)
        data = np.random.default_rng(0).standard_normal((5, codec.dimension))
        np.testing.assert_array_equal(codec.encode_batch(data), loaded.encode_batch(data))

    def test_unknown_version_rejected(self, codec, tmp_path):
        """Test a codec file from another format version fails to load."""
        data = CodecService.to_dict(codec)
        assert data["version"] == CODEC_FORMAT_VERSION
        data["version"] = CODEC_FORMAT_VERSION + 1
        with pytest.raises(ValidationError) as exc:
            CodecService.from_dict(data)
        assert "version" in exc.value.messages

    def test_ragged_table_rejected(self, codec):
        """Test a codebook row of the wrong width fails to load."""
        data = json.loads(json.dumps(CodecService.to_dict(codec)))
        data["codebooks"][1][0] = [0.0]
        with pytest.raises(ValidationError):
            CodecService.from_dict(data)


class TestMockSpeechCoder:
    """Test cases for deterministic speech frames."""

    def test_same_word_same_frame(self, codec):
        """Test a (word, offset) pair always maps to the same codes."""
        other = RvqCodec.random(depths=4, codebook_size=16, dimension=8, seed=3)
        assert codec.speech.frame_for("hello", 0) == other.speech.frame_for("hello", 0)

    def test_offsets_differ(self, codec):
        """Test different offsets inside a word give different embeddings."""
        a = codec.speech.embedding("hello", 0)
        b = codec.speech.embedding("hello", 1)
        assert not np.allclose(a, b)

    def test_batch_lookup_order(self, codec):
        """Test frames_for keeps the caller's key order."""
        keys = [("b", 1), ("a", 0), ("b", 1)]
        frames = codec.speech.frames_for(keys)
        assert frames[0] == frames[2]
        assert frames[1] == codec.speech.frame_for("a", 0)
