import pytest

from alas_extractor import ToySpeechLM, create_checkpoint


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "toy.npz"
    return create_checkpoint(path, seed=5, vocab_size=24, hidden_dim=24, num_layers=3)


@pytest.fixture(scope="session")
def model(checkpoint):
    return ToySpeechLM(checkpoint)


@pytest.fixture
def make_sources(model, tmp_path):
    """Synthesize wavs for n sources drawn from the model vocabulary."""

    def build(n, words_per=5):
        sources = []
        for i in range(n):
            words = [model.vocab[(i * 3 + k) % len(model.vocab)]
                     for k in range(words_per)]
            wav = tmp_path / f"s{i}.wav"
            model.synthesize_speech(words, wav)
            sources.append({"id": f"s{i}", "audio_path": str(wav),
                            "transcript": " ".join(words)})
        return sources

    return build
