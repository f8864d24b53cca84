"""Walk one sample through the scoring pipeline, step by step.

Shows the pieces the per-sample score is made of: the token-to-word map,
the timestamp-derived reference path, the per-layer cosine similarity
matrix, the searched maximum-similarity path, and the resulting per-layer
deviation score.
"""

from pathlib import Path

from alas import (
    SynthConfig,
    brute_force_mas,
    generate,
    layer_similarities,
    load_manifest,
    mas,
    path_distance,
    read_tensor,
    timestamps_to_reference,
)
from alas.tensorstore import load_word_timestamps, token_map_from_file

root = generate(
    SynthConfig(num_samples=1, num_layers=2, hidden_dim=32,
                words_per_sample=(5, 5), frames_per_word=(2, 4),
                noise_per_layer=(0.0, 0.2, 0.6), seed=3),
    Path("demo_output/walkthrough"),
)
manifest = load_manifest(root)
entry = manifest.samples[0]

token_map = token_map_from_file(root / entry.tokens_path)
audio = read_tensor(root / entry.audio_tensor_path)
text = read_tensor(root / entry.text_tensor_path)
print(f"words: {list(token_map.words)}")
print(f"audio frames: {audio.seq_len}, text tokens: {text.seq_len}\n")

timestamps = load_word_timestamps(root / entry.words_path)
reference = timestamps_to_reference(
    timestamps, audio.seq_len, manifest.frame_duration_ms, token_map)
print(f"reference path (word index per frame): {reference.indices.tolist()}\n")

for matrix in layer_similarities(text, audio, token_map):
    path = mas(matrix)
    oracle = brute_force_mas(matrix)
    assert path.indices.tolist() == oracle.indices.tolist()
    score = path_distance(path, reference)
    print(f"layer {matrix.layer}: searched path {path.indices.tolist()}")
    print(f"          summed similarity {path.score:.3f}, "
          f"deviation from reference {score:.4f} index units")
