"""Render similarity heatmaps with both paths overlaid.

Writes one SVG and one CSV per layer for a single sample: the white
polyline is the timestamp-derived reference, the red one the searched
maximum-similarity path. With noise, the red trace visibly wanders off the
white one; at zero noise they coincide.
"""

from pathlib import Path

from alas import (
    SynthConfig,
    generate,
    layer_similarities,
    load_manifest,
    mas,
    read_tensor,
    timestamps_to_reference,
)
from alas.heatmap import render_svg, similarity_csv
from alas.tensorstore import load_word_timestamps, token_map_from_file

root = generate(
    SynthConfig(num_samples=1, num_layers=2, hidden_dim=48,
                words_per_sample=(8, 8), frames_per_word=(3, 6),
                noise_per_layer=(0.0, 0.3, 0.7), seed=77),
    Path("demo_output/heatmap_data"),
)
manifest = load_manifest(root)
entry = manifest.samples[0]
token_map = token_map_from_file(root / entry.tokens_path)
audio = read_tensor(root / entry.audio_tensor_path)
text = read_tensor(root / entry.text_tensor_path)
reference = timestamps_to_reference(
    load_word_timestamps(root / entry.words_path),
    audio.seq_len, manifest.frame_duration_ms, token_map)

out_dir = Path("demo_output/heatmaps")
out_dir.mkdir(parents=True, exist_ok=True)
for matrix in layer_similarities(text, audio, token_map):
    path = mas(matrix)
    svg = render_svg(matrix, list(token_map.words), reference.indices, path.indices,
                     title=f"{entry.id} layer {matrix.layer}")
    (out_dir / f"layer{matrix.layer}.svg").write_text(svg)
    (out_dir / f"layer{matrix.layer}.csv").write_text(
        similarity_csv(matrix, list(token_map.words)))
    agree = (path.indices == reference.indices).mean()
    print(f"layer {matrix.layer}: wrote layer{matrix.layer}.svg / .csv  "
          f"(paths agree on {agree:.0%} of frames)")

print(f"\nopen {out_dir}/layer*.svg in a browser to compare the traces")
