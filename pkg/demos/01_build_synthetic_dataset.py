"""Build a synthetic planted-alignment dataset and inspect its layout.

Every capability in this package runs against datasets in one on-disk
format: a manifest plus, per sample, two binary latent tensors and three
JSON sidecars. The synthetic generator emits that exact layout with a
known ground-truth alignment, which is what the demos and tests run on.
"""

from pathlib import Path

from alas import SynthConfig, generate, load_manifest, read_tensor, validate_dataset

out = Path("demo_output/dataset")
config = SynthConfig(
    num_samples=4,
    num_layers=3,
    hidden_dim=48,
    words_per_sample=(6, 9),
    frames_per_word=(3, 6),
    noise_per_layer=(0.0, 0.05, 0.15, 0.35),
    seed=42,
)
root = generate(config, out)
print(f"dataset written to {root}\n")

report = validate_dataset(root)
print(f"validation findings: {len(report.findings)} (empty means scoreable)\n")

manifest = load_manifest(root)
print(f"model={manifest.model_name!r}  layers=0..{manifest.num_layers}  "
      f"hidden_dim={manifest.hidden_dim}  frame={manifest.frame_duration_ms} ms")
for entry in manifest.samples:
    stack = read_tensor(root / entry.audio_tensor_path)
    print(f"  {entry.id}: audio tensor {stack.data.shape}, trimmed={entry.trimmed}")

print("\nfiles of the first sample:")
for path in sorted((root / "samples" / manifest.samples[0].id).iterdir()):
    print(f"  {path.name}  ({path.stat().st_size} bytes)")
