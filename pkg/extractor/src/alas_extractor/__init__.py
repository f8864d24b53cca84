"""Exports layer-wise speech-LLM latents in the scoring package's dataset layout."""

from .adapter import CONTENT_TAG, ModalityCapture, SpeechLMAdapter
from .extract import (
    ExtractionError,
    ExtractionJob,
    SampleSkipped,
    SourceItem,
    extract_dataset,
    extract_sample,
    load_adapter,
    load_job,
)
from .toy_model import ToySpeechLM, create_checkpoint

__version__ = "0.1.0"
