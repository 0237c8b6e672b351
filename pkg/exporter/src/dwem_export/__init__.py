"""Audio -> DWEM1 emission exporter for the dysarc decoder."""

from .encoders import DEFAULT_MODEL, PINNED_HF_MODEL, load_encoder, shipped_lexicon_labels
from .exporter import export_file
from .writer import write_emission_file, write_or_verify_lexicon

__version__ = "0.1.0"
