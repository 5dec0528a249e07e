"""Feature-extraction adapter producing trailercut feature bundles."""

from .config import ExtractionConfig, ExtractionError
from .encoders import embed_keywords
from .extract import extract
from .testmedia import make_test_clip

__version__ = "0.1.0"
