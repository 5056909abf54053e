"""1-D CNN heart-disease classifier built on a small numpy engine."""

__version__ = "0.1.0"
