"""Cross-lingual morphological inflection ("x-inflection") for low-resource dependency parsing."""

__version__ = "0.1.0"
