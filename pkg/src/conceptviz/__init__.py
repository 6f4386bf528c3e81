"""Concept-driven chart authoring engine.

Authors bind named data concepts (not raw columns) to visual channels; the
engine reshapes tables by example, derives columns from natural-language
formula generation, and assembles Vega-Lite documents.
"""

__version__ = "0.1.0"
