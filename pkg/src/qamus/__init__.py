"""qamus: print-dictionary digitization toolkit.

Ingests OCR text and manual transcriptions, normalizes Arabic script
conservatively, flags suspected standard-Arabic grapheme substitutions for
human review, measures character error rates, deduplicates and links
entries, drives a two-pass verification workflow, and exports verified
entries in Wikibase-lexeme-compatible formats.
"""

__version__ = "0.1.0"
