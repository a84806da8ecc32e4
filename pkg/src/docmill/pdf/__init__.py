"""Pure-Python extraction backend for text-based PDFs."""

from docmill.pdf.extract import extract_raw

__all__ = ["extract_raw"]
