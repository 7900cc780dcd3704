"""spoofloc - locate manipulated regions inside audio utterances by frame tagging."""

__version__ = "0.1.0"
