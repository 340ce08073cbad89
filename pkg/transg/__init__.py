"""
transg - skeleton graph transformer re-identification with graph prototype
contrastive learning and structure/trajectory prompted reconstruction.
"""

__version__ = "0.1.0"
