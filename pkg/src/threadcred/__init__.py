"""Thread-level accuracy classification for social-media conversations.

Pipeline: ``ingest`` (tweets to reply trees), ``align`` (label schemes),
``stance`` (disagreement flags), ``features`` (45-feature vectors),
``learn`` (forests and metrics), ``select`` (elimination and transfer).
"""

__version__ = "0.1.0"
