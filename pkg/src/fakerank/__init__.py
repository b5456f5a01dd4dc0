"""fakerank: fakeness-score triage for image stories shared in groups.

Pipeline: ingest share records, deduplicate images by perceptual hash,
extract the 181-slot feature representation, rank features by
information gain, train a boosted-tree fakeness scorer, evaluate ranking
strategies against the popularity baseline, and serve ranked stories to
the monitor dashboard.
"""

__version__ = "0.1.0"
