"""Entity resolution for noisy classified-ad corpora.

Stages: field extraction -> proxy-labeled pair sampling -> match classifier
-> rare-key blocking -> link-graph resolution -> cluster featurization and
rule mining. See the CLI (``adlink pipeline``) for the end-to-end run.
"""

__version__ = "0.1.0"
