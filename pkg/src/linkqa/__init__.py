"""linkqa: mine entity relations from a hyperlinked corpus and amplify them
into a cross-document QA pretraining dataset.

Pipeline stages: ingest -> graph -> discover -> synthesize -> validate -> stats,
plus a pass@k evaluation helper for judging downstream recall. Each stage is
importable on its own and exposed as a CLI subcommand (see ``linkqa.cli``).
"""

__version__ = "0.1.0"
