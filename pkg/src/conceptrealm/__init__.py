"""ConceptRealm: LDA concepts over issue-tracker data and the analytics built on them."""

__version__ = "0.1.0"
