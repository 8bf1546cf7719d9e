"""Engel identities in free Lie superalgebras: bases, relation matrices, rank certificates and nilpotent quotients."""

__version__ = "0.1.0"
