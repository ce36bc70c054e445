"""Planning toolkit for session-level cooperation in cognitive radio networks."""
__version__ = "0.1.0"
