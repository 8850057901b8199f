"""Normal surfaces, branched-surface guts, abelian covers and RFRS towers."""

__version__ = "0.1.0"
