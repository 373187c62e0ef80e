"""Hypertoric arrangements, their potentials and hyperKaehler moment-map fibres."""

__version__ = "0.1.0"
