"""Time-optimal control on the Cartan group with an l-infinity sub-Finsler norm."""

__version__ = "0.1.0"
