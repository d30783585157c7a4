"""Free-kick ball-on-goal position (BoGP) prediction pipeline."""

__version__ = "0.1.0"
