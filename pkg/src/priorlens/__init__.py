"""Measure and predict the prior over Boolean functions induced by random neural networks."""

__version__ = "0.1.0"
