"""Feedback-free downlink interference estimation on Poisson cellular networks."""

__version__ = "0.1.0"
