"""Exact and Monte Carlo variance analysis of REINFORCE policy gradients."""

__version__ = "0.1.0"
