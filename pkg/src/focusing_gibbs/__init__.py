"""Desk-scale numerics for focusing Gibbs measures with a mass cutoff on T^d."""

__version__ = "0.1.0"
