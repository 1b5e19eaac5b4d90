"""Differentially private bootstrap with f-DP accounting."""
