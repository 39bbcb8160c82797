"""Spectral detection of structural changes in AR(1) coefficients."""
