"""
SAR Direction- and Frequency-Dependent Reflectivity Imaging
===========================================================

Simulation of synthetic-aperture radar data, segmentation into
sub-apertures and sub-bands, reduction to a Multiple Measurement Vector
problem and row-sparse recovery with GeLMA, next to a Kirchhoff migration
baseline.
"""

__version__ = "1.0.0"
