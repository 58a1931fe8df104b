"""
Services Module
===============

Numerical pipeline: geometry, scene, waveform, simulation, segmentation,
forward models, solvers, analysis and the experiment runner.
"""
