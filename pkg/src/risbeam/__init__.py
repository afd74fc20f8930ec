"""Adaptive blind RIS beamforming: Bayesian pilot feedback, SSP states, tabular Q-learning."""
