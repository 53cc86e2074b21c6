"""Scenario config, Monte Carlo engine and command line."""
