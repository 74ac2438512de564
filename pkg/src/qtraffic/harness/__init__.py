"""Experiment runner, exact oracle, output writers and the command line."""
