"""Scenario harness: configuration, runs, sweeps and snapshots."""
