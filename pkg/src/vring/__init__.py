"""Steady thin-core vortex rings: construction, diagnostics, dynamics."""
