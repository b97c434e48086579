"""Command handlers for run, dmt and theory."""
