"""Desk-scale simulator for inaudible voice-command injection and its defenses."""

__version__ = "0.1.0"
