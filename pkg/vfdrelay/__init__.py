"""Virtual full-duplex relaying simulator with symbol-level selective forwarding."""

__version__ = "0.1.0"
