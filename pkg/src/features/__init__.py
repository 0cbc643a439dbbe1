"""Waveform I/O, log-mel analysis and multi-layer frame features."""
