"""Synthetic digital-measurement-device datasets: displays, renders,
composites, VQA labels, and evaluation."""

__version__ = "0.1.0"
