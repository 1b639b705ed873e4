"""Microshift image codec."""
