"""Exceptional rotations of halfspace-indexed random graph processes."""
