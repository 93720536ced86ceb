"""Core package for sodlab."""
