"""Boundary control of moving sets: travelling-wave effort, front evolution and eradication."""
__version__ = "0.1.0"
