"""Amplitude mutual information of structured quantum states and autoregressive model width.

Submodules are imported on demand (``from vbscale import families``) so that the
torch-backed ``arnn`` module is only loaded when needed.
"""

__version__ = "0.1.0"
