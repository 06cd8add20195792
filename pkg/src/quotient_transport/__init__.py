"""Hessian-quotient transportation equation toolkit."""
from .symfun import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
