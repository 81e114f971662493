"""Split-search kernel selection: compiled extension when built, numpy otherwise."""

try:
    from ._split_cy import find_best_split

    BACKEND = "cython"
except ImportError:  # extension not compiled; numpy fallback is exact-equivalent
    from ._split_py import find_best_split

    BACKEND = "python"

from ._split_py import find_best_split as find_best_split_py

__all__ = ["find_best_split", "find_best_split_py", "BACKEND"]
