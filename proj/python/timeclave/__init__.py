"""Oblivious time-series storage.

Oram is the batched-eviction block store, Engine the interval-ladder
aggregation layer on top of it. summarize() folds raw points into one
summary block; trace_check() replays a saved access trace through the
distinct-path and leaf-uniformity checks.
"""

from ._core import Engine, Oram, summarize, trace_check

__all__ = ["Engine", "Oram", "summarize", "trace_check"]
