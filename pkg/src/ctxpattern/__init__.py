"""Contextual pattern mining and counting over byte texts.

Mining reports every length-m substring that occurs with at least tau
distinct (left, right) flank pairs; counting answers, for a query pattern,
how many distinct flank pairs it has.
"""

from .cpc import (BoundExceededError, CpcIndex, build_index, build_optimized_index,
                  build_simple_index, load_index, save_index)
from .cpm import MinedPattern, format_patterns, mine_im
from .em import EmConfig, IoStats, external_sort, mine_em
from .lz77 import build_modified_string, factorize
from .oracle import context_oracle, count_oracle, cpm_oracle
from .rangecount import RangeCounter
from .suffix import build_isa, build_lcp, build_sa, lce
from .text import Text, load_text

__version__ = "0.1.0"

__all__ = [
    "BoundExceededError", "CpcIndex", "EmConfig", "IoStats", "MinedPattern", "RangeCounter", "Text",
    "build_index", "build_isa", "build_lcp", "build_modified_string", "build_optimized_index",
    "build_sa", "build_simple_index", "context_oracle", "count_oracle", "cpm_oracle",
    "external_sort", "factorize", "format_patterns", "lce", "load_index", "load_text", "mine_em",
    "mine_im", "save_index",
]
