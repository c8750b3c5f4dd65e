"""Encoder-agnostic entity alignment with attribute-value uniqueness.

Typical use::

    from attrint import load_kg, build_attr_matrix, ps_combine, grid_search
"""

from .attrsim import NormalizeOptions, build_attr_matrix, build_index, normalize_value, pair_score
from .coverage import HeterogenizeConfig, coverage, heterogenize, neighbor_set, profile
from .encoder import baseline_literal_encoder, load_encoder_matrix, minmax_to_frequency
from .evaluation import RankingReport, evaluate, metrics, metrics_top1, rank
from .interaction import Belief, PsConfig, RcConfig, expectation, grid_search, ps_combine, rc_combine, revise
from .kg import AlignmentSet, KnowledgeGraph, load_alignment, load_kg, load_links, write_kg
from .matrix import SimilarityMatrix

__version__ = "0.1.0"
