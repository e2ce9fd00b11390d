"""Dual-encoding constraint-based causal discovery for mixed tabular data."""

from ._backend import BACKEND
from .data import ColumnSchema, DataTable, Kind, MissingPolicy, Role, category_order, load_csv, load_schema
from .discovery import BackgroundKnowledge, fci, orient_colliders, orient_fci_rules, skeleton
from .discretize import BinSpec, apply_bins, mdlp_discretize
from .encoding import EncodedMatrix, EncodingStrategy, encode, sibling_groups
from .graph import Mark, Pag, UnifiedGraph, from_json, to_dot, to_json
from .pipeline import PipelineConfig, merge, run_dual_discovery, run_pipeline, weight
from .stats import covariance, fisher_z_test, partial_correlation, pearson

__version__ = "0.1.0"
