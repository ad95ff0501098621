"""Tracking of annotated curvilinear structures across grayscale image
sequences by per-branch greedy graph search and DTW branch matching."""

from ._kernels import backend as kernel_backend
from .core import DaisyParams, TrackerConfig, VesselAnnotation, arclength, resample_polyline
from .daisy import DaisyExtractor, descriptor
from .dtw import DtwResult, dtw
from .gaps import ConnectionCostMap, bridge_gaps, connection_cost
from .graph import (CandidatePath, CenterlineGraph, build_graph, candidate_endpoints,
                    detect_junctions, enumerate_paths, split_segments)
from .matching import cost_matrix, select_branch
from .metrics import MatchCounts, MetricTriple, aggregate, match_counts, metrics
from .register import DeformationField, map_annotation, register, tracking_range
from .ridge import RidgeResponse, extract_centerline, vesselness
from .synth import SynthParams, deform_tree, gen_tree, render_sequence
from .tracker import (BranchResult, TrackingReport, fuse_branches, track_branch,
                      track_sequence)

__version__ = "0.1.0"

__all__ = [
    "DaisyParams", "TrackerConfig", "VesselAnnotation", "arclength", "resample_polyline",
    "DaisyExtractor", "descriptor", "DtwResult", "dtw",
    "ConnectionCostMap", "bridge_gaps", "connection_cost",
    "CandidatePath", "CenterlineGraph", "build_graph", "candidate_endpoints",
    "detect_junctions", "enumerate_paths", "split_segments",
    "cost_matrix", "select_branch",
    "MatchCounts", "MetricTriple", "aggregate", "match_counts", "metrics",
    "DeformationField", "map_annotation", "register", "tracking_range",
    "RidgeResponse", "extract_centerline", "vesselness",
    "SynthParams", "deform_tree", "gen_tree", "render_sequence",
    "BranchResult", "TrackingReport", "fuse_branches", "track_branch", "track_sequence",
    "kernel_backend",
]
