"""Dense optical flow to per-pixel looming."""
from ._backend import BACKEND
from .io import load_intrinsics, read_flo, read_grid_csv, save_intrinsics, write_flo, write_grid_csv
from .pipeline import (AngularRateGrids, DenseFlow, GridPartials, LoomingMap, PlaneTruth,
                       box_prefilter, estimate_looming, flow_to_angular_rates, load_flo,
                       looming_map, plane_ground_truth, rigid_motion_matrix, spatial_partials,
                       synth_flow)
from .render import render_threat_map, threat_image, threat_zones

__all__ = [
    "BACKEND", "AngularRateGrids", "DenseFlow", "GridPartials", "LoomingMap", "PlaneTruth",
    "box_prefilter", "estimate_looming", "flow_to_angular_rates", "load_flo", "looming_map",
    "plane_ground_truth", "rigid_motion_matrix", "spatial_partials", "synth_flow",
    "load_intrinsics", "read_flo", "read_grid_csv", "save_intrinsics", "write_flo",
    "write_grid_csv", "render_threat_map", "threat_image", "threat_zones",
]
