"""File formats, bundle emission, and report rendering."""

from . import formats
from .bundle import write_scene_bundle
from .formats import DetectionRecord, JointRecord, PoseRecord
from .reports import render_report, save_report

__all__ = [
    "DetectionRecord",
    "JointRecord",
    "PoseRecord",
    "formats",
    "render_report",
    "save_report",
    "write_scene_bundle",
]
