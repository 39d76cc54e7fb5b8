"""Semantic classes and masks shared by the mapping and evaluation code."""

from __future__ import annotations

from enum import IntEnum

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError


class SemanticClass(IntEnum):
    ROAD = 0
    SIDEWALK = 1
    BUILDING = 2
    WALL = 3
    FENCE = 4
    POLE = 5
    SIGN = 6
    VEGETATION = 7
    STATIC = 8
    PERSON = 9
    RIDER = 10
    CAR = 11
    BIKE = 12

    @property
    def is_dynamic(self) -> bool:
        return self in DYNAMIC_CLASSES


#: Independently moving object classes, excluded from static scene maps.
DYNAMIC_CLASSES = frozenset(
    {SemanticClass.PERSON, SemanticClass.RIDER, SemanticClass.CAR, SemanticClass.BIKE}
)

CLASS_COUNT = len(SemanticClass)

_DYNAMIC_LOOKUP = np.zeros(CLASS_COUNT, dtype=bool)
for _cls in DYNAMIC_CLASSES:
    _DYNAMIC_LOOKUP[int(_cls)] = True


def dynamic_lookup() -> np.ndarray:
    """Boolean table indexed by class id; True for dynamic classes."""
    return _DYNAMIC_LOOKUP.copy()


def validate_class_ids(class_ids: np.ndarray) -> None:
    class_ids = np.asarray(class_ids)
    if class_ids.size and (class_ids.min() < 0 or class_ids.max() >= CLASS_COUNT):
        bad = int(class_ids.max() if class_ids.max() >= CLASS_COUNT else class_ids.min())
        raise InvalidInputError(f"unknown semantic class id {bad}")


def human_mask(class_ids: np.ndarray, include_adjacent_bikes: bool = False) -> np.ndarray:
    """Binary mask of person/rider pixels in a class-id raster.

    With ``include_adjacent_bikes`` enabled, bike pixels whose connected
    component touches a person or rider region count as human too (a mounted
    bike is part of its rider's silhouette).
    """
    class_ids = np.asarray(class_ids)
    validate_class_ids(class_ids)
    mask = (class_ids == SemanticClass.PERSON) | (class_ids == SemanticClass.RIDER)
    if not include_adjacent_bikes:
        return mask
    bikes = class_ids == SemanticClass.BIKE
    if not bikes.any():
        return mask
    structure = np.ones((3, 3), dtype=bool)
    labels, count = ndimage.label(bikes, structure=structure)
    touching = ndimage.binary_dilation(mask, structure=structure) & bikes
    keep = np.unique(labels[touching])
    keep = keep[keep > 0]
    if keep.size:
        mask = mask | np.isin(labels, keep)
    return mask
