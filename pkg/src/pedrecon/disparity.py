"""Disparity rasters with the 16-bit file encoding.

On disk a disparity frame is a 16-bit raster where raw value 0 marks an
invalid pixel and any raw value n > 0 decodes to (n - 1) / 256 pixels of
disparity.  In memory we keep float64 disparities plus a validity mask so
synthetic scenes can carry exact (unquantized) values through the geometry
code; ``quantized()`` reproduces exactly what a save/load round trip would.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

#: Raw-value step per disparity pixel in the 16-bit encoding.
DISPARITY_SCALE = 256.0


@dataclass
class DisparityMap:
    values: np.ndarray  # (H, W) float64 disparity in px, meaningful where valid
    valid: np.ndarray   # (H, W) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2:
            raise InvalidInputError(f"disparity raster must be 2-D, got shape {self.values.shape}")
        if self.valid.shape != self.values.shape:
            raise InvalidInputError(
                f"validity mask shape {self.valid.shape} != raster shape {self.values.shape}"
            )
        if np.any(self.values[self.valid] < 0):
            raise InvalidInputError("negative disparity in valid region")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def full_invalid(cls, width: int, height: int) -> "DisparityMap":
        return cls(np.zeros((height, width)), np.zeros((height, width), dtype=bool))

    @classmethod
    def from_raw(cls, raw: np.ndarray) -> "DisparityMap":
        raw = np.asarray(raw)
        valid = raw > 0
        values = np.where(valid, (raw.astype(np.float64) - 1.0) / DISPARITY_SCALE, 0.0)
        return cls(values, valid)

    def to_raw(self) -> np.ndarray:
        """Encode to the 16-bit raw representation (quantizes valid values)."""
        scaled = np.rint(self.values * DISPARITY_SCALE) + 1.0
        raw = np.clip(scaled, 1.0, 65535.0)
        return np.where(self.valid, raw, 0.0).astype(np.uint16)

    def quantized(self) -> "DisparityMap":
        """Apply exactly the precision loss of an encode/decode round trip."""
        return DisparityMap.from_raw(self.to_raw())
