"""Analytic reference manifolds for measuring how far samples stray.

Points are passed column-wise (``n x K``) like every other matrix here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Circles:
    centers: tuple[tuple[float, float], ...] = ((0.0, 0.0), (2.5, 0.0))
    radii: tuple[float, ...] = (1.0, 0.5)

    def distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        d = [np.abs(np.hypot(p[0] - cx, p[1] - cy) - r) for (cx, cy), r in zip(self.centers, self.radii)]
        return np.min(d, axis=0)

    def to_dict(self) -> dict:
        return {"kind": "circles", "centers": [list(c) for c in self.centers], "radii": list(self.radii)}


@dataclass(frozen=True)
class Helix:
    """The curve ``(radius cos t, radius sin t, pitch t)`` for ``t`` in ``[0, 2 pi turns]``."""

    pitch: float = 0.15
    turns: float = 2.0
    radius: float = 1.0

    def _curve(self, t):
        return np.vstack([self.radius * np.cos(t), self.radius * np.sin(t), self.pitch * t])

    def distance(self, points, grid: int = 2000, newton: int = 8, chunk: int = 2048) -> np.ndarray:
        """Exact distance: a dense parameter grid, then Newton steps on ``|p - h(t)|^2``."""
        p = np.asarray(points, dtype=float)
        t_max = 2.0 * np.pi * self.turns
        tg = np.linspace(0.0, t_max, grid)
        cg = self._curve(tg)
        out = np.empty(p.shape[1])
        r, c = self.radius, self.pitch
        for start in range(0, p.shape[1], chunk):
            q = p[:, start:start + chunk]
            d2 = (q * q).sum(0)[:, None] + (cg * cg).sum(0)[None, :] - 2.0 * q.T @ cg
            t = tg[np.argmin(d2, axis=1)]
            for _ in range(newton):
                # f(t) = |q - h(t)|^2 / 2, f' and f'' in closed form
                dx = r * np.cos(t) - q[0]
                dy = r * np.sin(t) - q[1]
                dz = c * t - q[2]
                f1 = -r * np.sin(t) * dx + r * np.cos(t) * dy + c * dz
                f2 = r * r + c * c - r * np.cos(t) * dx - r * np.sin(t) * dy
                step = np.where(f2 > 0, f1 / np.where(f2 > 0, f2, 1.0), 0.0)
                t = np.clip(t - step, 0.0, t_max)
            diff = q - self._curve(t)
            out[start:start + chunk] = np.sqrt(np.minimum((diff * diff).sum(0), d2.min(axis=1).clip(0)))
        return out

    def to_dict(self) -> dict:
        return {"kind": "helix", "pitch": self.pitch, "turns": self.turns, "radius": self.radius}


def from_dict(d: dict):
    kind = d.get("kind")
    if kind == "circles":
        return Circles(tuple(tuple(c) for c in d["centers"]), tuple(d["radii"]))
    if kind == "helix":
        return Helix(d.get("pitch", 0.15), d.get("turns", 2.0), d.get("radius", 1.0))
    raise ValueError(f"unknown manifold kind {kind!r}")


def parse_reference(spec: str):
    """``circles``/``helix`` (default geometry of the synthetic sets) or a JSON file path."""
    if spec == "circles":
        return Circles()
    if spec == "helix":
        return Helix()
    return from_dict(json.loads(Path(spec).read_text()))
