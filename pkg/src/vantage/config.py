"""Project configuration: JSON file plus environment overrides.

Recognized keys map one-to-one onto CLI flags. ``VANTAGE_SEED`` and
``VANTAGE_THREADS`` override the corresponding fields when set.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields

from .errors import ParseError


@dataclass
class ProjectConfig:
    # input paths
    mesh: str | None = None
    images_dir: str | None = None
    sfm: str | None = None
    correspondences: str | None = None
    labels: str | None = None
    # learner hyperparameters
    eps: float = 0.01
    c_v: float = 4.0
    c_g: float = 4.0
    d: float = 0.1
    gamma_v: float | None = None
    gamma_g: float | None = None
    folds: int = 10
    # clustering
    k: int = 9
    # viewpoint grid
    n_theta: int = 64
    n_phi: int = 16
    radius_factor: float = 2.5
    phi_min: float = 0.0
    phi_max: float = math.pi / 4
    render_size: int = 512
    top_k: int = 4
    # reproducibility
    seed: int = 0
    threads: int = 1

    def validate(self):
        for name in ("mesh", "images_dir", "sfm", "correspondences", "labels"):
            path = getattr(self, name)
            if path is not None and not os.path.exists(path):
                raise ParseError(f"configured path for {name!r} does not exist: {path}")
        if self.eps < 0 or self.c_v <= 0 or self.c_g <= 0 or self.d < 0:
            raise ParseError("learner hyperparameters out of range")
        if self.gamma_v is not None and self.gamma_v <= 0:
            raise ParseError("gamma_v must be positive")
        if self.gamma_g is not None and self.gamma_g <= 0:
            raise ParseError("gamma_g must be positive")
        if self.k < 1 or self.folds < 2:
            raise ParseError("k must be >= 1 and folds >= 2")
        if self.n_theta < 1 or self.n_phi < 1 or self.render_size < 8:
            raise ParseError("grid parameters out of range")
        if not 0 <= self.phi_min <= self.phi_max <= math.pi / 2:
            raise ParseError("phi band must satisfy 0 <= min <= max <= pi/2")
        if self.top_k < 1 or self.threads < 1:
            raise ParseError("top_k and threads must be positive")
        return self


def load_config(path=None, overrides=None) -> ProjectConfig:
    """Config from JSON (optional), explicit overrides, then environment."""
    data = {}
    if path is not None:
        try:
            with open(path, "r") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ParseError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"invalid config JSON at line {exc.lineno}: {exc.msg}",
                line=exc.lineno,
            )
    known = {f.name for f in fields(ProjectConfig)}
    unknown = set(data) - known
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    if "VANTAGE_SEED" in os.environ:
        data["seed"] = int(os.environ["VANTAGE_SEED"])
    if "VANTAGE_THREADS" in os.environ:
        data["threads"] = int(os.environ["VANTAGE_THREADS"])
    return ProjectConfig(**data).validate()
