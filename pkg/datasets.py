"""
Datasets
The Dataset value type shared by the network, optimizer and target modules,
plus its CSV + JSON sidecar persistence.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from errors import EmptyDataset, NonFiniteEntries, ShapeMismatch
from fileio import read_csv, write_csv, write_json


@dataclass
class Dataset:
    """N input rows in R^d with scalar (N,) or vector (N, k) targets."""
    inputs: np.ndarray
    targets: np.ndarray
    noise_sigma: float = 0.0
    seed: Optional[int] = None
    description: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.shape[0] == 0 or self.inputs.size == 0:
            raise EmptyDataset("a dataset needs at least one sample")
        if self.targets.ndim not in (1, 2) or self.targets.shape[0] != self.inputs.shape[0]:
            raise ShapeMismatch(
                f"{self.inputs.shape[0]} inputs but targets of shape {self.targets.shape}")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise NonFiniteEntries("dataset contains NaN or Inf values")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def scalar_targets(self) -> bool:
        return self.targets.ndim == 1

    @property
    def output_dim(self) -> int:
        return 1 if self.scalar_targets else self.targets.shape[1]

    def subset(self, indices) -> "Dataset":
        return Dataset(self.inputs[indices], self.targets[indices],
                       self.noise_sigma, self.seed, self.description)


def sidecar_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".json"


def save_dataset(data: Dataset, csv_path: str) -> None:
    """Write `x_0..x_{d-1}, y_0..` rows plus a JSON sidecar with the description."""
    targets = data.targets.reshape(len(data), -1)
    header = [f"x_{j}" for j in range(data.input_dim)]
    header += [f"y_{j}" for j in range(targets.shape[1])]
    rows = np.hstack([data.inputs, targets]).tolist()
    write_csv(csv_path, header, rows)
    write_json(sidecar_path(csv_path), {
        "description": data.description,
        "noise_sigma": data.noise_sigma,
        "scalar_targets": data.scalar_targets,
        "seed": data.seed,
    })


def load_dataset(csv_path: str) -> Dataset:
    header, rows = read_csv(csv_path)
    with open(sidecar_path(csv_path), "r", encoding="utf-8") as handle:
        meta = json.load(handle)
    d = sum(1 for name in header if name.startswith("x_"))
    values = np.array([[float(cell) for cell in row] for row in rows], dtype=np.float64)
    targets = values[:, d:]
    if meta.get("scalar_targets"):
        targets = targets[:, 0]
    return Dataset(values[:, :d], targets, meta.get("noise_sigma", 0.0),
                   meta.get("seed"), meta.get("description", {}))
