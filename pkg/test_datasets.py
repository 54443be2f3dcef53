"""Tests for the Dataset value type and its CSV persistence."""

import json

import numpy as np
import pytest

from datasets import Dataset, load_dataset, save_dataset, sidecar_path
from errors import EmptyDataset, NonFiniteEntries, ShapeMismatch


class TestDataset:

    def test_scalar_properties(self):
        data = Dataset(np.ones((4, 3)), np.arange(4.0))
        assert len(data) == 4
        assert data.input_dim == 3
        assert data.scalar_targets
        assert data.output_dim == 1

    def test_vector_properties(self):
        data = Dataset(np.ones((4, 3)), np.ones((4, 2)))
        assert not data.scalar_targets
        assert data.output_dim == 2

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            Dataset(np.zeros((0, 3)), np.zeros(0))

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            Dataset(np.ones((3, 2)), np.ones(4))

    def test_non_finite(self):
        with pytest.raises(NonFiniteEntries):
            Dataset(np.ones((2, 2)), np.array([1.0, np.nan]))
        with pytest.raises(NonFiniteEntries):
            Dataset(np.array([[np.inf, 0.0]]), np.array([1.0]))

    def test_negative_noise(self):
        with pytest.raises(ValueError):
            Dataset(np.ones((2, 2)), np.ones(2), noise_sigma=-0.5)

    def test_subset_keeps_metadata(self):
        data = Dataset(np.arange(10.0).reshape(5, 2), np.arange(5.0), 0.3, 7, {"kind": "multiindex"})
        part = data.subset([1, 3])
        np.testing.assert_array_equal(part.inputs, [[2.0, 3.0], [6.0, 7.0]])
        np.testing.assert_array_equal(part.targets, [1.0, 3.0])
        assert part.seed == 7
        assert part.noise_sigma == 0.3
        assert part.description == {"kind": "multiindex"}


class TestPersistence:

    @pytest.mark.parametrize("vector", [False, True])
    def test_round_trip_is_exact(self, tmp_path, rng, vector):
        targets = rng.standard_normal((6, 3)) if vector else rng.standard_normal(6)
        data = Dataset(rng.uniform(-0.5, 0.5, size=(6, 4)), targets, 0.25, 11, {"link": "relu", "rank": 2})
        path = str(tmp_path / "train.csv")
        save_dataset(data, path)
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.inputs, data.inputs)
        np.testing.assert_array_equal(loaded.targets, data.targets)
        assert loaded.scalar_targets == data.scalar_targets
        assert loaded.seed == 11
        assert loaded.noise_sigma == 0.25
        assert loaded.description == {"link": "relu", "rank": 2}

    def test_layout(self, tmp_path):
        path = str(tmp_path / "train.csv")
        save_dataset(Dataset(np.array([[1.0, 2.0]]), np.array([0.5]), seed=3), path)
        with open(path, encoding="utf-8") as handle:
            assert handle.read() == "x_0,x_1,y_0\n1.0,2.0,0.5\n"
        assert sidecar_path(path) == str(tmp_path / "train.json")
        with open(sidecar_path(path), encoding="utf-8") as handle:
            meta = json.load(handle)
        assert meta == {"description": {}, "noise_sigma": 0.0, "scalar_targets": True, "seed": 3}
