import struct

import numpy as np
import numpy.testing as npt
import pytest

from exsplinet import dataio
from exsplinet.errors import DataError


class TestDataset:
    def test_empty_rejected(self):
        with pytest.raises(DataError):
            dataio.Dataset(inputs=np.zeros((0, 2)), targets=np.zeros((0, 1)))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            dataio.Dataset(inputs=np.zeros((3, 2)), targets=np.zeros((2, 1)))

    def test_default_feature_names(self):
        ds = dataio.Dataset(inputs=np.zeros((2, 3)), targets=np.zeros(2))
        assert ds.feature_names == ["x1", "x2", "x3"]


class TestLoadCsv:
    def write(self, tmp_path, text):
        path = tmp_path / "data.csv"
        path.write_text(text)
        return path

    def test_regression_with_header(self, tmp_path):
        path = self.write(tmp_path, "a,b,y\n0.1,0.2,1.5\n0.3,0.4,2.5\n")
        ds = dataio.load_csv(path, dataio.CSVSchema(n_features=2))
        assert ds.K == 2 and ds.D == 2 and ds.O == 1
        npt.assert_allclose(ds.targets[:, 0], [1.5, 2.5])
        assert ds.feature_names == ["a", "b"]

    def test_labels_mapped_in_order(self, tmp_path):
        path = self.write(tmp_path, "0.1,0.2,setosa\n0.3,0.4,virginica\n0.5,0.6,setosa\n")
        ds = dataio.load_csv(
            path, dataio.CSVSchema(n_features=2, label_column=True)
        )
        npt.assert_array_equal(ds.labels, [0, 1, 0])
        npt.assert_allclose(ds.targets, [[1, 0], [0, 1], [1, 0]])

    def test_empty_file(self, tmp_path):
        path = self.write(tmp_path, "")
        with pytest.raises(DataError):
            dataio.load_csv(path, dataio.CSVSchema(n_features=2))

    def test_header_only(self, tmp_path):
        path = self.write(tmp_path, "a,b,y\n")
        with pytest.raises(DataError, match="no data rows"):
            dataio.load_csv(path, dataio.CSVSchema(n_features=2))

    def test_malformed_row_reports_line(self, tmp_path):
        path = self.write(tmp_path, "0.1,0.2,1.0\n0.3,oops,2.0\n")
        with pytest.raises(DataError, match=":2"):
            dataio.load_csv(path, dataio.CSVSchema(n_features=2))

    def test_column_count_mismatch(self, tmp_path):
        path = self.write(tmp_path, "0.1,0.2,1.0\n0.3,0.4\n")
        with pytest.raises(DataError, match=":2"):
            dataio.load_csv(path, dataio.CSVSchema(n_features=2))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            dataio.load_csv(tmp_path / "nope.csv", dataio.CSVSchema(n_features=1))


class TestNormalize:
    def test_midpoint_maps_to_half(self):
        ds = dataio.Dataset(
            inputs=np.array([[2.0], [4.0], [3.0]]), targets=np.zeros(3)
        )
        nd, rec = dataio.normalize_minmax(ds)
        npt.assert_allclose(nd.inputs[:, 0], [0.0, 1.0, 0.5])

    def test_already_unit_interval_unchanged(self):
        X = np.array([[0.0, 0.2], [1.0, 1.0], [0.5, 0.0]])
        ds = dataio.Dataset(inputs=X, targets=np.zeros(3))
        nd, _ = dataio.normalize_minmax(ds)
        npt.assert_allclose(nd.inputs, X, atol=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        ds = dataio.Dataset(
            inputs=rng.normal(size=(20, 3)) * 5 + 2, targets=np.zeros(20)
        )
        nd, rec = dataio.normalize_minmax(ds)
        back = dataio.denormalize(rec, nd.inputs)
        npt.assert_allclose(back, ds.inputs, atol=1e-12)

    def test_unseen_values_clamped_with_count(self):
        ds = dataio.Dataset(inputs=np.array([[0.0], [10.0]]), targets=np.zeros(2))
        _, rec = dataio.normalize_minmax(ds)
        Z, clamped = dataio.apply_normalization(rec, np.array([[-5.0], [5.0], [20.0]]))
        assert clamped == 2
        npt.assert_allclose(Z[:, 0], [0.0, 0.5, 1.0])

    def test_constant_feature_rejected(self):
        ds = dataio.Dataset(inputs=np.ones((3, 2)), targets=np.zeros(3))
        with pytest.raises(DataError, match="constant"):
            dataio.normalize_minmax(ds)


class TestSynthetic:
    def test_exp1_shapes_and_targets(self):
        tr, te = dataio.synthetic("exp1", 5000, 2500, seed=0)
        assert tr.K == 5000 and te.K == 2500 and tr.D == 1
        npt.assert_allclose(
            tr.targets[:, 0], np.cos(20 * np.pi * tr.inputs[:, 0]), atol=1e-12
        )

    def test_exp2_center_value(self):
        # pre-scaling x = 0 corresponds to inputs 0.5; the target there is e^0 = 1
        tr, _ = dataio.synthetic("exp2", 100, 10, seed=1)
        z = 2.0 * tr.inputs - 1.0
        expect = (
            z[:, 0] + z[:, 1] ** 2 + z[:, 2] ** 3 + np.exp(z[:, 3])
            + z[:, 0] * z[:, 1] + z[:, 2] * z[:, 3]
        )
        npt.assert_allclose(tr.targets[:, 0], expect, atol=1e-12)
        assert np.all(tr.inputs >= 0) and np.all(tr.inputs <= 1)

    def test_seed_deterministic(self):
        a, _ = dataio.synthetic("exp1", 50, 10, seed=7)
        b, _ = dataio.synthetic("exp1", 50, 10, seed=7)
        npt.assert_array_equal(a.inputs, b.inputs)

    def test_unknown_name(self):
        with pytest.raises(DataError):
            dataio.synthetic("exp9", 10, 10, seed=0)


class TestIdx:
    def write_pair(self, tmp_path, imgs, labs):
        ip = tmp_path / "images"
        lp = tmp_path / "labels"
        with open(ip, "wb") as fh:
            fh.write(struct.pack(">IIII", 0x803, len(imgs), *imgs.shape[1:]))
            fh.write(imgs.tobytes())
        with open(lp, "wb") as fh:
            fh.write(struct.pack(">II", 0x801, len(labs)))
            fh.write(labs.tobytes())
        return ip, lp

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        imgs = rng.integers(0, 256, size=(7, 5, 4), dtype=np.uint8)
        labs = rng.integers(0, 10, size=7, dtype=np.uint8)
        ip, lp = self.write_pair(tmp_path, imgs, labs)
        ds = dataio.load_idx(ip, lp)
        assert ds.K == 7 and ds.D == 20
        npt.assert_allclose(ds.inputs, imgs.reshape(7, 20) / 255.0, atol=1e-15)
        npt.assert_array_equal(ds.labels, labs)
        assert np.all((ds.labels >= 0) & (ds.labels <= 9))

    def test_bad_magic(self, tmp_path):
        imgs = np.zeros((1, 2, 2), dtype=np.uint8)
        labs = np.zeros(1, dtype=np.uint8)
        ip, lp = self.write_pair(tmp_path, imgs, labs)
        with open(ip, "r+b") as fh:
            fh.write(struct.pack(">I", 0x1234))
        with pytest.raises(DataError, match="magic"):
            dataio.load_idx(ip, lp)

    def test_truncated(self, tmp_path):
        imgs = np.zeros((3, 2, 2), dtype=np.uint8)
        labs = np.zeros(3, dtype=np.uint8)
        ip, lp = self.write_pair(tmp_path, imgs, labs)
        data = open(ip, "rb").read()
        open(ip, "wb").write(data[:-3])
        with pytest.raises(DataError, match="truncated"):
            dataio.load_idx(ip, lp)

    def test_count_mismatch(self, tmp_path):
        imgs = np.zeros((3, 2, 2), dtype=np.uint8)
        labs = np.zeros(2, dtype=np.uint8)
        ip, lp = self.write_pair(tmp_path, imgs, labs)
        with pytest.raises(DataError, match="match"):
            dataio.load_idx(ip, lp)
