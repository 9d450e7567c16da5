import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbepath.errors import ValidationError
from sbepath.formats import (read_drift_binary, read_measure_csv, read_path, read_path_binary, read_path_csv,
                             write_drift_binary, write_measure_csv, write_path_binary, write_path_csv)
from sbepath.occupation import occupation
from sbepath.paths import SampledPath
from sbepath.young import DriftField


@given(st.integers(2, 50), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_path_round_trips_exactly(tmp_path_factory, n, d, seed):
    rng = np.random.default_rng(seed)
    p = SampledPath(np.cumsum(rng.uniform(0.01, 1, n)), rng.normal(size=(n, d)) * 10.0 ** rng.integers(-5, 5))
    tmp = tmp_path_factory.mktemp("io")
    write_path_csv(p, tmp / "p.csv")
    write_path_binary(p, tmp / "p.bin")
    assert read_path_csv(tmp / "p.csv").equals(p)
    assert read_path_binary(tmp / "p.bin").equals(p)
    assert read_path(tmp / "p.bin").equals(p)
    assert read_path(tmp / "p.csv").equals(p)


def test_binary_rejects_corruption(tmp_path):
    p = SampledPath([0.0, 1.0], [0.0, 1.0])
    write_path_binary(p, tmp_path / "p.bin")
    raw = (tmp_path / "p.bin").read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValidationError, match="magic"):
        read_path_binary(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-3])
    with pytest.raises(ValidationError, match="bytes"):
        read_path_binary(tmp_path / "short.bin")


def test_measure_round_trip(tmp_path, bm_path):
    mu = occupation(bm_path, 0.1, 0.6)
    write_measure_csv(mu, tmp_path / "m.csv")
    back = read_measure_csv(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.atoms, mu.atoms)
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_drift_round_trip(tmp_path):
    f = DriftField.from_function(lambda t, x: np.sin(x + t), [0.0, 0.5, 1.0], [-1.0, -2.0], [0.25, 0.5],
                                 [9, 9], alpha2=0.7, p2=3.0, r2=1.2)
    write_drift_binary(f, tmp_path / "f.bin")
    g = read_drift_binary(tmp_path / "f.bin")
    np.testing.assert_array_equal(g.values, f.values)
    np.testing.assert_array_equal(g.times, f.times)
    assert (g.alpha2, g.p2, g.q2, g.r2) == (0.7, 3.0, np.inf, 1.2)
