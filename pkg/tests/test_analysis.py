import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyoptics.analysis import (
    ConfigError,
    Row,
    SimulationError,
    SweepSpec,
    rows_from_csv,
    rows_from_json,
    rows_to_csv,
    rows_to_json,
    run_sweep,
    select,
)
from noisyoptics import analysis


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("nope", "dep", (0.1,))
    with pytest.raises(ConfigError):
        SweepSpec("xgate-gbqc", "heat", (0.1,))
    with pytest.raises(ConfigError):
        SweepSpec("xgate-gbqc", "dep", (0.2, 0.1))
    with pytest.raises(ConfigError):
        SweepSpec("xgate-gbqc", "dep", (0.1, 0.5))
    with pytest.raises(ConfigError):
        SweepSpec.from_dict({"experiment": "xgate-gbqc", "noise_type": "dep", "probabilities": [0.1], "bogus": 1})


def test_spec_dict_round_trip():
    s = SweepSpec("bell-gbqc", "both", (0.001, 0.01), n_samples=100, seed=4)
    assert SweepSpec.from_dict(json.loads(json.dumps(s.to_dict()))) == s


def test_xgate_dep_sweep_trend():
    rows = run_sweep(SweepSpec("xgate-gbqc", "dep", (1e-3, 1e-2, 1e-1, 0.3), n_samples=4000, seed=1))
    _, r00, _ = select(rows, "rho_00")
    _, r11, _ = select(rows, "rho_11")
    assert np.all(np.diff(np.abs(r11 - r00)) < 0)
    _, h, _ = select(rows, "hellinger")
    assert np.all(np.diff(h) > 0)


def test_xgate_loss_sweep_trend():
    rows = run_sweep(SweepSpec("xgate-gbqc", "loss", (1e-3, 1e-2, 1e-1), n_samples=4000, seed=1))
    _, r11, _ = select(rows, "rho_11")
    _, r00, _ = select(rows, "rho_00")
    assert np.all(np.diff(r11) < 0) and np.all(np.abs(r00) < 1e-12)


def test_errors_are_annotated(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(analysis, "simulate", boom)
    with pytest.raises(SimulationError, match=r"xgate-gbqc at p=0.1"):
        run_sweep(SweepSpec("xgate-gbqc", "dep", (0.1,)))


def test_sweep_is_deterministic():
    spec = SweepSpec("bell-gbqc", "both", (0.01,), n_samples=300, seed=2)
    assert rows_to_csv(run_sweep(spec)) == rows_to_csv(run_sweep(spec))


floats = st.floats(allow_nan=False, allow_infinity=True, width=64)


@settings(max_examples=100)
@given(st.lists(st.tuples(floats, st.sampled_from(["dep", "loss", "both"]), floats, floats), max_size=10))
def test_serialization_round_trip(items):
    rows = [Row(p, s, "rho_00", v, e) for p, s, v, e in items] + [Row(0.1, "dep", "herald_probability", 1.0)]
    back_csv = rows_from_csv(rows_to_csv(rows))
    back_json = rows_from_json(rows_to_json(rows))
    for back in (back_csv, back_json):
        assert len(back) == len(rows)
        for a, b in zip(rows, back):
            assert (a.p, a.scenario, a.observable, a.value) == (b.p, b.scenario, b.observable, b.value)
            assert a.stderr == b.stderr or (math.isnan(a.stderr) and math.isnan(b.stderr))


def test_csv_header():
    assert rows_to_csv([]).splitlines()[0] == "p,scenario,observable,value,stderr"
