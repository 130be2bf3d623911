import json

import pytest

from palmdpp import ConfigError, Domain
from palmdpp.config import (gspec_from_config, load_config,
                            model_from_config, pairs_from_config,
                            schedule_from_config, validate_config,
                            weight_from_config, window_from_config)


def _load(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return load_config(str(path))


BASE_MODEL = {"domain": "plane", "weight": {"kind": "fock_gaussian"},
              "rank": 4}


def test_minimal_config(tmp_path):
    cfg = _load(tmp_path, {"model": BASE_MODEL})
    model = model_from_config(cfg)
    assert model.rank == 4 and model.domain is Domain.PLANE


def test_unknown_keys_rejected_at_every_level():
    for bad in (
        {"model": BASE_MODEL, "extra": 1},
        {"model": dict(BASE_MODEL, extra=1)},
        {"model": dict(BASE_MODEL, weight={"kind": "fock_gaussian",
                                           "extra": 1})},
        {"model": BASE_MODEL, "thresholds": {"zz": 3}},
    ):
        with pytest.raises(ConfigError):
            validate_config(bad)


def test_weight_parsing():
    assert weight_from_config({"kind": "fock_radial", "alpha": 1.5}).alpha == 1.5
    assert weight_from_config({"kind": "bergman", "alpha": 0.0}).alpha == 0.0
    tab = weight_from_config({"kind": "tabulated", "radii": [0.0, 1.0],
                              "log_weight": [0.0, -1.0]})
    assert tab.domain is Domain.PLANE


def test_weight_schema_bounds():
    with pytest.raises(ConfigError):
        validate_config({"model": dict(BASE_MODEL,
                                       weight={"kind": "fock_radial",
                                               "alpha": 0.0})})
    with pytest.raises(ConfigError):
        validate_config({"model": dict(BASE_MODEL,
                                       weight={"kind": "bergman",
                                               "alpha": -1.0})})


def test_gspec_round_trip():
    cfg = {"gspec": {"kind": "rational", "p": [[1.0, 0.0]],
                     "q": [[0.0, 0.0]]}}
    validate_config(dict(cfg, model=BASE_MODEL))
    g = gspec_from_config(cfg)
    assert g.kind == "rational"
    assert g.p == (1 + 0j,) and g.q == (0j,)
    blas = gspec_from_config({"gspec": {"kind": "blaschke",
                                        "p": [[0.4, 0.0]], "q": []}})
    assert blas.kind == "blaschke" and blas.q == ()
    assert gspec_from_config({}) is None


def test_schedule_parsing():
    explicit = schedule_from_config({"schedule": {"radii": [1.0, 2.0, 3.0]}})
    assert explicit.radii == (1.0, 2.0, 3.0)
    geo = schedule_from_config({"schedule": {"kind": "plane_geometric",
                                             "count": 4}})
    assert len(geo.radii) == 4
    dyadic = schedule_from_config({"schedule": {"kind": "disc_dyadic",
                                                "count": 5}})
    assert dyadic.radii[0] == 0.5 and len(dyadic.radii) == 5
    assert schedule_from_config({}) is None


def test_window_and_pairs_parsing():
    win = window_from_config({"experiment": {"window": {"r_lo": 0.0,
                                                        "r_hi": 1.0}}})
    assert win.r_hi == 1.0
    pairs = pairs_from_config({"experiment": {"pairs": [[0.5, [0.0, 2.0]]]}})
    assert pairs[0][0] == 0.5 and pairs[0][1].r_hi == 2.0
    with pytest.raises(ConfigError):
        pairs_from_config({"experiment": {"pairs": [[0.5, 2.0]]}})


def test_replicas_minimum_schema():
    with pytest.raises(ConfigError):
        validate_config({"model": BASE_MODEL, "replicas": 0})


def test_missing_model_for_model_command():
    with pytest.raises(ConfigError):
        model_from_config({})
