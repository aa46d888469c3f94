from __future__ import annotations

import json

import pytest

from latentprm import presets
from latentprm.cae import ARCHITECTURES
from latentprm.datagen import CorpusParams
from latentprm.geometry import WorkspaceClass, get_robot


@pytest.mark.parametrize("name", sorted(presets.PRESETS))
def test_presets_are_consistent(name):
    p = presets.get_preset(name)
    wc = WorkspaceClass.parse(p.wclass)
    assert get_robot(p.robot).dim == wc.dim
    assert p.cae_arch in ARCHITECTURES
    assert p.corpus.seen_test <= p.corpus.train
    assert p.mlp_train.dropout == 0.5 and p.mlp_train.lr == 0.1 and p.mlp_train.batch_size == 64
    assert p.cae_train.lam == 0.001


def test_full_2ds_counts():
    assert presets.get_preset("2ds-full").corpus == CorpusParams(30, 30, 10, 100)


def test_unknown_preset():
    with pytest.raises(KeyError):
        presets.get_preset("4d")


def test_nested_override_merges_fieldwise():
    p = presets.apply_overrides(presets.get_preset("2ds-desk"), {"mlp_train": {"epochs": 3}})
    assert p.mlp_train.epochs == 3 and p.mlp_train.lr == 0.1


def test_override_rejects_unknown_fields():
    with pytest.raises(ValueError):
        presets.apply_overrides(presets.get_preset("2ds-desk"), {"warp": 9})
    with pytest.raises(ValueError):
        presets.apply_overrides(presets.get_preset("2ds-desk"), {"cae_train": {"momentum": 0.9}})


def test_resolution_order(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "3dc7-desk", "n_samples": 123, "bench_queries": 4}))
    p = presets.resolve(None, cfg, {"n_samples": 7, "seed": None})
    assert p.name == "3dc7-desk" and p.n_samples == 7 and p.bench_queries == 4
    assert presets.resolve("2ds-desk", cfg, {}).name == "2ds-desk"
    assert presets.resolve(None, None, {}).name == "2ds-full"
