"""PRM sampling with a learned collision gate.

A convolution-free autoencoder compresses a workspace occupancy grid into a
latent code; a small classifier maps (code, configuration) to valid / invalid
and replaces the exact collision checker during roadmap sampling.
"""

from __future__ import annotations

from . import bench, cae, datagen, geometry, kernels, mlp, nn, pipeline, planner, presets, render, samplers
from .cae import CaeModel, build_cae, train_cae
from .datagen import Corpus, CorpusParams, generate_corpus, load_corpus
from .mlp import MlpModel, build_mlp, train_mlp
from .planner import Path, PlanSpec, PlanStats, Query, plan, plan_baseline
from .samplers import SamplerKind, SamplerSpec

__version__ = "0.1.0"

__all__ = [
    "CaeModel",
    "Corpus",
    "CorpusParams",
    "MlpModel",
    "Path",
    "PlanSpec",
    "PlanStats",
    "Query",
    "SamplerKind",
    "SamplerSpec",
    "bench",
    "build_cae",
    "build_mlp",
    "cae",
    "datagen",
    "generate_corpus",
    "geometry",
    "kernels",
    "load_corpus",
    "mlp",
    "nn",
    "pipeline",
    "plan",
    "plan_baseline",
    "planner",
    "presets",
    "render",
    "samplers",
    "train_cae",
    "train_mlp",
]
