"""Command-line entry point: gen, train-cae, train-mlp, eval, bench, render."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import cae as cae_mod
from . import mlp as mlp_mod
from . import nn, pipeline, render
from .datagen import CorpusError, generate_corpus, load_corpus
from .geometry import Workspace, get_robot, rasterize
from .planner import Path as PlanPath
from .planner import RAW_SAMPLES, PlanSpec, plan_baseline, random_query
from .presets import PRESETS, resolve
from .samplers import SamplerSpec

CORPUS_ENV = "LATENTPRM_CORPUS"
DEFAULT_ROOT = "corpus"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_BENCH = 4

log = logging.getLogger("latentprm")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _usage(msg: str) -> CliError:
    return CliError(EXIT_USAGE, "usage", msg)


def _data(msg: str) -> CliError:
    return CliError(EXIT_DATA, "data", msg)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line, machine-parsable
        raise _usage(message)


def _root(args) -> Path:
    return Path(args.corpus_root or os.environ.get(CORPUS_ENV) or DEFAULT_ROOT)


def _corpus_dir(args, preset) -> Path:
    return Path(args.corpus) if getattr(args, "corpus", None) else _root(args) / preset.name


def _flags(args) -> dict:
    flags: dict = {"seed": getattr(args, "seed", None)}
    corpus = {k: getattr(args, k, None) for k in ("train", "seen_test", "unseen_test", "samples_per_workspace")}
    corpus = {k: v for k, v in corpus.items() if v is not None}
    if corpus:
        flags["corpus"] = corpus
    train = {k: getattr(args, k, None) for k in ("epochs", "lr", "batch_size")}
    train = {k: v for k, v in train.items() if v is not None}
    if train:
        flags["cae_train" if args.command == "train-cae" else "mlp_train"] = train
    for k in ("bench_workspaces", "bench_queries", "timing_reps", "n_samples"):
        if getattr(args, k, None) is not None:
            flags[k] = getattr(args, k)
    if getattr(args, "samplers", None):
        flags["samplers"] = [s.strip() for s in args.samplers.split(",") if s.strip()]
    return flags


def _preset(args):
    try:
        return resolve(args.preset, args.config, _flags(args))
    except (KeyError, ValueError, TypeError) as exc:
        raise _usage(str(exc).strip("'\"")) from None
    except OSError as exc:
        raise _data(f"{args.config}: {exc.strerror or exc}") from None


def _load_corpus(path: Path):
    try:
        return load_corpus(path)
    except CorpusError as exc:
        raise _data(str(exc)) from None


def _models_dir(cdir: Path) -> Path:
    return cdir / "models"


def _reports_dir(cdir: Path) -> Path:
    d = cdir / "reports"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_cae(cdir: Path, corpus):
    stem = _models_dir(cdir) / "cae"
    try:
        model = cae_mod.CaeModel.load(stem)
    except FileNotFoundError as exc:
        raise _data(f"{exc.filename}: missing file (run train-cae first)") from None
    except nn.WeightFormatError as exc:
        raise _data(str(exc)) from None
    if model.wclass != corpus.wclass:
        raise _data(f"{stem}: CAE class {model.wclass.value} != corpus class {corpus.wclass.value}")
    return model


def _load_mlp(cdir: Path, corpus):
    path = _models_dir(cdir) / "mlp.lpw"
    try:
        model = mlp_mod.MlpModel.load(path)
    except FileNotFoundError:
        raise _data(f"{path}: missing file (run train-mlp first)") from None
    except nn.WeightFormatError as exc:
        raise _data(str(exc)) from None
    if model.wclass != corpus.wclass or model.robot_tag != corpus.robot.tag:
        raise _data(f"{path}: model is for ({model.wclass.value}, {model.robot_tag}), corpus is "
                    f"({corpus.wclass.value}, {corpus.robot.tag})")
    return model


# Commands -------------------------------------------------------------------

def cmd_gen(args) -> int:
    preset = _preset(args)
    out = _corpus_dir(args, preset)
    t0 = time.perf_counter()
    try:
        corpus = generate_corpus(preset.wclass, args.robot or preset.robot, preset.corpus, preset.seed,
                                 out, workers=args.workers)
    except CorpusError as exc:
        raise _data(str(exc)) from None
    except (KeyError, ValueError) as exc:
        raise _usage(str(exc).strip("'\"")) from None
    print(f"wrote {out / 'manifest.json'}: {len(corpus.train)} train, {len(corpus.unseen)} unseen "
          f"({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def cmd_train_cae(args) -> int:
    preset = _preset(args)
    cdir = _corpus_dir(args, preset)
    corpus = _load_corpus(cdir)
    t0 = time.perf_counter()
    try:
        model, history = pipeline.train_cae_on(corpus, preset)
    except FloatingPointError as exc:
        raise _data(str(exc)) from None
    mdir = _models_dir(cdir)
    mdir.mkdir(parents=True, exist_ok=True)
    enc, dec = model.save(mdir / "cae")
    cae_mod.write_loss_history(mdir / "cae_loss.csv", history)
    print(f"wrote {enc} and {dec}: final loss {history[-1]:.4f} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def cmd_train_mlp(args) -> int:
    preset = _preset(args)
    cdir = _corpus_dir(args, preset)
    corpus = _load_corpus(cdir)
    cae_model = _load_cae(cdir, corpus)
    t0 = time.perf_counter()
    try:
        model, history = pipeline.train_mlp_on(corpus, cae_model, preset)
    except FloatingPointError as exc:
        raise _data(str(exc)) from None
    path = _models_dir(cdir) / "mlp.lpw"
    model.save(path)
    cae_mod.write_loss_history(_models_dir(cdir) / "mlp_loss.csv", history)
    print(f"wrote {path}: final loss {history[-1]:.4f} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


CAE_EVAL_COLUMNS = ["class", "split", "workspaces", "mean_cell_accuracy", "cell_accuracy_variance"]
MLP_EVAL_COLUMNS = ["class", "robot", "split", "samples", "accuracy", "tpr", "tnr",
                    "accuracy_std_across_workspaces"]


def cmd_eval(args) -> int:
    preset = _preset(args)
    cdir = _corpus_dir(args, preset)
    corpus = _load_corpus(cdir)
    cae_model = _load_cae(cdir, corpus)
    reports = _reports_dir(cdir)
    ce = pipeline.evaluate_cae(corpus, cae_model)
    cls = corpus.wclass.value
    bench_mod.write_csv(reports / "cae_eval.csv", CAE_EVAL_COLUMNS, [
        {"class": cls, "split": "seen", "workspaces": ce.n_seen, "mean_cell_accuracy": ce.seen,
         "cell_accuracy_variance": ce.seen_var},
        {"class": cls, "split": "unseen", "workspaces": ce.n_unseen, "mean_cell_accuracy": ce.unseen,
         "cell_accuracy_variance": ce.unseen_var},
    ])
    print(f"cae {cls}: seen {ce.seen:.4f} unseen {ce.unseen:.4f}")
    if args.untrained:
        mlp_model = mlp_mod.build_mlp(corpus.wclass, corpus.robot, cae_model.latent_dim, preset.seed).frozen()
    else:
        mlp_model = _load_mlp(cdir, corpus)
    rows = []
    for split, m in pipeline.evaluate_mlp(corpus, cae_model, mlp_model).items():
        spread = pipeline.mlp_accuracy_spread(corpus, cae_model, mlp_model, split)
        rows.append({"class": cls, "robot": corpus.robot.tag, "split": split, "samples": m.n,
                     "accuracy": m.accuracy, "tpr": m.tpr, "tnr": m.tnr,
                     "accuracy_std_across_workspaces": spread})
        print(f"mlp {cls}/{corpus.robot.tag} {split}: acc {m.accuracy:.4f} tpr {m.tpr:.4f} tnr {m.tnr:.4f}")
    bench_mod.write_csv(reports / "mlp_eval.csv", MLP_EVAL_COLUMNS, rows)
    return EXIT_OK


def cmd_bench(args) -> int:
    preset = _preset(args)
    cdir = _corpus_dir(args, preset)
    corpus = _load_corpus(cdir)
    cae_model = _load_cae(cdir, corpus)
    mlp_model = _load_mlp(cdir, corpus)
    for s in preset.samplers:
        try:
            SamplerSpec(s)
        except ValueError as exc:
            raise _usage(str(exc)) from None
    workspaces = bench_mod.bench_workspaces(preset.wclass, preset.bench_workspaces, preset.seed)
    try:
        trials = bench_mod.make_trials(workspaces, corpus.robot, preset.samplers, preset.bench_queries,
                                       preset.n_samples, preset.seed)
        results = bench_mod.run_trials(trials, cae_model, mlp_model, preset.timing_reps, args.workers)
    except RuntimeError as exc:
        raise CliError(EXIT_BENCH, "bench", str(exc)) from None
    report = bench_mod.BenchmarkReport.from_results(results)
    reports = _reports_dir(cdir)
    report.write(reports / "bench.csv", reports / "bench_summary.csv")
    for s in report.summary:
        print(f"{s['sampler']}: sampling improvement {s['mean_sampling_improvement']:.3f} "
              f"total {s['mean_total_improvement']:.3f} pairs {s['pairs_both_success']}/{s['pairs']}")
    if not any(s["pairs_both_success"] for s in report.summary):
        raise CliError(EXIT_BENCH, "bench", "no trial pair succeeded in both arms")
    return EXIT_OK


def cmd_render(args) -> int:
    if args.workspace:
        try:
            ws = Workspace.load(args.workspace)
        except FileNotFoundError:
            raise _data(f"{args.workspace}: missing file") from None
        except (ValueError, KeyError) as exc:
            raise _data(f"{args.workspace}: {exc}") from None
    else:
        preset = _preset(args)
        corpus = _load_corpus(_corpus_dir(args, preset))
        recs = corpus.unseen if args.split == "unseen" else corpus.train
        if not 0 <= args.index < len(recs):
            raise _usage(f"--index {args.index} out of range for {args.split} ({len(recs)} workspaces)")
        ws = recs[args.index].workspace
    out = Path(args.out)
    if ws.dim != 2:
        render.write_svg(out, render.render_slices(rasterize(ws), axis=args.axis))
        print(f"wrote {out}")
        return EXIT_OK
    path = roadmap = query = None
    if args.path:
        try:
            path = PlanPath.load(args.path)
        except (OSError, ValueError, KeyError) as exc:
            raise _data(f"{args.path}: {exc}") from None
    elif args.plan:
        robot = get_robot("point2d")
        seed = args.seed or 0
        query = random_query(robot, ws, np.random.default_rng(seed))
        spec = PlanSpec(SamplerSpec(args.sampler), RAW_SAMPLES["2DS"], seed=seed)
        path, stats = plan_baseline(ws, robot, query, spec)
        roadmap = stats.roadmap
    render.write_svg(out, render.render_scene(ws, roadmap, path, query))
    print(f"wrote {out}")
    return EXIT_OK


# Parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="latentprm", description="Learned-collision-gate PRM experiments.")
    p.add_argument("--corpus-root", help=f"root for preset corpora (default ${CORPUS_ENV} or ./{DEFAULT_ROOT})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--config", help="JSON file of preset overrides")
        sp.add_argument("--corpus", help="corpus directory (default <root>/<preset>)")
        sp.add_argument("--seed", type=int)

    g = sub.add_parser("gen", help="generate a corpus")
    common(g)
    g.add_argument("--robot")
    g.add_argument("--train", type=int)
    g.add_argument("--seen-test", type=int)
    g.add_argument("--unseen-test", type=int)
    g.add_argument("--samples-per-workspace", type=int)
    g.add_argument("--workers", type=int, default=1)

    for name in ("train-cae", "train-mlp"):
        t = sub.add_parser(name, help=f"train the {'autoencoder' if name == 'train-cae' else 'validity gate'}")
        common(t)
        t.add_argument("--epochs", type=int)
        t.add_argument("--lr", type=float)
        t.add_argument("--batch-size", type=int)

    e = sub.add_parser("eval", help="reconstruction and classification reports")
    common(e)
    e.add_argument("--untrained", action="store_true", help="score a freshly initialized gate")

    b = sub.add_parser("bench", help="paired with/without timing benchmark")
    common(b)
    b.add_argument("--samplers", help="comma list of BS,OB,G,BT")
    b.add_argument("--bench-workspaces", type=int)
    b.add_argument("--bench-queries", type=int)
    b.add_argument("--timing-reps", type=int)
    b.add_argument("--n-samples", type=int)
    b.add_argument("--workers", type=int, default=1, help="process pool size (1 = sequential timing)")

    r = sub.add_parser("render", help="SVG of a workspace (2D scene or 3D slices)")
    common(r)
    r.add_argument("--workspace", help="workspace JSON file")
    r.add_argument("--split", choices=["train", "unseen"], default="train")
    r.add_argument("--index", type=int, default=0)
    r.add_argument("--path", help="path JSON to overlay")
    r.add_argument("--plan", action="store_true", help="plan a random query and draw roadmap + path")
    r.add_argument("--sampler", default="BS")
    r.add_argument("--axis", type=int, choices=[0, 1, 2], default=2)
    r.add_argument("--out", required=True)
    return p


COMMANDS = {
    "gen": cmd_gen,
    "train-cae": cmd_train_cae,
    "train-mlp": cmd_train_mlp,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "render": cmd_render,
}


def _one_line(s: str) -> str:
    return " ".join(str(s).split())


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error kind={exc.kind} code={exc.code} message={json.dumps(_one_line(str(exc)))}",
              file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
