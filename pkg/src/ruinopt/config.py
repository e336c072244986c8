"""Experiment configuration: strict YAML with line-anchored error messages.

Layout::

    model:   {lambda, r, u, T, theta, zeta, claim_shape, claim_scale, b_min, weight_exponent}
    assets:  [{kind: cash}, {kind: gbm, mu: .., sigma: ..}, ...]
             or {generator: {count, drift_range, vol_range, seed, include_cash}}
    spg:     {gamma_tilde, beta1, beta2, m_tilde, max_iters, eval_batch, holder_nu, initial_b}
    run:     {master_seed, repetitions, output_dir, workers, top_k}
    diagnose: {lemma3_samples, gradient_samples, fd_samples, fd_step, strategy_b, projection_points, lemma3_exponent}

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .malliavin import WeightFunction
from .model import AssetModel, ClaimDistribution, ModelParams
from .optimizer import SpgConfig
from .projection import FeasibleRegion

_REQUIRED = object()


@dataclass(frozen=True)
class ModelBlock:
    lam: float
    r: float
    u: float
    T: float
    theta: float
    zeta: float
    claim_shape: float
    b_min: float
    claim_scale: float = 3.0
    weight_exponent: float = 0.125


@dataclass(frozen=True)
class AssetSpec:
    kind: str = "cash"
    mu: float = 0.0
    sigma: float = 0.0


@dataclass(frozen=True)
class AssetGenerator:
    count: int
    drift_range: tuple = (-0.05, 0.1)
    vol_range: tuple = (0.005, 0.01)
    seed: int = 0
    include_cash: bool = True


@dataclass(frozen=True)
class SpgBlock:
    gamma_tilde: float
    max_iters: int = 300
    beta1: float | None = None
    beta2: float | None = None
    m_tilde: float = 1.0
    eval_batch: int = 10_000
    holder_nu: float | None = None
    initial_b: float = 1.0


@dataclass(frozen=True)
class RunBlock:
    master_seed: int = 0
    repetitions: int = 1
    output_dir: str = "out"
    workers: int = 1
    top_k: int = 5


@dataclass(frozen=True)
class DiagnoseBlock:
    lemma3_samples: int = 100_000
    gradient_samples: int = 200_000
    fd_samples: int = 200_000
    fd_step: float = 0.02
    strategy_b: float | None = None
    projection_points: int = 1000
    lemma3_exponent: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelBlock
    assets: tuple | AssetGenerator
    spg: SpgBlock
    run: RunBlock = field(default_factory=RunBlock)
    diagnose: DiagnoseBlock = field(default_factory=DiagnoseBlock)

    # -- construction of runtime objects --

    def asset_models(self) -> tuple:
        if isinstance(self.assets, AssetGenerator):
            gen = self.assets
            rng = np.random.default_rng(gen.seed)
            risky = gen.count - 1 if gen.include_cash else gen.count
            mu = rng.uniform(*gen.drift_range, size=risky)
            sigma = rng.uniform(*gen.vol_range, size=risky)
            out = [AssetModel.cash()] if gen.include_cash else []
            out += [AssetModel.gbm(float(a), float(s)) for a, s in zip(mu, sigma)]
            return tuple(out)
        return tuple(AssetModel(a.kind, a.mu, a.sigma) for a in self.assets)

    def build_model(self) -> ModelParams:
        mb = self.model
        return ModelParams(
            lam=mb.lam, r=mb.r, u=mb.u, horizon_T=mb.T, theta=mb.theta, zeta=mb.zeta,
            claim=ClaimDistribution(mb.claim_shape, mb.claim_scale), assets=self.asset_models(),
        )

    def build_region(self, model: ModelParams | None = None) -> FeasibleRegion:
        model = self.build_model() if model is None else model
        return FeasibleRegion.for_model(model, self.model.b_min)

    def weight_function(self) -> WeightFunction:
        return WeightFunction(self.model.T, self.model.weight_exponent)

    def spg_config(self, seed: int | None = None, eval_batch: int | None = None, workers: int | None = None) -> SpgConfig:
        s = self.spg
        return SpgConfig(
            gamma_tilde=s.gamma_tilde, max_iters=s.max_iters, beta1=s.beta1, beta2=s.beta2,
            m_tilde=s.m_tilde, holder_nu=s.holder_nu,
            eval_batch=s.eval_batch if eval_batch is None else eval_batch,
            master_seed=self.run.master_seed if seed is None else seed,
            workers=self.run.workers if workers is None else workers,
        )

    def with_overrides(self, seed=None, output_dir=None, repetitions=None, workers=None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["master_seed"] = int(seed)
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        if repetitions is not None:
            changes["repetitions"] = int(repetitions)
        if workers is not None:
            changes["workers"] = int(workers)
        if not changes:
            return self
        return dataclasses.replace(self, run=dataclasses.replace(self.run, **changes))

    def to_dict(self) -> dict:
        model = dataclasses.asdict(self.model)
        model["lambda"] = model.pop("lam")
        if isinstance(self.assets, AssetGenerator):
            gen = dataclasses.asdict(self.assets)
            gen["drift_range"] = list(gen["drift_range"])
            gen["vol_range"] = list(gen["vol_range"])
            assets = {"generator": gen}
        else:
            assets = [dataclasses.asdict(a) for a in self.assets]
        return {
            "model": model,
            "assets": assets,
            "spg": dataclasses.asdict(self.spg),
            "run": dataclasses.asdict(self.run),
            "diagnose": dataclasses.asdict(self.diagnose),
        }

    @classmethod
    def from_dict(cls, data, source=None) -> "ExperimentConfig":
        return _Parser(source).parse(data)


# -- parsing ------------------------------------------------------------------


def _key_line(node, path):
    """1-based line of the deepest node reachable along ``path``."""
    if node is None:
        return None
    line = node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            for k_node, v_node in node.value:
                if k_node.value == key:
                    line = k_node.start_mark.line + 1
                    node = v_node
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


class _Parser:
    def __init__(self, root_node):
        self.root = root_node

    def fail(self, path, message):
        where = ".".join(str(p) for p in path)
        raise ConfigError(f"{where}: {message}" if where else message, line=_key_line(self.root, path))

    def mapping(self, data, path, spec):
        """Validate a mapping against ``spec`` = {yaml_key: (field_name, type, default)}."""
        if not isinstance(data, dict):
            self.fail(path, "expected a mapping")
        unknown = sorted(set(map(str, data)) - set(spec))
        if unknown:
            self.fail(path + [unknown[0]], f"unknown key {unknown[0]!r}")
        out = {}
        for key, (name, kind, default) in spec.items():
            if key not in data or data[key] is None and default is not _REQUIRED:
                if default is _REQUIRED:
                    self.fail(path, f"missing required key {key!r}")
                out[name] = default
                continue
            out[name] = self.value(data[key], path + [key], kind)
        return out

    def value(self, v, path, kind):
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.fail(path, f"expected a number, got {v!r}")
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                self.fail(path, f"expected an integer, got {v!r}")
            return v
        if kind is bool:
            if not isinstance(v, bool):
                self.fail(path, f"expected true/false, got {v!r}")
            return v
        if kind is str:
            if not isinstance(v, str):
                self.fail(path, f"expected a string, got {v!r}")
            return v
        if kind == "range":
            if not (isinstance(v, list) and len(v) == 2):
                self.fail(path, "expected a two-element list [low, high]")
            lo, hi = (self.value(x, path + [i], float) for i, x in enumerate(v))
            if lo > hi:
                self.fail(path, "range low exceeds high")
            return (lo, hi)
        raise AssertionError(kind)

    def parse(self, data) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping at top level", line=1)
        unknown = sorted(set(data) - {"model", "assets", "spg", "run", "diagnose"})
        if unknown:
            self.fail([unknown[0]], f"unknown block {unknown[0]!r}")
        for block in ("model", "assets", "spg"):
            if block not in data:
                self.fail([], f"missing required block {block!r}")

        F, I = float, int
        model = ModelBlock(**self.mapping(data["model"], ["model"], {
            "lambda": ("lam", F, _REQUIRED), "r": ("r", F, _REQUIRED), "u": ("u", F, _REQUIRED),
            "T": ("T", F, _REQUIRED), "theta": ("theta", F, _REQUIRED), "zeta": ("zeta", F, _REQUIRED),
            "claim_shape": ("claim_shape", F, _REQUIRED), "claim_scale": ("claim_scale", F, 3.0),
            "b_min": ("b_min", F, _REQUIRED), "weight_exponent": ("weight_exponent", F, 0.125),
        }))

        raw_assets = data["assets"]
        if isinstance(raw_assets, list):
            if not raw_assets:
                self.fail(["assets"], "asset list is empty")
            assets = []
            for i, item in enumerate(raw_assets):
                spec = self.mapping(item, ["assets", i], {
                    "kind": ("kind", str, _REQUIRED), "mu": ("mu", F, 0.0), "sigma": ("sigma", F, 0.0),
                })
                if spec["kind"] not in ("cash", "gbm"):
                    self.fail(["assets", i, "kind"], f"unknown asset kind {spec['kind']!r}")
                assets.append(AssetSpec(**spec))
            assets = tuple(assets)
        elif isinstance(raw_assets, dict):
            extra = sorted(set(map(str, raw_assets)) - {"generator"})
            if extra:
                self.fail(["assets", extra[0]], f"unknown key {extra[0]!r}")
            if "generator" not in raw_assets:
                self.fail(["assets"], "missing required key 'generator'")
            path = ["assets", "generator"]
            gen = self.mapping(raw_assets["generator"], path, {
                "count": ("count", I, _REQUIRED), "drift_range": ("drift_range", "range", (-0.05, 0.1)),
                "vol_range": ("vol_range", "range", (0.005, 0.01)), "seed": ("seed", I, 0),
                "include_cash": ("include_cash", bool, True),
            })
            if gen["count"] < 1:
                self.fail(path + ["count"], "count must be at least 1")
            assets = AssetGenerator(**gen)
        else:
            self.fail(["assets"], "expected a list of assets or a generator mapping")

        spg = SpgBlock(**self.mapping(data["spg"], ["spg"], {
            "gamma_tilde": ("gamma_tilde", F, _REQUIRED), "max_iters": ("max_iters", I, 300),
            "beta1": ("beta1", F, None), "beta2": ("beta2", F, None), "m_tilde": ("m_tilde", F, 1.0),
            "eval_batch": ("eval_batch", I, 10_000), "holder_nu": ("holder_nu", F, None),
            "initial_b": ("initial_b", F, 1.0),
        }))
        run = RunBlock(**self.mapping(data.get("run") or {}, ["run"], {
            "master_seed": ("master_seed", I, 0), "repetitions": ("repetitions", I, 1),
            "output_dir": ("output_dir", str, "out"), "workers": ("workers", I, 1), "top_k": ("top_k", I, 5),
        }))
        diagnose = DiagnoseBlock(**self.mapping(data.get("diagnose") or {}, ["diagnose"], {
            "lemma3_samples": ("lemma3_samples", I, 100_000),
            "gradient_samples": ("gradient_samples", I, 200_000),
            "fd_samples": ("fd_samples", I, 200_000), "fd_step": ("fd_step", F, 0.02),
            "strategy_b": ("strategy_b", F, None), "projection_points": ("projection_points", I, 1000),
            "lemma3_exponent": ("lemma3_exponent", F, None),
        }))
        if run.repetitions < 1:
            self.fail(["run", "repetitions"], "repetitions must be at least 1")
        if run.workers < 1:
            self.fail(["run", "workers"], "workers must be at least 1")

        cfg = ExperimentConfig(model, assets, spg, run, diagnose)
        self.validate(cfg)
        return cfg

    def validate(self, cfg):
        # model invariants raise ModelError (a distinct exit status); plain
        # argument errors in the blocks are reported as config errors
        model = cfg.build_model()
        cfg.build_region(model)
        if not 0 < cfg.spg.initial_b <= 1 or cfg.spg.initial_b < cfg.model.b_min:
            self.fail(["spg", "initial_b"], "initial_b must lie in [b_min, 1]")
        try:
            cfg.weight_function()
        except ValueError as exc:
            self.fail(["model", "weight_exponent"], str(exc))
        if cfg.diagnose.lemma3_exponent is not None:
            try:
                WeightFunction(cfg.model.T, cfg.diagnose.lemma3_exponent)
            except ValueError as exc:
                self.fail(["diagnose", "lemma3_exponent"], str(exc))
        try:
            cfg.spg_config()
        except ValueError as exc:
            self.fail(["spg"], str(exc))


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"invalid YAML: {exc.problem}", line=line) from None
    return _Parser(node).parse(data)
