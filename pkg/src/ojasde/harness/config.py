"""Experiment configuration: YAML documents validated into a flat dataclass."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError, ParseError, ValidationError
from ..model import Distribution, ModelContext, exact_moments

EXPERIMENTS = (
    "weak_error",
    "unstable_demo",
    "invariant_measure",
    "langevin",
    "fp_convergence",
    "sga_vs_ode",
    "identities",
)

DEFAULT_LAW = {"kind": "product_uniform", "half_widths": [2.0, 1.0]}

# Keys accepted at the top level, with their defaults.
COMMON_DEFAULTS = {
    "seed": 0,
    "distribution": DEFAULT_LAW,
    "n": None,
    "p": None,
    "eta": [0.1],
    "dt": [0.01],
    "T": 1.0,
    "n_mc": 1000,
    "phi_id": "w11",
    "theta0": math.pi / 4,
    "grid_m": 512,
    "retraction": True,
    "sigma": 0.5,
    "potential": "oja_brockett",
    "weights": None,
    "burn_in": 50.0,
    "n_chains": 10000,
    "n_samples": 10_000_000,
    "thin": 10,
    "n_points": 100,
    "dims": [2, 3, 4],
    "fd_step": 1e-5,
    "flux": "sg",
    "scheme": "milstein",
    "fk_n_mc": 0,
    "workers": 1,
    "block_size": 65536,
    "output": None,
    "format": "json",
}

EXPERIMENT_DEFAULTS = {
    "weak_error": {"eta": [0.08, 0.04, 0.02], "T": 0.5, "n_mc": 1_000_000, "grid_m": 1024},
    "unstable_demo": {"eta": [0.1], "dt": [0.01, 0.005], "n_mc": 200, "n_points": 10},
    "invariant_measure": {"eta": [1.0, 0.2], "dt": [0.01]},
    "fp_convergence": {"eta": [1.0], "T": 10.0},
    "langevin": {"dt": [0.01], "sigma": 0.5},
    "sga_vs_ode": {"eta": [0.04, 0.02, 0.01], "n_mc": 100_000, "n_points": 0},
    "identities": {"n_points": 100},
}

# Experiments where eta = 0 is meaningful (pure ODE limits).
ETA_ZERO_OK = {"identities", "unstable_demo", "sga_vs_ode"}
SIGMA_ZERO_OK = {"langevin"}


@dataclass
class ExperimentConfig:
    experiment: str
    distribution: dict
    eta: list
    dt: list
    T: float
    n_mc: int
    seed: int
    phi_id: str
    n: int
    p: int
    theta0: float
    grid_m: int
    retraction: bool
    sigma: float
    potential: str
    weights: list | None
    burn_in: float
    n_chains: int
    n_samples: int
    thin: int
    n_points: int
    dims: list
    fd_step: float
    flux: str
    scheme: str
    fk_n_mc: int
    workers: int
    block_size: int
    output: str | None
    format: str
    _ctx: ModelContext | None = field(default=None, repr=False, compare=False)

    @property
    def ctx(self) -> ModelContext:
        if self._ctx is None:
            self._ctx = exact_moments(build_distribution(self.distribution))
        return self._ctx

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("_ctx")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_distribution(doc: dict) -> Distribution:
    """Distribution from its document form.

    ``product_uniform`` takes ``half_widths`` or ``variances``
    (``h = sqrt(3 v)``); ``finite`` takes ``atoms`` and optional ``weights``.
    """
    if not isinstance(doc, dict):
        raise ValidationError("must be a mapping", "distribution")
    kind = doc.get("kind")
    allowed = {"product_uniform": {"kind", "half_widths", "variances"}, "finite": {"kind", "atoms", "weights"}}
    if kind not in allowed:
        raise ValidationError(f"unknown kind {kind!r}", "distribution.kind")
    extra = set(doc) - allowed[kind]
    if extra:
        raise ValidationError(f"unknown key {sorted(extra)[0]!r}", f"distribution.{sorted(extra)[0]}")
    try:
        if kind == "product_uniform":
            if ("half_widths" in doc) == ("variances" in doc):
                raise ValidationError("give exactly one of half_widths or variances", "distribution")
            if "variances" in doc:
                v = np.asarray(doc["variances"], dtype=float)
                if np.any(v < 0):
                    raise ValidationError("variances must be >= 0", "distribution.variances")
                return Distribution.product_uniform(np.sqrt(3.0 * v))
            return Distribution.product_uniform(doc["half_widths"])
        if "atoms" not in doc:
            raise ValidationError("finite distribution needs atoms", "distribution.atoms")
        return Distribution.finite(doc["atoms"], doc.get("weights"))
    except ValidationError:
        raise
    except ConfigError as e:
        raise ValidationError(str(e), "distribution") from e
    except (TypeError, ValueError) as e:
        raise ValidationError(f"malformed values ({e})", "distribution") from e


def _num(value, key, kind=float, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"expected a number, got {value!r}", key)
    if kind is int and (not float(value).is_integer()):
        raise ValidationError(f"expected an integer, got {value!r}", key)
    v = kind(value)
    if not math.isfinite(v):
        raise ValidationError("must be finite", key)
    if positive and v <= 0:
        raise ValidationError(f"must be > 0, got {v}", key)
    if nonneg and v < 0:
        raise ValidationError(f"must be >= 0, got {v}", key)
    return v


def _num_list(value, key, allow_zero):
    if not isinstance(value, (list, tuple)):
        value = [value]
    if not value:
        raise ValidationError("must not be empty", key)
    return [_num(v, f"{key}[{i}]", positive=not allow_zero, nonneg=allow_zero) for i, v in enumerate(value)]


def parse_document(document) -> dict:
    """Parse YAML text, a path to a YAML file, or pass a mapping through."""
    if isinstance(document, dict):
        return dict(document)
    if isinstance(document, Path) or (isinstance(document, str) and "\n" not in document and document.endswith((".yaml", ".yml"))):
        try:
            document = Path(document).read_text(encoding="utf-8")
        except OSError as e:
            raise ParseError(f"cannot read config: {e}") from e
    try:
        data = yaml.safe_load(document)
    except yaml.YAMLError as e:
        raise ParseError(f"malformed config document: {e}") from e
    if not isinstance(data, dict):
        raise ParseError("config document must be a mapping at the top level")
    return data


def load_config(document, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config document into an :class:`ExperimentConfig`.

    Unknown keys are rejected; missing keys take the common defaults refined
    by per-experiment defaults. ``overrides`` (e.g. CLI flags) win over the
    document.
    """
    data = parse_document(document)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        raise ValidationError(f"expected one of {EXPERIMENTS}, got {exp!r}", "experiment")
    unknown = set(data) - set(COMMON_DEFAULTS) - {"experiment"}
    if unknown:
        key = sorted(unknown)[0]
        raise ValidationError("unknown key", key)
    merged = dict(COMMON_DEFAULTS)
    merged.update(EXPERIMENT_DEFAULTS.get(exp, {}))
    merged.update(data)

    dist = build_distribution(merged["distribution"])
    n = dist.dim if merged["n"] is None else _num(merged["n"], "n", int, positive=True)
    if n != dist.dim:
        raise ValidationError(f"n={n} but the distribution has dimension {dist.dim}", "n")
    p = n if merged["p"] is None else _num(merged["p"], "p", int, positive=True)
    if p > n:
        raise ValidationError(f"p={p} exceeds n={n}", "p")
    if n > 4 and exp != "identities":
        raise ValidationError("n is capped at 4", "n")

    seed = _num(merged["seed"], "seed", int, nonneg=True)
    if seed >= 2**64:
        raise ValidationError("seed must fit in 64 bits", "seed")
    eta = _num_list(merged["eta"], "eta", allow_zero=exp in ETA_ZERO_OK)
    dt = _num_list(merged["dt"], "dt", allow_zero=False)
    sigma_ = _num(merged["sigma"], "sigma", nonneg=True)
    if sigma_ == 0 and exp not in SIGMA_ZERO_OK:
        raise ValidationError("must be > 0", "sigma")
    dims = merged["dims"]
    if not isinstance(dims, (list, tuple)) or not dims:
        raise ValidationError("must be a non-empty list", "dims")
    dims = [_num(d, f"dims[{i}]", int, positive=True) for i, d in enumerate(dims)]
    weights = merged["weights"]
    if weights is not None:
        weights = _num_list(weights, "weights", allow_zero=True)
        if len(weights) != n:
            raise ValidationError(f"need {n} entries", "weights")
    for key, choices in (("flux", ("sg", "upwind")), ("scheme", ("em", "milstein")),
                         ("format", ("json", "csv")), ("potential", ("zero", "oja_brockett"))):
        if merged[key] not in choices:
            raise ValidationError(f"expected one of {choices}, got {merged[key]!r}", key)
    if not isinstance(merged["retraction"], bool):
        raise ValidationError("expected true or false", "retraction")
    from ..sga import PHI_REGISTRY

    if merged["phi_id"] not in PHI_REGISTRY:
        raise ValidationError(f"unknown test function {merged['phi_id']!r}", "phi_id")
    output = merged["output"]
    if output is not None and not isinstance(output, str):
        raise ValidationError("expected a path string", "output")

    cfg = ExperimentConfig(
        experiment=exp,
        distribution=dist.to_dict(),
        eta=eta,
        dt=dt,
        T=_num(merged["T"], "T", positive=True),
        n_mc=_num(merged["n_mc"], "n_mc", int, positive=True),
        seed=seed,
        phi_id=merged["phi_id"],
        n=n,
        p=p,
        theta0=_num(merged["theta0"], "theta0"),
        grid_m=_num(merged["grid_m"], "grid_m", int, positive=True),
        retraction=merged["retraction"],
        sigma=sigma_,
        potential=merged["potential"],
        weights=weights,
        burn_in=_num(merged["burn_in"], "burn_in", nonneg=True),
        n_chains=_num(merged["n_chains"], "n_chains", int, positive=True),
        n_samples=_num(merged["n_samples"], "n_samples", int, positive=True),
        thin=_num(merged["thin"], "thin", int, positive=True),
        n_points=_num(merged["n_points"], "n_points", int, nonneg=True),
        dims=dims,
        fd_step=_num(merged["fd_step"], "fd_step", positive=True),
        flux=merged["flux"],
        scheme=merged["scheme"],
        fk_n_mc=_num(merged["fk_n_mc"], "fk_n_mc", int, nonneg=True),
        workers=_num(merged["workers"], "workers", int, positive=True),
        block_size=_num(merged["block_size"], "block_size", int, positive=True),
        output=output,
        format=merged["format"],
    )
    cfg._ctx = exact_moments(dist)
    return cfg
