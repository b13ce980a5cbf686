"""Scenario and Bell-config documents, result records, CSV tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from jsonschema.exceptions import best_match

from . import __version__
from .bell import BellConfig
from .collapse import DelayModel, KrausSet, perturbed_singlet, projective_qubit, softened_projectors
from .engines import CAUSAL, ReductionEvent, Scenario
from .errors import CausalQTError, ScenarioError
from .linalg import PureState
from .spacetime import SpacetimePoint

TOOL = "causalqt"
SHIPPED = ("spacelike_singlet", "timelike_chain", "zero_norm_demo", "chsh_standard", "loophole_sweep")


def _schema(name):
    text = resources.files("causalqt").joinpath("schema", f"{name}.schema.json").read_text()
    return json.loads(text)


def _reject_constant(token):
    raise ValueError(f"non-finite number {token} is not allowed")


def _finite_float(token):
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(f"number {token} overflows a double")
    return value


def load_document(source) -> dict:
    """Parse JSON text or a path; syntax errors become ScenarioError with line/column."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        try:
            source = Path(source).read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read file: {exc.strerror or exc}") from exc
    try:
        return json.loads(source, parse_constant=_reject_constant, parse_float=_finite_float)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _check_schema(doc, name):
    validator = jsonschema.Draft202012Validator(_schema(name))
    err = best_match(validator.iter_errors(doc))
    if err is not None:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ScenarioError(err.message, path)


def _complex_array(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)


def _pure_state(spec, dims, path) -> PureState:
    try:
        if "perturbed_singlet" in spec:
            if tuple(dims) != (2, 2):
                raise ScenarioError("perturbed_singlet needs dims [2, 2]", path)
            return perturbed_singlet(spec["perturbed_singlet"]["eps"])
        if "basis" in spec:
            if len(spec["basis"]) != len(dims) or any(i >= d for i, d in zip(spec["basis"], dims)):
                raise ScenarioError(f"basis index {spec['basis']} does not fit dims {list(dims)}", path)
            return PureState.basis(spec["basis"], dims)
        amps = np.array([complex(re, im) for re, im in spec["amplitudes"]])
        return PureState(amps, dims)
    except ScenarioError:
        raise
    except (CausalQTError, ValueError, OverflowError) as exc:
        raise ScenarioError(str(exc), path) from exc


def _kraus(spec, path) -> KrausSet:
    try:
        if "projective" in spec:
            return projective_qubit(spec["projective"]["theta"])
        if "softened" in spec:
            return softened_projectors(spec["softened"]["theta"], spec["softened"]["eta"])
        mats = [_complex_array(m) for m in spec["matrices"]]
        for m in mats:
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ScenarioError(f"matrix of shape {m.shape} is not square", path)
        return KrausSet(tuple(mats))
    except ScenarioError:
        raise
    except (CausalQTError, ValueError, OverflowError) as exc:
        raise ScenarioError(str(exc), path) from exc


@dataclass
class RunSpec:
    scenario: Scenario
    engine: str = CAUSAL
    seed: int = 0
    mode: str = "exact"
    trials: int = 1000


def parse_scenario(source) -> RunSpec:
    """Validate a scenario document (text, path, or already-parsed dict)."""
    doc = source if isinstance(source, dict) else load_document(source)
    _check_schema(doc, "scenario")
    dims = tuple(doc["dims"])
    if math.prod(dims) > 2**16:
        raise ScenarioError(f"total dimension {math.prod(dims)} exceeds 65536", "dims")
    try:
        positions = tuple(tuple(float(c) for c in p) for p in doc.get("site_positions", ()))
    except OverflowError as exc:
        raise ScenarioError(str(exc), "site_positions") from exc
    if positions and len(positions) != len(dims):
        raise ScenarioError(f"{len(positions)} positions for {len(dims)} sites", "site_positions")

    init = doc["initial"]
    if "mixture" in init:
        initial = [(c["weight"], _pure_state(c["state"], dims, f"initial/mixture/{k}/state"))
                   for k, c in enumerate(init["mixture"])]
    else:
        initial = _pure_state(init, dims, "initial")

    events = []
    for k, ev in enumerate(doc["events"]):
        path = f"events/{k}"
        site = ev["site"]
        if site >= len(dims):
            raise ScenarioError(f"site {site} out of range for {len(dims)} sites", f"{path}/site")
        if not positions and any(c not in ev for c in "xyz"):
            raise ScenarioError("x, y, z are required when site_positions is absent", path)
        default = positions[site] if positions else (0.0, 0.0, 0.0)
        try:
            point = SpacetimePoint(tuple(float(ev.get(c, default[i])) for i, c in enumerate("xyz")), ev["t"])
        except (ValueError, OverflowError) as exc:
            raise ScenarioError(str(exc), path) from exc
        kraus = _kraus(ev["kraus"], f"{path}/kraus")
        if kraus.dim != dims[site]:
            raise ScenarioError(f"operators are {kraus.dim}x{kraus.dim} but site {site} has dim {dims[site]}",
                                f"{path}/kraus")
        events.append(ReductionEvent(ev.get("id", f"e{k}"), site, point, kraus))

    try:
        scenario = Scenario(dims, tuple(events), initial, positions)
    except (CausalQTError, ValueError) as exc:
        raise ScenarioError(str(exc), "initial" if "initial" in str(exc) or "mixture" in str(exc) else "events") from exc

    mode = doc.get("mode", {"kind": "exact"})
    return RunSpec(scenario, doc.get("engine", CAUSAL), doc.get("seed", 0), mode["kind"], mode.get("trials", 1000))


def parse_bell_config(source, overrides=None) -> tuple[BellConfig, dict | None]:
    """Build a BellConfig from a config document plus flag overrides.

    Returns the config and the optional ``sweep`` block.
    """
    doc = {} if source is None else (source if isinstance(source, dict) else load_document(source))
    doc = {**doc, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    _check_schema(doc, "bell")
    delay = doc.get("delay", {"model": "deterministic"})
    try:
        if delay["model"] == "exponential":
            if "rate" not in delay:
                raise ScenarioError("exponential delay needs a rate", "delay")
            model = DelayModel.exponential(delay["rate"])
        else:
            model = DelayModel.deterministic(delay.get("delta0", 0.0))
        kwargs = {"delay_a": model}
        for key, attr in (("L", "separation"), ("eps", "eps"), ("eta", "eta"), ("arrival_time", "arrival_time"),
                          ("engine", "engine"), ("trials", "trials"), ("exact", "exact"), ("seed", "seed")):
            if key in doc:
                kwargs[attr] = doc[key]
        if "angles" in doc:
            kwargs["angles"] = tuple(doc["angles"])
        return BellConfig(**kwargs), doc.get("sweep")
    except ScenarioError:
        raise
    except (CausalQTError, ValueError, OverflowError) as exc:
        raise ScenarioError(str(exc), "<config>") from exc


def parse_grid(text: str) -> list[float]:
    """``start:stop:steps`` with optional ``:log`` or ``:lin`` (default lin)."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ScenarioError("grid must look like start:stop:steps[:log|lin]", "grid")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ScenarioError(f"bad grid number: {exc}", "grid") from exc
    scale = parts[3] if len(parts) == 4 else "lin"
    if steps < 1 or scale not in ("log", "lin") or not (math.isfinite(start) and math.isfinite(stop)):
        raise ScenarioError("grid needs steps >= 1, finite bounds and scale log|lin", "grid")
    if steps == 1:
        return [start]
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ScenarioError("log grid bounds must be positive", "grid")
        return [float(v) for v in np.geomspace(start, stop, steps)]
    return [float(v) for v in np.linspace(start, stop, steps)]


def shipped_path(name: str) -> Path:
    """Filesystem path of one of the example files bundled with the package."""
    if name not in SHIPPED:
        raise KeyError(name)
    return Path(str(resources.files("causalqt").joinpath("scenarios", f"{name}.json")))


@dataclass
class ResultRecord:
    """Machine-readable output of ``causalqt run``."""

    engine: str
    mode: str
    seed: int
    event_ids: list
    entries: list
    truncated_mass: float = 0.0
    zero_norm_chains: list = field(default_factory=list)
    trials: int | None = None
    timing_s: float = 0.0
    tool: str = TOOL
    version: str = __version__

    @classmethod
    def from_distribution(cls, dist, seed, timing_s=0.0) -> "ResultRecord":
        entries = [{"outcome": list(o), "probability": float(p)} for o, p in dist.items()]
        chains = [[[eid, out] for eid, out in chain] for chain in dist.zero_norm_chains]
        return cls(dist.engine, "exact", seed, list(dist.event_ids), entries,
                   float(dist.truncated_mass), chains, None, timing_s)

    @classmethod
    def from_counts(cls, counts, event_ids, engine, seed, trials, timing_s=0.0) -> "ResultRecord":
        entries = [{"outcome": list(o), "count": int(n), "frequency": n / trials}
                   for o, n in sorted(counts.items())]
        return cls(engine, "sample", seed, list(event_ids), entries, 0.0, [], trials, timing_s)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))

    def write_csv(self, path) -> None:
        value_cols = ["probability"] if self.mode == "exact" else ["count", "frequency"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([*self.event_ids, *value_cols])
            for entry in self.entries:
                writer.writerow([*entry["outcome"], *(_fmt(entry[c]) for c in value_cols)])


def _fmt(value):
    # repr of a float is the shortest string that round-trips exactly
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_table(rows, columns, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
