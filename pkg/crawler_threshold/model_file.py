"""JSON model files: arrival construction, service, obsolescence, K and costs."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from importlib_resources import files as file_resources
from importlib_resources.abc import Traversable

from .arrivals import (
    ArrivalKind,
    ModedArrival,
    compose_bmmap,
    compose_direct,
    compose_independent,
    compose_scaled,
    compose_thinned,
    validate_processes,
)
from .distributions import ph_to_dict, validate_ph
from .errors import CrawlerThresholdError, ModelFileError, ViolationsError
from .generator import QueueModel
from .optimizer import CostCoefficients
from .validate import validate

packaged_models = ["four_robots", "trace_fit"]

Source = Union[str, Path, Traversable, Mapping[str, Any]]


@dataclass
class LoadedModel:
    model: QueueModel
    costs: Optional[CostCoefficients]
    repairs: Tuple[str, ...] = ()
    validation: str = "strict"
    document: Dict[str, Any] = field(default_factory=dict, repr=False)


def packaged_model(name: str) -> Traversable:
    """A model file shipped with the package."""
    if name not in packaged_models:
        msg = f"Unknown packaged model {name!r}; available: {', '.join(packaged_models)}"
        raise ValueError(msg)
    return file_resources("crawler_threshold").joinpath("models", f"{name}.json")


def _read(source: Source) -> Dict[str, Any]:
    if isinstance(source, Mapping):
        return json.loads(json.dumps(source))
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        msg = f"Model file is not valid JSON: {exc}"
        raise ModelFileError(msg) from exc


def _matrices(process: Mapping[str, Any]) -> List:
    """D_0..D_kmax of a process entry; the batch form expands to D_k = d_k·D1."""
    if "D" in process:
        return process["D"]
    D1 = process["D1"]
    return [process["D0"]] + [[[d * v for v in row] for row in D1] for d in process["batch_pmf"]]


def _single(process: Mapping[str, Any], mode: str):
    return validate_processes([_matrices(process)], mode, label="process")[0]


def _arrival(document: Mapping[str, Any], mode: str) -> ModedArrival:
    kind = ArrivalKind(document["kind"])
    if kind is ArrivalKind.DIRECT:
        return compose_direct([_matrices(p) for p in document["modes"]], mode)
    if kind is ArrivalKind.INDEPENDENT:
        robots = validate_processes(
            [_matrices(p) for p in document["processes"]], mode, label="robot"
        )
        return compose_independent(robots)
    if kind is ArrivalKind.THINNED:
        return compose_thinned(_single(document["process"], mode), document["q"])
    if kind is ArrivalKind.BMMAP:
        return compose_bmmap(document["D0"], document["robots"])
    return compose_scaled(_single(document["process"], mode), document["factors"])


def load_model(source: Source, mode: Optional[str] = None) -> LoadedModel:
    """Parse, schema-check and build a model.

    ``mode`` overrides the file's ``validation`` field. Every invariant
    violation of the arrival process and the two PH distributions is
    collected into one ModelFileError."""
    document = _read(source)
    validate(document)
    validation = mode or document.get("validation", "strict")

    violations: List[str] = []
    parts = {}
    builders = {
        "arrival": lambda: _arrival(document["arrival"], validation),
        "service": lambda: validate_ph(**document["service"]),
        "obsolescence": lambda: validate_ph(**document["obsolescence"]),
    }
    for name, build in builders.items():
        try:
            parts[name] = build()
        except ViolationsError as exc:
            violations.extend(f"{name}: {v}" for v in exc.violations)
        except (CrawlerThresholdError, ValueError) as exc:
            violations.append(f"{name}: {exc}")
    if violations:
        msg = f"Model file has {len(violations)} invariant violation(s): " + "; ".join(violations)
        raise ModelFileError(msg, violations)

    arrival: ModedArrival = parts["arrival"]
    model = QueueModel(
        arrival=arrival,
        service=parts["service"],
        obsolescence=parts["obsolescence"],
        K=document["K"],
    )
    costs = CostCoefficients(**document["costs"]) if "costs" in document else None
    return LoadedModel(
        model=model,
        costs=costs,
        repairs=arrival.repairs,
        validation=validation,
        document=document,
    )


def dump_model(model: QueueModel, costs: Optional[CostCoefficients] = None) -> Dict[str, Any]:
    """Canonical document: explicit per-mode matrices, already valid in strict mode."""
    document: Dict[str, Any] = {
        "validation": "strict",
        "K": model.K,
        "arrival": {
            "kind": "direct",
            "modes": [{"D": [d.tolist() for d in bp.D]} for bp in model.arrival.modes],
        },
        "service": ph_to_dict(model.service),
        "obsolescence": ph_to_dict(model.obsolescence),
    }
    if costs is not None:
        document["costs"] = costs.as_dict()
    return document


def dumps_model(model: QueueModel, costs: Optional[CostCoefficients] = None) -> str:
    return json.dumps(dump_model(model, costs), indent=2, sort_keys=True)
