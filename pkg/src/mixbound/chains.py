"""Chain spec files and the built-in chain families."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import yaml

from .kernel import STATIONARY, ChainModel, KernelError, validate_kernel

FIELDS = ("name", "states", "matrix", "f", "initial")
REQUIRED = ("states", "matrix", "f")
FAMILIES = ("two_state", "iid", "random_doeblin", "lazy")


class ChainSpecError(ValueError):
    """Malformed chain spec; the message names the file, line and field."""


def _marks(text: str) -> Dict[str, int]:
    """1-based line of every top-level key's value (and of each matrix row)."""
    marks: Dict[str, int] = {}
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return marks
    if not isinstance(node, yaml.MappingNode):
        return marks
    for key, value in node.value:
        marks[key.value] = value.start_mark.line + 1
        if key.value == "matrix" and isinstance(value, yaml.SequenceNode):
            for i, row in enumerate(value.value):
                marks[f"matrix[{i}]"] = row.start_mark.line + 1
    return marks


def _real_vector(raw, where: str, size: int) -> np.ndarray:
    if not isinstance(raw, list):
        raise ChainSpecError(f"{where}: expected a list of {size} numbers")
    if len(raw) != size:
        raise ChainSpecError(f"{where}: expected {size} entries, got {len(raw)}")
    out = []
    for j, x in enumerate(raw):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ChainSpecError(f"{where}[{j}]: {x!r} is not a number")
        out.append(float(x))
    vec = np.array(out)
    if not np.all(np.isfinite(vec)):
        raise ChainSpecError(f"{where}: entries must be finite")
    return vec


def load_chain_spec(text: str, source: str = "<string>") -> ChainModel:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ChainSpecError(f"{source}: parse error at {where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise ChainSpecError(f"{source}: top level must be a mapping with fields {', '.join(FIELDS)}")
    marks = _marks(text)

    def at(field_name: str) -> str:
        line = marks.get(field_name)
        return f"{source}:{line}: field '{field_name}'" if line else f"{source}: field '{field_name}'"

    unknown = sorted(set(data) - set(FIELDS))
    if unknown:
        raise ChainSpecError(f"{at(unknown[0])}: unknown field (allowed: {', '.join(FIELDS)})")
    for req in REQUIRED:
        if req not in data:
            raise ChainSpecError(f"{source}: missing required field '{req}'")

    states = data["states"]
    if isinstance(states, bool) or not isinstance(states, int) or states < 1:
        raise ChainSpecError(f"{at('states')}: must be a positive integer")
    matrix = data["matrix"]
    if not isinstance(matrix, list) or len(matrix) != states:
        got = len(matrix) if isinstance(matrix, list) else type(matrix).__name__
        raise ChainSpecError(f"{at('matrix')}: expected {states} rows, got {got}")
    rows = [_real_vector(row, at(f"matrix[{i}]"), states) for i, row in enumerate(matrix)]
    try:
        kernel = validate_kernel(rows)
    except KernelError as exc:
        raise ChainSpecError(f"{at('matrix')}: {exc}") from exc
    f = _real_vector(data["f"], at("f"), states)
    initial = data.get("initial", STATIONARY)
    if isinstance(initial, str):
        if initial != STATIONARY:
            raise ChainSpecError(f"{at('initial')}: must be a vector or the string 'stationary'")
    else:
        initial = _real_vector(initial, at("initial"), states)
    name = str(data.get("name", Path(source).stem))
    try:
        return ChainModel(kernel, f, initial, name)
    except KernelError as exc:
        raise ChainSpecError(f"{source}: {exc}") from exc


def parse_chain_spec(path) -> ChainModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ChainSpecError(f"{path}: cannot read: {exc}") from exc
    return load_chain_spec(text, str(path))


def dump_chain_spec(model: ChainModel) -> str:
    doc = {
        "name": model.name,
        "states": model.kernel.size,
        "matrix": [[float(x) for x in row] for row in np.asarray(model.kernel)],
        "f": [float(x) for x in model.f],
        "initial": STATIONARY if model.is_stationary else [float(x) for x in model.initial],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _indicator(size: int) -> np.ndarray:
    f = np.zeros(size)
    f[0] = 1.0
    return f


def _prob(name: str, value, lo_open: float = 0.0, hi: float = 1.0) -> float:
    v = float(value)
    if not lo_open < v <= hi:
        raise KernelError(f"{name}={v} outside ({lo_open}, {hi}]")
    return v


def _family_kernel(family: str, params: dict, seed: Optional[int]) -> np.ndarray:
    if family == "two_state":
        p = _prob("p", params.get("p", 0.3))
        q = _prob("q", params.get("q", 0.3))
        return np.array([[1.0 - p, p], [q, 1.0 - q]])
    if family == "iid":
        if "mu" in params:
            mu = np.asarray(params["mu"], dtype=float)
        else:
            size = int(params.get("size", 3))
            mu = np.full(size, 1.0 / size)
        return np.tile(mu, (mu.size, 1))
    if family == "random_doeblin":
        size = int(params.get("size", 10))
        eps = _prob("epsilon", params.get("epsilon", 0.5))
        if size < 1:
            raise KernelError("size must be positive")
        rng = np.random.default_rng(seed)
        nu = rng.dirichlet(np.ones(size))
        M = rng.dirichlet(np.ones(size), size=size)
        return eps * np.tile(nu, (size, 1)) + (1.0 - eps) * M
    if family == "lazy":
        lam = float(params.get("lam", params.get("lambda", 0.5)))
        if not 0.0 <= lam < 1.0:
            raise KernelError(f"lambda={lam} outside [0, 1)")
        base = params.get("base", "two_state")
        if base == "lazy":
            raise KernelError("lazy base must be a non-lazy family")
        rest = {k: v for k, v in params.items() if k not in ("base", "lam", "lambda")}
        Q = _family_kernel(base, rest, seed)
        return lam * np.eye(Q.shape[0]) + (1.0 - lam) * Q
    raise KernelError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def generate_chain(family: str, params: Optional[dict] = None, seed: Optional[int] = 0) -> ChainModel:
    """Build a chain of a named family with ``f`` the indicator of state 0.

    Families: ``two_state(p, q)``, ``iid(mu | size)``,
    ``random_doeblin(size, epsilon)`` and ``lazy(base, lam, **base_params)``.
    """
    params = dict(params or {})
    kernel = validate_kernel(_family_kernel(family, params, seed))
    label = ",".join(f"{k}={_fmt(v)}" for k, v in params.items())
    name = f"{family}({label})" if label else family
    return ChainModel(kernel, _indicator(kernel.size), STATIONARY, name)


def _fmt(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return "/".join(_fmt(x) for x in v)
    return str(v)


def parse_family(text: str):
    """``"two_state:p=0.3,q=0.3"`` -> ``("two_state", {"p": 0.3, "q": 0.3})``.

    Vector values are written with ``/`` separators, e.g. ``iid:mu=0.2/0.8``.
    """
    family, _, rest = text.partition(":")
    params: dict = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise KernelError(f"bad family parameter {item!r}; expected key=value")
        key = key.strip()
        value = value.strip()
        if "/" in value:
            params[key] = [float(x) for x in value.split("/")]
        else:
            try:
                num = float(value)
                params[key] = int(num) if key in ("size",) else num
            except ValueError:
                params[key] = value
    return family.strip(), params


def doeblin_tau_cap(epsilon: float) -> int:
    """``ceil(log(1/4) / log(1 - epsilon))``; 1 when ``epsilon = 1``."""
    if epsilon >= 1.0:
        return 1
    return max(1, math.ceil(math.log(0.25) / math.log(1.0 - epsilon)))
