"""Run configuration: JSON loading with schema validation, set construction
and a small safe expression language for input functions."""

from __future__ import annotations

import ast
import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .compacts import DiscretizedCompact, SetPrimitive, build_compact, lattice_keys
from .spaces import InterpolationSet

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field."""


def load_schema(name: str = "config") -> dict:
    text = resources.files("holopatch").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_config(data: dict) -> dict:
    """Schema-check ``data``; raises :class:`ConfigError` naming the first bad field."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"config field {_field_path(e)}: {e.message}")
    return data


def read_config(path) -> dict:
    """Parse and validate a JSON file; errors carry the path and line."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return validate_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


# ---------------------------------------------------------------------------
# expressions

_FUNCS = {
    "conj": np.conj, "abs": np.abs, "real": np.real, "imag": np.imag, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "sign": np.sign,
    "where": np.where, "angle": np.angle,
}
_CONSTS = {"pi": np.pi, "j": 1j, "i": 1j}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Constant, ast.Load,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Compare,
          ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.IfExp)


def compile_expression(expr: str):
    """Vectorised function of ``z`` from an arithmetic expression.

    Allowed: numbers, ``z``, ``x`` (= Re z), ``y`` (= Im z), ``pi``, ``i``/``j``,
    ``+ - * / **``, comparisons and the functions conj, abs, real, imag, exp,
    log, sqrt, sin, cos, sign, where, angle.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc.msg}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ConfigError(f"expression {expr!r} uses unsupported syntax "
                              f"({type(node).__name__})")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS \
                and node.id not in ("z", "x", "y"):
            raise ConfigError(f"expression {expr!r} uses unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name)
                                               and node.func.id in _FUNCS):
            raise ConfigError(f"expression {expr!r} calls an unknown function")
    code = compile(tree, "<expr>", "eval")

    def f(z):
        z = np.asarray(z, dtype=complex)
        env = {"__builtins__": {}, **_FUNCS, **_CONSTS, "z": z, "x": z.real, "y": z.imag}
        with np.errstate(all="ignore"):
            out = eval(code, env)  # names restricted by the whitelist above
        return np.broadcast_to(np.asarray(out, dtype=complex), z.shape).copy()

    f.expr = expr
    return f


def compile_function(block: dict | None):
    """Map ``z -> (N, m)`` values from a ``function`` config block."""
    block = block or {"expr": "conj(z)"}
    if "components" in block:
        parts = [compile_expression(e) for e in block["components"]]
    elif "expr" in block:
        parts = [compile_expression(block["expr"])]
    else:
        raise ConfigError("function needs 'expr' or 'components'")

    def f(z):
        return np.column_stack([p(z) for p in parts])

    f.exprs = [p.expr for p in parts]
    return f


# ---------------------------------------------------------------------------
# sets


def _c(p) -> complex:
    return complex(p[0], p[1])


def primitive_from_config(block: dict) -> SetPrimitive:
    kind = block["kind"]
    need = {"disk": ("center", "radius"), "rectangle": ("corner0", "corner1"),
            "annulus": ("center", "r_in", "r_out"), "ellipse": ("center", "a", "b"),
            "polygon": ("vertices",), "polyline": ("vertices",)}[kind]
    missing = [k for k in need if k not in block]
    if missing:
        raise ConfigError(f"primitive {kind!r} is missing {', '.join(missing)}")
    if kind == "disk":
        return SetPrimitive.disk(_c(block["center"]), block["radius"])
    if kind == "rectangle":
        return SetPrimitive.rectangle(_c(block["corner0"]), _c(block["corner1"]))
    if kind == "annulus":
        return SetPrimitive.annulus(_c(block["center"]), block["r_in"], block["r_out"])
    if kind == "ellipse":
        return SetPrimitive.ellipse(_c(block["center"]), block["a"], block["b"], block.get("angle", 0.0))
    if kind == "polygon":
        return SetPrimitive.polygon([_c(v) for v in block["vertices"]])
    return SetPrimitive.polyline([_c(v) for v in block["vertices"]])


def point_compact(points, h: float) -> DiscretizedCompact:
    """A finite set as a compact: zero-weight samples, no interior."""
    pts = np.array([complex(p) for p in points], dtype=complex)
    keys = lattice_keys(pts, h)
    _, first = np.unique(keys, axis=0, return_index=True)
    pts = pts[np.sort(first)]
    z = np.zeros(0, complex)
    return DiscretizedCompact(h, pts, np.zeros(len(pts)), np.zeros(len(pts), bool), z, z, ())


def set_from_config(block: dict, h: float | None = None) -> DiscretizedCompact:
    """Discretise a ``set`` block; ``h`` overrides the configured pitch."""
    h = float(block["h"] if h is None else h)
    prims = [p for p in block["primitives"] if p["kind"] != "points"]
    pts = [_c(q) for p in block["primitives"] if p["kind"] == "points" for q in p["points"]]
    K = build_compact([primitive_from_config(p) for p in prims], h) if prims else None
    if pts:
        P = point_compact(pts, h)
        K = P if K is None else K.union(P)
    return K


def pair_from_config(block: dict, h: float | None = None) -> tuple[DiscretizedCompact, DiscretizedCompact]:
    """Discretise a ``pair`` block into (K1, K2) on a common lattice.

    Either ``k1`` and ``k2`` list their primitives, or ``union`` is cut by
    ``cut = [a, b]`` into ``K1 = {x <= b}`` and ``K2 = {x >= a}``.
    """
    h = float(block["h"] if h is None else h)
    if "union" in block:
        a, b = block["cut"]
        if not a < b:
            raise ConfigError("config field pair/cut: needs a < b")
        U = set_from_config({"h": h, "primitives": block["union"]})
        tol = 1e-9 * h
        return U.subset(U.points.real <= b + tol), U.subset(U.points.real >= a - tol)
    return tuple(set_from_config({"h": h, "primitives": block[k]}) for k in ("k1", "k2"))


def compile_matrix(entries) -> object:
    """``z -> (N, n, n)`` from a square table of expressions."""
    n = len(entries)
    if n < 2 or any(len(row) != n for row in entries):
        raise ConfigError("gamma entries must form a square table of size >= 2")
    fs = [[compile_expression(e) for e in row] for row in entries]

    def g(z):
        z = np.asarray(z, dtype=complex)
        return np.stack([np.stack([f(z) for f in row], axis=-1) for row in fs], axis=-2)

    return g


def interpolation_from_config(cfg: dict) -> InterpolationSet:
    return InterpolationSet(tuple(_c(p) for p in cfg.get("interpolation_points", [])))


@dataclass
class PipelineConfig:
    """Typed view of a validated configuration, with command-line overrides."""

    raw: dict
    h: float
    epsilon: float
    seed: int
    function: object
    P: InterpolationSet
    delta: float
    nonsmooth: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict, h: float | None = None, epsilon: float | None = None,
                  seed: int | None = None) -> "PipelineConfig":
        data = copy.deepcopy(validate_config(data))
        if "set" not in data:
            raise ConfigError("config field set: required for demos")
        hh = float(data["set"]["h"] if h is None else h)
        eps = float(data.get("epsilon", 0.05) if epsilon is None else epsilon)
        if not eps > 0:
            raise ConfigError("epsilon must be positive")
        sd = int(data.get("seed", 0) if seed is None else seed)
        data["set"]["h"] = hh
        data["epsilon"] = eps
        data["seed"] = sd
        return cls(data, hh, eps, sd, compile_function(data.get("function")),
                   interpolation_from_config(data), float(data.get("delta", 10.0)),
                   [_c(p) for p in data.get("nonsmooth_points", [])])

    def build_set(self) -> DiscretizedCompact:
        return set_from_config(self.raw["set"], self.h)

    def section(self, key: str) -> dict:
        return dict(self.raw.get(key, {}))
