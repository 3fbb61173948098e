"""Generators for standard benchmark spaces and a JSON interchange format.

Each generator produces a graph whose shortest-path metric discretizes a
model geometry: a circle of given circumference, an interval with Gaussian
weights, a flat 2-torus, a unit-edge path, or a complete graph.  Specs are
declarative so a space can be regenerated at a finer resolution.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .space import MeasuredSpace, build_from_graph

KINDS = ("circle", "gaussian_interval", "torus2d", "path", "complete", "custom_file")


@dataclass(frozen=True)
class SpaceSpec:
    """Declarative description of a generated space."""

    kind: str
    n: int = 0
    m: int = 0
    length: float = 2 * math.pi
    sigma: float = 1.0
    width: float = 3.0
    side_x: float = 2 * math.pi
    side_y: float = 2 * math.pi
    path: str = ""

    def describe(self) -> str:
        # repr floats so parse_space_spec(describe()) reproduces the spec exactly
        if self.kind == "circle":
            return f"circle:{self.n}:{self.length!r}"
        if self.kind == "gaussian_interval":
            return f"gaussian_interval:{self.n}:{self.sigma!r}:{self.width!r}"
        if self.kind == "torus2d":
            return f"torus2d:{self.n}:{self.m}:{self.side_x!r}:{self.side_y!r}"
        if self.kind == "custom_file":
            return f"file:{self.path}"
        return f"{self.kind}:{self.n}"


def parse_space_spec(text: str) -> SpaceSpec:
    """Parse a compact spec string, e.g. 'circle:256:6.2832' or a file path.

    Forms: circle:N[:LENGTH], gaussian_interval:N[:SIGMA:WIDTH],
    torus2d:N:M[:SIDE_X:SIDE_Y], path:N, complete:N, file:PATH.  'gauss' and
    'torus' are accepted as shorthands.  A string naming an existing file is
    taken as a saved space.
    """
    if text.startswith("file:"):
        return SpaceSpec(kind="custom_file", path=text[5:])
    head, _, rest = text.partition(":")
    head = {"gauss": "gaussian_interval", "torus": "torus2d"}.get(head, head)
    args = rest.split(":") if rest else []
    try:
        if head == "circle":
            return SpaceSpec(kind="circle", n=int(args[0]),
                             length=float(args[1]) if len(args) > 1 else 2 * math.pi)
        if head == "gaussian_interval":
            return SpaceSpec(kind="gaussian_interval", n=int(args[0]),
                             sigma=float(args[1]) if len(args) > 1 else 1.0,
                             width=float(args[2]) if len(args) > 2 else 3.0)
        if head == "torus2d":
            return SpaceSpec(kind="torus2d", n=int(args[0]), m=int(args[1]),
                             side_x=float(args[2]) if len(args) > 2 else 2 * math.pi,
                             side_y=float(args[3]) if len(args) > 3 else 2 * math.pi)
        if head == "path":
            return SpaceSpec(kind="path", n=int(args[0]))
        if head == "complete":
            return SpaceSpec(kind="complete", n=int(args[0]))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad space spec {text!r}: {exc}") from None
    if os.path.exists(text):
        return SpaceSpec(kind="custom_file", path=text)
    raise ValueError(f"unknown space spec {text!r}; kinds are {', '.join(KINDS)}")


def _check_resolution(spec: SpaceSpec):
    if spec.n < 2:
        raise ValueError(f"{spec.kind} needs n >= 2, got n={spec.n}")


def _circle(spec: SpaceSpec) -> MeasuredSpace:
    _check_resolution(spec)
    if spec.length <= 0:
        raise ValueError(f"circle length must be positive, got {spec.length}")
    n, L = spec.n, spec.length
    step = L / n
    edges = [(i, (i + 1) % n, step) for i in range(n)]
    coords = np.arange(n) * step
    return build_from_graph(edges, np.ones(n), n, kind="circle",
                            params={"length": L}, coords=coords)


def _gaussian_interval(spec: SpaceSpec) -> MeasuredSpace:
    _check_resolution(spec)
    if spec.sigma <= 0:
        raise ValueError(f"sigma must be positive, got {spec.sigma}")
    if spec.width < 3 * spec.sigma:
        raise ValueError(
            f"width {spec.width} truncates the Gaussian too early; need >= 3*sigma = {3 * spec.sigma}"
        )
    n, W = spec.n, spec.width
    x = np.linspace(-W, W, n)
    step = 2 * W / (n - 1)
    edges = [(i, i + 1, step) for i in range(n - 1)]
    weights = np.exp(-(x ** 2) / (2 * spec.sigma ** 2))
    return build_from_graph(edges, weights, n, kind="gaussian_interval",
                            params={"sigma": spec.sigma, "width": W}, coords=x)


def _torus2d(spec: SpaceSpec) -> MeasuredSpace:
    if spec.n < 2 or spec.m < 2:
        raise ValueError(f"torus2d needs n, m >= 2, got {spec.n}, {spec.m}")
    if spec.side_x <= 0 or spec.side_y <= 0:
        raise ValueError("torus side lengths must be positive")
    n, m = spec.n, spec.m
    hx, hy = spec.side_x / n, spec.side_y / m
    edges = []
    for i in range(n):
        for j in range(m):
            k = i * m + j
            edges.append((k, ((i + 1) % n) * m + j, hx))
            edges.append((k, i * m + (j + 1) % m, hy))
    coords = np.array([(i * hx, j * hy) for i in range(n) for j in range(m)])
    return build_from_graph(edges, np.ones(n * m), n * m, kind="torus2d",
                            params={"n": n, "m": m, "side_x": spec.side_x,
                                    "side_y": spec.side_y}, coords=coords)


def _path(spec: SpaceSpec) -> MeasuredSpace:
    _check_resolution(spec)
    edges = [(i, i + 1, 1.0) for i in range(spec.n - 1)]
    coords = np.arange(spec.n, dtype=float)
    return build_from_graph(edges, np.ones(spec.n), spec.n, kind="path",
                            params={"n": spec.n}, coords=coords)


def _complete(spec: SpaceSpec) -> MeasuredSpace:
    _check_resolution(spec)
    edges = [(i, j, 1.0) for i in range(spec.n) for j in range(i + 1, spec.n)]
    return build_from_graph(edges, np.ones(spec.n), spec.n, kind="complete",
                            params={"n": spec.n})


def generate(spec: SpaceSpec) -> MeasuredSpace:
    builders = {
        "circle": _circle,
        "gaussian_interval": _gaussian_interval,
        "torus2d": _torus2d,
        "path": _path,
        "complete": _complete,
    }
    if spec.kind == "custom_file":
        return load_space(spec.path)
    if spec.kind not in builders:
        raise ValueError(f"unknown space kind {spec.kind!r}; kinds are {', '.join(KINDS)}")
    return builders[spec.kind](spec)


def refine(spec: SpaceSpec) -> SpaceSpec:
    """Spec for the next refinement level of the same geometry.

    Circle, torus, path, and complete double the point count; the Gaussian
    interval goes n -> 2n - 1 so existing grid points survive.  Spaces
    loaded from files carry no generator and cannot be refined.
    """
    if spec.kind == "custom_file":
        raise ValueError("a space loaded from a file has no refinement rule")
    if spec.kind == "gaussian_interval":
        return replace(spec, n=2 * spec.n - 1)
    if spec.kind == "torus2d":
        return replace(spec, n=2 * spec.n, m=2 * spec.m)
    return replace(spec, n=2 * spec.n)


def save_space(space: MeasuredSpace, path: str):
    """Write a space to JSON; loading the file reproduces it bit for bit."""
    seen = set()
    edges = []
    for i, nbrs in enumerate(space.adjacency):
        for j, length in nbrs:
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                edges.append([key[0], key[1], length])
    edges.sort(key=lambda e: (e[0], e[1]))
    doc = {
        "n": space.n,
        "edges": edges,
        "measure": space.measure.tolist(),
    }
    if space.labels is not None:
        doc["labels"] = list(space.labels)
    if space.coords is not None:
        doc["coords"] = space.coords.tolist()
    if space.kind != "custom":
        doc["kind"] = space.kind
        doc["params"] = space.params
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_space(path: str) -> MeasuredSpace:
    """Load a space saved by save_space or written by hand.

    Required keys: n, edges (triples [i, j, length]), measure.  Optional:
    labels, coords, kind, params.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read space file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"space file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError(f"space file {path} must hold a JSON object")
    for key in ("n", "edges", "measure"):
        if key not in doc:
            raise ValueError(f"space file {path} is missing key {key!r}")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"space file {path} has bad n={n!r}")
    edges = doc["edges"]
    for e in edges:
        if not isinstance(e, list) or len(e) != 3:
            raise ValueError(f"space file {path}: each edge must be [i, j, length], got {e!r}")
    return build_from_graph(
        [(e[0], e[1], e[2]) for e in edges],
        doc["measure"],
        n,
        kind=doc.get("kind", "custom"),
        params=doc.get("params"),
        coords=doc.get("coords"),
        labels=doc.get("labels"),
    )
