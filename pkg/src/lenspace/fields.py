"""Field constructors: analytic seeds on generator spaces and random fields.

Random fields are white noise smoothed by the evolution operator for a
short time t0 (default 10 * mesh_h^2), which caps their Lipschitz
constant at roughly diam/t0 while keeping them generic.  Analytic seeds
(cosine, coordinate, exponential tilts) are resolved against the
generator metadata carried by the space.
"""

from __future__ import annotations

import numpy as np

from .hopflax import apply
from .space import MeasuredSpace, ScalarField, make_field


def _axis(space: MeasuredSpace) -> np.ndarray:
    if space.coords is None or space.coords.shape[1] != 1:
        raise ValueError(f"space kind {space.kind!r} has no 1-d coordinate")
    return space.coords[:, 0]


def coordinate_field(space: MeasuredSpace) -> ScalarField:
    """The 1-d coordinate itself (arc position or interval position)."""
    return make_field(space, _axis(space))


def cosine_field(space: MeasuredSpace) -> ScalarField:
    """cos of the angle coordinate on a circle (or first torus axis)."""
    if space.kind == "circle":
        length = space.params["length"]
        return make_field(space, np.cos(2 * np.pi * _axis(space) / length))
    if space.kind == "torus2d":
        side = space.params["side_x"]
        return make_field(space, np.cos(2 * np.pi * space.coords[:, 0] / side))
    raise ValueError(f"cosine field needs a circle or torus2d space, not {space.kind!r}")


def tilt_field(space: MeasuredSpace, alpha: float) -> ScalarField:
    """Exponential tilt e^(alpha * x / 2) along the 1-d coordinate."""
    return make_field(space, np.exp(0.5 * float(alpha) * _axis(space)))


def random_smoothed_field(space: MeasuredSpace, rng, t0: float | None = None,
                          normalize: bool = True) -> ScalarField:
    """Gaussian noise pushed through the evolution for time t0."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    f = make_field(space, rng.standard_normal(space.n))
    if t0 is None:
        t0 = 10.0 * space.mesh_h ** 2
    if t0 > 0:
        f = apply(space, f, t0)
    if normalize:
        peak = float(np.abs(f.values).max())
        if peak > 0:
            f = make_field(space, f.values / peak)
    return f


def resolve_field(space: MeasuredSpace, text: str, seed: int = 0) -> ScalarField:
    """Turn a CLI field spec into a ScalarField.

    Specs: 'cos', 'coordinate', 'tilt:ALPHA', 'random' or 'random:IDX'
    (seeded stream), or a CSV file path (index,value rows).
    """
    if text == "cos":
        return cosine_field(space)
    if text in ("coordinate", "coord"):
        return coordinate_field(space)
    if text.startswith("tilt:"):
        return tilt_field(space, float(text[5:]))
    if text == "random" or text.startswith("random:"):
        idx = int(text[7:]) if text.startswith("random:") else 0
        return random_smoothed_field(space, np.random.default_rng([seed, idx]))
    if text.endswith(".csv"):
        return load_field_csv(space, text)
    raise ValueError(
        f"unknown field spec {text!r}; use cos, coordinate, tilt:A, random[:i], or a .csv path"
    )


def save_field_csv(f: ScalarField, path: str):
    with open(path, "w") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(f.values):
            fh.write(f"{i},{v:.17g}\n")


def load_field_csv(space: MeasuredSpace, path: str) -> ScalarField:
    try:
        with open(path) as fh:
            lines = fh.read().strip().splitlines()
    except OSError as exc:
        raise ValueError(f"cannot read field file {path}: {exc}") from None
    if not lines or lines[0].strip() != "index,value":
        raise ValueError(f"field file {path} must start with an index,value header")
    vals = np.full(space.n, np.nan)
    for line in lines[1:]:
        idx, _, val = line.partition(",")
        try:
            i = int(idx)
            x = float(val)
        except ValueError:
            raise ValueError(f"field file {path}: bad row {line!r}") from None
        if not (0 <= i < space.n):
            raise ValueError(f"field file {path}: index {i} outside 0..{space.n - 1}")
        vals[i] = x
    if np.isnan(vals).any():
        missing = int(np.flatnonzero(np.isnan(vals))[0])
        raise ValueError(f"field file {path}: no value for point {missing}")
    return make_field(space, vals)
