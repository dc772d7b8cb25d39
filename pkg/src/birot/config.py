"""Scenario configuration in a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored. Lists of points are written as
``r s; r s; ...``. Unknown keys are errors, missing keys take the defaults below.

Example::

    grid.r_max = 4.0
    grid.n_r = 96
    initial.kind = gaussian_blob
    initial.center = 1.0 1.0
    time.dt = 0.01
    time.t_end = 1.0
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .fields import CELL_CENTERED, GridSpec, QuadrantPoint
from .kernel import QuadratureSpec
from .scenarios import INITIAL_DATA, DiagonalAntisymmetricPair, FromFile, GaussianBlob, RingProduct


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec = GridSpec(4.0, 4.0, 96, 96, CELL_CENTERED)
    initial_data: object = GaussianBlob()
    dt: float = 0.01
    t_end: float = 1.0
    quad: QuadratureSpec = QuadratureSpec()
    seed_threshold: float = 1e-3
    output_dir: str = "birot_out"
    probe_points: tuple = ()
    emit_every: int = 1
    checkpoint_every: int = 0
    figures: bool = True
    override_hypothesis: bool = False

    def validate(self) -> "ScenarioConfig":
        if not (self.dt > 0 and self.t_end >= self.dt):
            raise ConfigError("need dt > 0 and t_end >= dt")
        if self.emit_every < 1:
            raise ConfigError("emit_every must be a positive integer")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be nonnegative")
        if self.seed_threshold < 0:
            raise ConfigError("seed_threshold must be nonnegative")
        for p in self.probe_points:
            if p.r < 0 or p.s < 0:
                raise ConfigError(f"probe point {tuple(p)} lies outside the quadrant")
        return self

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def scaled(self, lam: float) -> "ScenarioConfig":
        """Member ``lam`` of the scaling family: lengths and times divided by ``lam``."""
        return dataclasses.replace(
            self, grid=self.grid.scaled(1.0 / lam), initial_data=self.initial_data.scaled(lam),
            dt=self.dt / lam, t_end=self.t_end / lam,
            probe_points=tuple(QuadrantPoint(p.r / lam, p.s / lam) for p in self.probe_points))


# ---------------------------------------------------------------------------
# text format

def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _point(text: str) -> QuadrantPoint:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"expected two coordinates, got {text!r}")
    return QuadrantPoint(float(parts[0]), float(parts[1]))


def _points(text: str) -> tuple:
    return tuple(_point(chunk) for chunk in text.split(";") if chunk.strip())


def _fmt_point(p) -> str:
    return f"{float(p[0])!r} {float(p[1])!r}"


# key -> parser
_SCALAR_KEYS = {
    "grid.r_max": float, "grid.s_max": float, "grid.n_r": int, "grid.n_s": int, "grid.stagger": str,
    "time.dt": float, "time.t_end": float,
    "quad.rule": str, "quad.n_theta": int, "quad.n_phi": int, "quad.near_singular_split": _bool,
    "quad.split_threshold": float, "quad.max_refine_levels": int,
    "seed.threshold": float, "output.dir": str, "output.emit_every": int,
    "output.checkpoint_every": int, "output.figures": _bool, "probes.points": _points,
    "run.override_hypothesis": _bool,
}

_INITIAL_KEYS = {
    "gaussian_blob": {"center": _point, "width": float, "amplitude": float},
    "diagonal_antisymmetric_pair": {"center": _point, "width": float, "amplitude": float},
    "ring_product": {"r0": float, "s0": float, "thickness": float, "amplitude": float},
    "from_file": {"path": str},
}


def parse_config_text(text: str) -> ScenarioConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    vals = {}
    for key, value in list(raw.items()):
        if key in _SCALAR_KEYS:
            try:
                vals[key] = _SCALAR_KEYS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
            del raw[key]

    default = ScenarioConfig()
    kind = raw.pop("initial.kind", default.initial_data.kind)
    if kind not in INITIAL_DATA:
        raise ConfigError(f"unknown initial.kind {kind!r}; choose from {sorted(INITIAL_DATA)}")
    init_kwargs = {}
    for name, parser in _INITIAL_KEYS[kind].items():
        key = f"initial.{name}"
        if key in raw:
            try:
                init_kwargs[name] = parser(raw.pop(key))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
    if raw:
        raise ConfigError(f"unknown keys: {', '.join(sorted(raw))}")

    try:
        g0 = default.grid
        grid = GridSpec(vals.get("grid.r_max", g0.r_max), vals.get("grid.s_max", g0.s_max),
                        vals.get("grid.n_r", g0.n_r), vals.get("grid.n_s", g0.n_s),
                        vals.get("grid.stagger", g0.stagger))
        q0 = default.quad
        quad = QuadratureSpec(vals.get("quad.rule", q0.rule), vals.get("quad.n_theta", q0.n_theta),
                              vals.get("quad.n_phi", q0.n_phi),
                              vals.get("quad.near_singular_split", q0.near_singular_split),
                              vals.get("quad.split_threshold", q0.split_threshold),
                              vals.get("quad.max_refine_levels", q0.max_refine_levels))
        initial = INITIAL_DATA[kind](**init_kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    return ScenarioConfig(
        grid=grid, initial_data=initial,
        dt=vals.get("time.dt", default.dt), t_end=vals.get("time.t_end", default.t_end), quad=quad,
        seed_threshold=vals.get("seed.threshold", default.seed_threshold),
        output_dir=vals.get("output.dir", default.output_dir),
        probe_points=vals.get("probes.points", default.probe_points),
        emit_every=vals.get("output.emit_every", default.emit_every),
        checkpoint_every=vals.get("output.checkpoint_every", default.checkpoint_every),
        figures=vals.get("output.figures", default.figures),
        override_hypothesis=vals.get("run.override_hypothesis", default.override_hypothesis),
    ).validate()


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


def _initial_lines(init) -> list[str]:
    lines = [f"initial.kind = {init.kind}"]
    if isinstance(init, (GaussianBlob, DiagonalAntisymmetricPair)):
        lines += [f"initial.center = {_fmt_point(init.center)}", f"initial.width = {init.width!r}",
                  f"initial.amplitude = {init.amplitude!r}"]
    elif isinstance(init, RingProduct):
        lines += [f"initial.r0 = {init.r0!r}", f"initial.s0 = {init.s0!r}",
                  f"initial.thickness = {init.thickness!r}", f"initial.amplitude = {init.amplitude!r}"]
    elif isinstance(init, FromFile):
        lines.append(f"initial.path = {init.path}")
    return lines


def serialize_config(cfg: ScenarioConfig) -> str:
    g, q = cfg.grid, cfg.quad
    lines = [
        f"grid.r_max = {g.r_max!r}", f"grid.s_max = {g.s_max!r}",
        f"grid.n_r = {g.n_r}", f"grid.n_s = {g.n_s}", f"grid.stagger = {g.stagger}",
        *_initial_lines(cfg.initial_data),
        f"time.dt = {cfg.dt!r}", f"time.t_end = {cfg.t_end!r}",
        f"quad.rule = {q.rule}", f"quad.n_theta = {q.n_theta}", f"quad.n_phi = {q.n_phi}",
        f"quad.near_singular_split = {str(q.near_singular_split).lower()}",
        f"quad.split_threshold = {q.split_threshold!r}",
        f"quad.max_refine_levels = {q.max_refine_levels}",
        f"seed.threshold = {cfg.seed_threshold!r}",
        f"output.dir = {cfg.output_dir}",
        f"output.emit_every = {cfg.emit_every}",
        f"output.checkpoint_every = {cfg.checkpoint_every}",
        f"output.figures = {str(cfg.figures).lower()}",
        f"probes.points = {'; '.join(_fmt_point(p) for p in cfg.probe_points)}",
        f"run.override_hypothesis = {str(cfg.override_hypothesis).lower()}",
    ]
    return "\n".join(lines) + "\n"


def save_config(path, cfg: ScenarioConfig) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_config(cfg))
