"""INI-backed experiment configuration.

One file drives the whole pipeline: model and grid, parameter-space
discretization, basis method, hyper-reduction, integrator settings, and
output location. Four presets ship with the package: ``wave-paper`` /
``nls-paper`` at publication scale and ``wave-desk`` / ``nls-desk`` shrunk
to interactive size (paper-scale runs take minutes and stay out of CI).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .integrators import NewtonConfig
from .models import GridSpec, build_nls_model, build_wave_model

__all__ = ["ExperimentConfig", "load_config", "preset_names", "parameter_grid"]

PRESETS = ("wave-paper", "wave-desk", "nls-paper", "nls-desk")


@dataclass
class ExperimentConfig:
    """Flat view of one experiment file; see the bundled presets."""

    # [model]
    kind: str = "wave"
    grid_points: int = 100
    domain_length: float = 1.0
    domain_scale: float = 0.11
    dt: float = 0.01
    t_final: float = 30.0
    c_squared: float = 0.1
    wave_speed: float = 1.0

    # [parameters]
    points_per_dimension: int = 3
    lower: float = 0.0
    upper: float = 1.0
    test_parameter: tuple = (0.8456, 0.1320, 0.9328, 0.5809)

    # [basis]
    method: str = "greedy"
    delta: float = 5e-3
    max_pairs: int = 10
    pod_columns: int = 20
    indicator: str = "hamiltonian_error"

    # [deim]
    deim_columns: int = 16
    sites: int = 8
    sdeim_delta: float = 1e-4
    sdeim_max_pairs: int = 8

    # [integrate]
    scheme: str = "stormer_verlet"
    variant: str = "position"
    newton_tol: float = 1e-12
    newton_max_iters: int = 50
    newton_fd_step: float = 1e-7
    store_every: int = 1

    # [output]
    directory: str = "out"

    # [run]
    seed: int = 0
    jobs: int = 1
    fresh_snapshots: bool = False

    _SECTIONS = {
        "model": ("kind", "grid_points", "domain_length", "domain_scale", "dt", "t_final",
                  "c_squared", "wave_speed"),
        "parameters": ("points_per_dimension", "lower", "upper", "test_parameter"),
        "basis": ("method", "delta", "max_pairs", "pod_columns", "indicator"),
        "deim": ("deim_columns", "sites", "sdeim_delta", "sdeim_max_pairs"),
        "integrate": ("scheme", "variant", "newton_tol", "newton_max_iters", "newton_fd_step",
                      "store_every"),
        "output": ("directory",),
        "run": ("seed", "jobs", "fresh_snapshots"),
    }

    def __post_init__(self):
        if self.kind not in ("wave", "nls"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        for name in ("delta", "sdeim_delta", "newton_tol", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.grid_points < 3:
            raise ConfigError("grid_points must be at least 3")
        if isinstance(self.test_parameter, (int, float)):
            self.test_parameter = (float(self.test_parameter),)
        self.test_parameter = tuple(float(v) for v in self.test_parameter)

    # -- model helpers -----------------------------------------------------

    @property
    def grid(self):
        length = self.domain_length if self.kind == "wave" else 2.0 * np.pi / self.domain_scale
        return GridSpec(length=length, points=self.grid_points, dt=self.dt, t_final=self.t_final)

    def build_model(self):
        if self.kind == "wave":
            return build_wave_model(self.grid, c_squared=self.c_squared)
        return build_nls_model(self.grid, wave_speed=self.wave_speed)

    @property
    def parameter_dim(self):
        return 4 if self.kind == "wave" else 1

    def parameter_grid(self):
        return parameter_grid(
            self.parameter_dim, self.points_per_dimension, self.lower, self.upper
        )

    def newton(self):
        return NewtonConfig(
            tol=self.newton_tol, max_iters=self.newton_max_iters, fd_step=self.newton_fd_step
        )

    # -- serialization -----------------------------------------------------

    @classmethod
    def from_ini(cls, text):
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as err:
            raise ConfigError(f"cannot parse config: {err}") from err
        values = {}
        casts = {f.name: f.type for f in fields(cls)}
        defaults = cls()
        for section, keys in cls._SECTIONS.items():
            if not parser.has_section(section):
                continue
            for key in parser.options(section):
                if key not in keys:
                    raise ConfigError(f"unknown option [{section}] {key}")
                raw = parser.get(section, key)
                values[key] = _convert(raw, getattr(defaults, key))
        try:
            return cls(**values)
        except TypeError as err:
            raise ConfigError(str(err)) from err

    def to_ini(self):
        parser = configparser.ConfigParser()
        for section, keys in self._SECTIONS.items():
            parser.add_section(section)
            for key in keys:
                value = getattr(self, key)
                if isinstance(value, tuple):
                    text = ", ".join(format(v, ".17g") for v in value)
                elif isinstance(value, float):
                    text = format(value, ".17g")
                else:
                    text = str(value)
                parser.set(section, key, text)
        out = io.StringIO()
        parser.write(out)
        return out.getvalue()


def _convert(raw, default):
    raw = raw.strip()
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    return raw


def parameter_grid(dim, points_per_dimension, lower, upper):
    """Equidistant tensor grid over the box [lower, upper]^dim."""
    if points_per_dimension < 1:
        raise ConfigError("points_per_dimension must be at least 1")
    axis = np.linspace(lower, upper, points_per_dimension)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def preset_names():
    return PRESETS


def load_config(source=None, preset=None):
    """Load a config from a file path or a named preset."""
    if (source is None) == (preset is None):
        raise ConfigError("specify exactly one of a config path or a preset name")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {PRESETS}")
        text = resources.files("hamrom.presets").joinpath(f"{preset}.ini").read_text()
        return ExperimentConfig.from_ini(text)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return ExperimentConfig.from_ini(path.read_text())
