"""Experiment configuration: one INI file, overridable from the command line.

Sections and keys (all optional; omitted values fall back to the defaults
below): [experiment] seed; [phantom] geometry, inclusion, loading, speckle;
[material] young, poisson; [elasticity] tol, max_iter; [solver] alpha, beta,
sigma, bc_mode, weak_weight, lin_tol, lin_max_iter; [multiscale] levels;
[tracker] patch/search radii, scores, detector thresholds; [boundary]
top/bottom/left/right edge specs like ``dirichlet 0 8`` or ``traction_free``.
When [boundary] is absent the standard compression setup is derived from
[phantom] compression: fixed top, displaced bottom, free sides.

``--set section.key=value`` overrides are applied after the file is read.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass

from .elasticity import BoundarySegment, BoundarySpec, MaterialParams
from .phantom import PhantomSpec
from .solver import SolverConfig

__all__ = ["ConfigError", "TrackerParams", "ExperimentConfig"]


class ConfigError(Exception):
    """Malformed or out-of-range configuration; maps to the usage exit code."""


_DEFAULTS: dict[str, dict[str, str]] = {
    "experiment": {"seed": "1729"},
    "phantom": {
        "width": "256",
        "height": "256",
        "inclusion_radius": "40",
        "stiffness_ratio": "5",
        "compression": "8",
        "n_bubbles": "200",
        "bubble_r_min": "2",
        "bubble_r_max": "4",
        "texture_low": "0.05",
        "texture_high": "0.30",
        "bubble_brightness": "0.55",
    },
    "material": {"young": "1.0", "poisson": "0.45"},
    "elasticity": {"tol": "1e-8", "max_iter": "20000"},
    "solver": {
        "alpha": "0.8",
        "beta": "0.5",
        "sigma": "5",
        "bc_mode": "dirichlet_hard",
        "weak_weight": "1e4",
        "lin_tol": "1e-8",
        "lin_max_iter": "10000",
    },
    "multiscale": {"levels": "4"},
    "tracker": {
        "patch_radius": "7",
        "search_radius": "15",
        "accept_score": "0.6",
        "detect_threshold": "0.5",
        "min_area": "9",
        "max_area": "400",
    },
}
_BOUNDARY_KEYS = ("top", "bottom", "left", "right")


@dataclass(frozen=True)
class TrackerParams:
    patch_radius: int = 7
    search_radius: int = 15
    accept_score: float = 0.6
    detect_threshold: float = 0.5
    min_area: int = 9
    max_area: int = 400


class ExperimentConfig:
    """Typed view over the merged defaults + file + overrides."""

    def __init__(self, parser: configparser.ConfigParser, source: str | None,
                 lines: list[str]):
        self._parser = parser
        self._source = source or "<defaults>"
        self._lines = lines

    @classmethod
    def load(cls, path: str | None = None, overrides: tuple[str, ...] = ()) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_dict(_DEFAULTS)
        lines: list[str] = []
        if path is not None:
            try:
                with open(path) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            lines = text.splitlines()
            try:
                parser.read_string(text, source=path)
            except configparser.Error as exc:
                raise ConfigError(str(exc)) from exc
        cfg = cls(parser, path, lines)
        for item in overrides:
            cfg._apply_override(item)
        cfg._check_known_keys()
        cfg._validate_values()
        return cfg

    def _validate_values(self) -> None:
        """Parse every typed view once so bad values fail at load time."""
        self.seed()
        self.phantom_spec()
        self.material()
        self.elasticity_params()
        self.solver_config()
        self.levels()
        self.tracker_params()
        self.boundary()

    def _apply_override(self, item: str) -> None:
        head, eq, value = item.partition("=")
        section, dot, key = head.partition(".")
        if not eq or not dot or not section or not key:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if not self._parser.has_section(section):
            self._parser.add_section(section)
        self._parser.set(section.strip(), key.strip(), value.strip())

    def _check_known_keys(self) -> None:
        for section in self._parser.sections():
            if section == "boundary":
                for key in self._parser.options(section):
                    if key not in _BOUNDARY_KEYS:
                        raise ConfigError(self._where(section, key) +
                                          f"unknown boundary edge {key!r}")
                continue
            if section not in _DEFAULTS:
                raise ConfigError(f"{self._source}: unknown section [{section}]")
            for key in self._parser.options(section):
                if key not in _DEFAULTS[section]:
                    raise ConfigError(self._where(section, key) +
                                      f"unknown key {key!r} in [{section}]")

    def _where(self, section: str, key: str) -> str:
        """Best-effort file:line prefix for error messages."""
        in_section = False
        for i, raw in enumerate(self._lines, start=1):
            stripped = raw.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                in_section = stripped[1:-1].strip() == section
            elif in_section:
                name = stripped.split("=")[0].split(":")[0].strip()
                if name == key:
                    return f"{self._source}:{i}: "
        return f"{self._source}: "

    def _get(self, section: str, key: str) -> str:
        return self._parser.get(section, key)

    def _float(self, section: str, key: str, *, low: float | None = None,
               low_open: bool = False, high: float | None = None) -> float:
        raw = self._get(section, key)
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(self._where(section, key) +
                              f"{section}.{key}: expected a number, got {raw!r}") from None
        if low is not None and (val < low or (low_open and val == low)):
            op = ">" if low_open else ">="
            raise ConfigError(self._where(section, key) +
                              f"{section}.{key}: must be {op} {low}, got {raw}")
        if high is not None and val > high:
            raise ConfigError(self._where(section, key) +
                              f"{section}.{key}: must be <= {high}, got {raw}")
        return val

    def _int(self, section: str, key: str, *, low: int | None = None) -> int:
        raw = self._get(section, key)
        try:
            val = int(raw)
        except ValueError:
            raise ConfigError(self._where(section, key) +
                              f"{section}.{key}: expected an integer, got {raw!r}") from None
        if low is not None and val < low:
            raise ConfigError(self._where(section, key) +
                              f"{section}.{key}: must be >= {low}, got {raw}")
        return val

    # typed views ---------------------------------------------------------

    def seed(self) -> int:
        return self._int("experiment", "seed", low=0)

    def phantom_spec(self) -> PhantomSpec:
        try:
            return PhantomSpec(
                width=self._int("phantom", "width", low=16),
                height=self._int("phantom", "height", low=16),
                inclusion_radius=self._float("phantom", "inclusion_radius", low=0, low_open=True),
                stiffness_ratio=self._float("phantom", "stiffness_ratio", low=0, low_open=True),
                compression=self._float("phantom", "compression"),
                n_bubbles=self._int("phantom", "n_bubbles", low=0),
                bubble_radius=(self._float("phantom", "bubble_r_min", low=0, low_open=True),
                               self._float("phantom", "bubble_r_max", low=0, low_open=True)),
                seed=self.seed(),
                young=self._float("material", "young", low=0, low_open=True),
                poisson=self._float("material", "poisson", low=0, high=0.4999),
                texture_range=(self._float("phantom", "texture_low", low=0),
                               self._float("phantom", "texture_high", high=1)),
                bubble_brightness=self._float("phantom", "bubble_brightness", low=0, low_open=True,
                                              high=1),
            )
        except ValueError as exc:
            raise ConfigError(f"{self._source}: [phantom]: {exc}") from exc

    def material(self) -> MaterialParams:
        try:
            return MaterialParams.from_young_poisson(
                self._float("material", "young", low=0, low_open=True),
                self._float("material", "poisson", low=0, high=0.4999))
        except ValueError as exc:
            raise ConfigError(f"{self._source}: [material]: {exc}") from exc

    def elasticity_params(self) -> tuple[float, int]:
        return (self._float("elasticity", "tol", low=0, low_open=True),
                self._int("elasticity", "max_iter", low=1))

    def solver_config(self, **overrides) -> SolverConfig:
        """SolverConfig from [solver]; keyword overrides win (ablation variants)."""
        kwargs: dict = dict(
            alpha=self._float("solver", "alpha", low=0),
            beta=self._float("solver", "beta", low=0),
            sigma=self._float("solver", "sigma", low=0, low_open=True),
            bc_mode=self._get("solver", "bc_mode"),
            weak_weight=self._float("solver", "weak_weight", low=0, low_open=True),
            lin_tol=self._float("solver", "lin_tol", low=0, low_open=True),
            lin_max_iter=self._int("solver", "lin_max_iter", low=1),
        )
        kwargs.update(overrides)
        try:
            return SolverConfig(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{self._source}: [solver]: {exc}") from exc

    def levels(self) -> int:
        return self._int("multiscale", "levels", low=1)

    def tracker_params(self) -> TrackerParams:
        return TrackerParams(
            patch_radius=self._int("tracker", "patch_radius", low=1),
            search_radius=self._int("tracker", "search_radius", low=1),
            accept_score=self._float("tracker", "accept_score", low=-1, high=1),
            detect_threshold=self._float("tracker", "detect_threshold"),
            min_area=self._int("tracker", "min_area", low=1),
            max_area=self._int("tracker", "max_area", low=1),
        )

    def boundary(self) -> BoundarySpec:
        if not self._parser.has_section("boundary"):
            return BoundarySpec.compression(self._float("phantom", "compression"))
        segments = []
        for key in _BOUNDARY_KEYS:
            if not self._parser.has_option("boundary", key):
                continue
            raw = self._get("boundary", key).split()
            if not raw:
                raise ConfigError(self._where("boundary", key) + f"boundary.{key}: empty spec")
            kind = raw[0]
            if kind == "dirichlet":
                if len(raw) != 3:
                    raise ConfigError(self._where("boundary", key) +
                                      f"boundary.{key}: expected 'dirichlet UX UY', got {raw!r}")
                try:
                    value = (float(raw[1]), float(raw[2]))
                except ValueError:
                    raise ConfigError(self._where("boundary", key) +
                                      f"boundary.{key}: non-numeric dirichlet value") from None
                segments.append(BoundarySegment(key, "dirichlet", value))
            elif kind in ("traction_free", "natural") and len(raw) == 1:
                segments.append(BoundarySegment(key, kind))
            else:
                raise ConfigError(self._where("boundary", key) +
                                  f"boundary.{key}: unknown spec {' '.join(raw)!r}")
        return BoundarySpec(segments)

    # reproducibility -----------------------------------------------------

    def canonical_text(self) -> str:
        chunks = []
        for section in sorted(self._parser.sections()):
            chunks.append(f"[{section}]")
            for key in sorted(self._parser.options(section)):
                chunks.append(f"{key} = {self._parser.get(section, key)}")
        return "\n".join(chunks) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()
