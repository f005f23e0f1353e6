"""Experiment configuration: an INI file with fixed sections.

Grammar (``configparser`` syntax, ``;`` or ``#`` comments, empty value means
"derive the default")::

    [experiment]   id, seed
    [network]      pathloss_exponent, pathloss_constant, n_cells, area_radius_m,
                   guard_radius_m, measurement_range_m
    [tier.<name>]  deployed_density_km2, tx_power_w, activity   (one per tier, in order)
    [sampling]     n_drops, n_samples, n_fading
    [zone]         relative_gradient, max_radius
    [phy]          mcs_table, bandwidth_hz, rrb_count, rrb_bandwidth_hz,
                   sir_threshold_db, noise_w, ues_per_cell, pathloss_model
    [sweep]        activity_fractions, serving_ranges, zone_radii, densities_km2,
                   sample_counts, measurement_geometry

Lists are comma separated.  Ranges and radii under ``[sweep]`` are in units
of the mean cell radius.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import analytic, phy, sim
from .analytic import PathlossParams

KM2 = 1e-6  # stations per km^2 -> per m^2


@dataclass(frozen=True)
class TierConfig:
    name: str = "macro"
    deployed_density_km2: float = 5.0
    tx_power_w: float = 40.0
    activity: float = 1.0


_SECTIONS = {
    "experiment": ("experiment_id", "seed"),
    "network": ("pathloss_exponent", "pathloss_constant", "n_cells", "area_radius_m",
                "guard_radius_m", "measurement_range_m"),
    "sampling": ("n_drops", "n_samples", "n_fading"),
    "zone": ("relative_gradient", "max_radius"),
    "phy": ("mcs_table", "bandwidth_hz", "rrb_count", "rrb_bandwidth_hz", "sir_threshold_db",
            "noise_w", "ues_per_cell", "pathloss_model"),
    "sweep": ("activity_fractions", "serving_ranges", "zone_radii", "densities_km2",
              "sample_counts", "measurement_geometry"),
}
_KEY_ALIASES = {"experiment_id": "id"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str = "default"
    seed: int = 1
    tiers: tuple[TierConfig, ...] = (TierConfig(),)
    pathloss_exponent: float = 4.0
    pathloss_constant: float = 1e-4
    n_cells: float = 35.0
    area_radius_m: float | None = None
    guard_radius_m: float = 0.0
    measurement_range_m: float = sim.DEFAULT_MEASUREMENT_RANGE
    n_drops: int = 200
    n_samples: int = 1000
    n_fading: int = 4
    relative_gradient: float = analytic.DEFAULT_RELATIVE_GRADIENT
    max_radius: float = analytic.DEFAULT_MAX_RADIUS
    mcs_table: str | None = None
    bandwidth_hz: float = 20e6
    rrb_count: int = 100
    rrb_bandwidth_hz: float = 180e3
    sir_threshold_db: float = phy.DEFAULT_SIR_THRESHOLD_DB
    noise_w: float = 0.0
    ues_per_cell: float = 10.0
    pathloss_model: str = "power"
    activity_fractions: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    serving_ranges: tuple[float, ...] = (0.1, 0.25, 0.5, 0.75, 1.0)
    zone_radii: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0)
    densities_km2: tuple[float, ...] = (2.0, 5.0, 10.0)
    sample_counts: tuple[int, ...] = (1000, 5000)
    measurement_geometry: str = "resampled"

    def __post_init__(self):
        if not self.tiers:
            raise ValueError("config needs at least one [tier.*] section")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.measurement_geometry not in ("resampled", "frozen"):
            raise ValueError("measurement_geometry must be 'resampled' or 'frozen'")
        if self.pathloss_model not in ("power", "umi"):
            raise ValueError("pathloss_model must be 'power' or 'umi'")
        if self.n_drops < 1 or self.n_samples < 1 or self.n_fading < 1:
            raise ValueError("sampling counts must be positive")

    # -- derived objects ------------------------------------------------

    @property
    def pathloss(self) -> PathlossParams:
        return PathlossParams(self.pathloss_exponent, self.pathloss_constant)

    @property
    def total_density(self) -> float:
        return math.fsum(t.deployed_density_km2 for t in self.tiers) * KM2

    @property
    def reference_distance(self) -> float:
        return analytic.mean_cell_radius(self.total_density)

    def area_radius(self) -> float:
        if self.area_radius_m is not None:
            return self.area_radius_m
        return math.sqrt(self.n_cells / (math.pi * self.total_density))

    def deployment(self, activity: float | None = None, area_radius: float | None = None) -> sim.Deployment:
        tiers = tuple(sim.TierDeployment(t.deployed_density_km2 * KM2, t.tx_power_w,
                                         t.activity if activity is None else activity)
                      for t in self.tiers)
        radius = self.area_radius() if area_radius is None else area_radius
        guard = self.guard_radius_m if area_radius is None else 0.0
        return sim.Deployment(tiers, radius, self.pathloss, guard)

    def mcs(self) -> phy.McsTable:
        return phy.McsTable.default() if self.mcs_table is None else phy.McsTable.from_file(self.mcs_table)

    def grid(self) -> phy.RrbGrid:
        return phy.RrbGrid(self.bandwidth_hz, self.rrb_count, self.rrb_bandwidth_hz)

    # -- serialization --------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for section, keys in _SECTIONS.items():
            cp[section] = {_KEY_ALIASES.get(k, k): _fmt(getattr(self, k)) for k in keys}
            if section == "network":
                for t in self.tiers:
                    cp[f"tier.{t.name}"] = {
                        "deployed_density_km2": _fmt(t.deployed_density_km2),
                        "tx_power_w": _fmt(t.tx_power_w),
                        "activity": _fmt(t.activity),
                    }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        cp.read_string(text)
        types = {f.name: f.type for f in fields(cls)}
        kwargs: dict = {}
        tiers = []
        for section in cp.sections():
            if section.startswith("tier."):
                s = cp[section]
                tiers.append(TierConfig(section[5:], float(s["deployed_density_km2"]),
                                        float(s["tx_power_w"]), float(s.get("activity", "1"))))
                continue
            if section not in _SECTIONS:
                raise ValueError(f"unknown config section [{section}]")
            allowed = {_KEY_ALIASES.get(k, k): k for k in _SECTIONS[section]}
            for key, raw in cp[section].items():
                if key not in allowed:
                    raise ValueError(f"unknown key '{key}' in [{section}]")
                name = allowed[key]
                kwargs[name] = _parse(raw, types[name])
        if tiers:
            kwargs["tiers"] = tuple(tiers)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_ini(Path(path).read_text())

    def sha256(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, typ):
    raw = raw.strip()
    t = str(typ)
    if raw == "" and "None" in t:
        return None
    if t.startswith("tuple[float"):
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if t.startswith("tuple[int"):
        return tuple(int(float(x)) for x in raw.split(",") if x.strip())
    if t.startswith("int"):
        return int(raw)
    if t.startswith("float"):
        return float(raw)
    return raw
