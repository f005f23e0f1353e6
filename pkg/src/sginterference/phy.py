"""Link-level maps: SIR of a downlink and discrete-MCS throughput."""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import sim

DEFAULT_SIR_THRESHOLD_DB = -6.0


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class McsTable:
    """Step map from SIR to spectral efficiency.

    Row ``i`` applies for ``thresholds_db[i] <= SIR < thresholds_db[i+1]``;
    below the first threshold the efficiency is exactly zero.
    """

    thresholds_db: np.ndarray
    efficiencies: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds_db, dtype=float)
        e = np.asarray(self.efficiencies, dtype=float)
        if t.ndim != 1 or t.shape != e.shape or len(t) == 0:
            raise ValueError("need matching, non-empty threshold and efficiency columns")
        if np.any(np.diff(t) <= 0):
            raise ValueError("SIR thresholds must be strictly increasing")
        if np.any(np.diff(e) < 0) or e[0] <= 0:
            raise ValueError("efficiencies must be positive and nondecreasing")
        object.__setattr__(self, "thresholds_db", t)
        object.__setattr__(self, "efficiencies", e)
        # ties are decided in the linear domain, so 10**(t/10) hits row t exactly
        object.__setattr__(self, "_thresholds_linear", 10.0 ** (t / 10.0))

    @property
    def cutoff_db(self) -> float:
        return float(self.thresholds_db[0])

    @classmethod
    def from_file(cls, path) -> "McsTable":
        """Parse whitespace columns ``sir_db efficiency``; ``#`` starts a comment."""
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'sir_db efficiency'")
            rows.append((float(parts[0]), float(parts[1])))
        if not rows:
            raise ValueError(f"{path}: no MCS rows")
        t, e = zip(*rows)
        return cls(np.array(t), np.array(e))

    @classmethod
    def default(cls) -> "McsTable":
        with resources.as_file(resources.files("sginterference") / "data" / "mcs_cqi15.txt") as p:
            return cls.from_file(p)

    def efficiency(self, sir_linear):
        """Spectral efficiency for linear SIR (scalar or array)."""
        s = np.asarray(sir_linear, dtype=float)
        idx = np.searchsorted(self._thresholds_linear, s, side="right") - 1
        out = np.where(idx >= 0, self.efficiencies[np.clip(idx, 0, None)], 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RrbGrid:
    bandwidth: float = 20e6
    rrb_count: int = 100
    rrb_bandwidth: float = 180e3

    def __post_init__(self):
        if self.rrb_count < 1 or not self.rrb_bandwidth > 0:
            raise ValueError("need at least one RRB of positive width")
        if self.rrb_count * self.rrb_bandwidth > self.bandwidth * (1 + 1e-12):
            raise ValueError("RRBs do not fit in the channel bandwidth")


def throughput(sir_linear, table: McsTable, rrb_bandwidth: float):
    """Bit rate carried by one RRB at the given SIR."""
    return table.efficiency(sir_linear) * rrb_bandwidth


def sir(ue: sim.UserEquipment, drop: sim.Drop, deployment: sim.Deployment, active=None,
        fading=None, noise: float = 0.0) -> float:
    """Downlink SIR of ``ue`` from its serving station, open access over all tiers.

    ``active`` and ``fading`` are per-station vectors for one RRB.  Antenna
    gain and shadowing are not modelled.  Returns ``inf`` when there is no
    interference and no noise; :func:`throughput` maps that to the top MCS.
    """
    s = ue.serving
    if active is not None and not active[s]:
        raise ValueError("serving station is silent on this RRB")
    gain, _ = sim.received_gain(ue.position, drop, deployment)
    h = np.ones(len(drop)) if fading is None else np.asarray(fading, dtype=float)
    signal = h[s] * gain[s]
    interference = sim.aggregate_interference(ue.position, drop, deployment, active=active,
                                              fading=h, exclude=s)
    denom = interference + noise
    if denom == 0:
        return math.inf
    return signal / denom


def umi_pathloss_db(distance_m, carrier_ghz: float = 2.0):
    """Urban-micro NLOS log-distance loss, ``36.7 log10(d) + 22.7 + 26 log10(fc)``.

    Only used for robustness runs; the analytic comparisons assume the
    pure power law.
    """
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    return 36.7 * np.log10(d) + 22.7 + 26.0 * math.log10(carrier_ghz)
