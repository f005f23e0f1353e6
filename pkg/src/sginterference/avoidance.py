"""Feedback-free opportunistic transmission and the reuse-1 baseline.

A station decides, per (UE, RRB), whether to transmit at full power using
nothing but its own spectrum measurement and the UE's range.  The local
interference estimate is the measurement scaled by the squared ratio of
Q-factors for the UE's zone and the measurement zone.  Muted resources are
not handed to another UE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic, phy, rng as rngmod, sim
from .analytic import ZoneSpec

SCHEMES = ("hfr1", "proposed")


class MissingMeasurementError(RuntimeError):
    """A station was asked to decide without a spectrum measurement."""


@dataclass(frozen=True)
class TransmitDecision:
    ue: int
    rrb: int
    transmit: bool
    estimated_interference: float
    predicted_sir: float


@dataclass(frozen=True)
class LocalEstimator:
    """The only state a station consults when deciding to transmit."""

    measurement: sim.SpectrumMeasurement | None
    reference_distance: float
    relative_gradient: float = analytic.DEFAULT_RELATIVE_GRADIENT

    def measurement_zone(self) -> ZoneSpec:
        if self.measurement is None:
            raise MissingMeasurementError("no spectrum measurement available")
        d_n = self.measurement.measurement_range / self.reference_distance
        R_d = analytic.solve_observation_radius(d_n, relative=self.relative_gradient)
        return ZoneSpec(d_n, R_d)

    def interference_at(self, ue_range):
        """Estimated median interference at range(s) ``ue_range`` in metres."""
        zone_d = self.measurement_zone()
        r_n = np.asarray(ue_range, dtype=float) / self.reference_distance
        R_r = analytic.solve_observation_radius(r_n, relative=self.relative_gradient)
        return analytic.estimate_interference_at(
            self.measurement.median_power, None, zone_d,
            target_q=analytic.q_factor_array(r_n, R_r))


def predicted_sir(ue_range, estimator: LocalEstimator, tx_power: float,
                  pathloss: analytic.PathlossParams, noise: float = 0.0):
    est = estimator.interference_at(ue_range)
    signal = tx_power * pathloss.constant * np.asarray(ue_range, dtype=float) ** -pathloss.exponent
    denom = noise + est
    with np.errstate(divide="ignore"):
        pred = np.where(denom > 0, signal / np.where(denom > 0, denom, 1.0), np.inf)
    return est, pred


def transmit_decision(ue: int, rrb: int, ue_range: float, estimator: LocalEstimator,
                      tx_power: float, pathloss: analytic.PathlossParams,
                      sir_threshold: float, noise: float = 0.0) -> TransmitDecision:
    """Transmit at full power iff the predicted SIR strictly exceeds the threshold."""
    est, pred = predicted_sir(ue_range, estimator, tx_power, pathloss, noise)
    est, pred = float(est), float(pred)
    return TransmitDecision(ue, rrb, pred > sir_threshold, est, pred)


@dataclass(frozen=True, eq=False)
class CellLoad:
    station: int
    ue_positions: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    ue_ranges: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_ues(self) -> int:
        return len(self.ue_ranges)


def place_ues(drop: sim.Drop, deployment: sim.Deployment, mean_per_cell: float,
              g: np.random.Generator, max_rounds: int = 200) -> list[CellLoad]:
    """Poisson(``mean_per_cell``) UEs per cell, uniform over each cell's service area.

    Candidates are drawn uniformly over the drop and kept by the station that
    serves them (strongest mean received power) until its quota is met.
    """
    n = len(drop)
    quota = g.poisson(mean_per_cell, n)
    kept: list[list[np.ndarray]] = [[] for _ in range(n)]
    have = np.zeros(n, dtype=np.int64)
    powers = drop.powers(deployment)
    alpha = deployment.pathloss.exponent
    for _ in range(max_rounds):
        need = quota - have
        if not np.any(need > 0):
            break
        cand = sim.uniform_disc(g, max(64, 4 * int(need.sum())), drop.area_radius)
        dist = np.hypot(cand[:, None, 0] - drop.positions[None, :, 0],
                        cand[:, None, 1] - drop.positions[None, :, 1])
        serving = np.argmax(powers[None, :] * dist ** -alpha, axis=1)
        for s in np.nonzero(need > 0)[0]:
            pts = cand[serving == s][: need[s]]
            if len(pts):
                kept[s].append(pts)
                have[s] += len(pts)
    loads = []
    for s in range(n):
        pts = np.concatenate(kept[s]) if kept[s] else np.empty((0, 2))
        rng_ = np.hypot(pts[:, 0] - drop.positions[s, 0], pts[:, 1] - drop.positions[s, 1])
        loads.append(CellLoad(s, pts, rng_))
    return loads


def schedule_hfr1(cell: CellLoad, grid: phy.RrbGrid) -> np.ndarray:
    """Round-robin UE index per RRB (``-1`` when the cell has no UE)."""
    if cell.n_ues == 0:
        return np.full(grid.rrb_count, -1, dtype=np.int64)
    return np.arange(grid.rrb_count) % cell.n_ues


def schedule_proposed(cell: CellLoad, grid: phy.RrbGrid, estimator: LocalEstimator,
                      tx_power: float, pathloss: analytic.PathlossParams,
                      sir_threshold: float, noise: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Round-robin assignment plus the per-RRB transmit flag of the avoidance policy."""
    assign = schedule_hfr1(cell, grid)
    if cell.n_ues == 0:
        return assign, np.zeros(grid.rrb_count, dtype=bool)
    _, pred = predicted_sir(cell.ue_ranges, estimator, tx_power, pathloss, noise)
    return assign, (pred > sir_threshold)[assign]


@dataclass(frozen=True)
class ThroughputParams:
    grid: phy.RrbGrid = field(default_factory=phy.RrbGrid)
    table: phy.McsTable = field(default_factory=phy.McsTable.default)
    sir_threshold_db: float = phy.DEFAULT_SIR_THRESHOLD_DB
    noise: float = 0.0
    ues_per_cell: float = 10.0
    measurement_samples: int = 1000
    measurement_range: float = sim.DEFAULT_MEASUREMENT_RANGE
    n_fading: int = 4
    relative_gradient: float = analytic.DEFAULT_RELATIVE_GRADIENT
    pathloss_model: str = "power"

    @property
    def sir_threshold(self) -> float:
        return float(phy.db_to_linear(self.sir_threshold_db))


@dataclass(frozen=True)
class CellResult:
    throughput: dict  # scheme -> bit/s, averaged over fading realizations
    served_links: dict  # scheme -> transmitted (UE, RRB) links, summed over fading
    good_links: dict  # scheme -> transmitted links whose realized SIR exceeds the threshold


def _mean_gain(dist, powers, deployment: sim.Deployment, model: str):
    if model == "power":
        return powers * deployment.pathloss.constant * dist ** -deployment.pathloss.exponent
    if model == "umi":
        return powers * 10.0 ** (-phy.umi_pathloss_db(dist) / 10.0)
    raise ValueError(f"unknown pathloss model {model!r}")


def cell_throughput(drop: sim.Drop, deployment: sim.Deployment, params: ThroughputParams,
                    seed: int, schemes=SCHEMES, observed: int | None = None) -> CellResult:
    """Full-buffer downlink throughput of one observed cell under each scheme.

    The observed cell (default: the one nearest the centre) transmits on every
    RRB; every other cell is active on an RRB with its tier activity.  Both
    schemes see the same activity pattern and fading draws.  Muted links
    count as zero throughput.
    """
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    empty = {s: 0.0 for s in schemes}
    if len(drop) == 0:
        return CellResult(empty, dict(empty), dict(empty))
    obs = drop.central_station() if observed is None else observed
    grid = params.grid
    g = rngmod.stream(seed, rngmod.UES, drop.index)
    loads = place_ues(drop, deployment, params.ues_per_cell, g)
    if loads[obs].n_ues == 0:
        return CellResult(empty, dict(empty), dict(empty))

    n = len(drop)
    powers = drop.powers(deployment)
    assign = np.stack([schedule_hfr1(c, grid) for c in loads])  # (station, rrb)
    g_act = rngmod.stream(seed, rngmod.ACTIVITY, drop.index)
    active = sim.draw_activity(drop, deployment, grid.rrb_count, g_act) & (assign >= 0)
    active[obs] = True

    transmit = {"hfr1": active}
    if "proposed" in schemes:
        tx = np.zeros_like(active)
        eps = params.sir_threshold
        for c in loads:
            if c.n_ues == 0:
                continue
            meas = sim.measure_at_base(c.station, drop, deployment, params.measurement_samples,
                                       d=params.measurement_range, seed=seed)
            est = LocalEstimator(meas, deployment.reference_distance, params.relative_gradient)
            _, flags = schedule_proposed(c, grid, est, powers[c.station], deployment.pathloss,
                                         eps, params.noise)
            tx[c.station] = flags
        transmit["proposed"] = active & tx

    ue_idx = assign[obs]
    ue_pos = loads[obs].ue_positions[ue_idx]  # (rrb, 2)
    dist = np.hypot(ue_pos[:, None, 0] - drop.positions[None, :, 0],
                    ue_pos[:, None, 1] - drop.positions[None, :, 1])
    mean_rx = _mean_gain(dist, powers[None, :], deployment, params.pathloss_model)

    tput = {s: [] for s in schemes}
    served = {s: 0 for s in schemes}
    good = {s: 0 for s in schemes}
    g_fade = rngmod.stream(seed, rngmod.FADING, drop.index)
    for _ in range(params.n_fading):
        rx = g_fade.exponential(size=mean_rx.shape) * mean_rx
        signal = rx[:, obs]
        for s in schemes:
            on = transmit[s].T  # (rrb, station)
            interf = np.where(on, rx, 0.0).sum(axis=1) - np.where(on[:, obs], signal, 0.0)
            denom = interf + params.noise
            with np.errstate(divide="ignore", invalid="ignore"):
                sir_k = np.where(denom > 0, signal / denom, np.inf)
            link_on = on[:, obs]
            rate = np.where(link_on, phy.throughput(sir_k, params.table, grid.rrb_bandwidth), 0.0)
            tput[s].append(math.fsum(rate))
            served[s] += int(link_on.sum())
            good[s] += int((link_on & (sir_k > params.sir_threshold)).sum())
    return CellResult({s: math.fsum(v) / params.n_fading for s, v in tput.items()},
                      served, good)
