"""Experiment orchestration and CSV result tables with provenance."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analytic, avoidance, sim
from .analytic import ZoneSpec
from .config import KM2, ExperimentConfig
from .parallel import parallel_map

_BLOCK_DROPS = 1000


class VerificationError(ValueError):
    pass


@dataclass
class ResultTable:
    experiment_id: str
    columns: tuple[str, ...]
    rows: list[tuple]
    config: ExperimentConfig | None = None
    extra: dict = field(default_factory=dict)

    def body(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(_cell(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        body = self.body()
        head = [f"# experiment={self.experiment_id}",
                f"# code_version=sginterference {__version__}"]
        if self.config is not None:
            head += [f"# seed={self.config.seed}", f"# config_sha256={self.config.sha256()}"]
        head += [f"# {k}={v}" for k, v in self.extra.items()]
        head.append(f"# body_sha256={hashlib.sha256(body.encode()).hexdigest()}")
        if self.config is not None:
            head += ["#| " + line for line in self.config.to_ini().splitlines()]
        return "\n".join(head) + "\n" + body

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def verify_csv(text: str, config: ExperimentConfig | None = None) -> dict:
    """Re-hash a result CSV against its provenance header.

    Checks the body hash, and the config hash against the embedded config
    (and against ``config`` when given).  Returns the parsed header fields.
    """
    header: dict[str, str] = {}
    embedded: list[str] = []
    body_lines: list[str] = []
    for line in text.splitlines(keepends=True):
        if line.startswith("#| "):
            embedded.append(line[3:].rstrip("\n"))
        elif line.startswith("# "):
            key, _, val = line[2:].rstrip("\n").partition("=")
            header[key] = val
        else:
            body_lines.append(line)
    if "body_sha256" not in header:
        raise VerificationError("missing provenance header (body_sha256)")
    body = "".join(body_lines)
    if hashlib.sha256(body.encode()).hexdigest() != header["body_sha256"]:
        raise VerificationError("table body does not match body_sha256")
    if "config_sha256" in header:
        if not embedded:
            raise VerificationError("config hash present but config block missing")
        cfg = ExperimentConfig.from_ini("\n".join(embedded) + "\n")
        if cfg.sha256() != header["config_sha256"]:
            raise VerificationError("embedded config does not match config_sha256")
        if str(cfg.seed) != header.get("seed"):
            raise VerificationError("seed in header disagrees with embedded config")
        if config is not None and config.sha256() != header["config_sha256"]:
            raise VerificationError("table was produced by a different config")
    elif config is not None:
        raise VerificationError("table carries no config hash")
    return header


# -- zone sweep ------------------------------------------------------------


def _zone_unit(args):
    cfg, r_idx, block, n = args
    dep = cfg.deployment()
    rho = dep.reference_distance
    r = cfg.serving_ranges[r_idx]
    R_top = max(cfg.zone_radii)
    area = sim.Deployment(dep.tiers, R_top * rho, dep.pathloss)
    return sim.interference_at_range(area, r * rho, n, cfg.seed, radii=[R * rho for R in cfg.zone_radii],
                                     stream_index=r_idx * 100_000 + block)


def _drop_blocks(n_drops):
    blocks = []
    start = 0
    while start < n_drops:
        blocks.append(min(_BLOCK_DROPS, n_drops - start))
        start += _BLOCK_DROPS
    return blocks


def run_zone_sweep(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Median interference against zone radius, closed form next to simulation.

    Simulated interference counts active interferers within ``R`` of a
    receiver whose strongest station is at range ``r``.
    """
    dep = cfg.deployment()
    agg = dep.aggregate_density()
    blocks = _drop_blocks(cfg.n_drops)
    units = [(cfg, i, b, n) for i in range(len(cfg.serving_ranges)) for b, n in enumerate(blocks)]
    sims = parallel_map(_zone_unit, units, workers)
    rows = []
    pos = 0
    for i, r in enumerate(cfg.serving_ranges):
        samples = np.concatenate(sims[pos:pos + len(blocks)])
        pos += len(blocks)
        r_star = analytic.solve_observation_radius(r, relative=cfg.relative_gradient,
                                                   r_max=cfg.max_radius)
        for j, R in enumerate(cfg.zone_radii):
            if R < r:
                continue
            a = analytic.median_interference(ZoneSpec(r, R), agg)
            s = float(np.median(samples[:, j]))
            rel = (s - a) / a if a > 0 else math.nan
            rows.append((r, R, a, s, rel, r_star))
    return ResultTable(cfg.experiment_id,
                       ("r_norm", "R_norm", "analytic_median_w", "simulated_median_w",
                        "rel_error", "zone_radius_star"),
                       rows, cfg, {"n_drops": cfg.n_drops})


# -- density validation ----------------------------------------------------


def run_density_validation_cmd(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    if len(cfg.tiers) != 1:
        raise ValueError("density validation is defined for a single tier")
    t = cfg.tiers[0]
    rows = sim.run_density_validation(
        [c * KM2 for c in cfg.densities_km2], cfg.sample_counts, cfg.n_drops, cfg.seed,
        activity=t.activity, tx_power=t.tx_power_w, pathloss=cfg.pathloss,
        d=cfg.measurement_range_m, geometry=cfg.measurement_geometry,
        relative=cfg.relative_gradient, workers=workers)
    out = [(r["chi"] / KM2, r["lambda_true"] / KM2, r["lambda_inferred_mean"] / KM2,
            r["accuracy"], r["lambda_inferred_mean_stat"] / KM2, r["accuracy_mean_stat"],
            r["n_samples"], r["n_drops"]) for r in rows]
    return ResultTable(cfg.experiment_id,
                       ("chi_km2", "lambda_true_km2", "lambda_inferred_km2", "accuracy",
                        "lambda_inferred_mean_stat_km2", "accuracy_mean_stat",
                        "n_samples", "n_drops"),
                       out, cfg, {"measurement_geometry": cfg.measurement_geometry})


# -- throughput sweep ------------------------------------------------------


def _throughput_params(cfg: ExperimentConfig) -> avoidance.ThroughputParams:
    return avoidance.ThroughputParams(
        grid=cfg.grid(), table=cfg.mcs(), sir_threshold_db=cfg.sir_threshold_db,
        noise=cfg.noise_w, ues_per_cell=cfg.ues_per_cell, measurement_samples=cfg.n_samples,
        measurement_range=cfg.measurement_range_m, n_fading=cfg.n_fading,
        relative_gradient=cfg.relative_gradient, pathloss_model=cfg.pathloss_model)


def _throughput_unit(args):
    cfg, activity, k = args
    dep = cfg.deployment(activity=activity)
    drop = sim.generate_drop(dep, cfg.seed, index=k)
    res = avoidance.cell_throughput(drop, dep, _throughput_params(cfg), cfg.seed)
    return (res.throughput["hfr1"], res.throughput["proposed"],
            res.served_links["hfr1"], res.good_links["hfr1"],
            res.served_links["proposed"], res.good_links["proposed"])


def _mean_ci(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    m = math.fsum(x) / n
    if n < 2:
        return m, math.inf
    var = math.fsum((x - m) ** 2) / (n - 1)
    return m, 1.96 * math.sqrt(var / n)


def run_throughput_sweep(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Mean observed-cell throughput per scheme against neighbour activity.

    The same drops (positions, UEs, activity and fading streams) are reused
    at every activity level and for both schemes.  Confidence intervals are
    95% normal intervals over drops; ``diff`` is proposed minus HFR1, paired
    per drop.
    """
    units = [(cfg, a, k) for a in cfg.activity_fractions for k in range(cfg.n_drops)]
    res = parallel_map(_throughput_unit, units, workers)
    chi = cfg.total_density / KM2
    rows = []
    for i, a in enumerate(cfg.activity_fractions):
        block = np.array(res[i * cfg.n_drops:(i + 1) * cfg.n_drops], dtype=float)
        h_m, h_ci = _mean_ci(block[:, 0] / 1e6)
        p_m, p_ci = _mean_ci(block[:, 1] / 1e6)
        d_m, d_ci = _mean_ci((block[:, 1] - block[:, 0]) / 1e6)
        ratio = p_m / h_m if h_m > 0 else math.nan
        good_h = block[:, 3].sum() / block[:, 2].sum() if block[:, 2].sum() else math.nan
        good_p = block[:, 5].sum() / block[:, 4].sum() if block[:, 4].sum() else math.nan
        rows.append((a, a * chi, h_m, h_ci, p_m, p_ci, d_m, d_ci, ratio, good_h, good_p))
    return ResultTable(cfg.experiment_id,
                       ("activity", "lambda_km2", "hfr1_mbps", "hfr1_ci", "proposed_mbps",
                        "proposed_ci", "diff_mbps", "diff_ci", "ratio",
                        "hfr1_good_link_fraction", "proposed_good_link_fraction"),
                       rows, cfg, {"n_drops": cfg.n_drops})


EXPERIMENTS = {
    "zone-sweep": run_zone_sweep,
    "validate-density": run_density_validation_cmd,
    "throughput-sweep": run_throughput_sweep,
}
