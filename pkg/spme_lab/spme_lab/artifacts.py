# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Output files: CSV tables with round-trip float formatting, text and JSON reports, binary field snapshots and the
per-run manifest.
"""

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from spme_lab import __version__
from spme_lab.estimators import DecayFit, EnsembleEstimate
from spme_lab.inequalities import InequalityReport
from spme_lab.particles import ComparisonReport, ParticleRun
from spme_lab.solver import ConvergenceStudy, EnergyBudget, PathState, Trajectory, hgamma_sq, lm1_norm, power_h1g

MANIFEST_NAME = "manifest.json"
_SNAPSHOT_DTYPE = np.dtype("<f8")
_HEADER_DTYPE = np.dtype("<u8")

ENSEMBLE_COLUMNS = ("t", "functional", "mean", "variance", "ci_half_width", "paths", "blowups")
FIT_COLUMNS = ("functional", "t_lo", "t_hi", "slope", "intercept", "r_squared", "target_slope")
TRAJECTORY_COLUMNS = ("t", "hgamma_sq", "lm1_norm", "power_h1g", "blowup_flag")
BUDGET_COLUMNS = ("t", "dt", "d_norm", "drift_visc", "drift_nl", "ito_correction", "martingale_part", "residual")
PARTICLE_COLUMNS = ("run", "t", "population", "total_mass", "center_of_mass", "second_moment")
CONVERGENCE_COLUMNS = ("J", "l1_error", "steps", "refinement_ratio")


def format_cell(value: Any) -> str:
    """Shortest round-trip text of a cell: repr for floats, 0/1 for booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, "r", newline="") as handle:
        return list(csv.DictReader(handle))


def trajectory_rows(trajectory: Trajectory) -> List[Tuple[float, float, float, float, bool]]:
    cfg = trajectory.config
    rows = []
    for state in trajectory.states:
        rows.append(
            (
                state.t,
                hgamma_sq(state, cfg.gamma_track),
                lm1_norm(state, cfg.m),
                power_h1g(state, cfg.m, cfg.gamma_track, cfg.oversampling),
                state.blowup_flag,
            )
        )
    if trajectory.blowup_flag:
        rows.append((float(trajectory.blowup_time or 0.0), np.nan, np.nan, np.nan, True))
    return rows


def write_trajectory_csv(path: Path, trajectory: Trajectory) -> Path:
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(trajectory))


def write_budget_csv(path: Path, budget: EnergyBudget) -> Path:
    columns = (
        budget.times,
        budget.dt,
        budget.d_norm,
        budget.drift_visc,
        budget.drift_nl,
        budget.ito_correction,
        budget.martingale_part,
        budget.residual,
    )
    return write_csv(path, BUDGET_COLUMNS, zip(*columns))


def write_ensemble_csv(path: Path, estimate: EnsembleEstimate) -> Path:
    return write_csv(path, ENSEMBLE_COLUMNS, estimate.rows())


def write_fits_csv(path: Path, fits: Sequence[DecayFit]) -> Path:
    return write_csv(path, FIT_COLUMNS, (fit.to_row() for fit in fits))


def write_particle_csv(path: Path, runs: Sequence[ParticleRun]) -> Path:
    rows = [(index,) + row for index, run in enumerate(runs) for row in run.rows()]
    return write_csv(path, PARTICLE_COLUMNS, rows)


def write_density_csv(path: Path, times: np.ndarray, centers: np.ndarray, profiles: np.ndarray) -> Path:
    """One row per time: t followed by the density at every bin centre."""
    header = ["t"] + [f"x={format_cell(x)}" for x in centers]
    return write_csv(path, header, ([t] + list(profile) for t, profile in zip(times, profiles)))


def write_comparison_csv(path: Path, report: ComparisonReport) -> Path:
    header = (
        "t",
        "particle_mass",
        "particle_mass_ci",
        "spde_mass",
        "spde_mass_ci",
        "particle_second_moment",
        "particle_second_moment_ci",
        "spde_second_moment",
        "spde_second_moment_ci",
        "l1_distance",
    )
    rows = []
    for i, t in enumerate(report.times):
        rows.append(
            (
                t,
                report.particle_mass.mean[i],
                report.particle_mass.half_width[i],
                report.spde_mass.mean[i],
                report.spde_mass.half_width[i],
                report.particle_second_moment.mean[i],
                report.particle_second_moment.half_width[i],
                report.spde_second_moment.mean[i],
                report.spde_second_moment.half_width[i],
                report.l1_distance[i],
            )
        )
    return write_csv(path, header, rows)


def write_convergence_csv(path: Path, study: ConvergenceStudy) -> Path:
    ratios = [np.nan] + study.refinement_ratios()
    rows = [(row.J, row.l1_error, row.steps, ratio) for row, ratio in zip(study.barenblatt_rows, ratios)]
    return write_csv(path, CONVERGENCE_COLUMNS, rows)


def write_reports_txt(path: Path, reports: Sequence[InequalityReport]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(report.to_record() + "\n" for report in reports))
    return path


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_snapshots(path: Path, states: Sequence[PathState]) -> Path:
    """Binary record: J as little-endian uint64, then the J grid values of every state as little-endian float64."""
    if not states:
        raise ValueError("Cannot write an empty snapshot record")
    J = states[0].v.J
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(np.array([J], dtype=_HEADER_DTYPE).tobytes())
        for state in states:
            if state.v.J != J:
                raise ValueError(f"Snapshot grid sizes differ: {state.v.J} vs {J}")
            handle.write(np.asarray(state.v.values, dtype=_SNAPSHOT_DTYPE).tobytes())
    return path


def read_snapshots(path: Path) -> np.ndarray:
    """Inverse of write_snapshots: an (snapshots, J) array."""
    raw = Path(path).read_bytes()
    J = int(np.frombuffer(raw[:8], dtype=_HEADER_DTYPE)[0])
    values = np.frombuffer(raw[8:], dtype=_SNAPSHOT_DTYPE)
    if J == 0 or values.size % J:
        raise ValueError(f"Snapshot file {path} is truncated or corrupt")
    return values.reshape(-1, J)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def hash_payload(payload: Any) -> str:
    data = json.dumps(payload, sort_keys=True, default=_json_default).encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _file_stamp(path: Path) -> Tuple[int, int]:
    stat = path.stat()
    return stat.st_mtime_ns, stat.st_size


def _output_files(out_dir: Path) -> List[Tuple[str, Path]]:
    found = []
    for root, _dirs, names in os.walk(out_dir):
        for name in names:
            path = Path(root) / name
            relative = path.relative_to(out_dir).as_posix()
            if relative != MANIFEST_NAME:
                found.append((relative, path))
    return found


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    master_seed: int
    tool_version: str = __version__
    started: str = field(default_factory=_timestamp)
    finished: str = ""
    config_hash: str = ""
    files: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._existing: Dict[str, Tuple[int, int]] = {}

    def mark_existing(self, out_dir: Path) -> None:
        """Remember the files already in out_dir so that finalize leaves them out unless this run rewrites them."""
        self._existing = {relative: _file_stamp(path) for relative, path in _output_files(Path(out_dir))}

    def finalize(self, out_dir: Path) -> Path:
        """Hash the files this run wrote under out_dir (except the manifest) and write manifest.json."""
        out_dir = Path(out_dir)
        self.finished = _timestamp()
        self.config_hash = hash_payload(self.config)
        self.files = {}
        for relative, path in _output_files(out_dir):
            if self._existing.get(relative) != _file_stamp(path):
                self.files[relative] = sha256_file(path)
        self.files = dict(sorted(self.files.items()))
        return write_json(out_dir / MANIFEST_NAME, asdict(self))


def load_manifest(out_dir: Path) -> Dict[str, Any]:
    return json.loads((Path(out_dir) / MANIFEST_NAME).read_text())
