"""CSV, gnuplot and JSON manifest writers with byte-stable number formatting."""

from __future__ import annotations

import json
import math
import platform
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from cqed_rabi.physics import PhysicalParams
from cqed_rabi.trajectory import CurrentRecord, TrajectoryConfig
from cqed_rabi.units import OMEGA_R

RESULT_COLUMNS = ("gamma_m", "T", "gamma_phi", "M", "n_discarded", "delta_omega", "fisher", "seed")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return "nan"
    x = float(v)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:] if line])
    return header, data.reshape(-1, len(header))


def write_dat(path: Path, comment: str, columns: Sequence[Sequence[float]]) -> Path:
    """Whitespace-separated columns for gnuplot."""
    path = Path(path)
    lines = [f"# {comment}"]
    lines += [" ".join(fmt(v) for v in row) for row in zip(*columns)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def code_version() -> str:
    from cqed_rabi import __version__

    return __version__


def write_manifest(path: Path, payload: dict) -> Path:
    base = {
        "tool": "cqed-rabi",
        "version": code_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    base.update(payload)
    Path(path).write_text(json.dumps(_jsonable(base), indent=2, sort_keys=True) + "\n")
    return Path(path)


def params_in_omega_r(params: PhysicalParams) -> dict:
    d = params.as_dict()
    for k in ("chi", "kappa", "eps_m", "delta_r", "gamma_phi", "omega_rabi_true", "omega_q"):
        d[k] = d[k] / OMEGA_R
    return d


def write_record(path: Path, record: CurrentRecord, params: PhysicalParams, cfg: TrajectoryConfig) -> Path:
    """Dump a record as ``bin_index,current`` plus a JSON sidecar (same stem)."""
    path = Path(path)
    write_csv(path, ("bin_index", "current"), zip(range(record.n_bins), record.currents))
    write_manifest(
        path.with_suffix(".json"),
        {
            "kind": "current_record",
            "params_omega_r_units": params_in_omega_r(params),
            "params_fingerprint": record.params_fingerprint,
            "trajectory": {
                "dt": cfg.dt,
                "tau": cfg.tau,
                "total_time": cfg.total_time,
                "seed": cfg.seed,
                "trajectory_index": cfg.trajectory_index,
                "rho0_bloch": list(cfg.rho0.bloch()),
            },
        },
    )
    return path
