"""Run configuration: a flat ``key = value`` file.

One key per line, ``#`` starts a comment, lists are comma separated. Rates
are given in multiples of the true Rabi frequency OMEGA_R and times in Rabi
periods tau_R.
"""

from __future__ import annotations

import difflib
import os
from dataclasses import dataclass, fields
from pathlib import Path

from cqed_rabi.experiments import RunSettings
from cqed_rabi.likelihood import SearchGrid
from cqed_rabi.physics import PhysicalParams, strength_to_params
from cqed_rabi.trajectory import TrajectoryConfig
from cqed_rabi.units import OMEGA_R

EXPERIMENTS = ("likelihood", "sweep", "scaling", "fisher")
OUTPUT_ROOT_ENV = "CQED_RABI_OUTPUT_ROOT"

# key: (kind, unit, default, help)
KEYS: dict[str, tuple[str, str, object, str]] = {
    "experiment": ("str", "-", None, "one of likelihood, sweep, scaling, fisher"),
    "gamma_m": ("float", "Omega_R", 0.25, "measurement strength (likelihood, scaling, fisher)"),
    "gamma_m_list": ("floats", "Omega_R", (0.01, 0.1, 0.25, 1.0, 5.0), "strengths of a sweep"),
    "gamma_phi": ("float", "Omega_R", 0.0, "extra dephasing rate"),
    "kappa": ("float", "Omega_R", 10.0, "cavity leak rate"),
    "chi": ("float", "Omega_R", 0.5, "dispersive coupling"),
    "delta_r": ("float", "Omega_R", 0.0, "measurement drive - cavity detuning"),
    "phi_lo": ("float", "rad", 0.0, "local-oscillator phase"),
    "omega_rabi": ("float", "Omega_R", 1.0, "true Rabi frequency of the generator"),
    "stark_in_drive": ("bool", "-", False, "keep the ac-Stark shift as a drive detuning"),
    "dt": ("float", "tau_R", 1e-5, "generation step"),
    "tau": ("float", "tau_R", 1e-3, "coarse bin width (multiple of dt)"),
    "T": ("float", "tau_R", 100.0, "measurement time (likelihood, sweep)"),
    "T_list": ("floats", "tau_R", (10.0, 20.0, 35.0, 50.0, 70.0, 100.0), "measurement times (scaling, fisher)"),
    "omega_min": ("float", "Omega_R", 0.9, "lower end of the search grid"),
    "omega_max": ("float", "Omega_R", 1.1, "upper end of the search grid"),
    "omega_step": ("float", "Omega_R", 1e-3, "search grid spacing"),
    "M": ("int", "-", None, "trajectories per point (default 500; 2000 for fisher)"),
    "trajectory_index": ("int", "-", 0, "which trajectory a likelihood run uses"),
    "fd_step": ("float", "Omega_R", 1e-3, "finite-difference step of the score"),
    "seed": ("int", "-", 12345, "base seed (64-bit unsigned)"),
    "workers": ("int", "-", 0, "worker threads, 0 = all cores"),
    "out": ("str", "-", None, f"output directory (default ${OUTPUT_ROOT_ENV}/<experiment> or runs/<experiment>)"),
}


class ConfigError(ValueError):
    pass


def describe_keys() -> str:
    lines = ["config keys (key = value; lists comma separated):"]
    for k, (kind, unit, default, text) in KEYS.items():
        d = ",".join(str(v) for v in default) if isinstance(default, tuple) else default
        lines.append(f"  {k:<17} [{unit}] {kind:<6} default={d}  {text}")
    return "\n".join(lines)


def _convert(key: str, raw: str, where: str):
    kind = KEYS[key][0]
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw, 0)
        if kind == "floats":
            vals = tuple(float(v) for v in raw.split(",") if v.strip())
            if not vals:
                raise ValueError("empty list")
            return vals
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r} ({kind}): {raw!r} ({exc})") from None


def _check_key(key: str, where: str) -> None:
    if key not in KEYS:
        near = difflib.get_close_matches(key, KEYS, n=1)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        raise ConfigError(f"{where}: unknown key {key!r}{hint}")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    gamma_m: float
    gamma_m_list: tuple
    gamma_phi: float
    kappa: float
    chi: float
    delta_r: float
    phi_lo: float
    omega_rabi: float
    stark_in_drive: bool
    dt: float
    tau: float
    T: float
    T_list: tuple
    omega_min: float
    omega_max: float
    omega_step: float
    M: int
    trajectory_index: int
    fd_step: float
    seed: int
    workers: int
    out: str

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def template(self) -> PhysicalParams:
        """Physical parameters before the drive is scaled to a strength."""
        return PhysicalParams(
            chi=self.chi * OMEGA_R,
            kappa=self.kappa * OMEGA_R,
            delta_r=self.delta_r * OMEGA_R,
            phi_lo=self.phi_lo,
            gamma_phi=self.gamma_phi * OMEGA_R,
            omega_rabi_true=self.omega_rabi * OMEGA_R,
            stark_in_drive=self.stark_in_drive,
        )

    def params(self, gamma_m: float | None = None) -> PhysicalParams:
        g = self.gamma_m if gamma_m is None else gamma_m
        return strength_to_params(g * OMEGA_R, self.template())

    def search(self) -> SearchGrid:
        return SearchGrid(self.omega_min * OMEGA_R, self.omega_max * OMEGA_R, self.omega_step * OMEGA_R)

    def settings(self) -> RunSettings:
        return RunSettings(dt=self.dt, tau=self.tau, search=self.search(), workers=self.workers)


def _validate(v: dict) -> None:
    if v["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"experiment: expected one of {', '.join(EXPERIMENTS)}, got {v['experiment']!r}")
    try:
        TrajectoryConfig(dt=v["dt"], tau=v["tau"], total_time=v["tau"])
    except ValueError:
        raise ConfigError(f"tau={v['tau']!r} is not a positive integer multiple of dt={v['dt']!r}") from None
    times = [v["T"]] if v["experiment"] in ("likelihood", "sweep") else list(v["T_list"])
    for t in times:
        try:
            TrajectoryConfig(dt=v["dt"], tau=v["tau"], total_time=t)
        except ValueError:
            raise ConfigError(f"measurement time {t!r} is not a positive integer multiple of tau={v['tau']!r}") from None
    if v["experiment"] in ("scaling", "fisher") and len(times) < 4:
        raise ConfigError(f"T_list needs at least 4 times for a scaling fit, got {len(times)}")
    if v["experiment"] == "sweep" and len(v["gamma_m_list"]) < 1:
        raise ConfigError("gamma_m_list is empty")
    for k in ("gamma_m", "gamma_phi", "fd_step"):
        if v[k] < 0:
            raise ConfigError(f"{k} must be >= 0, got {v[k]}")
    if any(g < 0 for g in v["gamma_m_list"]):
        raise ConfigError("gamma_m_list entries must be >= 0")
    if v["kappa"] <= 0:
        raise ConfigError(f"kappa must be > 0, got {v['kappa']}")
    if v["chi"] == 0:
        raise ConfigError("chi must be nonzero")
    if v["omega_rabi"] <= 0:
        raise ConfigError("omega_rabi must be > 0")
    try:
        SearchGrid(v["omega_min"] * OMEGA_R, v["omega_max"] * OMEGA_R, v["omega_step"] * OMEGA_R).omegas()
    except ValueError as exc:
        raise ConfigError(f"search grid: {exc}") from None
    if v["omega_min"] <= 0:
        raise ConfigError("omega_min must be > 0")
    min_m = 100 if v["experiment"] == "fisher" else 2
    if v["experiment"] != "likelihood" and v["M"] < min_m:
        raise ConfigError(f"M must be >= {min_m} for {v['experiment']}, got {v['M']}")
    if not 0 <= v["seed"] < 1 << 64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    if v["workers"] < 0:
        raise ConfigError("workers must be >= 0")


def build_config(values: dict) -> RunConfig:
    """Fill defaults, resolve experiment-dependent defaults and validate."""
    v = {k: spec[2] for k, spec in KEYS.items()}
    v.update(values)
    if v["experiment"] is None:
        raise ConfigError("missing required key 'experiment'")
    if v["M"] is None:
        v["M"] = 2000 if v["experiment"] == "fisher" else 500
    if v["workers"] == 0:
        v["workers"] = os.cpu_count() or 1
    if v["out"] is None:
        root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
        v["out"] = str(Path(root) / v["experiment"])
    _validate(v)
    return RunConfig(**v)


def parse_text(text: str, source: str = "<config>") -> dict:
    """Raw key/value pairs of a config text, converted but not defaulted."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        _check_key(key, where)
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert(key, raw, where)
    return values


def parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    key, raw = (s.strip() for s in item.split("=", 1))
    _check_key(key, "--set")
    return key, _convert(key, raw, "--set")


def parse_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_text(text, str(path))
    values.update(overrides or {})
    return build_config(values)
