"""Experiment configuration: a single YAML document describing the case,
the uncertain inputs, the surrogate sweep, and the outputs to produce."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import yaml

from .grid.case import PowerSystemCase
from .grid.renewables import PvPlant, ResModel, WindFarm
from .uncertainty import MarginalDistribution, RandomVector

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "builtin_case_path"]

VALID_METHODS = ("MC", "ASSE", "SPCE")


class ConfigError(ValueError):
    pass


def builtin_case_path(name: str) -> Path:
    """Path of a case file shipped with the package (e.g. 'case9')."""
    ref = importlib.resources.files("asseopf.data") / f"{name}.m"
    path = Path(str(ref))
    if not path.exists():
        raise ConfigError(f"no builtin case named {name!r}")
    return path


@dataclass(frozen=True)
class ExperimentConfig:
    case_path: Path
    output_dir: Path
    methods: tuple[str, ...] = ("MC", "ASSE", "SPCE")
    responses: tuple[str, ...] = ()
    n_ed: int = 60
    n_val: int = 10000
    qmc_skip: int = 1
    workers: int = 1
    figures: bool = True
    deterministic: bool = True
    # uncertainty
    wind_bus: int = 2
    pv_bus: int = 3
    load_buses: tuple[int, ...] = (5, 7, 9)
    wind_speed_dist: MarginalDistribution = MarginalDistribution("weibull", 11.153, 3.289)
    irradiance_dist: MarginalDistribution = MarginalDistribution("beta", 1.7, 0.74)
    load_sd_fraction: float = 0.05
    # renewable conversion
    wind_capacity_mw: float = 100.0
    cut_in: float = 3.0
    rated: float = 12.0
    cut_out: float = 25.0
    pv_capacity_mw: float = 100.0
    # surrogate sweep
    h_range: tuple[int, ...] = tuple(range(0, 7))
    q_range: tuple[float, ...] = tuple(round(0.5 + 0.05 * i, 10) for i in range(7))
    n_ref_min: int = 10
    k_max: int = 1000
    # sweep command
    sweep_n_ed: tuple[int, ...] = tuple(range(30, 241, 5))
    sweep_responses: tuple[str, ...] = ("cost",)

    def __post_init__(self):
        if self.n_ed < 1:
            raise ConfigError("n_ed must be >= 1")
        if self.n_val < self.n_ed:
            raise ConfigError("n_val must be >= n_ed")
        for m in self.methods:
            if m not in VALID_METHODS:
                raise ConfigError(f"unknown method {m!r}; valid: {VALID_METHODS}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.load_sd_fraction <= 0:
            raise ConfigError("load_sd_fraction must be positive")

    @property
    def dim(self) -> int:
        return 2 + len(self.load_buses)

    def random_vector(self, case: PowerSystemCase) -> RandomVector:
        """Ordered marginals: wind speed, irradiance, then one Gaussian per load bus."""
        marginals = [self.wind_speed_dist, self.irradiance_dist]
        pd_by_id = {b.id: b.pd for b in case.buses}
        for bus in self.load_buses:
            if bus not in pd_by_id:
                raise ConfigError(f"load bus {bus} not present in case")
            nominal = pd_by_id[bus]
            if nominal <= 0:
                raise ConfigError(f"load bus {bus} has no nominal demand to perturb")
            marginals.append(
                MarginalDistribution("gaussian", nominal, self.load_sd_fraction * nominal)
            )
        return RandomVector(tuple(marginals))

    def res_model(self) -> ResModel:
        return ResModel(
            wind=WindFarm(
                bus=self.wind_bus,
                capacity_mw=self.wind_capacity_mw,
                cut_in=self.cut_in,
                rated=self.rated,
                cut_out=self.cut_out,
            ),
            pv=PvPlant(bus=self.pv_bus, capacity_mw=self.pv_capacity_mw),
        )

    def validate_against_case(self, case: PowerSystemCase):
        ids = {b.id for b in case.buses}
        for bus in (self.wind_bus, self.pv_bus, *self.load_buses):
            if bus not in ids:
                raise ConfigError(f"configured bus {bus} not present in case")

    def default_responses(self, case: PowerSystemCase) -> tuple[str, ...]:
        names = []
        for i in range(1, case.n_gen + 1):
            names.append(f"Pg{i}")
        for i in range(1, case.n_gen + 1):
            names.append(f"Qg{i}")
        for i in range(1, case.n_gen + 1):
            names.append(f"Vg{i}")
        names.append("cost")
        return tuple(names)


def _dist_from_dict(d: dict, context: str) -> MarginalDistribution:
    kind = d.get("dist")
    try:
        if kind == "weibull":
            return MarginalDistribution("weibull", float(d["scale"]), float(d["shape"]))
        if kind == "beta":
            return MarginalDistribution("beta", float(d["a"]), float(d["b"]))
        if kind == "gaussian":
            return MarginalDistribution("gaussian", float(d["mean"]), float(d["sd"]))
        if kind == "uniform":
            return MarginalDistribution("uniform", float(d["lower"]), float(d["upper"]))
    except KeyError as exc:
        raise ConfigError(f"{context}: missing parameter {exc}") from None
    raise ConfigError(f"{context}: unknown distribution {kind!r}")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    base = path.parent

    def resolve(p: str) -> Path:
        if p.startswith("builtin:"):
            return builtin_case_path(p.split(":", 1)[1])
        q = Path(p)
        return q if q.is_absolute() else base / q

    kwargs: dict = {}
    try:
        kwargs["case_path"] = resolve(raw["case"])
    except KeyError:
        raise ConfigError("config must name a 'case'") from None
    kwargs["output_dir"] = resolve(raw.get("output_dir", "out"))
    if "methods" in raw:
        kwargs["methods"] = tuple(raw["methods"])
    if "responses" in raw:
        kwargs["responses"] = tuple(raw["responses"])
    for key in ("n_ed", "n_val", "qmc_skip", "workers"):
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("figures", "deterministic"):
        if key in raw:
            kwargs[key] = bool(raw[key])

    unc = raw.get("uncertainty", {})
    if "wind_bus" in unc:
        kwargs["wind_bus"] = int(unc["wind_bus"])
    if "pv_bus" in unc:
        kwargs["pv_bus"] = int(unc["pv_bus"])
    if "load_buses" in unc:
        kwargs["load_buses"] = tuple(int(b) for b in unc["load_buses"])
    if "wind_speed" in unc:
        kwargs["wind_speed_dist"] = _dist_from_dict(unc["wind_speed"], "uncertainty.wind_speed")
    if "irradiance" in unc:
        kwargs["irradiance_dist"] = _dist_from_dict(unc["irradiance"], "uncertainty.irradiance")
    if "load_sd_fraction" in unc:
        kwargs["load_sd_fraction"] = float(unc["load_sd_fraction"])

    res = raw.get("res_curve", {})
    for key in ("wind_capacity_mw", "cut_in", "rated", "cut_out", "pv_capacity_mw"):
        if key in res:
            kwargs[key] = float(res[key])

    sur = raw.get("surrogate", {})
    if sur:
        h_min = int(sur.get("h_min", 0))
        h_max = int(sur.get("h_max", 6))
        kwargs["h_range"] = tuple(range(h_min, h_max + 1))
        q_min = float(sur.get("q_min", 0.5))
        q_max = float(sur.get("q_max", 0.8))
        q_step = float(sur.get("q_step", 0.05))
        nq = int(round((q_max - q_min) / q_step)) + 1
        kwargs["q_range"] = tuple(round(q_min + i * q_step, 10) for i in range(nq))
        if "n_ref_min" in sur:
            kwargs["n_ref_min"] = int(sur["n_ref_min"])
        if "k_max" in sur:
            kwargs["k_max"] = int(sur["k_max"])

    sw = raw.get("sweep", {})
    if sw:
        start = int(sw.get("n_ed_start", 30))
        stop = int(sw.get("n_ed_stop", 240))
        step = int(sw.get("n_ed_step", 5))
        kwargs["sweep_n_ed"] = tuple(range(start, stop + 1, step))
        if "responses" in sw:
            kwargs["sweep_responses"] = tuple(sw["responses"])

    return ExperimentConfig(**kwargs)
