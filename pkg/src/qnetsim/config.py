"""Run configuration for the command line front end.

Flat INI sections, one per simulation area, every value a scalar or a
comma-separated list in SI base units. Unknown sections and keys are
rejected by name so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, replace
from pathlib import Path

from .dephasing import DephasingConfig, echo_config, no_echo_config
from .network import PROFILES, HardwareProfile
from .pulse import PulseParameters, default_parameters

__all__ = ["ConfigError", "EXPERIMENTS", "RunConfig", "parse_config"]

EXPERIMENTS = ("ghz", "cnot-sweep", "dephasing", "dephasing-grid", "pulse")

GHZ_PROTOCOLS = ("plain", "modicum", "expedient")

_DEPHASING_VARIANTS = {"no_echo": no_echo_config, "echo": echo_config}

# profile keys are the physical hardware fields; name swaps the preset
_PROFILE_FIELDS = frozenset(
    f.name for f in dataclasses.fields(HardwareProfile) if f.name != "name"
)
# dephasing scalar knobs; trial/sample counts come from attempts/samples
_DEPHASING_FIELDS = frozenset(
    {"a_par", "t_a", "t_b", "p_init", "p_opt", "p_echo", "p_mw", "alpha"}
)
_PULSE_FIELDS = frozenset(
    {"d", "q", "gamma_n_bz", "a_par", "omega", "sigma_f", "duration", "dt"}
)


class ConfigError(ValueError):
    """Unreadable, unknown, or ill-typed configuration input."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment invocation needs, fully resolved."""

    experiment: str
    repetitions: int
    master_seed: int
    output: Path
    workers: int
    profile: HardwareProfile
    ghz_protocol: str
    sweep_attempts: tuple[float, ...]
    dephasing: DephasingConfig
    dephasing_attempts: tuple[float, ...]
    dephasing_samples: int
    grid_p_init: tuple[float, ...]
    grid_p_echo: tuple[float, ...]
    pulse: PulseParameters
    pulse_samples: int

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in 64 bits")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.ghz_protocol not in GHZ_PROTOCOLS:
            raise ConfigError(f"unknown ghz protocol {self.ghz_protocol!r}")
        if self.dephasing_samples < 2:
            raise ConfigError("dephasing samples must be at least 2")
        if self.pulse_samples < 100:
            raise ConfigError("pulse samples must be at least 100")
        if any(n < 1 for n in self.dephasing_attempts):
            raise ConfigError("dephasing attempts must be at least 1")
        if any(n <= 0 for n in self.sweep_attempts):
            raise ConfigError("cnot-sweep attempts must be positive")


def _float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"type mismatch for {key!r} in [{section}]: expected a number, got {raw!r}"
        ) from None


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(
            f"type mismatch for {key!r} in [{section}]: expected an integer, got {raw!r}"
        ) from None


def _float_list(section: str, key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",")]
    values = tuple(_float(section, key, p) for p in parts if p)
    if not values:
        raise ConfigError(f"empty list for {key!r} in [{section}]")
    return values


def _reject_unknown(section: str, given: dict[str, str], allowed: frozenset[str]) -> None:
    for key in given:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _build_profile(items: dict[str, str]) -> HardwareProfile:
    name = items.pop("name", "purified")
    if name not in PROFILES:
        raise ConfigError(
            f"unknown profile {name!r}; choose from {', '.join(sorted(PROFILES))}"
        )
    _reject_unknown("profile", items, _PROFILE_FIELDS)
    profile = PROFILES[name]()
    overrides = {k: _float("profile", k, v) for k, v in items.items()}
    return profile.with_overrides(**overrides) if overrides else profile


def _build_dephasing(
    items: dict[str, str], default_variant: str
) -> tuple[DephasingConfig, tuple[float, ...], int]:
    variant = items.pop("variant", default_variant)
    if variant not in _DEPHASING_VARIANTS:
        raise ConfigError(
            f"unknown dephasing variant {variant!r}; choose from "
            f"{', '.join(sorted(_DEPHASING_VARIANTS))}"
        )
    attempts = _float_list("dephasing", "attempts", items.pop("attempts", "1e6"))
    base = _DEPHASING_VARIANTS[variant]()
    samples_raw = items.pop("samples", None)
    samples = (
        base.n_samples if samples_raw is None else _int("dephasing", "samples", samples_raw)
    )
    _reject_unknown("dephasing", items, _DEPHASING_FIELDS)
    overrides: dict[str, float] = {
        k: _float("dephasing", k, v) for k, v in items.items()
    }
    # an explicit tipping-angle error replaces the preset flip probability
    if "alpha" in overrides and "p_mw" not in overrides:
        overrides["p_mw"] = None  # type: ignore[assignment]
    if overrides:
        base = replace(base, **overrides)
    return base, attempts, samples


def _build_pulse(items: dict[str, str]) -> tuple[PulseParameters, int]:
    samples = _int("pulse", "samples", items.pop("samples", "200"))
    phases = [
        _float("pulse", k, items.pop(k)) if k in items else 0.0
        for k in ("phi1", "phi2", "phi3")
    ]
    _reject_unknown("pulse", items, _PULSE_FIELDS)
    overrides = {k: _float("pulse", k, v) for k, v in items.items()}
    try:
        params = default_parameters(phases=tuple(phases), **overrides)
    except ValueError as exc:
        raise ConfigError(f"invalid pulse parameters: {exc}") from None
    return params, samples


def parse_config(path: str | Path | None, experiment: str) -> RunConfig:
    """Load a run configuration, or the full purified defaults for None."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config file: {exc}") from None

    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    known = {"run", "profile", "ghz", "cnot-sweep", "dephasing", "dephasing-grid", "pulse"}
    for name in sections:
        if name not in known:
            raise ConfigError(f"unknown section [{name}]")

    run = sections.get("run", {})
    _reject_unknown(
        "run", run, frozenset({"repetitions", "master_seed", "workers", "output"})
    )
    repetitions = _int("run", "repetitions", run.get("repetitions", "1000"))
    master_seed = _int("run", "master_seed", run.get("master_seed", "0"))
    workers = _int("run", "workers", run.get("workers", "1"))
    output = Path(run.get("output", f"{experiment.replace('-', '_')}.csv"))

    ghz = sections.get("ghz", {})
    _reject_unknown("ghz", ghz, frozenset({"protocol"}))

    sweep = sections.get("cnot-sweep", {})
    _reject_unknown("cnot-sweep", sweep, frozenset({"attempts"}))
    sweep_attempts = _float_list(
        "cnot-sweep", "attempts", sweep.get("attempts", "83333")
    )

    # the error grid only makes sense with the refocusing pulse active
    dephasing, dephasing_attempts, dephasing_samples = _build_dephasing(
        dict(sections.get("dephasing", {})),
        "echo" if experiment == "dephasing-grid" else "no_echo",
    )

    grid = sections.get("dephasing-grid", {})
    _reject_unknown("dephasing-grid", grid, frozenset({"p_init", "p_echo", "samples"}))
    grid_p_init = _float_list(
        "dephasing-grid", "p_init", grid.get("p_init", "0.0, 0.01, 0.02")
    )
    grid_p_echo = _float_list(
        "dephasing-grid", "p_echo", grid.get("p_echo", "0.0, 0.01, 0.02")
    )
    grid_samples = grid.get("samples")

    pulse, pulse_samples = _build_pulse(dict(sections.get("pulse", {})))

    try:
        profile = _build_profile(dict(sections.get("profile", {})))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid profile value: {exc}") from None

    if grid_samples is not None:
        dephasing_samples_grid = _int("dephasing-grid", "samples", grid_samples)
    else:
        dephasing_samples_grid = dephasing_samples

    cfg = RunConfig(
        experiment=experiment,
        repetitions=repetitions,
        master_seed=master_seed,
        output=output,
        workers=workers,
        profile=profile,
        ghz_protocol=ghz.get("protocol", "plain"),
        sweep_attempts=sweep_attempts,
        dephasing=dephasing,
        dephasing_attempts=dephasing_attempts,
        dephasing_samples=(
            dephasing_samples_grid
            if experiment == "dephasing-grid"
            else dephasing_samples
        ),
        grid_p_init=grid_p_init,
        grid_p_echo=grid_p_echo,
        pulse=pulse,
        pulse_samples=pulse_samples,
    )
    return cfg
