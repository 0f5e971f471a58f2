"""Experiment configuration: YAML file plus command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

PROTOCOLS = ("secret-sharing", "qkd", "herald", "sorter-check", "verify-paper")
FORMATS = ("json", "csv", "text")
BACKENDS = ("abstract", "optical")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = "secret-sharing"
    n_trials: int = 10_000
    seed: int = 0
    basis_set: tuple = ("Z", "F")
    subspace_policy: str = "fixed:0,1"
    eve: str = "off"
    charlie_loss: float = 1.0
    backend: str = "abstract"
    optics: dict | None = None
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {', '.join(PROTOCOLS)}; got {self.protocol!r}")
        if not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.n_trials!r}")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {', '.join(BACKENDS)}")
        object.__setattr__(self, "basis_set", tuple(self.basis_set))
        if not self.basis_set or any(b not in ("Z", "F") for b in self.basis_set):
            raise ConfigError(f"basis set must be drawn from Z, F; got {self.basis_set}")
        self.subspace()
        self.eve_spec()
        if self.output_format == "csv" and self.protocol not in ("secret-sharing", "qkd"):
            raise ConfigError("csv output holds transcripts; use it with secret-sharing or qkd")

    def subspace(self) -> tuple[str, tuple[int, int]]:
        """``("fixed", pair)`` or ``("random", (0, 1))``."""
        if self.subspace_policy == "random":
            return "random", (0, 1)
        try:
            kind, rest = self.subspace_policy.split(":")
            i, j = (int(x) for x in rest.split(","))
        except ValueError:
            raise ConfigError(f"subspace policy must be fixed:<i>,<j> or random, got {self.subspace_policy!r}") from None
        if kind != "fixed" or i == j or not (0 <= i <= 2 and 0 <= j <= 2):
            raise ConfigError(f"bad subspace policy {self.subspace_policy!r}")
        return "fixed", tuple(sorted((i, j)))

    def eve_spec(self) -> tuple[str, str] | None:
        """``(target, basis_policy)`` or None."""
        if self.eve == "off":
            return None
        parts = self.eve.split(":")
        if len(parts) != 3 or parts[0] != "intercept" or parts[1] not in ("alice", "bob") or not parts[2]:
            raise ConfigError(f"eve must be off or intercept:<alice|bob>:<basis-policy>, got {self.eve!r}")
        return parts[1], parts[2]

    def to_dict(self) -> dict:
        out = {
            "protocol": self.protocol,
            "trials": self.n_trials,
            "seed": self.seed,
            "secret_sharing": {"basis_set": list(self.basis_set), "backend": self.backend},
            "qkd": {"subspace_policy": self.subspace_policy, "eve": self.eve, "charlie_loss": self.charlie_loss},
            "output": {"format": self.output_format, "path": self.output_path},
        }
        if self.optics is not None:
            out["optics"] = self.optics
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {"protocol", "trials", "seed", "secret_sharing", "qkd", "output", "optics"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kw = {}
        for key, name in (("protocol", "protocol"), ("trials", "n_trials"), ("seed", "seed")):
            if key in data:
                kw[name] = data[key]
        ss = data.get("secret_sharing") or {}
        if "basis_set" in ss:
            kw["basis_set"] = tuple(ss["basis_set"])
        if "backend" in ss:
            kw["backend"] = ss["backend"]
        qkd = data.get("qkd") or {}
        for key in ("subspace_policy", "eve", "charlie_loss"):
            if key in qkd:
                kw[key] = qkd[key]
        out = data.get("output") or {}
        if "format" in out:
            kw["output_format"] = out["format"]
        if "path" in out:
            kw["output_path"] = out["path"]
        if data.get("optics") is not None:
            kw["optics"] = data["optics"]
        return cls(**kw)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    return ExperimentConfig.from_dict(data or {})


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
