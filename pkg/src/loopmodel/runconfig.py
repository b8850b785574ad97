"""Run configuration: key-value config files with command-line overrides."""

from dataclasses import dataclass, field


@dataclass
class RunConfig:
    d: int = 1
    k: tuple = (1,)
    beta: float = 1.0
    n: int = 2
    u: float = 0.25
    R0: float = 1.0
    seed: int = 0
    sweeps: int = 1000
    burnin: int = 100
    thin: int = 1
    replicas: int = 1
    extras: dict = field(default_factory=dict)

    def validate(self):
        if not (0.0 <= self.u <= 1.0):
            raise ValueError("u must lie in [0, 1]")
        if self.d < 1 or len(self.k) != self.d or any(v < 1 for v in self.k):
            raise ValueError("bad torus shape")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def warnings(self):
        out = []
        if self.u > 0.5:
            out.append("u > 1/2: outside the reflection-positive regime; "
                       "block-event bounds do not apply")
        return out

    def as_dict(self):
        return {
            "d": self.d, "k": list(self.k), "beta": self.beta, "n": self.n,
            "u": self.u, "R0": self.R0, "seed": self.seed,
            "sweeps": self.sweeps, "burnin": self.burnin, "thin": self.thin,
            "replicas": self.replicas,
        }


def parse_config_file(path):
    """Read `key = value` lines; '#' starts a comment."""
    fields = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            fields[key] = val
    return fields


def build_runconfig(file_fields=None, overrides=None):
    cfg = RunConfig()
    merged = dict(file_fields or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key, val in merged.items():
        if key == "k":
            if isinstance(val, str):
                val = tuple(int(v) for v in val.split(","))
            else:
                val = tuple(val)
            cfg.k = val
        elif key in ("d", "n", "seed", "sweeps", "burnin", "thin", "replicas"):
            setattr(cfg, key, int(val))
        elif key in ("beta", "u", "R0"):
            setattr(cfg, key, float(val))
        else:
            cfg.extras[key] = val
    cfg.validate()
    return cfg
