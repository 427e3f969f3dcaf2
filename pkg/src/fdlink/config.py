"""System parameters, derived quantities, and their validation.

All core computation works with the linear-scale average SNR lambda_s;
dB enters only at the CLI boundary via db_to_linear / linear_to_db.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InvalidAntennaCount, InvalidRange


@dataclass(frozen=True)
class ModulationParams:
    """Constants (alpha, beta) of the conditional SER map alpha*Q(sqrt(beta*gamma))."""

    alpha_mod: float = 1.0
    beta_mod: float = 2.0


BPSK = ModulationParams(alpha_mod=1.0, beta_mod=2.0)


@dataclass(frozen=True)
class SystemConfig:
    """Immutable system configuration; validate() before use.

    n_a, n_b: antenna counts at the two nodes (>= 2 each).
    lambda_s: linear-scale average SNR (> 0).
    eta:      residual self-interference coefficient in [0, 1);
              the average INR is eta * lambda_s.
    w:        weight of the A->B direction, in (0, 1).
    """

    n_a: int
    n_b: int
    lambda_s: float
    eta: float
    w: float
    modulation: ModulationParams = field(default_factory=lambda: BPSK)

    @property
    def nn(self) -> int:
        return self.n_a * self.n_b


@dataclass(frozen=True)
class DerivedParams:
    """Average INR and the obtainable-SINR scaling factor 1/(lambda_i + 1)."""

    lambda_i: float
    scale: float


def validate_config(raw: SystemConfig) -> SystemConfig:
    """Check all invariants; returns the config unchanged when valid."""
    if raw.n_a < 2 or raw.n_b < 2:
        raise InvalidAntennaCount(
            f"need at least 2 antennas per node, got n_a={raw.n_a}, n_b={raw.n_b}"
        )
    if not raw.lambda_s > 0:
        raise InvalidRange(f"lambda_s must be positive, got {raw.lambda_s}")
    if not 0 <= raw.eta < 1:
        raise InvalidRange(f"eta must lie in [0, 1), got {raw.eta}")
    if not 0 < raw.w < 1:
        raise InvalidRange(f"w must lie in (0, 1), got {raw.w}")
    if raw.modulation.alpha_mod <= 0 or raw.modulation.beta_mod <= 0:
        raise InvalidRange("modulation constants must be positive")
    return raw


def derived_params(cfg: SystemConfig) -> DerivedParams:
    """lambda_i = eta * lambda_s; scale = 1/(lambda_i + 1), in (0, 1]."""
    lambda_i = cfg.eta * cfg.lambda_s
    return DerivedParams(lambda_i=lambda_i, scale=1.0 / (lambda_i + 1.0))


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise InvalidRange(f"cannot convert nonpositive value {x} to dB")
    return 10.0 * math.log10(x)


_CONFIG_KEYS = {"n_a", "n_b", "lambda_s", "snr_db", "eta", "w", "alpha_mod", "beta_mod"}


def load_config(path: str) -> SystemConfig:
    """Read a SystemConfig from a flat key-value text file.

    Lines look like ``key = value``; '#' starts a comment.  Either
    ``lambda_s`` (linear) or ``snr_db`` may be given for the average SNR.
    """
    values: dict[str, float] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidRange(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise InvalidRange(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = float(val)

    if "snr_db" in values and "lambda_s" in values:
        raise InvalidRange("give either lambda_s or snr_db, not both")
    if "snr_db" in values:
        values["lambda_s"] = db_to_linear(values.pop("snr_db"))
    for required in ("n_a", "n_b", "lambda_s", "eta", "w"):
        if required not in values:
            raise InvalidRange(f"missing config key {required!r}")

    mod = BPSK
    if "alpha_mod" in values or "beta_mod" in values:
        mod = ModulationParams(
            alpha_mod=values.get("alpha_mod", BPSK.alpha_mod),
            beta_mod=values.get("beta_mod", BPSK.beta_mod),
        )
    cfg = SystemConfig(
        n_a=int(values["n_a"]),
        n_b=int(values["n_b"]),
        lambda_s=values["lambda_s"],
        eta=values["eta"],
        w=values["w"],
        modulation=mod,
    )
    return validate_config(cfg)


def with_lambda_s(cfg: SystemConfig, lambda_s: float) -> SystemConfig:
    """Copy of cfg at a different average SNR (sweep helper)."""
    return validate_config(replace(cfg, lambda_s=lambda_s))
