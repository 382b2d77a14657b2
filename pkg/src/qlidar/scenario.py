"""Scenario presets, configuration files, orchestration and result emission."""

from __future__ import annotations

import configparser
import csv
import io
import json
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache

from . import __version__
from .decision import (
    GEQ,
    GT,
    RULES,
    TIES_INCONCLUSIVE,
    TIES_SUCCESS,
    DecisionPolicy,
    sweep,
)
from .detectors import DetectorModel, click_distribution
from .errors import ConfigError, DomainError
from .photon_statistics import Pmf, pmf_convolve, pmf_poisson, pmf_thermal
from .scintillation import ScintillationParams, pmf_scintillated

PRESETS = {
    "hsln": (10.0, 1.0),
    "lsln": (1.0, 1.0),
    "hshn": (10.0, 10.0),
    "lshn": (1.0, 10.0),
}
NOISE_MODELS = ("thermal", "poisson")
FORMATS = ("csv", "json")
DEFAULT_THRESHOLDS = (1, 2, 5, 10)
DEFAULT_NC = (1, 2, 4, 8, 16, 32, 64, 128)
DEFAULT_SIGMA_GRID = (0.0, 0.5, 1.0, 1.5)

CSV_COLUMNS = (
    "scenario", "sigma", "detector", "M", "eta", "pd", "rule", "compare",
    "S", "n_c", "N", "N_s", "P", "std_error", "exact_P",
    # trailing columns make each row reproducible on its own
    "mu_s", "mu_n", "noise", "ties", "seed",
)

RULE_NOTE = (
    "the vote rule combining n_c iterations is a modelling choice; "
    "'plurality' declares the bin tagged more often, 'joint' and 'separate' "
    "require strict majorities"
)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    mu_s: float = 10.0
    mu_n: float = 1.0
    noise_model: str = "thermal"
    sigma: float = 0.0
    detector: DetectorModel = field(default_factory=DetectorModel.ideal)
    policy: DecisionPolicy = field(default_factory=DecisionPolicy)
    thresholds: tuple = DEFAULT_THRESHOLDS
    nc_values: tuple = DEFAULT_NC
    seed: int = 0
    output_format: str = "csv"

    def __post_init__(self):
        if not self.mu_s > 0:
            raise ConfigError(f"must be > 0, got {self.mu_s}", field="mu_s")
        if not self.mu_n >= 0:
            raise ConfigError(f"must be >= 0, got {self.mu_n}", field="mu_n")
        if self.noise_model not in NOISE_MODELS:
            raise ConfigError(f"must be one of {NOISE_MODELS}, got {self.noise_model!r}", field="noise")
        if not self.sigma >= 0:
            raise ConfigError(f"must be >= 0, got {self.sigma}", field="sigma")
        if not self.thresholds:
            raise ConfigError("threshold grid is empty", field="thresholds")
        if not self.nc_values:
            raise ConfigError("n_c grid is empty", field="nc")
        if any(s < 0 for s in self.thresholds):
            raise ConfigError("thresholds must be >= 0", field="thresholds")
        if any(n < 1 for n in self.nc_values):
            raise ConfigError("n_c values must be >= 1", field="nc")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("must be an unsigned 64-bit integer", field="seed")
        if self.output_format not in FORMATS:
            raise ConfigError(f"must be one of {FORMATS}", field="format")
        object.__setattr__(self, "thresholds", tuple(int(s) for s in self.thresholds))
        object.__setattr__(self, "nc_values", tuple(int(n) for n in self.nc_values))

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "ScenarioConfig":
        key = name.lower()
        if key not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}", field="preset")
        mu_s, mu_n = PRESETS[key]
        return cls(name=key, mu_s=mu_s, mu_n=mu_n, **overrides)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@lru_cache(maxsize=32)
def _bins(mu_s, mu_n, noise_model, sigma, detector):
    if sigma == 0:
        signal = pmf_poisson(mu_s)
    else:
        signal = pmf_scintillated(ScintillationParams(sigma, mu_s))
    noise = pmf_thermal(mu_n) if noise_model == "thermal" else pmf_poisson(mu_n)
    good = click_distribution(pmf_convolve(signal, noise), detector)
    bad = click_distribution(noise, detector)
    return good, bad


def build_bin_distributions(cfg: ScenarioConfig) -> tuple[Pmf, Pmf]:
    """Event-count laws of the good bin (signal + noise) and the bad bin (noise).

    Scintillation broadens the signal only. The detector acts on the total
    photon number of each bin.
    """
    return _bins(float(cfg.mu_s), float(cfg.mu_n), cfg.noise_model, float(cfg.sigma), cfg.detector)


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    sigma: float
    detector: str
    M: int
    eta: float
    pd: float
    rule: str
    compare: str
    S: int
    n_c: int
    N: int | None
    N_s: int | None
    P: float | None
    std_error: float | None
    exact_P: float | None
    mu_s: float
    mu_n: float
    noise: str
    ties: str
    seed: int | None


@dataclass
class SweepResult:
    rows: list
    metadata: dict

    def cell(self, S: int, n_c: int, sigma: float | None = None) -> SweepRow:
        for row in self.rows:
            if row.S == S and row.n_c == n_c and (sigma is None or row.sigma == sigma):
                return row
        raise KeyError((S, n_c, sigma))

    def emit(self, fmt: str = "csv") -> str:
        return emit(self, fmt)


def _metadata(cfg: ScenarioConfig, simulate: bool) -> dict:
    det = cfg.detector
    pol = cfg.policy
    return {
        "tool": "qlidar",
        "version": __version__,
        "mode": "simulate" if simulate else "oracle",
        "seed": cfg.seed if simulate else None,
        "streams": "splitmix64 counter streams keyed by (seed, S, n_c, trial)",
        "scenario": {
            "name": cfg.name,
            "mu_s": cfg.mu_s,
            "mu_n": cfg.mu_n,
            "noise_model": cfg.noise_model,
            "sigma": [cfg.sigma],
            "signal_model": "poisson" if cfg.sigma == 0 else "lognormal-scintillated poisson",
        },
        "detector": {"kind": det.kind, "M": det.M, "eta": det.eta, "p_d": det.p_d},
        "policy": {
            "compare": pol.compare,
            "rule": pol.rule,
            "ties": pol.ties,
            "runs": pol.runs if simulate else None,
            "rule_note": RULE_NOTE,
        },
        "grid": {"S": list(cfg.thresholds), "n_c": list(cfg.nc_values)},
    }


def run_scenario(cfg: ScenarioConfig, workers: int = 1, simulate: bool = True) -> SweepResult:
    """Build the bin distributions and sweep the ``(S, n_c)`` grid.

    With ``simulate=False`` only exact values are produced (no sampling).
    """
    good, bad = build_bin_distributions(cfg)
    cells = sweep(
        good, bad, cfg.thresholds, cfg.nc_values, cfg.policy, cfg.seed, workers=workers, simulate=simulate
    )
    det, pol = cfg.detector, cfg.policy
    rows = []
    for c in cells:
        est = c.estimate
        rows.append(
            SweepRow(
                scenario=cfg.name,
                sigma=cfg.sigma,
                detector=det.label(),
                M=det.M,
                eta=det.eta,
                pd=det.p_d,
                rule=pol.rule,
                compare=pol.compare,
                S=c.threshold,
                n_c=c.n_c,
                N=est.N if est else None,
                N_s=est.N_s if est else None,
                P=est.P if est else None,
                std_error=est.std_error if est else None,
                exact_P=c.exact_P,
                mu_s=cfg.mu_s,
                mu_n=cfg.mu_n,
                noise=cfg.noise_model,
                ties=pol.ties,
                seed=cfg.seed if est else None,
            )
        )
    return SweepResult(rows, _metadata(cfg, simulate))


def combine_results(results: list[SweepResult]) -> SweepResult:
    """Concatenate results that differ only in ``sigma``."""
    if not results:
        raise DomainError("nothing to combine")
    meta = json.loads(json.dumps(results[0].metadata))
    meta["scenario"]["sigma"] = [s for r in results for s in r.metadata["scenario"]["sigma"]]
    if any(s > 0 for s in meta["scenario"]["sigma"]):
        meta["scenario"]["signal_model"] = "lognormal-scintillated poisson"
    return SweepResult([row for r in results for row in r.rows], meta)


def _num(x):
    """Nine significant digits, as a string."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".9g")


def _json_num(x):
    if isinstance(x, float):
        return float(format(x, ".9g"))
    return x


def emit(result: SweepResult, fmt: str = "csv") -> str:
    """Serialise to CSV (header + one line per row) or a JSON document."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([_num(getattr(row, col)) for col in CSV_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "metadata": result.metadata,
            "rows": [{col: _json_num(getattr(row, col)) for col in CSV_COLUMNS} for row in result.rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise DomainError(f"unknown output format {fmt!r}")


# --- configuration files -------------------------------------------------

_KEYS = {
    "scenario": {"preset", "name", "mu_s", "mu_n", "noise", "sigma"},
    "detector": {"kind", "m", "eta", "pd"},
    "policy": {"compare", "rule", "ties", "runs"},
    "sweep": {"thresholds", "nc", "seed"},
    "output": {"format"},
}


def _line_of(text: str, section: str, key: str | None = None):
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            k = re.split(r"[=:]", stripped, maxsplit=1)[0].strip().lower()
            if k == key:
                return i
    return None


def parse_int_list(text: str, what: str = "list") -> tuple:
    try:
        values = tuple(int(v) for v in re.split(r"[,\s]+", text.strip()) if v)
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}", field=what) from None
    if not values:
        raise ConfigError("empty list", field=what)
    return values


def parse_float_list(text: str, what: str = "list") -> tuple:
    try:
        values = tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}", field=what) from None
    if not values:
        raise ConfigError("empty list", field=what)
    return values


def parse_config(text: str) -> tuple[ScenarioConfig, tuple]:
    """Parse an INI-style scenario file into a base config and a sigma grid.

    Sections and keys::

        [scenario]  preset | name, mu_s, mu_n, noise, sigma (list)
        [detector]  kind (ideal|mapd), M, eta, pd
        [policy]    compare, rule, ties, runs
        [sweep]     thresholds (list), nc (list), seed
        [output]    format
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None

    for section in parser.sections():
        sec = section.lower()
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{section}]", line=_line_of(text, sec))
        for key in parser[section]:
            if key not in _KEYS[sec]:
                raise ConfigError("unknown key", field=f"{sec}.{key}", line=_line_of(text, sec, key))

    def get(sec, key, conv, default):
        if not parser.has_option(sec, key):
            return default
        raw = parser.get(sec, key)
        try:
            return conv(raw)
        except (ValueError, ConfigError) as exc:
            msg = str(exc) if isinstance(exc, ConfigError) else f"invalid value {raw!r}"
            raise ConfigError(msg.split(": ", 1)[-1], field=f"{sec}.{key}", line=_line_of(text, sec, key)) from None

    try:
        preset = get("scenario", "preset", str, None)
        if preset is not None:
            base = ScenarioConfig.from_preset(preset.strip())
        else:
            base = ScenarioConfig(name="custom")
        mu_s = get("scenario", "mu_s", float, base.mu_s)
        mu_n = get("scenario", "mu_n", float, base.mu_n)
        name = get("scenario", "name", str, base.name)
        noise = get("scenario", "noise", str, base.noise_model).strip()
        sigmas = get("scenario", "sigma", lambda s: parse_float_list(s, "scenario.sigma"), (0.0,))

        kind = get("detector", "kind", str, "ideal").strip().lower()
        M = get("detector", "m", int, 16)
        eta = get("detector", "eta", float, 0.1)
        pd = get("detector", "pd", float, 1e-4)
        detector = _detector(kind, M, eta, pd, explicit=any(
            parser.has_option("detector", k) for k in ("m", "eta", "pd")))

        policy = DecisionPolicy(
            compare=get("policy", "compare", str, GEQ).strip(),
            rule=get("policy", "rule", str, RULES[0]).strip(),
            ties=get("policy", "ties", str, TIES_INCONCLUSIVE).strip(),
            runs=get("policy", "runs", int, DecisionPolicy().runs),
        )
        cfg = ScenarioConfig(
            name=name.strip(),
            mu_s=mu_s,
            mu_n=mu_n,
            noise_model=noise,
            sigma=sigmas[0],
            detector=detector,
            policy=policy,
            thresholds=get("sweep", "thresholds", lambda s: parse_int_list(s, "sweep.thresholds"), DEFAULT_THRESHOLDS),
            nc_values=get("sweep", "nc", lambda s: parse_int_list(s, "sweep.nc"), DEFAULT_NC),
            seed=get("sweep", "seed", int, 0),
            output_format=get("output", "format", str, "csv").strip(),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    for s in sigmas:
        if not s >= 0:
            raise ConfigError("sigma must be >= 0", field="scenario.sigma", line=_line_of(text, "scenario", "sigma"))
    return cfg, sigmas


def _detector(kind, M, eta, pd, explicit=False):
    if kind == "ideal":
        if explicit:
            raise ConfigError("M, eta and pd apply only to the mapd detector", field="detector")
        return DetectorModel.ideal()
    if kind in ("mapd", "multiplexed"):
        return DetectorModel.multiplexed(M, eta, pd)
    raise ConfigError(f"unknown detector kind {kind!r}; choose ideal or mapd", field="detector.kind")


def load_config(path) -> tuple[ScenarioConfig, tuple]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


__all__ = [
    "CSV_COLUMNS",
    "DEFAULT_NC",
    "DEFAULT_SIGMA_GRID",
    "DEFAULT_THRESHOLDS",
    "GEQ",
    "GT",
    "PRESETS",
    "TIES_SUCCESS",
    "ScenarioConfig",
    "SweepResult",
    "SweepRow",
    "build_bin_distributions",
    "combine_results",
    "emit",
    "load_config",
    "parse_config",
    "run_scenario",
]
