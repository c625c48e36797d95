"""Flat key-value run configuration.

Format: one `key = value` per line, `#` comments, dotted keys. The keys map
one-to-one onto scenario fields and regularization weights so a run is fully
described by a small text file plus repeatable `--override key=value` flags.
"""

from dataclasses import fields as dc_fields

from .errors import ConfigError
from .scenarios import ScenarioConfig, make_scenario

# dotted config key -> (target, attribute); target "scenario" or "weights"
KEY_MAP = {
    "mesh.nx": ("scenario", "nx"),
    "mesh.ny": ("scenario", "ny"),
    "dt": ("scenario", "dt"),
    "t_final": ("scenario", "t_final"),
    "scheme": ("scenario", "scheme"),
    "truth.scheme": ("scenario", "truth_scheme"),
    "method": ("scenario", "method"),
    "h0": ("scenario", "h0"),
    "velocity": ("scenario", "velocity"),
    "weights.alpha": ("weights", "alpha"),
    "weights.beta": ("weights", "beta"),
    "weights.gamma": ("weights", "gamma"),
    "weights.delta": ("weights", "delta"),
    "tvd.epsilon": ("weights", "epsilon"),
    "tvd.zeta": ("weights", "zeta"),
    "tvd.mode": ("scenario", "tvd_mode"),
    "l1.kappa": ("weights", "kappa"),
    "l1.nu": ("weights", "nu"),
    "noise.sigma": ("scenario", "noise_sigma"),
    "noise.seed": ("scenario", "noise_seed"),
    "noise.mode": ("scenario", "noise_mode"),
    "solver.tol": ("scenario", "solver_tol"),
    "output.dir": ("scenario", "output_dir"),
    "output.every": ("scenario", "output_every"),
    "observations": ("scenario", "observations_path"),
    "gamma.boundary": ("scenario", "gamma_boundary"),
    "kkt.mode": ("scenario", "kkt_mode"),
    "obs.mode": ("scenario", "obs_mode"),
    "run.on_opt_failure": ("scenario", "on_opt_failure"),
    "alpha_b": ("scenario", "alpha_b"),
}

_INT_FIELDS = {"nx", "ny", "noise_seed", "output_every"}


def parse_config_text(text):
    """Parse `key = value` lines into an ordered dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        out[key] = value
    return out


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def apply_overrides(cfg, overrides):
    """Apply repeatable `key=value` strings on top of a config dict."""
    cfg = dict(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        cfg[key] = value
    return cfg


def _convert(attr, value):
    if attr == "velocity":
        try:
            return tuple(float(part) for part in value.replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"bad velocity {value!r}") from exc
    if attr in _INT_FIELDS:
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(f"expected integer for {attr}, got {value!r}") from exc
    try:
        return float(value)
    except ValueError:
        return value


def build_scenario(cfg) -> ScenarioConfig:
    """Construct the scenario: preset first, then field-by-field overrides."""
    cfg = dict(cfg)
    name = cfg.pop("scenario", None)
    if name is None:
        raise ConfigError("config must set 'scenario'")
    method = cfg.pop("method", None)
    sigma = cfg.pop("noise.sigma", None)
    scen = make_scenario(name, method=method,
                         sigma=None if sigma is None else float(sigma))
    valid_scenario = {f.name for f in dc_fields(ScenarioConfig)}
    for key, value in cfg.items():
        if key not in KEY_MAP:
            raise ConfigError(f"unknown config key '{key}'")
        target, attr = KEY_MAP[key]
        if target == "scenario":
            if attr not in valid_scenario:
                raise ConfigError(f"unknown scenario field '{attr}'")
            setattr(scen, attr, _convert(attr, value))
        else:
            setattr(scen.weights, attr, float(value))
    return scen


def serialize_scenario(scen: ScenarioConfig):
    """Resolved flat config (stable ordering) for run provenance."""
    lines = [f"scenario = {scen.name}"]
    inverse_map = {}
    for key, (target, attr) in KEY_MAP.items():
        inverse_map[(target, attr)] = key
    for target, obj in (("scenario", scen), ("weights", scen.weights)):
        for f in dc_fields(obj):
            key = inverse_map.get((target, f.name))
            if key is None:
                continue
            value = getattr(obj, f.name)
            if f.name == "velocity":
                value = " ".join(f"{v:g}" for v in value)
            lines.append(f"{key} = {value}")
    return "\n".join(sorted(lines)) + "\n"
