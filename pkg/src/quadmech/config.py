"""Run configuration parsed from an INI-style text file.

Sections: model, hilbert, grid, sweep, output.  Every key has a
documented default (the SCHEMA table below is the single source of
truth); unknown sections or keys are rejected.  Values left empty in
the file mean "unset" for optional keys and are an error otherwise.
"""

import configparser
from dataclasses import dataclass

from .errors import ConfigError, InvalidDimensionError
from .hilbert import HilbertSpec
from .model import ModelParams
from .dynamics import TimeGrid


def _float_list(text):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default, doc).  A default of None marks an optional key.
SCHEMA = {
    "model": {
        "omega0": (float, 2.0, "cavity frequency / omega_m"),
        "g": (float, 0.003, "quadratic coupling / omega_m"),
        "e": (float, 0.0, "drive amplitude / omega_m"),
        "omega_d": (float, 1.0, "drive frequency / omega_m"),
        "gamma_o": (float, 0.1, "optical decay rate / omega_m"),
        "gamma_m": (float, 1e-7, "mechanical decay rate / omega_m"),
        "nbar_m": (float, 1000.0, "thermal phonon occupation (wins over T)"),
        "t_kelvin": (float, None, "bath temperature in kelvin (needs omega_m_hz)"),
        "p_in": (float, None, "input power in watts (informational)"),
        "omega_m_hz": (float, None, "mechanical frequency in rad/s for T -> nbar"),
    },
    "hilbert": {
        "n_cav": (int, 10, "cavity Fock truncation"),
        "n_mech": (int, 60, "mechanical Fock truncation"),
    },
    "grid": {
        "t_start": (float, 0.0, "start of the time grid (units 1/omega_m)"),
        "t_end": (float, 20.0, "end of the time grid"),
        "n_steps": (int, 400, "number of grid intervals (n_steps + 1 samples)"),
        "h": (float, None, "master-equation step; default min(0.01, 0.05/omega_max)"),
        "alpha": (float, 1.0, "coherent amplitude of the initial cavity state"),
        "condition_n": (int, 1, "photon number for the condition subcommand"),
        "condition_times": (_float_list, None,
                            "times for condition; default pi/(2 chi_n)"),
        "wigner_times": (_float_list, (), "times at which Wigner CSVs are written"),
        "q_max": (float, 4.0, "half-width of the square Wigner grid"),
        "n_grid": (int, 81, "points per Wigner axis"),
    },
    "sweep": {
        "n_min": (int, 0, "first photon number of the r(n) sweep"),
        "n_max": (int, 500, "last photon number of the r(n) sweep"),
        "g_min": (float, 0.0, "start of the coupling sweep"),
        "g_max": (float, 0.1, "end of the coupling sweep"),
        "g_points": (int, 201, "number of coupling samples"),
        "k_max": (int, 5, "largest mechanical label in spectra"),
        "sector_n_max": (int, 3, "largest photon sector in spectra"),
    },
    "output": {
        "dir": (str, "out", "output directory (CLI --out and env override win)"),
        "wigner": (_bool, False, "emit Wigner CSVs at wigner_times"),
    },
}


# keys that accept the literal value `none` (meaning: unset)
NULLABLE = {
    ("model", "nbar_m"), ("model", "t_kelvin"), ("model", "p_in"),
    ("model", "omega_m_hz"), ("grid", "h"), ("grid", "condition_times"),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration; construction implies validity."""

    params: ModelParams
    spec: HilbertSpec
    grid: TimeGrid
    h: float | None
    alpha: float
    condition_n: int
    condition_times: tuple | None
    wigner_times: tuple
    q_max: float
    n_grid: int
    n_min: int
    n_max: int
    g_min: float
    g_max: float
    g_points: int
    k_max: int
    sector_n_max: int
    out_dir: str
    wigner: bool
    raw: dict  # resolved {section: {key: value}} for the manifest


def default_text():
    """A config file with every key at its default, fully commented."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, default, doc) in keys.items():
            shown = "" if default is None else (
                " ".join(str(v) for v in default)
                if isinstance(default, tuple) else str(default))
            lines.append(f"{key} = {shown}  ; {doc}")
        lines.append("")
    return "\n".join(lines)


def _resolve(cp):
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    resolved = {}
    for section, keys in SCHEMA.items():
        resolved[section] = {}
        for key, (parse, default, _) in keys.items():
            if cp.has_option(section, key) and cp.get(section, key).strip() != "":
                text = cp.get(section, key)
                if text.strip().lower() == "none":
                    if (section, key) not in NULLABLE:
                        raise ConfigError(
                            f"[{section}] {key} cannot be unset")
                    value = None
                else:
                    try:
                        value = parse(text)
                    except ValueError as exc:
                        raise ConfigError(
                            f"bad value for [{section}] {key}: {text!r} ({exc})")
            else:
                value = default
            resolved[section][key] = value
    return resolved


def load_config(path=None, text=None):
    """Parse a config file (or literal text) into a RunConfig.

    Raises ConfigError on unknown keys, unparsable values, or values
    that violate the model invariants; nothing is written to disk.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        if text is not None:
            cp.read_string(text)
        else:
            with open(path) as fh:
                cp.read_file(fh)
        r = _resolve(cp)
    except ConfigError:
        raise
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}")

    m = r["model"]
    try:
        params = ModelParams(
            omega0=m["omega0"], g=m["g"], E=m["e"], omega_d=m["omega_d"],
            gamma_o=m["gamma_o"], gamma_m=m["gamma_m"], nbar_m=m["nbar_m"],
            T=m["t_kelvin"], P_in=m["p_in"], omega_m_hz=m["omega_m_hz"])
        spec = HilbertSpec(n_cav=r["hilbert"]["n_cav"],
                           n_mech=r["hilbert"]["n_mech"])
        g = r["grid"]
        grid = TimeGrid(t_start=g["t_start"], t_end=g["t_end"],
                        n_steps=g["n_steps"])
    except (ValueError, InvalidDimensionError) as exc:
        raise ConfigError(str(exc))
    s = r["sweep"]
    if s["n_min"] < 0 or s["n_max"] < s["n_min"]:
        raise ConfigError("sweep needs 0 <= n_min <= n_max")
    if s["g_points"] < 1 or s["g_max"] < s["g_min"] or s["g_min"] < 0:
        raise ConfigError("sweep needs 0 <= g_min <= g_max and g_points >= 1")
    if s["k_max"] < 0 or s["sector_n_max"] < 0:
        raise ConfigError("sweep needs k_max >= 0 and sector_n_max >= 0")
    if g["n_grid"] < 2 or g["q_max"] <= 0:
        raise ConfigError("wigner grid needs n_grid >= 2 and q_max > 0")
    if g["h"] is not None and g["h"] <= 0:
        raise ConfigError("grid h must be positive when given")
    if not 0 <= g["condition_n"] < spec.n_cav:
        raise ConfigError(
            f"condition_n = {g['condition_n']} outside cavity truncation")
    return RunConfig(
        params=params, spec=spec, grid=grid, h=g["h"], alpha=g["alpha"],
        condition_n=g["condition_n"], condition_times=g["condition_times"],
        wigner_times=g["wigner_times"], q_max=g["q_max"], n_grid=g["n_grid"],
        n_min=s["n_min"], n_max=s["n_max"], g_min=s["g_min"],
        g_max=s["g_max"], g_points=s["g_points"], k_max=s["k_max"],
        sector_n_max=s["sector_n_max"],
        out_dir=r["output"]["dir"], wigner=r["output"]["wigner"], raw=r)
