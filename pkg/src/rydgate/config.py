"""Run-configuration files: INI sections with unit-suffixed keys.

Every physical quantity carries its unit in the key name; frequencies with a
``_mhz``/``_khz``/``_ghz`` suffix are the X/2pi convention and convert to
angular rad/us on load.  Unknown keys are rejected with the offending line.
"""

import configparser
import hashlib
import io
import math
from importlib import resources

import numpy as np

from .constants import ghz, khz, mhz
from .dynamics import Propagation
from .hyperfine import HyperfineTable
from .model import DecayRates, DephasingRates, InteractionSpec, PhysicalModel
from .noise import BeamGeometry, FluctuationAmplitudes, NoiseConfig, ThermalConfig
from .optimizer import GAConfig, SearchSpace
from .pulses import BluePulse, DetuningWaveform, PulseSet, RedPulse


class ConfigError(ValueError):
    pass


def _typ_float(s):
    return float(s)


def _typ_int(s):
    return int(s)


def _typ_bool(s):
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _typ_str(s):
    return s.strip()


def _typ_float_list(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _typ_str_list(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _typ_opt_float(s):
    return None if not s.strip() else float(s)


# schema: section -> key -> (parser, default); default None with no parser
# marker means "required" is not used; all keys here are optional with the
# listed default.
SCHEMA = {
    "model": {
        "gamma_e_mhz": (_typ_float, 3.0),
        "gamma_d_khz": (_typ_float, 3.0),
        "gamma_p_khz": (_typ_float, 3.0),
        "gamma_f_khz": (_typ_float, 3.0),
        "gamma_re_khz": (_typ_float, 0.0),
        "gamma_eg0_khz": (_typ_float, 0.0),
        "gamma_eg1_khz": (_typ_float, 0.0),
        "c3_ghz_um3": (_typ_float, 23.276),
        "r0_um": (_typ_float, 9.0),
        "theta_deg": (_typ_float, 90.0),
        "b0_mhz": (_typ_opt_float, None),
        "per_channel_jumps": (_typ_bool, False),
        "jump_normalization": (_typ_str, "half"),
        "control_eg_dephasing": (_typ_bool, False),
        "delta_big_ghz": (_typ_float, 4.0),
        "zero_decays": (_typ_bool, False),
    },
    "pulses": {
        "gate_time_us": (_typ_float, 1.0),
        "red_peak_mhz": (_typ_float, 268.0),
        "red_width_us": (_typ_float, 0.15),
        "red_corrected": (_typ_bool, False),
        "blue_mode": (_typ_str, "constant"),
        "blue_const_mhz": (_typ_float, 240.0),
        "blue_gauss_mhz": (_typ_float, 0.0),
        "blue_width_us": (_typ_float, 1.0),
        "blue_offset_mhz": (_typ_float, 0.0),
        "detuning_mode": (_typ_str, "constant"),
        "delta_const_mhz": (_typ_float, 10.0 / (2 * math.pi)),
        "delta0_mhz": (_typ_float, 0.0),
        "delta1_mhz": (_typ_float, 0.0),
        "delta2_mhz": (_typ_float, 0.0),
    },
    "integrator": {
        "method": (_typ_str, "adaptive_rk"),
        "rtol": (_typ_float, 1e-9),
        "atol": (_typ_float, 1e-12),
        "dt_us": (_typ_float, 1e-5),
        "slice_width_us": (_typ_float, 3.2e-4),
        "sample_points": (_typ_int, 1000),
    },
    "noise": {
        "channels": (_typ_str_list, ()),
        "samples": (_typ_int, 500),
        "seed": (_typ_int, 1),
        "temperature_uk": (_typ_float, 30.0),
        "temperatures_uk": (_typ_float_list, ()),
        "trap_freq_x_khz": (_typ_float, 147.0),
        "trap_freq_y_khz": (_typ_float, 117.0),
        "trap_freq_z_khz": (_typ_float, 35.0),
        "delta_omega_r_mhz": (_typ_float, 0.0),
        "delta_omega_b_mhz": (_typ_float, 0.0),
        "gamma_re_max_khz": (_typ_float, 0.0),
        "gamma_eg0_max_khz": (_typ_float, 0.0),
        "gamma_eg1_max_khz": (_typ_float, 0.0),
        "delta_delta_max_khz": (_typ_float, 0.0),
        "doppler_geometry": (_typ_str, "counter"),
        "doppler_sampling": (_typ_str, "per_atom"),
        "waist_r_um": (_typ_float, 7.8),
        "waist_b_um": (_typ_float, 8.3),
        "position_sampling": (_typ_str, "relative_single"),
        "interatomic_axis": (_typ_str, "x"),
        "intensity_sampling": (_typ_str, "per_laser"),
        "gamma_eg_common": (_typ_bool, True),
        "campaign_method": (_typ_str, "magnus"),
        "campaign_slice_width_us": (_typ_float, 3.2e-4),
    },
    "scan": {
        "b0_values_mhz": (_typ_float_list, ()),
        "b0_min_mhz": (_typ_float, 2.0),
        "b0_max_mhz": (_typ_float, 150.0),
        "b0_step_mhz": (_typ_float, 2.0),
    },
    "ga": {
        "population": (_typ_int, 64),
        "generations": (_typ_int, 200),
        "crossover_rate": (_typ_float, 0.7),
        "mutation_scale": (_typ_float, 0.05),
        "mutation_decay": (_typ_float, 0.98),
        "elitism": (_typ_int, 2),
        "tournament": (_typ_int, 3),
        "seed": (_typ_int, 1),
        "eval_budget": (_typ_int, 10000),
        "target_fidelity": (_typ_opt_float, None),
        "search_rtol": (_typ_float, 1e-7),
        "final_rtol": (_typ_float, 1e-9),
        "free": (_typ_str_list, ()),
        "red_peak_bounds_mhz": (_typ_float_list, (100.0, 600.0)),
        "red_width_bounds_us": (_typ_float_list, (0.02, 0.5)),
        "blue_gauss_bounds_mhz": (_typ_float_list, (-600.0, 600.0)),
        "blue_width_bounds_us": (_typ_float_list, (0.05, 1.2)),
        "blue_offset_bounds_mhz": (_typ_float_list, (0.0, 600.0)),
        "delta0_bounds_mhz": (_typ_float_list, (-100.0, 100.0)),
        "delta1_bounds_mhz": (_typ_float_list, (-100.0, 100.0)),
        "delta2_bounds_mhz": (_typ_float_list, (-100.0, 100.0)),
    },
    "hyperfine": {
        "delta_prime_mode": (_typ_str, "zero"),
        "delta_prime_mhz": (_typ_float, 0.0),
        "alpha_r": (_typ_float_list, (math.sqrt(5 / 24), math.sqrt(1 / 8), 0.0)),
        "alpha_0": (_typ_float_list,
                    (math.sqrt(1 / 120), math.sqrt(1 / 8), math.sqrt(1 / 5))),
        "delta_fe_ghz": (_typ_float_list, (4.0, 3.843, 3.576)),
        "sample_points": (_typ_int, 400),
        "rtol": (_typ_float, 1e-9),
    },
    "output": {
        "directory": (_typ_str, "out"),
        "formats": (_typ_str_list, ("csv", "json")),
    },
}

_UNIT_BOUNDS = {"red_width_bounds_us": 1.0, "blue_width_bounds_us": 1.0}


def _find_line(text, section, key):
    in_section = False
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            in_section = s[1:-1].strip() == section
        elif in_section and s.split("=")[0].strip() == key:
            return n
    return None


class RunConfig:
    """Validated, normalized configuration (values still in file units)."""

    def __init__(self, data, source_text=""):
        self.data = data
        self.source_text = source_text

    def __getitem__(self, section):
        return self.data[section]

    def get(self, section, key):
        return self.data[section][key]

    def copy(self):
        return RunConfig({s: dict(kv) for s, kv in self.data.items()},
                         self.source_text)

    # -- serialization ------------------------------------------------------
    def dumps(self):
        out = io.StringIO()
        for section in sorted(self.data):
            out.write(f"[{section}]\n")
            for key in sorted(self.data[section]):
                val = self.data[section][key]
                out.write(f"{key} = {_format_value(val)}\n")
            out.write("\n")
        return out.getvalue()

    def hash(self):
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]

    def apply_overrides(self, overrides):
        """Apply --set section.key=value strings in place."""
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(
                    f"override must look like section.key=value, got {item!r}")
            target, raw = item.split("=", 1)
            section, key = target.split(".", 1)
            section, key = section.strip(), key.strip()
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            parser, _ = SCHEMA[section][key]
            try:
                self.data.setdefault(section, {})[key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
        return self


def _format_value(val):
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ", ".join(_format_value(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    if val is None:
        return ""
    return str(val)


def loads(text):
    """Parse and validate an INI configuration string."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"INI parse error: {exc}") from exc
    data = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        data[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                line = _find_line(text, section, key)
                where = f" (line {line})" if line else ""
                raise ConfigError(f"unknown key {section}.{key}{where}")
            typ, _default = SCHEMA[section][key]
            try:
                data[section][key] = typ(raw)
            except ValueError as exc:
                line = _find_line(text, section, key)
                where = f" (line {line})" if line else ""
                raise ConfigError(
                    f"bad value for {section}.{key}{where}: {exc}") from exc
    # fill defaults for known sections that are present or needed later
    for section, keys in SCHEMA.items():
        data.setdefault(section, {})
        for key, (_typ, default) in keys.items():
            data[section].setdefault(key, default)
    return RunConfig(data, text)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def preset_names():
    pkg = resources.files("rydgate") / "presets"
    return sorted(p.name[:-4] for p in pkg.iterdir() if p.name.endswith(".ini"))


def load_preset(name):
    pkg = resources.files("rydgate") / "presets"
    path = pkg / f"{name}.ini"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return loads(text)


# ---------------------------------------------------------------------------
# builders: config -> domain objects

def build_model(cfg):
    m = cfg["model"]
    decays = DecayRates(
        gamma_e=mhz(m["gamma_e_mhz"]),
        gamma_d=khz(m["gamma_d_khz"]),
        gamma_p=khz(m["gamma_p_khz"]),
        gamma_f=khz(m["gamma_f_khz"]),
    )
    if m["zero_decays"]:
        decays = DecayRates(0.0, 0.0, 0.0, 0.0)
    dephasing = DephasingRates(
        gamma_re=khz(m["gamma_re_khz"]),
        gamma_eg0=khz(m["gamma_eg0_khz"]),
        gamma_eg1=khz(m["gamma_eg1_khz"]),
    )
    interaction = InteractionSpec(m["c3_ghz_um3"], m["r0_um"], m["theta_deg"])
    b0 = None if m["b0_mhz"] is None else mhz(m["b0_mhz"])
    return PhysicalModel(
        decays=decays,
        dephasing=dephasing,
        interaction=interaction,
        per_channel_jumps=m["per_channel_jumps"],
        jump_normalization=m["jump_normalization"],
        control_eg_dephasing=m["control_eg_dephasing"],
        b0_override=b0,
    )


def build_pulses(cfg):
    p = cfg["pulses"]
    tg = p["gate_time_us"]
    red = RedPulse(mhz(p["red_peak_mhz"]), p["red_width_us"], tg,
                   corrected=p["red_corrected"])
    if p["blue_mode"] == "constant":
        blue = BluePulse("constant", tg, omega_const=mhz(p["blue_const_mhz"]))
    else:
        blue = BluePulse("gaussian_offset", tg,
                         omega_gauss=mhz(p["blue_gauss_mhz"]),
                         width=p["blue_width_us"],
                         offset=mhz(p["blue_offset_mhz"]))
    if p["detuning_mode"] == "constant":
        det = DetuningWaveform("constant", tg, value=mhz(p["delta_const_mhz"]))
    else:
        det = DetuningWaveform("modulated", tg, d0=mhz(p["delta0_mhz"]),
                               d1=mhz(p["delta1_mhz"]), d2=mhz(p["delta2_mhz"]))
    return PulseSet(red=red, blue=blue, detuning=det,
                    delta_big=ghz(cfg["model"]["delta_big_ghz"]))


def build_propagation(cfg):
    i = cfg["integrator"]
    return Propagation(method=i["method"], rtol=i["rtol"], atol=i["atol"],
                       dt=i["dt_us"], slice_width=i["slice_width_us"],
                       sample_points=i["sample_points"])


def build_campaign_propagation(cfg):
    i = cfg["integrator"]
    n = cfg["noise"]
    return Propagation(method=n["campaign_method"], rtol=i["rtol"],
                       atol=i["atol"], dt=i["dt_us"],
                       slice_width=n["campaign_slice_width_us"], sample_points=0)


_AXES = {"x": 0, "y": 1, "z": 2}


def build_noise(cfg):
    n = cfg["noise"]
    thermal = ThermalConfig(
        temperature_uk=n["temperature_uk"],
        trap_freq_khz=(n["trap_freq_x_khz"], n["trap_freq_y_khz"],
                       n["trap_freq_z_khz"]),
    )
    beams = BeamGeometry(
        propagation=n["doppler_geometry"],
        waist_r_um=(n["waist_r_um"], n["waist_r_um"]),
        waist_b_um=(n["waist_b_um"], n["waist_b_um"]),
    )
    amplitudes = FluctuationAmplitudes(
        delta_omega_r=mhz(n["delta_omega_r_mhz"]),
        delta_omega_b=mhz(n["delta_omega_b_mhz"]),
        gamma_re_max=khz(n["gamma_re_max_khz"]),
        gamma_eg0_max=khz(n["gamma_eg0_max_khz"]),
        gamma_eg1_max=khz(n["gamma_eg1_max_khz"]),
        delta_detuning=khz(n["delta_delta_max_khz"]),
    )
    if n["interatomic_axis"] not in _AXES:
        raise ConfigError(f"interatomic_axis must be one of {sorted(_AXES)}")
    return NoiseConfig(
        thermal=thermal, beams=beams, amplitudes=amplitudes,
        samples=n["samples"], seed=n["seed"],
        position_sampling=n["position_sampling"],
        interatomic_axis=_AXES[n["interatomic_axis"]],
        doppler_sampling=n["doppler_sampling"],
        intensity_sampling=n["intensity_sampling"],
        gamma_eg_common=n["gamma_eg_common"],
    )


def build_scan_values(cfg):
    s = cfg["scan"]
    if s["b0_values_mhz"]:
        vals = np.asarray(s["b0_values_mhz"], dtype=float)
    else:
        vals = np.arange(s["b0_min_mhz"], s["b0_max_mhz"] + 1e-9, s["b0_step_mhz"])
    return mhz(vals)


def build_hyperfine_table(cfg):
    h = cfg["hyperfine"]
    return HyperfineTable(
        alpha_r=tuple(h["alpha_r"]),
        alpha_0=tuple(h["alpha_0"]),
        delta_fe=tuple(ghz(v) for v in h["delta_fe_ghz"]),
    )


def build_search_space(cfg, pulses):
    g = cfg["ga"]
    bounds = {}
    for name in g["free"]:
        key = {
            "red_peak": "red_peak_bounds_mhz",
            "red_width": "red_width_bounds_us",
            "blue_gauss": "blue_gauss_bounds_mhz",
            "blue_width": "blue_width_bounds_us",
            "blue_offset": "blue_offset_bounds_mhz",
            "delta0": "delta0_bounds_mhz",
            "delta1": "delta1_bounds_mhz",
            "delta2": "delta2_bounds_mhz",
        }.get(name)
        if key is None:
            raise ConfigError(f"unknown GA parameter {name!r} in ga.free")
        lo, hi = cfg["ga"][key]
        if key.endswith("_mhz"):
            lo, hi = mhz(lo), mhz(hi)
        bounds[name] = (lo, hi)
    return SearchSpace(seed_pulses=pulses, bounds=bounds)


def build_ga(cfg):
    g = cfg["ga"]
    return GAConfig(
        population=g["population"], generations=g["generations"],
        crossover_rate=g["crossover_rate"], mutation_scale=g["mutation_scale"],
        mutation_decay=g["mutation_decay"], elitism=g["elitism"],
        tournament=g["tournament"], seed=g["seed"],
        eval_budget=g["eval_budget"], target_fidelity=g["target_fidelity"],
        search_rtol=g["search_rtol"], final_rtol=g["final_rtol"],
    )
