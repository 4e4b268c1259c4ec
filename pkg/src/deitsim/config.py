"""Configuration documents.

Grammar
-------
A document is a sequence of lines. Blank lines and lines starting with
``#`` or ``;`` are ignored, and text after an unquoted `` #`` is a comment.
``[name]`` opens a section; every other line is ``key = value`` inside a
section. Keys carry their unit as a suffix (``coupling_power_mW``,
``top_rate_Hz``); a key whose stem is known but whose unit differs is
rejected as a unit mismatch. Duplicate keys are errors.

Sections and keys are listed in :data:`KEYS`. The ``[sweep]`` section is
parsed into a :class:`SweepSpec`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

PHASE_LOCKED = "phase-locked"
INDEPENDENT = "independent"
DEFAULT_LINEWIDTH_MHZ = {PHASE_LOCKED: 0.0, INDEPENDENT: 0.5}


@dataclass(frozen=True)
class KeySpec:
    section: str
    stem: str
    unit: str
    kind: object
    default: object = None
    doc: str = ""

    @property
    def name(self):
        return f"{self.stem}_{self.unit}" if self.unit else self.stem


def _choice(*options):
    return tuple(options)


_FLOAT, _INT, _BOOL, _FLOAT_OR_AUTO, _STR = "float", "int", "bool", "float|auto", "str"

KEYS = (
    # fields
    KeySpec("fields", "coupling_rabi", "MHz", _FLOAT, doc="coupling Rabi frequency"),
    KeySpec("fields", "coupling_power", "mW", _FLOAT),
    KeySpec("fields", "coupling_radius", "mm", _FLOAT, 1.0),
    KeySpec("fields", "coupling_alpha", "", _FLOAT, None,
            "effective transition strength; default back-solved"),
    KeySpec("fields", "signal_rabi", "MHz", _FLOAT),
    KeySpec("fields", "signal_power", "mW", _FLOAT),
    KeySpec("fields", "signal_radius", "mm", _FLOAT, 0.5),
    KeySpec("fields", "signal_alpha", "", _FLOAT),
    KeySpec("fields", "probe_rabi", "MHz", _FLOAT),
    KeySpec("fields", "probe_power", "uW", _FLOAT),
    KeySpec("fields", "probe_radius", "mm", _FLOAT, 0.5),
    KeySpec("fields", "probe_alpha", "", _FLOAT),
    KeySpec("fields", "coupling_detuning", "MHz", _FLOAT, 0.0),
    KeySpec("fields", "signal_detuning", "MHz", _FLOAT, 10.0),
    KeySpec("fields", "laser_mode", "", _choice(PHASE_LOCKED, INDEPENDENT), PHASE_LOCKED),
    KeySpec("fields", "relative_linewidth", "MHz", _FLOAT, None,
            "default 0 for phase-locked, 0.5 for independent lasers"),
    # cell
    KeySpec("cell", "temperature", "C", _FLOAT),
    KeySpec("cell", "density", "cm3", _FLOAT),
    KeySpec("cell", "top_rate", "Hz", _FLOAT),
    KeySpec("cell", "doppler_temperature", "C", _FLOAT),
    KeySpec("cell", "cell_length", "m", _FLOAT, 0.075),
    KeySpec("cell", "optical_depth", "", _FLOAT_OR_AUTO, "auto"),
    KeySpec("cell", "zeeman_rate_aa", "Hz", _FLOAT, 20.0),
    KeySpec("cell", "zeeman_rate_bb", "Hz", _FLOAT, 20.0),
    KeySpec("cell", "excited_decay", "MHz", _FLOAT, 4.6),
    KeySpec("cell", "top_rate_constant", "cm3_s", _FLOAT, 6e-10),
    # model
    KeySpec("model", "population_decay", "", _choice("trace-conserving", "literal"),
            "trace-conserving"),
    KeySpec("model", "population_fields", "", _choice("reference", "self-consistent"),
            "reference"),
    KeySpec("model", "reference_coupling_rabi", "MHz", _FLOAT, 20.0),
    KeySpec("model", "reference_signal_rabi", "MHz", _FLOAT, 8.0),
    KeySpec("model", "susceptibility", "", _choice("closed-form", "coherence-solve"),
            "closed-form"),
    KeySpec("model", "ablate_srs", "", _BOOL, False),
    KeySpec("model", "doppler", "", _BOOL, True),
    KeySpec("model", "quadrature_order", "", _INT, 64),
    # spectrum
    KeySpec("spectrum", "probe_start", "MHz", _FLOAT, -40.0),
    KeySpec("spectrum", "probe_stop", "MHz", _FLOAT, 50.0),
    KeySpec("spectrum", "probe_points", "", _INT, 2001),
    KeySpec("spectrum", "grid_reference", "", _choice("absolute", "signal"), "absolute"),
)

SWEEP_KEYS = (
    KeySpec("sweep", "parameter", "", _STR),
    KeySpec("sweep", "start", "", _STR),
    KeySpec("sweep", "stop", "", _STR),
    KeySpec("sweep", "count", "", _INT),
    KeySpec("sweep", "values", "", _STR),
    KeySpec("sweep", "output", "", _choice("gain", "populations", "spectrum"), "gain"),
    KeySpec("sweep", "series_parameter", "", _STR),
    KeySpec("sweep", "series_values", "", _STR),
)

KEY_BY_NAME = {k.name: k for k in KEYS}
SWEEP_KEY_BY_NAME = {k.name: k for k in SWEEP_KEYS}
SECTIONS = ("fields", "cell", "model", "spectrum", "sweep")
REQUIRED = ("coupling_rabi_MHz | coupling_power_mW",
            "signal_rabi_MHz | signal_power_mW",
            "probe_rabi_MHz | probe_power_uW",
            "temperature_C | density_cm3 | top_rate_Hz")

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(spec: KeySpec, raw: str, line=None):
    kind = spec.kind
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind == _FLOAT_OR_AUTO:
            return "auto" if raw.lower() == "auto" else float(raw)
        if kind == _BOOL:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError
        if kind == _STR:
            return raw
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {spec.name}", line, spec.name) from None
    if raw not in kind:
        raise ConfigError(f"{spec.name} must be one of {', '.join(kind)}", line, spec.name)
    return raw


def convert_value(name, raw):
    """Convert a string to the type of config key ``name``."""
    spec = KEY_BY_NAME.get(name)
    if spec is None:
        raise ConfigError(f"unknown key {name}", key=name)
    return _convert(spec, raw)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class SimulationConfig:
    """Values set explicitly in a document; unset keys are None.

    Field names equal the document keys. Defaults are applied when the
    config is resolved, so a document round-trips exactly.
    """

    coupling_rabi_MHz: float = None
    coupling_power_mW: float = None
    coupling_radius_mm: float = None
    coupling_alpha: float = None
    signal_rabi_MHz: float = None
    signal_power_mW: float = None
    signal_radius_mm: float = None
    signal_alpha: float = None
    probe_rabi_MHz: float = None
    probe_power_uW: float = None
    probe_radius_mm: float = None
    probe_alpha: float = None
    coupling_detuning_MHz: float = None
    signal_detuning_MHz: float = None
    laser_mode: str = None
    relative_linewidth_MHz: float = None
    temperature_C: float = None
    density_cm3: float = None
    top_rate_Hz: float = None
    doppler_temperature_C: float = None
    cell_length_m: float = None
    optical_depth: object = None
    zeeman_rate_aa_Hz: float = None
    zeeman_rate_bb_Hz: float = None
    excited_decay_MHz: float = None
    top_rate_constant_cm3_s: float = None
    population_decay: str = None
    population_fields: str = None
    reference_coupling_rabi_MHz: float = None
    reference_signal_rabi_MHz: float = None
    susceptibility: str = None
    ablate_srs: bool = None
    doppler: bool = None
    quadrature_order: int = None
    probe_start_MHz: float = None
    probe_stop_MHz: float = None
    probe_points: int = None
    grid_reference: str = None
    lines: dict = field(default=None, compare=False, repr=False)

    def get(self, name):
        """Value of ``name`` with its documented default applied."""
        value = getattr(self, name)
        if value is None:
            return KEY_BY_NAME[name].default
        return value

    def is_set(self, name):
        return getattr(self, name) is not None

    def line_of(self, name):
        return (self.lines or {}).get(name)

    def with_value(self, name, value):
        if name not in KEY_BY_NAME:
            raise ConfigError(f"unknown key {name}", key=name)
        if isinstance(value, str):
            value = convert_value(name, value)
        elif KEY_BY_NAME[name].kind == _FLOAT and value is not None:
            value = float(value)
        return replace(self, **{name: value})

    def explicit_items(self):
        return [(k.name, getattr(self, k.name)) for k in KEYS
                if getattr(self, k.name) is not None]


@dataclass(frozen=True)
class SweepSpec:
    """Parameter sweep.

    Attributes
    ----------
    parameter : str
        Config key to vary.
    values : tuple
        Grid values, already converted to the key's type.
    output : {"gain", "populations", "spectrum"}
    series_parameter : str or None
        Optional second key; the sweep is repeated for each series value.
    series_values : tuple
    """

    parameter: str
    values: tuple
    output: str = "gain"
    series_parameter: str = None
    series_values: tuple = ()

    def __post_init__(self):
        if self.parameter not in KEY_BY_NAME:
            raise ConfigError(f"sweep parameter {self.parameter!r} is not a config key",
                              key="parameter")
        if len(self.values) < 1:
            raise ConfigError("sweep grid needs at least one value", key="count")
        if self.output not in ("gain", "populations", "spectrum"):
            raise ConfigError(f"unknown sweep output {self.output!r}", key="output")
        if self.series_parameter is not None:
            if self.series_parameter not in KEY_BY_NAME:
                raise ConfigError(f"series parameter {self.series_parameter!r} is not "
                                  "a config key", key="series_parameter")
            if len(self.series_values) < 1:
                raise ConfigError("series needs at least one value", key="series_values")

    @classmethod
    def linear(cls, parameter, start, stop, count, output="gain", **kw):
        if count < 1:
            raise ConfigError("sweep count must be >= 1", key="count")
        if count == 1:
            vals = (float(start),)
        else:
            step = (stop - start) / (count - 1)
            vals = tuple(float(start + i * step) for i in range(count))
        return cls(parameter, vals, output, **kw)


def _split_list(raw):
    return [v.strip() for v in raw.split(",") if v.strip()]


def _sweep_from_entries(entries):
    def get(name):
        return entries.get(name, (None, None))

    param, pline = get("parameter")
    if param is None:
        raise ConfigError("[sweep] needs a parameter", key="parameter")
    if param not in KEY_BY_NAME:
        raise ConfigError(f"sweep parameter {param!r} is not a config key", pline, "parameter")
    values_raw, vline = get("values")
    start, sline = get("start")
    stop, _ = get("stop")
    count, cline = get("count")
    output = get("output")[0] or "gain"
    if values_raw is not None and (start is not None or stop is not None):
        raise ConfigError("give either values or start/stop/count", vline, "values")
    if values_raw is not None:
        values = tuple(convert_value(param, v) for v in _split_list(values_raw))
        spec_kw = dict(parameter=param, values=values, output=output)
    else:
        if start is None or stop is None or count is None:
            raise ConfigError("sweep needs start, stop and count", sline or cline, "start")
        try:
            lo, hi = float(start), float(stop)
        except ValueError:
            raise ConfigError("sweep start/stop must be numbers", sline, "start") from None
        spec_kw = None
    series, sp_line = get("series_parameter")
    series_vals = ()
    if series is not None:
        if series not in KEY_BY_NAME:
            raise ConfigError(f"series parameter {series!r} is not a config key", sp_line,
                              "series_parameter")
        raw, line = get("series_values")
        if raw is None:
            raise ConfigError("series_values missing", sp_line, "series_values")
        series_vals = tuple(convert_value(series, v) for v in _split_list(raw))
    if spec_kw is None:
        return SweepSpec.linear(param, lo, hi, count, output, series_parameter=series,
                                series_values=series_vals)
    return SweepSpec(**spec_kw, series_parameter=series, series_values=series_vals)


def _strip_comment(text):
    for marker in (" #", "\t#", " ;", "\t;"):
        pos = text.find(marker)
        if pos >= 0:
            text = text[:pos]
    return text.strip()


def _unit_mismatch(key):
    for spec in list(KEYS) + list(SWEEP_KEYS):
        if spec.unit and key.startswith(spec.stem + "_") and key != spec.name:
            return spec
    return None


@dataclass(frozen=True)
class ConfigDocument:
    config: SimulationConfig
    sweep: SweepSpec = None


def parse_document(text):
    """Parse a document into a :class:`ConfigDocument`.

    Raises
    ------
    ConfigError
        With line number and key for unknown keys, unit mismatches,
        duplicates, malformed lines and over-specification.
    """
    section = None
    values, lines = {}, {}
    sweep_entries = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        stripped = _strip_comment(stripped)
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"malformed section header {stripped!r}", lineno)
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if section is None:
            raise ConfigError(f"key {key} outside any section", lineno, key)
        table = SWEEP_KEY_BY_NAME if section == "sweep" else KEY_BY_NAME
        spec = table.get(key)
        if spec is None:
            other = _unit_mismatch(key)
            if other is not None:
                raise ConfigError(f"unit-suffix mismatch for {key}: expected {other.name}",
                                  lineno, key)
            raise ConfigError(f"unknown key {key}", lineno, key)
        if spec.section != section:
            raise ConfigError(f"key {key} belongs in [{spec.section}], not [{section}]",
                              lineno, key)
        if raw == "":
            raise ConfigError(f"empty value for {key}", lineno, key)
        if section == "sweep":
            if key in sweep_entries:
                raise ConfigError(f"duplicate key {key}", lineno, key)
            if spec.kind not in (_STR,):
                _convert(spec, raw, lineno)
            sweep_entries[key] = (raw if spec.kind == _STR else _convert(spec, raw, lineno),
                                  lineno)
            continue
        if key in values:
            raise ConfigError(f"duplicate key {key} (first on line {lines[key]})", lineno, key)
        values[key] = _convert(spec, raw, lineno)
        lines[key] = lineno
    config = SimulationConfig(**values, lines=lines)
    check_config(config)
    sweep = _sweep_from_entries(sweep_entries) if sweep_entries else None
    return ConfigDocument(config, sweep)


def parse_config(text):
    """Parse a document and return its :class:`SimulationConfig`."""
    return parse_document(text).config


def check_config(config: SimulationConfig):
    """Check presence and exclusivity rules.

    Raises
    ------
    ConfigError
    """
    missing = []
    for beam, power_key in (("coupling", "coupling_power_mW"),
                            ("signal", "signal_power_mW"),
                            ("probe", "probe_power_uW")):
        rabi_key = f"{beam}_rabi_MHz"
        has_rabi, has_power = config.is_set(rabi_key), config.is_set(power_key)
        if has_rabi and has_power:
            raise ConfigError(f"{beam} field over-specified: give {rabi_key} or "
                              f"{power_key}, not both", config.line_of(power_key), power_key)
        if has_rabi:
            for extra in (f"{beam}_radius_mm", f"{beam}_alpha"):
                if config.is_set(extra):
                    raise ConfigError(f"{extra} only applies with {power_key}",
                                      config.line_of(extra), extra)
        if not (has_rabi or has_power):
            missing.append(f"{rabi_key} | {power_key}")
    chain = [k for k in ("temperature_C", "density_cm3", "top_rate_Hz") if config.is_set(k)]
    if len(chain) > 1:
        key = chain[1]
        raise ConfigError("ToP rate over-specified: give exactly one of temperature_C, "
                          f"density_cm3, top_rate_Hz (found {', '.join(chain)})",
                          config.line_of(key), key)
    if not chain:
        missing.append("temperature_C | density_cm3 | top_rate_Hz")
    if missing:
        raise ConfigError("missing required keys: " + "; ".join(missing))
    if config.is_set("temperature_C") and config.is_set("doppler_temperature_C"):
        raise ConfigError("doppler_temperature_C conflicts with temperature_C",
                          config.line_of("doppler_temperature_C"), "doppler_temperature_C")
    mode = config.get("laser_mode")
    if mode not in DEFAULT_LINEWIDTH_MHZ:
        raise ConfigError(f"unknown laser mode {mode!r}", config.line_of("laser_mode"),
                          "laser_mode")
    for name in ("probe_points", "quadrature_order"):
        if config.get(name) < 1:
            raise ConfigError(f"{name} must be >= 1", config.line_of(name), name)
    return config


def emit_config(config: SimulationConfig, sweep: SweepSpec = None):
    """Canonical document containing the explicitly set keys."""
    out = []
    for section in SECTIONS[:-1]:
        items = [(k.name, getattr(config, k.name)) for k in KEYS
                 if k.section == section and getattr(config, k.name) is not None]
        if not items:
            continue
        out.append(f"[{section}]")
        out.extend(f"{name} = {_format(v)}" for name, v in items)
        out.append("")
    if sweep is not None:
        out.append("[sweep]")
        out.append(f"parameter = {sweep.parameter}")
        out.append("values = " + ", ".join(_format(v) for v in sweep.values))
        out.append(f"output = {sweep.output}")
        if sweep.series_parameter is not None:
            out.append(f"series_parameter = {sweep.series_parameter}")
            out.append("series_values = " + ", ".join(_format(v) for v in sweep.series_values))
        out.append("")
    return "\n".join(out)


CONFIG_FIELDS = tuple(f.name for f in fields(SimulationConfig) if f.name != "lines")
