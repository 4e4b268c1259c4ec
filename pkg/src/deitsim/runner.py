"""Resolve configs, run spectra and sweeps, and write output files."""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, atom
from .atom import CellConditions, FieldSet, LevelScheme, RelaxationModel
from .config import (DEFAULT_LINEWIDTH_MHZ, ConfigDocument, SimulationConfig,
                     SweepSpec, emit_config, parse_document)
from .doppler import (SpectrumSetup, doppler_average, extract_gain,
                      transmission_spectrum, two_level_reference)
from .errors import ConfigError, InvalidParameter
from .populations import (assemble_rate_system, level_label, populations_to_csv,
                          solve_steady_populations)
from .tripod import TripodParams, check_conditions

FIGURES = ("1b", "2a", "2b", "2d", "4a", "4b", "5a", "5b")


def _fmt(value):
    return f"{value:.9g}"


@dataclass(frozen=True)
class ResolvedConfig:
    """A config with every derived quantity computed.

    Attributes
    ----------
    config : SimulationConfig
    fields : FieldSet
        Fields driving the susceptibility.
    population_fields : FieldSet
        Fields used for the population solve.
    relax : RelaxationModel
    cell : CellConditions
        ``temperature_c`` is None for stationary atoms.
    """

    config: SimulationConfig
    fields: FieldSet
    population_fields: FieldSet
    relax: RelaxationModel
    cell: CellConditions
    alphas: dict

    @property
    def decay_mode(self):
        return self.config.get("population_decay")

    @property
    def model(self):
        return self.config.get("susceptibility")

    @property
    def ablate_srs(self):
        return self.config.get("ablate_srs")

    @property
    def quadrature_order(self):
        return self.config.get("quadrature_order")

    @property
    def grid(self):
        c = self.config
        offset = self.fields.delta_s if c.get("grid_reference") == "signal" else 0.0
        return np.linspace(c.get("probe_start_MHz") + offset,
                           c.get("probe_stop_MHz") + offset, c.get("probe_points"))


def _beam_rabi(config, beam, power_key, power_scale):
    rabi_key = f"{beam}_rabi_MHz"
    if config.is_set(rabi_key):
        return config.get(rabi_key), None
    alpha = config.get(f"{beam}_alpha")
    if alpha is None:
        alpha = atom.DEFAULT_ALPHA[beam]
    radius = config.get(f"{beam}_radius_mm")
    try:
        rabi = atom.rabi_from_power(config.get(power_key) * power_scale, radius, alpha)
    except InvalidParameter as exc:
        raise ConfigError(str(exc), config.line_of(power_key), power_key) from None
    return rabi, alpha


def resolve(config: SimulationConfig):
    """Compute fields, relaxation and cell conditions from a config.

    Raises
    ------
    ConfigError
    """
    c = config
    oc, ac = _beam_rabi(c, "coupling", "coupling_power_mW", 1.0)
    os_, as_ = _beam_rabi(c, "signal", "signal_power_mW", 1.0)
    op, ap = _beam_rabi(c, "probe", "probe_power_uW", 1e-3)
    dc, ds = c.get("coupling_detuning_MHz"), c.get("signal_detuning_MHz")
    try:
        fields = FieldSet(oc, os_, op, dc, ds)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None
    if c.get("population_fields") == "reference":
        pop_fields = FieldSet(c.get("reference_coupling_rabi_MHz"),
                              c.get("reference_signal_rabi_MHz"), op, dc, ds)
    else:
        pop_fields = fields

    kappa = c.get("top_rate_constant_cm3_s")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if c.is_set("temperature_C"):
            density = atom.density_from_temperature(c.temperature_C)
            top = atom.top_rate_from_density(density, kappa)
        elif c.is_set("density_cm3"):
            density = c.density_cm3
            top = atom.top_rate_from_density(density, kappa)
        else:
            top = c.top_rate_Hz
            density = top / kappa
    if top < 0 or density < 0:
        raise ConfigError("ToP rate and density must be >= 0")

    mode = c.get("laser_mode")
    linewidth = c.get("relative_linewidth_MHz")
    if linewidth is None:
        linewidth = DEFAULT_LINEWIDTH_MHZ[mode]
    try:
        relax = RelaxationModel(top, c.get("zeeman_rate_aa_Hz"), c.get("zeeman_rate_bb_Hz"),
                                c.get("excited_decay_MHz"), linewidth)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None

    if c.get("doppler"):
        temp = c.temperature_C if c.is_set("temperature_C") else c.doppler_temperature_C
        if temp is None:
            raise ConfigError("Doppler averaging needs temperature_C or "
                              "doppler_temperature_C (or set doppler = false)")
    else:
        temp = None
    length = c.get("cell_length_m")
    od = c.get("optical_depth")
    if od == "auto":
        if length <= 0:
            od = 0.0
        else:
            od = atom.calibrate_od(density, length)
    if od < 0:
        raise ConfigError("optical_depth must be >= 0", c.line_of("optical_depth"),
                          "optical_depth")
    cell = CellConditions(temp, density, float(od), length)
    alphas = {"coupling": ac, "signal": as_, "probe": ap}
    return ResolvedConfig(c, fields, pop_fields, relax, cell, alphas)


def solve_populations(resolved: ResolvedConfig):
    system = assemble_rate_system(LevelScheme(), resolved.population_fields,
                                  resolved.relax, resolved.decay_mode)
    return solve_steady_populations(system)


def tripod_params(resolved: ResolvedConfig, state):
    f, r = resolved.fields, resolved.relax
    return TripodParams(f.omega_c, f.omega_s, f.omega_p, f.delta_c, f.delta_s, f.delta_s,
                        r.gamma_gg, r.gamma_oc, state[("b", 0)], state[("b", 1)],
                        state[("a", 1)], state[("c", 1)], r.relative_linewidth)


def spectrum_setup(resolved: ResolvedConfig, state=None):
    state = state if state is not None else solve_populations(resolved)
    return SpectrumSetup(tripod_params(resolved, state), resolved.cell.optical_depth,
                         resolved.cell.temperature_c, resolved.quadrature_order,
                         resolved.model, resolved.ablate_srs)


def _clean(value):
    """JSON-safe copy with NaN mapped to None and numpy scalars unwrapped."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if math.isnan(v) else v
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    return value


def dump_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def manifest(resolved: ResolvedConfig, state=None, extra=None):
    """Every number that enters the solvers."""
    state = state if state is not None else solve_populations(resolved)
    r = resolved.relax
    params = tripod_params(resolved, state)
    cond = check_conditions(params, resolved.cell.doppler_width)
    out = {
        "version": __version__,
        "config_document": emit_config(resolved.config),
        "fields": asdict(resolved.fields),
        "population_fields": asdict(resolved.population_fields),
        "alphas": resolved.alphas,
        "relaxation": {
            "top_ab_Hz": r.top_ab, "top_ba_Hz": r.top_ba,
            "zeeman_aa_Hz": r.zeeman_aa, "zeeman_bb_Hz": r.zeeman_bb,
            "total_a_Hz": r.total_a, "total_b_Hz": r.total_b,
            "excited_decay_MHz": r.gamma_c, "gamma_gg_MHz": r.gamma_gg,
            "gamma_raman_MHz": r.gamma_raman, "gamma_oc_MHz": r.gamma_oc,
            "gamma_ca_MHz": r.gamma_ca, "gamma_cb_MHz": r.gamma_cb,
            "relative_linewidth_MHz": r.relative_linewidth,
        },
        "cell": {
            "temperature_C": resolved.cell.temperature_c,
            "density_cm3": resolved.cell.density_cm3,
            "optical_depth": resolved.cell.optical_depth,
            "cell_length_m": resolved.cell.length_m,
            "doppler_width_MHz": resolved.cell.doppler_width,
        },
        "model": {
            "population_decay": resolved.decay_mode,
            "susceptibility": resolved.model,
            "ablate_srs": resolved.ablate_srs,
            "quadrature_order": resolved.quadrature_order,
            "sublevel_rabi_factor": 0.5,
            "doppler_method": "pole-subtracted",
        },
        "grid": {"start_MHz": float(resolved.grid[0]), "stop_MHz": float(resolved.grid[-1]),
                 "points": int(resolved.grid.size)},
        "populations": {level_label(k): v for k, v in state.as_dict().items()},
        "tripod": {k: v for k, v in asdict(params).items() if k != "delta_p"},
        "conditions": cond.as_dict(),
        "reference_im_chi": two_level_reference(params, resolved.cell.temperature_c),
    }
    if extra:
        out.update(extra)
    return out


def compute_spectrum(resolved: ResolvedConfig, state=None, ablate=None):
    state = state if state is not None else solve_populations(resolved)
    setup = spectrum_setup(resolved, state)
    if ablate is not None:
        setup = SpectrumSetup(setup.params, setup.optical_depth, setup.temperature_c,
                              setup.quadrature_order, setup.model, ablate)
    return transmission_spectrum(setup, resolved.grid)


def two_photon_transmission(resolved: ResolvedConfig, state=None):
    """Transmission at ``delta_p = delta_s``."""
    state = state if state is not None else solve_populations(resolved)
    setup = spectrum_setup(resolved, state)
    p = setup.params
    raw = doppler_average(p.with_detuning(np.array([p.delta_s])), setup.temperature_c,
                          setup.quadrature_order, setup.model, setup.ablate_srs)
    ref = two_level_reference(p, setup.temperature_c)
    return float(np.exp(-setup.optical_depth * raw[0] / ref))


GAIN_COLUMNS = ("peak_transmission", "peak_detuning_MHz", "gain", "gain_fwhm_MHz",
                "transmission_two_photon")


def gain_metrics(resolved: ResolvedConfig):
    state = solve_populations(resolved)
    spec = compute_spectrum(resolved, state)
    i = int(np.argmax(spec.transmission))
    g = extract_gain(spec)
    return {
        "peak_transmission": float(spec.transmission[i]),
        "peak_detuning_MHz": float(spec.probe_detunings[i]),
        "gain": g.gain if g else float("nan"),
        "gain_fwhm_MHz": g.fwhm if g else float("nan"),
        "transmission_two_photon": two_photon_transmission(resolved, state),
    }


def _sweep_point(args):
    config, output = args
    resolved = resolve(config)
    if output == "gain":
        m = gain_metrics(resolved)
        return [[m[k] for k in GAIN_COLUMNS]]
    state = solve_populations(resolved)
    if output == "populations":
        return [list(state.values)]
    spec = compute_spectrum(resolved, state)
    return [[d, x, t] for d, x, t in zip(spec.probe_detunings, spec.im_chi,
                                         spec.transmission)]


@dataclass(frozen=True)
class SweepTable:
    header: tuple
    rows: tuple

    def to_csv(self):
        lines = [",".join(self.header)]
        for row in self.rows:
            lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def column(self, name):
        k = self.header.index(name)
        return [row[k] for row in self.rows]


def _sweep_points(config, spec: SweepSpec):
    series = spec.series_values if spec.series_parameter else (None,)
    points = []
    for s in series:
        base = config if s is None else config.with_value(spec.series_parameter, s)
        for v in spec.values:
            points.append((s, v, base.with_value(spec.parameter, v)))
    return points


def run_sweep(config: SimulationConfig, spec: SweepSpec, workers=1):
    """Evaluate ``spec`` over ``config``; rows come back in grid order.

    Parameters
    ----------
    workers : int
        Number of worker processes; 1 runs in-process.
    """
    points = _sweep_points(config, spec)
    for _, _, cfg in points:
        resolve(cfg)
    jobs = [(cfg, spec.output) for _, _, cfg in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    if spec.output == "gain":
        cols = GAIN_COLUMNS
    elif spec.output == "populations":
        cols = tuple(f"rho_{level_label(l)}" for l in LevelScheme().levels)
    else:
        cols = ("delta_p_MHz", "im_chi_au", "transmission")
    lead = ((spec.series_parameter,) if spec.series_parameter else ()) + (spec.parameter,)
    rows = []
    for (s, v, _), block in zip(points, results):
        prefix = ((s,) if spec.series_parameter else ()) + (v,)
        for r in block:
            rows.append(tuple(prefix) + tuple(r))
    return SweepTable(lead + cols, tuple(rows))


def _write(path: Path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def breakdown_csv(resolved: ResolvedConfig, state=None):
    """Per-term normalized Im chi on the config grid (closed form)."""
    state = state if state is not None else solve_populations(resolved)
    setup = spectrum_setup(resolved, state)
    params = setup.params.with_detuning(resolved.grid)
    lin, nl, srs = doppler_average(params, setup.temperature_c, setup.quadrature_order,
                                   breakdown=True)
    ref = two_level_reference(setup.params, setup.temperature_c)
    lines = ["delta_p_MHz,linear_au,nonlinear_au,srs_au"]
    for row in zip(resolved.grid, lin / ref, nl / ref, srs / ref):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def run_spectrum(config: SimulationConfig, out_dir=None, stem="spectrum"):
    """Spectrum for ``config``; writes CSV, JSON annotations and manifest."""
    resolved = resolve(config)
    state = solve_populations(resolved)
    spec = compute_spectrum(resolved, state)
    if out_dir is not None:
        out = Path(out_dir)
        _write(out / f"{stem}.csv", spec.to_csv())
        _write(out / f"{stem}.json", dump_json({
            "stationary": resolved.cell.temperature_c is None, **spec.annotations}))
        _write(out / f"{stem}_manifest.json", dump_json(manifest(resolved, state)))
    return spec


def run_populations(config: SimulationConfig, out_dir=None, stem="populations"):
    resolved = resolve(config)
    state = solve_populations(resolved)
    if out_dir is not None:
        out = Path(out_dir)
        _write(out / f"{stem}.csv", populations_to_csv(state))
        _write(out / f"{stem}_manifest.json", dump_json(manifest(resolved, state)))
    return state


def run_conditions(config: SimulationConfig):
    resolved = resolve(config)
    state = solve_populations(resolved)
    report = check_conditions(tripod_params(resolved, state), resolved.cell.doppler_width)
    return report


def write_sweep(config, spec, out_dir, stem="sweep", workers=1):
    table = run_sweep(config, spec, workers)
    out = Path(out_dir)
    _write(out / f"{stem}.csv", table.to_csv())
    _write(out / f"{stem}_manifest.json", dump_json(
        manifest(resolve(config), extra={"sweep_document": emit_config(config, spec)})))
    return table


def preset_text(figure_id):
    if figure_id not in FIGURES:
        raise ConfigError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURES)}")
    return resources.files("deitsim.presets").joinpath(f"fig{figure_id}.ini").read_text()


def load_preset(figure_id):
    return parse_document(preset_text(figure_id))


def apply_overrides(config: SimulationConfig, overrides):
    for key, value in (overrides or {}).items():
        config = config.with_value(key, value)
    return config


def reproduce_figure(figure_id, out_dir, workers=1, overrides=None):
    """Write the dataset for one figure preset.

    Spectrum presets produce the spectrum, its SRS-ablated counterpart and
    the closed-form term breakdown. Sweep presets produce the sweep table.
    """
    doc: ConfigDocument = load_preset(figure_id)
    config = apply_overrides(doc.config, overrides)
    stem = f"fig{figure_id}"
    out = Path(out_dir)
    if doc.sweep is not None:
        return write_sweep(config, doc.sweep, out, stem, workers)
    spec = run_spectrum(config, out, stem)
    resolved = resolve(config)
    if resolved.model == "closed-form":
        ablated = compute_spectrum(resolved, ablate=True)
        _write(out / f"{stem}_ablated.csv", ablated.to_csv())
        _write(out / f"{stem}_ablated.json", dump_json(ablated.annotations))
        _write(out / f"{stem}_terms.csv", breakdown_csv(resolved))
    return spec
