"""Synthetic high-impedance fault (HIF) measurement generator.

Arc model
---------
The arc is the classic two-diode, variable-resistance circuit: the fault
point connects through resistance R_p to a DC source V_p for positive
conduction and through R_n to V_n for negative conduction.  Per sample,
with primed values redrawn every 0.11 ms,

    i = (v - V_p') / R_p'   when v >  V_p'
    i = (v + V_n') / R_n'   when v < -V_n'
    i = 0                   otherwise  (dead band, "no current flows")

V_p' and V_n' are drawn uniformly within +/-variation_fraction of their
nominals and R_p', R_n' uniformly from [r_lo, r_hi]; the resistance
redraw doubles as the random amplitude jitter of the arc.  V_p > V_n
makes the conduction thresholds asymmetric, so positive and negative
current peaks differ.  The whole current is scaled by the build-up
envelope (1 - exp(-t/tau)), giving the slowly growing magnitude typical
of a developing arc (tau = 0 disables the envelope).

Feeder surrogate
----------------
A full power-flow model is replaced by a linear sensitivity map over a
13-bus radial feeder.  The 29 measurement channels are the per-phase
voltages of every bus below the substation (buses carry one, two, or
three phases; the substation itself is not measured).  Each channel is a
steady 60 Hz sinusoid at its nominal amplitude, modulated by

  * a per-cycle common factor and per-cycle per-phase factors (standard
    normal, scaled by ``fluct_sigma``) standing in for load and source
    wander -- this gives normal-condition data its low-rank covariance,
  * the scenario ``load_scale`` multiplier,
  * an optional capacitor-switching event: a small permanent voltage
    rise plus a decaying 600 Hz ring from the switch instant,
  * the arc perturbation: channel_j -= sens_j * i_arc(t), where the
    sensitivity vector assigns each channel the shared-path transfer
    impedance between its bus and the fault site (same-phase channels
    couple fully, other phases at a reduced factor),
  * white per-sample measurement noise (sigma = ``noise_sigma`` of the
    channel's nominal amplitude).

A broken conductor is modeled as arc conduction on positive half-cycles
only (single-diode path).  All randomness derives from the scenario seed
through fixed per-purpose streams ("arc", "fluct", "noise"), so a
scenario is bit-reproducible and insensitive to which optional effects
are enabled.

Features are per-cycle RMS values, one observation row per full cycle,
which requires the sample rate to be an integer multiple of the system
frequency (the 9.6 kHz default gives 160 samples per 60 Hz cycle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import ClassCode, DataMatrix, format_float, stack
from .errors import InvalidInputError
from .numerics import derive_seed, make_rng

# Feeder buses below the substation with the phases present at each.
_BUS_PHASES = (
    ("632", "abc"),
    ("633", "abc"),
    ("634", "abc"),
    ("645", "bc"),
    ("646", "bc"),
    ("671", "abc"),
    ("680", "abc"),
    ("684", "ac"),
    ("611", "c"),
    ("652", "a"),
    ("675", "abc"),
    ("692", "abc"),
)

# Radial paths from the substation to each bus (hop sequences).
_BUS_PATHS = {
    "632": ("632",),
    "633": ("632", "633"),
    "634": ("632", "633", "634"),
    "645": ("632", "645"),
    "646": ("632", "645", "646"),
    "671": ("632", "671"),
    "680": ("632", "671", "680"),
    "684": ("632", "671", "684"),
    "611": ("632", "671", "684", "611"),
    "652": ("632", "671", "684", "652"),
    "675": ("632", "671", "692", "675"),
    "692": ("632", "671", "692"),
}

# Per-unit steady-state voltage profile (drop grows down the feeder).
_BUS_PU = {
    "632": 0.995,
    "633": 0.990,
    "634": 0.988,
    "645": 0.989,
    "646": 0.987,
    "671": 0.980,
    "680": 0.979,
    "684": 0.978,
    "611": 0.976,
    "652": 0.977,
    "675": 0.976,
    "692": 0.979,
}

# Phase-to-ground peak bases: 4.16 kV feeder, 480 V secondary at bus 634.
_PEAK_BASE = 4160.0 / math.sqrt(3.0) * math.sqrt(2.0)
_PEAK_634 = 480.0 / math.sqrt(3.0) * math.sqrt(2.0)

_PHASE_INDEX = {"a": 0, "b": 1, "c": 2}
_PHASE_ANGLE = {"a": 0.0, "b": -2.0 * math.pi / 3.0, "c": 2.0 * math.pi / 3.0}

# Arc-to-voltage coupling: ohms of transfer impedance per shared feeder
# hop, and the attenuation applied to channels on the other two phases.
_OHMS_PER_SHARED_HOP = 90.0
_CROSS_PHASE_FACTOR = 0.25

# Capacitor-switching surrogate: permanent rise plus a decaying ring.
_CAP_STEADY_RISE = 0.015
_CAP_RING_FRACTION = 0.08
_CAP_RING_HZ = 600.0
_CAP_RING_TAU = 0.02

# Fault sites: (bus, phase) for each labeled location.
FAULT_SITES = {
    ClassCode.FAULT_A: ("671", "a"),
    ClassCode.FAULT_B: ("646", "b"),
    ClassCode.FAULT_C: ("611", "c"),
}

# Cycles simulated before the ones kept by generate_dataset, so kept
# observations see a developed arc (6 build-up time constants).
WARMUP_CYCLES = 18


def _build_channels():
    names = []
    nodes = []
    phases = []
    amps = []
    for bus, phs in _BUS_PHASES:
        base = _PEAK_634 if bus == "634" else _PEAK_BASE
        for ph in phs:
            names.append(f"V{bus}{ph}")
            nodes.append(bus)
            phases.append(ph)
            amps.append(base * _BUS_PU[bus])
    return tuple(names), tuple(nodes), tuple(phases), np.array(amps)


CHANNEL_NAMES, _CHANNEL_BUS, _CHANNEL_PHASE, _CHANNEL_PEAK = _build_channels()
assert len(CHANNEL_NAMES) == 29


def _shared_hops(bus_a: str, bus_b: str) -> int:
    pa, pb = _BUS_PATHS[bus_a], _BUS_PATHS[bus_b]
    n = 0
    for x, y in zip(pa, pb):
        if x != y:
            break
        n += 1
    return n


def sensitivity_vector(location: ClassCode) -> np.ndarray:
    """Per-channel voltage-sag coefficients (ohms) for a fault location."""
    if location not in FAULT_SITES:
        raise InvalidInputError(f"no fault site for {location!r}")
    fault_bus, fault_phase = FAULT_SITES[location]
    sens = np.empty(29)
    for j in range(29):
        hops = _shared_hops(_CHANNEL_BUS[j], fault_bus)
        phase_factor = 1.0 if _CHANNEL_PHASE[j] == fault_phase else _CROSS_PHASE_FACTOR
        sens[j] = _OHMS_PER_SHARED_HOP * hops * phase_factor
    return sens


@dataclass(frozen=True)
class ArcParams:
    """Two-diode arc-circuit parameters."""

    v_p: float = 1000.0
    v_n: float = 500.0
    variation_fraction: float = 0.10
    r_lo: float = 1000.0
    r_hi: float = 1500.0
    update_interval: float = 0.11e-3
    build_up_time_constant: float = 0.05
    system_frequency: float = 60.0

    def __post_init__(self):
        if not (self.v_p > self.v_n > 0.0):
            raise InvalidInputError(
                f"need v_p > v_n > 0, got v_p={self.v_p}, v_n={self.v_n}"
            )
        if not (0.0 <= self.variation_fraction < 1.0):
            raise InvalidInputError(
                f"variation_fraction must be in [0, 1), got {self.variation_fraction}"
            )
        if not (0.0 < self.r_lo <= self.r_hi):
            raise InvalidInputError(
                f"need 0 < r_lo <= r_hi, got [{self.r_lo}, {self.r_hi}]"
            )
        if self.update_interval <= 0.0:
            raise InvalidInputError("update_interval must be positive")
        if self.build_up_time_constant < 0.0:
            raise InvalidInputError("build_up_time_constant must be >= 0")
        if self.system_frequency <= 0.0:
            raise InvalidInputError("system_frequency must be positive")


@dataclass(frozen=True)
class ArcScenario:
    """One simulation run: arc parameters plus feeder configuration.

    fault_location uses ClassCode; NORMAL means no arc.  noise_sigma and
    fluct_sigma are fractions of each channel's nominal amplitude (see
    the module docstring); setting both to zero with no fault yields
    exact clean sinusoids.
    """

    arc: ArcParams = field(default_factory=ArcParams)
    fault_location: ClassCode = ClassCode.NORMAL
    broken_conductor: bool = False
    load_scale: float = 1.0
    capacitor_switch_at: float | None = None
    duration: float = 1.0
    sample_rate: float = 9600.0
    seed: int = 0
    noise_sigma: float = 0.001
    fluct_sigma: float = 0.003

    def __post_init__(self):
        if self.duration <= 0.0:
            raise InvalidInputError("duration must be positive")
        if self.sample_rate < 20.0 * self.arc.system_frequency:
            raise InvalidInputError(
                f"sample_rate {self.sample_rate} below 20x system frequency"
            )
        ratio = self.sample_rate / self.arc.system_frequency
        if abs(ratio - round(ratio)) > 1e-9:
            raise InvalidInputError(
                "sample_rate must be an integer multiple of the system "
                f"frequency for per-cycle features, got ratio {ratio}"
            )
        if not (0.5 <= self.load_scale <= 1.5):
            raise InvalidInputError(
                f"load_scale must lie in [0.5, 1.5], got {self.load_scale}"
            )
        if self.capacitor_switch_at is not None and self.capacitor_switch_at < 0.0:
            raise InvalidInputError("capacitor_switch_at must be >= 0")
        if self.noise_sigma < 0.0 or self.fluct_sigma < 0.0:
            raise InvalidInputError("noise/fluctuation sigmas must be >= 0")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidInputError(f"seed must be a nonnegative integer")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.sample_rate / self.arc.system_frequency))


@dataclass(frozen=True)
class WaveformSet:
    """Time-aligned simulated measurements for one scenario."""

    time: np.ndarray
    voltages: np.ndarray
    channel_names: tuple
    arc_current: np.ndarray
    label: ClassCode
    sample_rate: float
    frequency: float

    def __post_init__(self):
        n = self.time.shape[0]
        if self.voltages.shape != (n, len(self.channel_names)):
            raise InvalidInputError("voltage block does not match time/channels")
        if self.arc_current.shape != (n,):
            raise InvalidInputError("arc_current length does not match time")


def arc_current(
    params: ArcParams,
    phase_voltage,
    sample_rate: float,
    seed: int,
    *,
    broken_conductor: bool = False,
) -> np.ndarray:
    """Arc current for a driving phase-voltage series.

    Per redraw block (every ceil(update_interval * sample_rate) samples)
    the four primed parameters are drawn in the fixed order V_p', V_n',
    R_p', R_n' from the PCG64 stream of `seed`.

    Args:
        params: Arc circuit constants.
        phase_voltage: Instantaneous voltage at the fault point, volts.
        sample_rate: Samples per second of the input series.
        seed: Stream seed for the parameter redraws.
        broken_conductor: Conduct only on positive half-cycles.

    Returns:
        Ampere series, same length as the input.

    Raises:
        InvalidInputError: on an empty series or non-positive rate.
    """
    v = np.asarray(phase_voltage, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("phase_voltage must be a nonempty 1-D series")
    if sample_rate <= 0.0:
        raise InvalidInputError("sample_rate must be positive")
    n = v.size
    redraw_every = max(1, math.ceil(params.update_interval * sample_rate))
    n_blocks = math.ceil(n / redraw_every)
    rng = make_rng(seed)
    frac = params.variation_fraction
    vp = rng.uniform(params.v_p * (1 - frac), params.v_p * (1 + frac), n_blocks)
    vn = rng.uniform(params.v_n * (1 - frac), params.v_n * (1 + frac), n_blocks)
    rp = rng.uniform(params.r_lo, params.r_hi, n_blocks)
    rn = rng.uniform(params.r_lo, params.r_hi, n_blocks)
    vp_s = np.repeat(vp, redraw_every)[:n]
    vn_s = np.repeat(vn, redraw_every)[:n]
    rp_s = np.repeat(rp, redraw_every)[:n]
    rn_s = np.repeat(rn, redraw_every)[:n]
    i = np.zeros(n)
    pos = v > vp_s
    i[pos] = (v[pos] - vp_s[pos]) / rp_s[pos]
    if not broken_conductor:
        neg = v < -vn_s
        i[neg] = (v[neg] + vn_s[neg]) / rn_s[neg]
    tau = params.build_up_time_constant
    if tau > 0.0:
        t = np.arange(n) / sample_rate
        i *= 1.0 - np.exp(-t / tau)
    return i


def simulate_feeder(scenario: ArcScenario) -> WaveformSet:
    """Simulates the 29 feeder channels for one scenario.

    See the module docstring for the surrogate structure.  The result is
    bit-identical across runs for a fixed scenario.
    """
    f0 = scenario.arc.system_frequency
    sr = scenario.sample_rate
    n = int(round(scenario.duration * sr))
    if n < 1:
        raise InvalidInputError("duration too short for one sample")
    spc = scenario.samples_per_cycle
    t = np.arange(n) / sr
    omega = 2.0 * math.pi * f0

    # Per-cycle low-rank amplitude modulation: one common stream plus one
    # per phase, expanded to sample resolution.
    n_cycles = math.ceil(n / spc)
    phase_mult = np.ones((3, n))
    if scenario.fluct_sigma > 0.0:
        rng_fluct = make_rng(derive_seed(scenario.seed, "fluct"))
        common = rng_fluct.normal(size=n_cycles)
        per_phase = rng_fluct.normal(size=(3, n_cycles))
        for p in range(3):
            cyc = 1.0 + scenario.fluct_sigma * (common + per_phase[p])
            phase_mult[p] = np.repeat(cyc, spc)[:n]

    switch_mask = None
    if scenario.capacitor_switch_at is not None:
        switch_mask = t >= scenario.capacitor_switch_at

    amps = _CHANNEL_PEAK * scenario.load_scale
    base = np.empty((n, 29))
    for j in range(29):
        ph = _CHANNEL_PHASE[j]
        wave = np.sin(omega * t + _PHASE_ANGLE[ph]) * phase_mult[_PHASE_INDEX[ph]]
        col = amps[j] * wave
        if switch_mask is not None:
            col = np.where(switch_mask, col * (1.0 + _CAP_STEADY_RISE), col)
        base[:, j] = col

    if scenario.fault_location == ClassCode.NORMAL:
        current = np.zeros(n)
        voltages = base
    else:
        fault_bus, fault_phase = FAULT_SITES[scenario.fault_location]
        drive_col = CHANNEL_NAMES.index(f"V{fault_bus}{fault_phase}")
        current = arc_current(
            scenario.arc,
            base[:, drive_col],
            sr,
            derive_seed(scenario.seed, "arc"),
            broken_conductor=scenario.broken_conductor,
        )
        voltages = base - np.outer(current, sensitivity_vector(scenario.fault_location))

    if switch_mask is not None:
        dt = t - scenario.capacitor_switch_at
        ring = np.where(
            switch_mask,
            _CAP_RING_FRACTION
            * np.exp(-np.maximum(dt, 0.0) / _CAP_RING_TAU)
            * np.sin(2.0 * math.pi * _CAP_RING_HZ * dt),
            0.0,
        )
        voltages = voltages + np.outer(ring, amps)

    if scenario.noise_sigma > 0.0:
        rng_noise = make_rng(derive_seed(scenario.seed, "noise"))
        noise = rng_noise.normal(size=(n, 29)) * (
            scenario.noise_sigma * _CHANNEL_PEAK
        )
        voltages = voltages + noise

    return WaveformSet(
        time=t,
        voltages=voltages,
        channel_names=CHANNEL_NAMES,
        arc_current=current,
        label=scenario.fault_location,
        sample_rate=sr,
        frequency=f0,
    )


def extract_features(w: WaveformSet) -> DataMatrix:
    """Per-cycle RMS features: one row per full cycle, label copied.

    Raises:
        InvalidInputError: if the waveform spans less than one cycle or
            the sample rate is not an integer multiple of the frequency.
    """
    ratio = w.sample_rate / w.frequency
    spc = int(round(ratio))
    if abs(ratio - spc) > 1e-9 or spc < 2:
        raise InvalidInputError(
            f"samples per cycle must be an integer >= 2, got {ratio}"
        )
    n = w.voltages.shape[0]
    n_cycles = n // spc
    if n_cycles < 1:
        raise InvalidInputError(
            f"waveform has {n} samples, shorter than one {spc}-sample cycle"
        )
    block = w.voltages[: n_cycles * spc].reshape(n_cycles, spc, len(w.channel_names))
    rms = np.sqrt(np.mean(block * block, axis=1))
    labels = np.full(n_cycles, int(w.label), dtype=np.int64)
    return DataMatrix(rms, w.channel_names, labels)


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario with the number of observation rows to keep from it."""

    scenario: ArcScenario
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise InvalidInputError("count must be >= 1")


def generate_dataset(specs, seed: int, warmup_cycles: int = WARMUP_CYCLES) -> DataMatrix:
    """Simulates every spec and stacks the kept feature rows.

    Each scenario's seed is derived from `seed` and its position, and its
    duration is set to (count + warmup_cycles) cycles; the first
    warmup_cycles rows are dropped so kept rows reflect the developed
    arc.  The result is deterministic in (specs, seed).

    Raises:
        InvalidInputError: on an empty spec list.
    """
    specs = [s if isinstance(s, ScenarioSpec) else ScenarioSpec(*s) for s in specs]
    if not specs:
        raise InvalidInputError("at least one scenario is required")
    parts = []
    for idx, spec in enumerate(specs):
        f0 = spec.scenario.arc.system_frequency
        scenario = replace(
            spec.scenario,
            seed=derive_seed(seed, "scenario", idx),
            duration=(spec.count + warmup_cycles) / f0,
        )
        feats = extract_features(simulate_feeder(scenario))
        parts.append(feats.take_rows(np.arange(warmup_cycles, warmup_cycles + spec.count)))
    return stack(parts)


def paper_profile(count_per_class: int = 100) -> list:
    """Default dataset shape: one scenario per class at nominal load."""
    specs = []
    for code in ClassCode:
        specs.append(ScenarioSpec(ArcScenario(fault_location=code), count_per_class))
    return specs


def robustness_profile(
    count_per_class: int = 100,
    loads=(0.8, 0.9, 1.0, 1.1, 1.2),
    include_capacitor: bool = True,
) -> list:
    """Dataset shape spanning load variation and capacitor switching.

    Every class spreads its rows over one scenario per load scale; the
    normal class optionally adds a capacitor-switching scenario whose
    switch lands a few cycles into the kept window.
    """
    loads = tuple(loads)
    if not loads:
        raise InvalidInputError("at least one load scale is required")
    specs = []
    for code in ClassCode:
        slots = list(loads)
        capacitor = include_capacitor and code == ClassCode.NORMAL
        n_slots = len(slots) + (1 if capacitor else 0)
        chunk, extra = divmod(count_per_class, n_slots)
        counts = [chunk + (1 if k < extra else 0) for k in range(n_slots)]
        for k, load in enumerate(slots):
            if counts[k] > 0:
                specs.append(
                    ScenarioSpec(
                        ArcScenario(fault_location=code, load_scale=load), counts[k]
                    )
                )
        if capacitor and counts[-1] > 0:
            switch_at = (WARMUP_CYCLES + 5) / 60.0
            specs.append(
                ScenarioSpec(
                    ArcScenario(
                        fault_location=code,
                        capacitor_switch_at=switch_at,
                    ),
                    counts[-1],
                )
            )
    return specs


def write_waveform_csv(w: WaveformSet, path) -> None:
    """Writes a waveform as CSV: t, the 29 channels, then arc_current."""
    header = ["t", *w.channel_names, "arc_current"]
    lines = [",".join(header)]
    for i in range(w.time.shape[0]):
        fields = [format_float(w.time[i])]
        fields.extend(format_float(v) for v in w.voltages[i])
        fields.append(format_float(w.arc_current[i]))
        lines.append(",".join(fields))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
