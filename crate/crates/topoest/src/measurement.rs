//! Time-series scenario synthesis: load profiles, switching events, ground
//! truth per instant, and noisy measurement sets with WLS weights.
//!
//! Noise conventions (quoted accuracies are treated as 3-sigma bounds):
//!
//! * micro-PMU phasors: magnitude and angle each get Gaussian noise with
//!   `sigma = tve_max / (3 sqrt(2))` (times the true magnitude for the
//!   magnitude channel), so the combined phasor error stays within
//!   `tve_max` at three sigma per component.
//! * smart meters and the substation: each component is perturbed by
//!   `N(0, (rel/3)|true| + floor)` with `floor = 1e-4` p.u. guarding zero
//!   loads.
//!
//! A zero noise parameter produces exact measurements; recorded sigmas are
//! floored so WLS weights stay finite either way.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::acpf::{self, AcpfError, AcpfOptions, LoadSnapshot, PolarState};
use crate::grid::{NetworkModel, SwitchPlan, TopologyVector};
use crate::rng::{channel_rng, CHANNEL_LOADS, CHANNEL_NOISE};

/// Floor on recorded smart-meter / substation sigmas, per-unit.
pub const METER_SIGMA_FLOOR: f64 = 1e-4;
/// Floor on recorded PMU sigmas (p.u. magnitude / rad angle).
pub const PMU_SIGMA_FLOOR: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("instant t={t_sec}s: {source}")]
    Acpf { t_sec: f64, source: AcpfError },
    #[error("scenario config: {0}")]
    Config(String),
    #[error("measurement file: {0}")]
    Format(String),
}

/// One micro-PMU voltage phasor measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PmuMeasurement {
    /// Internal bus index.
    pub bus: usize,
    pub vm: f64,
    pub va: f64,
    pub sigma_vm: f64,
    pub sigma_va: f64,
}

/// One P/Q measurement (smart meter demand or substation injection).
#[derive(Debug, Clone, PartialEq)]
pub struct MeterMeasurement {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
    pub sigma_p: f64,
    pub sigma_q: f64,
}

/// One time-snapshot of weighted measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub t_sec: f64,
    pub pmu: Vec<PmuMeasurement>,
    pub meters: Vec<MeterMeasurement>,
    pub substation: MeterMeasurement,
}

/// WLS weight for a recorded sigma.
pub fn weight(sigma: f64) -> f64 {
    1.0 / (sigma * sigma)
}

impl MeasurementSet {
    /// Weights of every measurement in canonical order: PMU (vm, va) pairs,
    /// meter (p, q) pairs, then the substation (p, q).
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(2 * self.pmu.len() + 2 * self.meters.len() + 2);
        for m in &self.pmu {
            w.push(weight(m.sigma_vm));
            w.push(weight(m.sigma_va));
        }
        for m in &self.meters {
            w.push(weight(m.sigma_p));
            w.push(weight(m.sigma_q));
        }
        w.push(weight(self.substation.sigma_p));
        w.push(weight(self.substation.sigma_q));
        w
    }

    /// Checks completeness against a model: one PMU entry per PMU bus, one
    /// meter per load bus, a substation entry.
    pub fn validate(&self, model: &NetworkModel) -> Result<(), ScenarioError> {
        let mut pmu_buses: Vec<usize> = self.pmu.iter().map(|m| m.bus).collect();
        pmu_buses.sort_unstable();
        if pmu_buses != model.pmu_buses {
            return Err(ScenarioError::Format(
                "measurement set must carry exactly one entry per PMU bus".into(),
            ));
        }
        let mut meter_buses: Vec<usize> = self.meters.iter().map(|m| m.bus).collect();
        meter_buses.sort_unstable();
        if meter_buses != model.load_buses() {
            return Err(ScenarioError::Format(
                "measurement set must carry exactly one meter per load bus".into(),
            ));
        }
        if self.substation.bus != model.substation() {
            return Err(ScenarioError::Format(
                "substation measurement references the wrong bus".into(),
            ));
        }
        Ok(())
    }
}

/// Noise magnitudes for the three measurement classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Total-vector-error bound of the micro-PMUs (fraction, e.g. 0.0005).
    pub tve_max: f64,
    /// Smart-meter relative error (3-sigma bound).
    pub meter_rel: f64,
    /// Substation relative error (3-sigma bound).
    pub substation_rel: f64,
}

impl NoiseConfig {
    /// The default full-noise setting: TVE 0.05%, meters 10%, substation 1%.
    pub fn full() -> Self {
        NoiseConfig {
            tve_max: 0.0005,
            meter_rel: 0.10,
            substation_rel: 0.01,
        }
    }

    /// PMU noise only; meters and substation exact.
    pub fn pmu_only() -> Self {
        NoiseConfig {
            tve_max: 0.0005,
            meter_rel: 0.0,
            substation_rel: 0.0,
        }
    }

    /// All measurements exact.
    pub fn off() -> Self {
        NoiseConfig {
            tve_max: 0.0,
            meter_rel: 0.0,
            substation_rel: 0.0,
        }
    }
}

/// A synthesized scenario: per-instant truth plus the measurements handed to
/// the estimators. All per-instant collections share the same length.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub times: Vec<f64>,
    pub truth_topology: Vec<TopologyVector>,
    pub truth_state: Vec<PolarState>,
    pub truth_loads: Vec<LoadSnapshot>,
    pub measurements: Vec<MeasurementSet>,
    pub seed: u64,
}

impl Scenario {
    pub fn n_instants(&self) -> usize {
        self.times.len()
    }

    /// Measured PMU magnitude channels per instant, ordered by bus index.
    /// This is the series the signature baseline consumes.
    pub fn pmu_magnitude_series(&self) -> Vec<Vec<f64>> {
        self.measurements
            .iter()
            .map(|set| {
                let mut rows: Vec<(usize, f64)> =
                    set.pmu.iter().map(|m| (m.bus, m.vm)).collect();
                rows.sort_by_key(|&(b, _)| b);
                rows.into_iter().map(|(_, v)| v).collect()
            })
            .collect()
    }
}

/// Multiplicative random-walk load synthesizer:
/// `load(t+1) = load(t) * (1 + N(0, sd_change))`, clamped at zero, with each
/// bus's reactive demand scaled to preserve its nominal power factor.
pub fn synthesize_loads(
    base: &LoadSnapshot,
    sd_change: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<LoadSnapshot> {
    assert!(sd_change >= 0.0);
    let n_buses = base.p.len();
    let ratio: Vec<f64> = (0..n_buses)
        .map(|a| if base.p[a] > 0.0 { base.q[a] / base.p[a] } else { 0.0 })
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut current = base.clone();
    out.push(current.clone());
    if n <= 1 {
        return out;
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    for _ in 1..n {
        for a in 0..n_buses {
            if base.p[a] <= 0.0 {
                continue;
            }
            let step: f64 = if sd_change > 0.0 {
                normal.sample(rng) * sd_change
            } else {
                0.0
            };
            current.p[a] = (current.p[a] * (1.0 + step)).max(0.0);
            current.q[a] = current.p[a] * ratio[a];
        }
        out.push(current.clone());
    }
    out
}

/// Samples one micro-PMU phasor measurement of the true `(vm, va)` at a bus.
/// `tve_max = 0` yields the truth exactly; recorded sigmas are floored at
/// [`PMU_SIGMA_FLOOR`] so weights stay finite.
pub fn sample_pmu(
    bus: usize,
    vm_true: f64,
    va_true: f64,
    tve_max: f64,
    rng: &mut impl Rng,
) -> PmuMeasurement {
    assert!(tve_max >= 0.0);
    let scale = tve_max / (3.0 * std::f64::consts::SQRT_2);
    let sigma_vm = scale * vm_true.abs();
    let sigma_va = scale;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (vm, va) = if tve_max > 0.0 {
        (
            vm_true + sigma_vm * normal.sample(rng),
            va_true + sigma_va * normal.sample(rng),
        )
    } else {
        (vm_true, va_true)
    };
    PmuMeasurement {
        bus,
        vm,
        va,
        sigma_vm: sigma_vm.max(PMU_SIGMA_FLOOR),
        sigma_va: sigma_va.max(PMU_SIGMA_FLOOR),
    }
}

/// Samples one P/Q measurement with relative error `rel` (3-sigma bound) and
/// the absolute sigma floor guarding zero readings.
pub fn sample_meter(
    bus: usize,
    p_true: f64,
    q_true: f64,
    rel: f64,
    rng: &mut impl Rng,
) -> MeterMeasurement {
    assert!(rel >= 0.0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut one = |v: f64| -> (f64, f64) {
        if rel > 0.0 {
            let sigma = rel / 3.0 * v.abs() + METER_SIGMA_FLOOR;
            (v + sigma * normal.sample(rng), sigma)
        } else {
            (v, METER_SIGMA_FLOOR)
        }
    };
    let (p, sigma_p) = one(p_true);
    let (q, sigma_q) = one(q_true);
    MeterMeasurement {
        bus,
        p,
        q,
        sigma_p,
        sigma_q,
    }
}

/// Scenario shape and noise configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub horizon_sec: f64,
    pub dt_sec: f64,
    /// Standard deviation of the per-step relative load change.
    pub load_sd: f64,
    pub noise: NoiseConfig,
    /// Per-instant load profiles overriding the random walk, if supplied.
    pub load_profiles: Option<Vec<LoadSnapshot>>,
    pub acpf: AcpfOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon_sec: 1000.0,
            dt_sec: 10.0,
            load_sd: 0.0222,
            noise: NoiseConfig::full(),
            load_profiles: None,
            acpf: AcpfOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn n_instants(&self) -> Result<usize, ScenarioError> {
        let steps = self.horizon_sec / self.dt_sec;
        if (steps - steps.round()).abs() > 1e-9 || self.dt_sec <= 0.0 {
            return Err(ScenarioError::Config(format!(
                "horizon {}s is not an integer number of {}s steps",
                self.horizon_sec, self.dt_sec
            )));
        }
        Ok(steps.round() as usize + 1)
    }
}

/// Builds a full scenario: per instant, applies the plan's topology, solves
/// the ground-truth power flow, and samples every measurement class.
/// Deterministic for a fixed seed; load-walk draws and noise draws use
/// independent ChaCha channels so the same seed yields the same load path
/// under any noise setting.
pub fn build_scenario(
    model: &NetworkModel,
    plan: &SwitchPlan,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<Scenario, ScenarioError> {
    let n = cfg.n_instants()?;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * cfg.dt_sec).collect();

    let loads = match &cfg.load_profiles {
        Some(profiles) => {
            if profiles.len() != n {
                return Err(ScenarioError::Config(format!(
                    "{} load profiles supplied for {} instants",
                    profiles.len(),
                    n
                )));
            }
            profiles.clone()
        }
        None => {
            let mut rng = channel_rng(seed, CHANNEL_LOADS);
            synthesize_loads(&LoadSnapshot::nominal(model), cfg.load_sd, n, &mut rng)
        }
    };

    let mut rng_noise = channel_rng(seed, CHANNEL_NOISE);
    let mut truth_topology = Vec::with_capacity(n);
    let mut truth_state = Vec::with_capacity(n);
    let mut measurements = Vec::with_capacity(n);
    let sub = model.substation();

    for (i, &t) in times.iter().enumerate() {
        let topo = plan.topology_at(t, model.n_switches());
        let state = acpf::solve_acpf(model, &topo, &loads[i], cfg.acpf)
            .map_err(|source| ScenarioError::Acpf { t_sec: t, source })?;
        let (pinj, qinj) = acpf::injections(model, &topo, &state);

        let pmu = model
            .pmu_buses
            .iter()
            .map(|&b| sample_pmu(b, state.vm[b], state.va[b], cfg.noise.tve_max, &mut rng_noise))
            .collect();
        let meters = model
            .load_buses()
            .iter()
            .map(|&b| {
                sample_meter(b, loads[i].p[b], loads[i].q[b], cfg.noise.meter_rel, &mut rng_noise)
            })
            .collect();
        let substation = sample_meter(
            sub,
            pinj[sub],
            qinj[sub],
            cfg.noise.substation_rel,
            &mut rng_noise,
        );

        truth_topology.push(topo);
        truth_state.push(state);
        measurements.push(MeasurementSet {
            t_sec: t,
            pmu,
            meters,
            substation,
        });
    }

    Ok(Scenario {
        times,
        truth_topology,
        truth_state,
        truth_loads: loads,
        measurements,
        seed,
    })
}

/// Writes the measurement CSV (`t_sec,device,device_id,quantity,value,sigma`).
/// Device ids are external bus ids.
pub fn write_measurements_csv(scenario: &Scenario, model: &NetworkModel) -> String {
    let mut out = String::from("t_sec,device,device_id,quantity,value,sigma\n");
    use std::fmt::Write;
    let id = |b: usize| model.buses[b].id;
    for set in &scenario.measurements {
        for m in &set.pmu {
            let _ = writeln!(out, "{},pmu,{},vm,{:.17e},{:.17e}", set.t_sec, id(m.bus), m.vm, m.sigma_vm);
            let _ = writeln!(out, "{},pmu,{},va,{:.17e},{:.17e}", set.t_sec, id(m.bus), m.va, m.sigma_va);
        }
        for m in &set.meters {
            let _ = writeln!(out, "{},meter,{},p,{:.17e},{:.17e}", set.t_sec, id(m.bus), m.p, m.sigma_p);
            let _ = writeln!(out, "{},meter,{},q,{:.17e},{:.17e}", set.t_sec, id(m.bus), m.q, m.sigma_q);
        }
        let s = &set.substation;
        let _ = writeln!(out, "{},substation,{},p,{:.17e},{:.17e}", set.t_sec, id(s.bus), s.p, s.sigma_p);
        let _ = writeln!(out, "{},substation,{},q,{:.17e},{:.17e}", set.t_sec, id(s.bus), s.q, s.sigma_q);
    }
    out
}

/// Parses a measurement CSV back into per-instant sets, validating each set
/// against the model.
pub fn parse_measurements_csv(
    text: &str,
    model: &NetworkModel,
) -> Result<Vec<MeasurementSet>, ScenarioError> {
    let mut sets: Vec<MeasurementSet> = Vec::new();
    let fmt = |msg: String| ScenarioError::Format(msg);
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || ln == 0 && line.starts_with("t_sec") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(fmt(format!("row {}: expected 6 columns", ln + 1)));
        }
        let t: f64 = f[0].parse().map_err(|_| fmt(format!("row {}: bad t_sec", ln + 1)))?;
        let bus_id: usize = f[2].parse().map_err(|_| fmt(format!("row {}: bad device id", ln + 1)))?;
        if bus_id == 0 || bus_id > model.n_buses() {
            return Err(fmt(format!("row {}: unknown bus {bus_id}", ln + 1)));
        }
        let bus = bus_id - 1;
        let value: f64 = f[4].parse().map_err(|_| fmt(format!("row {}: bad value", ln + 1)))?;
        let sigma: f64 = f[5].parse().map_err(|_| fmt(format!("row {}: bad sigma", ln + 1)))?;

        if sets.last().map(|s| s.t_sec != t).unwrap_or(true) {
            sets.push(MeasurementSet {
                t_sec: t,
                pmu: Vec::new(),
                meters: Vec::new(),
                substation: MeterMeasurement {
                    bus: model.substation(),
                    p: f64::NAN,
                    q: f64::NAN,
                    sigma_p: METER_SIGMA_FLOOR,
                    sigma_q: METER_SIGMA_FLOOR,
                },
            });
        }
        let set = sets.last_mut().unwrap();
        match (f[1], f[3]) {
            ("pmu", "vm") => set.pmu.push(PmuMeasurement {
                bus,
                vm: value,
                va: f64::NAN,
                sigma_vm: sigma,
                sigma_va: f64::NAN,
            }),
            ("pmu", "va") => {
                let m = set
                    .pmu
                    .iter_mut()
                    .find(|m| m.bus == bus && m.va.is_nan())
                    .ok_or_else(|| fmt(format!("row {}: va before vm for bus {bus_id}", ln + 1)))?;
                m.va = value;
                m.sigma_va = sigma;
            }
            ("meter", "p") => set.meters.push(MeterMeasurement {
                bus,
                p: value,
                q: f64::NAN,
                sigma_p: sigma,
                sigma_q: f64::NAN,
            }),
            ("meter", "q") => {
                let m = set
                    .meters
                    .iter_mut()
                    .find(|m| m.bus == bus && m.q.is_nan())
                    .ok_or_else(|| fmt(format!("row {}: q before p for bus {bus_id}", ln + 1)))?;
                m.q = value;
                m.sigma_q = sigma;
            }
            ("substation", "p") => {
                set.substation.bus = bus;
                set.substation.p = value;
                set.substation.sigma_p = sigma;
            }
            ("substation", "q") => {
                set.substation.bus = bus;
                set.substation.q = value;
                set.substation.sigma_q = sigma;
            }
            (d, q) => return Err(fmt(format!("row {}: unknown device/quantity {d}/{q}", ln + 1))),
        }
    }
    for set in &sets {
        if set.substation.p.is_nan() || set.substation.q.is_nan() {
            return Err(fmt(format!("instant t={} lacks a substation entry", set.t_sec)));
        }
        set.validate(model)?;
    }
    Ok(sets)
}

/// Parses a load-profile CSV (`t_sec,bus,p_pu,q_pu`) into per-instant
/// snapshots aligned with the given times.
pub fn parse_load_profiles_csv(
    text: &str,
    model: &NetworkModel,
    times: &[f64],
) -> Result<Vec<LoadSnapshot>, ScenarioError> {
    let n = model.n_buses();
    let mut profiles: Vec<LoadSnapshot> = times.iter().map(|_| LoadSnapshot::zero(n)).collect();
    let fmt = |msg: String| ScenarioError::Format(msg);
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || ln == 0 && line.starts_with("t_sec") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(fmt(format!("row {}: expected 4 columns", ln + 1)));
        }
        let t: f64 = f[0].parse().map_err(|_| fmt(format!("row {}: bad t_sec", ln + 1)))?;
        let bus_id: usize = f[1].parse().map_err(|_| fmt(format!("row {}: bad bus", ln + 1)))?;
        let p: f64 = f[2].parse().map_err(|_| fmt(format!("row {}: bad p_pu", ln + 1)))?;
        let q: f64 = f[3].parse().map_err(|_| fmt(format!("row {}: bad q_pu", ln + 1)))?;
        let Some(idx) = times.iter().position(|&tt| (tt - t).abs() < 1e-9) else {
            return Err(fmt(format!("row {}: t={t} is not a scenario instant", ln + 1)));
        };
        if bus_id == 0 || bus_id > n {
            return Err(fmt(format!("row {}: unknown bus {bus_id}", ln + 1)));
        }
        profiles[idx].p[bus_id - 1] = p;
        profiles[idx].q[bus_id - 1] = q;
    }
    Ok(profiles)
}
