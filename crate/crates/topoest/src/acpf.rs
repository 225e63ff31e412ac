//! Nonlinear AC power flow over series branches, used to produce ground
//! truth for any topology and load snapshot.
//!
//! The branch model is a plain series admittance `y = g + jb` (no shunt
//! charging). Directed flows and currents follow
//!
//! ```text
//! P_ac = Ea^2 g - Ea Ec g cos(pa - pc) - Ea Ec b sin(pa - pc)
//! Q_ac = -Ea^2 b + Ea Ec b cos(pa - pc) - Ea Ec g sin(pa - pc)
//! Ir_ac = g (Era - Erc) - b (Eia - Eic)
//! Ii_ac = b (Era - Erc) + g (Eia - Eic)
//! ```
//!
//! which are exactly `S = Va conj(y (Va - Vc))` split into polar and
//! rectangular coordinates, so the two evaluators agree to rounding.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::grid::{NetworkModel, TopologyVector};

#[derive(Debug, Error)]
pub enum AcpfError {
    #[error("power flow diverged: mismatch {mismatch:.3e} after {iterations} iterations")]
    Divergence { iterations: usize, mismatch: f64 },
    #[error("nonzero load on a de-energized island (bus id {bus_id})")]
    InfeasibleIsland { bus_id: usize },
}

/// Per-bus voltage state in polar coordinates. De-energized buses carry
/// zero magnitude and are flagged in `energized`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarState {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub energized: Vec<bool>,
}

impl PolarState {
    /// Flat profile at the given slack magnitude.
    pub fn flat(n: usize, slack_vm: f64) -> Self {
        PolarState {
            vm: vec![slack_vm; n],
            va: vec![0.0; n],
            energized: vec![true; n],
        }
    }

    /// Rectangular components `(e_re, e_im)` of every bus voltage.
    pub fn to_rectangular(&self) -> (Vec<f64>, Vec<f64>) {
        let re = self
            .vm
            .iter()
            .zip(&self.va)
            .map(|(&m, &a)| m * a.cos())
            .collect();
        let im = self
            .vm
            .iter()
            .zip(&self.va)
            .map(|(&m, &a)| m * a.sin())
            .collect();
        (re, im)
    }
}

/// Per-bus demand snapshot in per-unit; zero at the substation.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSnapshot {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LoadSnapshot {
    pub fn zero(n: usize) -> Self {
        LoadSnapshot {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    pub fn nominal(model: &NetworkModel) -> Self {
        let (p, q) = model.nominal_loads();
        LoadSnapshot { p, q }
    }
}

/// Directed active/reactive flow over a series branch, polar coordinates.
#[inline]
pub fn eval_flow_ppv(g: f64, b: f64, ea: f64, ec: f64, pha: f64, phc: f64) -> (f64, f64) {
    let d = pha - phc;
    let (sin, cos) = d.sin_cos();
    let p = ea * ea * g - ea * ec * g * cos - ea * ec * b * sin;
    let q = -ea * ea * b + ea * ec * b * cos - ea * ec * g * sin;
    (p, q)
}

/// Directed branch current in rectangular coordinates; linear in the
/// endpoint voltages.
#[inline]
pub fn eval_flow_riv(g: f64, b: f64, er_a: f64, ei_a: f64, er_c: f64, ei_c: f64) -> (f64, f64) {
    let dr = er_a - er_c;
    let di = ei_a - ei_c;
    (g * dr - b * di, b * dr + g * di)
}

/// Partial derivatives of the directed polar flow with respect to
/// `(Ea, Ec, phi_ac)`, used by the Newton Jacobian and by the estimators'
/// Taylor linearization.
#[derive(Debug, Clone, Copy)]
pub struct FlowDerivs {
    pub p: f64,
    pub q: f64,
    pub dp_dea: f64,
    pub dp_dec: f64,
    pub dp_dphi: f64,
    pub dq_dea: f64,
    pub dq_dec: f64,
    pub dq_dphi: f64,
}

/// Flow values and analytic partials at `(ea, ec, phi_ac = pha - phc)`.
pub fn flow_derivs_ppv(g: f64, b: f64, ea: f64, ec: f64, phi: f64) -> FlowDerivs {
    let (sin, cos) = phi.sin_cos();
    FlowDerivs {
        p: ea * ea * g - ea * ec * g * cos - ea * ec * b * sin,
        q: -ea * ea * b + ea * ec * b * cos - ea * ec * g * sin,
        dp_dea: 2.0 * g * ea - g * ec * cos - b * ec * sin,
        dp_dec: -g * ea * cos - b * ea * sin,
        dp_dphi: g * ea * ec * sin - b * ea * ec * cos,
        dq_dea: -2.0 * b * ea + b * ec * cos - g * ec * sin,
        dq_dec: b * ea * cos - g * ea * sin,
        dq_dphi: -b * ea * ec * sin - g * ea * ec * cos,
    }
}

/// Solver options for [`solve_acpf`].
#[derive(Debug, Clone, Copy)]
pub struct AcpfOptions {
    /// Infinity-norm tolerance on the power-balance mismatch, per-unit.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Slack voltage magnitude held at the substation.
    pub slack_vm: f64,
}

impl Default for AcpfOptions {
    fn default() -> Self {
        AcpfOptions {
            tolerance: 1e-10,
            max_iter: 50,
            slack_vm: 1.0,
        }
    }
}

/// Computed injections `(p, q)` per bus: the sum of directed flows leaving
/// each bus over energized lines. Equals `-demand` at load buses and the
/// generated power at the substation once the flow has converged.
pub fn injections(model: &NetworkModel, topo: &TopologyVector, state: &PolarState) -> (Vec<f64>, Vec<f64>) {
    let graph = model.apply_topology(topo);
    let n = model.n_buses();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for &li in &graph.lines {
        let l = &model.lines[li];
        let (g, b) = l.admittance();
        let (pf, qf) = eval_flow_ppv(
            g,
            b,
            state.vm[l.from],
            state.vm[l.to],
            state.va[l.from],
            state.va[l.to],
        );
        p[l.from] += pf;
        q[l.from] += qf;
        let (pr, qr) = eval_flow_ppv(
            g,
            b,
            state.vm[l.to],
            state.vm[l.from],
            state.va[l.to],
            state.va[l.from],
        );
        p[l.to] += pr;
        q[l.to] += qr;
    }
    (p, q)
}

/// Per-bus power-balance residual `(dP, dQ)`: specified injection minus the
/// injection computed from the state. The substation residual is reported as
/// zero (its generation is free).
pub fn injection_residual(
    model: &NetworkModel,
    topo: &TopologyVector,
    state: &PolarState,
    loads: &LoadSnapshot,
) -> (Vec<f64>, Vec<f64>) {
    let (pc, qc) = injections(model, topo, state);
    let slack = model.substation();
    let n = model.n_buses();
    let mut dp = vec![0.0; n];
    let mut dq = vec![0.0; n];
    for a in 0..n {
        if a == slack || !state.energized[a] {
            continue;
        }
        dp[a] = -loads.p[a] - pc[a];
        dq[a] = -loads.q[a] - qc[a];
    }
    (dp, dq)
}

/// Full Newton-Raphson power flow in polar coordinates with an analytic
/// Jacobian and flat start.
///
/// Buses islanded from the substation are reported de-energized (zero
/// magnitude); islands carrying nonzero load are an error, as are snapshots
/// that fail to converge within `opts.max_iter`.
pub fn solve_acpf(
    model: &NetworkModel,
    topo: &TopologyVector,
    loads: &LoadSnapshot,
    opts: AcpfOptions,
) -> Result<PolarState, AcpfError> {
    let graph = model.apply_topology(topo);
    let n = model.n_buses();
    let slack = model.substation();
    let live_component = graph.component[slack];

    for a in 0..n {
        if graph.component[a] != live_component && (loads.p[a] != 0.0 || loads.q[a] != 0.0) {
            return Err(AcpfError::InfeasibleIsland {
                bus_id: model.buses[a].id,
            });
        }
    }

    // Unknown ordering: angles then magnitudes of live non-slack buses.
    let live: Vec<usize> = (0..n)
        .filter(|&a| a != slack && graph.component[a] == live_component)
        .collect();
    let index_of: Vec<Option<usize>> = {
        let mut m = vec![None; n];
        for (k, &a) in live.iter().enumerate() {
            m[a] = Some(k);
        }
        m
    };
    let m = live.len();

    let mut vm = vec![0.0; n];
    let mut va = vec![0.0; n];
    let mut energized = vec![false; n];
    vm[slack] = opts.slack_vm;
    energized[slack] = true;
    for &a in &live {
        vm[a] = opts.slack_vm;
        energized[a] = true;
    }

    if m == 0 {
        return Ok(PolarState { vm, va, energized });
    }

    // Lines inside the live component.
    let live_lines: Vec<usize> = graph
        .lines
        .iter()
        .copied()
        .filter(|&li| graph.component[model.lines[li].from] == live_component)
        .collect();

    let mut mismatch = DVector::<f64>::zeros(2 * m);
    let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * m);

    let mut last_norm = f64::INFINITY;
    for _iter in 0..opts.max_iter {
        mismatch.fill(0.0);
        jac.fill(0.0);

        // Specified injections.
        for (k, &a) in live.iter().enumerate() {
            mismatch[k] = -loads.p[a];
            mismatch[m + k] = -loads.q[a];
        }

        for &li in &live_lines {
            let l = &model.lines[li];
            let (g, b) = l.admittance();
            for (a, c) in [(l.from, l.to), (l.to, l.from)] {
                let Some(ka) = index_of[a] else { continue };
                let d = flow_derivs_ppv(g, b, vm[a], vm[c], va[a] - va[c]);
                mismatch[ka] -= d.p;
                mismatch[m + ka] -= d.q;
                // d(calc)/dx lands in the Jacobian with a positive sign; the
                // update solves J dx = mismatch.
                jac[(ka, ka)] += d.dp_dphi;
                jac[(ka, m + ka)] += d.dp_dea;
                jac[(m + ka, ka)] += d.dq_dphi;
                jac[(m + ka, m + ka)] += d.dq_dea;
                if let Some(kc) = index_of[c] {
                    jac[(ka, kc)] -= d.dp_dphi;
                    jac[(ka, m + kc)] += d.dp_dec;
                    jac[(m + ka, kc)] -= d.dq_dphi;
                    jac[(m + ka, m + kc)] += d.dq_dec;
                }
            }
        }

        let norm = mismatch.amax();
        if norm <= opts.tolerance {
            return Ok(PolarState { vm, va, energized });
        }
        last_norm = norm;

        let lu = jac.clone().lu();
        let Some(dx) = lu.solve(&mismatch) else {
            return Err(AcpfError::Divergence {
                iterations: _iter,
                mismatch: norm,
            });
        };
        for (k, &a) in live.iter().enumerate() {
            va[a] += dx[k];
            vm[a] += dx[m + k];
        }
    }

    Err(AcpfError::Divergence {
        iterations: opts.max_iter,
        mismatch: last_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grid::parse_grid;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn two_bus(r: f64, x: f64, p_kw: f64, q_kvar: f64) -> NetworkModel {
        // z_base = 12.66^2/10 so r_ohm = r_pu * z_base.
        let zb = 12.66_f64 * 12.66 / 10.0;
        parse_grid(&format!(
            "[meta]\nbase_kv,12.66\nbase_mva,10.0\n[buses]\n1,substation,0,0\n2,load,{},{}\n[lines]\n1,1,2,{},{},-\n[pmus]\n2\n",
            p_kw, q_kvar, r * zb, x * zb
        ))
        .unwrap()
    }

    #[test]
    fn zero_loads_sit_at_slack_voltage() {
        let model = fixtures::ieee33();
        for bits in [0u32, 7, 31] {
            let topo = TopologyVector::from_bits(bits, 5);
            let state = solve_acpf(
                &model,
                &topo,
                &LoadSnapshot::zero(33),
                AcpfOptions::default(),
            )
            .unwrap();
            for a in 0..33 {
                assert_abs_diff_eq!(state.vm[a], 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(state.va[a], 0.0, epsilon = 1e-12);
            }
            let (p, q) = injections(&model, &topo, &state);
            for a in 0..33 {
                assert_abs_diff_eq!(p[a], 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(q[a], 0.0, epsilon = 1e-12);
            }
        }
    }

    /// Independent oracle: complex Gauss-Seidel fixed point on the 2-bus
    /// circuit, V2 <- V1 - z * conj(S2 / V2).
    fn gauss_seidel_two_bus(r: f64, x: f64, p: f64, q: f64) -> (f64, f64) {
        let mut vr = 1.0f64;
        let mut vi = 0.0f64;
        for _ in 0..10_000 {
            // I = conj(S/V), S = -(p + jq) injection at the load bus.
            let denom = vr * vr + vi * vi;
            let ir = (-p * vr - q * vi) / denom;
            let ii = (-p * vi + q * vr) / denom;
            // V2 = V1 + z*I with V1 = 1, z = r + jx (current flowing into bus 2).
            let nvr = 1.0 + r * ir - x * ii;
            let nvi = x * ir + r * ii;
            if (nvr - vr).abs().max((nvi - vi).abs()) < 1e-14 {
                return (nvr, nvi);
            }
            vr = nvr;
            vi = nvi;
        }
        (vr, vi)
    }

    #[test]
    fn two_bus_matches_gauss_seidel_oracle() {
        let (r, x, p, q) = (0.01, 0.01, 0.1, 0.05);
        let model = two_bus(r, x, p * 10_000.0 / 1000.0 * 1000.0, q * 10_000.0);
        let state = solve_acpf(
            &model,
            &TopologyVector::all_open(0),
            &LoadSnapshot::nominal(&model),
            AcpfOptions::default(),
        )
        .unwrap();
        let (vr, vi) = gauss_seidel_two_bus(r, x, p, q);
        let vm_oracle = (vr * vr + vi * vi).sqrt();
        let va_oracle = vi.atan2(vr);
        assert_abs_diff_eq!(state.vm[1], vm_oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(state.va[1], va_oracle, epsilon = 1e-8);
    }

    /// Independent oracle: backward/forward sweep on the radial feeder.
    fn sweep_radial(model: &NetworkModel, loads: &LoadSnapshot) -> Vec<f64> {
        let n = model.n_buses();
        // Build the tree over non-switchable lines only.
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (child bus, line)
        let mut parent_line = vec![usize::MAX; n];
        let mut order = vec![0usize];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let a = order[head];
            head += 1;
            for (li, l) in model.lines.iter().enumerate() {
                if l.switch.is_some() {
                    continue;
                }
                let other = if l.from == a {
                    l.to
                } else if l.to == a {
                    l.from
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    parent_line[other] = li;
                    children[a].push((other, li));
                    order.push(other);
                }
            }
        }
        let mut v: Vec<(f64, f64)> = vec![(1.0, 0.0); n];
        for _ in 0..200 {
            // Backward: accumulate complex current draws toward the root.
            let mut inj: Vec<(f64, f64)> = (0..n)
                .map(|a| {
                    let (vr, vi) = v[a];
                    let d = vr * vr + vi * vi;
                    // I_load = conj(S/V) with S = p + jq drawn at the bus.
                    ((loads.p[a] * vr + loads.q[a] * vi) / d, (loads.p[a] * vi - loads.q[a] * vr) / d)
                })
                .collect();
            let mut branch_i: Vec<(f64, f64)> = vec![(0.0, 0.0); model.lines.len()];
            for &a in order.iter().rev() {
                if a == 0 {
                    continue;
                }
                let li = parent_line[a];
                branch_i[li] = inj[a];
                let l = &model.lines[li];
                let up = if l.from == a { l.to } else { l.from };
                inj[up].0 += inj[a].0;
                inj[up].1 += inj[a].1;
            }
            // Forward: drop voltages from the root.
            let mut max_dv = 0.0f64;
            for &a in &order {
                if a == 0 {
                    continue;
                }
                let li = parent_line[a];
                let l = &model.lines[li];
                let up = if l.from == a { l.to } else { l.from };
                let (ir, ii) = branch_i[li];
                let nvr = v[up].0 - (l.r_pu * ir - l.x_pu * ii);
                let nvi = v[up].1 - (l.x_pu * ir + l.r_pu * ii);
                max_dv = max_dv.max((nvr - v[a].0).abs().max((nvi - v[a].1).abs()));
                v[a] = (nvr, nvi);
            }
            if max_dv < 1e-14 {
                break;
            }
        }
        v.iter().map(|(r, i)| (r * r + i * i).sqrt()).collect()
    }

    #[test]
    fn radial_33_bus_matches_backward_forward_sweep_oracle() {
        let model = fixtures::ieee33();
        let loads = LoadSnapshot::nominal(&model);
        let state = solve_acpf(
            &model,
            &TopologyVector::all_open(5),
            &loads,
            AcpfOptions::default(),
        )
        .unwrap();
        let oracle = sweep_radial(&model, &loads);
        let (min_nr, arg_nr) = state
            .vm
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .fold((f64::INFINITY, 0), |acc, (v, i)| if v < acc.0 { (v, i) } else { acc });
        let (min_or, arg_or) = oracle
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .fold((f64::INFINITY, 0), |acc, (v, i)| if v < acc.0 { (v, i) } else { acc });
        assert_eq!(arg_nr, arg_or);
        assert_abs_diff_eq!(min_nr, min_or, epsilon = 1e-6);
        for a in 0..33 {
            assert_abs_diff_eq!(state.vm[a], oracle[a], epsilon = 1e-6);
        }
    }

    #[test]
    fn flow_evaluator_trivial_cases() {
        // Equal endpoint phasors carry nothing over the series branch.
        let (p, q) = eval_flow_ppv(1.3, -2.1, 0.97, 0.97, 0.2, 0.2);
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-15);
        // Purely resistive, aligned angles.
        let (p, q) = eval_flow_ppv(1.0, 0.0, 1.0, 0.9, 0.0, 0.0);
        assert_abs_diff_eq!(p, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-15);
        // Rectangular current of equal voltages vanishes.
        let (ir, ii) = eval_flow_riv(1.0, -0.5, 0.9, 0.1, 0.9, 0.1);
        assert_eq!((ir, ii), (0.0, 0.0));
        let (ir, ii) = eval_flow_riv(1.0, 0.0, 1.0, 0.0, 0.9, 0.0);
        assert_abs_diff_eq!(ir, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(ii, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn polar_and_rectangular_evaluators_agree() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..1000 {
            let g: f64 = rng.gen_range(0.0..5.0);
            let b: f64 = rng.gen_range(-5.0..1.0);
            let ea: f64 = rng.gen_range(0.5..1.5);
            let ec: f64 = rng.gen_range(0.5..1.5);
            let pha: f64 = rng.gen_range(-0.5..0.5);
            let phc: f64 = rng.gen_range(-0.5..0.5);
            let (p, q) = eval_flow_ppv(g, b, ea, ec, pha, phc);
            let (era, eia) = (ea * pha.cos(), ea * pha.sin());
            let (erc, eic) = (ec * phc.cos(), ec * phc.sin());
            let (ir, ii) = eval_flow_riv(g, b, era, eia, erc, eic);
            // S = Va * conj(I)
            let p_riv = era * ir + eia * ii;
            let q_riv = eia * ir - era * ii;
            assert_abs_diff_eq!(p, p_riv, epsilon = 1e-12);
            assert_abs_diff_eq!(q, q_riv, epsilon = 1e-12);
        }
    }

    #[test]
    fn power_conservation_after_convergence() {
        let model = fixtures::ieee33();
        let mut rng = StdRng::seed_from_u64(7);
        for bits in 0u32..32 {
            let topo = TopologyVector::from_bits(bits, 5);
            let scale: f64 = rng.gen_range(0.5..1.5);
            let mut loads = LoadSnapshot::nominal(&model);
            for a in 0..33 {
                loads.p[a] *= scale;
                loads.q[a] *= scale;
            }
            let state = solve_acpf(&model, &topo, &loads, AcpfOptions::default()).unwrap();
            // Sum of injections equals total series loss.
            let (pinj, qinj) = injections(&model, &topo, &state);
            let graph = model.apply_topology(&topo);
            let mut loss_p = 0.0;
            let mut loss_q = 0.0;
            for &li in &graph.lines {
                let l = &model.lines[li];
                let (g, b) = l.admittance();
                let (pf, qf) = eval_flow_ppv(g, b, state.vm[l.from], state.vm[l.to], state.va[l.from], state.va[l.to]);
                let (pr, qr) = eval_flow_ppv(g, b, state.vm[l.to], state.vm[l.from], state.va[l.to], state.va[l.from]);
                loss_p += pf + pr;
                loss_q += qf + qr;
            }
            let sum_p: f64 = pinj.iter().sum();
            let sum_q: f64 = qinj.iter().sum();
            assert_abs_diff_eq!(sum_p, loss_p, epsilon = 1e-9);
            assert_abs_diff_eq!(sum_q, loss_q, epsilon = 1e-9);
            // And the residual of the balance equations is below tolerance.
            let (dp, dq) = injection_residual(&model, &topo, &state, &loads);
            for a in 0..33 {
                assert!(dp[a].abs() <= 1e-9 && dq[a].abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn open_switch_islands_are_deenergized_or_rejected() {
        // substation(1) -- 2 fixed, 2 -- 3 switchable.
        let text = "\
[buses]
1,substation,0,0
2,load,100,50
3,load,0,0
[lines]
1,1,2,0.5,0.5,-
2,2,3,0.5,0.5,0
[pmus]
2
";
        let model = parse_grid(text).unwrap();
        let state = solve_acpf(
            &model,
            &TopologyVector(vec![false]),
            &LoadSnapshot::nominal(&model),
            AcpfOptions::default(),
        )
        .unwrap();
        assert!(!state.energized[2]);
        assert_eq!(state.vm[2], 0.0);
        assert!(state.energized[1]);

        // Same island with load is infeasible.
        let text_loaded = text.replace("3,load,0,0", "3,load,50,20");
        let model = parse_grid(&text_loaded).unwrap();
        let err = solve_acpf(
            &model,
            &TopologyVector(vec![false]),
            &LoadSnapshot::nominal(&model),
            AcpfOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, AcpfError::InfeasibleIsland { bus_id: 3 }));
    }

    #[test]
    fn analytic_flow_partials_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let g: f64 = rng.gen_range(0.1..5.0);
            let b: f64 = rng.gen_range(-5.0..-0.1);
            let ea: f64 = rng.gen_range(0.7..1.3);
            let ec: f64 = rng.gen_range(0.7..1.3);
            let phi: f64 = rng.gen_range(-0.4..0.4);
            let d = flow_derivs_ppv(g, b, ea, ec, phi);
            let h = 1e-6;
            let fd = |f: &dyn Fn(f64) -> f64| (f(h) - f(-h)) / (2.0 * h);
            let dp_dea = fd(&|e| eval_flow_ppv(g, b, ea + e, ec, phi, 0.0).0);
            let dp_dec = fd(&|e| eval_flow_ppv(g, b, ea, ec + e, phi, 0.0).0);
            let dp_dphi = fd(&|e| eval_flow_ppv(g, b, ea, ec, phi + e, 0.0).0);
            let dq_dea = fd(&|e| eval_flow_ppv(g, b, ea + e, ec, phi, 0.0).1);
            let dq_dec = fd(&|e| eval_flow_ppv(g, b, ea, ec + e, phi, 0.0).1);
            let dq_dphi = fd(&|e| eval_flow_ppv(g, b, ea, ec, phi + e, 0.0).1);
            for (analytic, numeric) in [
                (d.dp_dea, dp_dea),
                (d.dp_dec, dp_dec),
                (d.dp_dphi, dp_dphi),
                (d.dq_dea, dq_dea),
                (d.dq_dec, dq_dec),
                (d.dq_dphi, dq_dphi),
            ] {
                let scale = analytic.abs().max(1.0);
                assert!(
                    (analytic - numeric).abs() <= 1e-6 * scale,
                    "{analytic} vs {numeric}"
                );
            }
        }
    }
}
