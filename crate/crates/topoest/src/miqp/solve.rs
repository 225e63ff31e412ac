//! QP and mixed-binary QP solution paths.
//!
//! The pipeline per instance:
//!
//! 1. eliminate equalities by sparse substitution (binaries protected),
//! 2. assemble the reduced Hessian densely and factor it once,
//! 3. per binary assignment / relaxation node, collect the rows that are
//!    forced tight (binary pins plus big-M pairs whose folded width is
//!    zero) and solve the equality-constrained optimum through a small
//!    Schur complement over those rows,
//! 4. verify the remaining inequalities, activating violated ones a few at
//!    a time until the KKT conditions hold.
//!
//! Branch-and-bound and exhaustive enumeration share the same node solver,
//! so their objectives agree to rounding.

use std::collections::HashSet;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::presolve::{eliminate, Reduction};
use super::{
    InfeasibilityCertificate, LinRow, MiqpError, MiqpSolution, MiqpStats, MixedBinaryQP,
    QuadraticProgram, Strategy,
};

/// Absolute-ish feasibility tolerance (scaled by `max(1, |rhs|)`).
const TOL_FEAS: f64 = 1e-9;
/// Tolerance deciding that a paired two-sided constraint has zero width.
const TOL_WIDTH: f64 = 1e-9;
/// Strict-improvement margin for incumbent replacement and pruning.
const TOL_OBJ: f64 = 1e-9;
/// Integrality tolerance on relaxed binaries.
const TOL_INT: f64 = 1e-7;

/// Solution of a continuous QP.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Rows of a node's equality system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ActiveKind {
    /// `x[bin] = value` (bit stored separately).
    Pin(usize),
    /// Inequality row forced tight by a zero-width pair.
    PairTight(usize),
    /// Inequality activated by the working-set loop (multiplier must stay
    /// nonnegative).
    Added(usize),
}

struct ReducedProblem {
    nu: usize,
    quad: Vec<(usize, usize, f64)>,
    lin: Vec<f64>,
    konst: f64,
    ineq: Vec<LinRow>,
    /// Reduced index of each binary, in `binary_idx` order.
    bins: Vec<usize>,
    bin_mask: Vec<bool>,
    /// Structural opposite pairs `(j, k)`: the non-binary parts of rows j
    /// and k are exact negations of each other.
    pairs: Vec<(usize, usize)>,
    red: Reduction,
    chol: Cholesky<f64, Dyn>,
    ridge: f64,
    /// Unconstrained minimizer of the reduced objective.
    x0: DVector<f64>,
}

fn build_reduced(mb: &mut MixedBinaryQP) -> Result<ReducedProblem, MiqpError> {
    let n = mb.qp.n();
    let mut protected = vec![false; n];
    for &b in &mb.binary_idx {
        if b >= n {
            return Err(MiqpError::Dimension(format!(
                "binary index {b} out of range (n={n})"
            )));
        }
        protected[b] = true;
    }

    let red = eliminate(n, mb.qp.eq_rows(), &protected)?;
    mb.qp.quad_terms(); // consolidate before the immutable borrows below
    let (quad, lin, konst) =
        red.reduce_objective(mb.qp.quad_view(), mb.qp.linear_terms(), mb.qp.const_term());
    let nu = red.n_free();

    let mut ineq: Vec<LinRow> = mb.qp.ineq_rows().iter().map(|r| red.reduce_row(r)).collect();
    for row in &red.leftover_eq {
        let r = red.reduce_row(row);
        let neg = LinRow {
            terms: r.terms.iter().map(|&(c, v)| (c, -v)).collect(),
            rhs: -r.rhs,
        };
        ineq.push(r);
        ineq.push(neg);
    }
    let bins: Vec<usize> = mb
        .binary_idx
        .iter()
        .map(|&b| red.new_of_old[b].expect("protected binaries stay free"))
        .collect();
    let mut bin_mask = vec![false; nu];
    for &b in &bins {
        bin_mask[b] = true;
    }
    // Box rows 0 <= bin <= 1 for the relaxations.
    for &b in &bins {
        ineq.push(LinRow::new(vec![(b, 1.0)], 1.0));
        ineq.push(LinRow::new(vec![(b, -1.0)], 0.0));
    }

    // Structural pair detection over the non-binary parts.
    let mut keyed: Vec<(Vec<(usize, u64)>, bool, usize)> = Vec::new();
    for (ri, row) in ineq.iter().enumerate() {
        let nonbin: Vec<(usize, f64)> = row
            .terms
            .iter()
            .copied()
            .filter(|&(c, _)| !bin_mask[c])
            .collect();
        if nonbin.is_empty() {
            continue;
        }
        let flip = nonbin[0].1 < 0.0;
        let key: Vec<(usize, u64)> = nonbin
            .iter()
            .map(|&(c, v)| (c, if flip { (-v).to_bits() } else { v.to_bits() }))
            .collect();
        keyed.push((key, flip, ri));
    }
    keyed.sort();
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < keyed.len() {
        let mut j = i + 1;
        while j < keyed.len() && keyed[j].0 == keyed[i].0 {
            j += 1;
        }
        let group = &keyed[i..j];
        let pos: Vec<usize> = group.iter().filter(|g| !g.1).map(|g| g.2).collect();
        let neg: Vec<usize> = group.iter().filter(|g| g.1).map(|g| g.2).collect();
        for (a, b) in pos.iter().zip(neg.iter()) {
            pairs.push((*a, *b));
        }
        i = j;
    }
    pairs.sort();

    // Dense reduced Hessian.
    let mut h = DMatrix::<f64>::zeros(nu, nu);
    for &(i, j, v) in &quad {
        if i == j {
            h[(i, i)] += 2.0 * v;
        } else {
            h[(i, j)] += v;
            h[(j, i)] += v;
        }
    }
    let scale = (0..nu).map(|i| h[(i, i)].abs()).fold(1.0f64, f64::max);
    let mut ridge = 0.0;
    let chol = loop {
        let mut hr = h.clone();
        if ridge > 0.0 {
            for i in 0..nu {
                hr[(i, i)] += ridge;
            }
        }
        match Cholesky::new(hr) {
            Some(ch) => break ch,
            None => {
                ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
                if ridge > 1e-6 * scale {
                    return Err(MiqpError::NotPsd(
                        "reduced Hessian is not positive semidefinite".into(),
                    ));
                }
            }
        }
    };
    let x0 = chol.solve(&DVector::from_iterator(nu, lin.iter().map(|&v| -v)));

    Ok(ReducedProblem {
        nu,
        quad,
        lin,
        konst,
        ineq,
        bins,
        bin_mask,
        pairs,
        red,
        chol,
        ridge,
        x0,
    })
}

impl ReducedProblem {
    fn objective_at(&self, u: &[f64]) -> f64 {
        let mut f = self.konst;
        for &(i, j, v) in &self.quad {
            f += v * u[i] * u[j];
        }
        for (i, &v) in self.lin.iter().enumerate() {
            f += v * u[i];
        }
        f
    }

    fn row_vec(&self, kind: ActiveKind) -> LinRow {
        match kind {
            ActiveKind::Pin(b) => LinRow::new(vec![(b, 1.0)], 0.0),
            ActiveKind::PairTight(r) | ActiveKind::Added(r) => self.ineq[r].clone(),
        }
    }
}

#[derive(Debug)]
enum NodeError {
    Infeasible(Option<InfeasibilityCertificate>),
    Numerical(String),
}

struct NodeOutcome {
    u: Vec<f64>,
    objective: f64,
}

/// Per-instance solver state: cached `H^{-1} a` vectors per row/pin.
struct NodeSolver<'a> {
    rp: &'a ReducedProblem,
    hinv_rows: Vec<Option<DVector<f64>>>,
    hinv_pins: Vec<Option<DVector<f64>>>,
    qp_solves: usize,
}

impl<'a> NodeSolver<'a> {
    fn new(rp: &'a ReducedProblem) -> Self {
        NodeSolver {
            hinv_rows: vec![None; rp.ineq.len()],
            hinv_pins: vec![None; rp.nu],
            rp,
            qp_solves: 0,
        }
    }

    fn hinv_for(&mut self, kind: ActiveKind) -> DVector<f64> {
        match kind {
            ActiveKind::Pin(b) => {
                if self.hinv_pins[b].is_none() {
                    let mut e = DVector::zeros(self.rp.nu);
                    e[b] = 1.0;
                    self.hinv_pins[b] = Some(self.rp.chol.solve(&e));
                }
                self.hinv_pins[b].clone().unwrap()
            }
            ActiveKind::PairTight(r) | ActiveKind::Added(r) => {
                if self.hinv_rows[r].is_none() {
                    let mut a = DVector::zeros(self.rp.nu);
                    for &(c, v) in &self.rp.ineq[r].terms {
                        a[c] = v;
                    }
                    self.hinv_rows[r] = Some(self.rp.chol.solve(&a));
                }
                self.hinv_rows[r].clone().unwrap()
            }
        }
    }

    /// Solves the node for a partial binary assignment.
    fn solve(&mut self, fixed: &[Option<bool>]) -> Result<NodeOutcome, NodeError> {
        self.qp_solves += 1;
        let rp = self.rp;
        let nu = rp.nu;

        let mut active: Vec<(ActiveKind, f64)> = Vec::new(); // (row, rhs)
        let bin_val = |b: usize| -> Option<f64> {
            let k = rp.bins.iter().position(|&x| x == b)?;
            fixed[k].map(|v| if v { 1.0 } else { 0.0 })
        };
        for (k, &b) in rp.bins.iter().enumerate() {
            if let Some(v) = fixed[k] {
                active.push((ActiveKind::Pin(b), if v { 1.0 } else { 0.0 }));
            }
        }

        // Pairs whose binary terms are all fixed: fold and test the width.
        let mut consumed = vec![false; rp.ineq.len()];
        for &(j, k) in &rp.pairs {
            let fold = |ri: usize| -> Option<f64> {
                let mut rhs = rp.ineq[ri].rhs;
                for &(c, v) in &rp.ineq[ri].terms {
                    if rp.bin_mask[c] {
                        rhs -= v * bin_val(c)?;
                    }
                }
                Some(rhs)
            };
            let (Some(fj), Some(fk)) = (fold(j), fold(k)) else {
                continue;
            };
            let scale = 1.0f64.max(fj.abs()).max(fk.abs());
            let width = fj + fk;
            if width < -TOL_WIDTH * scale {
                return Err(NodeError::Infeasible(Some(InfeasibilityCertificate {
                    rows: vec![(j, 1.0), (k, 1.0)],
                    gap: -width,
                })));
            }
            if width <= TOL_WIDTH * scale {
                active.push((ActiveKind::PairTight(j), rp.ineq[j].rhs));
                consumed[j] = true;
                consumed[k] = true;
            }
        }

        if nu == 0 {
            // Fully determined by the equalities; just check inequalities.
            for row in &rp.ineq {
                if -row.rhs > TOL_FEAS * 1.0f64.max(row.rhs.abs()) {
                    return Err(NodeError::Infeasible(None));
                }
            }
            return Ok(NodeOutcome {
                u: Vec::new(),
                objective: rp.konst,
            });
        }

        let mut visited: HashSet<Vec<(ActiveKind, u64)>> = HashSet::new();
        let max_rounds = 4 * (rp.ineq.len() + active.len() + 4);
        for _round in 0..max_rounds {
            let sig: Vec<(ActiveKind, u64)> =
                active.iter().map(|&(k, r)| (k, r.to_bits())).collect();
            if !visited.insert(sig) {
                return Err(NodeError::Numerical("active-set cycle".into()));
            }

            let m = active.len();
            let ys: Vec<DVector<f64>> = active.iter().map(|&(k, _)| self.hinv_for(k)).collect();
            let (x, nus) = if m == 0 {
                (rp.x0.clone(), DVector::zeros(0))
            } else {
                // Schur system S nu = A x0 - b.
                let mut s = DMatrix::<f64>::zeros(m, m);
                let mut rhs = DVector::<f64>::zeros(m);
                for (i, &(ki, bi)) in active.iter().enumerate() {
                    let arow = rp.row_vec(ki);
                    for (j, yj) in ys.iter().enumerate() {
                        s[(i, j)] = arow.terms.iter().map(|&(c, v)| v * yj[c]).sum();
                    }
                    let ax0: f64 = arow.terms.iter().map(|&(c, v)| v * rp.x0[c]).sum();
                    rhs[i] = ax0 - bi;
                }
                // Symmetrize against rounding.
                for i in 0..m {
                    for j in 0..i {
                        let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                        s[(i, j)] = v;
                        s[(j, i)] = v;
                    }
                }
                let Some(sch) = Cholesky::new(s.clone()) else {
                    return Err(self.dependence_failure(&active));
                };
                let nus = sch.solve(&rhs);
                let mut x = rp.x0.clone();
                for (j, yj) in ys.iter().enumerate() {
                    x.axpy(-nus[j], yj, 1.0);
                }
                (x, nus)
            };

            // Multiplier signs: added inequality rows must keep nu >= 0.
            let mut worst_drop: Option<(usize, f64)> = None;
            for (i, &(ki, _)) in active.iter().enumerate() {
                if matches!(ki, ActiveKind::Added(_)) {
                    let v = nus[i];
                    if v < -1e-9 && worst_drop.map(|(_, w)| v < w).unwrap_or(true) {
                        worst_drop = Some((i, v));
                    }
                }
            }
            if let Some((i, _)) = worst_drop {
                active.remove(i);
                continue;
            }

            // Feasibility of the remaining inequalities.
            let xs = x.as_slice();
            let mut worst_add: Option<(usize, f64)> = None;
            for (ri, row) in rp.ineq.iter().enumerate() {
                if consumed[ri]
                    || active
                        .iter()
                        .any(|&(k, _)| k == ActiveKind::Added(ri) || k == ActiveKind::PairTight(ri))
                {
                    continue;
                }
                let viol = (row.dot(xs) - row.rhs) / 1.0f64.max(row.rhs.abs());
                if viol > TOL_FEAS && worst_add.map(|(_, w)| viol > w).unwrap_or(true) {
                    worst_add = Some((ri, viol));
                }
            }
            if let Some((ri, _)) = worst_add {
                active.push((ActiveKind::Added(ri), rp.ineq[ri].rhs));
                continue;
            }

            if rp.ridge > 0.0 && x.amax() > 1e8 {
                return Err(NodeError::Numerical("unbounded direction".into()));
            }
            let u: Vec<f64> = xs.to_vec();
            let objective = rp.objective_at(&u);
            return Ok(NodeOutcome { u, objective });
        }
        Err(NodeError::Numerical("active-set iteration limit".into()))
    }

    /// Diagnoses a singular Schur system: either redundancy (dropped) or a
    /// Farkas-style infeasibility certificate.
    fn dependence_failure(&mut self, active: &[(ActiveKind, f64)]) -> NodeError {
        // The most recently added row is dependent on the rest. Express it
        // as a combination and compare right-hand sides.
        let Some((&(last, blast), rest)) = active.split_last() else {
            return NodeError::Numerical("empty active set with singular Schur".into());
        };
        let rp = self.rp;
        let mut a_last = DVector::<f64>::zeros(rp.nu);
        for &(c, v) in &rp.row_vec(last).terms {
            a_last[c] = v;
        }
        if rest.is_empty() {
            return NodeError::Numerical("singular Schur with single row".into());
        }
        let mut basis = DMatrix::<f64>::zeros(rp.nu, rest.len());
        for (j, &(k, _)) in rest.iter().enumerate() {
            for &(c, v) in &rp.row_vec(k).terms {
                basis[(c, j)] = v;
            }
        }
        let svd = basis.clone().svd(true, true);
        let Ok(lambda) = svd.solve(&a_last, 1e-10) else {
            return NodeError::Numerical("failed dependence solve".into());
        };
        let recon = &basis * &lambda;
        if (&recon - &a_last).amax() > 1e-7 * (1.0 + a_last.amax()) {
            return NodeError::Numerical("singular Schur without dependence".into());
        }
        // With `a_last = sum lambda_j a_j`, tight equalities and
        // `lambda_j <= 0` on inequality rows give
        // `a_last^T x >= sum lambda_j b_j` for every feasible x, so
        // `sum lambda_j b_j > b_last` certifies infeasibility (the rows
        // `1 * last + sum (-lambda_j) * j` cancel with negative rhs).
        let combo_rhs: f64 = rest
            .iter()
            .enumerate()
            .map(|(j, &(_, b))| lambda[j] * b)
            .sum();
        let gap = combo_rhs - blast;
        let signs_ok = rest
            .iter()
            .enumerate()
            .all(|(j, &(k, _))| !matches!(k, ActiveKind::Added(_)) || lambda[j] <= 1e-9);
        if gap > 1e-9 && signs_ok {
            let mut rows = vec![];
            if let ActiveKind::Added(ri) | ActiveKind::PairTight(ri) = last {
                rows.push((ri, 1.0));
            }
            for (j, &(k, _)) in rest.iter().enumerate() {
                if let ActiveKind::Added(ri) | ActiveKind::PairTight(ri) = k {
                    rows.push((ri, (-lambda[j]).max(0.0)));
                }
            }
            NodeError::Infeasible(Some(InfeasibilityCertificate { rows, gap }))
        } else {
            NodeError::Infeasible(None)
        }
    }
}

/// Solves a convex QP with linear constraints.
///
/// The returned point satisfies primal feasibility and stationarity to
/// `tol`; infeasible systems yield an error carrying, when available, a
/// nonnegative row combination certifying the contradiction.
pub fn solve_qp(qp: &QuadraticProgram, tol: f64) -> Result<QpSolution, MiqpError> {
    let mut mb = MixedBinaryQP::new(qp.clone(), Vec::new());
    let rp = build_reduced(&mut mb)?;
    let mut solver = NodeSolver::new(&rp);
    match solver.solve(&[]) {
        Ok(out) => {
            let x = rp.red.recover(&out.u);
            let violation = mb.qp.max_violation(&x);
            if violation > tol.max(1e-7) {
                return Err(MiqpError::Numerical(format!(
                    "constraint violation {violation:.3e} above tolerance"
                )));
            }
            let objective = mb.qp.objective(&x);
            Ok(QpSolution { x, objective })
        }
        Err(NodeError::Infeasible(cert)) => Err(MiqpError::Infeasible { certificate: cert }),
        Err(NodeError::Numerical(msg)) => {
            if msg.contains("unbounded") {
                Err(MiqpError::Unbounded)
            } else {
                Err(MiqpError::Numerical(msg))
            }
        }
    }
}

struct Incumbent {
    bits: Vec<bool>,
    outcome: NodeOutcome,
}

fn better_incumbent(objective: f64, bits: &[bool], inc: &Option<Incumbent>) -> bool {
    match inc {
        None => true,
        Some(cur) => {
            let scale = 1.0f64.max(cur.outcome.objective.abs());
            if objective < cur.outcome.objective - TOL_OBJ * scale {
                true
            } else if objective <= cur.outcome.objective + TOL_OBJ * scale {
                // Documented tie-break: lexicographically smallest vector.
                bits < cur.bits.as_slice()
            } else {
                false
            }
        }
    }
}

/// Solves a mixed-binary convex QP to global optimality.
///
/// `Enumerate` tries every assignment in lexicographic order (the oracle
/// path); `BranchAndBound` relaxes binaries to `[0, 1]`, branches on the
/// most fractional one, and runs depth-first until the first incumbent,
/// best-bound afterwards. Equal-objective assignments resolve to the
/// lexicographically smallest binary vector under either strategy.
pub fn solve_miqp(
    mb: &mut MixedBinaryQP,
    strategy: Strategy,
    _tol: f64,
) -> Result<MiqpSolution, MiqpError> {
    let started = Instant::now();
    let e = mb.binary_idx.len();
    if strategy == Strategy::Enumerate && e > 30 {
        return Err(MiqpError::EnumerationTooLarge(e));
    }
    let rp = build_reduced(mb)?;
    let mut solver = NodeSolver::new(&rp);
    let mut stats = MiqpStats::default();
    let mut incumbent: Option<Incumbent> = None;

    match strategy {
        Strategy::Enumerate => {
            for k in 0u64..(1u64 << e) {
                let bits: Vec<bool> = (0..e).map(|i| (k >> (e - 1 - i)) & 1 == 1).collect();
                let fixed: Vec<Option<bool>> = bits.iter().map(|&b| Some(b)).collect();
                stats.nodes += 1;
                match solver.solve(&fixed) {
                    Ok(out) => {
                        if better_incumbent(out.objective, &bits, &incumbent) {
                            incumbent = Some(Incumbent { bits, outcome: out });
                        }
                    }
                    Err(NodeError::Infeasible(_)) => {}
                    Err(NodeError::Numerical(msg)) => return Err(MiqpError::Numerical(msg)),
                }
            }
        }
        Strategy::BranchAndBound => {
            struct Node {
                fixed: Vec<Option<bool>>,
                bound: f64,
            }
            let mut queue: Vec<Node> = vec![Node {
                fixed: vec![None; e],
                bound: f64::NEG_INFINITY,
            }];
            let mut first_cert: Option<Option<InfeasibilityCertificate>> = None;
            while !queue.is_empty() {
                // Depth-first until an incumbent exists, best bound after.
                let idx = if incumbent.is_none() {
                    queue.len() - 1
                } else {
                    let mut best = 0;
                    for i in 1..queue.len() {
                        if queue[i].bound < queue[best].bound {
                            best = i;
                        }
                    }
                    best
                };
                let node = queue.swap_remove(idx);
                if let Some(inc) = &incumbent {
                    let scale = 1.0f64.max(inc.outcome.objective.abs());
                    if node.bound > inc.outcome.objective + TOL_OBJ * scale {
                        continue;
                    }
                }
                stats.nodes += 1;
                let out = match solver.solve(&node.fixed) {
                    Ok(out) => out,
                    Err(NodeError::Infeasible(cert)) => {
                        if first_cert.is_none() {
                            first_cert = Some(cert);
                        }
                        continue;
                    }
                    Err(NodeError::Numerical(msg)) => return Err(MiqpError::Numerical(msg)),
                };
                if stats.root_relaxation.is_none() {
                    stats.root_relaxation = Some(out.objective);
                }
                if let Some(inc) = &incumbent {
                    let scale = 1.0f64.max(inc.outcome.objective.abs());
                    if out.objective > inc.outcome.objective + TOL_OBJ * scale {
                        continue;
                    }
                }

                let node_bound = out.objective;
                let fully_fixed = node.fixed.iter().all(|f| f.is_some());
                let vals: Vec<f64> = rp.bins.iter().map(|&b| out.u[b]).collect();
                let integral = vals
                    .iter()
                    .enumerate()
                    .all(|(k, &v)| node.fixed[k].is_some() || (v - v.round()).abs() <= TOL_INT);
                if integral {
                    let bits: Vec<bool> = vals
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| node.fixed[k].unwrap_or(v.round() == 1.0))
                        .collect();
                    let all_fixed: Vec<Option<bool>> = bits.iter().map(|&b| Some(b)).collect();
                    let leaf = if fully_fixed {
                        Some(out)
                    } else {
                        stats.nodes += 1;
                        match solver.solve(&all_fixed) {
                            Ok(l) => Some(l),
                            Err(NodeError::Infeasible(_)) => None,
                            Err(NodeError::Numerical(msg)) => {
                                return Err(MiqpError::Numerical(msg))
                            }
                        }
                    };
                    if let Some(leaf) = leaf {
                        if better_incumbent(leaf.objective, &bits, &incumbent) {
                            incumbent = Some(Incumbent {
                                bits: bits.clone(),
                                outcome: leaf,
                            });
                        }
                    }
                    if fully_fixed {
                        continue;
                    }
                    // The subtree may hide equal-objective assignments that
                    // win the lexicographic tie-break; keep branching unless
                    // the bound already exceeds the incumbent.
                }

                // Branch on the most fractional free binary (ties: lowest
                // index); explore the zero side first.
                let mut pick: Option<(usize, f64)> = None;
                for (k, &v) in vals.iter().enumerate() {
                    if node.fixed[k].is_some() {
                        continue;
                    }
                    let frac = v.clamp(0.0, 1.0);
                    let score = frac.min(1.0 - frac);
                    if pick.map(|(_, s)| score > s).unwrap_or(true) {
                        pick = Some((k, score));
                    }
                }
                let Some((k, _)) = pick else { continue };
                for v in [true, false] {
                    let mut fixed = node.fixed.clone();
                    fixed[k] = Some(v);
                    queue.push(Node {
                        fixed,
                        bound: node_bound,
                    });
                }
            }
            if incumbent.is_none() {
                return Err(MiqpError::Infeasible {
                    certificate: first_cert.flatten(),
                });
            }
        }
    }

    let Some(inc) = incumbent else {
        return Err(MiqpError::Infeasible { certificate: None });
    };
    stats.qp_solves = solver.qp_solves;
    stats.wall = started.elapsed();
    let x = rp.red.recover(&inc.outcome.u);
    let objective = mb.qp.objective(&x);
    Ok(MiqpSolution {
        x,
        objective,
        binaries: inc.bits,
        stats,
    })
}
