//! Sparse equality elimination.
//!
//! Linear equalities are removed by Gaussian substitution before any
//! factorization: each processed row pins one variable to an affine
//! expression of the others. Pivots prefer sparse, well-scaled columns and
//! never touch protected (binary) variables, so those always survive into
//! the reduced problem.

use super::{LinRow, MiqpError};

/// Affine expression over reduced variable indices.
#[derive(Debug, Clone, Default)]
pub struct Expr {
    pub terms: Vec<(usize, f64)>,
    pub konst: f64,
}

/// Result of eliminating the equality rows of a problem.
#[derive(Debug)]
pub struct Reduction {
    pub n_old: usize,
    /// Old indices of the surviving variables, ascending.
    pub free_old: Vec<usize>,
    /// Map old index -> reduced index (None when eliminated).
    pub new_of_old: Vec<Option<usize>>,
    /// Finalized expressions (over reduced indices) for eliminated vars.
    expr_of_old: Vec<Option<Expr>>,
    /// Equality rows that contained only protected variables; callers turn
    /// each into a pair of inequalities.
    pub leftover_eq: Vec<LinRow>,
}

impl Reduction {
    pub fn n_free(&self) -> usize {
        self.free_old.len()
    }

    /// Rewrites a row over old indices into reduced indices, folding
    /// eliminated variables through their expressions.
    pub fn reduce_row(&self, row: &LinRow) -> LinRow {
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(row.terms.len());
        let mut rhs = row.rhs;
        for &(c, v) in &row.terms {
            match (&self.new_of_old[c], &self.expr_of_old[c]) {
                (Some(nc), _) => terms.push((*nc, v)),
                (None, Some(e)) => {
                    for &(nc, ec) in &e.terms {
                        terms.push((nc, v * ec));
                    }
                    rhs -= v * e.konst;
                }
                (None, None) => unreachable!("variable neither free nor eliminated"),
            }
        }
        LinRow::new(terms, rhs)
    }

    /// Rewrites an objective in coefficient form into reduced indices.
    pub fn reduce_objective(
        &self,
        quad: &[(usize, usize, f64)],
        lin: &[f64],
        konst: f64,
    ) -> (Vec<(usize, usize, f64)>, Vec<f64>, f64) {
        enum Sub<'a> {
            Free(usize),
            Affine(&'a Expr),
        }
        let sub = |c: usize| -> Sub<'_> {
            match self.new_of_old[c] {
                Some(nc) => Sub::Free(nc),
                None => Sub::Affine(self.expr_of_old[c].as_ref().unwrap()),
            }
        };

        let nf = self.n_free();
        let mut new_lin = vec![0.0; nf];
        let mut new_konst = konst;
        let mut tri: Vec<(usize, usize, f64)> = Vec::with_capacity(quad.len() * 2);
        let push = |i: usize, j: usize, v: f64, tri: &mut Vec<(usize, usize, f64)>| {
            tri.push((i.min(j), i.max(j), v));
        };

        for &(i, j, v) in quad {
            match (sub(i), sub(j)) {
                (Sub::Free(a), Sub::Free(b)) => push(a, b, v, &mut tri),
                (Sub::Free(a), Sub::Affine(e)) | (Sub::Affine(e), Sub::Free(a)) => {
                    for &(b, eb) in &e.terms {
                        push(a, b, v * eb, &mut tri);
                    }
                    new_lin[a] += v * e.konst;
                }
                (Sub::Affine(ea), Sub::Affine(eb)) => {
                    for &(a, ca) in &ea.terms {
                        for &(b, cb) in &eb.terms {
                            push(a, b, v * ca * cb, &mut tri);
                        }
                        new_lin[a] += v * ca * eb.konst;
                    }
                    for &(b, cb) in &eb.terms {
                        new_lin[b] += v * cb * ea.konst;
                    }
                    new_konst += v * ea.konst * eb.konst;
                }
            }
        }
        for (c, &v) in lin.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            match sub(c) {
                Sub::Free(a) => new_lin[a] += v,
                Sub::Affine(e) => {
                    for &(a, ca) in &e.terms {
                        new_lin[a] += v * ca;
                    }
                    new_konst += v * e.konst;
                }
            }
        }

        tri.sort_by_key(|&(i, j, _)| (i, j));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(tri.len());
        for (i, j, v) in tri {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|t| t.2 != 0.0);
        (out, new_lin, new_konst)
    }

    /// Recovers the full old-space vector from reduced values.
    pub fn recover(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_old];
        for (nc, &c) in self.free_old.iter().enumerate() {
            x[c] = u[nc];
        }
        for c in 0..self.n_old {
            if let Some(e) = &self.expr_of_old[c] {
                x[c] = e.konst + e.terms.iter().map(|&(nc, v)| v * u[nc]).sum::<f64>();
            }
        }
        x
    }
}

/// Eliminates equality rows by substitution. `protected[v]` keeps variable
/// `v` out of the pivot set. Detects inconsistent systems.
pub fn eliminate(
    n: usize,
    eq_rows: &[LinRow],
    protected: &[bool],
) -> Result<Reduction, MiqpError> {
    let mut work: Vec<Option<LinRow>> = eq_rows.iter().map(|r| Some(r.clone())).collect();
    // (pivot old var, expr over old vars at time of elimination)
    let mut raw: Vec<(usize, Vec<(usize, f64)>, f64)> = Vec::new();
    let mut eliminated = vec![false; n];
    let mut leftover_eq = Vec::new();

    // Occurrence counts per column over the remaining rows, kept incremental
    // so pivot selection stays cheap.
    let mut occ = vec![0usize; n];
    for row in work.iter().flatten() {
        for &(c, _) in &row.terms {
            occ[c] += 1;
        }
    }

    loop {
        // Smallest remaining row first keeps fill-in low.
        let mut pick: Option<(usize, usize)> = None;
        for (ri, row) in work.iter().enumerate() {
            if let Some(r) = row {
                let nnz = r.terms.len();
                if pick.map(|(_, bn)| nnz < bn).unwrap_or(true) {
                    pick = Some((ri, nnz));
                }
            }
        }
        let Some((ri, _)) = pick else { break };
        let row = work[ri].take().unwrap();
        for &(c, _) in &row.terms {
            occ[c] -= 1;
        }

        let row_max = row.terms.iter().map(|t| t.1.abs()).fold(0.0f64, f64::max);
        if row_max <= 1e-13 {
            if row.rhs.abs() > 1e-9 {
                return Err(MiqpError::Infeasible { certificate: None });
            }
            continue; // redundant row
        }

        // Pivot: among stable unprotected columns pick the one appearing in
        // the fewest other rows (ties: largest coefficient).
        let mut pivot: Option<(usize, f64, usize)> = None; // (col, |a|, occ)
        for &(c, v) in &row.terms {
            if protected[c] || v.abs() < 0.1 * row_max {
                continue;
            }
            let better = match pivot {
                None => true,
                Some((_, bv, bo)) => occ[c] < bo || (occ[c] == bo && v.abs() > bv),
            };
            if better {
                pivot = Some((c, v.abs(), occ[c]));
            }
        }
        if pivot.is_none() {
            // Allow poorly scaled pivots before giving up.
            for &(c, v) in &row.terms {
                if protected[c] || v.abs() < 1e-11 * row_max {
                    continue;
                }
                if pivot.map(|(_, bv, _)| v.abs() > bv).unwrap_or(true) {
                    pivot = Some((c, v.abs(), 0));
                }
            }
        }
        let Some((p, _, _)) = pivot else {
            leftover_eq.push(row);
            continue;
        };

        let ap = row.terms.iter().find(|t| t.0 == p).unwrap().1;
        let expr_terms: Vec<(usize, f64)> = row
            .terms
            .iter()
            .filter(|t| t.0 != p)
            .map(|&(c, v)| (c, -v / ap))
            .collect();
        let expr_konst = row.rhs / ap;
        eliminated[p] = true;

        for slot in work.iter_mut() {
            let Some(r) = slot else { continue };
            let Some(pos) = r.terms.iter().position(|t| t.0 == p) else {
                continue;
            };
            for &(c, _) in &r.terms {
                occ[c] -= 1;
            }
            let coef = r.terms[pos].1;
            let mut terms = r.terms.clone();
            terms.swap_remove(pos);
            for &(c, v) in &expr_terms {
                terms.push((c, coef * v));
            }
            let mut nr = LinRow::new(terms, r.rhs - coef * expr_konst);
            // Hygiene: drop coefficients far below the row scale.
            let m = nr.terms.iter().map(|t| t.1.abs()).fold(0.0f64, f64::max);
            if m > 0.0 {
                nr.terms.retain(|t| t.1.abs() > 1e-14 * m);
            }
            for &(c, _) in &nr.terms {
                occ[c] += 1;
            }
            *slot = Some(nr);
        }

        raw.push((p, expr_terms, expr_konst));
    }

    let free_old: Vec<usize> = (0..n).filter(|&c| !eliminated[c]).collect();
    let mut new_of_old = vec![None; n];
    for (nc, &c) in free_old.iter().enumerate() {
        new_of_old[c] = Some(nc);
    }

    // Finalize in reverse elimination order: later expressions only
    // reference free variables, so earlier ones resolve against them.
    let mut expr_of_old: Vec<Option<Expr>> = vec![None; n];
    for (p, terms, konst) in raw.into_iter().rev() {
        let mut out = Expr {
            terms: Vec::with_capacity(terms.len()),
            konst,
        };
        for (c, v) in terms {
            if let Some(nc) = new_of_old[c] {
                out.terms.push((nc, v));
            } else {
                let e = expr_of_old[c]
                    .as_ref()
                    .expect("referenced variable eliminated later must be finalized");
                for &(nc, ec) in &e.terms {
                    out.terms.push((nc, v * ec));
                }
                out.konst += v * e.konst;
            }
        }
        out.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.terms.len());
        for (c, v) in out.terms {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        out.terms = merged;
        expr_of_old[p] = Some(out);
    }

    Ok(Reduction {
        n_old: n,
        free_old,
        new_of_old,
        expr_of_old,
        leftover_eq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], rhs: f64) -> LinRow {
        LinRow::new(terms.to_vec(), rhs)
    }

    #[test]
    fn chain_elimination_recovers_consistent_solutions() {
        // x0 = 2, x1 = x0 + 1, x2 + x1 + x0 = 10 -> all expressible in x3.
        let rows = vec![
            row(&[(0, 1.0)], 2.0),
            row(&[(1, 1.0), (0, -1.0)], 1.0),
            row(&[(2, 1.0), (1, 1.0), (0, 1.0)], 10.0),
        ];
        let red = eliminate(4, &rows, &[false; 4]).unwrap();
        assert_eq!(red.n_free(), 1);
        let x = red.recover(&[7.5]);
        assert_eq!(x[0], 2.0);
        assert_eq!(x[1], 3.0);
        assert_eq!(x[2], 5.0);
        assert_eq!(x[3], 7.5);
    }

    #[test]
    fn inconsistent_rows_are_detected() {
        let rows = vec![row(&[(0, 1.0)], 1.0), row(&[(0, 1.0)], 2.0)];
        let err = eliminate(2, &rows, &[false; 2]).unwrap_err();
        assert!(matches!(err, MiqpError::Infeasible { .. }));
    }

    #[test]
    fn protected_variables_survive() {
        let rows = vec![row(&[(0, 1.0), (1, 1.0)], 1.0)];
        let red = eliminate(2, &rows, &[false, true]).unwrap();
        assert_eq!(red.free_old, vec![1]);
        let x = red.recover(&[0.25]);
        assert_eq!(x[0], 0.75);
    }

    #[test]
    fn binary_only_rows_become_leftovers() {
        let rows = vec![row(&[(0, 1.0), (1, -1.0)], 0.0)];
        let red = eliminate(2, &rows, &[true, true]).unwrap();
        assert_eq!(red.leftover_eq.len(), 1);
        assert_eq!(red.n_free(), 2);
    }

    #[test]
    fn objective_reduction_matches_direct_substitution() {
        // f = (x0 - 1)^2 + x0 x1 + 3 x1 with x0 = 2 x1 + 1.
        let rows = vec![row(&[(0, 1.0), (1, -2.0)], 1.0)];
        let red = eliminate(2, &rows, &[false, true]).unwrap();
        let quad = vec![(0usize, 0usize, 1.0), (0usize, 1usize, 1.0)];
        let lin = vec![-2.0, 3.0];
        let (q2, l2, k2) = red.reduce_objective(&quad, &lin, 1.0);
        let eval = |u: f64| -> f64 {
            let vars = [u];
            let mut f = k2;
            for &(i, j, v) in &q2 {
                f += v * vars[i] * vars[j];
            }
            f + l2[0] * u
        };
        for u in [-1.0, 0.0, 0.5, 2.0] {
            let x0 = 2.0 * u + 1.0;
            let direct = (x0 - 1.0_f64).powi(2) + x0 * u + 3.0 * u + 1.0;
            assert!((eval(u) - direct).abs() < 1e-12);
        }
    }
}
