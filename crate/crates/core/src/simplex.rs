//! Dense two-phase simplex for the small polyhedral subproblems.
//!
//! Every L1/L∞ distance, dual-ball maximization and least-dual-norm
//! interpolation in this crate is a linear program in at most a few dozen
//! variables. The solver below works on the full tableau with Bland's rule
//! (finite termination under degeneracy) and re-solves the final basic system
//! from the original data with partial-pivot LU, so the returned vertex does
//! not carry accumulated tableau drift. Optimality of the returned point is
//! never trusted downstream: callers certify everything by direct evaluation
//! against an independently computed dual object.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub(crate) struct LpRow {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
    Stalled,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "infeasible"),
            LpError::Unbounded => write!(f, "unbounded"),
            LpError::Stalled => write!(f, "iteration limit"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

/// Minimization problem over variables with individual bounds.
#[derive(Clone, Debug)]
pub(crate) struct LpBuilder {
    n: usize,
    objective: Vec<f64>,
    rows: Vec<LpRow>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
enum VarMap {
    Split { pos: usize, neg: usize },
    Shifted { col: usize, offset: f64, sign: f64 },
}

impl LpBuilder {
    /// `n` variables, all free by default, zero objective.
    pub fn new(n: usize) -> LpBuilder {
        LpBuilder {
            n,
            objective: vec![0.0; n],
            rows: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn objective(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.n);
        self.objective = c;
        self
    }

    pub fn bound(&mut self, i: usize, lo: f64, hi: f64) -> &mut Self {
        self.lower[i] = lo;
        self.upper[i] = hi;
        self
    }

    pub fn nonneg(&mut self, i: usize) -> &mut Self {
        self.bound(i, 0.0, f64::INFINITY)
    }

    pub fn row(&mut self, coeffs: Vec<f64>, rel: Rel, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n);
        self.rows.push(LpRow { coeffs, rel, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        // --- translate to standard form: min c.u, A u = b, u >= 0 ---
        let mut maps = Vec::with_capacity(self.n);
        let mut n_std = 0usize;
        let mut extra_rows: Vec<LpRow> = Vec::new();
        for i in 0..self.n {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            let map = if lo.is_infinite() && hi.is_infinite() {
                let m = VarMap::Split {
                    pos: n_std,
                    neg: n_std + 1,
                };
                n_std += 2;
                m
            } else if hi.is_infinite() {
                let m = VarMap::Shifted {
                    col: n_std,
                    offset: lo,
                    sign: 1.0,
                };
                n_std += 1;
                m
            } else if lo.is_infinite() {
                let m = VarMap::Shifted {
                    col: n_std,
                    offset: hi,
                    sign: -1.0,
                };
                n_std += 1;
                m
            } else {
                // boxed: shift to the lower bound and cap the range by a row
                let mut coeffs = vec![0.0; self.n];
                coeffs[i] = 1.0;
                extra_rows.push(LpRow {
                    coeffs,
                    rel: Rel::Le,
                    rhs: hi,
                });
                let m = VarMap::Shifted {
                    col: n_std,
                    offset: lo,
                    sign: 1.0,
                };
                n_std += 1;
                m
            };
            maps.push(map);
        }

        let all_rows: Vec<&LpRow> = self.rows.iter().chain(extra_rows.iter()).collect();
        let mut std_rows: Vec<(Vec<f64>, Rel, f64)> = Vec::new();
        let scale_a = all_rows
            .iter()
            .flat_map(|r| r.coeffs.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()))
            .max(1.0);
        for r in &all_rows {
            let mut coeffs = vec![0.0; n_std];
            let mut shift = 0.0;
            for (i, &a) in r.coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match maps[i] {
                    VarMap::Split { pos, neg } => {
                        coeffs[pos] += a;
                        coeffs[neg] -= a;
                    }
                    VarMap::Shifted { col, offset, sign } => {
                        coeffs[col] += a * sign;
                        shift += a * offset;
                    }
                }
            }
            let mut rhs = r.rhs - shift;
            let mut rel = r.rel;
            if coeffs.iter().all(|&c| c.abs() <= 1e-14 * scale_a) {
                let ok = match rel {
                    Rel::Le => rhs >= -1e-9 * scale_a,
                    Rel::Ge => rhs <= 1e-9 * scale_a,
                    Rel::Eq => rhs.abs() <= 1e-9 * scale_a,
                };
                if ok {
                    continue;
                }
                return Err(LpError::Infeasible);
            }
            if rhs < 0.0 {
                for c in coeffs.iter_mut() {
                    *c = -*c;
                }
                rhs = -rhs;
                rel = match rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
            }
            std_rows.push((coeffs, rel, rhs));
        }

        let mut c_std = vec![0.0; n_std];
        for (i, &ci) in self.objective.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            match maps[i] {
                VarMap::Split { pos, neg } => {
                    c_std[pos] += ci;
                    c_std[neg] -= ci;
                }
                VarMap::Shifted { col, sign, .. } => c_std[col] += ci * sign,
            }
        }

        let m = std_rows.len();
        // slack / artificial columns
        let mut total = n_std;
        let mut slack_col = vec![None; m];
        for (i, (_, rel, _)) in std_rows.iter().enumerate() {
            match rel {
                Rel::Le | Rel::Ge => {
                    slack_col[i] = Some(total);
                    total += 1;
                }
                Rel::Eq => {}
            }
        }
        let mut art_col = vec![None; m];
        let mut n_art = 0;
        for (i, (_, rel, _)) in std_rows.iter().enumerate() {
            if !matches!(rel, Rel::Le) {
                art_col[i] = Some(total + n_art);
                n_art += 1;
            }
        }
        let width = total + n_art;

        // original standard matrix (kept pristine for the LU polish)
        let mut a0 = vec![vec![0.0f64; width]; m];
        let mut b0 = vec![0.0f64; m];
        for (i, (coeffs, rel, rhs)) in std_rows.iter().enumerate() {
            a0[i][..n_std].copy_from_slice(coeffs);
            if let Some(sc) = slack_col[i] {
                a0[i][sc] = match rel {
                    Rel::Le => 1.0,
                    Rel::Ge => -1.0,
                    Rel::Eq => unreachable!(),
                };
            }
            if let Some(ac) = art_col[i] {
                a0[i][ac] = 1.0;
            }
            b0[i] = *rhs;
        }

        let mut tableau: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row = a0[i].clone();
                row.push(b0[i]);
                row
            })
            .collect();
        let mut basis: Vec<usize> = (0..m)
            .map(|i| art_col[i].or(slack_col[i]).expect("row has a basic column"))
            .collect();

        let scale_b = b0.iter().fold(0.0f64, |m, b| m.max(b.abs())).max(1.0);
        let eps_piv = 1e-10 * scale_a.max(1.0);

        if n_art > 0 {
            let mut phase1 = vec![0.0; width];
            for slot in phase1.iter_mut().skip(total) {
                *slot = 1.0;
            }
            run_simplex(
                &mut tableau,
                &mut basis,
                &phase1,
                total, // artificials may leave but never re-enter
                eps_piv,
            )?;
            let art_value: f64 = basis
                .iter()
                .enumerate()
                .filter(|(_, &j)| j >= total)
                .map(|(i, _)| tableau[i][width])
                .sum();
            if art_value > 1e-7 * scale_b {
                return Err(LpError::Infeasible);
            }
            // pivot lingering degenerate artificials out where possible
            for i in 0..m {
                if basis[i] >= total {
                    if let Some(j) = (0..total).find(|&j| tableau[i][j].abs() > eps_piv) {
                        pivot(&mut tableau, &mut basis, i, j);
                    }
                }
            }
        }

        let mut c_full = vec![0.0; width];
        c_full[..n_std].copy_from_slice(&c_std);
        run_simplex(&mut tableau, &mut basis, &c_full, total, eps_piv)?;

        // read the vertex, then re-solve the basic system from original data
        let mut x_std = vec![0.0; width];
        for (i, &j) in basis.iter().enumerate() {
            x_std[j] = tableau[i][width];
        }
        if m > 0 {
            let cols: Vec<usize> = basis.clone();
            let ab: Vec<Vec<f64>> = (0..m)
                .map(|i| cols.iter().map(|&j| a0[i][j]).collect())
                .collect();
            if let Some(xb) = lu_solve(ab, b0.clone()) {
                if xb.iter().all(|&v| v >= -1e-7 * scale_b) {
                    x_std.iter_mut().for_each(|v| *v = 0.0);
                    for (idx, &j) in cols.iter().enumerate() {
                        x_std[j] = xb[idx];
                    }
                }
            }
        }

        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[i] = match maps[i] {
                VarMap::Split { pos, neg } => x_std[pos] - x_std[neg],
                VarMap::Shifted { col, offset, sign } => offset + sign * x_std[col],
            };
        }
        let value = self
            .objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum::<f64>();
        Ok(LpSolution { value, x })
    }
}

/// Bland's-rule simplex over the tableau; columns at or beyond `enter_limit`
/// are barred from entering (used to retire artificials).
fn run_simplex(
    tableau: &mut [Vec<f64>],
    basis: &mut [usize],
    costs: &[f64],
    enter_limit: usize,
    eps_piv: f64,
) -> Result<(), LpError> {
    let m = tableau.len();
    let width = costs.len();
    let rhs_col = width;
    let eps_cost = 1e-9 * (1.0 + costs.iter().fold(0.0f64, |a, c| a.max(c.abs())));

    // reduced costs for the current basis
    let mut red = costs.to_vec();
    for (i, &j) in basis.iter().enumerate() {
        let cb = costs[j];
        if cb != 0.0 {
            for k in 0..width {
                red[k] -= cb * tableau[i][k];
            }
        }
    }

    let max_iter = 1000 + 60 * (m + width);
    for _ in 0..max_iter {
        // Bland: smallest improving index
        let mut entering = None;
        for (j, &rc) in red.iter().enumerate().take(enter_limit) {
            if rc < -eps_cost {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(());
        };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tableau[i][e];
            if a > eps_piv {
                let ratio = tableau[i][rhs_col] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        let tol = 1e-12 * (1.0 + lr.abs());
                        if ratio < lr - tol || (ratio < lr + tol && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(LpError::Unbounded);
        };

        pivot(tableau, basis, r, e);
        let factor = red[e];
        if factor != 0.0 {
            for k in 0..width {
                red[k] -= factor * tableau[r][k];
            }
            red[e] = 0.0;
        }
    }
    Err(LpError::Stalled)
}

fn pivot(tableau: &mut [Vec<f64>], basis: &mut [usize], r: usize, e: usize) {
    let inv = 1.0 / tableau[r][e];
    for v in tableau[r].iter_mut() {
        *v *= inv;
    }
    tableau[r][e] = 1.0;
    for i in 0..tableau.len() {
        if i == r {
            continue;
        }
        let factor = tableau[i][e];
        if factor != 0.0 {
            let (head, tail) = tableau.split_at_mut(r.max(i));
            let (row_i, row_r) = if i < r {
                (&mut head[i], &tail[0])
            } else {
                (&mut tail[0], &head[r])
            };
            for (vi, vr) in row_i.iter_mut().zip(row_r.iter()) {
                *vi -= factor * vr;
            }
            row_i[e] = 0.0;
        }
    }
    basis[r] = e;
}

/// Partial-pivot LU solve of a small dense square system.
pub(crate) fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|i| (i, a[i][k].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if mag <= 1e-13 * scale {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(i);
                for (vi, vk) in bottom[0].iter_mut().zip(top[k].iter()).skip(k) {
                    *vi -= f * vk;
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_le() {
        // min -x - y  s.t.  x + y <= 1, x,y >= 0
        let mut lp = LpBuilder::new(2);
        lp.objective(vec![-1.0, -1.0]);
        lp.nonneg(0).nonneg(1);
        lp.row(vec![1.0, 1.0], Rel::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_variable_ge() {
        // min x  s.t.  x >= 3, x free
        let mut lp = LpBuilder::new(1);
        lp.objective(vec![1.0]);
        lp.row(vec![1.0], Rel::Ge, 3.0);
        let s = lp.solve().unwrap();
        assert!((s.value - 3.0).abs() < 1e-12);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn boxed_maximization() {
        // max 3 f1 + 4 f2  s.t.  f1 = 0,  -1 <= f <= 1
        let mut lp = LpBuilder::new(2);
        lp.objective(vec![-3.0, -4.0]);
        lp.bound(0, -1.0, 1.0).bound(1, -1.0, 1.0);
        lp.row(vec![1.0, 0.0], Rel::Eq, 0.0);
        let s = lp.solve().unwrap();
        assert!((s.value + 4.0).abs() < 1e-12);
        assert!(s.x[0].abs() < 1e-12);
        assert!((s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LpBuilder::new(1);
        lp.nonneg(0);
        lp.row(vec![1.0], Rel::Le, -1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LpBuilder::new(1);
        lp.objective(vec![-1.0]);
        lp.nonneg(0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn degenerate_terminates() {
        // several redundant constraints through the same vertex
        let mut lp = LpBuilder::new(2);
        lp.objective(vec![-1.0, -2.0]);
        lp.nonneg(0).nonneg(1);
        lp.row(vec![1.0, 1.0], Rel::Le, 1.0);
        lp.row(vec![2.0, 2.0], Rel::Le, 2.0);
        lp.row(vec![1.0, 0.0], Rel::Le, 1.0);
        lp.row(vec![0.0, 1.0], Rel::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.value + 2.0).abs() < 1e-12);
    }

    #[test]
    fn equality_with_split_variables() {
        // min |x - 2| encoded as p + q with x - p + q = 2, x free
        let mut lp = LpBuilder::new(3);
        lp.objective(vec![0.0, 1.0, 1.0]);
        lp.nonneg(1).nonneg(2);
        lp.row(vec![1.0, -1.0, 1.0], Rel::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!(s.value.abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lu_solve_small() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = lu_solve(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }
}
