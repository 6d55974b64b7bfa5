//! Exact best-approximation distances, norming functionals and two-sided
//! certificates.
//!
//! The primal side minimizes `||x - a||` over the subspace; the dual side
//! maximizes `f(x)` over functionals that vanish on the subspace and lie in
//! the dual unit ball. In finite dimension the two optima coincide, and the
//! pair (feasible primal point, feasible dual functional) brackets the
//! distance in a way that is checkable by direct evaluation, independent of
//! any solver state. Euclidean instances use closed forms; the polyhedral
//! norms go through the simplex core.

use crate::error::{Error, Result};
use crate::simplex::{lu_solve, LpBuilder, LpError, Rel};
use crate::space::{NormKind, Point, Subspace};

/// Convergence tolerance of the inner solvers.
pub const SOLVER_TOL: f64 = 1e-10;

/// Default certification tolerance; leaves headroom for error accumulation
/// across construction levels at the 1e-6 acceptance level.
pub const CERT_TOL: f64 = 1e-8;

/// Points closer to a subspace than this (relative) count as inside it.
const INSIDE_TOL: f64 = 1e-9;

/// The ambient norm.
pub fn norm_of(p: &Point, k: NormKind) -> f64 {
    match k {
        NormKind::L1 => p.coords().iter().map(|c| c.abs()).sum(),
        NormKind::L2 => p.coords().iter().map(|c| c * c).sum::<f64>().sqrt(),
        NormKind::Linf => p.coords().iter().fold(0.0, |m, c| m.max(c.abs())),
    }
}

/// Norm of a dual vector against the primal norm `k`.
pub fn dual_norm_of(coeffs: &[f64], k: NormKind) -> f64 {
    match k.dual() {
        NormKind::L1 => coeffs.iter().map(|c| c.abs()).sum(),
        NormKind::L2 => coeffs.iter().map(|c| c * c).sum::<f64>().sqrt(),
        NormKind::Linf => coeffs.iter().fold(0.0, |m, c| m.max(c.abs())),
    }
}

/// A dual vector acting on the primal space by the dot product.
#[derive(Clone, Debug)]
pub struct Functional {
    pub coeffs: Vec<f64>,
    pub norm_kind: NormKind,
    pub dual_norm_value: f64,
}

impl Functional {
    pub fn new(coeffs: Vec<f64>, norm_kind: NormKind) -> Functional {
        let dual_norm_value = dual_norm_of(&coeffs, norm_kind);
        Functional {
            coeffs,
            norm_kind,
            dual_norm_value,
        }
    }

    pub fn evaluate(&self, p: &Point) -> f64 {
        self.coeffs
            .iter()
            .zip(p.coords())
            .map(|(f, x)| f * x)
            .sum()
    }

    /// Largest action on the canonical generators of `y`; zero means the
    /// functional annihilates the subspace.
    pub fn annihilation_residual(&self, y: &Subspace) -> f64 {
        y.canonical_rows()
            .iter()
            .map(|row| {
                self.coeffs
                    .iter()
                    .zip(row)
                    .map(|(f, r)| f * r)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Two-sided distance witness: `upper` is the norm of `x` minus a feasible
/// subspace point, `lower` the value of a feasible dual functional at `x`.
#[derive(Clone, Copy, Debug)]
pub struct DistanceCertificate {
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
}

fn check_dims(x: &Point, y: &Subspace) -> Result<()> {
    if x.dim() != y.ambient_dim() {
        return Err(Error::DimMismatch {
            expected: y.ambient_dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// Euclidean projection of `x` onto `y`.
pub(crate) fn project_l2(x: &Point, y: &Subspace) -> Point {
    let mut proj = vec![0.0; x.dim()];
    for q in y.orthonormal_rows() {
        let c: f64 = q.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        for (p, qi) in proj.iter_mut().zip(q) {
            *p += c * qi;
        }
    }
    Point::from(proj)
}

fn solve_failure(context: &str, e: LpError) -> Error {
    Error::SolverFailure {
        context: format!("{context}: {e}"),
    }
}

/// Nearest point of `y` to `x` in the norm `k`, with the attained distance.
pub fn distance(x: &Point, y: &Subspace, k: NormKind) -> Result<(f64, Point)> {
    check_dims(x, y)?;
    let dim = x.dim();
    if y.rank() == 0 {
        return Ok((norm_of(x, k), Point::zero(dim)));
    }
    let gens = y.orthonormal_rows();
    let r = gens.len();
    let combine = |c: &[f64]| {
        let mut a = vec![0.0; dim];
        for (ci, g) in c.iter().zip(gens) {
            for (ai, gi) in a.iter_mut().zip(g) {
                *ai += ci * gi;
            }
        }
        Point::from(a)
    };
    match k {
        NormKind::L2 => {
            let proj = project_l2(x, y);
            let rho = norm_of(&x.sub(&proj), NormKind::L2);
            Ok((rho, proj))
        }
        NormKind::L1 => {
            // variables: c (free), p, q >= 0 with  G^T c + p - q = x
            let n = r + 2 * dim;
            let mut lp = LpBuilder::new(n);
            let mut obj = vec![0.0; n];
            for j in 0..2 * dim {
                obj[r + j] = 1.0;
                lp.nonneg(r + j);
            }
            lp.objective(obj);
            for i in 0..dim {
                let mut row = vec![0.0; n];
                for (j, g) in gens.iter().enumerate() {
                    row[j] = g[i];
                }
                row[r + i] = 1.0;
                row[r + dim + i] = -1.0;
                lp.row(row, Rel::Eq, x.coords()[i]);
            }
            let sol = lp.solve().map_err(|e| solve_failure("L1 distance", e))?;
            let a = combine(&sol.x[..r]);
            let rho = norm_of(&x.sub(&a), NormKind::L1);
            Ok((rho, a))
        }
        NormKind::Linf => {
            // variables: c (free), t >= 0 with  -t <= x_i - (G^T c)_i <= t
            let n = r + 1;
            let mut lp = LpBuilder::new(n);
            let mut obj = vec![0.0; n];
            obj[r] = 1.0;
            lp.objective(obj);
            lp.nonneg(r);
            for i in 0..dim {
                let mut up = vec![0.0; n];
                let mut lo = vec![0.0; n];
                for (j, g) in gens.iter().enumerate() {
                    up[j] = g[i];
                    lo[j] = g[i];
                }
                up[r] = 1.0; // (G^T c)_i + t >= x_i
                lo[r] = -1.0; // (G^T c)_i - t <= x_i
                lp.row(up, Rel::Ge, x.coords()[i]);
                lp.row(lo, Rel::Le, x.coords()[i]);
            }
            let sol = lp.solve().map_err(|e| solve_failure("Linf distance", e))?;
            let a = combine(&sol.x[..r]);
            let rho = norm_of(&x.sub(&a), NormKind::Linf);
            Ok((rho, a))
        }
    }
}

/// A functional vanishing on `y`, of dual norm at most one, whose value at
/// `x` attains the distance.
pub fn norming_functional(x: &Point, y: &Subspace, k: NormKind) -> Result<Functional> {
    check_dims(x, y)?;
    let dim = x.dim();
    let (rho, _) = distance(x, y, k)?;
    let scale = 1.0 + norm_of(x, k);
    if rho <= INSIDE_TOL * scale {
        return Err(Error::PointInsideSubspace);
    }
    let coeffs = match k {
        NormKind::L2 => {
            let res = x.sub(&project_l2(x, y));
            let n = norm_of(&res, NormKind::L2);
            res.coords().iter().map(|c| c / n).collect::<Vec<f64>>()
        }
        NormKind::L1 => {
            // maximize f.x over the dual box |f_i| <= 1 with f|Y = 0
            let mut lp = LpBuilder::new(dim);
            lp.objective(x.coords().iter().map(|c| -c).collect());
            for i in 0..dim {
                lp.bound(i, -1.0, 1.0);
            }
            for g in y.orthonormal_rows() {
                lp.row(g.clone(), Rel::Eq, 0.0);
            }
            lp.solve()
                .map_err(|e| solve_failure("L1 norming functional", e))?
                .x
        }
        NormKind::Linf => {
            // maximize f.x over the cross-polytope sum |f_i| <= 1, f|Y = 0
            let n = 2 * dim;
            let mut lp = LpBuilder::new(n);
            let mut obj = vec![0.0; n];
            for i in 0..dim {
                obj[i] = -x.coords()[i];
                obj[dim + i] = x.coords()[i];
                lp.nonneg(i).nonneg(dim + i);
            }
            lp.objective(obj);
            for g in y.orthonormal_rows() {
                let mut row = vec![0.0; n];
                for i in 0..dim {
                    row[i] = g[i];
                    row[dim + i] = -g[i];
                }
                lp.row(row, Rel::Eq, 0.0);
            }
            let mut row = vec![1.0; n];
            row.truncate(n);
            lp.row(row, Rel::Le, 1.0);
            let sol = lp
                .solve()
                .map_err(|e| solve_failure("Linf norming functional", e))?;
            (0..dim).map(|i| sol.x[i] - sol.x[dim + i]).collect()
        }
    };
    let mut f = Functional::new(coeffs, k);
    if f.dual_norm_value > 1.0 {
        let inv = 1.0 / f.dual_norm_value;
        for c in f.coeffs.iter_mut() {
            *c *= inv;
        }
        f.dual_norm_value = dual_norm_of(&f.coeffs, k);
    }
    // standing check: the dual optimum must reproduce the primal distance
    let attained = f.evaluate(x);
    if (attained - rho).abs() > 1e-6 * scale {
        return Err(Error::SolverFailure {
            context: format!(
                "duality mismatch: functional attains {attained}, distance is {rho}"
            ),
        });
    }
    Ok(f)
}

/// Recomputes a fresh two-sided certificate for a claimed distance.
///
/// The verdict is `true` when the certificate pins the claim within `tol` on
/// both sides. A failed certification is a verdict, not an error; errors are
/// reserved for solver breakdowns.
pub fn certify_distance(
    x: &Point,
    y: &Subspace,
    k: NormKind,
    claimed: f64,
    tol: f64,
) -> Result<(DistanceCertificate, bool)> {
    check_dims(x, y)?;
    let (rho, nearest) = distance(x, y, k)?;
    let upper = norm_of(&x.sub(&nearest), k);
    debug_assert!((rho - upper).abs() <= 1e-12 * (1.0 + upper));
    let lower = if upper <= tol.max(1e-12) {
        // the zero functional certifies any lower bound of zero
        0.0
    } else {
        let f = norming_functional(x, y, k)?;
        let viol = f.annihilation_residual(y);
        if viol > 1e-9 {
            return Err(Error::SolverFailure {
                context: format!("norming functional leaks onto the subspace: {viol}"),
            });
        }
        f.evaluate(x)
    };
    let cert = DistanceCertificate {
        upper,
        lower,
        gap: upper - lower,
    };
    let pass = lower >= claimed - tol && upper <= claimed + tol;
    Ok((cert, pass))
}

/// Least dual norm among functionals satisfying `rows . f = rhs`, together
/// with the minimizer. The reported value is certified against the dual
/// maximization `max rhs.y` over `||rows^T y||_k <= 1`.
pub fn min_dual_norm_interpolation(
    rows: &[Vec<f64>],
    rhs: &[f64],
    k: NormKind,
    dim: usize,
) -> Result<(f64, Vec<f64>)> {
    let m = rows.len();
    let (achieved, f) = match k {
        NormKind::L2 => {
            // least-norm solution of an underdetermined system
            let gram: Vec<Vec<f64>> = rows
                .iter()
                .map(|ri| {
                    rows.iter()
                        .map(|rj| ri.iter().zip(rj).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect();
            let y = lu_solve(gram, rhs.to_vec()).ok_or_else(|| Error::SolverFailure {
                context: "degenerate interpolation system".into(),
            })?;
            let mut f = vec![0.0; dim];
            for (yi, row) in y.iter().zip(rows) {
                for (fi, ri) in f.iter_mut().zip(row) {
                    *fi += yi * ri;
                }
            }
            (dual_norm_of(&f, NormKind::L2), f)
        }
        NormKind::L1 => {
            // dual norm is L-infinity: min t with |f_i| <= t
            let n = dim + 1;
            let mut lp = LpBuilder::new(n);
            let mut obj = vec![0.0; n];
            obj[dim] = 1.0;
            lp.objective(obj);
            lp.nonneg(dim);
            for (row, &b) in rows.iter().zip(rhs) {
                let mut r = row.clone();
                r.push(0.0);
                lp.row(r, Rel::Eq, b);
            }
            for i in 0..dim {
                let mut up = vec![0.0; n];
                up[i] = 1.0;
                up[dim] = -1.0;
                lp.row(up, Rel::Le, 0.0);
                let mut lo = vec![0.0; n];
                lo[i] = -1.0;
                lo[dim] = -1.0;
                lp.row(lo, Rel::Le, 0.0);
            }
            let sol = lp
                .solve()
                .map_err(|e| solve_failure("min-max interpolation", e))?;
            let f = sol.x[..dim].to_vec();
            (dual_norm_of(&f, NormKind::L1), f)
        }
        NormKind::Linf => {
            // dual norm is L1: split f and minimize the sum
            let n = 2 * dim;
            let mut lp = LpBuilder::new(n);
            lp.objective(vec![1.0; n]);
            for i in 0..n {
                lp.nonneg(i);
            }
            for (row, &b) in rows.iter().zip(rhs) {
                let mut r = vec![0.0; n];
                for i in 0..dim {
                    r[i] = row[i];
                    r[dim + i] = -row[i];
                }
                lp.row(r, Rel::Eq, b);
            }
            let sol = lp
                .solve()
                .map_err(|e| solve_failure("min-sum interpolation", e))?;
            let f: Vec<f64> = (0..dim).map(|i| sol.x[i] - sol.x[dim + i]).collect();
            (dual_norm_of(&f, NormKind::Linf), f)
        }
    };

    // residuals of the interpolation constraints
    for (row, &b) in rows.iter().zip(rhs) {
        let v: f64 = row.iter().zip(&f).map(|(a, b)| a * b).sum();
        if (v - b).abs() > 1e-8 * (1.0 + b.abs()) {
            return Err(Error::SolverFailure {
                context: format!("interpolation residual {} at rhs {}", (v - b).abs(), b),
            });
        }
    }

    // independent dual route: max rhs.y subject to ||rows^T y||_k <= 1
    let dual_value = match k {
        NormKind::L2 => {
            let gram: Vec<Vec<f64>> = rows
                .iter()
                .map(|ri| {
                    rows.iter()
                        .map(|rj| ri.iter().zip(rj).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect();
            let y = lu_solve(gram, rhs.to_vec()).ok_or_else(|| Error::SolverFailure {
                context: "degenerate interpolation system".into(),
            })?;
            let quad: f64 = y.iter().zip(rhs).map(|(a, b)| a * b).sum();
            quad.max(0.0).sqrt()
        }
        NormKind::L1 => {
            // ||rows^T y||_1 <= 1 via envelopes w_i
            let n = m + dim;
            let mut lp = LpBuilder::new(n);
            let mut obj = vec![0.0; n];
            for (j, &b) in rhs.iter().enumerate() {
                obj[j] = -b;
            }
            lp.objective(obj);
            for i in 0..dim {
                lp.nonneg(m + i);
                let mut up = vec![0.0; n];
                let mut lo = vec![0.0; n];
                for j in 0..m {
                    up[j] = rows[j][i];
                    lo[j] = -rows[j][i];
                }
                up[m + i] = -1.0;
                lo[m + i] = -1.0;
                lp.row(up, Rel::Le, 0.0);
                lp.row(lo, Rel::Le, 0.0);
            }
            let mut cap = vec![0.0; n];
            for i in 0..dim {
                cap[m + i] = 1.0;
            }
            lp.row(cap, Rel::Le, 1.0);
            let sol = lp
                .solve()
                .map_err(|e| solve_failure("interpolation dual (L1)", e))?;
            -sol.value
        }
        NormKind::Linf => {
            // -1 <= (rows^T y)_i <= 1
            let mut lp = LpBuilder::new(m);
            lp.objective(rhs.iter().map(|b| -b).collect());
            for i in 0..dim {
                let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
                lp.row(col.clone(), Rel::Le, 1.0);
                lp.row(col, Rel::Ge, -1.0);
            }
            let sol = lp
                .solve()
                .map_err(|e| solve_failure("interpolation dual (Linf)", e))?;
            -sol.value
        }
    };
    if (dual_value - achieved).abs() > 1e-7 * (1.0 + achieved) {
        return Err(Error::SolverFailure {
            context: format!(
                "interpolation duality gap: primal {achieved}, dual {dual_value}"
            ),
        });
    }
    Ok((achieved, f))
}
