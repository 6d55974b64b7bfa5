//! Ambient space model: points, norms, subspaces, chains and deviation
//! sequences.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Subspaces precompute a row-reduced canonical form (used for
//! membership and nesting tests) and an orthonormal spanning set (used by the
//! Euclidean solver and as a well-conditioned generating set for the
//! polyhedral ones).

use crate::error::{Error, Result};
use std::fmt;

/// Pivot tolerance for row reduction and rank decisions.
pub const PIVOT_TOL: f64 = 1e-10;

/// Default residual tolerance for membership tests.
pub const MEMBER_TOL: f64 = 1e-8;

/// Tolerance for the tail-condition comparison `d_n >= tau_n`.
const TAIL_TOL: f64 = 1e-12;

/// The three supported ambient norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    /// The norm of the dual space: L1 <-> L∞, L2 self-dual.
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::Linf,
            NormKind::L2 => NormKind::L2,
            NormKind::Linf => NormKind::L1,
        }
    }

    pub fn all() -> [NormKind; 3] {
        [NormKind::L1, NormKind::L2, NormKind::Linf]
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::L1 => write!(f, "L1"),
            NormKind::L2 => write!(f, "L2"),
            NormKind::Linf => write!(f, "LINF"),
        }
    }
}

/// A point of the ambient coordinate space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "point coordinates".into(),
            });
        }
        Ok(Point { coords })
    }

    pub fn zero(dim: usize) -> Point {
        Point {
            coords: vec![0.0; dim],
        }
    }

    pub fn standard_basis(dim: usize, i: usize) -> Point {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn scale(&self, a: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|c| a * c).collect(),
        }
    }

    /// self + a * other
    pub fn add_scaled(&self, a: f64, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Point) -> Point {
        self.add_scaled(-1.0, other)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(x, y)| x * y)
            .sum()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Point {
        Point { coords }
    }
}

/// Row-reduce `rows` in place to reduced echelon form, dropping rows whose
/// pivots fall below `tol`. Returns the reduced rows in pivot-column order.
fn row_reduce(mut rows: Vec<Vec<f64>>, width: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    let mut col = 0;
    while col < width && !rows.is_empty() {
        // largest remaining entry in this column
        let (best, mag) = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r[col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if mag <= tol {
            col += 1;
            continue;
        }
        let mut pivot_row = rows.swap_remove(best);
        let inv = 1.0 / pivot_row[col];
        for v in pivot_row.iter_mut() {
            *v *= inv;
        }
        pivot_row[col] = 1.0;
        for r in rows.iter_mut() {
            let factor = r[col];
            if factor != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                r[col] = 0.0;
            }
        }
        for r in reduced.iter_mut() {
            let factor = r[col];
            if factor != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                r[col] = 0.0;
            }
        }
        reduced.push(pivot_row);
        col += 1;
    }
    reduced
}

/// Modified Gram-Schmidt with a second re-orthogonalization pass.
fn orthonormalize(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let mut v = row.clone();
        for _ in 0..2 {
            for q in &ortho {
                let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tol {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            ortho.push(v);
        }
    }
    ortho
}

/// A linear subspace given by a spanning basis.
///
/// The empty basis is the zero subspace, which the constructions use as the
/// innermost chain member without special casing.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Vec<Point>,
    canon: Vec<Vec<f64>>,
    ortho: Vec<Vec<f64>>,
    ambient: usize,
}

impl Subspace {
    /// Builds a subspace from linearly independent basis vectors.
    pub fn new(basis: Vec<Point>, ambient: usize) -> Result<Subspace> {
        for (i, b) in basis.iter().enumerate() {
            if b.dim() != ambient {
                return Err(Error::DimMismatch {
                    expected: ambient,
                    got: b.dim(),
                });
            }
            if b.coords().iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite {
                    what: format!("basis vector {i}"),
                });
            }
        }
        let rows: Vec<Vec<f64>> = basis.iter().map(|p| p.coords().to_vec()).collect();
        let canon = row_reduce(rows, ambient, PIVOT_TOL);
        if canon.len() != basis.len() {
            // rank deficit: find the first vector dependent on its predecessors
            for i in 1..=basis.len() {
                let head: Vec<Vec<f64>> =
                    basis[..i].iter().map(|p| p.coords().to_vec()).collect();
                if row_reduce(head, ambient, PIVOT_TOL).len() != i {
                    return Err(Error::DependentBasis { index: i - 1 });
                }
            }
            return Err(Error::DependentBasis { index: 0 });
        }
        let ortho = orthonormalize(&canon, PIVOT_TOL);
        debug_assert_eq!(ortho.len(), canon.len());
        Ok(Subspace {
            basis,
            canon,
            ortho,
            ambient,
        })
    }

    /// The zero subspace `{0}`.
    pub fn zero(ambient: usize) -> Subspace {
        Subspace {
            basis: Vec::new(),
            canon: Vec::new(),
            ortho: Vec::new(),
            ambient,
        }
    }

    /// The whole ambient space.
    pub fn full(ambient: usize) -> Subspace {
        Subspace::coordinate(ambient, ambient)
    }

    /// Span of the first `m` standard basis vectors.
    pub fn coordinate(m: usize, ambient: usize) -> Subspace {
        let basis: Vec<Point> = (0..m).map(|i| Point::standard_basis(ambient, i)).collect();
        let canon: Vec<Vec<f64>> = basis.iter().map(|p| p.coords().to_vec()).collect();
        Subspace {
            ortho: canon.clone(),
            canon,
            basis,
            ambient,
        }
    }

    pub fn rank(&self) -> usize {
        self.canon.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn is_zero(&self) -> bool {
        self.canon.is_empty()
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    /// Row-reduced canonical spanning set.
    pub fn canonical_rows(&self) -> &[Vec<f64>] {
        &self.canon
    }

    /// Orthonormal spanning set for the same span.
    pub fn orthonormal_rows(&self) -> &[Vec<f64>] {
        &self.ortho
    }

    /// Residual of `p` after elimination against the canonical rows.
    pub(crate) fn eliminate(&self, p: &Point) -> Vec<f64> {
        let mut v = p.coords().to_vec();
        for row in &self.canon {
            let pivot_col = row
                .iter()
                .position(|&x| x == 1.0)
                .expect("canonical row has a unit pivot");
            let factor = v[pivot_col];
            if factor != 0.0 {
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi -= factor * ri;
                }
                v[pivot_col] = 0.0;
            }
        }
        v
    }

    /// Membership test: the elimination residual must fall below `tol`.
    pub fn member(&self, p: &Point, tol: f64) -> Result<bool> {
        if p.dim() != self.ambient {
            return Err(Error::DimMismatch {
                expected: self.ambient,
                got: p.dim(),
            });
        }
        let res = self.eliminate(p);
        Ok(res.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol)
    }

    /// True when every canonical generator of `other` lies in `self`.
    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        other.canon.iter().all(|row| {
            self.member(&Point::from(row.clone()), tol)
                .unwrap_or(false)
        })
    }

    /// First canonical generator of `self` outside `smaller`, if any.
    pub fn first_generator_outside(&self, smaller: &Subspace, tol: f64) -> Option<Point> {
        for row in &self.canon {
            let p = Point::from(row.clone());
            if let Ok(false) = smaller.member(&p, tol) {
                return Some(p);
            }
        }
        None
    }

    /// Extends the span by one independent vector.
    pub fn extended(&self, v: &Point) -> Result<Subspace> {
        let mut basis = self.basis.clone();
        basis.push(v.clone());
        Subspace::new(basis, self.ambient)
    }
}

/// Why a chain failed validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainViolation {
    AmbientMismatch,
    RankGrowth,
    Nesting,
}

impl fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainViolation::AmbientMismatch => write!(f, "ambient mismatch"),
            ChainViolation::RankGrowth => write!(f, "rank growth"),
            ChainViolation::Nesting => write!(f, "nesting"),
        }
    }
}

/// Verdict of [`Chain::validate`], naming the first offending pair.
#[derive(Clone, Debug)]
pub struct ChainDiagnostics {
    pub pass: bool,
    /// `(lower index, upper index, violation)`, 1-based, for the first failure.
    pub first_failure: Option<(usize, usize, ChainViolation)>,
}

impl fmt::Display for ChainDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_failure {
            None => write!(f, "chain valid"),
            Some((lo, hi, kind)) => {
                write!(f, "chain invalid at pair ({lo}, {hi}): {kind}")
            }
        }
    }
}

/// A strictly nested sequence of subspaces of one ambient space.
#[derive(Clone, Debug)]
pub struct Chain {
    subspaces: Vec<Subspace>,
    ambient: usize,
}

impl Chain {
    pub fn new(subspaces: Vec<Subspace>, ambient: usize) -> Chain {
        Chain { subspaces, ambient }
    }

    /// Canonical chain whose n-th member is spanned by the first `dims[n]`
    /// standard basis vectors.
    pub fn coordinate(dims: &[usize], ambient: usize) -> Result<Chain> {
        for i in 1..dims.len() {
            if dims[i] <= dims[i - 1] {
                return Err(Error::NonIncreasingDims { index: i });
            }
        }
        if let Some(&last) = dims.last() {
            if last >= ambient {
                return Err(Error::DimExceedsAmbient {
                    dim: last,
                    ambient,
                });
            }
        }
        let subspaces = dims
            .iter()
            .map(|&m| Subspace::coordinate(m, ambient))
            .collect();
        Ok(Chain { subspaces, ambient })
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    /// 1-based access, matching the chain indexing used throughout.
    pub fn member_at(&self, n: usize) -> &Subspace {
        &self.subspaces[n - 1]
    }

    /// Checks strict rank growth and span nesting pairwise.
    pub fn validate(&self) -> ChainDiagnostics {
        for (i, s) in self.subspaces.iter().enumerate() {
            if s.ambient_dim() != self.ambient {
                return ChainDiagnostics {
                    pass: false,
                    first_failure: Some((i + 1, i + 1, ChainViolation::AmbientMismatch)),
                };
            }
        }
        for i in 1..self.subspaces.len() {
            let (lo, hi) = (&self.subspaces[i - 1], &self.subspaces[i]);
            if lo.rank() >= hi.rank() {
                return ChainDiagnostics {
                    pass: false,
                    first_failure: Some((i, i + 1, ChainViolation::RankGrowth)),
                };
            }
            if !hi.contains(lo, MEMBER_TOL) {
                return ChainDiagnostics {
                    pass: false,
                    first_failure: Some((i, i + 1, ChainViolation::Nesting)),
                };
            }
        }
        ChainDiagnostics {
            pass: true,
            first_failure: None,
        }
    }

    /// The first `n` subspaces over the same ambient space.
    pub fn truncate(&self, n: usize) -> Chain {
        Chain {
            subspaces: self.subspaces[..n].to_vec(),
            ambient: self.ambient,
        }
    }
}

/// Target deviation values together with analytic tail sums.
///
/// `tail(j)` is the sum of every value after index `j` of the *intended
/// infinite* sequence, carried as an analytic descriptor rather than a
/// truncated sum: the exact construction consumes the equality case
/// `d_n = tail(n)`, which truncation would silently destroy.
#[derive(Clone, Debug)]
pub struct DeviationSequence {
    values: Vec<f64>,
    tails: Vec<f64>,
}

impl DeviationSequence {
    fn validate(values: &[f64]) -> Result<()> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("deviation value {}", i + 1),
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeValue { index: i + 1 });
            }
            if i > 0 && v > values[i - 1] {
                return Err(Error::NonIncreasingValues { index: i + 1 });
            }
        }
        Ok(())
    }

    /// Explicit values with a scalar analytic tail beyond the last index.
    pub fn explicit(values: Vec<f64>, tail_value: f64) -> Result<DeviationSequence> {
        Self::validate(&values)?;
        if !(tail_value.is_finite() && tail_value >= 0.0) {
            return Err(Error::NonFinite {
                what: "tail value".into(),
            });
        }
        if tail_value > 0.0 && values.last().copied() == Some(0.0) {
            // a positive tail after a zero value cannot be non-increasing
            return Err(Error::NonIncreasingValues {
                index: values.len(),
            });
        }
        let mut tails = vec![0.0; values.len()];
        if let Some(last) = tails.last_mut() {
            *last = tail_value;
        }
        for j in (0..values.len().saturating_sub(1)).rev() {
            tails[j] = values[j + 1] + tails[j + 1];
        }
        Ok(DeviationSequence { values, tails })
    }

    /// d_n = scale * ratio^n with the closed-form geometric tail.
    pub fn geometric(scale: f64, ratio: f64, len: usize) -> Result<DeviationSequence> {
        if !(scale.is_finite() && scale > 0.0 && ratio > 0.0 && ratio < 1.0) {
            return Err(Error::NonFinite {
                what: "geometric parameters".into(),
            });
        }
        let values: Vec<f64> = (1..=len).map(|n| scale * ratio.powi(n as i32)).collect();
        let tails: Vec<f64> = (1..=len)
            .map(|j| scale * ratio.powi(j as i32 + 1) / (1.0 - ratio))
            .collect();
        Ok(DeviationSequence { values, tails })
    }

    /// d_n = n^{-p}; the tail beyond the last index comes from an
    /// Euler-Maclaurin estimate and the interior tails from the recurrence.
    pub fn power(p: f64, len: usize) -> Result<DeviationSequence> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::NonFinite {
                what: "power exponent".into(),
            });
        }
        let values: Vec<f64> = (1..=len).map(|n| (n as f64).powf(-p)).collect();
        let mut tails = vec![0.0; len];
        if len > 0 {
            tails[len - 1] = power_tail(p, len);
            for j in (0..len - 1).rev() {
                tails[j] = values[j + 1] + tails[j + 1];
            }
        }
        Ok(DeviationSequence { values, tails })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based value access.
    pub fn value_at(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    /// tau_j, the analytic sum of all values after index j (1-based).
    pub fn tail(&self, j: usize) -> f64 {
        self.tails[j - 1]
    }

    /// Smallest start index n0 such that `d_n >= tau_n` for all n >= n0.
    pub fn tail_condition_start(&self) -> Result<usize> {
        let scale = self.values.first().copied().unwrap_or(0.0).max(1.0);
        let mut n0 = None;
        for n in (1..=self.len()).rev() {
            if self.value_at(n) + TAIL_TOL * scale >= self.tail(n) {
                n0 = Some(n);
            } else {
                break;
            }
        }
        n0.ok_or(Error::NoAdmissibleStart)
    }

    /// The first `n` values; tails keep their absolute meaning, so the
    /// truncated sequence continues the same infinite intent.
    pub fn truncate(&self, n: usize) -> DeviationSequence {
        DeviationSequence {
            values: self.values[..n].to_vec(),
            tails: self.tails[..n].to_vec(),
        }
    }
}

/// Euler-Maclaurin estimate of `sum_{k > n} k^{-p}`.
fn power_tail(p: f64, n: usize) -> f64 {
    let mut sum = 0.0;
    let explicit = 2000usize;
    for k in (n + 1)..=(n + explicit) {
        sum += (k as f64).powf(-p);
    }
    let m = (n + explicit + 1) as f64;
    // integral term plus the first correction terms of the expansion
    sum += m.powf(1.0 - p) / (p - 1.0) + 0.5 * m.powf(-p) + p * m.powf(-p - 1.0) / 12.0
        - p * (p + 1.0) * (p + 2.0) * m.powf(-p - 3.0) / 720.0;
    sum
}
