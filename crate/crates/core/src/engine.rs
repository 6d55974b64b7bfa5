//! The exact construction: given a validated chain and a deviation sequence
//! dominating its analytic tail sums from some index on, produce an element
//! whose distance to every chain member equals the prescribed value.
//!
//! Per level `j` the engine builds an element `q_j` of `Y_{j+1}` with
//! `ρ(q_j, Y_j) = 1` and norm `1 + τ/(2^j d_j)`, plus a norming functional
//! vanishing on `Y_j`. The coefficients are then fixed from the top level
//! downward: the running partial sum has norm at most `Σ_{i>j} d_i + τ`,
//! which the tail condition caps by `d_j` (lower bracket end), while the
//! functional pushes the sign-directed endpoint `λ = ±d_j` to a distance of
//! at least `d_j` (upper end). One bisection per level lands the distance on
//! `d_j` exactly, and adding later multiples of `q_i ∈ Y_{i+1} ⊆ Y_{j+1}`
//! cannot move the levels already fixed.
//!
//! Reductions: a head segment before the admissible start index is fixed
//! afterwards through the finite-chain construction anchored at the tail
//! element (which forces the anchor coefficient to one); a zero tail of the
//! values restricts the whole computation to the ambient chain member where
//! the zeros begin; a zero innermost subspace bumps the start index to two.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::finite::{bisect_to_target, construct_finite};
use crate::oracle::{
    certify_distance, distance, norming_functional, norm_of, Functional, CERT_TOL,
};
use crate::pair::{find_pivot, two_level_from_generators, LevelElement};
use crate::space::{Chain, DeviationSequence, NormKind, Point, Subspace, MEMBER_TOL};

/// Relative band used when certifying final distances.
pub const ACCEPT_REL: f64 = 1e-6;

/// Absolute floor of the certification band (covers zero targets).
pub const ACCEPT_ABS: f64 = 1e-9;

/// One engine level: element, its prescribed norm and its norming
/// functional.
#[derive(Clone, Debug)]
pub struct LevelData {
    /// 1-based chain index the level annihilates.
    pub j: usize,
    pub q: Point,
    pub u: f64,
    pub f: Functional,
}

/// Final state of the backward sweep.
#[derive(Clone, Debug)]
pub struct SweepState {
    /// Innermost level fixed (always 1 on success).
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub partial: Point,
}

/// Outcome of the case analysis before the engine runs.
#[derive(Clone, Debug)]
pub struct ReductionPlan {
    /// Number of leading strictly positive values.
    pub positive_len: usize,
    /// 1-based index where the values become zero, if they do.
    pub zero_from: Option<usize>,
    /// First index covered by the engine (after the head and zero-subspace
    /// adjustments).
    pub engine_start: usize,
    /// False only when the whole positive range is delegated to the finite
    /// construction.
    pub engine_used: bool,
    /// Whether indices `1..engine_start` are fixed afterwards through the
    /// finite construction.
    pub head_fix: bool,
    /// Working ambient: the chain member where the zeros begin, or the full
    /// space.
    pub ambient: Subspace,
}

impl std::fmt::Display for ReductionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.positive_len == 0 {
            return write!(f, "all targets zero; trivial element");
        }
        if !self.engine_used {
            return write!(
                f,
                "finite construction over indices 1..={}",
                self.positive_len
            );
        }
        write!(
            f,
            "engine over indices {}..={}",
            self.engine_start, self.positive_len
        )?;
        if self.head_fix {
            write!(f, ", head fix over 1..={}", self.engine_start)?;
        }
        if let Some(m) = self.zero_from {
            write!(f, ", restricted to chain member {m}")?;
        }
        Ok(())
    }
}

/// Certified distance of the final element at one chain index.
#[derive(Clone, Copy, Debug)]
pub struct CertifiedRow {
    pub n: usize,
    pub target: f64,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Case analysis: head segment, zero-subspace shift and zero-tail split.
pub fn preprocess(chain: &Chain, seq: &DeviationSequence) -> Result<ReductionPlan> {
    let diag = chain.validate();
    if !diag.pass {
        return Err(Error::InvalidChain {
            reason: diag.to_string(),
        });
    }
    let n = chain.len();
    if n == 0 {
        return Err(Error::InvalidChain {
            reason: "empty chain".into(),
        });
    }
    if seq.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: seq.len(),
        });
    }
    let zero_from = (1..=n).find(|&i| seq.value_at(i) == 0.0);
    let positive_len = zero_from.map(|m| m - 1).unwrap_or(n);

    let ambient = match zero_from {
        Some(m) => chain.member_at(m).clone(),
        None => {
            if chain.member_at(n).rank() >= chain.ambient_dim() {
                return Err(Error::InvalidChain {
                    reason: "top subspace fills the ambient space; no room above it".into(),
                });
            }
            Subspace::full(chain.ambient_dim())
        }
    };
    if positive_len == 0 {
        return Ok(ReductionPlan {
            positive_len,
            zero_from,
            engine_start: 1,
            engine_used: false,
            head_fix: false,
            ambient,
        });
    }

    let n0 = seq.tail_condition_start()?;
    debug_assert!(n0 <= positive_len);
    let engine_start = if chain.member_at(1).rank() == 0 {
        n0.max(2)
    } else {
        n0
    };
    let engine_used = engine_start <= positive_len;
    let head_fix = engine_used && engine_start > 1;

    // the finite construction behind the reductions needs strict decrease
    let strict_up_to = if engine_used {
        if head_fix {
            engine_start
        } else {
            0
        }
    } else {
        positive_len
    };
    for i in 2..=strict_up_to {
        if seq.value_at(i) >= seq.value_at(i - 1) {
            return Err(Error::HeadTies { index: i });
        }
    }

    Ok(ReductionPlan {
        positive_len,
        zero_from,
        engine_start,
        engine_used,
        head_fix,
        ambient,
    })
}

/// Level elements for `subspaces` (a contiguous chain slice), each living in
/// the next slice member (or `top_ambient` for the last).
fn build_levels(
    subspaces: &[Subspace],
    top_ambient: &Subspace,
    dvals: &[f64],
    tau_end: f64,
    start_index: usize,
    k: NormKind,
) -> Result<Vec<LevelData>> {
    let count = subspaces.len();
    let dim = top_ambient.ambient_dim();
    let zero_sub = Subspace::zero(dim);
    let mut levels = Vec::with_capacity(count);
    for local in 1..=count {
        let d = dvals[local - 1];
        if d <= 0.0 {
            return Err(Error::PreconditionViolation {
                context: format!("zero target inside the engine range at level {local}"),
            });
        }
        let q2 = &subspaces[local - 1];
        let q3 = if local < count {
            &subspaces[local]
        } else {
            top_ambient
        };
        let u = 1.0 + tau_end / (2f64.powi(local as i32) * d);

        let z = find_pivot(&zero_sub, q2, q3, k)?;
        let (rho_z2, nearest) = distance(&z, q2, k)?;
        let s = z.sub(&nearest).scale(1.0 / rho_z2);

        let element: LevelElement = if u > 1.0 + 1e-15 {
            let gen = Point::from(q2.canonical_rows()[0].clone());
            let t = gen.scale(1.0 / norm_of(&gen, k));
            two_level_from_generators(&s, &t, &zero_sub, q2, u, 1.0, k)?
        } else {
            // zero analytic tail: the recentered pivot is the level element
            for (sub, claim) in [(&zero_sub, 1.0), (q2, 1.0)] {
                let (cert, pass) = certify_distance(&s, sub, k, claim, CERT_TOL)?;
                if !pass {
                    return Err(Error::CertificationFailure {
                        index: start_index + local - 1,
                        claimed: claim,
                        lower: cert.lower,
                        upper: cert.upper,
                    });
                }
            }
            LevelElement {
                q: s.clone(),
                u: 1.0,
                v: 1.0,
                mu: 0.0,
            }
        };
        if !q3.member(&element.q, MEMBER_TOL)? {
            return Err(Error::InvalidChain {
                reason: format!("level element {local} escaped its containing member"),
            });
        }
        let f = norming_functional(&element.q, q2, k)?;
        levels.push(LevelData {
            j: start_index + local - 1,
            q: element.q,
            u,
            f,
        });
    }
    Ok(levels)
}

/// Public entry for the level construction on a trivial plan (`n0 = 1`, no
/// zero innermost subspace, positive values through index `n`).
pub fn level_elements(
    chain: &Chain,
    seq: &DeviationSequence,
    n: usize,
    k: NormKind,
) -> Result<Vec<LevelData>> {
    let plan = preprocess(chain, seq)?;
    if !plan.engine_used || plan.engine_start != 1 {
        return Err(Error::PreconditionViolation {
            context: format!("plan is not trivial ({plan})"),
        });
    }
    if n == 0 || n > plan.positive_len {
        return Err(Error::PreconditionViolation {
            context: format!("zero or missing target inside the requested range 1..={n}"),
        });
    }
    let top_ambient = if n < chain.len() {
        chain.member_at(n + 1).clone()
    } else {
        plan.ambient.clone()
    };
    build_levels(
        &chain.subspaces()[..n],
        &top_ambient,
        &seq.values()[..n],
        seq.tail(n),
        1,
        k,
    )
}

fn sweep_impl(
    levels: &[LevelData],
    subspaces: &[Subspace],
    dvals: &[f64],
    tau_end: f64,
    k: NormKind,
) -> Result<SweepState> {
    let count = levels.len();
    let mut lambdas = vec![0.0; count];
    lambdas[count - 1] = dvals[count - 1];
    let mut partial = levels[count - 1].q.scale(lambdas[count - 1]);

    let certify_range = |partial: &Point, from: usize| -> Result<()> {
        for m in from..=count {
            let (cert, pass) =
                certify_distance(partial, &subspaces[m - 1], k, dvals[m - 1], CERT_TOL)?;
            if !pass {
                return Err(Error::CertificationFailure {
                    index: levels[m - 1].j,
                    claimed: dvals[m - 1],
                    lower: cert.lower,
                    upper: cert.upper,
                });
            }
        }
        Ok(())
    };
    certify_range(&partial, count)?;

    for level in (1..count).rev() {
        let idx = level - 1;
        let d_here = dvals[idx];
        let y = &subspaces[idx];
        let q = &levels[idx].q;
        let sigma = if levels[idx].f.evaluate(&partial) >= 0.0 {
            1.0
        } else {
            -1.0
        };
        let g = |t: f64, base: &Point| -> Result<f64> {
            Ok(distance(&base.add_scaled(sigma * t, q), y, k)?.0)
        };
        let at_zero = g(0.0, &partial)?;
        if at_zero > d_here + CERT_TOL {
            return Err(Error::BracketFailure {
                context: format!(
                    "level {}: partial sum at distance {at_zero} exceeds target {d_here}",
                    levels[idx].j
                ),
            });
        }
        let at_end = g(d_here, &partial)?;
        if at_end < d_here - CERT_TOL {
            return Err(Error::BracketFailure {
                context: format!(
                    "level {}: functional endpoint {at_end} below target {d_here}",
                    levels[idx].j
                ),
            });
        }
        let t_star = bisect_to_target(d_here, d_here, |t| g(t, &partial))?;
        lambdas[idx] = sigma * t_star;
        partial = partial.add_scaled(lambdas[idx], q);

        let bound: f64 = dvals[idx..].iter().sum::<f64>() + tau_end;
        if norm_of(&partial, k) > bound + 1e-8 {
            return Err(Error::BracketFailure {
                context: format!("level {}: partial sum norm exceeds its bound", levels[idx].j),
            });
        }
        certify_range(&partial, level)?;
    }
    Ok(SweepState {
        k: 1,
        lambdas,
        partial,
    })
}

/// Backward coefficient sweep over levels built by [`level_elements`].
pub fn backward_sweep(
    chain: &Chain,
    seq: &DeviationSequence,
    levels: &[LevelData],
    k: NormKind,
) -> Result<SweepState> {
    let count = levels.len();
    if count == 0 || count > chain.len() || count > seq.len() {
        return Err(Error::PreconditionViolation {
            context: "levels do not match the chain".into(),
        });
    }
    sweep_impl(
        levels,
        &chain.subspaces()[..count],
        &seq.values()[..count],
        seq.tail(count),
        k,
    )
}

/// The full exact construction with every reduction applied and every chain
/// index certified.
pub fn construct_exact(
    chain: &Chain,
    seq: &DeviationSequence,
    k: NormKind,
) -> Result<(Point, Vec<CertifiedRow>)> {
    let plan = preprocess(chain, seq)?;
    let n = chain.len();
    let w = plan.positive_len;

    let x = if w == 0 {
        Point::zero(chain.ambient_dim())
    } else if plan.engine_used {
        let start = plan.engine_start;
        let subs = &chain.subspaces()[start - 1..w];
        let dvals = &seq.values()[start - 1..w];
        let tau_end = seq.tail(w);
        let top_ambient = if w < n {
            chain.member_at(w + 1).clone()
        } else {
            plan.ambient.clone()
        };
        let levels = build_levels(subs, &top_ambient, dvals, tau_end, start, k)?;
        let state = sweep_impl(&levels, subs, dvals, tau_end, k)?;
        if plan.head_fix {
            // anchored at the tail element; the anchor coefficient is forced
            // to one because the anchor already sits at distance d_start
            let head_chain = chain.truncate(start);
            let head_targets = &seq.values()[..start];
            construct_finite(&head_chain, head_targets, &state.partial, k)?.x
        } else {
            state.partial
        }
    } else {
        let fin_chain = chain.truncate(w);
        let anchor = plan
            .ambient
            .first_generator_outside(chain.member_at(w), MEMBER_TOL)
            .ok_or_else(|| Error::InvalidChain {
                reason: "no room above the last positive index".into(),
            })?;
        construct_finite(&fin_chain, &seq.values()[..w], &anchor, k)?.x
    };

    let mut rows = Vec::with_capacity(n);
    for i in 1..=n {
        let d = seq.value_at(i);
        let band = (ACCEPT_REL * d).max(ACCEPT_ABS);
        let (rho, _) = distance(&x, chain.member_at(i), k)?;
        let (cert, pass) = certify_distance(&x, chain.member_at(i), k, d, band)?;
        if !pass {
            return Err(Error::CertificationFailure {
                index: i,
                claimed: d,
                lower: cert.lower,
                upper: cert.upper,
            });
        }
        rows.push(CertifiedRow {
            n: i,
            target: d,
            rho,
            lower: cert.lower,
            upper: cert.upper,
            pass,
        });
    }
    Ok((x, rows))
}

/// One entry of the pairwise truncation table.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceEntry {
    pub m: usize,
    pub n: usize,
    /// Norm of the difference of the two truncated constructions.
    pub diff: f64,
    /// Tail-driven component of the theoretical difference bound.
    pub tail_component: f64,
    /// The value one index before the smaller truncation, when it exists.
    pub prev_value: Option<f64>,
}

/// Pairwise table plus the truncated constructions it was computed from.
#[derive(Clone, Debug)]
pub struct ConvergenceProbe {
    pub entries: Vec<ConvergenceEntry>,
    pub points: BTreeMap<usize, Point>,
}

/// Pairwise distances between truncated constructions; informational.
pub fn convergence_probe(
    chain: &Chain,
    seq: &DeviationSequence,
    ns: &[usize],
    k: NormKind,
) -> Result<ConvergenceProbe> {
    let mut cache: BTreeMap<usize, Point> = BTreeMap::new();
    for &n in ns {
        if n == 0 || n > chain.len() {
            return Err(Error::PreconditionViolation {
                context: format!("truncation index {n} outside the chain"),
            });
        }
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(n) {
            let (x, _) = construct_exact(&chain.truncate(n), &seq.truncate(n), k)?;
            slot.insert(x);
        }
    }
    let mut out = Vec::new();
    for i in 0..ns.len() {
        for j in (i + 1)..ns.len() {
            let (a, b) = (ns[i].min(ns[j]), ns[i].max(ns[j]));
            let diff = norm_of(&cache[&ns[i]].sub(&cache[&ns[j]]), k);
            let m = a;
            out.push(ConvergenceEntry {
                m,
                n: b,
                diff,
                tail_component: seq.tail(m) * (1.0 - 0.5f64.powi(m as i32)),
                prev_value: if m >= 2 {
                    Some(seq.value_at(m - 1))
                } else {
                    None
                },
            });
        }
    }
    Ok(ConvergenceProbe {
        entries: out,
        points: cache,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preprocess_trivial_plan() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::geometric(1.0, 0.5, 3).unwrap();
        let plan = preprocess(&chain, &seq).unwrap();
        assert!(plan.engine_used);
        assert_eq!(plan.engine_start, 1);
        assert!(!plan.head_fix);
        assert_eq!(plan.zero_from, None);
    }

    #[test]
    fn preprocess_head_segment() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        // condition fails at n=1 (1 < 1.1) and holds from n0 = 2
        let seq = DeviationSequence::explicit(vec![1.0, 0.6, 0.5], 0.0).unwrap();
        let plan = preprocess(&chain, &seq).unwrap();
        assert_eq!(plan.engine_start, 2);
        assert!(plan.head_fix);
    }

    #[test]
    fn preprocess_head_ties_rejected() {
        let chain = Chain::coordinate(&[1, 2, 3, 4], 6).unwrap();
        // condition fails at n=1, holds from n0=2; the head 1..=2 is tied
        let seq = DeviationSequence::explicit(vec![1.0, 1.0, 0.5, 0.25], 0.25).unwrap();
        assert!(matches!(
            preprocess(&chain, &seq),
            Err(Error::HeadTies { index: 2 })
        ));
    }

    #[test]
    fn preprocess_zero_subspace_bumps_start() {
        let chain = Chain::coordinate(&[0, 1, 2], 4).unwrap();
        let seq = DeviationSequence::geometric(1.0, 0.5, 3).unwrap();
        let plan = preprocess(&chain, &seq).unwrap();
        assert_eq!(plan.engine_start, 2);
        assert!(plan.head_fix);
    }

    #[test]
    fn preprocess_rejects_power_sequence() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::power(2.0, 3).unwrap();
        assert!(matches!(
            preprocess(&chain, &seq),
            Err(Error::NoAdmissibleStart)
        ));
    }

    #[test]
    fn level_norms_match_formula() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::geometric(1.0, 0.5, 3).unwrap();
        let levels = level_elements(&chain, &seq, 3, NormKind::L2).unwrap();
        for l in &levels {
            assert!((l.u - 1.125).abs() < 1e-12, "u_{} = {}", l.j, l.u);
            assert!((norm_of(&l.q, NormKind::L2) - l.u).abs() < 1e-9);
            assert!((l.f.evaluate(&l.q) - 1.0).abs() < 1e-8);
            assert!(l.f.dual_norm_value <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn level_elements_reject_zero_targets() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::explicit(vec![1.0, 0.5, 0.0], 0.0).unwrap();
        assert!(matches!(
            level_elements(&chain, &seq, 3, NormKind::L2),
            Err(Error::PreconditionViolation { .. })
        ));
    }

    #[test]
    fn zero_tail_levels_have_unit_norm() {
        let chain = Chain::coordinate(&[1, 2], 4).unwrap();
        let seq = DeviationSequence::explicit(vec![1.0, 0.4], 0.0).unwrap();
        let levels = level_elements(&chain, &seq, 2, NormKind::L1).unwrap();
        for l in &levels {
            assert_eq!(l.u, 1.0);
            assert!((norm_of(&l.q, NormKind::L1) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_level_sweep() {
        let chain = Chain::coordinate(&[1], 3).unwrap();
        let seq = DeviationSequence::explicit(vec![0.5], 0.5).unwrap();
        let levels = level_elements(&chain, &seq, 1, NormKind::L2).unwrap();
        let state = backward_sweep(&chain, &seq, &levels, NormKind::L2).unwrap();
        assert!((state.lambdas[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_small_equality_case() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::geometric(1.0, 0.5, 3).unwrap();
        for k in NormKind::all() {
            let (_, rows) = construct_exact(&chain, &seq, k).unwrap();
            for row in &rows {
                assert!(row.pass, "index {} failed under {k}", row.n);
            }
        }
    }

    #[test]
    fn exact_zero_tail_values() {
        let chain = Chain::coordinate(&[1, 2, 3, 4], 6).unwrap();
        let seq = DeviationSequence::explicit(vec![1.0, 0.5, 0.0, 0.0], 0.0).unwrap();
        let (x, rows) = construct_exact(&chain, &seq, NormKind::L2).unwrap();
        assert!(rows.iter().all(|r| r.pass));
        // the element lives inside the third chain member
        assert!(chain.member_at(3).member(&x, 1e-8).unwrap());
    }

    #[test]
    fn exact_all_zero() {
        let chain = Chain::coordinate(&[1, 2], 4).unwrap();
        let seq = DeviationSequence::explicit(vec![0.0, 0.0], 0.0).unwrap();
        let (x, rows) = construct_exact(&chain, &seq, NormKind::Linf).unwrap();
        assert_eq!(x, Point::zero(4));
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn exact_with_head_fix() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::explicit(vec![1.0, 0.6, 0.5], 0.5).unwrap();
        let (_, rows) = construct_exact(&chain, &seq, NormKind::L2).unwrap();
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn lambdas_stay_inside_intervals() {
        let chain = Chain::coordinate(&[1, 2, 3, 4], 6).unwrap();
        let seq = DeviationSequence::geometric(1.0, 0.5, 4).unwrap();
        let levels = level_elements(&chain, &seq, 4, NormKind::L2).unwrap();
        let state = backward_sweep(&chain, &seq, &levels, NormKind::L2).unwrap();
        for (i, l) in state.lambdas.iter().enumerate() {
            assert!(l.abs() <= seq.value_at(i + 1) + 1e-12);
        }
    }

    #[test]
    fn probe_trivial_cases() {
        let chain = Chain::coordinate(&[1, 2, 3], 5).unwrap();
        let seq = DeviationSequence::geometric(1.0, 0.5, 3).unwrap();
        let same = convergence_probe(&chain, &seq, &[2, 2], NormKind::L2).unwrap();
        assert_eq!(same.entries.len(), 1);
        assert_eq!(same.entries[0].diff, 0.0);
        let single = convergence_probe(&chain, &seq, &[2], NormKind::L2).unwrap();
        assert!(single.entries.is_empty());
        assert_eq!(single.points.len(), 1);
    }
}
