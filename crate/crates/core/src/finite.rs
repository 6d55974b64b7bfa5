//! Prescribed distances to a finite nested chain, anchored at a given
//! element.
//!
//! Given `Y_1 ⊂ … ⊂ Y_n`, strictly decreasing targets `d_1 > … > d_n >= 0`
//! and an anchor `z` outside `Y_n`, the construction starts from the scaled
//! anchor and walks the chain downward. At level `k` the running element is
//! recentered at its nearest point of `Y_{k+1}` (so its norm drops to
//! `d_{k+1}`, which proves the lower bracket end), then pushed along a
//! direction of `Y_{k+1}` at unit distance from `Y_k` until the distance to
//! `Y_k` lands exactly on `d_k`. A norming functional of the direction gives
//! the sign and proves the upper bracket end, so the bisection bracket is
//! `[0, d_k]` at every level. Every modification lies inside `Y_n`, which
//! preserves the anchor relation `x - λz ∈ Y_n`.

use crate::error::{Error, Result};
use crate::oracle::{certify_distance, distance, norming_functional, norm_of, CERT_TOL};
use crate::space::{Chain, NormKind, Point, MEMBER_TOL};

/// Absolute residual allowed on the anchor membership `x - λz ∈ Y_n`.
pub const ANCHOR_TOL: f64 = 1e-8;

/// Result of the finite construction.
#[derive(Clone, Debug)]
pub struct AnchoredElement {
    pub x: Point,
    pub lambda: f64,
    pub anchor: Point,
}

/// Bisection for `f(t) = target` on `[0, hi]`, assuming `f(0) <= target <=
/// f(hi)`; `f` is convex along the segment so the crossing is unique.
pub(crate) fn bisect_to_target<F>(target: f64, hi: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut lo = 0.0;
    let mut hi = hi;
    let width_tol = 1e-12 * hi.max(1e-300);
    for _ in 0..90 {
        if hi - lo <= width_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Builds `x` with `ρ(x, Y_k) = d_k` for every `k`, `‖x‖ <= d_1 + 1` and
/// `x - λz ∈ Y_n`.
///
/// With `d_n = 0` the anchor coefficient is necessarily zero here: the chain
/// members are closed, so `x ∈ Y_n` together with `λ > 0` would force the
/// anchor itself into `Y_n`.
pub fn construct_finite(
    chain: &Chain,
    targets: &[f64],
    z: &Point,
    k: NormKind,
) -> Result<AnchoredElement> {
    let diag = chain.validate();
    if !diag.pass {
        return Err(Error::InvalidChain {
            reason: diag.to_string(),
        });
    }
    let n = chain.len();
    if targets.len() != n || n == 0 {
        return Err(Error::DimMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    for (i, &d) in targets.iter().enumerate() {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::NonFinite {
                what: format!("target {}", i + 1),
            });
        }
        if i > 0 && d >= targets[i - 1] {
            return Err(Error::NotStrictlyDecreasing { index: i + 1 });
        }
    }

    let top = chain.member_at(n);
    let (rho_z, _) = distance(z, top, k)?;
    if rho_z <= 1e-9 * (1.0 + norm_of(z, k)) {
        return Err(Error::AnchorInsideTop);
    }

    let d_last = targets[n - 1];
    let lambda = if d_last > 0.0 { d_last / rho_z } else { 0.0 };
    let mut x = z.scale(lambda);

    for level in (1..n).rev() {
        let d_here = targets[level - 1];
        let upper = chain.member_at(level + 1);
        let lower = chain.member_at(level);

        // recenter inside Y_{k+1}: the norm collapses to d_{k+1} < d_k
        let (_, nearest) = distance(&x, upper, k)?;
        x = x.sub(&nearest);

        let gen = upper
            .first_generator_outside(lower, MEMBER_TOL)
            .ok_or_else(|| Error::InvalidChain {
                reason: format!("no generator of level {} outside level {}", level + 1, level),
            })?;
        let (rho_gen, _) = distance(&gen, lower, k)?;
        let dir = gen.scale(1.0 / rho_gen);
        let f = norming_functional(&dir, lower, k)?;
        let sign = if f.evaluate(&x) >= 0.0 { 1.0 } else { -1.0 };
        let dir = dir.scale(sign);

        let phi = |a: f64, x: &Point| -> Result<f64> {
            Ok(distance(&x.add_scaled(a, &dir), lower, k)?.0)
        };
        let at_zero = phi(0.0, &x)?;
        if at_zero > d_here + CERT_TOL {
            return Err(Error::CertificationFailure {
                index: level,
                claimed: d_here,
                lower: at_zero,
                upper: at_zero,
            });
        }
        let at_end = phi(d_here, &x)?;
        if at_end < d_here - CERT_TOL {
            return Err(Error::CertificationFailure {
                index: level,
                claimed: d_here,
                lower: at_end,
                upper: at_end,
            });
        }
        let a_star = bisect_to_target(d_here, d_here, |a| phi(a, &x))?;
        x = x.add_scaled(a_star, &dir);

        // the levels above were modified only by elements of their own
        // subspaces; re-certify that none of them moved
        for m in (level + 1)..=n {
            let (cert, pass) =
                certify_distance(&x, chain.member_at(m), k, targets[m - 1], CERT_TOL)?;
            if !pass {
                return Err(Error::CertificationFailure {
                    index: m,
                    claimed: targets[m - 1],
                    lower: cert.lower,
                    upper: cert.upper,
                });
            }
        }
    }

    // final recenter: the norm becomes exactly the first target
    let (_, nearest1) = distance(&x, chain.member_at(1), k)?;
    x = x.sub(&nearest1);

    for (i, &d) in targets.iter().enumerate() {
        let (cert, pass) = certify_distance(&x, chain.member_at(i + 1), k, d, CERT_TOL)?;
        if !pass {
            return Err(Error::CertificationFailure {
                index: i + 1,
                claimed: d,
                lower: cert.lower,
                upper: cert.upper,
            });
        }
    }
    if norm_of(&x, k) > targets[0] + 1.0 {
        return Err(Error::CertificationFailure {
            index: 0,
            claimed: targets[0] + 1.0,
            lower: norm_of(&x, k),
            upper: norm_of(&x, k),
        });
    }
    let shifted = x.add_scaled(-lambda, z);
    if !top.member(&shifted, ANCHOR_TOL)? {
        return Err(Error::CertificationFailure {
            index: n,
            claimed: 0.0,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }

    Ok(AnchoredElement {
        x,
        lambda,
        anchor: z.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Subspace;

    fn toy_chain() -> Chain {
        // span{e1} ⊂ span{e1,e2} in R^3
        Chain::new(
            vec![Subspace::coordinate(1, 3), Subspace::coordinate(2, 3)],
            3,
        )
    }

    #[test]
    fn euclidean_two_level() {
        let chain = toy_chain();
        let z = Point::standard_basis(3, 2);
        let out = construct_finite(&chain, &[2.0, 1.0], &z, NormKind::L2).unwrap();
        let (d1, _) = distance(&out.x, chain.member_at(1), NormKind::L2).unwrap();
        let (d2, _) = distance(&out.x, chain.member_at(2), NormKind::L2).unwrap();
        assert!((d1 - 2.0).abs() < 1e-9);
        assert!((d2 - 1.0).abs() < 1e-9);
        assert!((out.lambda - 1.0).abs() < 1e-9);
        assert!(norm_of(&out.x, NormKind::L2) <= 3.0);
    }

    #[test]
    fn max_norm_two_level() {
        let chain = toy_chain();
        let z = Point::standard_basis(3, 2);
        let out = construct_finite(&chain, &[2.0, 1.0], &z, NormKind::Linf).unwrap();
        let (d1, _) = distance(&out.x, chain.member_at(1), NormKind::Linf).unwrap();
        assert!((d1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn ties_rejected() {
        let chain = toy_chain();
        let z = Point::standard_basis(3, 2);
        assert!(matches!(
            construct_finite(&chain, &[1.0, 1.0], &z, NormKind::L2),
            Err(Error::NotStrictlyDecreasing { index: 2 })
        ));
    }

    #[test]
    fn anchor_inside_rejected() {
        let chain = toy_chain();
        let z = Point::standard_basis(3, 1);
        assert!(matches!(
            construct_finite(&chain, &[2.0, 1.0], &z, NormKind::L2),
            Err(Error::AnchorInsideTop)
        ));
    }

    #[test]
    fn zero_last_target() {
        let chain = toy_chain();
        let z = Point::standard_basis(3, 2);
        let out = construct_finite(&chain, &[1.0, 0.0], &z, NormKind::L1).unwrap();
        assert_eq!(out.lambda, 0.0);
        let (d2, _) = distance(&out.x, chain.member_at(2), NormKind::L1).unwrap();
        assert!(d2 < 1e-9);
    }

    #[test]
    fn single_level_zero_subspace() {
        let chain = Chain::new(vec![Subspace::zero(2)], 2);
        let z = Point::from(vec![3.0, 4.0]);
        let out = construct_finite(&chain, &[1.0], &z, NormKind::L2).unwrap();
        assert!((norm_of(&out.x, NormKind::L2) - 1.0).abs() < 1e-9);
    }
}
