//! Elements with two prescribed distances and the machinery around them:
//! the pivot at distances (2, 1), the delta search, least-dual-norm
//! functional probes, and families of two-level elements.
//!
//! The two-level elements are built from a generator pair rather than from a
//! prescribed-value functional: `s` is the recentered pivot (unit norm, unit
//! distance from `Q2`) and `t` a generator of `Q2` at unit distance from
//! `Q1`. Then `q = v·s + μ·t` has distance `v` from `Q2` for free, and the
//! distance from `Q1` is a convex function of `μ` growing without bound, so
//! the smallest non-negative root of `ρ(v·s + μ·t, Q1) = u` exists whenever
//! `u > v` and one bisection pins it.
//!
//! The prescribed-value route of the underlying duality argument is exposed
//! as a measurement, not an assertion: [`prescribed_functional_probe`]
//! reports the least dual norm achievable under the three interpolation
//! constraints and whether it fits inside the required bound. On Euclidean
//! instances with a unique minimal-norm functional the prescribed value is
//! generally unattainable; the probe records the margin instead of failing.

use crate::error::{Error, Result};
use crate::finite::{bisect_to_target, construct_finite};
use crate::oracle::{
    certify_distance, distance, min_dual_norm_interpolation, norm_of, CERT_TOL,
};
use crate::space::{Chain, NormKind, Point, Subspace, MEMBER_TOL};

/// Grid resolution of the descending delta scan.
const DELTA_GRID: usize = 256;

/// Samples used for the minimality and sup-of-roots checks.
const SAMPLE_COUNT: usize = 64;

/// Pivot, offset, delta bracket and generators shared by a family of
/// two-level elements over a nested triple `Q1 ⊂ Q2 ⊂ Q3`.
#[derive(Clone, Debug)]
pub struct PairContext {
    pub q1: Subspace,
    pub q2: Subspace,
    pub q3: Subspace,
    pub z: Point,
    pub w: Point,
    pub eps: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta: f64,
    pub s: Point,
    pub t: Point,
    /// Smallest constant >= 1 making the pairwise difference bound hold over
    /// the elements built from this context; 1 until measured.
    pub lipschitz_c: f64,
}

/// One element with certified distances `u` from `Q1` and `v` from `Q2`.
#[derive(Clone, Debug)]
pub struct LevelElement {
    pub q: Point,
    pub u: f64,
    pub v: f64,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Minus,
    Plus,
}

/// Measurement of the least dual norm achievable under the interpolation
/// constraints `f|Q = 0`, `f(x1) = 1`, `f(x2) = nu`.
#[derive(Clone, Debug)]
pub struct FunctionalProbe {
    pub x1: Point,
    pub x2: Point,
    pub delta: f64,
    pub orientation: Orientation,
    pub nu: f64,
    pub required_norm: f64,
    pub achieved_norm: f64,
    pub feasible: bool,
    pub margin: f64,
    pub functional: Vec<f64>,
}

/// An element of `Q3` with certified distances 2 from `Q1` and 1 from `Q2`.
pub fn find_pivot(q1: &Subspace, q2: &Subspace, q3: &Subspace, k: NormKind) -> Result<Point> {
    let triple = Chain::new(vec![q1.clone(), q2.clone(), q3.clone()], q3.ambient_dim());
    let diag = triple.validate();
    if !diag.pass {
        return Err(Error::InvalidChain {
            reason: diag.to_string(),
        });
    }
    let anchor = q3
        .first_generator_outside(q2, MEMBER_TOL)
        .ok_or_else(|| Error::InvalidChain {
            reason: "no generator of Q3 outside Q2".into(),
        })?;
    let chain = Chain::new(vec![q1.clone(), q2.clone()], q3.ambient_dim());
    let out = construct_finite(&chain, &[2.0, 1.0], &anchor, k)?;
    Ok(out.x)
}

/// Largest root of `ρ(z - a·w, Q1) = 1 + eps` on the analytic bracket.
///
/// Returns `(delta_min, delta_max, delta)`. Beyond the returned `delta` the
/// map stays at or above the level, which the family construction relies on.
pub fn find_delta(
    z: &Point,
    w: &Point,
    q1: &Subspace,
    eps: f64,
    k: NormKind,
) -> Result<(f64, f64, f64)> {
    let (rho_w, _) = distance(w, q1, k)?;
    if rho_w <= 1e-9 * (1.0 + norm_of(w, k)) {
        return Err(Error::PreconditionViolation {
            context: "offset w lies in Q1".into(),
        });
    }
    let target = 1.0 + eps;
    let zw = norm_of(&z.sub(w), k);
    if (zw - target).abs() > 1e-8 * target {
        return Err(Error::PreconditionViolation {
            context: format!("|z - w| = {zw}, expected {target}"),
        });
    }
    let h = |a: f64| -> Result<f64> { Ok(distance(&z.add_scaled(-a, w), q1, k)?.0) };

    let delta_min = 1.0 + (target - h(1.0)?) / rho_w;
    let delta_max = (3.0 + eps) / rho_w;
    let tol = 1e-8 * target;
    if h(delta_min)? > target + tol {
        return Err(Error::NoBracket {
            context: format!("h(delta_min) = {} above the level", h(delta_min)?),
        });
    }
    if h(delta_max)? < target - tol {
        return Err(Error::NoBracket {
            context: format!("h(delta_max) = {} below the level", h(delta_max)?),
        });
    }

    let grid: Vec<f64> = (0..DELTA_GRID)
        .map(|i| {
            delta_min + (delta_max - delta_min) * (i as f64) / ((DELTA_GRID - 1) as f64)
        })
        .collect();
    let hvals: Vec<f64> = grid.iter().map(|&a| h(a)).collect::<Result<_>>()?;

    // descending scan: rightmost grid point at or below the level
    let at_tol = 1e-9 * target;
    let mut idx = None;
    for i in (0..DELTA_GRID).rev() {
        if hvals[i] <= target + at_tol {
            idx = Some(i);
            break;
        }
    }
    let i = idx.ok_or_else(|| Error::NoBracket {
        context: "no grid point reaches the level".into(),
    })?;
    let mut delta = if i + 1 == DELTA_GRID {
        delta_max
    } else {
        // bisection on the last sign change
        let mut lo = grid[i];
        let mut hi = grid[i + 1];
        for _ in 0..60 {
            if hi - lo <= 1e-13 * delta_max.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if h(mid)? <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let refined = 0.5 * (lo + hi);
        // plateaus hugging the level resolve to the rightmost grid point
        let mut d = refined;
        for (j, &hv) in hvals.iter().enumerate().skip(i + 1) {
            if (hv - target).abs() <= at_tol {
                d = grid[j];
            } else {
                break;
            }
        }
        d
    };
    if delta > delta_max {
        delta = delta_max;
    }
    Ok((delta_min, delta_max, delta))
}

/// Pivot, offset at distance `1 + eps`, delta bracket and generators for a
/// nested triple.
pub fn build_pair_context(
    q1: &Subspace,
    q2: &Subspace,
    q3: &Subspace,
    eps: f64,
    k: NormKind,
) -> Result<PairContext> {
    if eps < 0.0 {
        return Err(Error::PreconditionViolation {
            context: "eps must be non-negative".into(),
        });
    }
    let z = find_pivot(q1, q2, q3, k)?;
    let (rho_z2, nearest) = distance(&z, q2, k)?;

    // offset at the prescribed blow-up of the best-approximation distance
    let w = if eps == 0.0 {
        nearest.clone()
    } else {
        let dir = q2
            .first_generator_outside(q1, MEMBER_TOL)
            .ok_or_else(|| Error::InvalidChain {
                reason: "no generator of Q2 outside Q1".into(),
            })?;
        let phi = |t: f64| -> Result<f64> { Ok(norm_of(&z.sub(&nearest.add_scaled(t, &dir)), k)) };
        let mut hi = 1.0;
        let mut grow = 0;
        while phi(hi)? < 1.0 + eps {
            hi *= 2.0;
            grow += 1;
            if grow > 60 {
                return Err(Error::NoBracket {
                    context: "offset search failed to escape".into(),
                });
            }
        }
        let t_star = bisect_to_target(1.0 + eps, hi, phi)?;
        nearest.add_scaled(t_star, &dir)
    };

    let (delta_min, delta_max, delta) = find_delta(&z, &w, q1, eps, k)?;

    let s = z.sub(&nearest).scale(1.0 / rho_z2);
    let gen = q2
        .first_generator_outside(q1, MEMBER_TOL)
        .ok_or_else(|| Error::InvalidChain {
            reason: "no generator of Q2 outside Q1".into(),
        })?;
    let (rho_gen, _) = distance(&gen, q1, k)?;
    let t = gen.scale(1.0 / rho_gen);

    for (p, sub, claim) in [
        (&z, q1, 2.0),
        (&z, q2, 1.0),
        (&s, q2, 1.0),
        (&t, q1, 1.0),
    ] {
        let (cert, pass) = certify_distance(p, sub, k, claim, CERT_TOL)?;
        if !pass {
            return Err(Error::CertificationFailure {
                index: 0,
                claimed: claim,
                lower: cert.lower,
                upper: cert.upper,
            });
        }
    }
    debug_assert!(q2.member(&t, MEMBER_TOL)?);
    debug_assert!(q3.member(&s, MEMBER_TOL)?);

    Ok(PairContext {
        q1: q1.clone(),
        q2: q2.clone(),
        q3: q3.clone(),
        z,
        w,
        eps,
        delta_min,
        delta_max,
        delta,
        s,
        t,
        lipschitz_c: 1.0,
    })
}

/// Core of [`two_level_element`]: smallest non-negative `μ` with
/// `ρ(v·s + μ·t, Q1) = u`, with both distances certified.
pub(crate) fn two_level_from_generators(
    s: &Point,
    t: &Point,
    q1: &Subspace,
    q2: &Subspace,
    u: f64,
    v: f64,
    k: NormKind,
) -> Result<LevelElement> {
    if !(u > v && v >= 0.0) {
        return Err(Error::DegenerateTarget { u, v });
    }
    let g = |mu: f64| -> Result<f64> {
        Ok(distance(&s.scale(v).add_scaled(mu, t), q1, k)?.0)
    };
    let g0 = g(0.0)?;
    if g0 >= u {
        return Err(Error::NoBracket {
            context: format!("level start {g0} already at or above u = {u}"),
        });
    }
    let mut hi = u + v;
    let mut grow = 0;
    while g(hi)? < u {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NoBracket {
                context: "upper end of the level search failed to escape".into(),
            });
        }
    }
    let mu = bisect_to_target(u, hi, g)?;
    let q = s.scale(v).add_scaled(mu, t);

    for (sub, claim) in [(q1, u), (q2, v)] {
        let (cert, pass) = certify_distance(&q, sub, k, claim, CERT_TOL)?;
        if !pass {
            return Err(Error::CertificationFailure {
                index: 0,
                claimed: claim,
                lower: cert.lower,
                upper: cert.upper,
            });
        }
    }
    Ok(LevelElement { q, u, v, mu })
}

/// Element `q = v·s + μ·t` with `ρ(q, Q1) = u` and `ρ(q, Q2) = v`.
pub fn two_level_element(
    ctx: &PairContext,
    u: f64,
    v: f64,
    k: NormKind,
) -> Result<LevelElement> {
    two_level_from_generators(&ctx.s, &ctx.t, &ctx.q1, &ctx.q2, u, v, k)
}

/// Builds one element per `(u, v)` pair from a shared context and measures
/// the smallest constant making the pairwise difference bound hold.
pub fn pair_family(
    q1: &Subspace,
    q2: &Subspace,
    q3: &Subspace,
    pairs: &[(f64, f64)],
    k: NormKind,
) -> Result<(PairContext, Vec<LevelElement>)> {
    let mut ctx = build_pair_context(q1, q2, q3, 0.0, k)?;
    let mut elements = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        elements.push(two_level_element(&ctx, u, v, k)?);
    }
    let mut c: f64 = 1.0;
    for i in 0..elements.len() {
        for j in (i + 1)..elements.len() {
            let (a, b) = (&elements[i], &elements[j]);
            let denom = a.u.max(b.u) - a.v.min(b.v);
            let diff = norm_of(&a.q.sub(&b.q), k);
            c = c.max(diff / denom);
        }
    }
    ctx.lipschitz_c = c;
    Ok((ctx, elements))
}

/// Reports whether the prescribed value is reachable within the required
/// dual-norm bound. Infeasibility is an observation, never an error.
pub fn prescribed_functional_probe(
    x1: &Point,
    x2: &Point,
    q: &Subspace,
    delta: f64,
    orientation: Orientation,
    k: NormKind,
) -> Result<FunctionalProbe> {
    if delta < 0.0 {
        return Err(Error::PreconditionViolation {
            context: "delta must be non-negative".into(),
        });
    }
    let scale = 1.0 + norm_of(x1, k).max(norm_of(x2, k));
    let (rho_x1, _) = distance(x1, q, k)?;
    let (rho_x2, _) = distance(x2, q, k)?;
    if rho_x1 <= 1e-9 * scale || rho_x2 <= 1e-9 * scale {
        return Err(Error::PreconditionViolation {
            context: "x1 and x2 must lie outside Q".into(),
        });
    }
    let extended = q.extended(x1)?;
    if extended.member(x2, MEMBER_TOL)? {
        return Err(Error::PreconditionViolation {
            context: "x2 lies in the span of {x1} and Q".into(),
        });
    }

    let sign = match orientation {
        Orientation::Minus => -1.0,
        Orientation::Plus => 1.0,
    };
    let shifted = |a: f64| -> Result<f64> {
        Ok(distance(&x2.add_scaled(sign * a, x1), q, k)?.0)
    };
    let at_delta = shifted(delta)?;
    for i in 0..SAMPLE_COUNT {
        let a = delta + 10.0 * (i as f64) / ((SAMPLE_COUNT - 1) as f64);
        if shifted(a)? < at_delta - 1e-9 * scale {
            return Err(Error::PreconditionViolation {
                context: format!("minimality fails at a = {a}"),
            });
        }
    }

    let nu = match orientation {
        Orientation::Minus => delta - at_delta / rho_x1,
        Orientation::Plus => -delta + at_delta / rho_x1,
    };
    let required_norm = 1.0 / rho_x1;

    let dim = x1.dim();
    let mut rows: Vec<Vec<f64>> = q.orthonormal_rows().to_vec();
    let mut rhs: Vec<f64> = vec![0.0; rows.len()];
    rows.push(x1.coords().to_vec());
    rhs.push(1.0);
    rows.push(x2.coords().to_vec());
    rhs.push(nu);
    let (achieved_norm, functional) = min_dual_norm_interpolation(&rows, &rhs, k, dim)?;

    let margin = achieved_norm / required_norm;
    let feasible = margin <= 1.0 + 1e-9;
    Ok(FunctionalProbe {
        x1: x1.clone(),
        x2: x2.clone(),
        delta,
        orientation,
        nu,
        required_norm,
        achieved_norm,
        feasible,
        margin,
        functional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::from(v.to_vec())
    }

    fn toy_triple() -> (Subspace, Subspace, Subspace) {
        (
            Subspace::zero(2),
            Subspace::coordinate(1, 2),
            Subspace::full(2),
        )
    }

    #[test]
    fn pivot_euclidean() {
        let (q1, q2, q3) = toy_triple();
        let z = find_pivot(&q1, &q2, &q3, NormKind::L2).unwrap();
        assert!((norm_of(&z, NormKind::L2) - 2.0).abs() < 1e-9);
        let (d, _) = distance(&z, &q2, NormKind::L2).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pivot_max_norm() {
        let (q1, q2, q3) = toy_triple();
        let z = find_pivot(&q1, &q2, &q3, NormKind::Linf).unwrap();
        assert!((norm_of(&z, NormKind::Linf) - 2.0).abs() < 1e-9);
        let (d, _) = distance(&z, &q2, NormKind::Linf).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pivot_rejects_non_strict_triple() {
        let q2 = Subspace::coordinate(1, 2);
        assert!(matches!(
            find_pivot(&q2, &q2, &Subspace::full(2), NormKind::L2),
            Err(Error::InvalidChain { .. })
        ));
    }

    #[test]
    fn delta_single_root() {
        // h(a)^2 = 3 (1-a)^2 + 1: single root at a = 1
        let z = pt(&[3f64.sqrt(), 1.0]);
        let w = pt(&[3f64.sqrt(), 0.0]);
        let q1 = Subspace::zero(2);
        let (dmin, dmax, d) = find_delta(&z, &w, &q1, 0.0, NormKind::L2).unwrap();
        assert!((dmin - 1.0).abs() < 1e-9);
        assert!((dmax - 3f64.sqrt()).abs() < 1e-9);
        assert!((d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn delta_two_roots_takes_largest() {
        // roots of (sqrt(3) - 0.982... a)^2 + 1 = 1.5625 are 1 and ~2.5274
        let r3 = 3f64.sqrt();
        let z = pt(&[r3, 1.0]);
        let w = pt(&[r3 - 0.75, 0.0]);
        let q1 = Subspace::zero(2);
        let (_, _, d) = find_delta(&z, &w, &q1, 0.25, NormKind::L2).unwrap();
        let expected = (r3 + 0.75) / (r3 - 0.75);
        assert!((d - expected).abs() < 1e-6, "delta = {d}, want {expected}");
    }

    #[test]
    fn delta_plateau_resolves_right() {
        // max norm: h(a) = max(|2(1-a)|, 1) sits at the level on [0.5, 1.5]
        let z = pt(&[2.0, 1.0]);
        let w = pt(&[2.0, 0.0]);
        let q1 = Subspace::zero(2);
        let (_, dmax, d) = find_delta(&z, &w, &q1, 0.0, NormKind::Linf).unwrap();
        assert!((dmax - 1.5).abs() < 1e-9);
        assert!((d - 1.5).abs() < 1e-6);
    }

    #[test]
    fn delta_rejects_offset_in_q1() {
        let z = pt(&[1.0, 1.0]);
        let w = Point::zero(2);
        assert!(matches!(
            find_delta(&z, &w, &Subspace::zero(2), 0.0, NormKind::L2),
            Err(Error::PreconditionViolation { .. })
        ));
    }

    #[test]
    fn two_level_pythagorean() {
        let (q1, q2, q3) = toy_triple();
        let ctx = build_pair_context(&q1, &q2, &q3, 0.0, NormKind::L2).unwrap();
        let el = two_level_element(&ctx, 1.5, 1.0, NormKind::L2).unwrap();
        assert!((el.mu - 1.25f64.sqrt()).abs() < 1e-9);
        assert!((norm_of(&el.q, NormKind::L2) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn two_level_max_norm() {
        // with the generators pinned to s = (0,1), t = e1 the root is mu = u
        let (q1, q2, _) = toy_triple();
        let s = pt(&[0.0, 1.0]);
        let t = pt(&[1.0, 0.0]);
        let el = two_level_from_generators(&s, &t, &q1, &q2, 2.0, 1.0, NormKind::Linf).unwrap();
        assert!((el.mu - 2.0).abs() < 1e-9);
        assert!((norm_of(&el.q, NormKind::Linf) - 2.0).abs() < 1e-9);
        // the context route keeps the certified contracts regardless of
        // which nearest point the max-norm projection picked
        let (q1, q2, q3) = toy_triple();
        let ctx = build_pair_context(&q1, &q2, &q3, 0.0, NormKind::Linf).unwrap();
        let el = two_level_element(&ctx, 2.0, 1.0, NormKind::Linf).unwrap();
        assert!((norm_of(&el.q, NormKind::Linf) - 2.0).abs() < 1e-9);
        assert!(el.mu >= 0.0);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let (q1, q2, q3) = toy_triple();
        let ctx = build_pair_context(&q1, &q2, &q3, 0.0, NormKind::L2).unwrap();
        assert!(matches!(
            two_level_element(&ctx, 1.0, 1.0, NormKind::L2),
            Err(Error::DegenerateTarget { .. })
        ));
    }

    #[test]
    fn family_measures_constant() {
        let (q1, q2, q3) = toy_triple();
        let (ctx, els) =
            pair_family(&q1, &q2, &q3, &[(1.5, 1.0), (1.25, 1.0)], NormKind::L2).unwrap();
        assert_eq!(els.len(), 2);
        assert!(ctx.lipschitz_c >= 1.0);
        let diff = norm_of(&els[0].q.sub(&els[1].q), NormKind::L2);
        assert!(diff <= ctx.lipschitz_c * (1.5 - 1.0) + 1e-9);
    }

    #[test]
    fn family_singleton_vacuous() {
        let (q1, q2, q3) = toy_triple();
        let (ctx, els) = pair_family(&q1, &q2, &q3, &[(2.0, 1.0)], NormKind::L2).unwrap();
        assert_eq!(els.len(), 1);
        assert_eq!(ctx.lipschitz_c, 1.0);
    }

    #[test]
    fn family_rejects_tied_pair() {
        let (q1, q2, q3) = toy_triple();
        assert!(matches!(
            pair_family(&q1, &q2, &q3, &[(1.0, 1.0)], NormKind::L2),
            Err(Error::DegenerateTarget { .. })
        ));
    }

    #[test]
    fn probe_euclidean_documented_instance() {
        let r3 = 3f64.sqrt();
        let probe = prescribed_functional_probe(
            &pt(&[r3, 0.0]),
            &pt(&[r3, 1.0]),
            &Subspace::zero(2),
            1.0,
            Orientation::Minus,
            NormKind::L2,
        )
        .unwrap();
        assert!((probe.nu - (1.0 - 1.0 / r3)).abs() < 1e-9);
        assert!((probe.required_norm - 1.0 / r3).abs() < 1e-9);
        assert!((probe.achieved_norm - (2.0f64 / 3.0).sqrt()).abs() < 1e-9);
        assert!(!probe.feasible);
        assert!((probe.margin - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn probe_l1_documented_instance() {
        let probe = prescribed_functional_probe(
            &pt(&[1.0, 0.0]),
            &pt(&[0.0, 1.0]),
            &Subspace::zero(2),
            0.0,
            Orientation::Minus,
            NormKind::L1,
        )
        .unwrap();
        assert!((probe.nu + 1.0).abs() < 1e-9);
        assert!((probe.required_norm - 1.0).abs() < 1e-9);
        assert!(probe.feasible);
        // the achieved functional interpolates both constraints
        assert!((probe.functional[0] - 1.0).abs() < 1e-9);
        assert!((probe.functional[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn probe_l2_axes_instance() {
        let probe = prescribed_functional_probe(
            &pt(&[1.0, 0.0]),
            &pt(&[0.0, 1.0]),
            &Subspace::zero(2),
            0.0,
            Orientation::Minus,
            NormKind::L2,
        )
        .unwrap();
        assert!((probe.nu + 1.0).abs() < 1e-9);
        assert!((probe.achieved_norm - 2f64.sqrt()).abs() < 1e-9);
        assert!(!probe.feasible);
    }
}
