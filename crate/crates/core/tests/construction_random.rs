//! Randomized end-to-end checks of the finite, pair and exact constructions
//! on non-coordinate chains.

use lethargy_core::engine::construct_exact;
use lethargy_core::finite::construct_finite;
use lethargy_core::oracle::{distance, norm_of};
use lethargy_core::pair::{
    build_pair_context, find_delta, pair_family, prescribed_functional_probe, Orientation,
};
use lethargy_core::space::{Chain, DeviationSequence, NormKind, Point, Subspace};
use lethargy_testsupport::{
    random_nested_bases, random_strictly_decreasing, random_vec, rng,
};
use rand::Rng;

fn nested_chain<R: Rng>(r: &mut R, dim: usize, ranks: &[usize]) -> Chain {
    let bases = random_nested_bases(r, dim, ranks);
    let subspaces = bases
        .into_iter()
        .map(|rows| {
            Subspace::new(rows.into_iter().map(Point::from).collect(), dim).unwrap()
        })
        .collect();
    Chain::new(subspaces, dim)
}

#[test]
fn finite_random_chains() {
    let mut r = rng(0xf1a7_0001);
    for case in 0..40 {
        let len = r.gen_range(1..=4);
        let dim = r.gen_range(len + 1..=len + 3);
        let mut ranks: Vec<usize> = Vec::new();
        let mut next = r.gen_range(0..=1usize);
        for _ in 0..len {
            ranks.push(next);
            next += r.gen_range(1..=((dim - next) / 2).max(1));
        }
        while *ranks.last().unwrap() >= dim {
            ranks.pop();
        }
        let chain = nested_chain(&mut r, dim, &ranks);
        let k = NormKind::all()[case % 3];
        let targets = random_strictly_decreasing(&mut r, ranks.len(), case % 5 == 0);
        let anchor = loop {
            let z = Point::from(random_vec(&mut r, dim, 1.5));
            if distance(&z, chain.member_at(chain.len()), k).unwrap().0 > 0.2 {
                break z;
            }
        };
        let out = construct_finite(&chain, &targets, &anchor, k).unwrap();
        for (i, &d) in targets.iter().enumerate() {
            let (rho, _) = distance(&out.x, chain.member_at(i + 1), k).unwrap();
            assert!(
                (rho - d).abs() <= 1e-8 * (1.0 + d),
                "case {case} level {} under {k}: {rho} vs {d}",
                i + 1
            );
        }
        assert!(norm_of(&out.x, k) <= targets[0] + 1.0);
        let shifted = out.x.add_scaled(-out.lambda, &anchor);
        assert!(chain
            .member_at(chain.len())
            .member(&shifted, 1e-8)
            .unwrap());
    }
}

#[test]
fn exact_on_random_nested_chain() {
    let mut r = rng(0xf1a7_0002);
    for case in 0..6 {
        let k = NormKind::all()[case % 3];
        let chain = nested_chain(&mut r, 7, &[1, 2, 4, 5]);
        let seq = DeviationSequence::geometric(1.0, 0.5, 4).unwrap();
        let (_, rows) = construct_exact(&chain, &seq, k).unwrap();
        assert!(rows.iter().all(|row| row.pass), "case {case} under {k}");
    }
}

#[test]
fn exact_strict_regime_random_chain() {
    let mut r = rng(0xf1a7_0003);
    let chain = nested_chain(&mut r, 8, &[2, 3, 5, 6]);
    let seq = DeviationSequence::geometric(1.0, 1.0 / 3.0, 4).unwrap();
    for k in NormKind::all() {
        let (_, rows) = construct_exact(&chain, &seq, k).unwrap();
        assert!(rows.iter().all(|row| row.pass), "norm {k}");
    }
}

#[test]
fn delta_sup_property_random() {
    let mut r = rng(0xf1a7_0004);
    for case in 0..30 {
        let k = NormKind::all()[case % 3];
        let chain = nested_chain(&mut r, 5, &[1, 2]);
        let (q1, q2) = (chain.member_at(1), chain.member_at(2));
        let q3 = Subspace::full(5);
        let ctx = build_pair_context(q1, q2, &q3, 0.0, k).unwrap();
        let (dmin, dmax, delta) = (ctx.delta_min, ctx.delta_max, ctx.delta);
        assert!(dmin <= delta + 1e-9 && delta <= dmax + 1e-9);
        for i in 0..64 {
            let a = delta + (dmax + 10.0 - delta) * (i as f64) / 63.0;
            let h = distance(&ctx.z.add_scaled(-a, &ctx.w), q1, k).unwrap().0;
            assert!(
                h >= 1.0 - 1e-8,
                "case {case} under {k}: h({a}) = {h} dips below the level"
            );
        }
    }
}

#[test]
fn pair_family_bound_random() {
    let mut r = rng(0xf1a7_0005);
    for case in 0..12 {
        let k = NormKind::all()[case % 3];
        let chain = nested_chain(&mut r, 5, &[1, 3]);
        let q3 = Subspace::full(5);
        let pairs: Vec<(f64, f64)> = (0..4)
            .map(|_| {
                let v = r.gen_range(0.2..1.5);
                (v + r.gen_range(0.1..1.0), v)
            })
            .collect();
        let (ctx, els) =
            pair_family(chain.member_at(1), chain.member_at(2), &q3, &pairs, k).unwrap();
        for i in 0..els.len() {
            for j in (i + 1)..els.len() {
                let (a, b) = (&els[i], &els[j]);
                let bound = ctx.lipschitz_c * (a.u.max(b.u) - a.v.min(b.v));
                assert!(norm_of(&a.q.sub(&b.q), k) <= bound + 1e-9);
            }
        }
        // adding elements of the middle subspace does not move the second
        // distance (the translation property the construction relies on)
        let el = &els[0];
        let shift = Point::from(chain.member_at(2).canonical_rows()[0].clone());
        let moved = el.q.add_scaled(0.7, &shift);
        let d = distance(&moved, chain.member_at(2), k).unwrap().0;
        assert!((d - el.v).abs() <= 1e-9 * (1.0 + el.v));
    }
}

#[test]
fn probe_l2_matches_projection_coefficient() {
    // with Q = {0} and the x2 constraint dropped, the minimal-norm
    // Euclidean functional through f(x1) = 1 is forced, and it evaluates
    // any x2 at the best-approximation coefficient <x1,x2>/<x1,x1>
    let mut r = rng(0xf1a7_0006);
    for _ in 0..50 {
        let dim = r.gen_range(2..=5);
        let x1 = Point::from(random_vec(&mut r, dim, 2.0));
        if norm_of(&x1, NormKind::L2) < 0.3 {
            continue;
        }
        let rows = vec![x1.coords().to_vec()];
        let (_, f) =
            lethargy_core::oracle::min_dual_norm_interpolation(&rows, &[1.0], NormKind::L2, dim)
                .unwrap();
        let x2 = Point::from(random_vec(&mut r, dim, 2.0));
        let achieved: f64 = f.iter().zip(x2.coords()).map(|(a, b)| a * b).sum();
        let coefficient = x1.dot(&x2) / x1.dot(&x1);
        assert!((achieved - coefficient).abs() <= 1e-9);
    }
}

#[test]
fn probe_orientation_mirror() {
    let r3 = 3f64.sqrt();
    let x1 = Point::from(vec![r3, 0.0]);
    let x2 = Point::from(vec![r3, 1.0]);
    let q = Subspace::zero(2);
    let plus = prescribed_functional_probe(&x1, &x2, &q, 0.0, Orientation::Plus, NormKind::L2)
        .unwrap();
    // nu = rho(x2 + 0*x1)/rho(x1) = 2/sqrt(3)
    assert!((plus.nu - 2.0 / r3).abs() < 1e-9);
    assert!(plus.margin >= 1.0);
}

#[test]
fn delta_documented_quadratic() {
    // closed form: h(a)^2 = 3(1-a)^2 + 1 over Q1 = {0}
    let z = Point::from(vec![3f64.sqrt(), 1.0]);
    let w = Point::from(vec![3f64.sqrt(), 0.0]);
    let (dmin, dmax, delta) =
        find_delta(&z, &w, &Subspace::zero(2), 0.0, NormKind::L2).unwrap();
    assert!((dmin - 1.0).abs() < 1e-9);
    assert!((dmax - 3f64.sqrt()).abs() < 1e-9);
    assert!((delta - 1.0).abs() < 1e-6);
}
