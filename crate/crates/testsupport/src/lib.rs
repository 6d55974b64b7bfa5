//! Brute-force oracles and deterministic random instances for the test
//! suites.
//!
//! Nothing here touches the library's solvers: distances are found by a
//! zooming coefficient grid over an orthonormal spanning set computed
//! locally, so the values can stand as an independent reference.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_of(v: &[f64], norm: &str) -> f64 {
    match norm {
        "L1" => v.iter().map(|x| x.abs()).sum(),
        "L2" => l2(v),
        "LINF" => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        other => panic!("unknown norm {other}"),
    }
}

/// Local Gram-Schmidt; drops vectors that are numerically dependent.
fn gram_schmidt(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
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
        let n = l2(&v);
        if n > 1e-9 {
            for vi in v.iter_mut() {
                *vi /= n;
            }
            ortho.push(v);
        }
    }
    ortho
}

/// Distance from `x` to the span of `basis` by a zooming coefficient grid.
///
/// Intended for ambient dimension <= 3 and rank <= 2; accuracy is around
/// 1e-4 relative to the scale of `x`, well inside the 1e-3 agreement the
/// acceptance suite demands.
pub fn grid_distance(x: &[f64], basis: &[Vec<f64>], norm: &str) -> f64 {
    let ortho = gram_schmidt(basis);
    let r = ortho.len();
    if r == 0 {
        return norm_of(x, norm);
    }
    let radius = 2.0 * l2(x) + 1.0;
    let pts = 33usize;
    let mut center = vec![0.0; r];
    let mut half = radius;
    let mut best = f64::INFINITY;
    for _ in 0..6 {
        let mut best_c = center.clone();
        let mut idx = vec![0usize; r];
        loop {
            let c: Vec<f64> = idx
                .iter()
                .zip(&center)
                .map(|(&i, &ct)| ct - half + 2.0 * half * (i as f64) / (pts as f64 - 1.0))
                .collect();
            let mut diff = x.to_vec();
            for (ci, q) in c.iter().zip(&ortho) {
                for (d, qi) in diff.iter_mut().zip(q) {
                    *d -= ci * qi;
                }
            }
            let v = norm_of(&diff, norm);
            if v < best {
                best = v;
                best_c = c;
            }
            // odometer over the grid
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < pts {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == r {
                    break;
                }
            }
            if k == r {
                break;
            }
        }
        center = best_c;
        half = 4.0 * half / (pts as f64 - 1.0);
    }
    best
}

pub fn random_vec<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Orthogonal residual of `v` against `ortho` (which must be orthonormal).
fn residual_norm(v: &[f64], ortho: &[Vec<f64>]) -> f64 {
    let mut r = v.to_vec();
    for q in ortho {
        let proj: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= proj * qi;
        }
    }
    l2(&r)
}

/// Extends `base` by `extra` random vectors kept well away from the current
/// span, so the resulting basis stays decently conditioned.
pub fn extend_basis<R: Rng>(
    rng: &mut R,
    dim: usize,
    base: &[Vec<f64>],
    extra: usize,
) -> Vec<Vec<f64>> {
    let mut rows = base.to_vec();
    let mut ortho = gram_schmidt(&rows);
    for _ in 0..extra {
        loop {
            let v = random_vec(rng, dim, 1.0);
            if residual_norm(&v, &ortho) > 0.3 {
                ortho = gram_schmidt(&{
                    let mut t = rows.clone();
                    t.push(v.clone());
                    t
                });
                rows.push(v);
                break;
            }
        }
    }
    rows
}

pub fn random_basis<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> Vec<Vec<f64>> {
    extend_basis(rng, dim, &[], rank)
}

/// Nested bases with the given strictly increasing ranks.
pub fn random_nested_bases<R: Rng>(
    rng: &mut R,
    dim: usize,
    ranks: &[usize],
) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut current: Vec<Vec<f64>> = Vec::new();
    for &r in ranks {
        current = extend_basis(rng, dim, &current, r - current.len());
        out.push(current.clone());
    }
    out
}

/// Strictly decreasing positive targets with comfortable gaps; optionally
/// ending in an exact zero.
pub fn random_strictly_decreasing<R: Rng>(
    rng: &mut R,
    len: usize,
    zero_last: bool,
) -> Vec<f64> {
    let mut vals = Vec::with_capacity(len);
    let mut current = 0.0;
    for _ in 0..len {
        current += rng.gen_range(0.05..1.0);
        vals.push(current);
    }
    vals.reverse();
    if zero_last {
        if let Some(last) = vals.last_mut() {
            *last = 0.0;
        }
    }
    vals
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_matches_euclidean_projection() {
        // distance from (3,4) to the x-axis is 4 in every p-norm here
        let d = grid_distance(&[3.0, 4.0], &[vec![1.0, 0.0]], "L2");
        assert!((d - 4.0).abs() < 1e-3);
        let d = grid_distance(&[3.0, 4.0], &[vec![1.0, 0.0]], "L1");
        assert!((d - 4.0).abs() < 1e-3);
    }

    #[test]
    fn nested_bases_grow() {
        let mut r = rng(7);
        let bases = random_nested_bases(&mut r, 6, &[1, 3, 5]);
        assert_eq!(bases[0].len(), 1);
        assert_eq!(bases[1].len(), 3);
        assert_eq!(bases[2].len(), 5);
        assert_eq!(bases[1][0], bases[0][0]);
    }

    #[test]
    fn decreasing_targets() {
        let mut r = rng(9);
        let v = random_strictly_decreasing(&mut r, 5, true);
        for i in 1..v.len() {
            assert!(v[i] < v[i - 1]);
        }
        assert_eq!(v[4], 0.0);
    }
}
