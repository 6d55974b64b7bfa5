//! Two-sided bounds for arbitrary non-increasing positive null sequences.
//!
//! A sequence that fails the tail condition cannot be realized exactly, but
//! interleaving a geometric subsequence `g_i = K·b^{-i}` (base `b >= 2`,
//! `K = b·d_1` so the largest value coincides with `d_1`) restores it: the
//! geometric values with their analytic tail satisfy the condition —
//! with equality at `b = 2` — so the exact engine pins the distances on the
//! geometric entries, and monotonicity traps every original index between
//! its geometric neighbours. Scaling the constructed element by `b·c` turns
//! the trapped window into certified bounds `c·d_n <= ρ <= b²·c·d_n`.
//!
//! Each inserted value needs a chain member of intermediate rank between its
//! neighbouring originals; a rank gap too small to host its inserts is
//! reported as infeasible rather than patched.

use crate::engine::{construct_exact, ACCEPT_ABS};
use crate::error::{Error, Result};
use crate::finite::construct_finite;
use crate::oracle::{certify_distance, distance};
use crate::space::{Chain, DeviationSequence, NormKind, Point, Subspace, MEMBER_TOL};

/// Relative tolerance for value coincidence; a geometric value this close to
/// an original reuses the original pair instead of inserting a duplicate.
const REUSE_TOL: f64 = 1e-12;

/// Where a merged entry comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntrySource {
    /// Original chain index (1-based); not part of the geometric subchain.
    Original(usize),
    /// Inserted geometric index i (value K·b^{-i}).
    Inserted(usize),
    /// Geometric value coinciding with an original.
    Reused { original: usize, geometric: usize },
}

/// One entry of the merged value-descending, rank-ascending arrangement.
#[derive(Clone, Debug)]
pub struct MergedEntry {
    pub value: f64,
    pub rank: usize,
    pub source: EntrySource,
}

/// The canonical coordinate-interleaving extension.
#[derive(Clone, Debug)]
pub struct ExtensionPlan {
    pub scale_k: f64,
    pub base: f64,
    pub start_index: usize,
    pub entries: Vec<MergedEntry>,
    /// Subchain fed to the exact engine: geometric entries only.
    pub merged_chain: Chain,
    pub merged_seq: DeviationSequence,
}

impl ExtensionPlan {
    pub fn inserted(&self) -> impl Iterator<Item = &MergedEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.source, EntrySource::Inserted(_)))
    }

    pub fn reused(&self) -> impl Iterator<Item = &MergedEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.source, EntrySource::Reused { .. }))
    }
}

/// Bounds for one original index.
#[derive(Clone, Copy, Debug)]
pub struct BoundedRow {
    pub n: usize,
    pub target: f64,
    pub rho: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub ratio: f64,
    pub cert_lower: f64,
    pub cert_upper: f64,
    pub pass: bool,
}

/// Scaled element with per-index certified bounds.
#[derive(Clone, Debug)]
pub struct BoundedResult {
    pub x_c: Point,
    pub c: f64,
    pub base: f64,
    /// Factor applied to the engine output (`base * c`).
    pub scale_factor: f64,
    pub per_n: Vec<BoundedRow>,
}

/// Extension generators of `hi` beyond `lo`, in canonical order.
fn extension_generators(lo: &Subspace, hi: &Subspace) -> Vec<Point> {
    let mut gens = Vec::new();
    let mut current = lo.clone();
    for row in hi.canonical_rows() {
        let p = Point::from(row.clone());
        if let Ok(false) = current.member(&p, MEMBER_TOL) {
            current = current.extended(&p).expect("generator is independent");
            gens.push(p);
        }
    }
    gens
}

/// Plans the geometric interleaving: values, reuse and rank assignments.
pub fn plan_extension(chain: &Chain, seq: &DeviationSequence, b: f64) -> Result<ExtensionPlan> {
    if !(b.is_finite() && b >= 2.0) {
        return Err(Error::BaseTooSmall { base: b });
    }
    let diag = chain.validate();
    if !diag.pass {
        return Err(Error::InvalidChain {
            reason: diag.to_string(),
        });
    }
    let n = chain.len();
    if seq.len() != n || n == 0 {
        return Err(Error::DimMismatch {
            expected: n,
            got: seq.len(),
        });
    }
    if seq.values().iter().any(|&d| d <= 0.0) {
        return Err(Error::PreconditionViolation {
            context: "bounded construction needs strictly positive values".into(),
        });
    }
    let d = seq.values();
    let ambient = chain.ambient_dim();

    let scale_k = b * d[0];
    let d_last = d[n - 1];
    // geometric values down to one step below the last original
    let mut geoms: Vec<f64> = Vec::new();
    let mut i = 1usize;
    loop {
        let g = scale_k * b.powi(-(i as i32));
        geoms.push(g);
        if g < d_last * (1.0 - REUSE_TOL) {
            break;
        }
        i += 1;
        if i > 4000 {
            return Err(Error::PreconditionViolation {
                context: "geometric insertion did not reach the last value".into(),
            });
        }
    }

    // merge by descending value; coincidences reuse the original pair
    let close = |a: f64, b_: f64| (a - b_).abs() <= REUSE_TOL * a.max(b_);
    let mut entries: Vec<MergedEntry> = Vec::new();
    let (mut oi, mut gi) = (0usize, 0usize);
    while oi < n || gi < geoms.len() {
        if oi < n && gi < geoms.len() && close(d[oi], geoms[gi]) {
            entries.push(MergedEntry {
                value: d[oi],
                rank: chain.member_at(oi + 1).rank(),
                source: EntrySource::Reused {
                    original: oi + 1,
                    geometric: gi + 1,
                },
            });
            oi += 1;
            gi += 1;
        } else if gi >= geoms.len() || (oi < n && d[oi] > geoms[gi]) {
            entries.push(MergedEntry {
                value: d[oi],
                rank: chain.member_at(oi + 1).rank(),
                source: EntrySource::Original(oi + 1),
            });
            oi += 1;
        } else {
            entries.push(MergedEntry {
                value: geoms[gi],
                rank: 0, // assigned below
                source: EntrySource::Inserted(gi + 1),
            });
            gi += 1;
        }
    }

    // assign ranks to inserted runs between original neighbours
    let mut geo_subspaces: Vec<(usize, Subspace)> = Vec::new(); // (entry idx, subspace)
    let mut idx = 0usize;
    let mut prev_original: Option<usize> = None; // original chain index
    while idx < entries.len() {
        match entries[idx].source {
            EntrySource::Original(o) | EntrySource::Reused { original: o, .. } => {
                if let EntrySource::Reused { .. } = entries[idx].source {
                    geo_subspaces.push((idx, chain.member_at(o).clone()));
                }
                prev_original = Some(o);
                idx += 1;
            }
            EntrySource::Inserted(_) => {
                let run_start = idx;
                let mut run_end = idx;
                while run_end < entries.len()
                    && matches!(entries[run_end].source, EntrySource::Inserted(_))
                {
                    run_end += 1;
                }
                let run_len = run_end - run_start;
                let (lo_sub, lo_rank) = match prev_original {
                    Some(o) => (chain.member_at(o).clone(), chain.member_at(o).rank()),
                    None => (Subspace::zero(ambient), 0),
                };
                let (hi_sub, hi_rank) = if run_end < entries.len() {
                    let o = match entries[run_end].source {
                        EntrySource::Original(o) | EntrySource::Reused { original: o, .. } => o,
                        EntrySource::Inserted(_) => unreachable!(),
                    };
                    (Some(chain.member_at(o).clone()), chain.member_at(o).rank())
                } else {
                    (None, ambient)
                };
                // inserted ranks must stay strictly between the neighbours
                // (or strictly below the ambient dimension for the tail run)
                let slots = hi_rank - lo_rank - 1;
                if run_len > slots {
                    return Err(Error::InsufficientGaps {
                        value: entries[run_start].value,
                        lo_rank,
                        hi_rank,
                    });
                }
                let gens = match &hi_sub {
                    Some(hi) => extension_generators(&lo_sub, hi),
                    None => {
                        // extend past the last original with standard vectors
                        let mut gens = Vec::new();
                        let mut current = lo_sub.clone();
                        for j in 0..ambient {
                            let e = Point::standard_basis(ambient, j);
                            if let Ok(false) = current.member(&e, MEMBER_TOL) {
                                current = current.extended(&e)?;
                                gens.push(e);
                            }
                        }
                        gens
                    }
                };
                let mut current = lo_sub;
                for (step, entry_idx) in (run_start..run_end).enumerate() {
                    current = current.extended(&gens[step])?;
                    entries[entry_idx].rank = current.rank();
                    geo_subspaces.push((entry_idx, current.clone()));
                }
                prev_original = None; // the run's upper neighbour handles itself
                idx = run_end;
            }
        }
    }

    // geometric subchain in entry order (value-descending = rank-ascending)
    geo_subspaces.sort_by_key(|(i, _)| *i);
    let geo_values: Vec<f64> = geo_subspaces
        .iter()
        .map(|(i, _)| entries[*i].value)
        .collect();
    let merged_chain = Chain::new(
        geo_subspaces.into_iter().map(|(_, s)| s).collect(),
        ambient,
    );
    let merged_diag = merged_chain.validate();
    if !merged_diag.pass {
        return Err(Error::InvalidChain {
            reason: format!("merged chain: {merged_diag}"),
        });
    }
    let g_last = *geo_values.last().expect("at least one geometric value");
    let merged_seq = DeviationSequence::explicit(geo_values, g_last / (b - 1.0))?;
    // order consistency of the full arrangement
    for w in entries.windows(2) {
        if w[1].rank <= w[0].rank || w[1].value > w[0].value * (1.0 + REUSE_TOL) {
            return Err(Error::InvalidChain {
                reason: "merged arrangement is not order-consistent".into(),
            });
        }
    }

    Ok(ExtensionPlan {
        scale_k,
        base: b,
        start_index: 1,
        entries,
        merged_chain,
        merged_seq,
    })
}

/// Runs the exact engine on the geometric subchain and scales the result so
/// every original index is certified inside `[c·d_n, b²·c·d_n]`.
pub fn construct_bounded(
    chain: &Chain,
    seq: &DeviationSequence,
    c: f64,
    b: f64,
    k: NormKind,
) -> Result<BoundedResult> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::PreconditionViolation {
            context: format!("c = {c} outside (0, 1]"),
        });
    }
    let plan = plan_extension(chain, seq, b)?;
    let (x_raw, _) = construct_exact(&plan.merged_chain, &plan.merged_seq, k)?;
    let scale_factor = b * c;
    let x_c = x_raw.scale(scale_factor);

    let mut per_n = Vec::with_capacity(chain.len());
    for i in 1..=chain.len() {
        let d_n = seq.value_at(i);
        let lower_bound = c * d_n;
        let upper_bound = b * b * c * d_n;
        let (rho, _) = distance(&x_c, chain.member_at(i), k)?;
        let (cert, _) = certify_distance(&x_c, chain.member_at(i), k, rho, 1e-8)?;
        let band = (1e-9 * d_n).max(ACCEPT_ABS);
        let pass = cert.lower >= lower_bound - band && cert.upper <= upper_bound + band;
        per_n.push(BoundedRow {
            n: i,
            target: d_n,
            rho,
            lower_bound,
            upper_bound,
            ratio: rho / d_n,
            cert_lower: cert.lower,
            cert_upper: cert.upper,
            pass,
        });
    }
    Ok(BoundedResult {
        x_c,
        c,
        base: b,
        scale_factor,
        per_n,
    })
}

/// Outcome of the head perturbation for sequences with a zero tail.
#[derive(Clone, Debug)]
pub struct HeadPerturbResult {
    pub x: Point,
    pub perturbed: Vec<f64>,
    pub per_n: Vec<BoundedRow>,
}

/// Strictifies a positive head `d_1 >= … >= d_m > 0 = d_{m+1} = …` by the
/// factors `1 + (m - n)·eps/m` and delegates to the finite construction
/// inside the chain member where the zeros begin. Certified bounds are
/// `d_n <= ρ <= (1 + eps)·d_n` on the head and zero beyond.
pub fn head_perturb(
    chain: &Chain,
    seq: &DeviationSequence,
    eps: f64,
    k: NormKind,
) -> Result<HeadPerturbResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::PreconditionViolation {
            context: "eps must be strictly positive".into(),
        });
    }
    let diag = chain.validate();
    if !diag.pass {
        return Err(Error::InvalidChain {
            reason: diag.to_string(),
        });
    }
    let n = chain.len();
    if seq.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: seq.len(),
        });
    }
    let zero_from = (1..=n).find(|&i| seq.value_at(i) == 0.0);
    let m = match zero_from {
        Some(1) | None if seq.values().iter().all(|&v| v == 0.0) => {
            // everything zero: the zero element answers trivially
            let x = Point::zero(chain.ambient_dim());
            let per_n = (1..=n)
                .map(|i| BoundedRow {
                    n: i,
                    target: 0.0,
                    rho: 0.0,
                    lower_bound: 0.0,
                    upper_bound: 0.0,
                    ratio: 0.0,
                    cert_lower: 0.0,
                    cert_upper: 0.0,
                    pass: true,
                })
                .collect();
            return Ok(HeadPerturbResult {
                x,
                perturbed: Vec::new(),
                per_n,
            });
        }
        Some(mm) => mm - 1,
        None => {
            return Err(Error::PreconditionViolation {
                context: "head perturbation needs a zero tail inside the chain".into(),
            });
        }
    };
    if seq.tail(m) > 0.0 {
        return Err(Error::PreconditionViolation {
            context: "tail beyond the zeros must vanish".into(),
        });
    }

    let perturbed: Vec<f64> = (1..=m)
        .map(|i| (1.0 + ((m - i) as f64) * eps / (m as f64)) * seq.value_at(i))
        .collect();
    for i in 1..perturbed.len() {
        if perturbed[i] >= perturbed[i - 1] {
            return Err(Error::NotStrictlyDecreasing { index: i + 1 });
        }
    }

    let head_chain = chain.truncate(m);
    let outer = chain.member_at(m + 1);
    let anchor = outer
        .first_generator_outside(chain.member_at(m), MEMBER_TOL)
        .ok_or_else(|| Error::InvalidChain {
            reason: "no generator above the positive head".into(),
        })?;
    let x = construct_finite(&head_chain, &perturbed, &anchor, k)?.x;

    let mut per_n = Vec::with_capacity(n);
    for i in 1..=n {
        let d_n = seq.value_at(i);
        let (lower_bound, upper_bound) = if i <= m {
            (d_n, (1.0 + eps) * d_n)
        } else {
            (0.0, 0.0)
        };
        let (rho, _) = distance(&x, chain.member_at(i), k)?;
        let (cert, _) = certify_distance(&x, chain.member_at(i), k, rho, 1e-8)?;
        let band = (1e-9 * d_n).max(ACCEPT_ABS);
        let pass = cert.lower >= lower_bound - band && cert.upper <= upper_bound + band;
        per_n.push(BoundedRow {
            n: i,
            target: d_n,
            rho,
            lower_bound,
            upper_bound,
            ratio: if d_n > 0.0 { rho / d_n } else { 0.0 },
            cert_lower: cert.lower,
            cert_upper: cert.upper,
            pass,
        });
    }
    Ok(HeadPerturbResult {
        x,
        perturbed,
        per_n,
    })
}
