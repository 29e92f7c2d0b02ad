//! Seeded comparison studies producing [`RunReport`]s.

use std::collections::HashMap;

use bmx_core::{
    abcd, abcdx, cross_component, AbcdxOptions, BochnerMatrix, BochnerView, Error, HosvdBasis, IndexSet, TuckerForm,
};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{RunRecord, RunReport};

pub const ALGO_ABCD: &str = "abcd";
pub const ALGO_ABCD_CROSS: &str = "abcd_cross";
pub const ALGO_RANDOM_CROSS: &str = "random_cross";
pub const ALGO_HOSVD: &str = "hosvd";
pub const ALGO_ABCDX: &str = "abcdx";

/// Generator used for every random draw in the studies.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Stream of the seed's generator used for the random-cross baseline, so
/// its draws never overlap the ABCD row draws.
const RANDOM_CROSS_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct ComparisonOptions {
    /// Iteration counts `r` at which the four algorithms are compared.
    pub ranks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub n_rook: usize,
    /// Rank tolerance of the pseudoinverses inside cross components.
    pub cross_rtol: f64,
    /// Rank tolerance of the SVDs behind the HOSVD baseline.
    pub hosvd_rtol: f64,
}

impl ComparisonOptions {
    pub fn new(ranks: Vec<usize>, seeds: Vec<u64>, n_rook: usize) -> Self {
        Self {
            ranks,
            seeds,
            n_rook,
            cross_rtol: DEFAULT_CROSS_RTOL,
            hosvd_rtol: DEFAULT_HOSVD_RTOL,
        }
    }
}

pub const DEFAULT_CROSS_RTOL: f64 = 1e-15;
pub const DEFAULT_HOSVD_RTOL: f64 = 1e-15;

/// HOSVD errors at rank pairs, computed once per pair.
pub struct HosvdBaseline<'a> {
    a: &'a BochnerMatrix,
    norm: f64,
    basis: HosvdBasis,
    cache: HashMap<(usize, usize), f64>,
}

impl<'a> HosvdBaseline<'a> {
    pub fn new(a: &'a BochnerMatrix, rtol: f64) -> bmx_core::Result<Self> {
        Ok(Self {
            a,
            norm: a.norm_l2(),
            basis: HosvdBasis::new(a, rtol)?,
            cache: HashMap::new(),
        })
    }

    pub fn basis(&self) -> &HosvdBasis {
        &self.basis
    }

    /// Ranks clamped to what the basis resolves.
    pub fn clamp(&self, rho: usize, kappa: usize) -> (usize, usize) {
        (rho.min(self.basis.row_rank()), kappa.min(self.basis.column_rank()))
    }

    /// Relative error at `(rho, kappa)` after clamping; a zero rank gives 1.
    pub fn rel_error(&mut self, rho: usize, kappa: usize) -> bmx_core::Result<f64> {
        let key = self.clamp(rho, kappa);
        if key.0 == 0 || key.1 == 0 {
            return Ok(1.0);
        }
        if let Some(&e) = self.cache.get(&key) {
            return Ok(e);
        }
        let err = self.basis.truncate(key.0, key.1)?.residual_norm(self.a)? / self.norm;
        self.cache.insert(key, err);
        Ok(err)
    }
}

fn cross_rel_error(
    a: &BochnerMatrix,
    norm: f64,
    rows: &IndexSet,
    cols: &IndexSet,
    rtol: f64,
) -> bmx_core::Result<f64> {
    match cross_component(a, rows, cols, rtol) {
        Ok(t) => Ok(t.residual_norm(a)? / norm),
        Err(Error::ZeroBlock) => Ok(1.0),
        Err(e) => Err(e),
    }
}

fn random_indices(rng: &mut ChaCha8Rng, bound: usize, count: usize) -> bmx_core::Result<IndexSet> {
    let picked = index::sample(rng, bound, count.min(bound)).into_iter().map(|k| k + 1).collect();
    IndexSet::new(picked, bound)
}

/// Compares, per seed and iteration count `r`: ABCD's dyadic approximant,
/// the cross component at ABCD's indices, the cross component at random
/// indices of the same cardinalities, and HOSVD at those cardinalities.
pub fn run_comparison(a: &BochnerMatrix, opts: &ComparisonOptions) -> bmx_core::Result<RunReport> {
    let mut report = RunReport::default();
    let mut ranks = opts.ranks.clone();
    ranks.sort_unstable();
    ranks.dedup();
    let Some(&r_max) = ranks.last() else {
        return Ok(report);
    };
    if ranks[0] == 0 {
        return Err(Error::BadRank {
            requested: 0,
            available: r_max,
        });
    }
    let (m, n) = a.shape();
    let dim = a.dim();
    let spec = a.spec().clone();
    let norm = a.norm_l2();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut baseline = HosvdBaseline::new(a, opts.hosvd_rtol)?;

    for &seed in &opts.seeds {
        // one long run; shorter runs are its prefixes
        let full = abcd(a, r_max, opts.n_rook, seed)?;
        let mut residual = a.as_flat().to_vec();
        let mut applied = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(RANDOM_CROSS_STREAM);

        for &r in &ranks {
            let run = full.prefix(r);
            for d in &full.dyads.terms[applied..run.dyads.len()] {
                let g = d.g.coeffs();
                for (i, &ui) in d.u.iter().enumerate() {
                    if ui == 0.0 {
                        continue;
                    }
                    let row = &mut residual[i * n * dim..(i + 1) * n * dim];
                    for (j, &vj) in d.v.iter().enumerate() {
                        let c = ui * vj;
                        for (x, &gk) in row[j * dim..(j + 1) * dim].iter_mut().zip(g) {
                            *x -= c * gk;
                        }
                    }
                }
            }
            applied = run.dyads.len();
            let abcd_err = spec.inner_blocks(&residual, &residual).max(0.0).sqrt() / norm;
            let (ci, cj) = (run.rows.len(), run.cols.len());
            let record = |algo: &str, card: (usize, usize), err: f64| RunRecord {
                algo: algo.to_string(),
                rank_i: r,
                rank_j: r,
                seed,
                card_i: card.0,
                card_j: card.1,
                rel_error: Some(err),
            };
            report.push(record(ALGO_ABCD, (ci, cj), abcd_err));

            let post = cross_rel_error(a, norm, &run.rows, &run.cols, opts.cross_rtol)?;
            report.push(record(ALGO_ABCD_CROSS, (ci, cj), post));

            let random_err = if ci == 0 {
                1.0
            } else {
                let rows = random_indices(&mut rng, m, ci)?;
                let cols = random_indices(&mut rng, n, cj)?;
                cross_rel_error(a, norm, &rows, &cols, opts.cross_rtol)?
            };
            report.push(record(ALGO_RANDOM_CROSS, (ci, cj), random_err));

            let h = baseline.rel_error(ci, cj)?;
            report.push(record(ALGO_HOSVD, baseline.clamp(ci, cj), h));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct AbcdxStudy {
    pub n_abcd: usize,
    pub r: usize,
    pub n_rook: usize,
    pub stop_rtol: Option<f64>,
    pub cross_rtol: f64,
    pub hosvd_rtol: f64,
}

/// Runs ABCDX once per seed and records `|I|`, `|J|` and, when a reference
/// matrix is given, the relative error after every round together with the
/// HOSVD error at the same cardinalities. Round `k` is keyed by the index
/// budget `r·k`.
pub fn run_abcdx<V: BochnerView + ?Sized>(
    view: &V,
    reference: Option<&BochnerMatrix>,
    study: &AbcdxStudy,
    seeds: &[u64],
) -> bmx_core::Result<RunReport> {
    let mut report = RunReport::default();
    let mut baseline = reference.map(|a| HosvdBaseline::new(a, study.hosvd_rtol)).transpose()?;
    let norm = reference.map(BochnerMatrix::norm_l2);

    for &seed in seeds {
        let opts = AbcdxOptions {
            n_abcd: study.n_abcd,
            r: study.r,
            n_rook: study.n_rook,
            seed,
            stop_rtol: study.stop_rtol,
            rtol: study.cross_rtol,
        };
        let result = abcdx(view, &opts)?;
        for (k, round) in result.rounds.iter().enumerate() {
            let budget = study.r * (k + 1);
            let (ci, cj) = (round.rows.len(), round.cols.len());
            let err = match (reference, norm) {
                (Some(a), Some(nrm)) if nrm > 0.0 => Some(tucker_rel_error(round.approx.as_ref(), a, nrm)?),
                _ => None,
            };
            report.push(RunRecord {
                algo: ALGO_ABCDX.to_string(),
                rank_i: budget,
                rank_j: budget,
                seed,
                card_i: ci,
                card_j: cj,
                rel_error: err,
            });
            if let Some(b) = baseline.as_mut() {
                report.push(RunRecord {
                    algo: ALGO_HOSVD.to_string(),
                    rank_i: budget,
                    rank_j: budget,
                    seed,
                    card_i: b.clamp(ci, cj).0,
                    card_j: b.clamp(ci, cj).1,
                    rel_error: Some(b.rel_error(ci, cj)?),
                });
            }
        }
    }
    Ok(report)
}

fn tucker_rel_error(t: Option<&TuckerForm>, a: &BochnerMatrix, norm: f64) -> bmx_core::Result<f64> {
    match t {
        Some(t) => Ok(t.residual_norm(a)? / norm),
        None => Ok(1.0),
    }
}

/// HOSVD relative errors at `(r, r)` for each `r`, ranks clamped to the
/// numerical ranks of the basis.
pub fn hosvd_error_curve(a: &BochnerMatrix, ranks: &[usize], rtol: f64) -> bmx_core::Result<Vec<f64>> {
    let mut baseline = HosvdBaseline::new(a, rtol)?;
    ranks.iter().map(|&r| baseline.rel_error(r, r)).collect()
}
