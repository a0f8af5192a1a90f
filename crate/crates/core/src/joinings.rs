//! Relatively independent joinings over a common factor, finite-window
//! versions of the diagonal sets, and the pointwise routing checks.

use crate::class_degree::TransitionBlock;
use crate::error::{Error, Result};
use crate::measures::{conditional_sample, MarkovMeasure, PushforwardMeasure};
use crate::rng::{self, Rng};
use crate::shift::{FactorTriple, Symbol, Word};
use crate::symset::SymbolSet;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_WINDOW: usize = 10_000;
pub const MAX_WINDOW: usize = 1_000_000;
pub const DEFAULT_D2_WIDTH: usize = 6;
const CHECK_LEN: usize = 6;
const CHECK_TOL: f64 = 1e-9;
const CHECK_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairPath {
    pub x: Word,
    #[serde(rename = "x_prime")]
    pub xp: Word,
    pub y: Word,
}

impl PairPath {
    pub fn new(triple: &FactorTriple, x: Word, xp: Word) -> Result<Self> {
        if x.len() != xp.len() {
            return Err(Error::InvalidInput("paths differ in length".into()));
        }
        let y = triple.apply_code(&x)?;
        if triple.apply_code(&xp)? != y {
            return Err(Error::SymbolMismatch("paths have different images".into()));
        }
        Ok(PairPath { x, xp, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Sampler of the relatively independent joining of `mu1` and `mu2` over
/// their common image `nu`.
#[derive(Debug, Clone)]
pub struct RijSampler {
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    nu: PushforwardMeasure,
}

impl RijSampler {
    pub fn new(mu1: MarkovMeasure, mu2: MarkovMeasure, triple: FactorTriple) -> Result<Self> {
        let nu = PushforwardMeasure::new(mu1.clone(), triple.clone())?;
        let nu2 = PushforwardMeasure::new(mu2.clone(), triple.clone())?;
        for len in 1..=CHECK_LEN {
            let words = match triple.enumerate_y_blocks(len, CHECK_CAP) {
                Ok(w) => w,
                Err(Error::ResourceLimit { .. }) => break,
                Err(e) => return Err(e),
            };
            for w in words {
                let (a, b) = (nu.prob(&w), nu2.prob(&w));
                if (a - b).abs() > CHECK_TOL {
                    return Err(Error::InvalidInput(format!(
                        "measures project differently: {} vs {} on `{}`",
                        a,
                        b,
                        triple.y_alphabet().render(&w)
                    )));
                }
            }
        }
        Ok(RijSampler { mu1, mu2, nu })
    }

    pub fn mu1(&self) -> &MarkovMeasure {
        &self.mu1
    }

    pub fn mu2(&self) -> &MarkovMeasure {
        &self.mu2
    }

    pub fn nu(&self) -> &PushforwardMeasure {
        &self.nu
    }

    pub fn triple(&self) -> &FactorTriple {
        self.nu.triple()
    }

    /// `y` is the image of a `mu1` path, which is itself a draw of `x` given
    /// `y`; `x'` is drawn from `mu2` given `y`.
    pub fn sample(&self, length: usize, rng: &mut Rng) -> Result<PairPath> {
        let x = self.mu1.sample_path(length, rng);
        let y = self.triple().image(&x);
        let xp = conditional_sample(&self.mu2, self.triple(), &y, rng)?;
        Ok(PairPath { x, xp, y })
    }
}

pub fn rij_sample(sampler: &RijSampler, length: usize, seed: u64) -> Result<PairPath> {
    sampler.sample(length, &mut rng::seeded(seed))
}

/// Whether the windows `x[s..=e]`, `x'[s..=e]` are routable through a common
/// symbol at a common time, over windows of at most `width` symbols.
pub fn d2_membership(triple: &FactorTriple, pair: &PairPath, width: usize) -> bool {
    d2_witness(triple, pair, width).is_some()
}

/// First `(start, end, time, symbol)` witnessing membership in the
/// finite-window diagonal set.
pub fn d2_witness(triple: &FactorTriple, pair: &PairPath, width: usize) -> Option<(usize, usize, usize, Symbol)> {
    let len = pair.len();
    for s in 0..len {
        for e in s..len.min(s + width.max(1)) {
            let w = &pair.y[s..=e];
            let rx = routing_layers(triple, w, pair.x[s], pair.x[e]);
            let rxp = routing_layers(triple, w, pair.xp[s], pair.xp[e]);
            for (i, (a, b)) in rx.iter().zip(&rxp).enumerate() {
                if let Some(c) = a.intersection(b).first() {
                    return Some((s, e, s + i, c));
                }
            }
        }
    }
    None
}

/// Routing sets at every time of `w` for the given endpoints.
fn routing_layers(triple: &FactorTriple, w: &[Symbol], first: Symbol, last: Symbol) -> Vec<SymbolSet> {
    let size = triple.x_size();
    let fwd = triple.forward_layers(w, &SymbolSet::singleton(size, first));
    let bwd = triple.backward_layers(w, &SymbolSet::singleton(size, last));
    fwd.into_iter().zip(bwd).map(|(f, b)| f.intersection(&b)).collect()
}

/// Both bridges `u_0 ... v_last` and `v_0 ... u_last` exist over the common image.
pub fn bridgeable_pair(triple: &FactorTriple, u: &[Symbol], v: &[Symbol]) -> Result<bool> {
    let w = triple.apply_code(u)?;
    if triple.apply_code(v)? != w {
        return Err(Error::SymbolMismatch("blocks have different images".into()));
    }
    if w.is_empty() {
        return Ok(true);
    }
    let size = triple.x_size();
    let k = w.len() - 1;
    let a = triple.forward_layers(&w, &SymbolSet::singleton(size, u[0]));
    let b = triple.forward_layers(&w, &SymbolSet::singleton(size, v[0]));
    Ok(a[k].contains(v[k]) && b[k].contains(u[k]))
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalReport {
    pub trials: usize,
    pub window: usize,
    pub d2_hits: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub workers: usize,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Whether the blocks at `i` share a routing symbol in `M`.
fn common_symbol_at(triple: &FactorTriple, tb: &TransitionBlock, pair: &PairPath, i: usize) -> Option<Symbol> {
    let e = i + tb.w.len() - 1;
    let rx = triple.routing_set(&tb.w, pair.x[i], pair.x[e], tb.n);
    let rxp = triple.routing_set(&tb.w, pair.xp[i], pair.xp[e], tb.n);
    tb.m.iter().copied().find(|&a| rx.contains(a) && rxp.contains(a))
}

/// Fraction of sampled pairs showing a common routing symbol in `M` at some
/// occurrence of `w`. A window without occurrences is doubled, up to
/// [`MAX_WINDOW`].
pub fn estimate_class_diagonal_mass(
    sampler: &RijSampler,
    tb: &TransitionBlock,
    trials: usize,
    window: usize,
    seed: u64,
) -> Result<DiagonalReport> {
    let triple = sampler.triple();
    let mut window = window.max(tb.w.len());
    loop {
        let outcome: Vec<Option<bool>> = (0..trials)
            .into_par_iter()
            .map(|i| -> Result<Option<bool>> {
                let pair = sampler.sample(window, &mut rng::stream(seed, i as u64))?;
                let occ = crate::splicing::mark_occurrences(&pair.y, &tb.w);
                if occ.is_empty() {
                    return Ok(None);
                }
                Ok(Some(occ.iter().any(|&j| common_symbol_at(triple, tb, &pair, j).is_some())))
            })
            .collect::<Result<_>>()?;
        if outcome.iter().all(Option::is_some) || window >= MAX_WINDOW {
            let seen = outcome.iter().flatten().count();
            if seen < trials {
                return Err(Error::NoOccurrences { window });
            }
            let hits = outcome.iter().flatten().filter(|&&b| b).count();
            let (lo, hi) = wilson_interval(hits, trials, 1.96);
            return Ok(DiagonalReport {
                trials,
                window,
                d2_hits: hits,
                estimate: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
                ci_low: lo,
                ci_high: hi,
                workers: rayon::current_num_threads(),
            });
        }
        window = (window * 2).min(MAX_WINDOW);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub position: usize,
    pub x_block: Word,
    pub x_prime_block: Word,
}

/// Occurrences of `w` whose aligned blocks share no routing symbol in `M`.
pub fn common_routing_check(triple: &FactorTriple, tb: &TransitionBlock, pair: &PairPath) -> Vec<Violation> {
    let k = tb.w.len();
    crate::splicing::mark_occurrences(&pair.y, &tb.w)
        .into_iter()
        .filter(|&i| common_symbol_at(triple, tb, pair, i).is_none())
        .map(|i| Violation { position: i, x_block: pair.x[i..i + k].to_vec(), x_prime_block: pair.xp[i..i + k].to_vec() })
        .collect()
}
