//! The coin measure `eta(N, p)`, the jump extension, splicing two paths of
//! a joining through a transition block, and the quantities bounding the
//! entropy gained by the splice.
//!
//! Labels live in occurrence time: the `k`-th occurrence of the marking word
//! carries the `k`-th symbol of an `eta` sample, and every other coordinate
//! carries 0. Two labelled occurrences are `N` occurrences apart, hence at
//! least `N` coordinates apart, so no thinning is ever needed.

use crate::class_degree::TransitionBlock;
use crate::error::{Error, Result};
use crate::joinings::{PairPath, RijSampler};
use crate::measures::{
    empirical_entropy, hp, integral, EntropyEstimate, EntropyOptions, MarkovMeasure, Method, Potential,
};
use crate::rng::{self, Rng};
use crate::shift::{FactorTriple, Symbol, Word};
use crate::symset::SymbolSet;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::RwLock;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
}

impl EtaParams {
    /// `p = 1/2` is accepted as the symmetric limit.
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("N must be at least 1".into()));
        }
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::DomainError(format!("p = {p} is outside (0, 1/2]")));
        }
        Ok(EtaParams { n, p })
    }

    fn coin(&self, rng: &mut Rng) -> u8 {
        if rng.gen::<f64>() < self.p {
            2
        } else {
            1
        }
    }

    fn label_prob(&self, label: u8) -> f64 {
        if label == 1 {
            1.0 - self.p
        } else {
            self.p
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaStats {
    pub h_eta: f64,
    pub prob_1: f64,
    pub prob_2: f64,
    pub prob_1_block: f64,
    pub prob_2_block: f64,
}

pub fn eta_stats(params: EtaParams) -> Result<EtaStats> {
    let EtaParams { n, p } = EtaParams::new(params.n, params.p)?;
    let nf = n as f64;
    Ok(EtaStats {
        h_eta: hp(p)? / nf,
        prob_1: (1.0 - p) / nf,
        prob_2: p / nf,
        prob_1_block: p * (1.0 - p) / nf,
        prob_2_block: p * (1.0 - p) / nf,
    })
}

/// Stationary `eta` path: uniform phase, then one coin per block of length `N`.
pub fn eta_sample(params: EtaParams, length: usize, rng: &mut Rng) -> Result<Vec<u8>> {
    let params = EtaParams::new(params.n, params.p)?;
    Ok(eta_labels(params, length, rng).0)
}

/// `eta` path together with the coin of the block in force before the first labelled coordinate.
fn eta_labels(params: EtaParams, length: usize, rng: &mut Rng) -> (Vec<u8>, u8) {
    let first = rng.gen_range(0..params.n);
    let initial = params.coin(rng);
    let mut out = vec![3u8; length];
    let mut i = first;
    while i < length {
        out[i] = params.coin(rng);
        i += params.n;
    }
    (out, initial)
}

/// Every `i` with `y[i..i + |w|] = w`, overlaps included.
pub fn mark_occurrences(y: &[Symbol], w: &[Symbol]) -> Vec<usize> {
    if w.is_empty() || w.len() > y.len() {
        return Vec::new();
    }
    y.windows(w.len()).enumerate().filter(|(_, s)| *s == w).map(|(i, _)| i).collect()
}

/// Whether stripping zeros leaves blocks `1 3^{N-1}` or `2 3^{N-1}`, with
/// a possibly shorter run of 3s before the first label.
pub fn pattern_holds(t: &[u8], n: usize) -> bool {
    let nz: Vec<u8> = t.iter().copied().filter(|&s| s != 0).collect();
    let Some(first) = nz.iter().position(|&s| s != 3) else {
        return nz.len() < n;
    };
    if first >= n {
        return false;
    }
    nz[first..].chunks(n).all(|c| matches!(c[0], 1 | 2) && c[1..].iter().all(|&s| s == 3))
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpSample {
    pub pair: PairPath,
    pub t: Vec<u8>,
    pub marks: Vec<usize>,
    /// Label of the last labelled occurrence before the window.
    pub initial: u8,
}

impl JumpSample {
    /// Coordinates carrying 1 or 2.
    pub fn labelled(&self) -> impl Iterator<Item = usize> + '_ {
        self.marks.iter().copied().filter(|&i| self.t[i] != 3)
    }
}

/// Labels every occurrence of `w` in `y` with the next symbol of an `eta` sample.
pub fn attach_jump_labels(pair: PairPath, w: &[Symbol], params: EtaParams, rng: &mut Rng) -> Result<JumpSample> {
    let params = EtaParams::new(params.n, params.p)?;
    if params.n <= w.len() {
        return Err(Error::DomainError(format!("N = {} must exceed |w| = {}", params.n, w.len())));
    }
    let marks = mark_occurrences(&pair.y, w);
    let (t, initial) = label_marks(&marks, pair.len(), params, rng)?;
    Ok(JumpSample { pair, t, marks, initial })
}

fn label_marks(marks: &[usize], len: usize, params: EtaParams, rng: &mut Rng) -> Result<(Vec<u8>, u8)> {
    if marks.len() < 2 {
        return Err(Error::TooFewMarks { found: marks.len(), needed: 2 });
    }
    let (eta, initial) = eta_labels(params, marks.len(), rng);
    let mut t = vec![0u8; len];
    for (&i, &s) in marks.iter().zip(&eta) {
        t[i] = s;
    }
    Ok((t, initial))
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpEntropyReport {
    pub empirical: EntropyEstimate,
    pub closed_form: f64,
    pub h_mu: f64,
    pub mu_a: f64,
    pub h_eta: f64,
    pub gap: f64,
    pub marks: usize,
}

/// Entropy of the jump extension of `mu` over the cylinder `[a]` estimated
/// from one path, against `h(mu) + mu(A) h(eta)`.
///
/// Each joint symbol also carries the number of occurrences since the last
/// label 1 or 2; this is a function of the past, so the entropy is unchanged,
/// but short contexts now see the phase.
pub fn jump_entropy_check(
    mu: &MarkovMeasure,
    a_word: &[Symbol],
    params: EtaParams,
    path_len: usize,
    seed: u64,
    opts: &EntropyOptions,
) -> Result<JumpEntropyReport> {
    let params = EtaParams::new(params.n, params.p)?;
    let mu_a = mu.word_probability(a_word)?;
    let mut r = rng::seeded(seed);
    let x = mu.sample_path(path_len, &mut r);
    let marks = mark_occurrences(&x, a_word);
    let (t, _) = label_marks(&marks, x.len(), params, &mut r)?;
    let n = params.n;
    let mut since = 0usize;
    let joint: Vec<usize> = x
        .iter()
        .zip(&t)
        .map(|(&a, &s)| {
            let sym = (a * 4 + s as usize) * n + since;
            match s {
                1 | 2 => since = 0,
                3 => since += 1,
                _ => {}
            }
            sym
        })
        .collect();
    let empirical = empirical_entropy(&joint, opts)?;
    let h_mu = mu.entropy();
    let h_eta = hp(params.p)? / n as f64;
    let closed_form = h_mu + mu_a * h_eta;
    Ok(JumpEntropyReport { gap: empirical.value - closed_form, empirical, closed_form, h_mu, mu_a, h_eta, marks: marks.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct T0Report {
    pub empirical: f64,
    pub stderr: f64,
    pub expected: f64,
    pub positions: usize,
}

/// Frequency of `x in [b], t_0 in C'` along a jump-extension path of `mu`
/// against `mu([b] ∩ [a]) eta([C'])`.
pub fn lemma_t0_check(
    mu: &MarkovMeasure,
    a_word: &[Symbol],
    b_word: &[Symbol],
    c_set: &[u8],
    params: EtaParams,
    path_len: usize,
    seed: u64,
) -> Result<T0Report> {
    let params = EtaParams::new(params.n, params.p)?;
    let mut r = rng::seeded(seed);
    let x = mu.sample_path(path_len, &mut r);
    let marks = mark_occurrences(&x, a_word);
    let (t, _) = label_marks(&marks, x.len(), params, &mut r)?;
    let span = a_word.len().max(b_word.len());
    let usable = x.len().saturating_sub(span - 1);
    let hits: Vec<f64> = (0..usable)
        .map(|i| if x[i..].starts_with(b_word) && c_set.contains(&t[i]) { 1.0 } else { 0.0 })
        .collect();
    let (empirical, stderr) = crate::measures::bootstrap_mean(&hits, 1000, 50, seed ^ 0x5eed);
    let joint = if a_word.len() >= b_word.len() {
        if a_word.starts_with(b_word) { mu.word_probability(a_word)? } else { 0.0 }
    } else if b_word.starts_with(a_word) {
        mu.word_probability(b_word)?
    } else {
        0.0
    };
    let nf = params.n as f64;
    let eta_c: f64 = c_set
        .iter()
        .map(|&c| match c {
            1 => (1.0 - params.p) / nf,
            2 => params.p / nf,
            3 => (nf - 1.0) / nf,
            _ => 0.0,
        })
        .sum();
    Ok(T0Report { empirical, stderr, expected: joint * eta_c, positions: usable })
}

type EndpointKey = (Symbol, Symbol, Symbol, Symbol);

/// The blocks `r^{ab}`, memoised by the endpoints of the two aligned blocks,
/// which determine the common routing symbol and both crossing blocks.
#[derive(Debug)]
pub struct RoutingFunctions {
    triple: FactorTriple,
    tb: TransitionBlock,
    memo: RwLock<HashMap<EndpointKey, Option<(Word, Word)>>>,
}

impl RoutingFunctions {
    pub fn new(triple: FactorTriple, tb: TransitionBlock) -> Self {
        RoutingFunctions { triple, tb, memo: RwLock::new(HashMap::new()) }
    }

    pub fn block(&self) -> &TransitionBlock {
        &self.tb
    }

    pub fn triple(&self) -> &FactorTriple {
        &self.triple
    }

    /// Least member of `M` through which both blocks are routable.
    pub fn common_symbol(&self, u0: Symbol, ul: Symbol, v0: Symbol, vl: Symbol) -> Option<Symbol> {
        let ru = self.triple.routing_set(&self.tb.w, u0, ul, self.tb.n);
        let rv = self.triple.routing_set(&self.tb.w, v0, vl, self.tb.n);
        self.tb.m.iter().copied().find(|&a| ru.contains(a) && rv.contains(a))
    }

    /// `(r^{12}(u, v), r^{21}(u, v))` for blocks with the given endpoints.
    pub fn crossings(&self, u0: Symbol, ul: Symbol, v0: Symbol, vl: Symbol) -> Option<(Word, Word)> {
        let key = (u0, ul, v0, vl);
        if let Some(hit) = self.memo.read().unwrap().get(&key) {
            return hit.clone();
        }
        let (w, n) = (&self.tb.w, self.tb.n);
        let value = self.common_symbol(u0, ul, v0, vl).and_then(|c| {
            Some((self.triple.least_path_through(w, u0, vl, n, c)?, self.triple.least_path_through(w, v0, ul, n, c)?))
        });
        self.memo.write().unwrap().entry(key).or_insert(value).clone()
    }

    /// `r^{ab}(u, v)`.
    pub fn route(&self, a: u8, b: u8, u: &[Symbol], v: &[Symbol]) -> Result<Word> {
        let k = self.tb.w.len();
        match (a, b) {
            (1, 1) => Ok(u.to_vec()),
            (2, 2) => Ok(v.to_vec()),
            (1, 2) | (2, 1) => {
                let (r12, r21) =
                    self.crossings(u[0], u[k - 1], v[0], v[k - 1]).ok_or(Error::NoCommonSymbol { position: 0 })?;
                Ok(if a == 1 { r12 } else { r21 })
            }
            _ => Err(Error::InvalidInput(format!("labels must be 1 or 2, got {a}{b}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_routing_functions(
    triple: &FactorTriple,
    tb: &TransitionBlock,
    support_pairs: &[(Word, Word)],
) -> Result<RoutingFunctions> {
    let rf = RoutingFunctions::new(triple.clone(), tb.clone());
    let k = tb.w.len();
    for (i, (u, v)) in support_pairs.iter().enumerate() {
        if u.len() != k || v.len() != k || triple.apply_code(u)? != tb.w || triple.apply_code(v)? != tb.w {
            return Err(Error::SymbolMismatch(format!("pair {i} does not project to the block word")));
        }
        if rf.crossings(u[0], u[k - 1], v[0], v[k - 1]).is_none() {
            return Err(Error::NoCommonSymbol { position: i });
        }
    }
    Ok(rf)
}

/// `(z, z')`: `z` follows `x` after a label 1 and `x'` after a label 2,
/// crossing through `r^{ab}` on the block at each labelled coordinate; `z'`
/// is the same with the roles of the two paths exchanged.
pub fn splice(sample: &JumpSample, routing: &RoutingFunctions) -> Result<PairPath> {
    let pair = &sample.pair;
    let k = routing.tb.w.len();
    let len = pair.len();
    let mut z = Vec::with_capacity(len);
    let mut zp = Vec::with_capacity(len);
    let copy = |z: &mut Word, zp: &mut Word, from: usize, to: usize, label: u8| {
        let (a, b) = if label == 1 { (&pair.x, &pair.xp) } else { (&pair.xp, &pair.x) };
        z.extend_from_slice(&a[from..to]);
        zp.extend_from_slice(&b[from..to]);
    };
    let mut cur = sample.initial;
    let mut pos = 0;
    for i in sample.labelled() {
        let next = sample.t[i];
        if i < pos || i + k > len {
            return Err(Error::RoutingGap { position: i });
        }
        copy(&mut z, &mut zp, pos, i, cur);
        let (u, v) = (&pair.x[i..i + k], &pair.xp[i..i + k]);
        let gap = |_| Error::RoutingGap { position: i };
        z.extend(routing.route(cur, next, u, v).map_err(gap)?);
        zp.extend(routing.route(cur, next, v, u).map_err(gap)?);
        pos = i + k;
        cur = next;
    }
    copy(&mut z, &mut zp, pos, len, cur);
    Ok(PairPath { x: z, xp: zp, y: pair.y.clone() })
}

/// Coordinates where the label changes, i.e. where `r^{12}` or `r^{21}` is used.
pub fn switch_positions(sample: &JumpSample) -> Vec<usize> {
    let mut cur = sample.initial;
    let mut out = Vec::new();
    for i in sample.labelled() {
        if sample.t[i] != cur {
            out.push(i);
        }
        cur = sample.t[i];
    }
    out
}

/// `W[a][b]`: mass of the transitions of `X`-words projecting to `w` from `a` to `b`.
fn block_weights(mu: &MarkovMeasure, triple: &FactorTriple, w: &[Symbol]) -> Vec<Vec<f64>> {
    let n = mu.size();
    let mut out = vec![vec![0.0; n]; n];
    for &a in triple.preimage(w[0]) {
        let mut v = vec![0.0; n];
        v[a] = 1.0;
        for &b in &w[1..] {
            let mut next = vec![0.0; n];
            for &t in triple.preimage(b) {
                next[t] = triple.x().predecessors(t).iter().map(|&s| v[s] * mu.p(s, t)).sum();
            }
            v = next;
        }
        out[a] = v;
    }
    out
}

/// Exact log-probability, up to the common factor `-log nu(y)`, that the
/// splice produces `(z, z')`: a forward pass over the hidden phase and label,
/// summing out the paths inside each crossing block.
fn spliced_log_likelihood(
    sampler: &RijSampler,
    routing: &RoutingFunctions,
    params: EtaParams,
    w1: &[Vec<f64>],
    w2: &[Vec<f64>],
    out: &PairPath,
) -> f64 {
    let (mu1, mu2) = (sampler.mu1(), sampler.mu2());
    let (z, zp) = (&out.x, &out.xp);
    let nn = params.n;
    let k = routing.tb.w.len();
    let len = z.len();
    let mut occ = vec![false; len];
    for i in mark_occurrences(&out.y, &routing.tb.w) {
        occ[i] = true;
    }
    let pair_at = |i: usize, l: usize| if l == 0 { (z[i], zp[i]) } else { (zp[i], z[i]) };
    let emit = |i: usize, l: usize| {
        let (a, b) = pair_at(i, l);
        if i == 0 {
            mu1.stationary()[a] * mu2.stationary()[b]
        } else {
            let (pa, pb) = pair_at(i - 1, l);
            mu1.p(pa, a) * mu2.p(pb, b)
        }
    };
    let idx = |l: usize, c: usize| l * nn + c;
    let mut alpha = vec![0.0; 2 * nn];
    for l in 0..2 {
        let q = params.label_prob(l as u8 + 1) / nn as f64;
        for c in 0..nn {
            alpha[idx(l, c)] = q;
        }
    }
    let mut pending: Vec<(usize, usize, f64)> = Vec::new();
    let mut log_scale = 0.0;
    for i in 0..len {
        let mut next = vec![0.0; 2 * nn];
        let e = [emit(i, 0), emit(i, 1)];
        for l in 0..2 {
            if !occ[i] {
                for c in 0..nn {
                    next[idx(l, c)] = alpha[idx(l, c)] * e[l];
                }
                continue;
            }
            for c in 0..nn - 1 {
                next[idx(l, c + 1)] = alpha[idx(l, c)] * e[l];
            }
            let m = alpha[idx(l, nn - 1)];
            if m == 0.0 {
                continue;
            }
            next[idx(l, 0)] += m * params.label_prob(l as u8 + 1) * e[l];
            // crossing to the other label over [i, i + k - 1]
            let l2 = 1 - l;
            let end = i + k - 1;
            let (u0, v0) = pair_at(i, l);
            let (ul, vl) = pair_at(end, l2);
            let wt = w1[u0][ul] * w2[v0][vl];
            if wt == 0.0 {
                continue;
            }
            let Some((xr, xpr)) = routing.crossings(u0, ul, v0, vl) else {
                continue;
            };
            let (zb, zpb) = if l == 0 { (&xr, &xpr) } else { (&xpr, &xr) };
            if z[i..=end] != zb[..] || zp[i..=end] != zpb[..] {
                continue;
            }
            let c_end = (i + 1..=end).filter(|&j| occ[j]).count();
            let mass = m * params.label_prob(l2 as u8 + 1) * e[l] * wt;
            if end == i {
                next[idx(l2, c_end)] += mass;
            } else {
                pending.push((end, idx(l2, c_end), mass));
            }
        }
        pending.retain(|&(at, s, mass)| {
            if at == i {
                next[s] += mass;
                false
            } else {
                true
            }
        });
        let total: f64 = next.iter().sum::<f64>() + pending.iter().map(|p| p.2).sum::<f64>();
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        next.iter_mut().for_each(|x| *x /= total);
        pending.iter_mut().for_each(|p| p.2 /= total);
        log_scale += total.ln();
        alpha = next;
    }
    log_scale
}

/// Block `a` separating `mu1` from `mu2` by frequency.
#[derive(Debug, Clone, Serialize)]
pub struct Separator {
    pub a: Word,
    pub mu1_a: f64,
    pub mu2_a: f64,
    pub d: f64,
}

impl Separator {
    pub fn new(mu1: &MarkovMeasure, mu2: &MarkovMeasure, a: &[Symbol]) -> Result<Self> {
        let (m1, m2) = (mu1.word_probability(a)?, mu2.word_probability(a)?);
        if (m1 - m2).abs() <= 1e-12 {
            return Err(Error::DegenerateSeparator);
        }
        Ok(Separator { a: a.to_vec(), mu1_a: m1, mu2_a: m2, d: (m1 - m2).abs() })
    }

    /// Most separating block of length at most `max_len`, shortest and
    /// lexicographically least among ties.
    pub fn choose(mu1: &MarkovMeasure, mu2: &MarkovMeasure, max_len: usize) -> Result<Self> {
        let mut best: Option<Separator> = None;
        for len in 1..=max_len {
            for a in mu1.sft().enumerate_blocks(len, 1 << 16)? {
                if let Ok(s) = Separator::new(mu1, mu2, &a) {
                    if best.as_ref().is_none_or(|b| s.d > b.d + 1e-12) {
                        best = Some(s);
                    }
                }
            }
        }
        best.ok_or(Error::DegenerateSeparator)
    }

    fn positions(&self, block_len: usize) -> usize {
        (block_len + 1).saturating_sub(self.a.len()).max(1)
    }

    /// Whether `count` occurrences in a block of length `block_len` put it in `G_1` (or `G_2`).
    fn in_g(&self, count: usize, block_len: usize, second: bool) -> bool {
        let freq = count as f64 / self.positions(block_len) as f64;
        let target = if second { self.mu2_a } else { self.mu1_a };
        (freq - target).abs() < self.d / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistinguishabilityReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub j_len: usize,
    pub pstar: f64,
    pub pstar_stderr: f64,
    pub hstar: f64,
    /// `Hstar` at an upper 95% confidence value of `Pstar`.
    pub hstar_upper: f64,
    pub samples: usize,
    pub method: &'static str,
}

/// `P log 2 + H_{min(P, 1/2)}`.
pub fn hstar_from_pstar(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    p * 2f64.ln() + hp(p.min(0.5)).unwrap_or(0.0)
}

fn report_from(n: usize, j_len: usize, pstar: f64, se: f64, samples: usize, method: &'static str) -> DistinguishabilityReport {
    let upper = if pstar == 0.0 { (3.0 / samples.max(1) as f64).min(1.0) } else { (pstar + 1.96 * se).min(1.0) };
    DistinguishabilityReport {
        n,
        j_len,
        pstar,
        pstar_stderr: se,
        hstar: hstar_from_pstar(pstar),
        hstar_upper: hstar_from_pstar(upper),
        samples,
        method,
    }
}

/// Monte Carlo `Pstar`: the probability that the blocks of `x` and `x'` on
/// `J = [|w|, N - 1]` after an occurrence of `w` fail to fall in `G_1 x G_2`.
/// With `p` given, only occurrences labelled 1 or 2 by the jump extension
/// are used; otherwise every occurrence counts.
#[allow(clippy::too_many_arguments)]
pub fn distinguishability(
    sampler: &RijSampler,
    w: &[Symbol],
    sep: &Separator,
    n: usize,
    trials: usize,
    path_len: usize,
    p: Option<f64>,
    seed: u64,
) -> Result<DistinguishabilityReport> {
    if n <= w.len() {
        return Err(Error::DomainError(format!("N = {n} must exceed |w| = {}", w.len())));
    }
    if trials == 0 {
        return Err(Error::InsufficientData("no trials".into()));
    }
    let params = p.map(|p| EtaParams::new(n, p)).transpose()?;
    let j_len = n - w.len();
    let per_trial: Vec<(usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(usize, usize)> {
            let mut r = rng::stream(seed, trial as u64);
            let pair = sampler.sample(path_len, &mut r)?;
            let marks = mark_occurrences(&pair.y, w);
            let starts: Vec<usize> = match params {
                Some(pp) => {
                    let (t, _) = label_marks(&marks, pair.len(), pp, &mut r)?;
                    marks.into_iter().filter(|&i| matches!(t[i], 1 | 2)).collect()
                }
                None => marks,
            };
            let cx = prefix_counts(&pair.x, &sep.a);
            let cxp = prefix_counts(&pair.xp, &sep.a);
            let mut seen = 0;
            let mut bad = 0;
            for i in starts.into_iter().filter(|&i| i + n <= path_len) {
                let (from, to) = (i + w.len(), i + n);
                let last_start = (to + 1).saturating_sub(sep.a.len()).max(from);
                let count = |c: &[usize]| c[last_start] - c[from];
                seen += 1;
                if !(sep.in_g(count(&cx), j_len, false) && sep.in_g(count(&cxp), j_len, true)) {
                    bad += 1;
                }
            }
            Ok((seen, bad))
        })
        .collect::<Result<_>>()?;
    let seen: usize = per_trial.iter().map(|t| t.0).sum();
    if seen == 0 {
        return Err(Error::NoOccurrences { window: path_len });
    }
    let bad: usize = per_trial.iter().map(|t| t.1).sum();
    let pstar = bad as f64 / seen as f64;
    let fracs: Vec<f64> = per_trial.iter().filter(|t| t.0 > 0).map(|t| t.1 as f64 / t.0 as f64).collect();
    let se = if fracs.len() >= 2 {
        let m = fracs.iter().sum::<f64>() / fracs.len() as f64;
        (fracs.iter().map(|f| (f - m).powi(2)).sum::<f64>() / (fracs.len() - 1) as f64 / fracs.len() as f64).sqrt()
    } else {
        (pstar * (1.0 - pstar) / seen as f64).sqrt()
    };
    Ok(report_from(n, j_len, pstar, se, seen, "monte-carlo"))
}

/// `c[i]`: occurrences of `a` starting before `i`.
fn prefix_counts(x: &[Symbol], a: &[Symbol]) -> Vec<usize> {
    let mut c = vec![0; x.len() + 1];
    for i in 0..x.len() {
        c[i + 1] = c[i] + usize::from(x[i..].starts_with(a));
    }
    c
}

/// Probability that a stationary `mu` block of length `m` has separator
/// frequency outside the band of `G_1` (or `G_2`), by dynamic programming
/// over (last symbols, count).
fn outside_band(mu: &MarkovMeasure, sep: &Separator, m: usize, second: bool) -> Result<f64> {
    let la = sep.a.len();
    let s = la.saturating_sub(1).max(1);
    let count_in = |u: &[Symbol]| u.windows(la).filter(|w| *w == &sep.a[..]).count();
    if m <= s {
        let mut q = 0.0;
        for u in mu.sft().enumerate_blocks(m, 1 << 20)? {
            if !sep.in_g(count_in(&u), m, second) {
                q += mu.word_probability_unchecked(&u);
            }
        }
        return Ok(q);
    }
    let states = mu.sft().enumerate_blocks(s, 1 << 16)?;
    let index: HashMap<&[Symbol], usize> = states.iter().enumerate().map(|(i, u)| (u.as_slice(), i)).collect();
    let max_count = m + 1;
    let mut dist = vec![vec![0.0; max_count]; states.len()];
    for (i, u) in states.iter().enumerate() {
        dist[i][count_in(u)] += mu.word_probability_unchecked(u);
    }
    let mut moves: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); states.len()];
    for (i, u) in states.iter().enumerate() {
        let last = u[s - 1];
        for &b in mu.sft().successors(last) {
            let pr = mu.p(last, b);
            if pr == 0.0 {
                continue;
            }
            let mut ext = u.clone();
            ext.push(b);
            let hit = usize::from(ext.ends_with(&sep.a));
            moves[i].push((index[&ext[1..]], pr, hit));
        }
    }
    for _ in s..m {
        let mut next = vec![vec![0.0; max_count]; states.len()];
        for (i, row) in dist.iter().enumerate() {
            for (c, &mass) in row.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for &(j, pr, hit) in &moves[i] {
                    next[j][(c + hit).min(max_count - 1)] += mass * pr;
                }
            }
        }
        dist = next;
    }
    let mut q = 0.0;
    for row in &dist {
        for (c, &mass) in row.iter().enumerate() {
            if !sep.in_g(c, m, second) {
                q += mass;
            }
        }
    }
    Ok(q)
}

/// Exact `Pstar` when `x` and `x'` are independent stationary paths of
/// `mu1` and `mu2`, which is the relatively independent joining over a
/// one-point factor.
pub fn distinguishability_exact(
    mu1: &MarkovMeasure,
    mu2: &MarkovMeasure,
    sep: &Separator,
    n: usize,
    w_len: usize,
) -> Result<DistinguishabilityReport> {
    if n <= w_len {
        return Err(Error::DomainError(format!("N = {n} must exceed |w| = {w_len}")));
    }
    let m = n - w_len;
    let q1 = outside_band(mu1, sep, m, false)?;
    let q2 = outside_band(mu2, sep, m, true)?;
    let pstar = (q1 + q2 - q1 * q2).clamp(0.0, 1.0);
    Ok(report_from(n, m, pstar, 0.0, 0, "exact"))
}

/// Numerical constants of the final lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub c0: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub w_len: usize,
    pub nu_w: f64,
}

impl Constants {
    pub fn new(nu_w: f64, w_len: usize, c0: usize, v: &Potential) -> Self {
        let c1 = 2.0 * w_len as f64 * nu_w;
        let c2 = 2.0 * (w_len as f64 * v.max_abs() + v.variation_tail());
        Constants { c0, c1, c2, c3: nu_w, c4: nu_w, c5: c1 * (2.0 * (c0 as f64).ln() + c2), w_len, nu_w }
    }

    /// `C_3 H_p - C_5 p`.
    pub fn margin(&self, p: f64) -> f64 {
        self.c3 * hp(p).unwrap_or(0.0) - self.c5 * p
    }

    /// `(C_3 H_p - C_4 H* - C_5 p) / N`.
    pub fn bound_value(&self, p: f64, n: usize, hstar: f64) -> f64 {
        (self.margin(p) - self.c4 * hstar) / n as f64
    }

    /// Maximiser of [`Constants::margin`] over `(0, 1/2)`.
    pub fn best_p(&self) -> f64 {
        if self.c3 <= 0.0 {
            return 0.5;
        }
        1.0 / (1.0 + (self.c5 / self.c3).exp())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaConfig {
    pub params: EtaParams,
    pub trials: usize,
    pub path_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    pub params: EtaParams,
    pub w: Word,
    pub h_lambda: EntropyEstimate,
    pub h_lambda_prime: EntropyEstimate,
    pub mu1_v: f64,
    pub mu2_v: f64,
    pub mu1_prime_v: f64,
    pub mu2_prime_v: f64,
    pub potential_stderr: f64,
    pub nu_w: f64,
    pub h_eta: f64,
    /// `Pr(t_0 > 0) h(eta)`.
    pub jump_gain: f64,
    /// `Pr(t'_0 = 4) = nu(w) / N`.
    pub pr_label: f64,
    pub s_event_prob: f64,
    pub s_event_freq: f64,
    pub s_event_stderr: f64,
    pub h1_bound: f64,
    pub h2_bound: f64,
    pub h3_bound: f64,
    /// `jump_gain - h1 - h2 - h3`.
    pub chain_lower: f64,
    pub pstar: f64,
    pub pstar_stderr: f64,
    pub hstar: f64,
    pub hstar_upper: f64,
    pub delta_entropy: f64,
    pub delta_potential: f64,
    pub delta_hat: f64,
    pub delta_stderr: f64,
    pub delta_ci: (f64, f64),
    pub bound_value: f64,
    pub constants: Constants,
    pub trials: usize,
    pub path_len: usize,
    pub seed: u64,
    pub workers: usize,
}

struct Trial {
    h_lambda: f64,
    d_entropy: f64,
    d_v1: f64,
    d_v2: f64,
    s_freq: f64,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Samples the joining, labels it, splices it, and estimates the change of
/// `h + mu_1(V) + mu_2(V)` from the exact likelihoods of both pairs on the
/// same draw, alongside every bound of the chain.
pub fn estimate_delta(
    sampler: &RijSampler,
    v: &Potential,
    routing: &RoutingFunctions,
    dist: &DistinguishabilityReport,
    cfg: &DeltaConfig,
) -> Result<DeltaReport> {
    let params = EtaParams::new(cfg.params.n, cfg.params.p)?;
    let tb = routing.block();
    let w = &tb.w;
    if params.n <= w.len() {
        return Err(Error::DomainError(format!("N = {} must exceed |w| = {}", params.n, w.len())));
    }
    if dist.n != params.n {
        return Err(Error::InvalidInput("distinguishability computed for a different N".into()));
    }
    if cfg.trials == 0 || cfg.path_len <= w.len() {
        return Err(Error::InsufficientData("need at least one trial longer than the block".into()));
    }
    let triple = sampler.triple();
    let w1 = block_weights(sampler.mu1(), triple, w);
    let w2 = block_weights(sampler.mu2(), triple, w);
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<Trial> {
            let mut r = rng::stream(cfg.seed, i as u64);
            let pair = sampler.sample(cfg.path_len, &mut r)?;
            let sample = attach_jump_labels(pair, w, params, &mut r)?;
            let out = splice(&sample, routing)?;
            let pair = &sample.pair;
            let n = pair.len() as f64;
            let ll_x = sampler.mu1().log_word_probability(&pair.x) + sampler.mu2().log_word_probability(&pair.xp);
            let ll_y = sampler.nu().log_prob(&pair.y);
            let ll_z = spliced_log_likelihood(sampler, routing, params, &w1, &w2, &out);
            let nv = (pair.len() + 1 - v.range()) as f64;
            let s = switch_positions(&sample).len() * w.len();
            Ok(Trial {
                h_lambda: -(ll_x - ll_y) / n,
                d_entropy: (ll_x - ll_z) / n,
                d_v1: (v.birkhoff_sum(&out.x) - v.birkhoff_sum(&pair.x)) / nv,
                d_v2: (v.birkhoff_sum(&out.xp) - v.birkhoff_sum(&pair.xp)) / nv,
                s_freq: s as f64 / n,
            })
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&Trial) -> f64| trials.iter().map(f).collect::<Vec<f64>>();
    let (mu1, mu2) = (sampler.mu1(), sampler.mu2());
    let h_lambda = if triple.y_size() == 1 {
        EntropyEstimate::exact(mu1.entropy() + mu2.entropy())
    } else {
        let (m, se) = mean_se(&col(|t| t.h_lambda));
        EntropyEstimate { value: m.max(0.0), stderr: se, method: Method::Likelihood, k: None, window: cfg.path_len, profile: vec![], lz: None }
    };
    let (d_h, d_h_se) = mean_se(&col(|t| t.d_entropy));
    let h_lambda_prime = EntropyEstimate {
        value: (h_lambda.value + d_h).max(0.0),
        stderr: (h_lambda.stderr.powi(2) + d_h_se.powi(2)).sqrt(),
        method: Method::Likelihood,
        k: None,
        window: cfg.path_len,
        profile: vec![],
        lz: None,
    };
    let (dv1, _) = mean_se(&col(|t| t.d_v1));
    let (dv2, _) = mean_se(&col(|t| t.d_v2));
    let (dv, dv_se) = mean_se(&col(|t| t.d_v1 + t.d_v2));
    let (delta_hat, delta_se) = mean_se(&col(|t| t.d_entropy + t.d_v1 + t.d_v2));
    let (s_freq, s_se) = mean_se(&col(|t| t.s_freq));

    let nu_w = sampler.nu().prob(w);
    let c = Constants::new(nu_w, w.len(), triple.x_size(), v);
    let nf = params.n as f64;
    let h_eta = hp(params.p)? / nf;
    let jump_gain = nu_w * h_eta;
    let pr_label = nu_w / nf;
    let s_event_prob = 2.0 * w.len() as f64 * nu_w * params.p * (1.0 - params.p) / nf;
    let h1 = pr_label * dist.hstar;
    let h2 = s_event_prob * ((c.c0 * c.c0) as f64).ln();
    let h3 = s_event_prob * c.c2;
    let (mu1_v, mu2_v) = (integral(mu1, v), integral(mu2, v));
    Ok(DeltaReport {
        params,
        w: w.clone(),
        h_lambda,
        h_lambda_prime,
        mu1_v,
        mu2_v,
        mu1_prime_v: mu1_v + dv1,
        mu2_prime_v: mu2_v + dv2,
        potential_stderr: dv_se,
        nu_w,
        h_eta,
        jump_gain,
        pr_label,
        s_event_prob,
        s_event_freq: s_freq,
        s_event_stderr: s_se,
        h1_bound: h1,
        h2_bound: h2,
        h3_bound: h3,
        chain_lower: jump_gain - h1 - h2 - h3,
        pstar: dist.pstar,
        pstar_stderr: dist.pstar_stderr,
        hstar: dist.hstar,
        hstar_upper: dist.hstar_upper,
        delta_entropy: d_h,
        delta_potential: dv,
        delta_hat,
        delta_stderr: delta_se,
        delta_ci: (delta_hat - 1.96 * delta_se, delta_hat + 1.96 * delta_se),
        bound_value: c.bound_value(params.p, params.n, dist.hstar),
        constants: c,
        trials: cfg.trials,
        path_len: cfg.path_len,
        seed: cfg.seed,
        workers: rayon::current_num_threads(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSelection {
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `C_3 H_p - C_5 p` at the chosen `p`.
    pub margin: f64,
    pub hstar: f64,
    /// `(margin - C_4 H*) / N`, a certified lower bound on the gain.
    pub bound_value: f64,
    pub p_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
}

/// Picks `p` first, maximising `C_3 H_p - C_5 p` over the grid together
/// with the exact maximiser, then the smallest `N` whose `C_4 H*(N)` stays
/// below that margin.
pub fn bound_report(c: &Constants, p_grid: &[f64], hstar_by_n: &[(usize, f64)]) -> Result<BoundSelection> {
    let mut ps: Vec<f64> = p_grid.iter().copied().filter(|p| *p > 0.0 && *p < 0.5).collect();
    ps.push(c.best_p());
    ps.sort_by(|a, b| b.total_cmp(a));
    ps.dedup();
    let (p, margin) = ps
        .iter()
        .map(|&p| (p, c.margin(p)))
        .filter(|(_, m)| *m > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .ok_or(Error::NoFeasibleCell)?;
    let mut ns: Vec<(usize, f64)> = hstar_by_n.to_vec();
    ns.sort_by_key(|x| x.0);
    let (n, hstar) = ns
        .iter()
        .copied()
        .filter(|&(n, _)| n > c.w_len)
        .find(|&(_, h)| c.c4 * h < margin)
        .ok_or(Error::NoFeasibleCell)?;
    Ok(BoundSelection {
        p,
        n,
        margin,
        hstar,
        bound_value: (margin - c.c4 * hstar) / n as f64,
        p_grid: ps,
        n_grid: ns.iter().map(|x| x.0).collect(),
    })
}

/// Extension of a user grid of `N` by doubling up to `max_n`.
pub fn extended_n_grid(grid: &[usize], max_n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = grid.to_vec();
    let mut n = grid.iter().copied().max().unwrap_or(8).max(1);
    while n * 2 <= max_n {
        n *= 2;
        out.push(n);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Pairs of positive-mass preimages of `w` sharing a routing symbol in `M`.
pub fn support_pairs(triple: &FactorTriple, mu1: &MarkovMeasure, mu2: &MarkovMeasure, tb: &TransitionBlock, cap: usize) -> Result<Vec<(Word, Word)>> {
    let pre = triple.enumerate_preimages(&tb.w, cap)?;
    let size = triple.x_size();
    let m = SymbolSet::from_iter(size, tb.m.iter().copied());
    let routes = |u: &Word| triple.routing_set(&tb.w, u[0], *u.last().unwrap(), tb.n).intersection(&m);
    let mut out = Vec::new();
    for u in pre.iter().filter(|u| mu1.is_positive(u)) {
        for v in pre.iter().filter(|v| mu2.is_positive(v)) {
            if routes(u).intersects(&routes(v)) {
                out.push((u.clone(), v.clone()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn eta_stats_values() {
        let s = eta_stats(EtaParams { n: 4, p: 0.25 }).unwrap();
        assert!((s.h_eta - 0.140584).abs() < 1e-6);
        assert_eq!(s.prob_1, 0.1875);
        assert_eq!(s.prob_2, 0.0625);
        assert_eq!(s.prob_1_block, 0.046875);
        assert!(eta_stats(EtaParams { n: 0, p: 0.2 }).is_err());
        assert!(eta_stats(EtaParams { n: 3, p: 0.7 }).is_err());
    }

    #[test]
    fn eta_sample_structure() {
        let p = EtaParams::new(1, 0.3).unwrap();
        let s = eta_sample(p, 1000, &mut rng::seeded(1)).unwrap();
        assert!(s.iter().all(|&x| x == 1 || x == 2));
        let p = EtaParams::new(5, 0.3).unwrap();
        let s = eta_sample(p, 1000, &mut rng::seeded(2)).unwrap();
        assert!(pattern_holds(&s, 5));
        let labelled: Vec<usize> = (0..s.len()).filter(|&i| s[i] != 3).collect();
        assert!(labelled.windows(2).all(|w| w[1] - w[0] == 5));
    }

    #[test]
    fn occurrences_overlap() {
        assert_eq!(mark_occurrences(&[0, 0, 0, 0], &[0, 0]), vec![0, 1, 2]);
        assert!(mark_occurrences(&[0, 1, 0], &[1, 1]).is_empty());
    }

    #[test]
    fn pattern_detection() {
        assert!(pattern_holds(&[3, 0, 1, 3, 0, 3, 2, 3, 3], 3));
        assert!(!pattern_holds(&[1, 3, 2, 3, 3], 3));
        assert!(!pattern_holds(&[3, 3, 3, 1, 3, 3], 3));
    }

    #[test]
    fn too_few_marks() {
        let t1 = corpus::t1();
        let pair = PairPath::new(&t1, vec![0, 1], vec![1, 1]).unwrap();
        let r = attach_jump_labels(pair, &[0, 0], EtaParams::new(3, 0.2).unwrap(), &mut rng::seeded(0));
        assert!(matches!(r, Err(Error::TooFewMarks { found: 1, .. })));
        let gm = corpus::golden_mean();
        let mu_gm = MarkovMeasure::parry(&gm).unwrap();
        let r = jump_entropy_check(&mu_gm, &[1, 1], EtaParams::new(4, 0.25).unwrap(), 1000, 0, &EntropyOptions::with_k(2));
        assert!(r.is_err());
    }

    fn t1_routing() -> (FactorTriple, RoutingFunctions) {
        let t1 = corpus::t1();
        let tb = TransitionBlock { w: vec![0, 0, 0], n: 1, m: vec![0] };
        (t1.clone(), RoutingFunctions::new(t1, tb))
    }

    #[test]
    fn routing_function_examples() {
        let (_, rf) = t1_routing();
        // A = 0, B = 1: u = ABB, v = BBA
        assert_eq!(rf.route(1, 2, &[0, 1, 1], &[1, 1, 0]).unwrap(), vec![0, 0, 0]);
        assert_eq!(rf.route(2, 1, &[0, 1, 1], &[1, 1, 0]).unwrap(), vec![1, 0, 1]);
        assert_eq!(rf.route(1, 1, &[0, 1, 1], &[1, 1, 0]).unwrap(), vec![0, 1, 1]);
        let t3 = corpus::t3();
        let al = t3.x().alphabet();
        let tb = TransitionBlock {
            w: t3.y_alphabet().parse_word(&["a", "b", "a"]).unwrap(),
            n: 1,
            m: vec![al.lookup("b1").unwrap(), al.lookup("b2").unwrap()],
        };
        let u = al.parse_word(&["a1", "b1", "a1"]).unwrap();
        let v = al.parse_word(&["a2", "b2", "a2"]).unwrap();
        assert!(matches!(build_routing_functions(&t3, &tb, &[(u.clone(), v)]), Err(Error::NoCommonSymbol { .. })));
        let rf = build_routing_functions(&t3, &tb, &[(u.clone(), u.clone())]).unwrap();
        let r = rf.route(1, 2, &u, &u).unwrap();
        assert_eq!((r[0], r[2]), (u[0], u[2]));
    }

    fn t1_sample(labels_from: u64, len: usize, params: EtaParams) -> (JumpSample, RoutingFunctions) {
        let (t1, rf) = t1_routing();
        let s = RijSampler::new(corpus::bernoulli(&t1, 0.3), corpus::bernoulli(&t1, 0.7), t1).unwrap();
        let mut r = rng::seeded(labels_from);
        let pair = s.sample(len, &mut r).unwrap();
        (attach_jump_labels(pair, &[0, 0, 0], params, &mut r).unwrap(), rf)
    }

    #[test]
    fn splice_with_constant_labels() {
        let (mut sample, rf) = t1_sample(4, 200, EtaParams::new(8, 0.2).unwrap());
        for i in sample.marks.clone() {
            if sample.t[i] == 2 {
                sample.t[i] = 1;
            }
        }
        sample.initial = 1;
        let out = splice(&sample, &rf).unwrap();
        assert_eq!(out.x, sample.pair.x);
        assert_eq!(out.xp, sample.pair.xp);
        for i in sample.marks.clone() {
            if sample.t[i] == 1 {
                sample.t[i] = 2;
            }
        }
        sample.initial = 2;
        let out = splice(&sample, &rf).unwrap();
        assert_eq!(out.x, sample.pair.xp);
        assert_eq!(out.xp, sample.pair.x);
    }

    #[test]
    fn splice_is_legal_and_switches() {
        let (sample, rf) = t1_sample(5, 2000, EtaParams::new(8, 0.4).unwrap());
        assert!(pattern_holds(&sample.t, 8));
        let out = splice(&sample, &rf).unwrap();
        let t1 = rf.triple();
        assert!(t1.x().is_legal(&out.x) && t1.x().is_legal(&out.xp));
        assert_eq!(t1.image(&out.x), sample.pair.y);
        for i in switch_positions(&sample) {
            assert_eq!(out.x[i + 1], 0);
            assert_eq!(out.xp[i + 1], 0);
        }
        assert!(!switch_positions(&sample).is_empty());
    }

    /// Brute-force likelihood of a short spliced pair by enumerating every
    /// hidden pair of paths, phase and label sequence.
    #[test]
    fn spliced_likelihood_matches_enumeration() {
        let (t1, rf) = t1_routing();
        let mu1 = corpus::bernoulli(&t1, 0.3);
        let mu2 = corpus::bernoulli(&t1, 0.6);
        let s = RijSampler::new(mu1.clone(), mu2.clone(), t1.clone()).unwrap();
        let params = EtaParams::new(4, 0.3).unwrap();
        let len = 7;
        let w = vec![0; 3];
        let w1 = block_weights(&mu1, &t1, &w);
        let w2 = block_weights(&mu2, &t1, &w);
        let words = t1.x().enumerate_blocks(len, 1 << 10).unwrap();
        let marks = mark_occurrences(&vec![0; len], &w);
        let mut law: HashMap<(Word, Word), f64> = HashMap::new();
        for x in &words {
            for xp in &words {
                let base = mu1.word_probability(x).unwrap() * mu2.word_probability(xp).unwrap();
                for first in 0..params.n {
                    for coins in 0..(1u32 << 3) {
                        let mut t = vec![0u8; len];
                        let mut k = 0;
                        let mut prob = base / params.n as f64;
                        let initial = if coins & 1 == 1 { 2 } else { 1 };
                        prob *= params.label_prob(initial);
                        for (j, &i) in marks.iter().enumerate() {
                            if j >= first && (j - first) % params.n == 0 {
                                k += 1;
                                let l = if coins >> k & 1 == 1 { 2 } else { 1 };
                                prob *= params.label_prob(l);
                                t[i] = l;
                            } else {
                                t[i] = 3;
                            }
                        }
                        let sample = JumpSample {
                            pair: PairPath { x: x.clone(), xp: xp.clone(), y: vec![0; len] },
                            t,
                            marks: marks.clone(),
                            initial,
                        };
                        let out = splice(&sample, &rf).unwrap();
                        // each unused coin bit was counted twice; normalise below
                        let unused = 2 - k;
                        *law.entry((out.x, out.xp)).or_insert(0.0) += prob / f64::from(1u32 << unused);
                    }
                }
            }
        }
        let total: f64 = law.values().sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
        for ((z, zp), p) in law {
            let out = PairPath { x: z, xp: zp, y: vec![0; len] };
            let ll = spliced_log_likelihood(&s, &rf, params, &w1, &w2, &out);
            assert!((ll - p.ln()).abs() < 1e-9, "{ll} vs {}", p.ln());
        }
    }

    #[test]
    fn exact_pstar_matches_binomial_tail() {
        let t1 = corpus::t1();
        let mu1 = corpus::bernoulli(&t1, 0.3);
        let mu2 = corpus::bernoulli(&t1, 0.7);
        let sep = Separator::new(&mu1, &mu2, &[0]).unwrap();
        let r = distinguishability_exact(&mu1, &mu2, &sep, 16, 3).unwrap();
        // J has 13 symbols; x fails G_1 iff it has at most 1 or at least 7 A's
        let binom = |n: u64, k: u64| (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64);
        let tail: f64 = (0..=13).filter(|&k| k <= 1 || k >= 7).map(|k| binom(13, k) * 0.3f64.powi(k as i32) * 0.7f64.powi(13 - k as i32)).sum();
        let expected = 2.0 * tail - tail * tail;
        assert!((r.pstar - expected).abs() < 1e-12);
        assert!(Separator::new(&mu1, &mu1, &[0]).is_err());
    }

    #[test]
    fn monte_carlo_pstar_agrees_with_exact() {
        let t1 = corpus::t1();
        let mu1 = corpus::bernoulli(&t1, 0.3);
        let mu2 = corpus::bernoulli(&t1, 0.7);
        let sep = Separator::choose(&mu1, &mu2, 2).unwrap();
        assert_eq!(sep.a, vec![0]);
        let s = RijSampler::new(mu1.clone(), mu2.clone(), t1).unwrap();
        let mc = distinguishability(&s, &[0, 0, 0], &sep, 12, 20, 5000, None, 3).unwrap();
        let ex = distinguishability_exact(&mu1, &mu2, &sep, 12, 3).unwrap();
        assert!((mc.pstar - ex.pstar).abs() < 4.0 * mc.pstar_stderr + 1e-3, "{} vs {}", mc.pstar, ex.pstar);
    }

    #[test]
    fn bound_report_paths() {
        let t1 = corpus::t1();
        let v = Potential::zero(t1.x());
        let c = Constants::new(1.0, 3, 2, &v);
        assert!((c.c5 - 6.0 * 2.0 * 2f64.ln()).abs() < 1e-12);
        let sel = bound_report(&c, &[0.05], &[(8, 0.0), (16, 0.0)]).unwrap();
        assert_eq!(sel.n, 8);
        assert!(sel.bound_value > 0.0);
        assert!(matches!(bound_report(&c, &[0.05], &[(8, 1.0), (16, 0.5)]), Err(Error::NoFeasibleCell)));
    }
}
