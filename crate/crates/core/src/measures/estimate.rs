use crate::error::{Error, Result};
use crate::rng;
use rand::Rng as _;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Plug-in conditional entropy of the next symbol given `k` predecessors.
    PlugIn,
    /// Lempel-Ziv (1976) phrase count.
    Lz,
    /// Closed form of a Markov measure.
    Exact,
    /// Exact log-likelihood of a sampled path divided by its length.
    Likelihood,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyEstimate {
    /// Nats per symbol.
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    /// Context length for plug-in estimates.
    pub k: Option<usize>,
    /// Number of symbols used.
    pub window: usize,
    /// Plug-in value at every context length of the schedule.
    pub profile: Vec<(usize, f64)>,
    /// LZ76 cross-estimate when requested.
    pub lz: Option<f64>,
}

impl EntropyEstimate {
    pub fn exact(value: f64) -> Self {
        EntropyEstimate { value, stderr: 0.0, method: Method::Exact, k: None, window: 0, profile: Vec::new(), lz: None }
    }
}

#[derive(Debug, Clone)]
pub struct EntropyOptions {
    pub k_schedule: Vec<usize>,
    pub bootstrap_block: usize,
    pub resamples: usize,
    pub seed: u64,
    pub lz: bool,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions { k_schedule: vec![4, 6, 8, 10], bootstrap_block: 1000, resamples: 50, seed: 0, lz: false }
    }
}

impl EntropyOptions {
    pub fn with_k(k: usize) -> Self {
        EntropyOptions { k_schedule: vec![k], ..Default::default() }
    }
}

const MIN_POSITIONS: usize = 20;

/// Per-position loss `-log P^(x_i | x_{i-k..i-1})` under the empirical
/// counts of the whole word; the plug-in estimate is their mean.
fn conditional_losses(word: &[usize], k: usize) -> Result<Vec<f64>> {
    if word.len() < k + MIN_POSITIONS {
        return Err(Error::InsufficientData(format!(
            "{} symbols is too short for context length {k}",
            word.len()
        )));
    }
    let base = word.iter().copied().max().unwrap_or(0) as u128 + 1;
    let fits = (0..=k).try_fold(1u128, |acc, _| acc.checked_mul(base)).is_some();
    if !fits {
        return Ok(conditional_losses_interned(word, k));
    }
    let top = base.pow(k as u32);
    let mut code: u128 = 0;
    let mut ids = Vec::with_capacity(word.len() - k);
    for (i, &s) in word.iter().enumerate() {
        code = (code % top) * base + s as u128;
        if i >= k {
            ids.push(code);
        }
    }
    let mut full: HashMap<u128, u32> = HashMap::new();
    let mut ctx: HashMap<u128, u32> = HashMap::new();
    for &id in &ids {
        *full.entry(id).or_insert(0) += 1;
        *ctx.entry(id / base).or_insert(0) += 1;
    }
    Ok(ids.iter().map(|id| (ctx[&(id / base)] as f64 / full[id] as f64).ln()).collect())
}

/// Same as above for alphabets too wide to pack a window into an integer.
fn conditional_losses_interned(word: &[usize], k: usize) -> Vec<f64> {
    let mut full: HashMap<&[usize], u32> = HashMap::new();
    let mut ctx: HashMap<&[usize], u32> = HashMap::new();
    for w in word.windows(k + 1) {
        *full.entry(w).or_insert(0) += 1;
        *ctx.entry(&w[..k]).or_insert(0) += 1;
    }
    word.windows(k + 1).map(|w| (ctx[&w[..k]] as f64 / full[w] as f64).ln()).collect()
}

/// Mean and block-bootstrap standard error of a per-position series.
pub(crate) fn bootstrap_mean(values: &[f64], block: usize, resamples: usize, seed: u64) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let block = block.clamp(1, (n / 10).max(1));
    let chunks: Vec<f64> = values.chunks(block).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    if chunks.len() < 2 || resamples < 2 {
        return (mean, 0.0);
    }
    let mut r = rng::seeded(seed);
    let m = chunks.len();
    let reps: Vec<f64> = (0..resamples)
        .map(|_| (0..m).map(|_| chunks[r.gen_range(0..m)]).sum::<f64>() / m as f64)
        .collect();
    let rm = reps.iter().sum::<f64>() / resamples as f64;
    let var = reps.iter().map(|x| (x - rm).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    (mean, var.sqrt())
}

/// Plug-in entropy estimate at each `k` of the schedule, reporting the
/// largest.
pub fn empirical_entropy(word: &[usize], opts: &EntropyOptions) -> Result<EntropyEstimate> {
    let mut ks = opts.k_schedule.clone();
    ks.sort_unstable();
    let kmax = *ks.last().ok_or_else(|| Error::InvalidInput("empty k schedule".into()))?;
    let mut profile = Vec::with_capacity(ks.len());
    let mut last = (0.0, 0.0);
    for &k in &ks {
        let losses = conditional_losses(word, k)?;
        if k == kmax {
            last = bootstrap_mean(&losses, opts.bootstrap_block, opts.resamples, opts.seed);
            profile.push((k, last.0));
        } else {
            profile.push((k, losses.iter().sum::<f64>() / losses.len() as f64));
        }
    }
    let lz = if opts.lz { Some(lz76_entropy(word)) } else { None };
    Ok(EntropyEstimate {
        value: last.0.max(0.0),
        stderr: last.1,
        method: Method::PlugIn,
        k: Some(kmax),
        window: word.len(),
        profile,
        lz,
    })
}

/// Plug-in values for each context length, without error bars.
pub fn entropy_profile(word: &[usize], ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    ks.iter()
        .map(|&k| {
            let l = conditional_losses(word, k)?;
            Ok((k, l.iter().sum::<f64>() / l.len() as f64))
        })
        .collect()
}

/// `H^(joint) - H^(factor)` at a common context length, clamped at zero;
/// the two sequences must be aligned.
pub fn relative_entropy_estimate(joint: &[usize], factor: &[usize], opts: &EntropyOptions) -> Result<EntropyEstimate> {
    if joint.len() != factor.len() {
        return Err(Error::InsufficientData("joint and factor sequences differ in length".into()));
    }
    let k = opts.k_schedule.iter().copied().max().ok_or_else(|| Error::InvalidInput("empty k schedule".into()))?;
    let lj = conditional_losses(joint, k)?;
    let lf = conditional_losses(factor, k)?;
    let diff: Vec<f64> = lj.iter().zip(&lf).map(|(a, b)| a - b).collect();
    let (mean, se) = bootstrap_mean(&diff, opts.bootstrap_block, opts.resamples, opts.seed);
    Ok(EntropyEstimate {
        value: mean.max(0.0),
        stderr: se,
        method: Method::PlugIn,
        k: Some(k),
        window: joint.len(),
        profile: vec![(k, mean)],
        lz: None,
    })
}

/// Lempel-Ziv (1976) complexity by the Kaspar-Schuster scan.
pub fn lz76_complexity(s: &[usize]) -> usize {
    let n = s.len();
    if n < 2 {
        return n;
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1usize, 1usize, 0usize, 1usize, 1usize);
    loop {
        if s[i + k - 1] == s[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    c
}

/// Cap on the prefix fed to the LZ76 scan, which is quadratic on repetitive input.
pub const LZ_WINDOW: usize = 200_000;

/// `c(n) log(n) / n` on at most [`LZ_WINDOW`] leading symbols.
pub fn lz76_entropy(word: &[usize]) -> f64 {
    let w = &word[..word.len().min(LZ_WINDOW)];
    let n = w.len();
    if n < 2 {
        return 0.0;
    }
    lz76_complexity(w) as f64 * (n as f64).ln() / n as f64
}

/// `H_p = -p log p - (1-p) log(1-p)`.
pub fn hp(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("p = {p} is outside [0, 1]")));
    }
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// `Pr(E) log K`.
pub fn bound_good(k: usize, pr_e: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::DomainError("K must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&pr_e) {
        return Err(Error::DomainError(format!("Pr(E) = {pr_e} is outside [0, 1]")));
    }
    Ok(pr_e * (k as f64).ln())
}

/// `Pr(E) log K + H_{Pr(E)}`.
pub fn bound_bad(k: usize, pr_e: f64) -> Result<f64> {
    Ok(bound_good(k, pr_e)? + hp(pr_e)?)
}
