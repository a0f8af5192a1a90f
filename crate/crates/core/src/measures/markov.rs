use super::perron::perron;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::shift::{Sft, Symbol, Word};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

const STATIONARY_TOL: f64 = 1e-10;
/// Inputs whose rows are off by at most this much are renormalised.
const INPUT_TOL: f64 = 1e-9;

/// A stationary one-step Markov measure supported on an SFT.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    sft: Sft,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    cumulative: Vec<Vec<(Symbol, f64)>>,
    start_cumulative: Vec<(Symbol, f64)>,
}

fn cumulate(probs: impl Iterator<Item = (Symbol, f64)>) -> Vec<(Symbol, f64)> {
    let mut acc = 0.0;
    let mut out: Vec<(Symbol, f64)> = probs
        .filter(|&(_, p)| p > 0.0)
        .map(|(s, p)| {
            acc += p;
            (s, acc)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        last.1 = f64::INFINITY;
    }
    out
}

#[inline]
fn draw(table: &[(Symbol, f64)], u: f64) -> Symbol {
    table.iter().find(|&&(_, c)| u < c).map(|&(s, _)| s).unwrap_or(table[table.len() - 1].0)
}

impl MarkovMeasure {
    /// Validate and build. When `stationary` is `None` it is solved for and
    /// must be unique.
    pub fn new(sft: Sft, transition: Vec<Vec<f64>>, stationary: Option<Vec<f64>>) -> Result<Self> {
        let n = sft.size();
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("transition matrix must be {n}x{n}")));
        }
        let mut transition = transition;
        for (a, row) in transition.iter_mut().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0 + INPUT_TOL).contains(&p) || p.is_nan()) {
                return Err(Error::InvalidInput(format!("row {a} has an entry outside [0, 1]")));
            }
            for (b, &p) in row.iter().enumerate() {
                if p > 0.0 && !sft.allowed(a, b) {
                    return Err(Error::InvalidInput(format!(
                        "positive probability on forbidden transition {}{}",
                        sft.alphabet().name(a),
                        sft.alphabet().name(b)
                    )));
                }
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > INPUT_TOL {
                return Err(Error::InvalidInput(format!("row {a} sums to {s}")));
            }
            row.iter_mut().for_each(|p| *p /= s);
        }
        let stationary = match stationary {
            Some(mut pi) => {
                if pi.len() != n || pi.iter().any(|&p| p < 0.0 || p.is_nan()) {
                    return Err(Error::InvalidInput("stationary vector malformed".into()));
                }
                let s: f64 = pi.iter().sum();
                if (s - 1.0).abs() > INPUT_TOL {
                    return Err(Error::InvalidInput(format!("stationary vector sums to {s}")));
                }
                pi.iter_mut().for_each(|p| *p /= s);
                pi
            }
            None => solve_stationary(&transition)?,
        };
        let m = Self::assemble(sft, transition, stationary);
        let resid = m.stationarity_residual();
        if resid > STATIONARY_TOL {
            return Err(Error::InvalidInput(format!("vector is not stationary (residual {resid:e})")));
        }
        Ok(m)
    }

    fn assemble(sft: Sft, transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Self {
        let cumulative = transition.iter().map(|row| cumulate(row.iter().copied().enumerate())).collect();
        let start_cumulative = cumulate(stationary.iter().copied().enumerate());
        MarkovMeasure { sft, transition, stationary, cumulative, start_cumulative }
    }

    /// Product measure with the given symbol probabilities on a full shift.
    pub fn bernoulli(sft: Sft, probs: &[f64]) -> Result<Self> {
        let n = sft.size();
        if probs.len() != n {
            return Err(Error::InvalidInput(format!("need {n} probabilities")));
        }
        let rows = vec![probs.to_vec(); n];
        Self::new(sft, rows, Some(probs.to_vec()))
    }

    /// Markov measure from positive weights on allowed transitions, rows normalised.
    pub fn from_weights(sft: Sft, weights: &[Vec<f64>]) -> Result<Self> {
        let rows = weights
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|w| w / s).collect()
            })
            .collect();
        Self::new(sft, rows, None)
    }

    pub(crate) fn from_parts_unchecked(sft: Sft, transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Self {
        Self::assemble(sft, transition, stationary)
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn size(&self) -> usize {
        self.sft.size()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    #[inline]
    pub fn p(&self, a: Symbol, b: Symbol) -> f64 {
        self.transition[a][b]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn stationarity_residual(&self) -> f64 {
        let n = self.size();
        (0..n)
            .map(|j| ((0..n).map(|i| self.stationary[i] * self.transition[i][j]).sum::<f64>() - self.stationary[j]).abs())
            .fold(0.0, f64::max)
    }

    /// Entropy rate in nats.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (i, row) in self.transition.iter().enumerate() {
            for &p in row {
                if p > 0.0 {
                    h -= self.stationary[i] * p * p.ln();
                }
            }
        }
        h
    }

    pub fn word_probability(&self, u: &[Symbol]) -> Result<f64> {
        if let Some(&bad) = u.iter().find(|&&s| s >= self.size()) {
            return Err(Error::UnknownSymbol(format!("#{bad}")));
        }
        self.sft.check_legal(u)?;
        Ok(self.word_probability_unchecked(u))
    }

    pub fn word_probability_unchecked(&self, u: &[Symbol]) -> f64 {
        if u.is_empty() {
            return 1.0;
        }
        u.windows(2).fold(self.stationary[u[0]], |acc, w| acc * self.transition[w[0]][w[1]])
    }

    /// `log mu(u)`, `-inf` when the word has zero mass.
    pub fn log_word_probability(&self, u: &[Symbol]) -> f64 {
        let mut lp = self.stationary[u[0]].ln();
        for w in u.windows(2) {
            lp += self.transition[w[0]][w[1]].ln();
        }
        lp
    }

    /// Whether `u` has positive mass, decided on the support graph.
    pub fn is_positive(&self, u: &[Symbol]) -> bool {
        !u.is_empty()
            && u.iter().all(|&s| s < self.size())
            && self.stationary[u[0]] > 0.0
            && u.windows(2).all(|w| self.transition[w[0]][w[1]] > 0.0)
    }

    pub fn sample_start(&self, rng: &mut Rng) -> Symbol {
        draw(&self.start_cumulative, rng.gen())
    }

    #[inline]
    pub fn sample_next(&self, a: Symbol, rng: &mut Rng) -> Symbol {
        draw(&self.cumulative[a], rng.gen())
    }

    /// Stationary path of the given length.
    pub fn sample_path(&self, length: usize, rng: &mut Rng) -> Word {
        let mut out = Vec::with_capacity(length);
        if length == 0 {
            return out;
        }
        let mut a = self.sample_start(rng);
        out.push(a);
        for _ in 1..length {
            a = self.sample_next(a, rng);
            out.push(a);
        }
        out
    }

    /// Measure of maximal entropy of an irreducible SFT.
    pub fn parry(sft: &Sft) -> Result<Self> {
        let a = sft.matrix();
        let pf = perron(&a)?;
        let n = sft.size();
        let transition: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a[i][j] * pf.right[j] / (pf.rho * pf.right[i])).collect())
            .collect();
        let mut pi: Vec<f64> = (0..n).map(|i| pf.left[i] * pf.right[i]).collect();
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= s);
        Ok(Self::assemble(sft.clone(), transition, pi))
    }

    /// Random Markov measure with full support on the allowed transitions.
    pub fn random(sft: &Sft, rng: &mut Rng) -> Result<Self> {
        let n = sft.size();
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| if sft.allowed(a, b) { rng.gen_range(0.05..1.0) } else { 0.0 }).collect())
            .collect();
        Self::from_weights(sft.clone(), &weights)
    }
}

/// Unique stationary vector, or an error when the chain has several closed classes.
fn solve_stationary(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    // rows 0..n: (P^T - I) pi = 0; row n: sum pi = 1
    let mut m = DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        m[(n, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let svd = m.svd(true, true);
    let smallest = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < 1e-10 {
        return Err(Error::InvalidInput("stationary distribution is not unique; supply one".into()));
    }
    let sol = svd.solve(&rhs, 1e-14).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut pi: Vec<f64> = sol.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(pi)
}
