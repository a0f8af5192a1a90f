use super::markov::MarkovMeasure;
use super::perron::perron;
use crate::error::{Error, Result};
use crate::shift::{Alphabet, Sft, Symbol, Word};
use std::collections::BTreeMap;

const BLOCK_CAP: usize = 1 << 20;

/// A real function of the first `range` coordinates, tabulated on legal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    range: usize,
    table: BTreeMap<Word, f64>,
    variation: Vec<f64>,
}

impl Potential {
    /// `entries` must cover every legal `range`-block of `sft`.
    pub fn from_table(sft: &Sft, range: usize, entries: BTreeMap<Word, f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::DomainError("potential range must be at least 1".into()));
        }
        let blocks = sft.enumerate_blocks(range, BLOCK_CAP)?;
        let mut table = BTreeMap::new();
        for b in blocks {
            let v = *entries
                .get(&b)
                .ok_or_else(|| Error::InvalidInput(format!("potential undefined on `{}`", sft.alphabet().render(&b))))?;
            if !v.is_finite() {
                return Err(Error::InvalidInput("potential values must be finite".into()));
            }
            table.insert(b, v);
        }
        let variation = variation_of(&table, range);
        Ok(Potential { range, table, variation })
    }

    pub fn zero(sft: &Sft) -> Self {
        Self::constant(sft, 0.0)
    }

    pub fn constant(sft: &Sft, c: f64) -> Self {
        Self::from_symbol_values(sft, &vec![c; sft.size()]).expect("one value per symbol")
    }

    /// Range-one potential `V(x) = values[x_0]`.
    pub fn from_symbol_values(sft: &Sft, values: &[f64]) -> Result<Self> {
        if values.len() != sft.size() {
            return Err(Error::InvalidInput(format!("need {} values", sft.size())));
        }
        let entries = values.iter().enumerate().map(|(a, &v)| (vec![a], v)).collect();
        Self::from_table(sft, 1, entries)
    }

    /// `c` times the indicator of `x_0 = a`.
    pub fn indicator(sft: &Sft, a: Symbol, c: f64) -> Result<Self> {
        let values: Vec<f64> = (0..sft.size()).map(|s| if s == a { c } else { 0.0 }).collect();
        Self::from_symbol_values(sft, &values)
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn table(&self) -> &BTreeMap<Word, f64> {
        &self.table
    }

    /// `var_j` for `j = 0..=range`; zero from `range` on.
    pub fn variation(&self) -> &[f64] {
        &self.variation
    }

    /// `sum_{j >= 1} var_j`.
    pub fn variation_tail(&self) -> f64 {
        self.variation.iter().skip(1).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.table.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.table.values().all(|&v| v == 0.0)
    }

    /// Value at a point whose coordinates from 0 start with `block`.
    #[inline]
    pub fn value(&self, block: &[Symbol]) -> f64 {
        self.table.get(&block[..self.range]).copied().unwrap_or(0.0)
    }

    /// `sum_i V(sigma^i x)` over positions whose window fits inside `x`.
    pub fn birkhoff_sum(&self, x: &[Symbol]) -> f64 {
        if self.range == 1 {
            let mut vals = vec![0.0; self.table.len()];
            for (b, &v) in &self.table {
                vals[b[0]] = v;
            }
            return x.iter().map(|&a| vals[a]).sum();
        }
        x.windows(self.range).map(|w| self.value(w)).sum()
    }

    /// Average of `V` along `x`.
    pub fn empirical_mean(&self, x: &[Symbol]) -> f64 {
        let count = x.len().saturating_sub(self.range - 1);
        if count == 0 {
            return 0.0;
        }
        self.birkhoff_sum(x) / count as f64
    }
}

fn variation_of(table: &BTreeMap<Word, f64>, range: usize) -> Vec<f64> {
    let mut var = vec![0.0; range + 1];
    for (j, slot) in var.iter_mut().enumerate().take(range) {
        let mut by_prefix: BTreeMap<&[Symbol], (f64, f64)> = BTreeMap::new();
        for (b, &v) in table {
            let e = by_prefix.entry(&b[..j]).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
        *slot = by_prefix.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    }
    var
}

/// Equilibrium state of a finite-range potential: a Markov measure on the
/// `max(range - 1, 1)`-block presentation, with its pressure.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub measure: MarkovMeasure,
    pub pressure: f64,
    pub block_len: usize,
    /// Source block for each state of `measure`.
    pub blocks: Vec<Word>,
}

pub fn equilibrium_state(sft: &Sft, v: &Potential) -> Result<EquilibriumState> {
    if !sft.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let m = v.range().saturating_sub(1).max(1);
    let k = v.range();
    let (block_sft, blocks) = if m == 1 {
        (sft.clone(), (0..sft.size()).map(|a| vec![a]).collect::<Vec<_>>())
    } else {
        let blocks = sft.enumerate_blocks(m, BLOCK_CAP)?;
        let names: Vec<String> = blocks.iter().map(|b| sft.alphabet().render(b)).collect();
        let adj: Vec<Vec<bool>> = blocks
            .iter()
            .map(|u| blocks.iter().map(|w| u[1..] == w[..m - 1] && sft.allowed(u[m - 1], w[m - 1])).collect())
            .collect();
        let s = Sft::from_matrix_named(Alphabet::new(&names)?, &adj)?;
        // legal blocks of an essential SFT survive pruning, so order is kept
        (s, blocks)
    };
    let n = block_sft.size();
    let mut lmat = vec![vec![0.0; n]; n];
    for (i, u) in blocks.iter().enumerate() {
        for &j in block_sft.successors(i) {
            let mut joined = u.clone();
            joined.push(*blocks[j].last().unwrap());
            lmat[i][j] = v.value(&joined[..k]).exp();
        }
    }
    let pf = perron(&lmat)?;
    let transition: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| lmat[i][j] * pf.right[j] / (pf.rho * pf.right[i])).collect())
        .collect();
    let mut pi: Vec<f64> = (0..n).map(|i| pf.left[i] * pf.right[i]).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    Ok(EquilibriumState {
        measure: MarkovMeasure::from_parts_unchecked(block_sft, transition, pi),
        pressure: pf.rho.ln(),
        block_len: m,
        blocks,
    })
}

/// `h(mu) + integral of V`, with `mu` on the same SFT as `V`.
pub fn pressure_value(mu: &MarkovMeasure, v: &Potential) -> f64 {
    mu.entropy() + integral(mu, v)
}

pub fn integral(mu: &MarkovMeasure, v: &Potential) -> f64 {
    v.table().iter().map(|(b, &val)| mu.word_probability_unchecked(b) * val).sum()
}
