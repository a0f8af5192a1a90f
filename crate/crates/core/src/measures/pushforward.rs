use super::markov::MarkovMeasure;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::shift::{FactorTriple, Symbol, Word};
use crate::symset::SymbolSet;
use rand::Rng as _;

/// Image of a Markov measure under a one-block code, evaluated as a hidden
/// Markov chain over the layered preimage graph.
#[derive(Debug, Clone)]
pub struct PushforwardMeasure {
    source: MarkovMeasure,
    triple: FactorTriple,
}

impl PushforwardMeasure {
    pub fn new(source: MarkovMeasure, triple: FactorTriple) -> Result<Self> {
        if source.sft().alphabet() != triple.x().alphabet() || source.sft().transitions() != triple.x().transitions() {
            return Err(Error::InvalidInput("measure and triple live on different shifts".into()));
        }
        Ok(PushforwardMeasure { source, triple })
    }

    pub fn source(&self) -> &MarkovMeasure {
        &self.source
    }

    pub fn triple(&self) -> &FactorTriple {
        &self.triple
    }

    fn check(&self, w: &[Symbol]) -> Result<()> {
        if let Some(&b) = w.iter().find(|&&b| b >= self.triple.y_size()) {
            return Err(Error::UnknownSymbol(format!("#{b}")));
        }
        if w.is_empty() || !self.triple.is_y_word(w) {
            return Err(Error::IllegalWord(self.triple.y_alphabet().render(w)));
        }
        Ok(())
    }

    /// `nu(w)` for a word of the image language.
    pub fn word_probability(&self, w: &[Symbol]) -> Result<f64> {
        self.check(w)?;
        Ok(self.prob(w))
    }

    /// `nu(w)` without validation; zero off the language.
    pub fn prob(&self, w: &[Symbol]) -> f64 {
        let (log_scale, alpha) = self.forward(w);
        alpha.iter().sum::<f64>() * log_scale.exp()
    }

    /// `log nu(w)` computed with per-layer normalisation, safe for long words.
    pub fn log_prob(&self, w: &[Symbol]) -> f64 {
        let (log_scale, alpha) = self.forward(w);
        let s: f64 = alpha.iter().sum();
        if s > 0.0 {
            log_scale + s.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn forward(&self, w: &[Symbol]) -> (f64, Vec<f64>) {
        let n = self.source.size();
        let mu = &self.source;
        let mut alpha = vec![0.0; n];
        for &a in self.triple.preimage(w[0]) {
            alpha[a] = mu.stationary()[a];
        }
        let mut log_scale = 0.0;
        for &b in &w[1..] {
            let mut next = vec![0.0; n];
            for &t in self.triple.preimage(b) {
                let mut s = 0.0;
                for (a, &al) in alpha.iter().enumerate() {
                    if al > 0.0 {
                        s += al * mu.p(a, t);
                    }
                }
                next[t] = s;
            }
            let z: f64 = next.iter().sum();
            if z <= 0.0 {
                return (0.0, vec![0.0; n]);
            }
            next.iter_mut().for_each(|x| *x /= z);
            log_scale += z.ln();
            alpha = next;
        }
        (log_scale, alpha)
    }

    /// Exact positivity of `nu(w)` on the support graph of the source.
    pub fn is_positive(&self, w: &[Symbol]) -> bool {
        if w.is_empty() || w.iter().any(|&b| b >= self.triple.y_size()) {
            return false;
        }
        let n = self.source.size();
        let mu = &self.source;
        let mut reach = SymbolSet::from_iter(
            n,
            self.triple.preimage(w[0]).iter().copied().filter(|&a| mu.stationary()[a] > 0.0),
        );
        for &b in &w[1..] {
            let mut next = SymbolSet::empty(n);
            for a in reach.iter() {
                for &t in self.triple.x().successors(a) {
                    if mu.p(a, t) > 0.0 && self.triple.code(t) == b {
                        next.insert(t);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            reach = next;
        }
        !reach.is_empty()
    }

    /// Stationary draw of an image path.
    pub fn sample_path(&self, length: usize, rng: &mut Rng) -> Word {
        self.triple.image(&self.source.sample_path(length, rng))
    }

    /// Exact draw from the source conditioned on having image `y`.
    pub fn conditional_sample(&self, y: &[Symbol], rng: &mut Rng) -> Result<Word> {
        conditional_sample(&self.source, &self.triple, y, rng)
    }
}

/// Draw from `mu` conditioned on the image window being `y`: backward
/// accumulation of preimage-layer mass, then forward sampling.
pub fn conditional_sample(mu: &MarkovMeasure, triple: &FactorTriple, y: &[Symbol], rng: &mut Rng) -> Result<Word> {
    if y.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(&b) = y.iter().find(|&&b| b >= triple.y_size()) {
        return Err(Error::UnknownSymbol(format!("#{b}")));
    }
    let n = mu.size();
    let k = y.len();
    // beta[i][a]: normalised mass of continuations of a at layer i
    let mut beta = vec![vec![0.0; n]; k];
    for &a in triple.preimage(y[k - 1]) {
        beta[k - 1][a] = 1.0;
    }
    for i in (0..k - 1).rev() {
        let (head, tail) = beta.split_at_mut(i + 1);
        let next = &tail[0];
        let cur = &mut head[i];
        let mut z = 0.0;
        for &a in triple.preimage(y[i]) {
            let mut s = 0.0;
            for &t in triple.preimage(y[i + 1]) {
                s += mu.p(a, t) * next[t];
            }
            cur[a] = s;
            z += s;
        }
        if z <= 0.0 {
            return Err(Error::ZeroMassWord);
        }
        cur.iter_mut().for_each(|x| *x /= z);
    }
    let weights: Vec<(Symbol, f64)> =
        triple.preimage(y[0]).iter().map(|&a| (a, mu.stationary()[a] * beta[0][a])).collect();
    let mut a = pick(&weights, rng).ok_or(Error::ZeroMassWord)?;
    let mut out = Vec::with_capacity(k);
    out.push(a);
    for i in 1..k {
        let weights: Vec<(Symbol, f64)> = triple.preimage(y[i]).iter().map(|&t| (t, mu.p(a, t) * beta[i][t])).collect();
        a = pick(&weights, rng).ok_or(Error::ZeroMassWord)?;
        out.push(a);
    }
    Ok(out)
}

fn pick(weights: &[(Symbol, f64)], rng: &mut Rng) -> Option<Symbol> {
    let total: f64 = weights.iter().map(|w| w.1).sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.gen::<f64>() * total;
    let mut last = None;
    for &(s, w) in weights {
        if w <= 0.0 {
            continue;
        }
        last = Some(s);
        if u < w {
            return Some(s);
        }
        u -= w;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::rng;

    #[test]
    fn point_image_has_mass_one() {
        let t1 = corpus::t1();
        let nu = PushforwardMeasure::new(corpus::bernoulli(&t1, 0.3), t1).unwrap();
        assert!((nu.word_probability(&[0, 0, 0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_pushforward_equals_source() {
        let t = corpus::identity_golden_mean();
        let mu = crate::measures::MarkovMeasure::parry(t.x()).unwrap();
        let nu = PushforwardMeasure::new(mu.clone(), t.clone()).unwrap();
        for w in t.x().enumerate_blocks(5, 100).unwrap() {
            assert!((nu.prob(&w) - mu.word_probability(&w).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn conditional_on_identity_returns_y() {
        let t = corpus::identity_golden_mean();
        let mu = crate::measures::MarkovMeasure::parry(t.x()).unwrap();
        let y = vec![0, 1, 0, 0, 1];
        assert_eq!(conditional_sample(&mu, &t, &y, &mut rng::seeded(1)).unwrap(), y);
    }

    #[test]
    fn zero_mass_word_is_reported() {
        let t = corpus::identity_golden_mean();
        let mu = crate::measures::MarkovMeasure::parry(t.x()).unwrap();
        assert_eq!(conditional_sample(&mu, &t, &[1, 1], &mut rng::seeded(1)), Err(Error::ZeroMassWord));
        let nu = PushforwardMeasure::new(mu, t).unwrap();
        assert!(!nu.is_positive(&[1, 1]));
        assert!(nu.is_positive(&[1, 0, 1]));
    }

    #[test]
    fn long_words_do_not_underflow() {
        let t1 = corpus::t1();
        let nu = PushforwardMeasure::new(corpus::bernoulli(&t1, 0.3), t1).unwrap();
        assert!(nu.log_prob(&vec![0; 5000]).abs() < 1e-9);
    }
}
