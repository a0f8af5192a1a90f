use super::{Alphabet, FactorTriple, Sft, Symbol, Word};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// A factor triple given by forbidden words and a sliding block code with
/// window `[-left, right]`.
#[derive(Debug, Clone)]
pub struct GeneralTriple {
    pub alphabet: Alphabet,
    /// Forbidden words; a one-step SFT contributes its disallowed pairs here.
    pub forbidden: Vec<Word>,
    pub left: usize,
    pub right: usize,
    /// Image symbol of every legal `(left + right + 1)`-word.
    pub code: HashMap<Word, String>,
}

impl GeneralTriple {
    pub fn window(&self) -> usize {
        self.left + self.right + 1
    }

    fn max_forbidden_len(&self) -> usize {
        self.forbidden.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn avoids_forbidden(&self, w: &[Symbol]) -> bool {
        self.forbidden
            .iter()
            .all(|f| f.len() > w.len() || !w.windows(f.len()).any(|s| s == f.as_slice()))
    }

    /// Higher-block presentation. Block length is the smallest making both the
    /// shift one-step and the code one-block: `max(m - 1, window, 1)` where `m`
    /// is the longest forbidden word.
    pub fn recode(&self) -> Result<RecodedTriple> {
        let k = self.max_forbidden_len().saturating_sub(1).max(self.window()).max(1);
        let n = self.alphabet.len();
        let mut blocks: Vec<Word> = Vec::new();
        let mut stack: Vec<Word> = (0..n).rev().map(|a| vec![a]).collect();
        while let Some(w) = stack.pop() {
            if !self.avoids_forbidden(&w) {
                continue;
            }
            if w.len() == k {
                blocks.push(w);
                continue;
            }
            for a in (0..n).rev() {
                let mut nw = w.clone();
                nw.push(a);
                stack.push(nw);
            }
        }
        if blocks.is_empty() {
            return Err(Error::EmptyShift);
        }
        let names: Vec<String> = blocks.iter().map(|b| self.alphabet.render(b)).collect();
        let adj: Vec<Vec<bool>> = blocks
            .iter()
            .map(|u| {
                blocks
                    .iter()
                    .map(|v| {
                        u[1..] == v[..k - 1] && {
                            let mut joined = u.clone();
                            joined.push(v[k - 1]);
                            self.avoids_forbidden(&joined)
                        }
                    })
                    .collect()
            })
            .collect();
        let names_alpha = Alphabet::new(&names)?;
        let x = Sft::from_matrix_named(names_alpha, &adj)?;
        let by_name: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let kept: Vec<Word> = x.alphabet().names().iter().map(|nm| blocks[by_name[nm.as_str()]].clone()).collect();
        let mut pairs = Vec::with_capacity(kept.len());
        for (nm, b) in x.alphabet().names().iter().zip(&kept) {
            let img = self
                .code
                .get(&b[..self.window()])
                .ok_or_else(|| Error::InvalidInput(format!("code undefined on `{}`", self.alphabet.render(&b[..self.window()]))))?;
            pairs.push((nm.clone(), img.clone()));
        }
        let triple = FactorTriple::new(x, &pairs)?;
        let index = kept.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        Ok(RecodedTriple { triple, block_len: k, left: self.left, source: self.alphabet.clone(), blocks: kept, index })
    }
}

/// A recoded triple with the dictionaries of the conjugacy.
#[derive(Debug, Clone)]
pub struct RecodedTriple {
    pub triple: FactorTriple,
    block_len: usize,
    left: usize,
    source: Alphabet,
    blocks: Vec<Word>,
    index: HashMap<Word, Symbol>,
}

impl RecodedTriple {
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Offset between a higher-block coordinate and the source coordinate
    /// whose image it carries.
    pub fn image_offset(&self) -> usize {
        self.left
    }

    pub fn source_alphabet(&self) -> &Alphabet {
        &self.source
    }

    pub fn block(&self, s: Symbol) -> &[Symbol] {
        &self.blocks[s]
    }

    /// Source word of length `L >= block_len` to its `L - block_len + 1` blocks.
    pub fn encode(&self, u: &[Symbol]) -> Result<Word> {
        if u.len() < self.block_len {
            return Err(Error::InvalidInput(format!("word shorter than block length {}", self.block_len)));
        }
        let out: Word = u
            .windows(self.block_len)
            .map(|b| self.index.get(b).copied().ok_or_else(|| Error::IllegalWord(self.source.render(b))))
            .collect::<Result<_>>()?;
        self.triple.x().check_legal(&out)?;
        Ok(out)
    }

    pub fn decode(&self, v: &[Symbol]) -> Result<Word> {
        if v.is_empty() {
            return Ok(Vec::new());
        }
        self.triple.x().check_legal(v)?;
        let mut out = self.blocks[v[0]].clone();
        out.extend(v[1..].iter().map(|&s| self.blocks[s][self.block_len - 1]));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn golden_general(left: usize, right: usize) -> GeneralTriple {
        let alphabet = Alphabet::new(&["0", "1"]).unwrap();
        let mut code = HashMap::new();
        let width = left + right + 1;
        for c in 0..(1usize << width) {
            let w: Word = (0..width).map(|i| (c >> (width - 1 - i)) & 1).collect();
            // image: number of ones in the window
            code.insert(w.clone(), w.iter().sum::<usize>().to_string());
        }
        GeneralTriple { alphabet, forbidden: vec![vec![1, 1]], left, right, code }
    }

    #[test]
    fn one_step_one_block_is_renaming() {
        let g = golden_general(0, 0);
        let r = g.recode().unwrap();
        assert_eq!(r.block_len(), 1);
        assert_eq!(r.triple.x().alphabet().names(), &["0", "1"]);
        assert!(r.triple.x().allowed(0, 1) && !r.triple.x().allowed(1, 1));
    }

    #[test]
    fn window_two_gives_three_blocks() {
        let r = golden_general(0, 1).recode().unwrap();
        assert_eq!(r.block_len(), 2);
        assert_eq!(r.triple.x().alphabet().names(), &["00", "01", "10"]);
    }

    #[test]
    fn round_trip_on_random_words() {
        let g = golden_general(1, 1);
        let r = g.recode().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let len = rng.gen_range(3..40);
            let mut u = vec![rng.gen_range(0..2usize)];
            while u.len() < len {
                let next = if *u.last().unwrap() == 1 { 0 } else { rng.gen_range(0..2) };
                u.push(next);
            }
            let v = r.encode(&u).unwrap();
            assert_eq!(r.decode(&v).unwrap(), u);
        }
    }
}
