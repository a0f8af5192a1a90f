use super::{Alphabet, Sft, Symbol, Word};
use crate::error::{Error, Result};
use crate::symset::SymbolSet;
use std::collections::HashMap;

/// A one-step SFT `X` together with a one-block code onto its sofic image.
///
/// The image `Y` is kept only as the labeled graph of `X` (each vertex labeled
/// by its code symbol). Questions about `Y`-words are answered with the
/// layered preimage graph: layer `i` holds the `X`-symbols mapping to `w_i`,
/// and edges between consecutive layers are allowed `X`-transitions.
#[derive(Debug, Clone)]
pub struct FactorTriple {
    x: Sft,
    y: Alphabet,
    code: Vec<Symbol>,
    preimages: Vec<Vec<Symbol>>,
    pre_sets: Vec<SymbolSet>,
    pred_sets: Vec<SymbolSet>,
    irreducible: bool,
}

impl FactorTriple {
    /// `code` maps `X`-symbol names to `Y`-symbol names. Entries for symbols
    /// removed by pruning are ignored; every surviving symbol needs an entry.
    pub fn new<S: AsRef<str>, T: AsRef<str>>(x: Sft, code: &[(S, T)]) -> Result<Self> {
        let mut by_name: HashMap<&str, &str> = HashMap::new();
        for (a, b) in code {
            by_name.insert(a.as_ref(), b.as_ref());
        }
        let mut y_names: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(x.size());
        for a in 0..x.size() {
            let name = x.alphabet().name(a);
            let img = by_name
                .get(name)
                .ok_or_else(|| Error::InvalidInput(format!("code is not defined on `{name}`")))?;
            let idx = match y_names.iter().position(|n| n == img) {
                Some(i) => i,
                None => {
                    y_names.push(img.to_string());
                    y_names.len() - 1
                }
            };
            codes.push(idx);
        }
        Self::from_indices(x, &y_names, codes)
    }

    /// Build from an index-level code; `y_names[code[a]]` names the image of `a`.
    pub fn from_indices<S: AsRef<str>>(x: Sft, y_names: &[S], code: Vec<Symbol>) -> Result<Self> {
        if code.len() != x.size() {
            return Err(Error::InvalidInput("code length differs from alphabet size".into()));
        }
        let y = Alphabet::new(y_names)?;
        let mut preimages = vec![Vec::new(); y.len()];
        for (a, &b) in code.iter().enumerate() {
            if b >= y.len() {
                return Err(Error::UnknownSymbol(format!("#{b}")));
            }
            preimages[b].push(a);
        }
        if let Some(b) = preimages.iter().position(|p| p.is_empty()) {
            return Err(Error::InvalidInput(format!("Y-symbol `{}` has no preimage", y.name(b))));
        }
        let n = x.size();
        let pre_sets = preimages.iter().map(|p| SymbolSet::from_iter(n, p.iter().copied())).collect();
        let pred_sets = (0..n).map(|a| SymbolSet::from_iter(n, x.predecessors(a).iter().copied())).collect();
        let irreducible = x.is_irreducible();
        Ok(FactorTriple { x, y, code, preimages, pre_sets, pred_sets, irreducible })
    }

    /// The identity code of `x` onto itself.
    pub fn identity(x: Sft) -> Result<Self> {
        let names: Vec<String> = x.alphabet().names().to_vec();
        let code = (0..x.size()).collect();
        Self::from_indices(x, &names, code)
    }

    pub fn x(&self) -> &Sft {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn x_size(&self) -> usize {
        self.x.size()
    }

    pub fn y_size(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn code(&self, a: Symbol) -> Symbol {
        self.code[a]
    }

    pub fn code_table(&self) -> &[Symbol] {
        &self.code
    }

    pub fn preimage(&self, b: Symbol) -> &[Symbol] {
        &self.preimages[b]
    }

    pub fn preimage_set(&self, b: Symbol) -> &SymbolSet {
        &self.pre_sets[b]
    }

    /// Whether the underlying `X` is irreducible; recorded, not required.
    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Symbol-wise image of a legal `X`-word.
    pub fn apply_code(&self, u: &[Symbol]) -> Result<Word> {
        if let Some(&bad) = u.iter().find(|&&s| s >= self.x.size()) {
            return Err(Error::UnknownSymbol(format!("#{bad}")));
        }
        self.x.check_legal(u)?;
        Ok(u.iter().map(|&a| self.code[a]).collect())
    }

    /// Image of a word, skipping the legality check (hot paths).
    pub fn image(&self, u: &[Symbol]) -> Word {
        u.iter().map(|&a| self.code[a]).collect()
    }

    fn check_y_symbols(&self, w: &[Symbol]) -> Result<()> {
        match w.iter().find(|&&b| b >= self.y.len()) {
            Some(&b) => Err(Error::UnknownSymbol(format!("#{b}"))),
            None => Ok(()),
        }
    }

    /// Advance a reachable set one layer to `next` (a `Y`-symbol).
    #[inline]
    pub fn step_forward(&self, from: &SymbolSet, next: Symbol) -> SymbolSet {
        let mut out = SymbolSet::empty(self.x.size());
        for a in from.iter() {
            out.union_with(self.x.successor_set(a));
        }
        out.intersect_with(&self.pre_sets[next]);
        out
    }

    #[inline]
    fn step_backward(&self, from: &SymbolSet, prev: Symbol) -> SymbolSet {
        let mut out = SymbolSet::empty(self.x.size());
        for a in from.iter() {
            out.union_with(&self.pred_sets[a]);
        }
        out.intersect_with(&self.pre_sets[prev]);
        out
    }

    /// `reach[i]`: symbols at layer `i` reachable from `start` at layer 0.
    pub fn forward_layers(&self, w: &[Symbol], start: &SymbolSet) -> Vec<SymbolSet> {
        let mut layers = Vec::with_capacity(w.len());
        let mut cur = start.intersection(&self.pre_sets[w[0]]);
        layers.push(cur.clone());
        for &b in &w[1..] {
            cur = self.step_forward(&cur, b);
            layers.push(cur.clone());
        }
        layers
    }

    /// `reach[i]`: symbols at layer `i` from which `end` at the last layer is reachable.
    pub fn backward_layers(&self, w: &[Symbol], end: &SymbolSet) -> Vec<SymbolSet> {
        let k = w.len();
        let mut layers = vec![SymbolSet::empty(self.x.size()); k];
        let mut cur = end.intersection(&self.pre_sets[w[k - 1]]);
        layers[k - 1] = cur.clone();
        for i in (0..k - 1).rev() {
            cur = self.step_backward(&cur, w[i]);
            layers[i] = cur.clone();
        }
        layers
    }

    /// Whether `w` is a word of the image language.
    pub fn is_y_word(&self, w: &[Symbol]) -> bool {
        if w.is_empty() || self.check_y_symbols(w).is_err() {
            return false;
        }
        let full = SymbolSet::full(self.x.size());
        !self.forward_layers(w, &full).last().unwrap().is_empty()
    }

    /// Legal `Y`-words of length `len`, lexicographic in `Y`-alphabet order.
    pub fn enumerate_y_blocks(&self, len: usize, cap: usize) -> Result<Vec<Word>> {
        if len == 0 {
            return Err(Error::DomainError("block length must be at least 1".into()));
        }
        let mut out = Vec::new();
        let full = SymbolSet::full(self.x.size());
        let mut stack: Vec<(Word, SymbolSet)> = (0..self.y.len())
            .rev()
            .map(|b| (vec![b], full.intersection(&self.pre_sets[b])))
            .collect();
        while let Some((w, reach)) = stack.pop() {
            if w.len() == len {
                out.push(w);
                if out.len() > cap {
                    return Err(Error::ResourceLimit {
                        what: format!("Y {len}-blocks"),
                        needed: out.len() as u128,
                        cap: cap as u128,
                    });
                }
                continue;
            }
            for b in (0..self.y.len()).rev() {
                let next = self.step_forward(&reach, b);
                if !next.is_empty() {
                    let mut nw = w.clone();
                    nw.push(b);
                    stack.push((nw, next));
                }
            }
        }
        Ok(out)
    }

    /// Number of `X`-words projecting to `w`, saturating.
    pub fn count_preimages(&self, w: &[Symbol]) -> u128 {
        let n = self.x.size();
        let mut counts = vec![0u128; n];
        for &a in &self.preimages[w[0]] {
            counts[a] = 1;
        }
        for &b in &w[1..] {
            let mut next = vec![0u128; n];
            for (a, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &s in self.x.successors(a) {
                    if self.code[s] == b {
                        next[s] = next[s].saturating_add(c);
                    }
                }
            }
            counts = next;
        }
        counts.iter().fold(0, |a, &c| a.saturating_add(c))
    }

    /// All `X`-words projecting to `w`, lexicographic.
    pub fn enumerate_preimages(&self, w: &[Symbol], cap: usize) -> Result<Vec<Word>> {
        let count = self.count_preimages(w);
        if count > cap as u128 {
            return Err(Error::ResourceLimit { what: "preimage words".into(), needed: count, cap: cap as u128 });
        }
        let full = SymbolSet::full(self.x.size());
        let back = self.backward_layers(w, &full);
        let mut out = Vec::with_capacity(count as usize);
        let mut stack: Vec<Word> = back[0].iter().collect::<Vec<_>>().into_iter().rev().map(|a| vec![a]).collect();
        while let Some(u) = stack.pop() {
            let i = u.len();
            if i == w.len() {
                out.push(u);
                continue;
            }
            let last = *u.last().unwrap();
            let nexts: Vec<Symbol> =
                self.x.successors(last).iter().copied().filter(|&s| back[i].contains(s)).collect();
            for &s in nexts.iter().rev() {
                let mut nu = u.clone();
                nu.push(s);
                stack.push(nu);
            }
        }
        Ok(out)
    }

    /// Pairs `(first, last)` realised by some `X`-word projecting to `w`.
    pub fn endpoint_pairs(&self, w: &[Symbol]) -> Vec<(Symbol, Symbol)> {
        let n = self.x.size();
        let mut out = Vec::new();
        for &s in &self.preimages[w[0]] {
            let reach = self.forward_layers(w, &SymbolSet::singleton(n, s));
            for e in reach.last().unwrap().iter() {
                out.push((s, e));
            }
        }
        out
    }

    /// Symbols `a` at time `n` such that some word projecting to `w` starts
    /// with `first`, ends with `last` and has `a` at `n`.
    pub fn routing_set(&self, w: &[Symbol], first: Symbol, last: Symbol, n: usize) -> SymbolSet {
        let size = self.x.size();
        let fwd = self.forward_layers(&w[..=n], &SymbolSet::singleton(size, first));
        let bwd = self.backward_layers(&w[n..], &SymbolSet::singleton(size, last));
        fwd[n].intersection(&bwd[0])
    }

    /// Lexicographically least `X`-word projecting to `w`, with the given
    /// first and last symbols and `via` at time `n`.
    pub fn least_path_through(
        &self,
        w: &[Symbol],
        first: Symbol,
        last: Symbol,
        n: usize,
        via: Symbol,
    ) -> Option<Word> {
        let size = self.x.size();
        let k = w.len();
        // allowed[i]: symbols at layer i lying on some valid path
        let fwd = self.forward_layers(w, &SymbolSet::singleton(size, first));
        let bwd = self.backward_layers(w, &SymbolSet::singleton(size, last));
        let mut allowed: Vec<SymbolSet> = fwd.iter().zip(&bwd).map(|(f, b)| f.intersection(b)).collect();
        if !allowed[n].contains(via) {
            return None;
        }
        // restrict to paths through `via` at n
        allowed[n] = SymbolSet::singleton(size, via);
        let left = self.backward_layers(&w[..=n], &allowed[n]);
        let right = self.forward_layers(&w[n..], &allowed[n]);
        for i in 0..=n {
            allowed[i].intersect_with(&left[i]);
        }
        for i in n..k {
            allowed[i].intersect_with(&right[i - n]);
        }
        // greedy lexicographic walk; every kept symbol extends to the end
        let mut path = Vec::with_capacity(k);
        path.push(allowed[0].first()?);
        for i in 1..k {
            let prev = path[i - 1];
            let next = self.x.successor_set(prev).intersection(&allowed[i]);
            path.push(next.first()?);
        }
        Some(path)
    }

    /// The fiber product: pairs of `X`-symbols with equal image.
    pub fn fiber_product(&self) -> Result<FiberProduct> {
        let mut pairs = Vec::new();
        for b in 0..self.y.len() {
            for &a in &self.preimages[b] {
                for &c in &self.preimages[b] {
                    pairs.push((a, c));
                }
            }
        }
        pairs.sort_unstable();
        let names: Vec<String> = pairs
            .iter()
            .map(|&(a, c)| format!("({},{})", self.x.alphabet().name(a), self.x.alphabet().name(c)))
            .collect();
        let adj: Vec<Vec<bool>> = pairs
            .iter()
            .map(|&(a, c)| pairs.iter().map(|&(a2, c2)| self.x.allowed(a, a2) && self.x.allowed(c, c2)).collect())
            .collect();
        let sft = Sft::from_matrix_named(Alphabet::new(&names)?, &adj)?;
        let kept: Vec<(Symbol, Symbol)> = sft
            .alphabet()
            .names()
            .iter()
            .map(|nm| pairs[names.iter().position(|x| x == nm).unwrap()])
            .collect();
        let index = kept.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let image = kept.iter().map(|&(a, _)| self.code[a]).collect();
        Ok(FiberProduct { sft, pairs: kept, index, image })
    }
}

/// The SFT of pairs `(a, b)` with `code(a) = code(b)`.
#[derive(Debug, Clone)]
pub struct FiberProduct {
    pub sft: Sft,
    pairs: Vec<(Symbol, Symbol)>,
    index: HashMap<(Symbol, Symbol), Symbol>,
    image: Vec<Symbol>,
}

impl FiberProduct {
    pub fn pair(&self, s: Symbol) -> (Symbol, Symbol) {
        self.pairs[s]
    }

    pub fn pairs(&self) -> &[(Symbol, Symbol)] {
        &self.pairs
    }

    pub fn lookup(&self, a: Symbol, b: Symbol) -> Option<Symbol> {
        self.index.get(&(a, b)).copied()
    }

    /// Common `Y`-image of a pair symbol.
    pub fn image(&self, s: Symbol) -> Symbol {
        self.image[s]
    }

    /// Pair word from two aligned `X`-words.
    pub fn zip(&self, u: &[Symbol], v: &[Symbol]) -> Option<Word> {
        u.iter().zip(v).map(|(&a, &b)| self.lookup(a, b)).collect()
    }
}
