//! Vertex presentations of one-step shifts of finite type, one-block factor
//! codes onto their sofic images, higher-block recoding and fiber products.
//!
//! Symbols are stored as `usize` indices into an [`Alphabet`]; the alphabet
//! order fixed at construction is the lexicographic order used by every
//! deterministic tie-break in the crate.

mod recode;
mod triple;

pub use recode::{GeneralTriple, RecodedTriple};
pub use triple::{FactorTriple, FiberProduct};

use crate::error::{Error, Result};
use crate::graph;
use crate::symset::SymbolSet;
use std::collections::HashMap;

pub type Symbol = usize;
pub type Word = Vec<Symbol>;

/// Ordered finite set of opaque symbol names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyShift);
        }
        let mut index = HashMap::with_capacity(names.len());
        let mut out = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate symbol `{n}`")));
            }
            out.push(n);
        }
        Ok(Alphabet { names: out, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Result<Symbol> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Parse a word of symbol names.
    pub fn parse_word<S: AsRef<str>>(&self, names: &[S]) -> Result<Word> {
        names.iter().map(|n| self.lookup(n.as_ref())).collect()
    }

    /// Render a word; names are concatenated when all are single characters,
    /// space-separated otherwise.
    pub fn render(&self, w: &[Symbol]) -> String {
        let single = self.names.iter().all(|n| n.chars().count() == 1);
        let parts: Vec<&str> = w.iter().map(|&s| self.name(s)).collect();
        if single {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }
}

/// A one-step shift of finite type given by its allowed transitions, pruned
/// to its essential part.
#[derive(Debug, Clone, PartialEq)]
pub struct Sft {
    alphabet: Alphabet,
    succ: Vec<Vec<Symbol>>,
    pred: Vec<Vec<Symbol>>,
    succ_set: Vec<SymbolSet>,
    removed: Vec<String>,
}

impl Sft {
    /// Build from symbol names and allowed ordered pairs, removing every
    /// symbol that does not lie on a bi-infinite path.
    pub fn build<S: AsRef<str>, T: AsRef<str>>(alphabet: &[S], allowed: &[(T, T)]) -> Result<Self> {
        let full = Alphabet::new(alphabet)?;
        let n = full.len();
        let mut adj = vec![vec![false; n]; n];
        for (a, b) in allowed {
            let a = full.lookup(a.as_ref())?;
            let b = full.lookup(b.as_ref())?;
            adj[a][b] = true;
        }
        Self::from_matrix_named(full, &adj)
    }

    /// Build from a boolean transition matrix over `alphabet`.
    pub fn from_matrix_named(alphabet: Alphabet, adj: &[Vec<bool>]) -> Result<Self> {
        let n = alphabet.len();
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for a in 0..n {
                if !alive[a] {
                    continue;
                }
                let has_out = (0..n).any(|b| alive[b] && adj[a][b]);
                let has_in = (0..n).any(|b| alive[b] && adj[b][a]);
                if !has_out || !has_in {
                    alive[a] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&a| alive[a]).collect();
        if kept.is_empty() {
            return Err(Error::EmptyShift);
        }
        let removed = (0..n).filter(|&a| !alive[a]).map(|a| alphabet.name(a).to_string()).collect();
        let names: Vec<&str> = kept.iter().map(|&a| alphabet.name(a)).collect();
        let new_alpha = Alphabet::new(&names)?;
        let m = kept.len();
        let mut succ = vec![Vec::new(); m];
        let mut pred = vec![Vec::new(); m];
        for (i, &a) in kept.iter().enumerate() {
            for (j, &b) in kept.iter().enumerate() {
                if adj[a][b] {
                    succ[i].push(j);
                    pred[j].push(i);
                }
            }
        }
        let succ_set = succ.iter().map(|s| SymbolSet::from_iter(m, s.iter().copied())).collect();
        Ok(Sft { alphabet: new_alpha, succ, pred, succ_set, removed })
    }

    /// Full shift on the given symbols.
    pub fn full<S: AsRef<str>>(alphabet: &[S]) -> Result<Self> {
        let n = alphabet.len();
        let a = Alphabet::new(alphabet)?;
        Self::from_matrix_named(a, &vec![vec![true; n]; n])
    }

    /// Convert an edge shift: every edge becomes a symbol, and edge `e` may
    /// be followed by `f` when `e` ends where `f` starts.
    pub fn from_edge_graph<S: AsRef<str>>(edges: &[(usize, usize, S)]) -> Result<Self> {
        let names: Vec<&str> = edges.iter().map(|e| e.2.as_ref()).collect();
        let alphabet = Alphabet::new(&names)?;
        let adj: Vec<Vec<bool>> =
            edges.iter().map(|e| edges.iter().map(|f| e.1 == f.0).collect()).collect();
        Self::from_matrix_named(alphabet, &adj)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    /// Names of symbols discarded by pruning.
    pub fn removed(&self) -> &[String] {
        &self.removed
    }

    #[inline]
    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        self.succ_set[a].contains(b)
    }

    pub fn successors(&self, a: Symbol) -> &[Symbol] {
        &self.succ[a]
    }

    pub fn predecessors(&self, a: Symbol) -> &[Symbol] {
        &self.pred[a]
    }

    pub fn successor_set(&self, a: Symbol) -> &SymbolSet {
        &self.succ_set[a]
    }

    pub fn adjacency(&self) -> &[Vec<Symbol>] {
        &self.succ
    }

    /// Allowed pairs as names, in lexicographic order.
    pub fn transitions(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for a in 0..self.size() {
            for &b in &self.succ[a] {
                out.push((self.alphabet.name(a).to_string(), self.alphabet.name(b).to_string()));
            }
        }
        out
    }

    /// 0/1 transition matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n)
            .map(|a| (0..n).map(|b| if self.allowed(a, b) { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    pub fn is_legal(&self, w: &[Symbol]) -> bool {
        w.iter().all(|&s| s < self.size()) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn check_legal(&self, w: &[Symbol]) -> Result<()> {
        if self.is_legal(w) {
            Ok(())
        } else {
            Err(Error::IllegalWord(self.alphabet.render(w)))
        }
    }

    pub fn is_irreducible(&self) -> bool {
        graph::strongly_connected_components(&self.succ).len() == 1
    }

    /// Period of an irreducible shift.
    pub fn period(&self) -> Result<usize> {
        let comps = graph::strongly_connected_components(&self.succ);
        if comps.len() != 1 {
            return Err(Error::NotIrreducible);
        }
        Ok(graph::component_period(&self.succ, &comps[0]))
    }

    /// Number of legal words of length `len`, saturating.
    pub fn count_blocks(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let mut counts = vec![1u128; self.size()];
        for _ in 1..len {
            let mut next = vec![0u128; self.size()];
            for (a, &c) in counts.iter().enumerate() {
                for &b in &self.succ[a] {
                    next[b] = next[b].saturating_add(c);
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
    }

    /// All legal words of length `len`, lexicographic in alphabet order.
    pub fn enumerate_blocks(&self, len: usize, cap: usize) -> Result<Vec<Word>> {
        if len == 0 {
            return Err(Error::DomainError("block length must be at least 1".into()));
        }
        let count = self.count_blocks(len);
        if count > cap as u128 {
            return Err(Error::ResourceLimit { what: format!("{len}-blocks"), needed: count, cap: cap as u128 });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut stack: Vec<Word> = (0..self.size()).rev().map(|a| vec![a]).collect();
        while let Some(w) = stack.pop() {
            if w.len() == len {
                out.push(w);
                continue;
            }
            let last = *w.last().unwrap();
            for &b in self.succ[last].iter().rev() {
                let mut nw = w.clone();
                nw.push(b);
                stack.push(nw);
            }
        }
        Ok(out)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn brute_force_count(sft: &Sft, len: usize) -> usize {
        let n = sft.size();
        let total = n.pow(len as u32);
        (0..total)
            .filter(|&code| {
                let mut w = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    w.push(c % n);
                    c /= n;
                }
                sft.is_legal(&w)
            })
            .count()
    }

    #[test]
    fn golden_mean_survives_pruning() {
        let g = golden_mean();
        assert_eq!(g.size(), 2);
        assert!(g.removed().is_empty());
    }

    #[test]
    fn full_two_shift() {
        let f = full2();
        assert_eq!(f.size(), 2);
        assert_eq!(f.transitions().len(), 4);
    }

    #[test]
    fn no_cycle_is_empty() {
        assert_eq!(Sft::build(&["0", "1"], &[("0", "1")]).unwrap_err(), Error::EmptyShift);
    }

    #[test]
    fn stranded_symbols_are_removed() {
        // 2 only reachable, never left
        let s = Sft::build(&["0", "1", "2"], &[("0", "1"), ("1", "0"), ("1", "2")]).unwrap();
        assert_eq!(s.size(), 2);
        assert_eq!(s.removed(), &["2".to_string()]);
    }

    #[test]
    fn pruning_is_idempotent() {
        let s = Sft::build(&["0", "1", "2", "3"], &[("0", "1"), ("1", "0"), ("1", "2"), ("3", "0")]).unwrap();
        let again = Sft::build(s.alphabet().names(), &s.transitions()).unwrap();
        assert_eq!(s.alphabet(), again.alphabet());
        assert_eq!(s.transitions(), again.transitions());
        assert!(again.removed().is_empty());
    }

    #[test]
    fn enumerate_small_blocks() {
        let f = full2();
        let words: Vec<String> = f.enumerate_blocks(2, 100).unwrap().iter().map(|w| f.alphabet().render(w)).collect();
        assert_eq!(words, ["AA", "AB", "BA", "BB"]);
        let g = golden_mean();
        let words: Vec<String> = g.enumerate_blocks(2, 100).unwrap().iter().map(|w| g.alphabet().render(w)).collect();
        assert_eq!(words, ["00", "01", "10"]);
    }

    #[test]
    fn golden_mean_five_blocks_match_brute_force() {
        let g = golden_mean();
        let oracle = brute_force_count(&g, 5);
        assert_eq!(oracle, 13);
        assert_eq!(g.enumerate_blocks(5, 100).unwrap().len(), oracle);
        for len in 1..=8 {
            assert_eq!(g.count_blocks(len) as usize, brute_force_count(&g, len));
        }
    }

    #[test]
    fn enumeration_cap() {
        let f = full2();
        assert!(matches!(f.enumerate_blocks(10, 1000), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn irreducibility() {
        assert!(full2().is_irreducible());
        assert!(golden_mean().is_irreducible());
        let two = Sft::build(&["a", "b"], &[("a", "a"), ("b", "b")]).unwrap();
        assert!(!two.is_irreducible());
        let flip = Sft::build(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        assert_eq!(flip.period().unwrap(), 2);
    }

    #[test]
    fn edge_shift_conversion() {
        // two vertices, edges e: 0->1, f: 1->0, g: 0->0
        let s = Sft::from_edge_graph(&[(0, 1, "e"), (1, 0, "f"), (0, 0, "g")]).unwrap();
        assert_eq!(s.size(), 3);
        let e = s.alphabet().lookup("e").unwrap();
        let f = s.alphabet().lookup("f").unwrap();
        let g = s.alphabet().lookup("g").unwrap();
        assert!(s.allowed(e, f) && s.allowed(f, g) && s.allowed(g, e));
        assert!(!s.allowed(e, g) && !s.allowed(f, f));
    }
}
