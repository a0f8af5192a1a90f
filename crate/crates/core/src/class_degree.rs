//! Routability, transition blocks and the depth of minimal transition
//! blocks, plus a brute-force count of transition classes over periodic
//! points used as ground truth.
//!
//! Whether `u` is routable through `a` at time `n` depends on `u` only
//! through its endpoints `(u_0, u_last)` and its image `w`: it asks for a
//! path in the layered preimage graph of `w` from `u_0` to `u_last` visiting
//! `a` at layer `n`. Every exhaustive check below therefore ranges over the
//! endpoint pairs realised by preimages of `w`, never over preimage words.

use crate::error::{Error, Result};
use crate::measures::{MarkovMeasure, PushforwardMeasure};
use crate::shift::{FactorTriple, Symbol, Word};
use crate::symset::SymbolSet;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_LMAX: usize = 6;
pub const DEFAULT_STABILIZATION_CAP: usize = 4;
pub const DEFAULT_BLOCK_CAP: usize = 1 << 22;
const HITTING_SET_CAP: usize = 24;

/// `(w, n, M)`: every preimage of `w` is routable through some member of `M` at time `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionBlock {
    pub w: Word,
    pub n: usize,
    /// Sorted.
    pub m: Vec<Symbol>,
}

impl TransitionBlock {
    pub fn depth(&self) -> usize {
        self.m.len()
    }
}

/// Routing symbols in `M` for the preimages of `w` with given endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoutingEntry {
    pub first: Symbol,
    pub last: Symbol,
    pub symbols: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoutingTable {
    pub entries: Vec<RoutingEntry>,
}

impl RoutingTable {
    pub fn lookup(&self, first: Symbol, last: Symbol) -> Option<&[Symbol]> {
        self.entries.iter().find(|e| e.first == first && e.last == last).map(|e| e.symbols.as_slice())
    }

    /// Routing symbols of a preimage word.
    pub fn for_word(&self, u: &[Symbol]) -> Option<&[Symbol]> {
        self.lookup(u[0], *u.last()?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalBlock {
    pub block: TransitionBlock,
    pub table: RoutingTable,
    /// Longest word length examined.
    pub lmax: usize,
}

impl MinimalBlock {
    pub fn depth(&self) -> usize {
        self.block.depth()
    }
}

pub fn routable(triple: &FactorTriple, u: &[Symbol], a: Symbol, n: usize) -> Result<bool> {
    if n >= u.len() {
        return Err(Error::IndexOutOfRange { index: n, len: u.len() });
    }
    if a >= triple.x_size() {
        return Err(Error::UnknownSymbol(format!("#{a}")));
    }
    let w = triple.apply_code(u)?;
    if triple.code(a) != w[n] {
        return Err(Error::SymbolMismatch(format!(
            "`{}` does not map to `{}`",
            triple.x().alphabet().name(a),
            triple.y_alphabet().name(w[n])
        )));
    }
    Ok(triple.routing_set(&w, u[0], *u.last().unwrap(), n).contains(a))
}

/// Routing sets `R(s, e)` at time `n` for every realised endpoint pair of `w`.
fn routing_sets(triple: &FactorTriple, w: &[Symbol], n: usize) -> Vec<(Symbol, Symbol, SymbolSet)> {
    let size = triple.x_size();
    let mut out = Vec::new();
    let ends: Vec<Symbol> = triple.preimage(w[w.len() - 1]).to_vec();
    let back: Vec<(Symbol, Vec<SymbolSet>)> =
        ends.iter().map(|&e| (e, triple.backward_layers(&w[n..], &SymbolSet::singleton(size, e)))).collect();
    for &s in triple.preimage(w[0]) {
        let fwd = triple.forward_layers(w, &SymbolSet::singleton(size, s));
        for (e, bwd) in &back {
            if fwd[w.len() - 1].contains(*e) {
                out.push((s, *e, fwd[n].intersection(&bwd[0])));
            }
        }
    }
    out
}

fn validate_block(triple: &FactorTriple, w: &[Symbol], n: usize, m: &[Symbol]) -> Result<()> {
    if n >= w.len() {
        return Err(Error::IndexOutOfRange { index: n, len: w.len() });
    }
    if !triple.is_y_word(w) {
        return Err(Error::IllegalWord(triple.y_alphabet().render(w)));
    }
    if m.is_empty() {
        return Err(Error::InvalidInput("M must be nonempty".into()));
    }
    for &a in m {
        if a >= triple.x_size() {
            return Err(Error::UnknownSymbol(format!("#{a}")));
        }
        if triple.code(a) != w[n] {
            return Err(Error::SymbolMismatch(format!(
                "`{}` does not map to `{}`",
                triple.x().alphabet().name(a),
                triple.y_alphabet().name(w[n])
            )));
        }
    }
    Ok(())
}

pub fn is_transition_block(triple: &FactorTriple, w: &[Symbol], n: usize, m: &[Symbol]) -> Result<bool> {
    validate_block(triple, w, n, m)?;
    let mset = SymbolSet::from_iter(triple.x_size(), m.iter().copied());
    Ok(routing_sets(triple, w, n).iter().all(|(_, _, r)| r.intersects(&mset)))
}

/// Certificate for a transition block: routing symbols per endpoint pair.
pub fn routing_table(triple: &FactorTriple, tb: &TransitionBlock) -> Result<RoutingTable> {
    validate_block(triple, &tb.w, tb.n, &tb.m)?;
    let mset = SymbolSet::from_iter(triple.x_size(), tb.m.iter().copied());
    let entries = routing_sets(triple, &tb.w, tb.n)
        .into_iter()
        .map(|(first, last, r)| RoutingEntry { first, last, symbols: r.intersection(&mset).to_vec() })
        .collect();
    Ok(RoutingTable { entries })
}

/// Smallest `M` making `(w, n, M)` a transition block, lexicographically
/// first among those of minimal size.
pub fn minimal_set_at(triple: &FactorTriple, w: &[Symbol], n: usize) -> Result<Vec<Symbol>> {
    let universe: Vec<Symbol> = triple.preimage(w[n]).to_vec();
    if universe.len() > HITTING_SET_CAP {
        return Err(Error::ResourceLimit {
            what: "subsets of a preimage set".into(),
            needed: 1u128 << universe.len().min(127),
            cap: 1u128 << HITTING_SET_CAP,
        });
    }
    let family: Vec<SymbolSet> = routing_sets(triple, w, n).into_iter().map(|(_, _, r)| r).collect();
    let size = triple.x_size();
    for t in 1..=universe.len() {
        let mut idx: Vec<usize> = (0..t).collect();
        loop {
            let cand = SymbolSet::from_iter(size, idx.iter().map(|&i| universe[i]));
            if family.iter().all(|r| r.intersects(&cand)) {
                return Ok(idx.iter().map(|&i| universe[i]).collect());
            }
            if !next_combination(&mut idx, universe.len()) {
                break;
            }
        }
    }
    Ok(universe)
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let t = idx.len();
    let mut i = t;
    while i > 0 {
        i -= 1;
        if idx[i] < n - t + i {
            idx[i] += 1;
            for j in i + 1..t {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimal-depth transition block among `|w| <= lmax` with `nu(w) > 0`.
pub fn minimal_transition_block(triple: &FactorTriple, nu: &PushforwardMeasure, lmax: usize) -> Result<MinimalBlock> {
    minimal_transition_block_by(triple, |w| nu.is_positive(w), lmax, DEFAULT_BLOCK_CAP)
}

/// As [`minimal_transition_block`] with an arbitrary positivity oracle and
/// a cap on the number of `Y`-words enumerated per length.
pub fn minimal_transition_block_by<F>(triple: &FactorTriple, positive: F, lmax: usize, cap: usize) -> Result<MinimalBlock>
where
    F: Fn(&[Symbol]) -> bool + Sync,
{
    if lmax == 0 {
        return Err(Error::DomainError("L_max must be at least 1".into()));
    }
    let mut best: Option<TransitionBlock> = None;
    for len in 1..=lmax {
        let words = triple.enumerate_y_blocks(len, cap)?;
        let found: Vec<Option<(usize, usize, TransitionBlock)>> = words
            .par_iter()
            .enumerate()
            .map(|(i, w)| -> Result<Option<(usize, usize, TransitionBlock)>> {
                if !positive(w) {
                    return Ok(None);
                }
                let mut local: Option<TransitionBlock> = None;
                for n in 0..len {
                    let m = minimal_set_at(triple, w, n)?;
                    if local.as_ref().is_none_or(|b| m.len() < b.m.len()) {
                        local = Some(TransitionBlock { w: w.clone(), n, m });
                    }
                }
                Ok(local.map(|b| (b.depth(), i, b)))
            })
            .collect::<Result<_>>()?;
        let here = found.into_iter().flatten().min_by_key(|(d, i, _)| (*d, *i)).map(|(_, _, b)| b);
        if let Some(b) = here {
            if best.as_ref().is_none_or(|cur| b.depth() < cur.depth()) {
                best = Some(b);
            }
        }
        if best.as_ref().is_some_and(|b| b.depth() == 1) {
            break;
        }
    }
    let block = best.ok_or(Error::NotFoundWithinBound { lmax, best_depth: None })?;
    let table = routing_table(triple, &block)?;
    Ok(MinimalBlock { block, table, lmax })
}

pub fn class_degree_of_measure(triple: &FactorTriple, nu: &PushforwardMeasure, lmax: usize) -> Result<usize> {
    Ok(minimal_transition_block(triple, nu, lmax)?.depth())
}

/// Number of transition classes over the periodic point `y^∞`.
///
/// Vertices are the preimage symbols of `y_0`; `u -> v` when some preimage
/// of `y y_0` runs from `u` to `v`. Reachability by one to `k` periods is
/// grown until it stops changing (at most `cap` periods). Each
/// mutual-reachability class of vertices lying on a cycle contributes its
/// period, one class per cyclic phase.
pub fn count_transition_classes_periodic(triple: &FactorTriple, y: &[Symbol], cap: usize) -> Result<usize> {
    if y.is_empty() {
        return Err(Error::InvalidInput("period must be nonempty".into()));
    }
    if let Some(&b) = y.iter().find(|&&b| b >= triple.y_size()) {
        return Err(Error::UnknownSymbol(format!("#{b}")));
    }
    let size = triple.x_size();
    let verts: Vec<Symbol> = triple.preimage(y[0]).to_vec();
    let d = verts.len();
    let mut word = y.to_vec();
    word.push(y[0]);
    let step: Vec<Vec<bool>> = verts
        .iter()
        .map(|&u| {
            let reach = triple.forward_layers(&word, &SymbolSet::singleton(size, u));
            verts.iter().map(|&v| reach[y.len()].contains(v)).collect()
        })
        .collect();
    let mut reach = step.clone();
    let mut power = step.clone();
    let mut k = 1;
    loop {
        let next_power = bool_mul(&power, &step);
        let mut next = reach.clone();
        for i in 0..d {
            for j in 0..d {
                next[i][j] |= next_power[i][j];
            }
        }
        if next == reach {
            break;
        }
        k += 1;
        if k > cap {
            return Err(Error::PeriodTooLarge { period: y.len(), cap });
        }
        reach = next;
        power = next_power;
    }
    let recurrent: Vec<usize> = (0..d).filter(|&i| reach[i][i]).collect();
    if recurrent.is_empty() {
        return Err(Error::IllegalWord(format!("({})^inf", triple.y_alphabet().render(y))));
    }
    let adj: Vec<Vec<usize>> = (0..d).map(|i| (0..d).filter(|&j| step[i][j]).collect()).collect();
    let mut seen = vec![false; d];
    let mut classes = 0;
    for &i in &recurrent {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = recurrent.iter().copied().filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &comp {
            seen[j] = true;
        }
        // points of one component at different cyclic phases never bridge
        classes += crate::graph::component_period(&adj, &comp);
    }
    Ok(classes)
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|j| (0..d).any(|m| a[i][m] && b[m][j])).collect()).collect()
}

/// The member of `M` through which the `mu`-positive word `u` is routable.
pub fn unique_routing_symbol(
    triple: &FactorTriple,
    mu: &MarkovMeasure,
    tb: &TransitionBlock,
    u: &[Symbol],
) -> Result<Symbol> {
    let img = triple.apply_code(u)?;
    if img != tb.w {
        return Err(Error::SymbolMismatch(format!(
            "word maps to `{}`, block is `{}`",
            triple.y_alphabet().render(&img),
            triple.y_alphabet().render(&tb.w)
        )));
    }
    if !mu.is_positive(u) {
        return Err(Error::ZeroMassWord);
    }
    let r = triple.routing_set(&tb.w, u[0], *u.last().unwrap(), tb.n);
    let hits: Vec<Symbol> = tb.m.iter().copied().filter(|&a| r.contains(a)).collect();
    match hits.len() {
        0 => Err(Error::NotRoutable),
        1 => Ok(hits[0]),
        k => Err(Error::NotUnique(k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn sym(t: &FactorTriple, names: &[&str]) -> Word {
        t.x().alphabet().parse_word(names).unwrap()
    }

    fn ysym(t: &FactorTriple, names: &[&str]) -> Word {
        t.y_alphabet().parse_word(names).unwrap()
    }

    #[test]
    fn routable_examples() {
        let t1 = corpus::t1();
        assert!(routable(&t1, &sym(&t1, &["A", "B", "A"]), 0, 1).unwrap());
        let id = corpus::identity_golden_mean();
        assert!(routable(&id, &[0, 1, 0], 1, 1).unwrap());
        let t3 = corpus::t3();
        let a2 = t3.x().alphabet().lookup("a2").unwrap();
        let u = sym(&t3, &["a1", "b1", "a1"]);
        assert!(matches!(routable(&t3, &u, a2, 1), Err(Error::SymbolMismatch(_))));
        let b2 = t3.x().alphabet().lookup("b2").unwrap();
        assert!(!routable(&t3, &u, b2, 1).unwrap());
        assert!(matches!(routable(&t3, &u, b2, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn transition_block_examples() {
        let t1 = corpus::t1();
        let a = t1.x().alphabet().lookup("A").unwrap();
        assert!(is_transition_block(&t1, &[0, 0, 0], 1, &[a]).unwrap());
        assert!(!is_transition_block(&t1, &[0], 0, &[a]).unwrap());
        let t3 = corpus::t3();
        let aba = ysym(&t3, &["a", "b", "a"]);
        let b1 = t3.x().alphabet().lookup("b1").unwrap();
        let b2 = t3.x().alphabet().lookup("b2").unwrap();
        assert!(!is_transition_block(&t3, &aba, 1, &[b1]).unwrap());
        assert!(is_transition_block(&t3, &aba, 1, &[b1, b2]).unwrap());
    }

    #[test]
    fn minimal_blocks_and_degrees() {
        let t1 = corpus::t1();
        let nu = PushforwardMeasure::new(corpus::bernoulli(&t1, 0.5), t1.clone()).unwrap();
        let mb = minimal_transition_block(&t1, &nu, 3).unwrap();
        assert_eq!(mb.depth(), 1);
        assert_eq!(mb.block.w.len(), 3);
        assert_eq!(mb.block.n, 1);

        let t3 = corpus::t3();
        let nu = PushforwardMeasure::new(corpus::t3_measure(0.5), t3.clone()).unwrap();
        assert_eq!(class_degree_of_measure(&t3, &nu, 4).unwrap(), 2);

        let id = corpus::identity_golden_mean();
        let mu = MarkovMeasure::parry(id.x()).unwrap();
        let nu = PushforwardMeasure::new(mu, id.clone()).unwrap();
        let mb = minimal_transition_block(&id, &nu, 1).unwrap();
        assert_eq!(mb.depth(), 1);
        assert_eq!(mb.block.m, vec![mb.block.w[0]]);
    }

    #[test]
    fn periodic_oracle_examples() {
        let t1 = corpus::t1();
        assert_eq!(count_transition_classes_periodic(&t1, &[0], 4).unwrap(), 1);
        let t3 = corpus::t3();
        assert_eq!(count_transition_classes_periodic(&t3, &ysym(&t3, &["a", "b"]), 4).unwrap(), 2);
        let id = corpus::identity_golden_mean();
        assert_eq!(count_transition_classes_periodic(&id, &[0, 1], 4).unwrap(), 1);
        assert!(count_transition_classes_periodic(&id, &[1], 4).is_err());
    }

    #[test]
    fn slow_stabilisation_hits_the_cap() {
        // a 6-cycle: the one-period graph on a single letter is a 6-cycle too
        let names = ["0", "1", "2", "3", "4", "5"];
        let pairs: Vec<(String, String)> =
            (0..6).map(|i| (names[i].to_string(), names[(i + 1) % 6].to_string())).collect();
        let x = crate::shift::Sft::build(&names, &pairs).unwrap();
        let code: Vec<(&str, &str)> = names.iter().map(|n| (*n, "c")).collect();
        let t = FactorTriple::new(x, &code).unwrap();
        assert!(matches!(count_transition_classes_periodic(&t, &[0], 4), Err(Error::PeriodTooLarge { .. })));
        assert_eq!(count_transition_classes_periodic(&t, &[0], 8).unwrap(), 6);
    }

    #[test]
    fn phases_of_one_component_are_separate_classes() {
        // a 4-cycle coded onto (01)^inf: two preimages, shifted by two
        let names = ["0", "1", "2", "3"];
        let pairs: Vec<(String, String)> =
            (0..4).map(|i| (names[i].to_string(), names[(i + 1) % 4].to_string())).collect();
        let x = crate::shift::Sft::build(&names, &pairs).unwrap();
        let t = FactorTriple::new(x, &[("0", "a"), ("1", "b"), ("2", "a"), ("3", "b")]).unwrap();
        assert_eq!(count_transition_classes_periodic(&t, &[0, 1], 4).unwrap(), 2);
        let mb = minimal_transition_block_by(&t, |w| t.is_y_word(w), 4, DEFAULT_BLOCK_CAP).unwrap();
        assert_eq!(mb.depth(), 2);
    }

    #[test]
    fn unique_routing_examples() {
        let t1 = corpus::t1();
        let mu = corpus::bernoulli(&t1, 0.3);
        let a = t1.x().alphabet().lookup("A").unwrap();
        let tb = TransitionBlock { w: vec![0, 0, 0], n: 1, m: vec![a] };
        assert_eq!(unique_routing_symbol(&t1, &mu, &tb, &sym(&t1, &["B", "B", "B"])).unwrap(), a);

        let t3 = corpus::t3();
        let mu = corpus::t3_measure(0.5);
        let b1 = t3.x().alphabet().lookup("b1").unwrap();
        let b2 = t3.x().alphabet().lookup("b2").unwrap();
        let tb = TransitionBlock { w: ysym(&t3, &["a", "b", "a"]), n: 1, m: vec![b1, b2] };
        assert_eq!(unique_routing_symbol(&t3, &mu, &tb, &sym(&t3, &["a1", "b1", "a1"])).unwrap(), b1);
        assert_eq!(unique_routing_symbol(&t3, &mu, &tb, &sym(&t3, &["a2", "b2", "a2"])).unwrap(), b2);
        let wide = TransitionBlock { w: vec![0, 0, 0], n: 1, m: vec![0, 1] };
        let mu1 = corpus::bernoulli(&t1, 0.3);
        assert_eq!(unique_routing_symbol(&t1, &mu1, &wide, &[0, 1, 0]), Err(Error::NotUnique(2)));
    }
}
