use classdeg_core::corpus;
use classdeg_core::shift::GeneralTriple;
use classdeg_core::{Alphabet, Error, FactorTriple, Sft};
use proptest::prelude::*;
use std::collections::HashMap;

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("s{i}")).collect()
}

fn build(k: usize, bits: &[bool]) -> Result<Sft, Error> {
    let n = names(k);
    let mut allowed = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if bits[i * k + j] {
                allowed.push((n[i].clone(), n[j].clone()));
            }
        }
    }
    Sft::build(&n, &allowed)
}

fn sft_strategy() -> impl Strategy<Value = (usize, Vec<bool>)> {
    (1usize..=5).prop_flat_map(|k| (Just(k), prop::collection::vec(any::<bool>(), k * k)))
}

fn triple_strategy() -> impl Strategy<Value = (usize, Vec<bool>, Vec<usize>)> {
    (1usize..=4).prop_flat_map(|k| {
        (Just(k), prop::collection::vec(prop::bool::weighted(0.7), k * k), prop::collection::vec(0usize..3, k))
    })
}

fn random_triple(k: usize, bits: &[bool], code: &[usize]) -> Option<FactorTriple> {
    let x = build(k, bits).ok()?;
    let pairs: Vec<(String, String)> = x
        .alphabet()
        .names()
        .iter()
        .map(|nm| {
            let i: usize = nm[1..].parse().unwrap();
            (nm.clone(), format!("y{}", code[i]))
        })
        .collect();
    FactorTriple::new(x, &pairs).ok()
}

/// Every word of length `len` over `k` symbols, by brute force.
fn all_words(k: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..k).map(move |a| [w.clone(), vec![a]].concat())).collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pruning_is_idempotent((k, bits) in sft_strategy()) {
        if let Ok(x) = build(k, &bits) {
            let again = Sft::build(x.alphabet().names(), &x.transitions()).unwrap();
            prop_assert_eq!(again.alphabet().names(), x.alphabet().names());
            prop_assert_eq!(again.transitions(), x.transitions());
            prop_assert!(again.removed().is_empty());
        }
    }

    #[test]
    fn every_surviving_symbol_extends_both_ways((k, bits) in sft_strategy()) {
        if let Ok(x) = build(k, &bits) {
            for a in 0..x.size() {
                prop_assert!(!x.successors(a).is_empty());
                prop_assert!(!x.predecessors(a).is_empty());
            }
        }
    }

    #[test]
    fn code_maps_legal_words_to_y_words((k, bits, code) in triple_strategy()) {
        if let Some(t) = random_triple(k, &bits, &code) {
            for len in 1..=5 {
                for u in t.x().enumerate_blocks(len, 1 << 16).unwrap() {
                    prop_assert!(t.is_y_word(&t.apply_code(&u).unwrap()));
                }
            }
        }
    }

    #[test]
    fn diagonal_embeds_in_fiber_product((k, bits, code) in triple_strategy()) {
        if let Some(t) = random_triple(k, &bits, &code) {
            let fp = t.fiber_product().unwrap();
            for len in 1..=4 {
                for u in t.x().enumerate_blocks(len, 1 << 16).unwrap() {
                    let d = fp.zip(&u, &u).expect("diagonal symbols exist");
                    prop_assert!(fp.sft.is_legal(&d));
                }
            }
        }
    }

    #[test]
    fn preimage_count_matches_enumeration((k, bits, code) in triple_strategy(), len in 1usize..=5) {
        if let Some(t) = random_triple(k, &bits, &code) {
            let ys = t.enumerate_y_blocks(len, 1 << 16).unwrap();
            for w in ys {
                let brute = all_words(t.x_size(), len)
                    .into_iter()
                    .filter(|u| t.x().is_legal(u) && t.image(u) == w)
                    .count() as u128;
                prop_assert_eq!(t.count_preimages(&w), brute);
            }
        }
    }

    #[test]
    fn recode_round_trip(forbid in prop::collection::vec(prop::collection::vec(0usize..2, 3), 0..2), window in 0usize..2) {
        let alphabet = Alphabet::new(&["0", "1"]).unwrap();
        let mut forbidden: Vec<Vec<usize>> = vec![vec![1, 1]];
        forbidden.extend(forbid);
        let len = window + 1;
        let code: HashMap<Vec<usize>, String> =
            all_words(2, len).into_iter().map(|w| { let s = format!("c{}", w.iter().sum::<usize>()); (w, s) }).collect();
        let g = GeneralTriple { alphabet, forbidden: forbidden.clone(), left: 0, right: window, code };
        let r = match g.recode() {
            Ok(r) => r,
            Err(Error::EmptyShift) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let k = r.block_len();
        let avoids = |w: &[usize]| forbidden.iter().all(|f| f.len() > w.len() || !w.windows(f.len()).any(|s| s == f.as_slice()));
        for l in k..=6 {
            for u in all_words(2, l) {
                match r.encode(&u) {
                    Ok(v) => {
                        prop_assert_eq!(v.len(), l - k + 1);
                        prop_assert_eq!(r.decode(&v).unwrap(), u);
                    }
                    Err(_) => prop_assert!(!avoids(&u) || !extendable(&r, &u)),
                }
            }
        }
    }
}

/// Whether `u` survives pruning, i.e. its blocks are symbols of the recoded shift.
fn extendable(r: &classdeg_core::RecodedTriple, u: &[usize]) -> bool {
    let k = r.block_len();
    let x = r.triple.x();
    let blocks: Vec<&[usize]> = (0..x.size()).map(|s| r.block(s)).collect();
    u.windows(k).all(|w| blocks.contains(&w))
}

#[test]
fn corpus_codes_map_into_y_language() {
    for t in [corpus::t1(), corpus::t3(), corpus::identity_golden_mean()] {
        for len in 1..=6 {
            for u in t.x().enumerate_blocks(len, 1 << 16).unwrap() {
                assert!(t.is_y_word(&t.apply_code(&u).unwrap()));
            }
        }
    }
}

#[test]
fn corpus_diagonal_embedding() {
    for t in [corpus::t1(), corpus::t3(), corpus::identity_golden_mean()] {
        let fp = t.fiber_product().unwrap();
        for len in 1..=6 {
            for u in t.x().enumerate_blocks(len, 1 << 16).unwrap() {
                assert!(fp.sft.is_legal(&fp.zip(&u, &u).unwrap()));
            }
        }
    }
}

#[test]
fn golden_mean_block_counts_are_fibonacci() {
    let x = corpus::golden_mean();
    let mut fib = (2u128, 3u128);
    for len in 1..=10 {
        assert_eq!(x.count_blocks(len), fib.0);
        fib = (fib.1, fib.0 + fib.1);
    }
}

#[test]
fn illegal_code_input_is_reported() {
    let t = corpus::identity_golden_mean();
    assert!(matches!(t.apply_code(&[1, 1]), Err(Error::IllegalWord(_))));
    assert!(t.apply_code(&[7]).is_err());
}
