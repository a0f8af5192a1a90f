use crate::report::{Output, Table};
use crate::{
    BoundArgs, DegreeArgs, DeltaArgs, EntropyArgs, EquilibriumArgs, InstanceArgs, JoiningArgs, JumpEntropyArgs,
    OracleArgs, PairArgs, PointrouteArgs, RoutingTableArgs, SampleArgs, SweepArgs,
};
use classdeg_core::class_degree::{self, MinimalBlock, RoutingTable, TransitionBlock, DEFAULT_BLOCK_CAP};
use classdeg_core::io::{load_instance, load_measure, load_potential, Instance};
use classdeg_core::joinings::{self, RijSampler, DEFAULT_D2_WIDTH};
use classdeg_core::measures::{
    empirical_entropy, equilibrium_state, integral, EntropyEstimate, EntropyOptions, MarkovMeasure, Potential,
    PushforwardMeasure,
};
use classdeg_core::splicing::{
    self, bound_report, build_routing_functions, distinguishability, distinguishability_exact, estimate_delta,
    extended_n_grid, support_pairs, Constants, DeltaConfig, DeltaReport, DistinguishabilityReport, EtaParams,
    RoutingFunctions, Separator,
};
use classdeg_core::{rng, Alphabet, Error, FactorTriple, Result, Word};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

pub struct Context {
    pub seed: u64,
    pub max_blocks: usize,
}

impl Context {
    pub fn new(seed: u64) -> Result<Self> {
        let max_blocks = match std::env::var("CLASSDEG_MAX_BLOCKS") {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::InvalidInput(format!("CLASSDEG_MAX_BLOCKS=`{s}` is not a positive integer")))?,
            Err(_) => DEFAULT_BLOCK_CAP,
        };
        Ok(Context { seed, max_blocks })
    }
}

/// Space-separated symbol names, or a run of one-character names.
fn parse_word(alphabet: &Alphabet, s: &str) -> Result<Word> {
    let s = s.trim();
    if s.contains(char::is_whitespace) {
        return alphabet.parse_word(&s.split_whitespace().collect::<Vec<_>>());
    }
    if let Ok(sym) = alphabet.lookup(s) {
        return Ok(vec![sym]);
    }
    s.chars().map(|c| alphabet.lookup(&c.to_string())).collect()
}

fn names(alphabet: &Alphabet, w: &[usize]) -> Vec<String> {
    w.iter().map(|&s| alphabet.name(s).to_string()).collect()
}

fn measure_on(path: &Path, triple: &FactorTriple) -> Result<MarkovMeasure> {
    let loaded = load_measure(path, triple.x())?;
    if loaded.source.sft().alphabet().names() != triple.x().alphabet().names() {
        return Err(Error::InvalidInput(format!("measure `{}` lives on a different alphabet", path.display())));
    }
    Ok(loaded.source)
}

fn measure_or_parry(path: &Option<PathBuf>, triple: &FactorTriple) -> Result<MarkovMeasure> {
    match path {
        Some(p) => measure_on(p, triple),
        None => MarkovMeasure::parry(triple.x()),
    }
}

fn potential_or_zero(path: &Option<PathBuf>, triple: &FactorTriple) -> Result<Potential> {
    match path {
        Some(p) => load_potential(p, triple.x()),
        None => Ok(Potential::zero(triple.x())),
    }
}

#[derive(Serialize)]
struct RoutingRow {
    first: String,
    last: String,
    symbols: Vec<String>,
}

fn table_json(triple: &FactorTriple, table: &RoutingTable) -> Vec<RoutingRow> {
    let xa = triple.x().alphabet();
    table
        .entries
        .iter()
        .map(|e| RoutingRow {
            first: xa.name(e.first).to_string(),
            last: xa.name(e.last).to_string(),
            symbols: names(xa, &e.symbols),
        })
        .collect()
}

fn minimal_block(ctx: &Context, triple: &FactorTriple, mu: Option<&MarkovMeasure>, lmax: usize) -> Result<MinimalBlock> {
    match mu {
        Some(mu) => {
            let nu = PushforwardMeasure::new(mu.clone(), triple.clone())?;
            class_degree::minimal_transition_block_by(triple, |w| nu.is_positive(w), lmax, ctx.max_blocks)
        }
        None => class_degree::minimal_transition_block_by(triple, |w| triple.is_y_word(w), lmax, ctx.max_blocks),
    }
}

pub fn degree(ctx: &Context, a: &DegreeArgs, full: bool) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let mu = a.measure.as_ref().map(|p| measure_on(p, &triple)).transpose()?;
    let mb = minimal_block(ctx, &triple, mu.as_ref(), a.lmax)?;
    let b = &mb.block;
    let mut out = json!({
        "depth": b.depth(),
        "w": names(triple.y_alphabet(), &b.w),
        "n": b.n,
        "M": names(triple.x().alphabet(), &b.m),
        "certificate_size": mb.table.len(),
        "lmax": mb.lmax,
    });
    if full {
        out["routing_table"] = serde_json::to_value(table_json(&triple, &mb.table))?;
    }
    Output::new(&out)
}

pub fn routing_table(a: &RoutingTableArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let w = parse_word(triple.y_alphabet(), &a.w)?;
    let mut m = parse_word(triple.x().alphabet(), &a.m)?;
    m.sort_unstable();
    m.dedup();
    if !class_degree::is_transition_block(&triple, &w, a.n, &m)? {
        return Err(Error::InvalidInput(format!("({}, {}, {{{}}}) is not a transition block", a.w, a.n, a.m)));
    }
    let tb = TransitionBlock { w, n: a.n, m };
    let table = class_degree::routing_table(&triple, &tb)?;
    Output::new(&json!({
        "depth": tb.depth(),
        "w": names(triple.y_alphabet(), &tb.w),
        "n": tb.n,
        "M": names(triple.x().alphabet(), &tb.m),
        "routing_table": table_json(&triple, &table),
    }))
}

fn markov_json(mu: &MarkovMeasure) -> serde_json::Value {
    json!({
        "alphabet": mu.sft().alphabet().names(),
        "transition": mu.transition(),
        "stationary": mu.stationary(),
    })
}

pub fn parry(a: &InstanceArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let mu = MarkovMeasure::parry(triple.x())?;
    let mut out = markov_json(&mu);
    out["entropy_nats"] = json!(mu.entropy());
    Output::new(&out)
}

pub fn equilibrium(a: &EquilibriumArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let v = potential_or_zero(&a.potential, &triple)?;
    let eq = equilibrium_state(triple.x(), &v)?;
    let mu = &eq.measure;
    let mut out = markov_json(mu);
    out["pressure"] = json!(eq.pressure);
    out["entropy_nats"] = json!(mu.entropy());
    out["block_len"] = json!(eq.block_len);
    if eq.block_len == 1 {
        out["integral"] = json!(integral(mu, &v));
    }
    Output::new(&out)
}

pub fn entropy(ctx: &Context, a: &EntropyArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let mu = measure_or_parry(&a.measure, &triple)?;
    let mut r = rng::seeded(ctx.seed);
    let x = mu.sample_path(a.path_len, &mut r);
    let word = if a.image { triple.image(&x) } else { x };
    let opts = EntropyOptions { k_schedule: a.k.clone(), seed: ctx.seed, lz: a.lz, ..Default::default() };
    let est = empirical_entropy(&word, &opts)?;
    let exact: Option<EntropyEstimate> = (!a.image).then(|| EntropyEstimate::exact(mu.entropy()));
    Output::new(&json!({ "estimate": est, "exact": exact, "image": a.image }))
}

pub fn sample(ctx: &Context, a: &SampleArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let mu = measure_or_parry(&a.measure, &triple)?;
    let mut r = rng::seeded(ctx.seed);
    let x = match &a.conditional_on {
        Some(y) => {
            let y = parse_word(triple.y_alphabet(), y)?;
            classdeg_core::measures::conditional_sample(&mu, &triple, &y, &mut r)?
        }
        None => mu.sample_path(a.length, &mut r),
    };
    let y = triple.image(&x);
    Output::new(&json!({
        "x": triple.x().alphabet().render(&x),
        "y": triple.y_alphabet().render(&y),
        "length": x.len(),
    }))
}

struct PairSetup {
    triple: FactorTriple,
    sampler: RijSampler,
    block: MinimalBlock,
}

fn pair_setup(ctx: &Context, a: &PairArgs) -> Result<PairSetup> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let mu1 = measure_on(&a.mu1, &triple)?;
    let mu2 = measure_on(&a.mu2, &triple)?;
    let block = minimal_block(ctx, &triple, Some(&mu1), a.lmax)?;
    let sampler = RijSampler::new(mu1, mu2, triple.clone())?;
    Ok(PairSetup { triple, sampler, block })
}

fn block_json(triple: &FactorTriple, tb: &TransitionBlock) -> serde_json::Value {
    json!({
        "w": names(triple.y_alphabet(), &tb.w),
        "n": tb.n,
        "M": names(triple.x().alphabet(), &tb.m),
        "depth": tb.depth(),
    })
}

pub fn joining_stats(ctx: &Context, a: &JoiningArgs) -> Result<Output> {
    let s = pair_setup(ctx, &a.pair)?;
    let rep = joinings::estimate_class_diagonal_mass(&s.sampler, &s.block.block, a.trials, a.window, ctx.seed)?;
    Output::new(&json!({ "block": block_json(&s.triple, &s.block.block), "diagonal": rep }))
}

pub fn pointroute_check(ctx: &Context, a: &PointrouteArgs) -> Result<Output> {
    let s = pair_setup(ctx, &a.pair)?;
    let tb = &s.block.block;
    if a.length < tb.w.len() {
        return Err(Error::DomainError(format!("--length {} is shorter than the block word", a.length)));
    }
    let mut occurrences = 0usize;
    let mut pairs = 0usize;
    let mut off_diagonal = 0usize;
    let mut violations = Vec::new();
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut next = 0u64;
    while occurrences < a.occurrences {
        let results: Vec<(usize, bool, Vec<joinings::Violation>)> = (next..next + batch as u64)
            .into_par_iter()
            .map(|i| -> Result<_> {
                let pair = s.sampler.sample(a.length, &mut rng::stream(ctx.seed, i))?;
                if !joinings::d2_membership(&s.triple, &pair, DEFAULT_D2_WIDTH) {
                    return Ok((0, false, Vec::new()));
                }
                let occ = splicing::mark_occurrences(&pair.y, &tb.w).len();
                Ok((occ, true, joinings::common_routing_check(&s.triple, tb, &pair)))
            })
            .collect::<Result<_>>()?;
        next += batch as u64;
        for (occ, diag, v) in results {
            if !diag {
                off_diagonal += 1;
                continue;
            }
            pairs += 1;
            occurrences += occ;
            violations.extend(v);
        }
        if next > 1_000_000 && occurrences == 0 {
            return Err(Error::NoOccurrences { window: a.length });
        }
    }
    let examples: Vec<_> = violations
        .iter()
        .take(20)
        .map(|v| {
            json!({
                "position": v.position,
                "x_block": names(s.triple.x().alphabet(), &v.x_block),
                "x_prime_block": names(s.triple.x().alphabet(), &v.x_prime_block),
            })
        })
        .collect();
    Output::new(&json!({
        "block": block_json(&s.triple, tb),
        "occurrences": occurrences,
        "pairs": pairs,
        "off_diagonal_pairs": off_diagonal,
        "violations": violations.len(),
        "examples": examples,
    }))
}

pub fn jump_entropy(ctx: &Context, a: &JumpEntropyArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let mu = measure_or_parry(&a.measure, &triple)?;
    let word = parse_word(triple.x().alphabet(), &a.a)?;
    let params = EtaParams::new(a.n, a.p)?;
    let opts = EntropyOptions { seed: ctx.seed, ..EntropyOptions::with_k(a.k) };
    let rep = splicing::jump_entropy_check(&mu, &word, params, a.path_len, ctx.seed, &opts)?;
    Output::new(&rep)
}

struct Sweep {
    setup: PairSetup,
    v: Potential,
    sep: Separator,
    routing: RoutingFunctions,
}

fn sweep_setup(ctx: &Context, a: &SweepArgs) -> Result<Sweep> {
    let setup = pair_setup(ctx, &a.pair)?;
    let v = potential_or_zero(&a.potential, &setup.triple)?;
    let (mu1, mu2) = (setup.sampler.mu1(), setup.sampler.mu2());
    let sep = match &a.separator {
        Some(s) => Separator::new(mu1, mu2, &parse_word(setup.triple.x().alphabet(), s)?)?,
        None => Separator::choose(mu1, mu2, 3)?,
    };
    let tb = &setup.block.block;
    let pairs = support_pairs(&setup.triple, mu1, mu2, tb, ctx.max_blocks)?;
    let routing = build_routing_functions(&setup.triple, tb, &pairs)?;
    Ok(Sweep { setup, v, sep, routing })
}

/// Exact when the factor is a single point, Monte Carlo otherwise.
fn pstar_at(ctx: &Context, s: &Sweep, a: &SweepArgs, n: usize, p: Option<f64>) -> Result<DistinguishabilityReport> {
    let sampler = &s.setup.sampler;
    let w = &s.setup.block.block.w;
    if s.setup.triple.y_size() == 1 {
        distinguishability_exact(sampler.mu1(), sampler.mu2(), &s.sep, n, w.len())
    } else {
        distinguishability(sampler, w, &s.sep, n, a.trials, a.path_len, p, ctx.seed ^ n as u64)
    }
}

fn constants(s: &Sweep) -> Constants {
    let tb = &s.setup.block.block;
    Constants::new(s.setup.sampler.nu().prob(&tb.w), tb.w.len(), s.setup.triple.x_size(), &s.v)
}

fn hstar_grid(ctx: &Context, s: &Sweep, a: &SweepArgs, ns: &[usize]) -> Result<Vec<DistinguishabilityReport>> {
    let w_len = s.setup.block.block.w.len();
    ns.iter().filter(|&&n| n > w_len).map(|&n| pstar_at(ctx, s, a, n, None)).collect()
}

fn selection(c: &Constants, p_grid: &[f64], dists: &[DistinguishabilityReport]) -> Result<splicing::BoundSelection> {
    let hs: Vec<(usize, f64)> = dists.iter().map(|d| (d.n, d.hstar_upper)).collect();
    bound_report(c, p_grid, &hs)
}

fn parse_grid(grid: &[String]) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut ns = None;
    let mut ps = None;
    for item in grid {
        let (key, vals) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("grid entry `{item}` is not KEY=v1,v2,..")))?;
        let bad = |v: &str| Error::InvalidInput(format!("bad grid value `{v}` in `{item}`"));
        match key {
            "N" => ns = Some(vals.split(',').map(|v| v.trim().parse::<usize>().map_err(|_| bad(v))).collect::<Result<Vec<_>>>()?),
            "p" => ps = Some(vals.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad(v))).collect::<Result<Vec<_>>>()?),
            _ => return Err(Error::InvalidInput(format!("unknown grid key `{key}`"))),
        }
    }
    match (ns, ps) {
        (Some(n), Some(p)) if !n.is_empty() && !p.is_empty() => Ok((n, p)),
        _ => Err(Error::InvalidInput("grid needs both N=.. and p=..".into())),
    }
}

pub fn delta(ctx: &Context, a: &DeltaArgs) -> Result<Output> {
    let (ns, ps) = parse_grid(&a.grid)?;
    let s = sweep_setup(ctx, &a.sweep)?;
    let mut cells: Vec<DeltaReport> = Vec::new();
    for &n in &ns {
        let dist = pstar_at(ctx, &s, &a.sweep, n, None)?;
        for &p in &ps {
            let cfg = DeltaConfig { params: EtaParams::new(n, p)?, trials: a.sweep.trials, path_len: a.sweep.path_len, seed: ctx.seed };
            cells.push(estimate_delta(&s.setup.sampler, &s.v, &s.routing, &dist, &cfg)?);
        }
    }
    let c = constants(&s);
    let dists = hstar_grid(ctx, &s, &a.sweep, &extended_n_grid(&ns, a.sweep.max_n))?;
    let (sel, sel_err) = match selection(&c, &ps, &dists) {
        Ok(sel) => (Some(sel), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let positive = cells.iter().filter(|r| r.delta_ci.0 > 0.0).count();
    let rows = cells
        .iter()
        .map(|r| {
            vec![
                r.params.n.to_string(),
                r.params.p.to_string(),
                r.delta_hat.to_string(),
                r.delta_stderr.to_string(),
                r.delta_ci.0.to_string(),
                r.delta_ci.1.to_string(),
                r.delta_entropy.to_string(),
                r.delta_potential.to_string(),
                r.pstar.to_string(),
                r.hstar.to_string(),
                r.chain_lower.to_string(),
                r.bound_value.to_string(),
                r.s_event_prob.to_string(),
                r.s_event_freq.to_string(),
            ]
        })
        .collect();
    let table = Table {
        header: vec![
            "N", "p", "delta_hat", "delta_stderr", "ci_low", "ci_high", "delta_entropy", "delta_potential", "pstar",
            "hstar", "chain_lower", "bound_value", "s_event_prob", "s_event_freq",
        ],
        rows,
    };
    Ok(Output::new(&json!({
        "block": block_json(&s.setup.triple, &s.setup.block.block),
        "separator": s.sep,
        "cells": cells,
        "positive_cells": positive,
        "constants": c,
        "distinguishability": dists,
        "selection": sel,
        "selection_error": sel_err,
    }))?
    .with_rows(table))
}

pub fn bound(ctx: &Context, a: &BoundArgs) -> Result<Output> {
    let s = sweep_setup(ctx, &a.sweep)?;
    let c = constants(&s);
    let dists = hstar_grid(ctx, &s, &a.sweep, &extended_n_grid(&a.n_grid, a.sweep.max_n))?;
    let sel = selection(&c, &a.p_grid, &dists)?;
    let rows = dists
        .iter()
        .map(|d| {
            vec![
                d.n.to_string(),
                d.pstar.to_string(),
                d.pstar_stderr.to_string(),
                d.hstar.to_string(),
                d.hstar_upper.to_string(),
                (c.c4 * d.hstar_upper < sel.margin).to_string(),
            ]
        })
        .collect();
    let table = Table { header: vec!["N", "pstar", "pstar_stderr", "hstar", "hstar_upper", "feasible"], rows };
    Ok(Output::new(&json!({
        "block": block_json(&s.setup.triple, &s.setup.block.block),
        "separator": s.sep,
        "constants": c,
        "best_p": c.best_p(),
        "distinguishability": dists,
        "selection": sel,
    }))?
    .with_rows(table))
}

pub fn oracle_classes(a: &OracleArgs) -> Result<Output> {
    let Instance { triple, .. } = load_instance(&a.instance)?;
    let y = parse_word(triple.y_alphabet(), &a.y)?;
    let classes = class_degree::count_transition_classes_periodic(&triple, &y, a.cap)?;
    Output::new(&json!({ "y": names(triple.y_alphabet(), &y), "classes": classes, "cap": a.cap }))
}
