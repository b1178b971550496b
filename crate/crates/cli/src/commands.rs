use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use daisy_core::bounds::{self, BoundParams};
use daisy_core::coloring::{self, PhiFamily, PhiTable, StepupConfig};
use daisy_core::combs::{CombKind, Shape};
use daisy_core::daisy::{
    find_mono_daisy, find_mono_simple_daisy, make_phi_family, verify_phi_family, BaseStrategy, ChiColoring,
    DaisyInstance, EdgeColoring, FnColoring, SearchOptions, SearchStatus,
};
use daisy_core::formats;
use daisy_core::pipeline::{self, ThresholdMode};
use daisy_core::tree::{self, LeafSet, TreeParams};
use daisy_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn emit(command: &str, config: Value, result: impl Serialize, started: Instant) -> Result<()> {
    let out = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "result": result,
        "elapsed_ms": started.elapsed().as_millis() as u64,
    });
    write_out(&format!("{}\n", serde_json::to_string_pretty(&out)?))
}

/// Writes to stdout; a closed pipe is not an error.
fn write_out(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn parse_leaves(text: &str) -> Result<Vec<u32>> {
    let mut v = Vec::new();
    for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        v.push(tok.parse::<u32>().map_err(|_| usage(format!("bad leaf {tok:?}")))?);
    }
    if v.is_empty() {
        return Err(usage("empty leaf set"));
    }
    let mut sorted = v.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != v.len() {
        return Err(usage("repeated leaf"));
    }
    Ok(sorted)
}

fn leaf_set(a: &LeafArgs) -> Result<(TreeParams, LeafSet)> {
    let params = TreeParams::new(a.n)?;
    let text = match (&a.set, &a.set_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        (None, None) => return Err(usage("give --set or --set-file")),
    };
    let x = LeafSet::new(parse_leaves(&text)?)?.in_tree(params)?;
    Ok((params, x))
}

fn search_options(b: &BudgetArgs) -> SearchOptions {
    SearchOptions {
        node_budget: b.node_budget,
        time_budget: b.time_budget_ms.map(Duration::from_millis),
        ..Default::default()
    }
}

fn load_cfg(path: &Path) -> Result<StepupConfig> {
    let phi = formats::load_phi(path).with_context(|| format!("loading {}", path.display()))?;
    let params = TreeParams::new(phi.n_levels())?;
    let (r, k) = (phi.r(), phi.k());
    Ok(StepupConfig::new(params, r, k, Arc::new(phi))?)
}

pub fn run(cli: &crate::args::Cli) -> Result<u8> {
    let started = Instant::now();
    match &cli.command {
        Command::Tree(c) => tree_cmd(c),
        Command::Combs(c) => combs_cmd(c),
        Command::Phi(c) => phi_cmd(c, started),
        Command::Chi(c) => chi_cmd(c, started),
        Command::Daisy(c) => daisy_cmd(c, started),
        Command::Pipeline(c) => pipeline_cmd(c, started),
        Command::Bounds(c) => bounds_cmd(c, started),
    }
}

fn tree_cmd(c: &TreeCmd) -> Result<u8> {
    match c {
        TreeCmd::Dot(a) => {
            let (params, x) = leaf_set(a)?;
            write_out(&tree::aux_tree(params, &x)?.to_dot())?;
        }
        TreeCmd::Delta(a) => {
            let (params, x) = leaf_set(a)?;
            let aux = tree::aux_tree(params, &x)?;
            let d: Vec<String> = aux.deltas.iter().map(u32::to_string).collect();
            write_out(&format!("{}\n", d.join(" ")))?;
        }
    }
    Ok(0)
}

fn combs_cmd(c: &CombsCmd) -> Result<u8> {
    let CombsCmd::Analyze { leaves, dot } = c;
    let (params, x) = leaf_set(leaves)?;
    let shape = Shape::new(params, x.as_slice());
    let maximal = shape.maximal_combs();
    if *dot {
        let aux = tree::aux_tree(params, &x)?;
        let color = |i: usize| {
            maximal.iter().filter(|c| c.lo <= i && i <= c.hi).min_by_key(|c| c.len()).map(|c| {
                let (hl, hh) = c.handle();
                if c.kind != CombKind::Broken && hl <= i && i <= hh { "lightblue" } else { "orange" }.to_string()
            })
        };
        write_out(&aux.to_dot_with(color))?;
        return Ok(0);
    }
    let mut text = String::new();
    for (lo, hi) in shape.closed_intervals() {
        let d = shape.classify(lo, hi).descriptor();
        let teeth = d.teeth.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        let handle = if d.kind == CombKind::Broken { "-".to_string() } else { d.handle.to_string() };
        let is_max = maximal.iter().any(|c| c.lo == lo && c.hi == hi);
        text += &format!(
            "{} kind={} l={} handle={handle} teeth={teeth} maximal={}\n",
            d.interval,
            d.kind,
            d.handle_len,
            if is_max { "yes" } else { "no" }
        );
    }
    write_out(&text)?;
    Ok(0)
}

#[derive(Serialize)]
struct TableSummary {
    arity: u32,
    len: u64,
    ones: u64,
    /// colex-ordered bits, only for small tables
    bits: Option<String>,
}

fn summarize(t: &PhiTable) -> TableSummary {
    let len = PhiTable::table_len(t.n(), t.arity());
    let ones = (0..len).filter(|&i| t.color_rank(i) == 1).count() as u64;
    let bits = (len <= 4096).then(|| (0..len).map(|i| char::from(b'0' + t.color_rank(i))).collect());
    TableSummary { arity: t.arity(), len, ones, bits }
}

fn phi_cmd(c: &PhiCmd, started: Instant) -> Result<u8> {
    match c {
        PhiCmd::Gen { shape, seed, out } => {
            let mut phi = PhiFamily::random(shape.n, shape.r, shape.k, *seed)?;
            // materialize so the file carries explicit tables
            let tables = phi
                .tables()
                .iter()
                .map(|t| PhiTable::from_fn(t.n(), t.arity(), |s| t.color(s).unwrap_or(0)))
                .collect::<daisy_core::Result<Vec<_>>>()?;
            phi = PhiFamily::new(shape.n, shape.r, shape.k, tables)?;
            formats::save_phi(out, &phi)?;
            let cfg = json!({ "shape": shape, "seed": seed, "out": out });
            emit("phi gen", cfg, phi.tables().iter().map(summarize).collect::<Vec<_>>(), started)?;
            Ok(0)
        }
        PhiCmd::Make { shape, m_target, strategy, seed, tries, budget, out } => {
            let strat = match strategy {
                StrategyArg::Seeded => BaseStrategy::SeededRandom { seed: *seed, retries: *tries },
                StrategyArg::Greedy => BaseStrategy::Greedy { seed: *seed, max_flips: *tries },
                StrategyArg::Exhaustive => BaseStrategy::Exhaustive { max_edges: *tries },
            };
            let (phi, certs) = make_phi_family(shape.n, shape.r, shape.k, *m_target, strat, &search_options(budget))?;
            formats::save_phi(out, &phi)?;
            let cfg = json!({ "shape": shape, "m_target": m_target, "strategy": strat, "budget": budget, "out": out });
            emit("phi make", cfg, json!({ "certificates": certs }), started)?;
            Ok(0)
        }
        PhiCmd::Verify { file, m_target, budget } => {
            let phi = formats::load_phi(file)?;
            let rep = verify_phi_family(&phi, *m_target, &search_options(budget))?;
            let inconclusive = rep.arities.iter().any(|a| a.status == SearchStatus::Inconclusive);
            let passed = rep.passed;
            let cfg = json!({ "file": file, "m_target": m_target, "budget": budget });
            emit("phi verify", cfg, rep, started)?;
            Ok(match (passed, inconclusive) {
                (true, _) => 0,
                (false, true) => 3,
                (false, false) => 1,
            })
        }
        PhiCmd::Show { file } => {
            let phi = formats::load_phi(file)?;
            let result = json!({
                "n": phi.n_levels(),
                "r": phi.r(),
                "k": phi.k(),
                "tables": phi.tables().iter().map(summarize).collect::<Vec<_>>(),
            });
            emit("phi show", json!({ "file": file }), result, started)?;
            Ok(0)
        }
    }
}

fn chi_cmd(c: &ChiCmd, started: Instant) -> Result<u8> {
    match c {
        ChiCmd::Eval { phi, set } => {
            let cfg = load_cfg(phi)?;
            let x = LeafSet::new(parse_leaves(set)?)?.in_tree(cfg.params)?;
            if x.len() != cfg.edge_size() {
                return Err(usage(format!("edge has {} leaves, χ takes k + r = {}", x.len(), cfg.edge_size())));
            }
            let color = coloring::chi(&x, &cfg)?;
            let combs = coloring::analyze_edge(&x, &cfg)?;
            emit("chi eval", json!({ "phi": phi, "edge": x }), json!({ "color": color, "combs": combs }), started)?;
            Ok(0)
        }
        ChiCmd::Export { phi, out } => {
            let cfg = load_cfg(phi)?;
            let f = formats::materialize_chi(&cfg)?;
            formats::save_chi(out, &f)?;
            let result = json!({
                "n": f.header.n,
                "r": f.header.r,
                "k": f.header.k,
                "edges": daisy_core::daisy::TableColoring::edge_count(f.table.n(), (f.header.r + f.header.k) as usize)?,
            });
            emit("chi export", json!({ "phi": phi, "out": out }), result, started)?;
            Ok(0)
        }
    }
}

fn builtin(spec: &str, n: Option<u32>, u: usize) -> Result<Box<dyn EdgeColoring>> {
    if let Some(rest) = spec.strip_prefix("chi:") {
        let cfg = load_cfg(Path::new(rest))?;
        if n.is_some_and(|n| n != cfg.params.leaf_count()) {
            return Err(usage("--n does not match the coloring's ground set"));
        }
        return Ok(Box::new(ChiColoring { cfg }));
    }
    let n = n.ok_or_else(|| usage("builtin colorings need --n"))?;
    let b: Box<dyn EdgeColoring> = match spec {
        "const0" => Box::new(FnColoring::new(n, u, |_: &[u32]| 0)),
        "const1" => Box::new(FnColoring::new(n, u, |_: &[u32]| 1)),
        "parity" => Box::new(FnColoring::new(n, u, |e: &[u32]| (e.iter().sum::<u32>() & 1) as u8)),
        s => {
            let Some(seed) = s.strip_prefix("random:").and_then(|v| v.parse::<u64>().ok()) else {
                return Err(usage(format!("unknown coloring {s:?}")));
            };
            Box::new(FnColoring::new(n, u, move |e: &[u32]| {
                let mut h = seed;
                for &v in e {
                    h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(v as u64);
                }
                ChaCha8Rng::seed_from_u64(h).gen::<u8>() & 1
            }))
        }
    };
    Ok(b)
}

fn daisy_cmd(c: &DaisyCmd, started: Instant) -> Result<u8> {
    let DaisyCmd::Find { coloring, n, r, m, k, simple, expect_none, budget } = c;
    let u = r + k;
    let col: Box<dyn EdgeColoring> = if Path::new(coloring).is_file() {
        let f = formats::load_chi(Path::new(coloring))?;
        if (f.header.r + f.header.k) as usize != u {
            return Err(usage(format!("file colors {}-sets, search needs r + k = {u}", f.header.r + f.header.k)));
        }
        if n.is_some_and(|n| n != f.table.n()) {
            return Err(usage("--n does not match the file's ground set"));
        }
        Box::new(f.table)
    } else {
        builtin(coloring, *n, u)?
    };
    let ground = col.ground();
    let opts = search_options(budget);
    let rep = if *simple {
        find_mono_simple_daisy(&&*col, ground, *r, *m, *k, &opts)?
    } else {
        find_mono_daisy(&&*col, ground, *r, *m, *k, &opts)?
    };
    let status = rep.status;
    let cfg = json!({
        "coloring": coloring, "n": ground, "r": r, "m": m, "k": k,
        "simple": simple, "expect_none": expect_none, "budget": budget,
    });
    emit("daisy find", cfg, rep, started)?;
    Ok(match status {
        SearchStatus::Inconclusive => 3,
        SearchStatus::Found if *expect_none => 1,
        _ => 0,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(default)]
    k0: Option<Vec<u32>>,
    #[serde(default)]
    k1: Option<Vec<u32>>,
    #[serde(default)]
    kernel: Option<Vec<u32>>,
    #[serde(alias = "m_set")]
    m: Vec<u32>,
    #[serde(default)]
    r: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PipelineCfg {
    #[serde(default)]
    mode: Option<String>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn pipeline_cmd(c: &PipelineCmd, started: Instant) -> Result<u8> {
    let PipelineCmd::Run { instance, phi, cfg: cfg_path, mode } = c;
    let cfg = load_cfg(phi)?;
    let inst: InstanceFile = read_json(instance)?;
    let r = inst.r.unwrap_or(cfg.r as usize);
    let set = |v: &Option<Vec<u32>>| -> Result<LeafSet> {
        Ok(LeafSet::new(v.clone().unwrap_or_default())?.in_tree(cfg.params)?)
    };
    let m_set = LeafSet::new(inst.m.clone())?.in_tree(cfg.params)?;
    let d = match (&inst.kernel, &inst.k0, &inst.k1) {
        (Some(_), None, None) => {
            let kernel = set(&inst.kernel)?;
            let k0: Vec<u32> = kernel.iter().copied().filter(|&v| Some(v) < m_set.min_leaf()).collect();
            let k1: Vec<u32> = kernel.iter().copied().filter(|&v| Some(v) > m_set.max_leaf()).collect();
            if k0.len() + k1.len() != kernel.len() {
                return Err(usage("the pipeline needs a simple daisy: the kernel must avoid the span of m"));
            }
            DaisyInstance::simple(LeafSet::new(k0)?, m_set, LeafSet::new(k1)?, r)?
        }
        (None, _, _) => DaisyInstance::simple(set(&inst.k0)?, m_set, set(&inst.k1)?, r)?,
        _ => return Err(usage("give either kernel or k0/k1, not both")),
    };
    let file_cfg: PipelineCfg = match cfg_path {
        Some(p) => read_json(p)?,
        None => PipelineCfg::default(),
    };
    let mode = match (mode, file_cfg.mode.as_deref()) {
        (Some(ModeArg::Theta), _) | (None, Some("theta") | None) => ThresholdMode::Theta,
        (Some(ModeArg::FloorR), _) | (None, Some("floor_r")) => ThresholdMode::FloorR,
        (None, Some(other)) => return Err(usage(format!("unknown mode {other:?}"))),
    };
    let rep = pipeline::run_pipeline(&d, &cfg, mode)?;
    let sound = rep.sound();
    let transport = rep.transport_constant;
    let config = json!({
        "instance": instance, "phi": phi, "n": cfg.params.n_bits(), "r": cfg.r, "k": cfg.k, "mode": mode,
    });
    emit("pipeline run", config, json!({ "report": rep, "sound": sound }), started)?;
    if sound == Some(false) || transport == Some(false) {
        return Ok(1);
    }
    Ok(0)
}

fn bounds_cmd(c: &BoundsCmd, started: Instant) -> Result<u8> {
    let BoundsCmd::Eval { r, m, k, formula, consts } = c;
    let mut p = BoundParams::default();
    for a in consts {
        p.set(a)?;
    }
    p.validate()?;
    let result = match formula {
        FormulaArg::Main => serde_json::to_value(bounds::main_lower_bound(*r, *m, *k, &p)?)?,
        FormulaArg::Simple => serde_json::to_value(bounds::simple_lower_bound(*r, *m, *k, &p)?)?,
        FormulaArg::SimpleInduction => serde_json::to_value(bounds::simple_induction_bound(*r, *m, *k, &p)?)?,
        FormulaArg::Sandwich => serde_json::to_value(bounds::sandwich(*r, *m, *k, &p)?)?,
    };
    let cfg = json!({ "r": r, "m": m, "k": k, "formula": formula, "constants": p });
    emit("bounds eval", cfg, result, started)?;
    Ok(0)
}
