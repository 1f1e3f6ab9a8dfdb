use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use log::info;
use spad_core::config::{ScenarioConfig, Scheme, SpadPricing};
use spad_core::economics::EconParams;
use spad_core::exec::Execution;
use spad_core::learning::{hotboot as build_hotboot, read_cache, write_cache, write_trace_csv};
use spad_core::rng::{SeedTree, Stream};
use spad_core::sim::{
    compare_schemes, compute_metrics, generate_scenario, hotboot_template, learning_config, run_episode,
    write_comparison_csv, write_metrics_csv, write_slot_csv, EpisodeOptions, RunRecord, SchemeConfig,
};
use spad_core::stackelberg::{solve_brute_force, solve_se as solve, GameInstance, LinkCosts};

use crate::{plot, CompareArgs, Common, HotbootArgs, RunArgs, SolveArgs};

/// What a command was asked to do, resolved from flags and config.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: &'static str,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub scheme: Scheme,
    pub cache_path: Option<PathBuf>,
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.rng_seed = s;
    }
    if let Some(t) = common.slots {
        cfg.num_time_slots = t;
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn run(args: &RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(s) = &args.scheme {
        cfg.scheme = s.parse()?;
    }
    let manifest = RunManifest {
        command: "run",
        config_path: args.common.config.clone(),
        output_dir: args.common.out.clone(),
        seed: cfg.rng_seed,
        scheme: cfg.scheme,
        cache_path: args.cache.clone(),
    };
    info!(
        "{} scheme={} seed={} config={:?}",
        manifest.command, manifest.scheme, manifest.seed, manifest.config_path
    );
    let cache = match &manifest.cache_path {
        Some(p) => {
            let grid = learning_config(&cfg)?.grid;
            let f = File::open(p).with_context(|| format!("opening cache {}", p.display()))?;
            let c = read_cache(BufReader::new(f), Some(&grid)).with_context(|| format!("reading cache {}", p.display()))?;
            cfg.spad_pricing = SpadPricing::Learning;
            Some(Arc::new(c))
        }
        None => None,
    };
    prepare_out(&manifest.output_dir)?;

    let world = generate_scenario(&cfg)?;
    info!("world: {} fleets, {} vehicles", world.fleets.len(), world.vehicles.len());
    let sc = SchemeConfig::for_scheme(cfg.scheme, &cfg, &world.role_trust)?;
    let opts = EpisodeOptions { record_trace: true, cache, ..Default::default() };
    let trace = run_episode(&world, &sc, &opts)?;
    let metrics = compute_metrics(&trace)?;
    let record = RunRecord {
        scheme: cfg.scheme,
        repetition: 0,
        seed: world.seed,
        vehicles: world.vehicles.len(),
        metrics,
    };

    let dir = &manifest.output_dir;
    write_trace_csv(&trace.trace, create(dir, "trace.csv")?)?;
    write_slot_csv(&trace.slots, create(dir, "slots.csv")?)?;
    write_metrics_csv(std::slice::from_ref(&record), create(dir, "metrics.csv")?)?;
    let last = trace.slots.len().saturating_sub(1) as u64;
    trace.ledger.write_csv(&world.vehicles, last, create(dir, "reputation.csv")?)?;
    let mut p = create(dir, "plot.py")?;
    p.write_all(plot::script().as_bytes())?;
    p.flush()?;
    println!(
        "{}: secure_pubsub_ratio={:.4} avg_qocs=({:.4}, {:.4}) -> {}",
        cfg.scheme,
        record.metrics.secure_pubsub_ratio,
        record.metrics.avg_qocs.0,
        record.metrics.avg_qocs.1,
        dir.display()
    );
    Ok(())
}

fn parse_schemes(list: Option<&str>) -> Result<Vec<Scheme>> {
    match list {
        None => Ok(Scheme::ALL.to_vec()),
        Some(s) => s.split(',').filter(|x| !x.trim().is_empty()).map(|x| Ok(x.parse()?)).collect(),
    }
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let schemes = parse_schemes(args.scheme.as_deref())?;
    if schemes.is_empty() {
        bail!("no schemes given");
    }
    let dir = &args.common.out;
    prepare_out(dir)?;
    info!("comparing {schemes:?} over {} repetitions", args.reps);
    let c = compare_schemes(&cfg, &schemes, args.reps, 0, Execution::Parallel)?;
    write_comparison_csv(&c.summary, create(dir, "comparison.csv")?)?;
    write_metrics_csv(&c.runs, create(dir, "metrics.csv")?)?;
    let mut p = create(dir, "plot.py")?;
    p.write_all(plot::script().as_bytes())?;
    p.flush()?;
    for s in &c.summary {
        println!(
            "{:<12} secure_pubsub_ratio={:.4}±{:.4}",
            s.scheme.to_string(),
            s.mean[0].unwrap_or(f64::NAN),
            s.std[0].unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

pub fn hotboot(args: &HotbootArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let path = match &args.cache {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                prepare_out(parent)?;
            }
            p.clone()
        }
        None => {
            prepare_out(&args.common.out)?;
            args.common.out.join("hotboot.bin")
        }
    };
    let lc = learning_config(&cfg)?;
    let slots = if cfg.hotboot_slots == 0 { cfg.num_time_slots } else { cfg.hotboot_slots };
    // Same seed an episode uses when it warms its own tables.
    let seed = SeedTree::new(cfg.rng_seed).derive(Stream::Hotboot, 0);
    let cache = build_hotboot(&hotboot_template(&cfg), &lc, slots, seed)?;
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_cache(&cache, &mut w)?;
    w.flush()?;
    println!("wrote {} ({} experiments x {} slots)", path.display(), cache.experiments_run, slots);
    Ok(())
}

pub fn solve_se(args: &SolveArgs) -> Result<()> {
    let inst = GameInstance {
        j: (args.j1, args.j2),
        econ: EconParams {
            satisfaction_coeff: args.alpha,
            raw_cost_param: args.eps1,
            result_cost_param: args.eps2,
            price_cap: args.price_cap,
            ..EconParams::default()
        },
        sensing_capacity: args.sc,
        processing_capacity: args.pc,
        popularity: args.popularity,
        reputation: args.reputation,
        link: LinkCosts::default(),
    };
    inst.check()?;
    let se = solve(&inst)?;
    println!("p* = ({}, {})", fmt(se.price.raw_price), fmt(se.price.result_price));
    println!("q* = ({}, {})", fmt(se.qocs.raw_quality), fmt(se.qocs.result_quality));
    println!("case = ({}, {})", se.case_flags[0].label(), se.case_flags[1].label());
    if args.verify {
        let o = solve_brute_force(&inst, args.grid, Execution::Parallel);
        let cell = o.price_cell(inst.econ.price_cap);
        let gaps = [
            (se.price.raw_price - o.price.raw_price).abs() / cell,
            (se.price.result_price - o.price.result_price).abs() / cell,
        ];
        println!("oracle p = ({}, {})", fmt(o.price.raw_price), fmt(o.price.result_price));
        println!("oracle q = ({}, {})", fmt(o.qocs.raw_quality), fmt(o.qocs.result_quality));
        println!("gap = ({:.3}, {:.3}) cells of {}", gaps[0], gaps[1], fmt(cell));
        if gaps.iter().any(|&g| g > 2.0) {
            bail!("closed form and oracle differ by more than 2 grid cells");
        }
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}
