//! One function per subcommand. Each computes first (possibly in parallel)
//! and then writes its artifacts sequentially, one writer per file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lobcal_core::calibrate::{calibrate as run_search, model_surface, write_evaluation_log, EvaluationRecord};
use lobcal_core::data::{
    bars_1min, parse_bars, parse_ticks, synthesize_ticks, write_bars, write_ticks, BarSeries, ModelTickConfig,
    RandomWalkConfig, TickGenerator,
};
use lobcal_core::model::{
    parse_trade_signs, write_book_snapshot, write_simulation_dump, write_trade_signs, Simulation,
};
use lobcal_core::objective::ObjectiveSpec;
use lobcal_core::search::{
    aggregate_experiments, flatness, minimum_region, write_ci_table, write_surface, CalibrationExperiment, FreeParam,
    SearchConfig,
};
use lobcal_core::stats::{classify_trade_signs, ensemble_acf, moments_with, LeeReadyConfig, MomentVector};
use rayon::prelude::*;
use serde_json::json;

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::{AcfSource, GeneratorArg, MethodArg, UsageError};

/// Collects the files a command writes so the manifest can list them.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Outputs {
            dir,
            written: Vec::new(),
        }
    }

    fn write<F>(&mut self, name: impl AsRef<Path>, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    fn into_manifest(self, mut m: RunManifest) -> RunManifest {
        m.outputs = self.written;
        m
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_bars(path: &Path) -> Result<BarSeries> {
    parse_bars(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// The first `steps` bars of a bar file: the simulated series has that many
/// steps, and the objective compares series of equal length.
fn empirical_series(config: &Config, path: &Path) -> Result<Vec<f64>> {
    let bars = read_bars(path)?;
    let mut lp = bars.log_prices();
    lp.truncate(config.run.steps);
    Ok(lp)
}

fn objective_spec(config: &Config, path: &Path) -> Result<ObjectiveSpec> {
    let empirical = empirical_series(config, path)?;
    let weights = config.weights.fitted_to(empirical.len());
    Ok(ObjectiveSpec::build(
        empirical,
        config.run.tick_size,
        &weights,
        config.objective,
    )?)
}

pub fn ingest(config: &Config, dir: &Path, input: &Path, output: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::start("ingest", config);
    let ticks = parse_ticks(open(input)?).with_context(|| format!("parsing {}", input.display()))?;
    let bars = bars_1min(&ticks, &config.session)?;
    let mut out = Outputs::new(dir);
    out.write(output, |w| write_bars(w, &bars))?;
    let mut m = out.into_manifest(manifest);
    m.summary = json!({
        "ticks": ticks.len(),
        "bars": bars.len(),
        "carried_forward": bars.bars.iter().filter(|b| b.carried_forward).count(),
        "days": bars.days().len(),
    });
    Ok(m)
}

pub fn synth(
    config: &Config,
    dir: &Path,
    output: &Path,
    sessions: Option<usize>,
    generator: Option<GeneratorArg>,
    persistence: Option<f64>,
    signs_out: Option<&Path>,
) -> Result<RunManifest> {
    let mut sc = config.synth;
    if let Some(n) = sessions {
        sc.sessions = n;
    }
    match (generator, sc.generator) {
        (Some(GeneratorArg::RandomWalk), TickGenerator::Model(_)) => {
            sc.generator = TickGenerator::RandomWalk(RandomWalkConfig::default());
        }
        (Some(GeneratorArg::Model), TickGenerator::RandomWalk(_)) => {
            sc.generator = TickGenerator::Model(ModelTickConfig {
                params: config.model,
                ..ModelTickConfig::default()
            });
        }
        _ => {}
    }
    if let Some(p) = persistence {
        match &mut sc.generator {
            TickGenerator::RandomWalk(rw) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(UsageError(format!("persistence must lie in [0, 1], got {p}")).into());
                }
                rw.sign_persistence = p;
            }
            TickGenerator::Model(_) => {
                return Err(UsageError("--persistence applies to the random-walk generator".into()).into());
            }
        }
    }
    let seed = config.run.seed;
    let mut manifest = RunManifest::start("synth", config);
    manifest.seeds = vec![seed];
    let synth = synthesize_ticks(&sc, seed)?;
    let mut out = Outputs::new(dir);
    out.write(output, |w| write_ticks(w, &synth.ticks))?;
    if let Some(p) = signs_out {
        out.write(p, |w| write_trade_signs(w, &synth.true_signs))?;
    }
    let mut m = out.into_manifest(manifest);
    m.summary = json!({
        "ticks": synth.ticks.len(),
        "trades": synth.true_signs.len(),
        "synth": sc,
    });
    Ok(m)
}

pub fn simulate(
    config: &Config,
    dir: &Path,
    ensemble: usize,
    bars_out: Option<&Path>,
    book: bool,
    max_lag: Option<usize>,
) -> Result<RunManifest> {
    if ensemble == 0 {
        return Err(UsageError("--ensemble must be at least one".into()).into());
    }
    let seeds: Vec<u64> = (0..ensemble as u64).map(|i| config.run.seed.wrapping_add(i)).collect();
    let mut manifest = RunManifest::start("simulate", config);
    manifest.seeds = seeds.clone();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let run = lobcal_core::model::RunConfig { seed, ..config.run };
            Simulation::new(config.model, run)?.run_with_book(&mut ())
        })
        .collect::<lobcal_core::Result<Vec<_>>>()?;

    let mut out = Outputs::new(dir);
    let single = ensemble == 1;
    for (i, (sim, final_book)) in runs.iter().enumerate() {
        let (dump, signs, snapshot) = if single {
            (
                "simulation.csv".to_string(),
                "signs.csv".to_string(),
                "book.csv".to_string(),
            )
        } else {
            (
                format!("sim_{i:03}.csv"),
                format!("signs_{i:03}.csv"),
                format!("book_{i:03}.csv"),
            )
        };
        out.write(dump, |w| write_simulation_dump(w, sim))?;
        out.write(signs, |w| write_trade_signs(w, &sim.trade_signs))?;
        if book {
            out.write(snapshot, |w| {
                write_book_snapshot(w, sim.log_prices.len(), final_book, true)
            })?;
        }
    }
    if let Some(p) = bars_out {
        let bars = BarSeries::from_log_prices(&runs[0].0.log_prices, config.session);
        out.write(p, |w| write_bars(w, &bars))?;
    }

    let lag = max_lag.unwrap_or(config.acf.max_lag);
    let signs: Vec<Vec<i8>> = runs.iter().map(|(s, _)| s.trade_signs.clone()).collect();
    let acf_summary = match ensemble_acf(&signs, lag) {
        Ok(report) => {
            out.write("acf.csv", |w| report.write_csv(w))?;
            let low = report
                .values
                .iter()
                .take(10)
                .filter(|v| v.abs() > report.noise_band)
                .count();
            json!({ "noise_band": report.noise_band, "significant_lags_1_10": low })
        }
        Err(e) => {
            eprintln!("warning: no ACF report: {e}");
            json!({ "error": e.to_string() })
        }
    };
    let mut m = out.into_manifest(manifest);
    m.summary = json!({
        "runs": ensemble,
        "q_var": runs.iter().map(|(s, _)| s.q_var).collect::<Vec<_>>(),
        "trades": runs.iter().map(|(s, _)| s.trade_signs.len()).collect::<Vec<_>>(),
        "carried_forward": runs.iter().map(|(s, _)| s.carried_forward_steps()).collect::<Vec<_>>(),
        "acf": acf_summary,
    });
    Ok(m)
}

pub fn calibrate(
    config: &Config,
    dir: &Path,
    method: MethodArg,
    data: &Path,
    experiments: Option<usize>,
    free: Option<Vec<FreeParam>>,
    log_evaluations: bool,
) -> Result<RunManifest> {
    let (tag, search, default_n, free) = match method {
        MethodArg::Nm => {
            if free.is_some() {
                return Err(UsageError("--free applies to the genetic search only".into()).into());
            }
            (
                "nm",
                SearchConfig::NelderMead(config.nm),
                config.calibrate.nm_experiments,
                FreeParam::ALL.to_vec(),
            )
        }
        MethodArg::Ga => (
            "ga",
            SearchConfig::Genetic(config.ga),
            config.calibrate.ga_experiments,
            free.unwrap_or_else(|| config.calibrate.ga_free.clone()),
        ),
    };
    if free.is_empty() {
        return Err(UsageError("no free parameters".into()).into());
    }
    let mut sorted = free.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != free.len() {
        return Err(UsageError("free parameters repeat".into()).into());
    }
    let n = experiments.unwrap_or(default_n);
    if n == 0 {
        return Err(UsageError("--experiments must be at least one".into()).into());
    }
    let log = log_evaluations || config.calibrate.log_evaluations;
    let spec = objective_spec(config, data)?;
    let seeds: Vec<u64> = (0..n as u64).map(|i| config.calibrate.seed.wrapping_add(i)).collect();
    let mut manifest = RunManifest::start(&format!("calibrate {tag}"), config);
    manifest.seeds = seeds.clone();

    let results: Vec<(CalibrationExperiment, Vec<EvaluationRecord>)> = seeds
        .par_iter()
        .map(|&seed| run_search(&spec, &config.model, &free, &config.bounds, &search, seed, log))
        .collect();

    let mut out = Outputs::new(dir);
    for (i, (exp, records)) in results.iter().enumerate() {
        out.write(format!("{tag}_run{i:02}.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, exp).map_err(std::io::Error::other)?;
            writeln!(w)
        })?;
        if log {
            out.write(format!("{tag}_run{i:02}_evaluations.csv"), |w| {
                write_evaluation_log(w, records)
            })?;
        }
    }
    let exps: Vec<CalibrationExperiment> = results.into_iter().map(|(e, _)| e).collect();
    let ci = if exps.len() >= 2 {
        let rows = aggregate_experiments(&exps)?;
        out.write(format!("{tag}_ci.csv"), |w| write_ci_table(w, &rows))?;
        serde_json::to_value(&rows)?
    } else {
        serde_json::Value::Null
    };
    let mut m = out.into_manifest(manifest);
    m.summary = json!({
        "steps": spec.steps(),
        "p0": spec.alignment.p0,
        "final_objectives": exps.iter().map(|e| e.final_objective).collect::<Vec<_>>(),
        "ci": ci,
    });
    Ok(m)
}

pub fn surface(
    config: &Config,
    dir: &Path,
    pair: [FreeParam; 2],
    data: &Path,
    n: Option<usize>,
) -> Result<RunManifest> {
    let n = n.unwrap_or(config.surface.n);
    if n == 0 {
        return Err(UsageError("--n must be at least one".into()).into());
    }
    let spec = objective_spec(config, data)?;
    let mut manifest = RunManifest::start("surface", config);
    manifest.seeds = (0..config.objective.replications as u64)
        .map(|r| config.objective.seed_base.wrapping_add(r))
        .collect();
    let rows = model_surface(&spec, &config.model, pair, &config.bounds, n);
    let mut out = Outputs::new(dir);
    out.write(format!("surface_{}_{}.csv", pair[0], pair[1]), |w| {
        write_surface(w, &rows)
    })?;
    let bounds = [config.bounds.get(pair[0]), config.bounds.get(pair[1])];
    let region = minimum_region(&rows, bounds, config.surface.region_draws, config.run.seed);
    let mut m = out.into_manifest(manifest);
    m.summary = json!({
        "points": rows.len(),
        "penalized": rows.iter().filter(|r| r.penalized).count(),
        "flatness": finite_or_null(flatness(&rows)),
        "minimum_region": region.map(|r| json!({
            "count": r.count,
            "decile_spread": r.decile_spread,
            "random_spread": r.random_spread,
            "ratio": r.ratio(),
            "clustered": r.is_clustered(),
            "centroid": r.centroid,
        })),
    });
    Ok(m)
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

pub fn acf(
    config: &Config,
    dir: &Path,
    source: AcfSource,
    paths: &[PathBuf],
    max_lag: Option<usize>,
    quote_lag_ms: Option<i64>,
    output: &Path,
) -> Result<RunManifest> {
    let lag = max_lag.unwrap_or(config.acf.max_lag);
    let manifest = RunManifest::start("acf", config);
    let lr = LeeReadyConfig {
        quote_lag_ms: quote_lag_ms.unwrap_or(config.acf.lee_ready.quote_lag_ms),
    };
    let mut series = Vec::with_capacity(paths.len());
    let mut unclassified = 0usize;
    for p in paths {
        let ctx = || format!("parsing {}", p.display());
        match source {
            AcfSource::Data => {
                let ticks = parse_ticks(open(p)?).with_context(ctx)?;
                let signed = classify_trade_signs(&ticks, &lr);
                unclassified += signed.unclassified;
                series.push(signed.signs);
            }
            AcfSource::Simulation => series.push(parse_trade_signs(open(p)?).with_context(ctx)?),
        }
    }
    let report = ensemble_acf(&series, lag)?;
    let mut out = Outputs::new(dir);
    out.write(output, |w| report.write_csv(w))?;
    let mut m = out.into_manifest(manifest);
    m.summary = json!({
        "series": series.len(),
        "signs": series.iter().map(Vec::len).sum::<usize>(),
        "unclassified": unclassified,
        "noise_band": report.noise_band,
    });
    Ok(m)
}

pub fn aggregate(config: &Config, dir: &Path, files: &[PathBuf], output: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::start("aggregate", config);
    let exps = files
        .iter()
        .map(|p| serde_json::from_reader(open(p)?).with_context(|| format!("parsing {}", p.display())))
        .collect::<Result<Vec<CalibrationExperiment>>>()?;
    let rows = aggregate_experiments(&exps)?;
    let mut out = Outputs::new(dir);
    out.write(output, |w| write_ci_table(w, &rows))?;
    let mut m = out.into_manifest(manifest);
    m.summary = serde_json::to_value(&rows)?;
    Ok(m)
}

pub fn moments(config: &Config, dir: &Path, data: &Path, output: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::start("moments", config);
    let lp = read_bars(data)?.log_prices();
    let m = moments_with(&lp, &lp, &config.objective.moments)?;
    let mut out = Outputs::new(dir);
    out.write(output, |w| MomentVector::write_csv(w, &[m]))?;
    let mut man = out.into_manifest(manifest);
    man.summary = serde_json::to_value(m)?;
    Ok(man)
}
