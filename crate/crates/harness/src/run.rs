use std::fmt::Write as _;
use std::time::Instant;

use qfr::eval::{
    best_response_values, bregman_to_reference, compute_reference, exploitability, perturbed_regularized_gap,
    EvalReport, ReferenceConfig,
};
use qfr::game::{BehavioralProfile, GameTree};
use qfr::solvers::{game_constants, Algorithm, ConstantsConfig, MBoundMonitor, MonitorSummary, Solver, SolverParams};
use qfr::values::feedback_multipliers;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_tree, RunConfig};
use crate::error::{write_file, Error, Result};

pub const CSV_HEADER: &str = "seed,iter,expl_last,expl_avg,reg_gap,bregman_ref,wall_ms";

/// One evaluated checkpoint of one seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub seed: u64,
    pub report: EvalReport,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedSeries {
    pub seed: u64,
    pub records: Vec<ConvergenceRecord>,
    pub monitor: Option<MonitorSummary>,
}

impl SeedSeries {
    pub fn last(&self) -> &ConvergenceRecord {
        self.records.last().expect("at least one checkpoint")
    }

    /// Running minimum of a metric: (iteration, best value so far) per checkpoint that reports it.
    pub fn best_so_far(&self, metric: impl Fn(&EvalReport) -> Option<f64>) -> Vec<(usize, f64)> {
        let mut best = f64::INFINITY;
        self.records
            .iter()
            .filter_map(|r| {
                let v = metric(&r.report)?;
                best = best.min(v);
                Some((r.report.iteration, best))
            })
            .collect()
    }

    /// Best value of a metric over checkpoints up to and including `iteration`.
    pub fn best_until(&self, iteration: usize, metric: impl Fn(&EvalReport) -> Option<f64>) -> Option<f64> {
        self.best_so_far(metric)
            .into_iter()
            .take_while(|&(t, _)| t <= iteration)
            .last()
            .map(|(_, v)| v)
    }

    pub fn at(&self, iteration: usize) -> Option<&EvalReport> {
        self.records.iter().map(|r| &r.report).find(|r| r.iteration == iteration)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub config: RunConfig,
    pub series: Vec<SeedSeries>,
}

impl RunOutput {
    pub fn to_csv(&self) -> String {
        to_csv(&self.series)
    }

    /// Mean over seeds of the final last-iterate exploitability.
    pub fn mean_final_exploitability(&self) -> f64 {
        let total: f64 = self.series.iter().map(|s| s.last().report.exploitability_last).sum();
        total / self.series.len() as f64
    }

    /// All seeds' monitor summaries merged.
    pub fn monitor(&self) -> Option<MonitorSummary> {
        let mut merged: Option<MonitorSummary> = None;
        for s in self.series.iter().filter_map(|s| s.monitor.as_ref()) {
            let m = merged.get_or_insert_with(|| MonitorSummary {
                min_seen: f64::INFINITY,
                max_seen: f64::NEG_INFINITY,
                ..MonitorSummary::default()
            });
            m.observations += s.observations;
            m.hard += s.hard;
            m.soft += s.soft;
            m.min_seen = m.min_seen.min(s.min_seen);
            m.max_seen = m.max_seen.max(s.max_seen);
        }
        merged
    }
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(series: &[SeedSeries]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in series {
        for r in &s.records {
            let e = &r.report;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.seed,
                e.iteration,
                e.exploitability_last,
                field(e.exploitability_avg),
                field(e.reg_gap),
                field(e.bregman_ref),
                r.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default()
            )
            .unwrap();
        }
    }
    out
}

/// Runs `work` on a dedicated pool when a thread count is configured.
pub(crate) fn with_threads<R: Send>(threads: Option<usize>, work: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let tree = load_tree(&config.game)?;
    let output = run_on(&tree, config)?;
    if let Some(path) = &config.out {
        write_file(path, &output.to_csv())?;
    }
    Ok(output)
}

/// Same as [`run`] on an already loaded tree; writes nothing.
pub fn run_on(tree: &GameTree<f64>, config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let params = config.solver_params(tree)?;
    params.validate(tree)?;
    let reference = if config.reference {
        let rc = ReferenceConfig {
            max_iterations: config.reference_max_iters,
            tol: config.reference_tol,
            ..ReferenceConfig::default()
        };
        Some(compute_reference(tree, config.tau, &params.spec, &params.simplices, &rc)?)
    } else {
        None
    };
    let seeds: Vec<u64> = (0..config.reps as u64).map(|r| config.seed + r).collect();
    let series = with_threads(config.threads, || {
        seeds
            .par_iter()
            .map(|&seed| run_seed(tree, config, &params, reference.as_ref(), seed))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(RunOutput {
        config: config.clone(),
        series,
    })
}

fn monitor_for(tree: &GameTree<f64>, config: &RunConfig) -> Result<Option<MBoundMonitor>> {
    let qfr_family = matches!(
        config.algo,
        Algorithm::Qfr | Algorithm::QfrStoch | Algorithm::QfrLazy | Algorithm::Pga | Algorithm::Mmd
    );
    if !config.monitor || !qfr_family {
        return Ok(None);
    }
    let mut cc = ConstantsConfig::new(config.feedback, config.reg, config.tau, config.gamma);
    if config.nu == qfr::solvers::NuChoice::Uniform {
        cc.nu = Some(tree.infosets.iter().map(|i| vec![1.0 / i.num_actions() as f64; i.num_actions()]).collect());
    }
    let c = game_constants(tree, &cc)?;
    Ok(Some(MBoundMonitor::new(c.m1, c.m2)))
}

fn run_seed(
    tree: &GameTree<f64>,
    config: &RunConfig,
    params: &SolverParams<f64>,
    reference: Option<&BehavioralProfile<f64>>,
    seed: u64,
) -> Result<SeedSeries> {
    let mut monitor = monitor_for(tree, config)?;
    let mut solver = Solver::new(tree, params.clone(), config.algo)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut records = Vec::new();
    let wrap = |iteration: usize| move |source| Error::Solver { seed, iteration, source };
    for t in 1..=config.iters {
        solver.step(&mut rng).map_err(wrap(t))?;
        if let Some(m) = monitor.as_mut() {
            match config.algo {
                Algorithm::QfrStoch => m.observe(&feedback_multipliers(tree, &solver.state.current, config.feedback)),
                Algorithm::QfrLazy => {}
                _ => {
                    if let Some(last) = &solver.state.last_m {
                        m.observe(last);
                    }
                }
            }
        }
        if config.is_checkpoint(t) {
            let current = solver.current_profile().map_err(wrap(t))?;
            if let (Some(m), Algorithm::QfrLazy) = (monitor.as_mut(), config.algo) {
                m.observe(&feedback_multipliers(tree, &current, config.feedback));
            }
            let center = match (reference, config.algo) {
                (Some(_), Algorithm::Qfr | Algorithm::QfrStoch | Algorithm::QfrLazy) => {
                    Some(solver.center_profile().map_err(wrap(t))?)
                }
                _ => None,
            };
            let report = evaluate(tree, config, &solver, &current, center.as_ref(), reference, t).map_err(wrap(t))?;
            records.push(ConvergenceRecord {
                seed,
                report,
                wall_ms: config.wall.then(|| start.elapsed().as_secs_f64() * 1e3),
            });
        }
    }
    log::debug!("seed {seed}: {} checkpoints", records.len());
    Ok(SeedSeries {
        seed,
        records,
        monitor: monitor.map(|m| m.summary().clone()),
    })
}

/// The Bregman distance is taken at `center` when given (the optimistic center of the QFR variants).
fn evaluate(
    tree: &GameTree<f64>,
    config: &RunConfig,
    solver: &Solver<'_, f64>,
    current: &BehavioralProfile<f64>,
    center: Option<&BehavioralProfile<f64>>,
    reference: Option<&BehavioralProfile<f64>>,
    t: usize,
) -> qfr::Result<EvalReport> {
    let params = &solver.params;
    let values = best_response_values(tree, current)?;
    let exploitability_avg = match solver.average_profile() {
        Some(avg) => Some(exploitability(tree, &avg)?),
        None => None,
    };
    let reg_gap = if config.tracks_gap() {
        Some(perturbed_regularized_gap(tree, current, params.tau_at(t), &params.spec, &params.simplices)?)
    } else {
        None
    };
    let bregman_ref = match reference {
        Some(r) => Some(bregman_to_reference(tree, center.unwrap_or(current), r, &params.spec)?),
        None => None,
    };
    Ok(EvalReport {
        iteration: t,
        exploitability_last: values[0] + values[1],
        exploitability_avg,
        reg_gap,
        bregman_ref,
        best_response_values: values,
    })
}
