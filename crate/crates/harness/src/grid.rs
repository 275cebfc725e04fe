use std::fmt::Write as _;
use std::path::Path;

use qfr::regularizers::Family;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_tree, RunConfig};
use crate::error::{read_json, write_file, Error, Result};
use crate::run::{run_on, with_threads};

pub const STANDARD_GRID: &str = "paper-grid";

/// Axes of a grid search; a missing axis keeps the base configuration's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// A named grid whose axes are filled in first.
    pub name: Option<String>,
    pub eta: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub reg: Option<Vec<Family>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridFile {
    Named(String),
    Spec(GridSpec),
}

impl GridSpec {
    /// η ∈ {1e-1..1e-4}, τ ∈ {1e-1..1e-4, 0}, γ ∈ {1e-1..1e-4}.
    pub fn standard() -> Self {
        GridSpec {
            name: Some(STANDARD_GRID.into()),
            eta: Some(vec![0.1, 0.01, 0.001, 0.0001]),
            tau: Some(vec![0.1, 0.01, 0.001, 0.0001, 0.0]),
            gamma: Some(vec![0.1, 0.01, 0.001, 0.0001]),
            reg: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        match read_json::<GridFile>(path)? {
            GridFile::Named(name) => GridSpec::named(&name),
            GridFile::Spec(spec) => spec.resolve(),
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            STANDARD_GRID => Ok(GridSpec::standard()),
            other => Err(Error::Config(format!("unknown grid {other:?}"))),
        }
    }

    /// Fills unspecified axes from the named grid, if any.
    pub fn resolve(self) -> Result<Self> {
        let Some(name) = self.name.clone() else {
            return Ok(self);
        };
        let base = GridSpec::named(&name)?;
        Ok(GridSpec {
            name: Some(name),
            eta: self.eta.or(base.eta),
            tau: self.tau.or(base.tau),
            gamma: self.gamma.or(base.gamma),
            reg: self.reg.or(base.reg),
        })
    }

    /// Cells in lexicographic (η, τ, γ, reg) order.
    pub fn cells(&self, base: &RunConfig) -> Vec<RunConfig> {
        let etas = self.eta.clone().unwrap_or_else(|| vec![base.eta]);
        let taus = self.tau.clone().unwrap_or_else(|| vec![base.tau]);
        let gammas = self.gamma.clone().unwrap_or_else(|| vec![base.gamma]);
        let regs = self.reg.clone().unwrap_or_else(|| vec![base.reg]);
        let mut out = Vec::new();
        for &eta in &etas {
            for &tau in &taus {
                for &gamma in &gammas {
                    for &reg in &regs {
                        out.push(RunConfig {
                            eta,
                            tau,
                            gamma,
                            reg,
                            out: None,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    /// Position in lexicographic cell order.
    pub index: usize,
    pub eta: f64,
    pub tau: f64,
    pub gamma: f64,
    pub reg: Family,
    /// Mean over seeds of the final last-iterate exploitability; +∞ for failed or non-finite runs.
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridOutput {
    /// Cells in lexicographic order.
    pub cells: Vec<CellResult>,
    /// Cell indices, best first.
    pub ranking: Vec<usize>,
}

impl GridOutput {
    pub fn winner(&self) -> &CellResult {
        &self.cells[self.ranking[0]]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,cell,eta,tau,gamma,reg,expl_last,error\n");
        for (rank, &i) in self.ranking.iter().enumerate() {
            let c = &self.cells[i];
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                rank + 1,
                c.index,
                c.eta,
                c.tau,
                c.gamma,
                c.reg,
                c.score,
                c.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            )
            .unwrap();
        }
        out
    }
}

/// Runs every cell and ranks by mean final last-iterate exploitability, ties by cell order.
pub fn grid(spec: &GridSpec, base: &RunConfig) -> Result<GridOutput> {
    base.validate()?;
    let tree = load_tree(&base.game)?;
    let cells = spec.cells(base);
    if cells.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let results: Vec<CellResult> = with_threads(base.threads, || {
        cells
            .par_iter()
            .enumerate()
            .map(|(index, cell)| {
                let cell = RunConfig { threads: None, ..cell.clone() };
                let (score, error) = match run_on(&tree, &cell) {
                    Ok(out) => (out.mean_final_exploitability(), None),
                    Err(e) => (f64::INFINITY, Some(e.to_string())),
                };
                CellResult {
                    index,
                    eta: cell.eta,
                    tau: cell.tau,
                    gamma: cell.gamma,
                    reg: cell.reg,
                    score: if score.is_nan() { f64::INFINITY } else { score },
                    error,
                }
            })
            .collect()
    })?;
    let mut ranking: Vec<usize> = (0..results.len()).collect();
    ranking.sort_by(|&a, &b| results[a].score.total_cmp(&results[b].score).then(a.cmp(&b)));
    let output = GridOutput { cells: results, ranking };
    if let Some(path) = &base.out {
        write_file(path, &output.to_csv())?;
    }
    Ok(output)
}
