use rayon::prelude::*;
use serde::Serialize;

use super::pipeline::{run_prepared, Inputs, Registries};
use super::report::BufferStats;
use super::RunConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CellResult {
    pub policy: String,
    pub seed: u64,
    /// Final buffer statistics, or the error that stopped the run.
    pub outcome: std::result::Result<BufferStats, String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 with fewer than two runs.
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub runs: usize,
    pub failed: usize,
    pub eoe: Summary,
    pub dss: Summary,
    pub idd: Summary,
    pub coverage: Summary,
    pub composite: Summary,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// One cell per (policy, seed), policies in request order, then seeds.
    pub cells: Vec<CellResult>,
    pub rows: Vec<PolicySummary>,
}

impl Comparison {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record([
            "policy", "runs", "failed", "eoe_mean", "eoe_std", "dss_mean", "dss_std", "idd_mean",
            "idd_std", "coverage_mean", "coverage_std", "composite_mean", "composite_std",
        ])
        .map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![r.policy.clone(), r.runs.to_string(), r.failed.to_string()];
            for s in [r.eoe, r.dss, r.idd, r.coverage, r.composite] {
                rec.push(format!("{:.6}", s.mean));
                rec.push(format!("{:.6}", s.std));
            }
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Runs every (policy, seed) pair on the same inputs. Each run writes to
/// `<out_dir>/<policy>/seed_<seed>`. A failing run marks its cell failed
/// without stopping the others.
pub fn compare_policies(
    template: &RunConfig,
    policies: &[String],
    seeds: &[u64],
    registries: &Registries,
) -> Result<Comparison> {
    if policies.is_empty() || seeds.is_empty() {
        return Err(Error::Config("compare needs at least one policy and one seed".into()));
    }
    for p in policies {
        registries.policies.build(p)?;
    }
    let inputs = Inputs::load(template, registries)?;

    let jobs: Vec<(&String, u64)> = policies
        .iter()
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(policy, seed)| {
            let mut cfg = template.clone();
            cfg.policy = policy.clone();
            cfg.seed = seed;
            cfg.out_dir = template.out_dir.join(policy).join(format!("seed_{seed}"));
            let outcome = run_prepared(&cfg, &inputs, &registries.policies)
                .map(|r| r.final_buffer)
                .map_err(|e| {
                    log::error!("{policy} / seed {seed}: {e}");
                    e.to_string()
                });
            CellResult {
                policy: policy.clone(),
                seed,
                outcome,
            }
        })
        .collect();

    let rows = policies
        .iter()
        .map(|p| {
            let ok: Vec<&BufferStats> = cells
                .iter()
                .filter(|c| &c.policy == p)
                .filter_map(|c| c.outcome.as_ref().ok())
                .collect();
            let pick = |f: fn(&BufferStats) -> f64| Summary::of(&ok.iter().map(|s| f(s)).collect::<Vec<_>>());
            PolicySummary {
                policy: p.clone(),
                runs: seeds.len(),
                failed: seeds.len() - ok.len(),
                eoe: pick(|s| s.mean_eoe),
                dss: pick(|s| s.mean_dss),
                idd: pick(|s| s.mean_idd),
                coverage: pick(|s| s.domain_coverage),
                composite: pick(|s| s.composite),
            }
        })
        .collect();
    Ok(Comparison { cells, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Summary::of(&[4.0]), Summary { mean: 4.0, std: 0.0 });
    }
}
