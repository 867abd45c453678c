//! Replication benchmark: per replication draw a labeled sample and a base
//! measure, run every configured method and score its interval against `θ0`.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::diagnostics::{
    aggregate_bench, classical_interval, labeled_erm, write_bench_summary, write_bench_table,
    BenchRecord, BenchSummary, MeanSe,
};
use crate::error::{Error, Result};
use crate::losses::predict_proba;
use crate::measures::{AtomicMeasure, LabeledSample, Outcomes};
use crate::posterior::{argmax, posterior_predict_class, run_posterior, PriorConfig};
use crate::rectifiers::RectifierSpec;
use crate::rng::SeededRng;

use super::config::{DataSource, Method, RunConfig};
use super::io::{load_base_csv, load_labeled_csv};
use super::scenario::generate_scenario;

pub const CLASSIFICATION_FORMAT_TAG: &str = "#format rectiprior-classification/1";

/// Data for one replication.
#[derive(Debug, Clone)]
pub struct ReplicationData {
    pub labeled: LabeledSample,
    pub base: AtomicMeasure,
    pub test: Option<LabeledSample>,
    /// `θ0`, when the estimand is available.
    pub truth: Option<Vec<f64>>,
}

/// Resolved data source: files are read once and subsampled per replication.
enum Source {
    Scenario(super::scenario::ScenarioSpec),
    Pool {
        pool: LabeledSample,
        base: Option<AtomicMeasure>,
        truth: Option<Vec<f64>>,
    },
}

fn resolve(config: &RunConfig) -> Result<Source> {
    match config
        .data
        .as_ref()
        .ok_or_else(|| Error::param("no data source"))?
    {
        DataSource::Scenario(s) => Ok(Source::Scenario(s.clone())),
        DataSource::Files { labeled, base } => {
            let pool = load_labeled_csv(labeled, config.loss.num_classes())?;
            let base = base.as_deref().map(load_base_csv).transpose()?;
            let truth = if config.loss.is_classification() {
                None
            } else {
                Some(labeled_erm(&pool, &config.loss)?)
            };
            Ok(Source::Pool { pool, base, truth })
        }
    }
}

/// Seed of replication `r`.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    SeededRng::derive(seed, r as u64)
}

fn replication_data(config: &RunConfig, source: &Source, r: usize) -> Result<ReplicationData> {
    let seed = replication_seed(config.seed, r);
    match source {
        Source::Scenario(spec) => {
            let spec = super::scenario::ScenarioSpec {
                seed: replication_seed(spec.seed, r),
                ..spec.clone()
            };
            let s = generate_scenario(&spec)?;
            let truth = if config.loss.is_classification() {
                None
            } else {
                Some(spec.truth(&config.loss)?)
            };
            Ok(ReplicationData {
                labeled: s.labeled,
                base: s.base,
                test: s.test,
                truth,
            })
        }
        Source::Pool { pool, base, truth } => {
            let total = pool.len();
            let n = config.n.unwrap_or(total);
            if n == 0 || n > total {
                return Err(Error::param(format!(
                    "labeled subset size {n} not in [1, {total}]"
                )));
            }
            let mut idx: Vec<usize> = (0..total).collect();
            idx.shuffle(&mut SeededRng::new(seed, 0).generator());
            let (take, rest) = idx.split_at(n);
            let mut take = take.to_vec();
            let mut rest = rest.to_vec();
            take.sort_unstable();
            rest.sort_unstable();
            let labeled = pool.select(&take);
            let remainder = (!rest.is_empty()).then(|| pool.select(&rest));
            let base = match (base, &remainder) {
                (Some(b), _) => b.clone(),
                (None, Some(rem)) => {
                    let imputed = rem.imputed().ok_or_else(|| {
                        Error::param("no base file and the labeled pool carries no imputations")
                    })?;
                    AtomicMeasure::uniform(rem.covariates().clone(), imputed.clone())?
                }
                (None, None) => {
                    return Err(Error::param(
                        "no base file and no unlabeled remainder in the pool",
                    ))
                }
            };
            Ok(ReplicationData {
                labeled,
                base,
                test: remainder,
                truth: truth.clone(),
            })
        }
    }
}

fn prior(config: &RunConfig, method: Method, seed: u64) -> PriorConfig {
    let (gamma, rectifier) = match method {
        Method::BayesBootstrap => (0.0, RectifierSpec::Identity),
        Method::Raw => (config.gamma, RectifierSpec::Identity),
        _ => (config.gamma, config.rectifier_spec()),
    };
    PriorConfig {
        gamma,
        rectifier,
        seed,
        threads: None,
        ..config.prior_config()
    }
}

fn method_seed(rep_seed: u64, method: Method) -> u64 {
    SeededRng::derive(rep_seed, 1 + method as u64)
}

/// Interval records of one replication, one per configured method.
pub fn run_replication(
    config: &RunConfig,
    data: &ReplicationData,
    r: usize,
) -> Result<Vec<BenchRecord>> {
    let truth = data
        .truth
        .as_ref()
        .ok_or_else(|| Error::Capability("interval benchmark needs a known estimand".into()))?;
    let j = config.coord;
    if j >= truth.len() {
        return Err(Error::param(format!(
            "coordinate {j} outside a {}-dimensional parameter",
            truth.len()
        )));
    }
    let beta = 1.0 - config.level;
    let rep_seed = replication_seed(config.seed, r);
    config
        .methods
        .iter()
        .map(|&m| {
            let (interval, point) = match m {
                Method::Classical => {
                    let iv = classical_interval(&data.labeled, &config.loss, config.level)?;
                    (iv[j], labeled_erm(&data.labeled, &config.loss)?[j])
                }
                _ => {
                    let run = run_posterior(
                        &data.labeled,
                        &data.base,
                        &config.loss,
                        &prior(config, m, method_seed(rep_seed, m)),
                    )?;
                    (run.intervals[j], run.point[j])
                }
            };
            BenchRecord::new(r, m.name(), interval, point, truth[j], beta)
        })
        .collect()
}

/// Test-set accuracy of one method in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationRecord {
    pub replication: usize,
    pub method: String,
    pub accuracy: f64,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationSummary {
    pub method: String,
    pub replications: usize,
    pub accuracy: MeanSe,
}

fn accuracy(test: &LabeledSample, mut predict: impl FnMut(&[f64]) -> Result<usize>) -> Result<f64> {
    let Outcomes::Class { labels, .. } = test.outcomes() else {
        return Err(Error::mismatch("test outcomes must be class labels"));
    };
    let mut hits = 0usize;
    for (i, &y) in labels.iter().enumerate() {
        if predict(test.covariates().row(i))? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Accuracy records of one replication. The classical method is the
/// labeled-only ERM classifier.
pub fn run_classification_replication(
    config: &RunConfig,
    data: &ReplicationData,
    r: usize,
) -> Result<Vec<ClassificationRecord>> {
    let test = data
        .test
        .as_ref()
        .ok_or_else(|| Error::param("classification benchmark needs a test set"))?;
    let rep_seed = replication_seed(config.seed, r);
    config
        .methods
        .iter()
        .map(|&m| {
            let acc = match m {
                Method::Classical => {
                    let theta = labeled_erm(&data.labeled, &config.loss)?;
                    accuracy(test, |x| {
                        Ok(argmax(&predict_proba(&config.loss, &theta, x)?))
                    })?
                }
                _ => {
                    let run = run_posterior(
                        &data.labeled,
                        &data.base,
                        &config.loss,
                        &prior(config, m, method_seed(rep_seed, m)),
                    )?;
                    accuracy(test, |x| posterior_predict_class(&run, &config.loss, x))?
                }
            };
            Ok(ClassificationRecord {
                replication: r,
                method: m.name().to_string(),
                accuracy: acc,
                test_size: test.len(),
            })
        })
        .collect()
}

pub fn aggregate_classification(
    records: &[ClassificationRecord],
) -> Result<Vec<ClassificationSummary>> {
    if records.is_empty() {
        return Err(Error::param("no classification records to aggregate"));
    }
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    Ok(methods
        .into_iter()
        .map(|m| {
            let acc: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m)
                .map(|r| r.accuracy)
                .collect();
            ClassificationSummary {
                method: m.to_string(),
                replications: acc.len(),
                accuracy: MeanSe::of(&acc),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchOutput {
    Intervals {
        records: Vec<BenchRecord>,
        summaries: Vec<BenchSummary>,
    },
    Classification {
        records: Vec<ClassificationRecord>,
        summaries: Vec<ClassificationSummary>,
    },
}

impl BenchOutput {
    /// Record table in its versioned format.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        match self {
            BenchOutput::Intervals { records, .. } => write_bench_table(records, out),
            BenchOutput::Classification { records, .. } => {
                writeln!(out, "{CLASSIFICATION_FORMAT_TAG}")?;
                writeln!(out, "replication,method,accuracy,test_size")?;
                for r in records {
                    writeln!(
                        out,
                        "{},{},{:?},{}",
                        r.replication, r.method, r.accuracy, r.test_size
                    )?;
                }
                Ok(())
            }
        }
    }

    /// Per-method summary in its versioned format.
    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<()> {
        match self {
            BenchOutput::Intervals { summaries, .. } => write_bench_summary(summaries, out),
            BenchOutput::Classification { summaries, .. } => {
                writeln!(out, "{CLASSIFICATION_FORMAT_TAG}")?;
                writeln!(out, "method,replications,accuracy,accuracy_se")?;
                for s in summaries {
                    writeln!(
                        out,
                        "{},{},{:?},{:?}",
                        s.method, s.replications, s.accuracy.mean, s.accuracy.se
                    )?;
                }
                Ok(())
            }
        }
    }
}

/// Run all replications on a pool of `config.threads` workers. Output is
/// ordered by replication then method and does not depend on the pool size.
pub fn run_bench(config: &RunConfig) -> Result<BenchOutput> {
    config.validate()?;
    let work = || -> Result<BenchOutput> {
        let source = resolve(config)?;
        let wrap = |r: usize| {
            move |e: Error| Error::Replication {
                replication: r as u64,
                source: Box::new(e),
            }
        };
        if config.loss.is_classification() {
            let per: Vec<Vec<ClassificationRecord>> = (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    replication_data(config, &source, r)
                        .and_then(|d| run_classification_replication(config, &d, r))
                        .map_err(wrap(r))
                })
                .collect::<Result<_>>()?;
            let records: Vec<_> = per.into_iter().flatten().collect();
            let summaries = aggregate_classification(&records)?;
            Ok(BenchOutput::Classification { records, summaries })
        } else {
            let per: Vec<Vec<BenchRecord>> = (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    replication_data(config, &source, r)
                        .and_then(|d| run_replication(config, &d, r))
                        .map_err(wrap(r))
                })
                .collect::<Result<_>>()?;
            let records: Vec<_> = per.into_iter().flatten().collect();
            let summaries = aggregate_bench(&records)?;
            Ok(BenchOutput::Intervals { records, summaries })
        }
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::param(format!("cannot start {t} workers: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Data of replication `r`, as the benchmark would see it.
pub fn load_replication(config: &RunConfig, r: usize) -> Result<ReplicationData> {
    replication_data(config, &resolve(config)?, r)
}

/// Labeled sample, base measure and (when known) `θ0` for a single analysis:
/// the scenario as generated, or the files as given.
pub fn load_data(config: &RunConfig) -> Result<ReplicationData> {
    match config
        .data
        .as_ref()
        .ok_or_else(|| Error::param("either labeled data or a scenario is required"))?
    {
        DataSource::Scenario(spec) => {
            let s = generate_scenario(spec)?;
            let truth = spec.truth(&config.loss).ok();
            Ok(ReplicationData {
                labeled: s.labeled,
                base: s.base,
                test: s.test,
                truth,
            })
        }
        DataSource::Files { labeled, base } => {
            let labeled = load_labeled_csv(labeled, config.loss.num_classes())?;
            let base = match base {
                Some(p) => load_base_csv(p)?,
                None => crate::measures::empirical_measure(&labeled)?,
            };
            Ok(ReplicationData {
                labeled,
                base,
                test: None,
                truth: None,
            })
        }
    }
}

/// Write the files of a generated scenario into `dir`.
pub fn write_scenario_files(config: &RunConfig, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let Some(DataSource::Scenario(spec)) = &config.data else {
        return Err(Error::param("generate needs --scenario"));
    };
    let s = generate_scenario(spec)?;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str,
                   f: &dyn Fn(&mut std::io::BufWriter<std::fs::File>) -> Result<()>|
     -> Result<()> {
        let p = dir.join(name);
        let mut w = std::io::BufWriter::new(std::fs::File::create(&p)?);
        f(&mut w)?;
        w.flush()?;
        written.push(p);
        Ok(())
    };
    put("labeled.csv", &|w| {
        super::io::write_labeled_csv(&s.labeled, w)
    })?;
    put("base.csv", &|w| super::io::write_base_csv(&s.base, w))?;
    if let Some(t) = &s.test {
        put("test.csv", &|w| super::io::write_labeled_csv(t, w))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{ScenarioKind, ScenarioSpec};
    use crate::losses::LossSpec;

    fn small(kind: ScenarioKind) -> RunConfig {
        RunConfig {
            data: Some(DataSource::Scenario(ScenarioSpec {
                n: 40,
                n_unlabeled: 60,
                ..ScenarioSpec::new(kind)
            })),
            draws: 20,
            replications: 3,
            seed: 5,
            ..RunConfig::default()
        }
    }

    #[test]
    fn one_replication_one_method() {
        let c = RunConfig {
            replications: 1,
            methods: vec![Method::Raw],
            ..small(ScenarioKind::GaussianShift)
        };
        let BenchOutput::Intervals { records, .. } = run_bench(&c).unwrap() else {
            panic!()
        };
        assert_eq!(records.len(), 1);
    }

    #[test]
    fn bench_is_reproducible() {
        let c = small(ScenarioKind::MonotoneDistortion);
        assert_eq!(run_bench(&c).unwrap(), run_bench(&c).unwrap());
    }

    #[test]
    fn classification_bench_runs() {
        let c = RunConfig {
            loss: LossSpec::MultinomialLogistic {
                num_classes: 3,
                ridge: 1e-8,
            },
            ..small(ScenarioKind::CategoricalMiscalibrated)
        };
        let BenchOutput::Classification { records, summaries } = run_bench(&c).unwrap() else {
            panic!()
        };
        assert_eq!(records.len(), 12);
        assert_eq!(summaries.len(), 4);
    }
}
