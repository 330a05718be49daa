use std::fmt::Write as _;

use super::{run_pipeline, PipelineConfig, STEPS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples for a standard deviation, got {}",
                samples.len()
            )));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self {
            mean,
            stddev: var.sqrt(),
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub runs: usize,
    pub steps: Vec<(&'static str, TimingStats)>,
    pub total: TimingStats,
    /// AMG setup, which is part of the assemble step.
    pub setup: TimingStats,
    pub iterations: Vec<usize>,
    pub p99: Vec<f64>,
}

impl BenchmarkReport {
    /// `step,mean_s,stddev_s,min_s,max_s` with one row per step and a total row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,mean_s,stddev_s,min_s,max_s\n");
        for (name, t) in self
            .steps
            .iter()
            .chain(std::iter::once(&("total", self.total)))
        {
            let _ = writeln!(s, "{name},{},{},{},{}", t.mean, t.stddev, t.min, t.max);
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<12} {:>10} {:>10} {:>10} {:>10}\n",
            "step", "mean_s", "stddev_s", "min_s", "max_s"
        );
        let setup = ("amg setup", self.setup);
        for (name, t) in self
            .steps
            .iter()
            .chain([("total", self.total), setup].iter())
        {
            let _ = writeln!(
                s,
                "{name:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                t.mean, t.stddev, t.min, t.max
            );
        }
        s
    }
}

/// Repeats the full pipeline `runs` times on identical inputs and reports
/// per-step statistics.
pub fn run_benchmark(cfg: &PipelineConfig, runs: usize) -> Result<BenchmarkReport> {
    if runs < 2 {
        return Err(Error::InvalidArgument(format!(
            "benchmark needs runs >= 2, got {runs}"
        )));
    }
    let mut per_step = vec![Vec::with_capacity(runs); STEPS.len()];
    let mut total = Vec::with_capacity(runs);
    let mut setup = Vec::with_capacity(runs);
    let mut iterations = Vec::with_capacity(runs);
    let mut p99 = Vec::with_capacity(runs);
    for _ in 0..runs {
        let (report, timing) = run_pipeline(cfg)?;
        for (i, (_, t)) in timing.steps().iter().enumerate() {
            per_step[i].push(*t);
        }
        total.push(timing.total);
        setup.push(report.solve.setup_seconds);
        iterations.push(report.solve.iterations);
        p99.push(report.percentile99);
    }
    Ok(BenchmarkReport {
        runs,
        steps: STEPS
            .iter()
            .zip(&per_step)
            .map(|(n, s)| Ok((*n, TimingStats::from_samples(s)?)))
            .collect::<Result<_>>()?,
        total: TimingStats::from_samples(&total)?,
        setup: TimingStats::from_samples(&setup)?,
        iterations,
        p99,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{FieldInput, PhantomInput};
    use crate::voxel_model::{make_phantom, PhantomParams};

    #[test]
    fn statistics_definitions() {
        let c = TimingStats::from_samples(&[1.0; 5]).unwrap();
        assert_eq!((c.mean, c.stddev, c.min, c.max), (1.0, 0.0, 1.0, 1.0));
        let s = TimingStats::from_samples(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert!((s.stddev - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(TimingStats::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn benchmark_rows_and_determinism() {
        let p = PhantomParams {
            radius: 0.007,
            kappas: vec![0.2],
            ..Default::default()
        };
        let m = make_phantom("sphere", [10; 3], [0.002; 3], &p).unwrap();
        let mut cfg = PipelineConfig::new(
            PhantomInput::Model(m),
            FieldInput::uniform([0.0, 0.0, 1e-6]),
        );
        cfg.frequency_hz = Some(85e3);
        let b = run_benchmark(&cfg, 3).unwrap();
        let csv = b.to_csv();
        assert_eq!(csv.lines().count(), 1 + 6 + 1);
        assert!(csv.lines().last().unwrap().starts_with("total,"));
        assert!(b.iterations.windows(2).all(|w| w[0] == w[1]));
        assert!(b
            .steps
            .iter()
            .all(|(_, t)| t.mean >= t.min && t.max >= t.mean));
        assert!(run_benchmark(&cfg, 1).is_err());
    }
}
