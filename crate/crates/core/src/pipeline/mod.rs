//! End-to-end run: face fluxes → gauging → Poisson assembly → solve →
//! field reconstruction → report, each step wall-clock timed.

mod bench;

use std::path::PathBuf;
use std::time::Instant;

pub use bench::{run_benchmark, BenchmarkReport, TimingStats};

use crate::dosimetry::{
    voxel_field_from_potentials, write_field_dump, write_report, ExposureReport,
};
use crate::error::{Error, Result};
use crate::field_source::{
    divergence_clean_with, interpolate_to_faces, load_samples, sample_on_lattice, source_registry,
    source_to_faces, FieldSampleSet, Lattice, SourceParams, DEFAULT_CLEAN_TOL,
};
use crate::fit::{assemble_poisson_with, PoissonSystem, StaggeredGrid};
use crate::gauging::{gauge_vector_potential, tree_registry};
use crate::linsolve::{build_preconditioner, fgmres_solve, kernels::with_threads, SolveConfig};
use crate::voxel_model::{load_model, VoxelModel};

/// Names of the timed steps, in execution order.
pub const STEPS: [&str; 6] = [
    "interpolate",
    "gauge",
    "assemble",
    "solve",
    "efield",
    "report",
];

#[derive(Debug, Clone)]
pub enum PhantomInput {
    Path(PathBuf),
    Model(VoxelModel),
}

#[derive(Debug, Clone)]
pub enum FieldInput {
    /// Field sample file.
    File(PathBuf),
    Samples(FieldSampleSet),
    /// Registered source. With a lattice the source is sampled there and
    /// interpolated; without one it is evaluated at face centers.
    Source {
        kind: String,
        params: SourceParams,
        lattice: Option<Lattice>,
    },
}

impl FieldInput {
    pub fn uniform(b: [f64; 3]) -> Self {
        FieldInput::Source {
            kind: "uniform".into(),
            params: SourceParams {
                b,
                ..Default::default()
            },
            lattice: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub phantom: PhantomInput,
    pub field: FieldInput,
    /// Operating frequency; falls back to the sample set's frequency.
    pub frequency_hz: Option<f64>,
    pub solve: SolveConfig,
    pub clean: bool,
    /// Relative compatibility tolerance for cleaning and gauging.
    pub clean_tol: f64,
    pub tree: String,
    pub assembly: String,
    pub rms: bool,
    pub out_report: Option<PathBuf>,
    pub out_field: Option<PathBuf>,
    pub latency_budget_s: f64,
}

impl PipelineConfig {
    pub fn new(phantom: PhantomInput, field: FieldInput) -> Self {
        Self {
            phantom,
            field,
            frequency_hz: None,
            solve: SolveConfig::default(),
            clean: true,
            clean_tol: DEFAULT_CLEAN_TOL,
            tree: "comb".into(),
            assembly: "stencil".into(),
            rms: false,
            out_report: None,
            out_field: None,
            latency_budget_s: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latency_budget_s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "latency budget {} must be > 0",
                self.latency_budget_s
            )));
        }
        if let Some(f) = self.frequency_hz {
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::InvalidArgument(format!("frequency {f} must be > 0")));
            }
        }
        if !(self.clean_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "clean tolerance {} must be > 0",
                self.clean_tol
            )));
        }
        tree_registry().get(&self.tree)?;
        self.solve.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PipelineTiming {
    pub interpolate: f64,
    pub gauge: f64,
    pub assemble: f64,
    pub solve: f64,
    pub efield: f64,
    pub report: f64,
    /// Sum of the step times.
    pub total: f64,
    pub budget_s: f64,
    pub budget_met: bool,
}

impl PipelineTiming {
    pub fn steps(&self) -> [(&'static str, f64); 6] {
        [
            ("interpolate", self.interpolate),
            ("gauge", self.gauge),
            ("assemble", self.assemble),
            ("solve", self.solve),
            ("efield", self.efield),
            ("report", self.report),
        ]
    }

    /// Human-readable table, one step per line.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for (name, t) in self.steps() {
            s.push_str(&format!("{name:<12} {t:>10.4} s\n"));
        }
        s.push_str(&format!("{:<12} {:>10.4} s\n", "total", self.total));
        s.push_str(&format!(
            "budget {} s: {}\n",
            self.budget_s,
            if self.budget_met { "met" } else { "exceeded" }
        ));
        s
    }
}

fn at<T>(step: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Step {
        step,
        source: Box::new(e),
    })
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot = t.elapsed().as_secs_f64();
    out
}

enum Fluxes {
    Samples(FieldSampleSet),
    Direct(Box<dyn crate::field_source::FieldSource>),
}

/// Runs the pipeline once. Input loading happens before the clock starts.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(ExposureReport, PipelineTiming)> {
    cfg.validate()?;
    with_threads(cfg.solve.threads, || run_inner(cfg))
}

struct Inputs {
    model: VoxelModel,
    source: Fluxes,
    f: f64,
}

fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs> {
    let model = match &cfg.phantom {
        PhantomInput::Path(p) => at("load", load_model(p))?,
        PhantomInput::Model(m) => m.clone(),
    };
    let need_f = || Error::InvalidArgument("a frequency is required for synthetic sources".into());
    let source = match &cfg.field {
        FieldInput::File(p) => Fluxes::Samples(at("load", load_samples(p))?),
        FieldInput::Samples(s) => Fluxes::Samples(s.clone()),
        FieldInput::Source {
            kind,
            params,
            lattice,
        } => {
            let src = at("load", source_registry().get(kind).and_then(|f| f(params)))?;
            match lattice {
                Some(lat) => {
                    let f = cfg.frequency_hz.ok_or_else(need_f)?;
                    Fluxes::Samples(at("load", sample_on_lattice(src.as_ref(), *lat, f))?)
                }
                None => Fluxes::Direct(src),
            }
        }
    };
    let f = match (cfg.frequency_hz, &source) {
        (Some(f), _) => f,
        (None, Fluxes::Samples(s)) => s.frequency_hz,
        (None, Fluxes::Direct(_)) => return Err(need_f()),
    };
    Ok(Inputs { model, source, f })
}

fn face_fluxes(inputs: &Inputs, grid: &StaggeredGrid) -> Result<Vec<f64>> {
    at(
        "interpolate",
        match &inputs.source {
            Fluxes::Samples(s) => interpolate_to_faces(s, grid),
            Fluxes::Direct(src) => source_to_faces(src.as_ref(), grid),
        },
    )
}

fn gauge(cfg: &PipelineConfig, b: Vec<f64>, grid: &StaggeredGrid) -> Result<Vec<f64>> {
    at(
        "gauge",
        (|| {
            let b = if cfg.clean {
                divergence_clean_with(&b, grid, cfg.clean_tol, &cfg.solve)?
            } else {
                b
            };
            let tree = (tree_registry().get(&cfg.tree)?)().build(grid);
            gauge_vector_potential(&b, grid, &tree, cfg.clean_tol)
        })(),
    )
}

/// Poisson system of a configuration, built by the same steps as a run.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub model: VoxelModel,
    pub grid: StaggeredGrid,
    pub frequency_hz: f64,
    /// Gauged edge vector potential.
    pub a: Vec<f64>,
    pub system: PoissonSystem,
}

/// Runs the pipeline up to and including Poisson assembly.
pub fn assemble_system(cfg: &PipelineConfig) -> Result<AssembledSystem> {
    cfg.validate()?;
    with_threads(cfg.solve.threads, || {
        let inputs = load_inputs(cfg)?;
        let grid = StaggeredGrid::for_model(&inputs.model);
        let b = face_fluxes(&inputs, &grid)?;
        let a = gauge(cfg, b, &grid)?;
        let system = at(
            "assemble",
            assemble_poisson_with(&inputs.model, &grid, &a, inputs.f, &cfg.assembly),
        )?;
        Ok(AssembledSystem {
            model: inputs.model,
            grid,
            frequency_hz: inputs.f,
            a,
            system,
        })
    })
}

fn run_inner(cfg: &PipelineConfig) -> Result<(ExposureReport, PipelineTiming)> {
    let inputs = load_inputs(cfg)?;
    let grid = StaggeredGrid::for_model(&inputs.model);
    let mut t = PipelineTiming {
        budget_s: cfg.latency_budget_s,
        ..Default::default()
    };
    let b = timed(&mut t.interpolate, || face_fluxes(&inputs, &grid))?;
    let a = timed(&mut t.gauge, || gauge(cfg, b, &grid))?;
    let Inputs { model, f, .. } = inputs;

    let mut setup_seconds = 0.0;
    let (system, precond) = timed(&mut t.assemble, || {
        at(
            "assemble",
            (|| {
                let system = assemble_poisson_with(&model, &grid, &a, f, &cfg.assembly)?;
                let s = Instant::now();
                let precond = build_preconditioner(&system.matrix, &cfg.solve)?;
                setup_seconds = s.elapsed().as_secs_f64();
                Ok((system, precond))
            })(),
        )
    })?;

    let (psi, mut solve_report) = timed(&mut t.solve, || {
        at(
            "solve",
            (|| {
                let (x, report) =
                    fgmres_solve(&system.matrix, &system.rhs, precond.as_ref(), &cfg.solve)?;
                if !report.converged {
                    return Err(Error::NotConverged {
                        iterations: report.iterations,
                        residual: report.rel_residual,
                    });
                }
                Ok((x, report))
            })(),
        )
    })?;
    solve_report.setup_seconds = setup_seconds;
    drop(precond);

    let field = timed(&mut t.efield, || {
        at(
            "efield",
            voxel_field_from_potentials(&model, &grid, &system, &a, &psi, f),
        )
    })?;

    let report = timed(&mut t.report, || {
        at(
            "report",
            (|| {
                let r = ExposureReport::new(
                    &model,
                    f,
                    field,
                    cfg.rms,
                    system.n(),
                    cfg.solve.rel_tol,
                    solve_report,
                )?;
                if let Some(p) = &cfg.out_report {
                    write_report(p, &r)?;
                }
                if let Some(p) = &cfg.out_field {
                    write_field_dump(p, &model, &r)?;
                }
                Ok(r)
            })(),
        )
    })?;

    t.total = t.steps().iter().map(|(_, s)| s).sum();
    t.budget_met = t.total <= t.budget_s;
    log::debug!(target: "spfd::pipeline", "timing\n{}", t.table());
    Ok((report, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_model::{make_phantom, PhantomParams};

    fn sphere(n: usize, radius: f64) -> VoxelModel {
        let p = PhantomParams {
            radius,
            kappas: vec![0.2],
            ..Default::default()
        };
        make_phantom("sphere", [n; 3], [0.002; 3], &p).unwrap()
    }

    fn cfg(model: VoxelModel, b: [f64; 3]) -> PipelineConfig {
        let mut c = PipelineConfig::new(PhantomInput::Model(model), FieldInput::uniform(b));
        c.frequency_hz = Some(85e3);
        c
    }

    #[test]
    fn sphere_smoke_run() {
        let (r, t) = run_pipeline(&cfg(sphere(16, 0.012), [0.0, 0.0, 1e-6])).unwrap();
        assert!(r.percentile99 > 0.0 && r.percentile99 <= r.max);
        assert!(r.solve.converged && r.solve.rel_residual <= 1e-12);
        assert_eq!(
            r.voxel_field.len(),
            sphere(16, 0.012).conductive_voxel_count(85e3).unwrap()
        );
        let sum: f64 = t.steps().iter().map(|(_, s)| s).sum();
        assert!((t.total - sum).abs() < 1e-3);
        assert_eq!(t.budget_met, t.total <= 5.0);
    }

    #[test]
    fn empty_phantom_fails_in_assemble() {
        let err = run_pipeline(&cfg(sphere(4, 0.0), [0.0, 0.0, 1e-6])).unwrap_err();
        assert_eq!(err.step(), Some("assemble"));
        assert!(
            matches!(err, Error::Step { ref source, .. } if matches!(**source, Error::EmptySystem))
        );
    }

    #[test]
    fn zero_field_gives_zero_report() {
        let (r, t) = run_pipeline(&cfg(sphere(10, 0.007), [0.0; 3])).unwrap();
        assert_eq!(r.percentile99, 0.0);
        assert!(t.budget_met);
    }

    #[test]
    fn field_scales_linearly_and_runs_are_reproducible() {
        let mut c = cfg(sphere(12, 0.009), [2e-7, -1e-7, 1e-6]);
        c.solve.threads = Some(1);
        let (r1, _) = run_pipeline(&c).unwrap();
        let (r1b, _) = run_pipeline(&c).unwrap();
        assert_eq!(r1.voxel_field, r1b.voxel_field);
        c.field = FieldInput::uniform([6e-7, -3e-7, 3e-6]);
        let (r3, _) = run_pipeline(&c).unwrap();
        for (x, y) in r1.voxel_field.iter().zip(&r3.voxel_field) {
            assert!((3.0 * x - y).abs() <= 1e-10 * y.abs().max(r3.max));
        }
        assert!((3.0 * r1.percentile99 - r3.percentile99).abs() <= 1e-10 * r3.percentile99);
    }

    #[test]
    fn missing_phantom_names_the_file() {
        let c = PipelineConfig::new(
            PhantomInput::Path("/nonexistent/p.vox".into()),
            FieldInput::uniform([0.0; 3]),
        );
        let err = run_pipeline(&c).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/p.vox"), "{err}");
    }

    #[test]
    fn frequency_is_required_for_sources() {
        let c = PipelineConfig::new(
            PhantomInput::Model(sphere(4, 0.003)),
            FieldInput::uniform([0.0; 3]),
        );
        assert!(matches!(run_pipeline(&c), Err(Error::InvalidArgument(_))));
    }
}
