mod args;

use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{
    BenchArgs, Cli, CoilArgs, Command, FieldArgs, InputArgs, MmExportArgs, PhantomArgs, Plane,
    RunArgs, SliceArgs, TreeKind,
};
use spfd::dosimetry::{check_limits, read_field_dump};
use spfd::field_source::{sample_on_lattice, save_samples, source_registry, Lattice, SourceParams};
use spfd::fit::matrix_market::{write_matrix, write_vector};
use spfd::pipeline::{
    assemble_system, run_benchmark, run_pipeline, FieldInput, PhantomInput, PipelineConfig,
};
use spfd::voxel_model::{make_phantom, save_model, PhantomParams};

fn mm(v: f64) -> f64 {
    v * 1e-3
}

fn triple_mm(v: &[f64]) -> [f64; 3] {
    [mm(v[0]), mm(v[1]), mm(v[2])]
}

/// One value broadcasts to all axes.
fn spacing_mm(v: &[f64]) -> Result<[f64; 3]> {
    match v {
        [s] => Ok([mm(*s); 3]),
        [x, y, z] => Ok([mm(*x), mm(*y), mm(*z)]),
        _ => bail!("spacing needs 1 or 3 values"),
    }
}

fn uniform_b(v: &[f64]) -> Result<[f64; 3]> {
    match v {
        [bz] => Ok([0.0, 0.0, *bz]),
        [bx, by, bz] => Ok([*bx, *by, *bz]),
        _ => bail!("--uniform needs 1 (Bz) or 3 (Bx By Bz) values"),
    }
}

fn coil_params(c: &CoilArgs) -> SourceParams {
    SourceParams {
        center: c
            .coil_center_mm
            .as_deref()
            .map(triple_mm)
            .unwrap_or([0.0; 3]),
        axis: c
            .coil_axis
            .as_deref()
            .map(|a| [a[0], a[1], a[2]])
            .unwrap_or([0.0, 0.0, 1.0]),
        radius: mm(c.coil_radius_mm),
        current: c.coil_current,
        segments: c.coil_segments,
        ..Default::default()
    }
}

fn cmd_phantom(a: &PhantomArgs) -> Result<()> {
    let params = PhantomParams {
        origin: a.origin_mm.as_deref().map(triple_mm).unwrap_or([0.0; 3]),
        center: a.center_mm.as_deref().map(triple_mm),
        radius: mm(a.radius_mm),
        axis: a.axis.parse()?,
        half_length: a.half_length_mm.map(mm),
        half_extent: a.half_extent_mm.as_deref().map(triple_mm),
        kappas: a.kappa.clone(),
    };
    let dims = [a.dims[0], a.dims[1], a.dims[2]];
    let model = make_phantom(&a.kind, dims, spacing_mm(&a.spacing_mm)?, &params)?;
    save_model(&model, &a.out)?;
    println!(
        "wrote {} ({} voxels, {} tissue voxels)",
        a.out.display(),
        model.voxel_count(),
        model.tissue_ids().iter().filter(|&&t| t != 0).count()
    );
    Ok(())
}

fn cmd_field(a: &FieldArgs) -> Result<()> {
    let (kind, params) = match &a.uniform {
        Some(u) => (
            "uniform",
            SourceParams {
                b: uniform_b(u)?,
                ..Default::default()
            },
        ),
        None => ("coil", coil_params(&a.coil_args)),
    };
    let source = (source_registry().get(kind)?)(&params)?;
    let dims = [a.lattice_dims[0], a.lattice_dims[1], a.lattice_dims[2]];
    let lattice = Lattice::new(
        triple_mm(&a.lattice_origin_mm),
        spacing_mm(&a.lattice_spacing_mm)?,
        dims,
    )?;
    let samples = sample_on_lattice(source.as_ref(), lattice, a.freq_hz)?;
    save_samples(&a.out, &samples)?;
    println!("wrote {} ({} samples)", a.out.display(), samples.len());
    Ok(())
}

fn pipeline_config(i: &InputArgs, threads: Option<u64>) -> Result<PipelineConfig> {
    let field = if let Some(p) = &i.source.field {
        FieldInput::File(p.clone())
    } else if let Some(u) = &i.source.uniform {
        FieldInput::uniform(uniform_b(u)?)
    } else {
        FieldInput::Source {
            kind: "coil".into(),
            params: coil_params(&i.coil_args),
            lattice: None,
        }
    };
    let mut cfg = PipelineConfig::new(PhantomInput::Path(i.phantom.clone()), field);
    cfg.frequency_hz = i.freq_hz;
    cfg.solve.rel_tol = i.rel_tol;
    cfg.solve.max_iters = i.max_iters;
    cfg.solve.preconditioner = i.preconditioner.clone();
    cfg.solve.threads = threads.map(|t| t as usize);
    cfg.solve.trace = i.trace;
    cfg.tree = match i.tree {
        TreeKind::Comb => "comb",
        TreeKind::Bfs => "bfs",
    }
    .into();
    cfg.clean = !i.no_clean;
    cfg.clean_tol = i.clean_tol;
    Ok(cfg)
}

fn cmd_run(a: &RunArgs, threads: Option<u64>) -> Result<()> {
    let mut cfg = pipeline_config(&a.input, threads)?;
    cfg.out_report = a.out_report.clone();
    cfg.out_field = a.out_field.clone();
    cfg.rms = a.rms;
    cfg.latency_budget_s = a.budget_s;
    let (report, timing) = run_pipeline(&cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "p99_vpm = {}", report.percentile99);
    let _ = writeln!(out, "max_vpm = {}", report.max);
    let _ = writeln!(out, "n_voxels = {}", report.voxel_field.len());
    let _ = writeln!(out, "dofs = {}", report.dofs);
    let _ = writeln!(
        out,
        "solver: {} iterations, rel_residual {:e}, levels {:?}",
        report.solve.iterations, report.solve.rel_residual, report.solve.level_sizes
    );
    if let Some(limit) = a.limit_vpm {
        let c = check_limits(&report, limit)?;
        let _ = writeln!(
            out,
            "limit {limit} V/m: {} (margin {})",
            if c.pass { "pass" } else { "fail" },
            c.margin
        );
    }
    out.push_str(&timing.table());
    print!("{out}");
    Ok(())
}

fn cmd_bench(a: &BenchArgs, threads: Option<u64>) -> Result<()> {
    let cfg = pipeline_config(&a.input, threads)?;
    let b = run_benchmark(&cfg, a.runs as usize)?;
    print!("{}", b.table());
    println!("iterations = {:?}", b.iterations);
    let csv = b.to_csv();
    match &a.csv {
        Some(p) => std::fs::write(p, csv).map_err(|e| anyhow!("writing {}: {e}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_slice(a: &SliceArgs) -> Result<()> {
    let (header, values) = read_field_dump(&a.dump)?;
    let [nx, ny, nz] = header.dims;
    let (d, extent) = match a.plane {
        Plane::X => (0, nx),
        Plane::Y => (1, ny),
        Plane::Z => (2, nz),
    };
    if a.index >= extent {
        Cli::command()
            .error(
                ErrorKind::ValueValidation,
                format!(
                    "--index {} out of range for plane of extent {extent}",
                    a.index
                ),
            )
            .exit();
    }
    // Rows run over the slower remaining axis, columns over the faster one.
    let (cols, rows) = match d {
        0 => ((1, ny), (2, nz)),
        1 => ((0, nx), (2, nz)),
        _ => ((0, nx), (1, ny)),
    };
    let mut out = String::new();
    for r in 0..rows.1 {
        for c in 0..cols.1 {
            let mut ijk = [0; 3];
            ijk[d] = a.index;
            ijk[rows.0] = r;
            ijk[cols.0] = c;
            let v = values[ijk[0] + nx * (ijk[1] + ny * ijk[2])];
            if c > 0 {
                out.push(' ');
            }
            if v.is_nan() {
                out.push_str("nan");
            } else {
                let _ = write!(out, "{v:e}");
            }
        }
        out.push('\n');
    }
    match &a.out {
        Some(p) => std::fs::write(p, out).map_err(|e| anyhow!("writing {}: {e}", p.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_mm_export(a: &MmExportArgs, threads: Option<u64>) -> Result<()> {
    let cfg = pipeline_config(&a.input, threads)?;
    let s = assemble_system(&cfg)?;
    write_matrix(&s.system.matrix, &a.out)?;
    if let Some(p) = &a.out_rhs {
        write_vector(&s.system.rhs, p)?;
    }
    println!(
        "wrote {} ({} x {}, {} nonzeros)",
        a.out.display(),
        s.system.n(),
        s.system.n(),
        s.system.matrix.nnz()
    );
    Ok(())
}

fn init_logging(trace: bool) {
    let mut b = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if trace {
        b.filter_module("spfd::solver", log::LevelFilter::Info);
    }
    let _ = b.try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let trace = match &cli.command {
        Command::Run(a) => a.input.trace,
        Command::Bench(a) => a.input.trace,
        Command::MmExport(a) => a.input.trace,
        _ => false,
    };
    init_logging(trace);
    let result = match &cli.command {
        Command::Phantom(a) => cmd_phantom(a),
        Command::Field(a) => cmd_field(a),
        Command::Run(a) => cmd_run(a, cli.threads),
        Command::Bench(a) => cmd_bench(a, cli.threads),
        Command::ReportSlice(a) => cmd_slice(a),
        Command::MmExport(a) => cmd_mm_export(a, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
