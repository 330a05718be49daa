use std::path::Path;
use std::process::{Command, Output};

use spfd::dosimetry::{field_dump_bytes, read_field_dump, ExposureReport, VoxelField};
use spfd::fit::matrix_market::read_matrix;
use spfd::linsolve::SolveReport;
use spfd::voxel_model::{load_model, make_phantom, PhantomParams};

fn spfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spfd"))
        .args(args)
        .env_remove("SPFD_THREADS")
        .output()
        .expect("spawn spfd")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_sphere(dir: &Path) -> String {
    let p = dir.join("s.vox");
    let o = spfd(&[
        "phantom",
        "--kind",
        "sphere",
        "--dims",
        "16",
        "16",
        "16",
        "--spacing-mm",
        "2",
        "--radius-mm",
        "12",
        "--kappa",
        "0.2",
        "--out",
        s(&p),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    s(&p).to_string()
}

#[test]
fn phantom_round_trips_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.vox");
    let o = spfd(&[
        "phantom",
        "--kind",
        "sphere",
        "--dims",
        "64",
        "64",
        "64",
        "--spacing-mm",
        "2",
        "--radius-mm",
        "50",
        "--kappa",
        "0.2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let m = load_model(&out).unwrap();
    let params = PhantomParams {
        radius: 0.05,
        kappas: vec![0.2],
        ..Default::default()
    };
    let direct = make_phantom("sphere", [64; 3], [0.002; 3], &params).unwrap();
    assert_eq!(m.tissue_ids(), direct.tissue_ids());
    assert_eq!(m.dims(), [64; 3]);
}

#[test]
fn phantom_usage_and_geometry_errors() {
    let o = spfd(&[
        "phantom",
        "--kind",
        "sphere",
        "--dims",
        "4",
        "4",
        "4",
        "--spacing-mm",
        "2",
        "--kappa",
        "0.2",
    ]);
    assert_eq!(code(&o), 2);

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("e.vox");
    let o = spfd(&[
        "phantom",
        "--kind",
        "sphere",
        "--dims",
        "4",
        "4",
        "4",
        "--spacing-mm",
        "2",
        "--radius-mm",
        "0",
        "--kappa",
        "0.2",
        "--out",
        s(&empty),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        load_model(&empty)
            .unwrap()
            .conductive_voxel_count(1e3)
            .unwrap(),
        0
    );

    let o = spfd(&[
        "phantom",
        "--kind",
        "sphere",
        "--dims",
        "4",
        "4",
        "4",
        "--spacing-mm",
        "2",
        "--radius-mm",
        "30",
        "--kappa",
        "0.2",
        "--out",
        s(&dir.path().join("big.vox")),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn run_writes_report_and_echoes_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let phantom = small_sphere(dir.path());
    let report = dir.path().join("r.txt");
    let dump = dir.path().join("f.bin");
    let o = spfd(&[
        "run",
        "--phantom",
        &phantom,
        "--uniform",
        "1e-6",
        "--freq-hz",
        "85000",
        "--rel-tol",
        "1e-12",
        "--out-report",
        s(&report),
        "--out-field",
        s(&dump),
        "--threads",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.lines().any(|l| l.starts_with("p99_vpm = ")));
    assert!(text.lines().any(|l| l == "rel_tol = 1e-12"));
    assert!(stdout(&o).contains("total"));
    let (h, v) = read_field_dump(&dump).unwrap();
    assert_eq!(h.dims, [16; 3]);
    assert!(v.iter().any(|x| x.is_nan()) && v.iter().any(|x| *x > 0.0));
}

#[test]
fn run_with_missing_phantom_fails_at_runtime() {
    let o = spfd(&[
        "run",
        "--phantom",
        "/nonexistent/ph.vox",
        "--uniform",
        "1e-6",
        "--freq-hz",
        "85000",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/ph.vox"));
}

#[test]
fn run_usage_errors() {
    let o = spfd(&["run", "--phantom", "x.vox", "--freq-hz", "85000"]);
    assert_eq!(code(&o), 2);
    let o = spfd(&[
        "run",
        "--phantom",
        "x.vox",
        "--uniform",
        "1e-6",
        "--coil",
        "--freq-hz",
        "1",
    ]);
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_spfd"))
        .args(["run", "--phantom", "x.vox", "--uniform", "1e-6"])
        .env("SPFD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn field_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let phantom = small_sphere(dir.path());
    let field = dir.path().join("b.txt");
    let o = spfd(&[
        "field",
        "--coil",
        "--coil-radius-mm",
        "40",
        "--coil-center-mm",
        "16",
        "16",
        "-30",
        "--lattice-dims",
        "5",
        "5",
        "5",
        "--lattice-origin-mm",
        "0",
        "0",
        "0",
        "--lattice-spacing-mm",
        "8",
        "--freq-hz",
        "85000",
        "--out",
        s(&field),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = spfd(&["run", "--phantom", &phantom, "--field", s(&field)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_csv_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let phantom = small_sphere(dir.path());
    let iterations = |csv: &Path| {
        let o = spfd(&[
            "bench",
            "--phantom",
            &phantom,
            "--uniform",
            "1e-6",
            "--freq-hz",
            "85000",
            "--runs",
            "5",
            "--csv",
            s(csv),
        ]);
        assert_eq!(code(&o), 0);
        stdout(&o)
            .lines()
            .find(|l| l.starts_with("iterations = "))
            .unwrap()
            .to_string()
    };
    let csv = dir.path().join("t.csv");
    let first = iterations(&csv);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,mean_s,stddev_s,min_s,max_s");
    assert_eq!(lines.len(), 8);
    let steps: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        steps,
        [
            "interpolate",
            "gauge",
            "assemble",
            "solve",
            "efield",
            "report",
            "total"
        ]
    );
    assert_eq!(first, iterations(&csv));

    let o = spfd(&[
        "bench",
        "--phantom",
        &phantom,
        "--uniform",
        "1e-6",
        "--freq-hz",
        "85000",
        "--runs",
        "1",
    ]);
    assert_eq!(code(&o), 2);
}

fn constant_block_dump(dir: &Path) -> std::path::PathBuf {
    let params = PhantomParams {
        half_extent: Some([0.004, 0.003, 0.005]),
        kappas: vec![0.3],
        ..Default::default()
    };
    let m = make_phantom("block", [6, 5, 7], [0.002; 3], &params).unwrap();
    let indices: Vec<usize> = (0..m.voxel_count())
        .filter(|&v| m.tissue_ids()[v] != 0)
        .collect();
    let values = vec![0.25; indices.len()];
    let r = ExposureReport::new(
        &m,
        1e3,
        VoxelField { indices, values },
        false,
        0,
        1e-12,
        SolveReport::default(),
    )
    .unwrap();
    let p = dir.join("c.bin");
    std::fs::write(&p, field_dump_bytes(&m, &r)).unwrap();
    p
}

fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .map(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<f64>().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn slice_of_constant_block_has_equal_rows() {
    let dir = tempfile::tempdir().unwrap();
    let dump = constant_block_dump(dir.path());
    let o = spfd(&[
        "report-slice",
        "--dump",
        s(&dump),
        "--plane",
        "z",
        "--index",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("nan"));
    let rows: Vec<&str> = text.lines().filter(|l| l.contains("2.5e-1")).collect();
    assert!(rows.len() >= 2);
    assert!(rows.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(parse_rows(&text).len(), 5);
    assert!(parse_rows(&text).iter().all(|r| r.len() == 6));
}

#[test]
fn slice_index_out_of_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let dump = constant_block_dump(dir.path());
    let o = spfd(&[
        "report-slice",
        "--dump",
        s(&dump),
        "--plane",
        "x",
        "--index",
        "6",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn slices_conserve_the_dump_sum() {
    let dir = tempfile::tempdir().unwrap();
    let phantom = small_sphere(dir.path());
    let dump = dir.path().join("f.bin");
    let o = spfd(&[
        "run",
        "--phantom",
        &phantom,
        "--uniform",
        "1e-6",
        "--freq-hz",
        "85000",
        "--out-field",
        s(&dump),
    ]);
    assert_eq!(code(&o), 0);
    let (_, v) = read_field_dump(&dump).unwrap();
    let total: f64 = v.iter().filter(|x| !x.is_nan()).sum();
    for plane in ["x", "y", "z"] {
        let mut sum = 0.0;
        for k in 0..16 {
            let o = spfd(&[
                "report-slice",
                "--dump",
                s(&dump),
                "--plane",
                plane,
                "--index",
                &k.to_string(),
            ]);
            assert_eq!(code(&o), 0);
            sum += parse_rows(&stdout(&o))
                .iter()
                .flatten()
                .filter(|x| !x.is_nan())
                .sum::<f64>();
        }
        assert!(
            (sum - total).abs() <= 1e-12 * total,
            "{plane}: {sum} vs {total}"
        );
    }
}

#[test]
fn mm_export_writes_the_reduced_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let phantom = small_sphere(dir.path());
    let a = dir.path().join("A.mtx");
    let b = dir.path().join("b.mtx");
    let o = spfd(&[
        "mm-export",
        "--phantom",
        &phantom,
        "--uniform",
        "1e-6",
        "--freq-hz",
        "85000",
        "--out",
        s(&a),
        "--out-rhs",
        s(&b),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_matrix(&a).unwrap();
    assert_eq!(m.nrows(), m.ncols());
    assert!(m.is_symmetric(0.0));
    let rhs = spfd::fit::matrix_market::read_vector(&b).unwrap();
    assert_eq!(rhs.len(), m.nrows());
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "phantom",
        "field",
        "run",
        "bench",
        "report-slice",
        "mm-export",
    ] {
        let o = spfd(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        assert!(stdout(&o).contains("Usage"));
    }
    assert_eq!(code(&spfd(&["--help"])), 0);
    assert_eq!(code(&spfd(&[])), 2);
}
