//! Induced field reconstruction and exposure statistics.
//!
//! Edge voltages are reported as real amplitudes `ω·(â + G·Ψ)`; the `−j`
//! factor is a quarter-period phase shift and does not affect magnitudes.

mod output;

use rayon::prelude::*;

pub use output::{
    field_dump_bytes, parse_field_dump, read_field_dump, report_to_string, write_field_dump,
    write_report,
};

use crate::error::{Error, Result};
use crate::fit::{apply_gradient, PoissonSystem, StaggeredGrid};
use crate::linsolve::SolveReport;
use crate::voxel_model::VoxelModel;

/// `ω·(â + G·Ψ)` per edge, with Ψ expanded to all nodes (zero off the
/// reduced space).
pub fn edge_voltages(
    a: &[f64],
    psi_reduced: &[f64],
    system: &PoissonSystem,
    grid: &StaggeredGrid,
    omega: f64,
) -> Result<Vec<f64>> {
    if a.len() != grid.num_edges() {
        return Err(Error::DimensionMismatch(format!(
            "vector potential has {} entries for {} edges",
            a.len(),
            grid.num_edges()
        )));
    }
    let psi = system.dofs.expand(psi_reduced)?;
    let g = apply_gradient(grid, &psi)?;
    Ok(a.par_iter()
        .zip(g.par_iter())
        .map(|(x, y)| omega * (x + y))
        .collect())
}

/// Nodal |E|: per axis, the mean of `ê/L` over incident edges with positive
/// conductance.
pub fn node_field_strength(
    voltages: &[f64],
    grid: &StaggeredGrid,
    conductances: &[f64],
) -> Result<Vec<f64>> {
    if voltages.len() != grid.num_edges() || conductances.len() != grid.num_edges() {
        return Err(Error::DimensionMismatch(
            "edge vectors do not match grid".into(),
        ));
    }
    let nd = grid.node_dims();
    let len = [0, 1, 2].map(|d| grid.edge_length(d));
    Ok((0..grid.num_nodes())
        .into_par_iter()
        .map(|n| {
            let c = grid.node_coords(n);
            let mut sq = 0.0;
            for d in 0..3 {
                let mut sum = 0.0;
                let mut count = 0u32;
                let mut visit = |e: usize| {
                    if conductances[e] > 0.0 {
                        sum += voltages[e] / len[d];
                        count += 1;
                    }
                };
                if c[d] > 0 {
                    let mut q = c;
                    q[d] -= 1;
                    visit(grid.edge(d, q[0], q[1], q[2]));
                }
                if c[d] + 1 < nd[d] {
                    visit(grid.edge(d, c[0], c[1], c[2]));
                }
                if count > 0 {
                    let ed = sum / count as f64;
                    sq += ed * ed;
                }
            }
            sq.sqrt()
        })
        .collect())
}

/// Edge voltages, nodal strength and voxel averages in one pass, at
/// angular frequency `2πf`.
pub fn voxel_field_from_potentials(
    model: &VoxelModel,
    grid: &StaggeredGrid,
    system: &PoissonSystem,
    a: &[f64],
    psi_reduced: &[f64],
    f: f64,
) -> Result<VoxelField> {
    let e = edge_voltages(a, psi_reduced, system, grid, 2.0 * std::f64::consts::PI * f)?;
    let nodes = node_field_strength(&e, grid, &system.conductances)?;
    voxel_average(&nodes, grid, &model.kappa_field(f)?)
}

/// Voxel-averaged field over conductive voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelField {
    /// Linear voxel indices, ascending.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// Mean of the 8 corner values for every voxel with `κ > 0`.
pub fn voxel_average(
    node_values: &[f64],
    grid: &StaggeredGrid,
    kappa: &[f64],
) -> Result<VoxelField> {
    if node_values.len() != grid.num_nodes() || kappa.len() != grid.num_cells() {
        return Err(Error::DimensionMismatch(
            "nodal or voxel vector does not match grid".into(),
        ));
    }
    let indices: Vec<usize> = (0..grid.num_cells()).filter(|&c| kappa[c] > 0.0).collect();
    let values = indices
        .par_iter()
        .map(|&c| {
            grid.cell_nodes(c)
                .iter()
                .map(|&n| node_values[n])
                .sum::<f64>()
                / 8.0
        })
        .collect();
    Ok(VoxelField { indices, values })
}

/// Nearest-rank 99th percentile: the sorted element at zero-based index
/// `ceil(0.99·n) − 1`.
pub fn percentile99(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "percentile of an empty array".into(),
        ));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(
            "percentile input contains NaN".into(),
        ));
    }
    let n = values.len();
    let rank = (99 * n).div_ceil(100) - 1;
    let mut buf = values.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(rank, f64::total_cmp);
    Ok(*v)
}

/// Rescales a field computed at `f_prime` to frequency `f`:
/// `E·(f/f′)·(κ(f′)/κ(f))`.
pub fn scale_reference_field(
    e: f64,
    f: f64,
    f_prime: f64,
    kappa_f: f64,
    kappa_fprime: f64,
) -> Result<f64> {
    Ok(e * reference_scale_factor(f, f_prime, kappa_f, kappa_fprime)?)
}

pub fn scale_reference_fields(
    e: &mut [f64],
    f: f64,
    f_prime: f64,
    kappa_f: f64,
    kappa_fprime: f64,
) -> Result<()> {
    let s = reference_scale_factor(f, f_prime, kappa_f, kappa_fprime)?;
    e.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

fn reference_scale_factor(f: f64, f_prime: f64, kappa_f: f64, kappa_fprime: f64) -> Result<f64> {
    for (name, v) in [
        ("f", f),
        ("f'", f_prime),
        ("kappa(f)", kappa_f),
        ("kappa(f')", kappa_fprime),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} = {v} must be > 0")));
        }
    }
    Ok((f / f_prime) * (kappa_fprime / kappa_f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TissueStats {
    pub id: u16,
    pub name: String,
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    pub p99: f64,
}

#[derive(Debug, Clone)]
pub struct ExposureReport {
    pub frequency_hz: f64,
    pub voxel_indices: Vec<usize>,
    /// Voxel-averaged |E| in V/m, aligned with `voxel_indices`.
    pub voxel_field: Vec<f64>,
    pub percentile99: f64,
    pub max: f64,
    pub tissues: Vec<TissueStats>,
    /// Values are RMS (amplitude/√2) rather than peak amplitudes.
    pub rms: bool,
    pub dofs: usize,
    pub rel_tol: f64,
    pub solve: SolveReport,
}

impl ExposureReport {
    /// Gathers statistics over a voxel field; `rms` divides every value by √2.
    pub fn new(
        model: &VoxelModel,
        frequency_hz: f64,
        mut field: VoxelField,
        rms: bool,
        dofs: usize,
        rel_tol: f64,
        solve: SolveReport,
    ) -> Result<Self> {
        if rms {
            field
                .values
                .iter_mut()
                .for_each(|v| *v /= std::f64::consts::SQRT_2);
        }
        let p99 = percentile99(&field.values)?;
        let max = field.values.iter().fold(0.0f64, |m, &v| m.max(v));
        let ids = model.tissue_ids();
        let mut per: std::collections::BTreeMap<u16, Vec<f64>> = Default::default();
        for (&v, &x) in field.indices.iter().zip(&field.values) {
            per.entry(ids[v]).or_default().push(x);
        }
        let tissues = per
            .into_iter()
            .map(|(id, vals)| {
                Ok(TissueStats {
                    id,
                    name: model.tissue_table()[&id].name.clone(),
                    count: vals.len(),
                    mean: vals.iter().sum::<f64>() / vals.len() as f64,
                    max: vals.iter().fold(0.0f64, |m, &v| m.max(v)),
                    p99: percentile99(&vals)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            frequency_hz,
            voxel_indices: field.indices,
            voxel_field: field.values,
            percentile99: p99,
            max,
            tissues,
            rms,
            dofs,
            rel_tol,
            solve,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCheck {
    pub pass: bool,
    /// `limit / p99`; infinite when p99 is zero.
    pub margin: f64,
}

/// Passes iff `p99 ≤ limit` (inclusive).
pub fn check_limits(report: &ExposureReport, limit: f64) -> Result<LimitCheck> {
    check_p99(report.percentile99, limit)
}

pub fn check_p99(p99: f64, limit: f64) -> Result<LimitCheck> {
    if !(limit > 0.0) {
        return Err(Error::InvalidArgument(format!("limit {limit} must be > 0")));
    }
    Ok(LimitCheck {
        pass: p99 <= limit,
        margin: if p99 == 0.0 {
            f64::INFINITY
        } else {
            limit / p99
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{assemble_poisson, edge_conductances};
    use crate::linsolve::{solve, SolveConfig};
    use crate::voxel_model::{make_phantom, PhantomParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn block(n: usize) -> (VoxelModel, StaggeredGrid) {
        let p = PhantomParams {
            kappas: vec![0.2],
            ..Default::default()
        };
        let m = make_phantom("block", [n; 3], [0.002; 3], &p).unwrap();
        let g = StaggeredGrid::for_model(&m);
        (m, g)
    }

    #[test]
    fn zero_potentials_give_zero_voltages() {
        let (m, g) = block(3);
        let a = vec![0.0; g.num_edges()];
        let sys = assemble_poisson(&m, &g, &a, 1e3).unwrap();
        let e = edge_voltages(&a, &vec![0.0; sys.n()], &sys, &g, 5.0).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_gradient_excitation_induces_no_field() {
        let (m, g) = block(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let psi: Vec<f64> = (0..g.num_nodes())
            .map(|_| rng.gen_range(-1e-6..1e-6))
            .collect();
        let a: Vec<f64> = apply_gradient(&g, &psi)
            .unwrap()
            .iter()
            .map(|v| -v)
            .collect();
        let sys = assemble_poisson(&m, &g, &a, 1e3).unwrap();
        let (x, rep) = solve(&sys.matrix, &sys.rhs, &SolveConfig::default()).unwrap();
        assert!(rep.converged);
        let omega = 2.0 * std::f64::consts::PI * 1e3;
        let e = edge_voltages(&a, &x, &sys, &g, omega).unwrap();
        let an = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let en = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(en <= 1e-10 * omega * an, "{en} vs {}", omega * an);

        let e2 = edge_voltages(&a, &x, &sys, &g, 2.0 * omega).unwrap();
        for (u, v) in e.iter().zip(&e2) {
            assert_eq!(2.0 * u, *v);
        }
    }

    #[test]
    fn node_strength_cases() {
        let (m, g) = block(4);
        let cond = edge_conductances(&m, &g, 1e3).unwrap();
        let c = 0.37;
        let v: Vec<f64> = (0..g.num_edges())
            .map(|e| {
                if g.edge_coords(e).0 == 0 {
                    c * g.edge_length(0)
                } else {
                    0.0
                }
            })
            .collect();
        let ne = node_field_strength(&v, &g, &cond).unwrap();
        for n in 0..g.num_nodes() {
            assert!((ne[n] - c).abs() <= 1e-12 * c);
        }

        let mut v = vec![0.0; g.num_edges()];
        let e0 = g.edge(0, 0, 0, 0);
        v[e0] = 1.5;
        let ne = node_field_strength(&v, &g, &cond).unwrap();
        assert_eq!(ne[g.node(0, 0, 0)], 1.5 / g.edge_length(0));
        assert_eq!(ne[g.node(1, 0, 0)], 0.5 * 1.5 / g.edge_length(0));

        let mut cond0 = cond.clone();
        cond0[g.edge(0, 0, 0, 0)] = 0.0;
        let ne = node_field_strength(&v, &g, &cond0).unwrap();
        assert_eq!(ne[g.node(0, 0, 0)], 0.0);
    }

    #[test]
    fn voxel_average_cases() {
        let (m, g) = block(3);
        let kappa = m.kappa_field(1e3).unwrap();
        let vf = voxel_average(&vec![2.5; g.num_nodes()], &g, &kappa).unwrap();
        assert_eq!(vf.indices.len(), 27);
        assert!(vf.values.iter().all(|&v| v == 2.5));

        let mut one = vec![0.0; g.num_nodes()];
        one[g.node(0, 0, 0)] = 4.0;
        assert_eq!(voxel_average(&one, &g, &kappa).unwrap().values[0], 0.5);

        let alpha = 3.0;
        let lin: Vec<f64> = (0..g.num_nodes())
            .map(|n| alpha * g.node_position(n)[0])
            .collect();
        let vf = voxel_average(&lin, &g, &kappa).unwrap();
        for (&c, &v) in vf.indices.iter().zip(&vf.values) {
            assert!((v - alpha * g.cell_center(c)[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn percentile_cases() {
        let v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(percentile99(&v).unwrap(), 99.0);
        assert_eq!(percentile99(&[7.0; 13]).unwrap(), 7.0);
        assert_eq!(percentile99(&[3.5]).unwrap(), 3.5);
        assert!(percentile99(&[]).is_err());
        assert!(percentile99(&[1.0, f64::NAN]).is_err());
        let v: Vec<f64> = (1..=101).map(f64::from).collect();
        assert_eq!(percentile99(&v).unwrap(), 100.0);
    }

    #[test]
    fn reference_field_scaling() {
        assert_eq!(scale_reference_field(2.0, 1e3, 1e3, 0.1, 0.1).unwrap(), 2.0);
        assert_eq!(
            scale_reference_field(1.0, 85e3, 5e6, 0.3, 0.3).unwrap(),
            85e3 / 5e6
        );
        assert_eq!(
            scale_reference_field(1.0, 85e3, 5e6, 0.3, 0.3).unwrap(),
            0.017
        );
        let a = scale_reference_field(1.0, 2e3, 1e3, 0.1, 0.2).unwrap();
        let b = scale_reference_field(1.0, 2e3, 1e3, 0.2, 0.2).unwrap();
        assert_eq!(a, 2.0 * b);
        assert!(scale_reference_field(1.0, 1e3, 1e3, 0.0, 0.1).is_err());
        assert!(scale_reference_field(1.0, -1.0, 1e3, 0.1, 0.1).is_err());
        let mut arr = [1.0, 2.0];
        scale_reference_fields(&mut arr, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(arr, [2.0, 4.0]);
    }

    #[test]
    fn limit_checks() {
        let c = check_p99(0.0, 1.0).unwrap();
        assert!(c.pass && c.margin.is_infinite());
        assert_eq!(
            check_p99(2.0, 2.0).unwrap(),
            LimitCheck {
                pass: true,
                margin: 1.0
            }
        );
        assert_eq!(
            check_p99(4.0, 2.0).unwrap(),
            LimitCheck {
                pass: false,
                margin: 0.5
            }
        );
        assert!(check_p99(1.0, 0.0).is_err());
    }

    #[test]
    fn report_statistics() {
        let p = PhantomParams {
            kappas: vec![0.1, 0.2],
            ..Default::default()
        };
        let m = make_phantom("layered-block", [2, 2, 2], [0.002; 3], &p).unwrap();
        let field = VoxelField {
            indices: (0..8).collect(),
            values: (1..=8).map(f64::from).collect(),
        };
        let r = ExposureReport::new(
            &m,
            1e3,
            field.clone(),
            false,
            10,
            1e-12,
            SolveReport::default(),
        )
        .unwrap();
        assert_eq!((r.percentile99, r.max), (8.0, 8.0));
        assert_eq!(r.tissues.len(), 2);
        assert_eq!(
            (r.tissues[0].count, r.tissues[0].mean, r.tissues[0].max),
            (4, 2.5, 4.0)
        );
        assert_eq!(r.tissues[1].name, "layer2");
        let rms =
            ExposureReport::new(&m, 1e3, field, true, 10, 1e-12, SolveReport::default()).unwrap();
        assert!((rms.max - 8.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn percentile_matches_full_sort(v in proptest::collection::vec(0.0f64..1e3, 1..2000)) {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            let rank = (1..=v.len()).find(|r| 100 * r >= 99 * v.len()).unwrap();
            let p = percentile99(&v).unwrap();
            prop_assert_eq!(p, s[rank - 1]);
            prop_assert!(p <= s[v.len() - 1]);
        }
    }
}
