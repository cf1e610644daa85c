//! Relative errors against interpolated exact solutions, convergence
//! slopes, sweeps and result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::driver::{run_with, RunConfig, StepRecord, TimeState};
use crate::fem::FEField;
use crate::mesh::SimplexMesh;
use crate::problems::{FlowProblem, ManufacturedProblem};
use crate::{Error, Result};

/// Running sums for the relative errors
///
/// ```text
/// Er1 = (‖u_h − Π_h u‖_{l²(H¹)} + ‖p_h − Π_h p‖_{l²(L²)}) / (‖Π_h u‖_{l²(H¹)} + ‖Π_h p‖_{l²(L²)})
/// Er2 = ‖u_h − Π_h u‖_{l∞(L²)} / ‖Π_h u‖_{l∞(L²)}
/// ```
///
/// where `‖g‖_{l²(X)} = (Δt Σ_{n=1}^{N_T} ‖gⁿ‖_X²)^{1/2}` and the `l∞` maximum
/// runs over `n = 0..N_T` (or `1..N_T`).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorAccumulator {
    dt: f64,
    include_initial: bool,
    velocity_h1_error: f64,
    pressure_l2_error: f64,
    velocity_h1_exact: f64,
    pressure_l2_exact: f64,
    velocity_l2_error_max: f64,
    velocity_l2_exact_max: f64,
    steps: usize,
}

/// Final relative errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeErrors {
    pub er1: f64,
    pub er2: f64,
}

impl ErrorAccumulator {
    pub fn new(dt: f64, include_initial: bool) -> Self {
        ErrorAccumulator {
            dt,
            include_initial,
            ..Default::default()
        }
    }

    /// Number of time levels `n ≥ 1` accumulated.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Adds time level `state.n` given the interpolated exact fields.
    pub fn accumulate_fields(
        &mut self,
        mesh: &SimplexMesh,
        state: &TimeState,
        exact_u: &FEField,
        exact_p: &FEField,
    ) {
        let eu = state.velocity.sub(exact_u).norms(mesh);
        let xu = exact_u.norms(mesh);
        if state.n > 0 || self.include_initial {
            self.velocity_l2_error_max = self.velocity_l2_error_max.max(eu.l2);
            self.velocity_l2_exact_max = self.velocity_l2_exact_max.max(xu.l2);
        }
        if state.n == 0 {
            return;
        }
        let ep = state.pressure.sub(exact_p).norms(mesh);
        let xp = exact_p.norms(mesh);
        self.velocity_h1_error += self.dt * eu.h1().powi(2);
        self.pressure_l2_error += self.dt * ep.l2.powi(2);
        self.velocity_h1_exact += self.dt * xu.h1().powi(2);
        self.pressure_l2_exact += self.dt * xp.l2.powi(2);
        self.steps += 1;
    }

    /// Adds time level `state.n`, interpolating the exact solution at `t^n`.
    pub fn accumulate(&mut self, mesh: &SimplexMesh, state: &TimeState, problem: &dyn FlowProblem) {
        let t = state.t;
        let u = FEField::interpolate(mesh, mesh.dim(), |x| problem.velocity(x, t));
        let p = FEField::interpolate_scalar(mesh, |x| problem.pressure(x, t));
        self.accumulate_fields(mesh, state, &u, &p);
    }

    /// `(‖u_h − Π_h u‖_{l²(H¹)}, ‖p_h − Π_h p‖_{l²(L²)}, ‖u_h − Π_h u‖_{l∞(L²)})`.
    pub fn absolute(&self) -> (f64, f64, f64) {
        (
            self.velocity_h1_error.sqrt(),
            self.pressure_l2_error.sqrt(),
            self.velocity_l2_error_max,
        )
    }

    pub fn finish(&self) -> Result<RelativeErrors> {
        if self.steps == 0 {
            return Err(Error::Invalid("no time levels accumulated".into()));
        }
        let den1 = self.velocity_h1_exact.sqrt() + self.pressure_l2_exact.sqrt();
        let den2 = self.velocity_l2_exact_max;
        if den1 <= 0.0 || den2 <= 0.0 {
            return Err(Error::Invalid("exact solution is identically zero".into()));
        }
        let (eu, ep, emax) = self.absolute();
        Ok(RelativeErrors {
            er1: (eu + ep) / den1,
            er2: emax / den2,
        })
    }
}

/// Mesh-dependent pressure seminorm `|q|_h = (Σ_K h_K² ‖∇q‖²_{L²(K)})^{1/2}`.
pub fn pressure_seminorm(mesh: &SimplexMesh, q: &FEField) -> f64 {
    let d = mesh.dim();
    (0..mesh.num_elements())
        .map(|e| {
            let g = q.element_gradient(mesh, e);
            let hk = mesh.diameter(e);
            let g2: f64 = (0..d).map(|i| g[0][i] * g[0][i]).sum();
            hk * hk * g2 * mesh.geometry(e).volume
        })
        .sum::<f64>()
        .sqrt()
}

/// Empirical order `log₂(E_coarse / E_fine)` between meshes `N` and `2N`.
pub fn slope(coarse: f64, fine: f64) -> Result<f64> {
    if !(coarse > 0.0 && fine > 0.0) || !coarse.is_finite() || !fine.is_finite() {
        return Err(Error::Invalid(format!(
            "slope needs positive finite errors, got {coarse} and {fine}"
        )));
    }
    Ok((coarse / fine).log2())
}

/// One completed run.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub config: RunConfig,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub er1: f64,
    pub er2: f64,
    pub wall_s: f64,
    pub minres_iters_avg: f64,
    pub projection_iterations: usize,
    pub records: Vec<StepRecord>,
}

impl ErrorReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.flush()?;
        Ok(())
    }
}

/// Runs one configuration and measures its relative errors.
pub fn run_case(config: &RunConfig) -> Result<ErrorReport> {
    let problem = ManufacturedProblem::by_name(&config.problem_name(), config.nu)?;
    let mut acc = ErrorAccumulator::new(config.dt(), config.include_initial_error);
    let mut final_state = None;
    let summary = run_with(config, &problem, |mesh, state| {
        acc.accumulate(mesh, state, &problem);
        if state.n == config.num_steps() && (config.export_fields.is_some() || config.export_mesh.is_some()) {
            final_state = Some(state.clone());
        }
        Ok(())
    })?;
    let errors = acc.finish()?;

    if config.export_fields.is_some() || config.export_mesh.is_some() {
        let mesh = SimplexMesh::unit(config.dim, config.n)?;
        if let Some(path) = &config.export_mesh {
            mesh.write_vtk(path)?;
        }
        if let (Some(path), Some(state)) = (&config.export_fields, &final_state) {
            let mut values = state.velocity.values().to_vec();
            values.extend_from_slice(state.pressure.values());
            FEField::from_values(&mesh, config.dim + 1, values).write_csv(&mesh, path)?;
        }
    }

    Ok(ErrorReport {
        config: config.clone(),
        h: config.h(),
        dt: summary.dt,
        steps: summary.steps,
        er1: errors.er1,
        er2: errors.er2,
        wall_s: summary.wall_s,
        minres_iters_avg: summary.mean_iterations(),
        projection_iterations: summary.initial_iterations,
        records: summary.records,
    })
}

/// A row of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub nu: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub law: String,
    #[serde(rename = "Er1")]
    pub er1: f64,
    #[serde(rename = "Er1_slope")]
    pub er1_slope: Option<f64>,
    #[serde(rename = "Er2")]
    pub er2: f64,
    #[serde(rename = "Er2_slope")]
    pub er2_slope: Option<f64>,
    pub steps: usize,
    pub wall_s: f64,
    pub minres_iters_avg: f64,
}

pub const CSV_HEADER: &str = "d,nu,N,h,dt,law,Er1,Er1_slope,Er2,Er2_slope,steps,wall_s,minres_iters_avg";

impl SweepRow {
    pub fn from_report(report: &ErrorReport, previous: Option<&SweepRow>) -> Result<Self> {
        let c = &report.config;
        let slopes = match previous {
            Some(p) => (Some(slope(p.er1, report.er1)?), Some(slope(p.er2, report.er2)?)),
            None => (None, None),
        };
        Ok(SweepRow {
            d: c.dim,
            nu: c.nu,
            n: c.n,
            h: report.h,
            dt: report.dt,
            law: c.dt_law.name().to_string(),
            er1: report.er1,
            er1_slope: slopes.0,
            er2: report.er2,
            er2_slope: slopes.1,
            steps: report.steps,
            wall_s: report.wall_s,
            minres_iters_avg: report.minres_iters_avg,
        })
    }

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|s| format!("{s:.4}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:.6e},{},{:.6e},{},{},{:.3},{:.1}",
            self.d,
            self.nu,
            self.n,
            self.h,
            self.dt,
            self.law,
            self.er1,
            opt(self.er1_slope),
            self.er2,
            opt(self.er2_slope),
            self.steps,
            self.wall_s,
            self.minres_iters_avg
        )
    }
}

/// Checks that a mesh list is strictly increasing with each entry twice the
/// previous one.
pub fn validate_n_list(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::Config("empty N list".into()));
    }
    for w in ns.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::Config(format!(
                "N list must double at each entry, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

/// Runs `base` for every `N` in `ns`, calling `on_row` as soon as each row
/// is available so that partial results survive a later failure.
pub fn run_sweep<F>(base: &RunConfig, ns: &[usize], mut on_row: F) -> Result<Vec<SweepRow>>
where
    F: FnMut(&SweepRow) -> Result<()>,
{
    validate_n_list(ns)?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let config = RunConfig { n, ..base.clone() };
        let report = run_case(&config)?;
        let row = SweepRow::from_report(&report, rows.last())?;
        on_row(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Appends sweep rows to a CSV file, writing the header first if the file is
/// new or empty.
pub struct CsvSink {
    file: File,
}

impl CsvSink {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        if file.metadata()?.len() == 0 {
            writeln!(file, "{CSV_HEADER}")?;
        }
        Ok(CsvSink { file })
    }

    pub fn write(&mut self, row: &SweepRow) -> Result<()> {
        writeln!(self.file, "{}", row.csv_line())?;
        self.file.flush()?;
        Ok(())
    }
}
