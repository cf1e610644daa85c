//! Run orchestration: configuration, the Stokes projection used for initial
//! data, and the time loop.

use std::path::PathBuf;
use std::time::Instant;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_rhs, assemble_stokes_rhs, SaddleSystem};
use crate::fem::FEField;
use crate::linsolve::{minres_from, SolveOutcome, SolverConfig};
use crate::mesh::SimplexMesh;
use crate::problems::{FlowProblem, ManufacturedProblem};
use crate::quadrature::QuadratureRule;
use crate::transport::check_cfl;
use crate::{Error, Gradient, Point, Result};

/// Time-step law in terms of the mesh parameter `h = 1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtLaw {
    /// `Δt = γ h`
    Linear,
    /// `Δt = γ h²`
    Quadratic,
}

impl DtLaw {
    pub fn default_gamma(self) -> f64 {
        match self {
            DtLaw::Linear => 4.0,
            DtLaw::Quadratic => 256.0,
        }
    }

    pub fn dt(self, gamma: f64, h: f64) -> f64 {
        match self {
            DtLaw::Linear => gamma * h,
            DtLaw::Quadratic => gamma * h * h,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DtLaw::Linear => "linear",
            DtLaw::Quadratic => "quadratic",
        }
    }
}

impl std::str::FromStr for DtLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(DtLaw::Linear),
            "quadratic" => Ok(DtLaw::Quadratic),
            other => Err(Error::Config(format!("unknown dt law '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dim: usize,
    /// Divisions per side; `h = 1/N`.
    pub n: usize,
    pub nu: f64,
    pub t_end: f64,
    pub dt_law: DtLaw,
    /// Coefficient of the time-step law; the law's default when `None`.
    pub gamma: Option<f64>,
    pub delta0: f64,
    pub solver: SolverConfig,
    /// Problem name; `mms2d` / `mms3d` by default, matching `dim`.
    pub problem: Option<String>,
    /// Warn when `Δt ‖u_h‖_{1,∞}` reaches this value.
    pub cfl_warn: f64,
    /// Abort when `Δt ‖u_h‖_{1,∞}` reaches this value.
    pub cfl_abort: f64,
    /// Include the `n = 0` term in the `l∞(L²)` velocity error.
    pub include_initial_error: bool,
    pub out: Option<PathBuf>,
    pub export_fields: Option<PathBuf>,
    pub export_mesh: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            n: 64,
            nu: 0.1,
            t_end: 1.0,
            dt_law: DtLaw::Linear,
            gamma: None,
            delta0: 1.0,
            solver: SolverConfig {
                tol: 1e-10,
                ..SolverConfig::default()
            },
            problem: None,
            cfl_warn: 0.5,
            cfl_abort: 1.0,
            include_initial_error: true,
            out: None,
            export_fields: None,
            export_mesh: None,
        }
    }
}

impl RunConfig {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| self.dt_law.default_gamma())
    }

    pub fn dt(&self) -> f64 {
        self.dt_law.dt(self.gamma(), self.h())
    }

    /// `N_T = ⌊T/Δt⌋`, tolerant of rounding in `T/Δt` for exact multiples.
    pub fn num_steps(&self) -> usize {
        let ratio = self.t_end / self.dt();
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.floor() as usize
        }
    }

    pub fn problem_name(&self) -> String {
        self.problem
            .clone()
            .unwrap_or_else(|| format!("mms{}d", self.dim))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Dimension(self.dim));
        }
        if self.n < 2 {
            return Err(Error::Divisions(self.n));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("viscosity must be positive, got {}", self.nu));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("final time must be positive, got {}", self.t_end));
        }
        if !(self.gamma() > 0.0 && self.gamma().is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma()));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return bad(format!("delta0 must be positive, got {}", self.delta0));
        }
        if !(0.0 < self.cfl_warn && self.cfl_warn <= self.cfl_abort) {
            return bad(format!(
                "CFL thresholds must satisfy 0 < warn <= abort, got {} and {}",
                self.cfl_warn, self.cfl_abort
            ));
        }
        if self.num_steps() == 0 {
            return bad(format!(
                "final time {} is shorter than one time step {}",
                self.t_end,
                self.dt()
            ));
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// Discrete solution at time level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeState {
    pub n: usize,
    pub t: f64,
    pub velocity: FEField,
    pub pressure: FEField,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    /// `Δt ‖u_h^{n−1}‖_{1,∞}`.
    pub cfl: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Upwind feet clamped back into the domain this step.
    pub clamped: usize,
}

/// Velocity, pressure and solver statistics of a Stokes projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub velocity: FEField,
    pub pressure: FEField,
    pub outcome: SolveOutcome,
}

fn solve(
    system: &SaddleSystem,
    rhs: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
    step: usize,
) -> Result<SolveOutcome> {
    let outcome = minres_from(&system.matrix, rhs, x0, cfg)?;
    if !outcome.converged {
        return Err(Error::NotConverged {
            step,
            residual: outcome.residual,
            iterations: outcome.iterations,
        });
    }
    Ok(outcome)
}

/// Stokes projection `(ŵ_h, r̂_h)` of `(w, r)`: the stabilized Stokes
/// solution whose right-hand side is the continuous form applied to the
/// data. Only `∇w` enters.
pub fn stokes_projection<G, R>(
    mesh: &SimplexMesh,
    nu: f64,
    delta0: f64,
    grad_w: G,
    r: R,
    solver: &SolverConfig,
) -> Result<Projection>
where
    G: Fn(&Point) -> Gradient + Sync,
    R: Fn(&Point) -> f64 + Sync,
{
    let system = SaddleSystem::stokes(mesh, nu, delta0);
    let rule = QuadratureRule::degree5(mesh.dim())?;
    let rhs = assemble_stokes_rhs(mesh, &system.dofs, &rule, nu, grad_w, r);
    let outcome = solve(&system, &rhs, None, solver, 0)?;
    let (velocity, pressure) = system.dofs.split(mesh, &outcome.solution);
    Ok(Projection {
        velocity,
        pressure,
        outcome,
    })
}

/// A run in progress: the mesh, the constant system matrix and the current
/// state.
pub struct Simulation<'p> {
    config: RunConfig,
    problem: &'p dyn FlowProblem,
    mesh: SimplexMesh,
    system: SaddleSystem,
    rule: QuadratureRule,
    dt: f64,
    state: TimeState,
    /// Last two packed solutions; their linear extrapolation starts MINRES.
    last: Vec<f64>,
    before: Option<Vec<f64>>,
    initial_iterations: usize,
}

impl<'p> Simulation<'p> {
    /// Builds the mesh and system and sets `u_h^0` to the Stokes projection
    /// of `(u⁰, 0)`.
    pub fn initialize(config: RunConfig, problem: &'p dyn FlowProblem) -> Result<Self> {
        config.validate()?;
        if problem.dim() != config.dim {
            return Err(Error::Config(format!(
                "problem dimension {} does not match configured dimension {}",
                problem.dim(),
                config.dim
            )));
        }
        let mesh = SimplexMesh::unit(config.dim, config.n)?;
        let projection = stokes_projection(
            &mesh,
            config.nu,
            config.delta0,
            |x| problem.velocity_gradient(x, 0.0),
            |_| 0.0,
            &config.solver,
        )?;
        debug!(
            "Stokes projection: {} iterations, residual {:.3e}",
            projection.outcome.iterations, projection.outcome.residual
        );
        let dt = config.dt();
        let system = SaddleSystem::navier_stokes(&mesh, config.nu, dt, config.delta0);
        let last = system.dofs.pack(&projection.velocity, &projection.pressure);
        Ok(Simulation {
            rule: QuadratureRule::degree5(config.dim)?,
            state: TimeState {
                n: 0,
                t: 0.0,
                velocity: projection.velocity,
                pressure: projection.pressure,
            },
            initial_iterations: projection.outcome.iterations,
            config,
            problem,
            mesh,
            system,
            dt,
            last,
            before: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn mesh(&self) -> &SimplexMesh {
        &self.mesh
    }

    pub fn system(&self) -> &SaddleSystem {
        &self.system
    }

    pub fn state(&self) -> &TimeState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn initial_iterations(&self) -> usize {
        self.initial_iterations
    }

    /// Advances one time level.
    pub fn step(&mut self) -> Result<StepRecord> {
        let n = self.state.n + 1;
        let t = n as f64 * self.dt;
        let cfl = check_cfl(&self.mesh, &self.state.velocity, self.dt).product;
        if cfl >= self.config.cfl_abort {
            return Err(Error::Cfl {
                step: n,
                product: cfl,
                limit: self.config.cfl_abort,
            });
        }
        if cfl >= self.config.cfl_warn {
            warn!(
                "step {n}: CFL product {cfl:.3} exceeds warning threshold {}",
                self.config.cfl_warn
            );
        }

        let problem = self.problem;
        let rhs = assemble_rhs(
            &self.mesh,
            &self.system.dofs,
            &self.rule,
            &self.state.velocity,
            &self.state.velocity,
            self.dt,
            |x, t| problem.forcing(x, t),
            t,
        )?;
        // The matrix never changes, so its symmetry is probed only once.
        let mut solver = self.config.solver;
        solver.check_symmetry &= n == 1;
        let guess: Vec<f64> = match &self.before {
            Some(b) => self.last.iter().zip(b).map(|(l, b)| 2.0 * l - b).collect(),
            None => self.last.clone(),
        };
        let outcome = solve(&self.system, &rhs.rhs, Some(&guess), &solver, n)?;
        let (velocity, pressure) = self.system.dofs.split(&self.mesh, &outcome.solution);
        self.before = Some(std::mem::replace(&mut self.last, outcome.solution));
        self.state = TimeState {
            n,
            t,
            velocity,
            pressure,
        };

        let record = StepRecord {
            n,
            t,
            cfl,
            iterations: outcome.iterations,
            residual: outcome.residual,
            clamped: rhs.clamped,
        };
        info!(
            "n={n} t={t:.6} cfl={cfl:.4} iters={} residual={:.3e}",
            record.iterations, record.residual
        );
        Ok(record)
    }
}

/// Outcome of a complete run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub records: Vec<StepRecord>,
    pub initial_iterations: usize,
    pub wall_s: f64,
}

impl RunSummary {
    pub fn mean_iterations(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.iterations as f64).sum::<f64>() / self.records.len() as f64
    }
}

/// Runs `n = 1..N_T` with the problem named in the configuration, calling
/// `observe` on every state including `n = 0`.
pub fn run<F>(config: &RunConfig, observe: F) -> Result<RunSummary>
where
    F: FnMut(&SimplexMesh, &TimeState) -> Result<()>,
{
    let problem = ManufacturedProblem::by_name(&config.problem_name(), config.nu)?;
    run_with(config, &problem, observe)
}

/// [`run`] with an explicit problem.
pub fn run_with<F>(config: &RunConfig, problem: &dyn FlowProblem, mut observe: F) -> Result<RunSummary>
where
    F: FnMut(&SimplexMesh, &TimeState) -> Result<()>,
{
    let start = Instant::now();
    let mut sim = Simulation::initialize(config.clone(), problem)?;
    observe(sim.mesh(), sim.state())?;
    let steps = config.num_steps();
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        records.push(sim.step()?);
        observe(sim.mesh(), sim.state())?;
    }
    Ok(RunSummary {
        steps,
        dt: sim.dt(),
        records,
        initial_iterations: sim.initial_iterations(),
        wall_s: start.elapsed().as_secs_f64(),
    })
}
