//! Coupled Newmark-beta (momentum) / theta-method (pressures) integrator.
//!
//! Each step solves the reduced system for the increments
//! `dU = U^{n+1} - U^n`, `dP = P^{n+1} - P^n`:
//!
//! ```text
//! [ M_u/(b dt^2) + K_u          -B^T            ] [dU]   [ r_u ]
//! [ (th g/(b dt)) B      M_p/dt + th K_p        ] [dP] = [ r_p ]
//! ```
//!
//! with
//! `r_u = F^{n+1} - K_u U^n + B^T P^n + M_u (Z^n/(b dt) + (1-2b)/(2b) A^n)` and
//! `r_p = th G^{n+1} + (1-th) G^n - K_p P^n + (th g/b - 1) B Z^n - s th (1 - g/(2b)) dt B A^n`,
//! which is algebraically the same as the update for `U^{n+1}, P^{n+1}` but
//! avoids cancelling the huge `M_u/(b dt^2)` contributions. Acceleration and
//! velocity follow explicitly.

use serde::{Deserialize, Serialize};

use crate::assembly::{BlockSystem, Discretization, RhsAssembler};
use crate::error::{Error, Result};
use crate::solver::{factorize, LinearSolver, SolverKind};
use crate::sparse::CsrMatrix;

/// Sign of the `B A^n` term in the pressure row. The two published forms of
/// the scheme disagree; the coefficient vanishes for `gamma = 2 beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelerationCouplingSign {
    /// `-th (1 - g/(2b)) dt B A^n` on the right-hand side.
    #[default]
    Derivation,
    /// `+th (1 - g/(2b)) dt B A^n` on the right-hand side.
    MatrixForm,
}

impl AccelerationCouplingSign {
    fn factor(self) -> f64 {
        match self {
            AccelerationCouplingSign::Derivation => -1.0,
            AccelerationCouplingSign::MatrixForm => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub acceleration_sign: AccelerationCouplingSign,
}

fn default_beta() -> f64 {
    0.25
}

fn default_gamma() -> f64 {
    0.5
}

fn default_theta() -> f64 {
    0.5
}

impl TimeConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        TimeConfig {
            dt,
            t_final,
            beta: default_beta(),
            gamma: default_gamma(),
            theta: default_theta(),
            acceleration_sign: AccelerationCouplingSign::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::TimeConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::TimeConfig(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        if self.t_final > 0.0 && self.dt > self.t_final * (1.0 + 1e-12) {
            return Err(Error::TimeConfig(format!(
                "dt = {} exceeds t_final = {}",
                self.dt, self.t_final
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::TimeConfig(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::TimeConfig(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::TimeConfig(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        Ok(())
    }

    /// Number of steps, `round(t_final / dt)`; warns when that does not land
    /// on `t_final`.
    pub fn n_steps(&self) -> Result<usize> {
        self.validate()?;
        let ratio = self.t_final / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            log::warn!(
                "t_final / dt = {ratio} is not an integer; running {n} steps to t = {}",
                n * self.dt
            );
        }
        Ok(n as usize)
    }
}

/// Coefficients at one time level: displacement, stacked pressures, velocity
/// and acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientState {
    pub t: f64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    pub a: Vec<f64>,
}

impl TransientState {
    pub fn zeros(n_u: usize, n_p: usize) -> Self {
        TransientState {
            t: 0.0,
            u: vec![0.0; n_u],
            p: vec![0.0; n_p],
            z: vec![0.0; n_u],
            a: vec![0.0; n_u],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.p).chain(&self.z).chain(&self.a).all(|v| v.is_finite())
    }
}

/// L2 projections of the initial data and the consistent initial
/// acceleration `M_u A^0 = F(0) - K_u U^0 + B^T P^0`.
pub fn initialize_state(disc: &Discretization, system: &BlockSystem, rhs: &RhsAssembler) -> Result<TransientState> {
    let init = &rhs.data().initial;
    let extra = 2 * disc.p().max(disc.q()) + 2 - 2 * disc.p();
    let u = disc.space_u.project(extra, |x| init.displacement(x))?;
    let z = disc.space_u.project(extra, |x| init.velocity(x))?;
    let extra_p = 2 * disc.p().max(disc.q()) + 2 - 2 * disc.q();
    let mut p = Vec::with_capacity(disc.n_networks() * disc.n_p());
    for j in 0..disc.n_networks() {
        p.extend(disc.space_p.project(extra_p, |x| [init.pressure(j, x), 0.0, 0.0])?);
    }
    let a = consistent_acceleration(system, rhs, 0.0, &u, &p)?;
    Ok(TransientState { t: 0.0, u, p, z, a })
}

pub fn consistent_acceleration(system: &BlockSystem, rhs: &dyn RhsSource, t: f64, u: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let (f, _) = rhs.assemble(t);
    let ku = system.k_u.matvec(u);
    let btp = system.b.transpose_matvec(p);
    let r: Vec<f64> = (0..f.len()).map(|i| f[i] - ku[i] + btp[i]).collect();
    factorize(&system.m_u, SolverKind::Direct)?.solve(&r)
}

/// Anything producing `(F(t), G(t))`.
pub trait RhsSource {
    fn assemble(&self, t: f64) -> (Vec<f64>, Vec<f64>);
}

impl RhsSource for RhsAssembler {
    fn assemble(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        RhsAssembler::assemble(self, t)
    }
}

/// The time-independent step matrix, factorized once.
pub struct Stepper<'a> {
    system: &'a BlockSystem,
    cfg: TimeConfig,
    solver: Box<dyn LinearSolver>,
    /// `G` at the most recent time it was assembled.
    g_cache: Option<(f64, Vec<f64>)>,
    /// Pressure increment of the previous step, used as a solver guess.
    last_dp: Option<Vec<f64>>,
}

/// Coupled step matrix for the increments.
pub fn step_matrix(system: &BlockSystem, cfg: &TimeConfig) -> CsrMatrix {
    let (b, g, th, dt) = (cfg.beta, cfg.gamma, cfg.theta, cfg.dt);
    let a11 = CsrMatrix::lin_comb(1.0 / (b * dt * dt), &system.m_u, 1.0, &system.k_u);
    let a12 = system.b.transpose().scaled(-1.0);
    let a21 = system.b.scaled(th * g / (b * dt));
    let a22 = CsrMatrix::lin_comb(1.0 / dt, &system.m_p, th, &system.k_p);
    CsrMatrix::block(&[vec![Some(&a11), Some(&a12)], vec![Some(&a21), Some(&a22)]])
}

impl<'a> Stepper<'a> {
    pub fn new(system: &'a BlockSystem, cfg: TimeConfig, solver: SolverKind) -> Result<Self> {
        cfg.validate()?;
        let matrix = step_matrix(system, &cfg);
        let solver = factorize(&matrix, solver)?;
        Ok(Stepper {
            system,
            cfg,
            solver,
            g_cache: None,
            last_dp: None,
        })
    }

    pub fn config(&self) -> &TimeConfig {
        &self.cfg
    }

    fn rhs_at(&mut self, rhs: &dyn RhsSource, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (f, g) = rhs.assemble(t);
        self.g_cache = Some((t, g.clone()));
        (f, g)
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &TransientState, rhs: &dyn RhsSource) -> Result<TransientState> {
        let sys = self.system;
        let (b, g, th, dt) = (self.cfg.beta, self.cfg.gamma, self.cfg.theta, self.cfg.dt);
        let g_n = match &self.g_cache {
            Some((t, gv)) if *t == state.t => gv.clone(),
            _ => rhs.assemble(state.t).1,
        };
        // Keep times on the grid so the final time is exactly `n dt`.
        let mut t_next = state.t + dt;
        let grid = (t_next / dt).round() * dt;
        if (grid - t_next).abs() < 1e-9 * dt {
            t_next = grid;
        }
        let (f_next, g_next) = self.rhs_at(rhs, t_next);
        let n_u = state.u.len();

        let mut hist = vec![0.0; n_u];
        for i in 0..n_u {
            hist[i] = state.z[i] / (b * dt) + (1.0 - 2.0 * b) / (2.0 * b) * state.a[i];
        }
        let m_hist = sys.m_u.matvec(&hist);
        let ku = sys.k_u.matvec(&state.u);
        let btp = sys.b.transpose_matvec(&state.p);
        let mut r = Vec::with_capacity(n_u + state.p.len());
        for i in 0..n_u {
            r.push(f_next[i] - ku[i] + btp[i] + m_hist[i]);
        }
        let kp = sys.k_p.matvec(&state.p);
        let bz = sys.b.matvec(&state.z);
        let ba_coef = self.cfg.acceleration_sign.factor() * th * (1.0 - g / (2.0 * b)) * dt;
        let ba = if ba_coef != 0.0 { sys.b.matvec(&state.a) } else { vec![0.0; state.p.len()] };
        for i in 0..state.p.len() {
            r.push(
                th * g_next[i] + (1.0 - th) * g_n[i] - kp[i] + (th * g / b - 1.0) * bz[i] + ba_coef * ba[i],
            );
        }
        // Predictor guess for iterative solvers: Taylor step for the
        // displacement, previous increment for the pressures.
        let mut guess: Vec<f64> = (0..n_u).map(|i| dt * state.z[i] + 0.5 * dt * dt * state.a[i]).collect();
        match &self.last_dp {
            Some(dp) if dp.len() == state.p.len() => guess.extend_from_slice(dp),
            _ => guess.resize(r.len(), 0.0),
        }
        let x = self.solver.solve_from(&r, &guess)?;
        let (du, dp) = x.split_at(n_u);
        self.last_dp = Some(dp.to_vec());

        let mut next = TransientState {
            t: t_next,
            u: state.u.iter().zip(du).map(|(u, d)| u + d).collect(),
            p: state.p.iter().zip(dp).map(|(p, d)| p + d).collect(),
            z: vec![0.0; n_u],
            a: vec![0.0; n_u],
        };
        for i in 0..n_u {
            next.a[i] = du[i] / (b * dt * dt) - state.z[i] / (b * dt) + (2.0 * b - 1.0) / (2.0 * b) * state.a[i];
            next.z[i] = state.z[i] + dt * (g * next.a[i] + (1.0 - g) * state.a[i]);
        }
        if !next.is_finite() {
            return Err(Error::NonFinite(t_next));
        }
        Ok(next)
    }
}

/// Callback invoked on the initial state and then every `stride()` steps (and
/// always on the final state).
pub trait Observer {
    fn stride(&self) -> usize {
        1
    }

    fn observe(&mut self, step: usize, state: &TransientState) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_state: TransientState,
}

/// Integrates from `initial` to `cfg.t_final`, factorizing the step matrix once.
pub fn run_transient(
    system: &BlockSystem,
    rhs: &dyn RhsSource,
    initial: TransientState,
    cfg: &TimeConfig,
    solver: SolverKind,
    observers: &mut [&mut dyn Observer],
) -> Result<RunSummary> {
    let n = cfg.n_steps()?;
    for o in observers.iter_mut() {
        o.observe(0, &initial)?;
    }
    if n == 0 {
        return Ok(RunSummary {
            steps: 0,
            final_state: initial,
        });
    }
    let mut stepper = Stepper::new(system, cfg.clone(), solver)?;
    let mut state = initial;
    for k in 1..=n {
        state = stepper.step(&state, rhs)?;
        for o in observers.iter_mut() {
            if k % o.stride().max(1) == 0 || k == n {
                o.observe(k, &state)?;
            }
        }
    }
    Ok(RunSummary {
        steps: n,
        final_state: state,
    })
}

/// The scheme written as one linear map on `X = [U; P; Z; A]`:
/// `A1 X^{n+1} = A2 X^n + S^{n+1}`. Returned as `(A1, A2)`.
pub fn full_matrices(system: &BlockSystem, cfg: &TimeConfig) -> (CsrMatrix, CsrMatrix) {
    let (b, g, th, dt) = (cfg.beta, cfg.gamma, cfg.theta, cfg.dt);
    let n_u = system.m_u.nrows();
    let id = CsrMatrix::identity(n_u);
    let bt = system.b.transpose();
    let a11 = CsrMatrix::lin_comb(1.0 / (b * dt * dt), &system.m_u, 1.0, &system.k_u);
    let a12 = bt.scaled(-1.0);
    let a21 = system.b.scaled(th * g / (b * dt));
    let a22 = CsrMatrix::lin_comb(1.0 / dt, &system.m_p, th, &system.k_p);
    let z_a = id.scaled(-g * dt);
    let a_u = id.scaled(-1.0 / (b * dt * dt));
    let a1 = CsrMatrix::block(&[
        vec![Some(&a11), Some(&a12), None, None],
        vec![Some(&a21), Some(&a22), None, None],
        vec![None, None, Some(&id), Some(&z_a)],
        vec![Some(&a_u), None, None, Some(&id)],
    ]);

    let m_u_b = system.m_u.scaled(1.0 / (b * dt * dt));
    let m_z = system.m_u.scaled(1.0 / (b * dt));
    let m_a = system.m_u.scaled((1.0 - 2.0 * b) / (2.0 * b));
    let b_u = system.b.scaled(th * g / (b * dt));
    let p_p = CsrMatrix::lin_comb(1.0 / dt, &system.m_p, -(1.0 - th), &system.k_p);
    let b_z = system.b.scaled(th * g / b - 1.0);
    let b_a = system.b.scaled(cfg.acceleration_sign.factor() * th * (1.0 - g / (2.0 * b)) * dt);
    let z_next_a = id.scaled((1.0 - g) * dt);
    let a_z = id.scaled(-1.0 / (b * dt));
    let a_a = id.scaled((2.0 * b - 1.0) / (2.0 * b));
    let a2 = CsrMatrix::block(&[
        vec![Some(&m_u_b), None, Some(&m_z), Some(&m_a)],
        vec![Some(&b_u), Some(&p_p), Some(&b_z), Some(&b_a)],
        vec![None, None, Some(&id), Some(&z_next_a)],
        vec![Some(&a_u), None, Some(&a_z), Some(&a_a)],
    ]);
    (a1, a2)
}

/// Source vector `S^{n+1} = [F^{n+1}; th G^{n+1} + (1 - th) G^n; 0; 0]`.
pub fn full_source(cfg: &TimeConfig, f_next: &[f64], g_next: &[f64], g_now: &[f64]) -> Vec<f64> {
    let th = cfg.theta;
    let mut s = f_next.to_vec();
    s.extend(g_next.iter().zip(g_now).map(|(a, b)| th * a + (1.0 - th) * b));
    s.extend(std::iter::repeat_n(0.0, 2 * f_next.len()));
    s
}
