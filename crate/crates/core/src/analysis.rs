//! DG norms, error reports against exact solutions, convergence rates and
//! energy monitoring of transient runs.
//!
//! Both DG norms are the sum of a broken-gradient term and a penalized jump
//! term (not the root of the sum of squares).

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{BlockSystem, Discretization};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::manufactured::ManufacturedCase;
use crate::mesh::FaceNeighbors;
use crate::quadrature::{element_rule, face_rule};
use crate::timestepper::{Observer, TransientState};

/// Value (components) and gradient rows of a field at a point of an element.
pub type Sample = ([f64; 3], [[f64; 3]; 3]);

/// A piecewise field: `(element, point) -> (value, gradient)`. Evaluated on
/// both sides of interior faces, so it may be discontinuous.
pub trait FieldEval: Sync {
    fn eval(&self, elem: usize, x: &Point) -> Sample;
}

impl<F: Fn(usize, &Point) -> Sample + Sync> FieldEval for F {
    fn eval(&self, elem: usize, x: &Point) -> Sample {
        self(elem, x)
    }
}

/// `exact - discrete` for a displacement field.
pub fn displacement_error<'a>(
    disc: &'a Discretization,
    case: &'a ManufacturedCase,
    coeffs: &'a [f64],
    t: f64,
) -> impl FieldEval + 'a {
    move |e: usize, x: &Point| {
        let (v, g) = disc.space_u.eval_field(coeffs, e, x);
        let ve = case.displacement(x, t);
        let ge = case.displacement_gradient(x, t);
        let mut out = ([0.0; 3], [[0.0; 3]; 3]);
        for c in 0..3 {
            out.0[c] = ve[c] - v[c];
            for k in 0..3 {
                out.1[c][k] = ge[c][k] - g[c][k];
            }
        }
        out
    }
}

/// `exact - discrete` for network `j`; `coeffs` is that network's block.
pub fn pressure_error<'a>(
    disc: &'a Discretization,
    case: &'a ManufacturedCase,
    j: usize,
    coeffs: &'a [f64],
    t: f64,
) -> impl FieldEval + 'a {
    move |e: usize, x: &Point| {
        let (v, g) = disc.space_p.eval_field(coeffs, e, x);
        let ge = case.pressure_gradient(j, x, t);
        let mut out = ([0.0; 3], [[0.0; 3]; 3]);
        out.0[0] = case.pressure(j, x, t) - v[0];
        for k in 0..3 {
            out.1[0][k] = ge[k] - g[0][k];
        }
        out
    }
}

pub fn discrete_displacement<'a>(disc: &'a Discretization, coeffs: &'a [f64]) -> impl FieldEval + 'a {
    move |e: usize, x: &Point| disc.space_u.eval_field(coeffs, e, x)
}

pub fn discrete_pressure<'a>(disc: &'a Discretization, coeffs: &'a [f64]) -> impl FieldEval + 'a {
    move |e: usize, x: &Point| disc.space_p.eval_field(coeffs, e, x)
}

/// Squared volume and jump contributions of one of the DG norms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormParts {
    pub volume: f64,
    pub jump: f64,
}

impl NormParts {
    pub fn norm(&self) -> f64 {
        self.volume.max(0.0).sqrt() + self.jump.max(0.0).sqrt()
    }
}

fn volume_integral(disc: &Discretization, order: usize, f: impl Fn(usize, &Point) -> f64 + Sync) -> Result<f64> {
    let parts = (0..disc.mesh.n_elements())
        .into_par_iter()
        .map(|e| -> Result<f64> {
            let rule = element_rule(&disc.mesh, e, order)?;
            Ok(rule.points.iter().zip(&rule.weights).map(|(x, w)| w * f(e, x)).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

/// `sum_F int_F weight(F) * jump_density(v+ - v-, n)` over faces selected by `on`.
fn jump_integral(
    disc: &Discretization,
    order: usize,
    field: &dyn FieldEval,
    on: impl Fn(usize) -> bool + Sync,
    weight: impl Fn(usize) -> f64 + Sync,
    density: impl Fn(&[f64; 3], &Point) -> f64 + Sync,
) -> Result<f64> {
    let faces = disc.mesh.faces();
    let parts = (0..faces.len())
        .into_par_iter()
        .filter(|f| on(*f))
        .map(|f| -> Result<f64> {
            let face = &faces[f];
            let rule = face_rule(&disc.mesh, f, order)?;
            let w_f = weight(f);
            let mut acc = 0.0;
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let mut jump = field.eval(face.neighbors.owner(), x).0;
                if let FaceNeighbors::Interior { neighbor, .. } = face.neighbors {
                    let other = field.eval(neighbor, x).0;
                    for c in 0..3 {
                        jump[c] -= other[c];
                    }
                }
                acc += w * density(&jump, &face.normal);
            }
            Ok(w_f * acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

/// `||sqrt(C_E) eps_h(v)||^2` and `||sqrt(eta) [[v]]||^2` over interior and
/// Dirichlet faces. The symmetric jump satisfies `|v (x) n|_sym^2 = (|v|^2 + (v.n)^2) / 2`.
pub fn dg_parts_e(disc: &Discretization, field: &dyn FieldEval, order: usize) -> Result<NormParts> {
    let dim = disc.dim();
    let (lambda, mu) = (disc.params.lambda, disc.params.mu);
    let volume = volume_integral(disc, order, |e, x| {
        let g = field.eval(e, x).1;
        let mut eps_sq = 0.0;
        let mut div = 0.0;
        for a in 0..dim {
            div += g[a][a];
            for b in 0..dim {
                let s = 0.5 * (g[a][b] + g[b][a]);
                eps_sq += s * s;
            }
        }
        2.0 * mu * eps_sq + lambda * div * div
    })?;
    let jump = jump_integral(
        disc,
        order,
        field,
        |f| disc.displacement_face(f),
        |f| disc.eta(f),
        |v, n| {
            let vn = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
            0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + vn * vn)
        },
    )?;
    Ok(NormParts { volume, jump })
}

/// `||sqrt(K_j/mu_j) grad_h p||^2` and `||sqrt(zeta_j) [[p]]||^2` over interior
/// and Dirichlet faces of network `j`.
pub fn dg_parts_p(disc: &Discretization, j: usize, field: &dyn FieldEval, order: usize) -> Result<NormParts> {
    let d = disc.params.diffusion(j);
    let volume = volume_integral(disc, order, |e, x| {
        let g = field.eval(e, x).1[0];
        (0..3).map(|r| (0..3).map(|c| g[r] * d[r][c] * g[c]).sum::<f64>()).sum()
    })?;
    let jump = jump_integral(
        disc,
        order,
        field,
        |f| disc.pressure_face(j, f),
        |f| disc.zeta(j, f),
        |v, _| v[0] * v[0],
    )?;
    Ok(NormParts { volume, jump })
}

pub fn dg_norm_e(disc: &Discretization, field: &dyn FieldEval) -> Result<f64> {
    Ok(dg_parts_e(disc, field, disc.error_quad_order())?.norm())
}

pub fn dg_norm_p(disc: &Discretization, j: usize, field: &dyn FieldEval) -> Result<f64> {
    Ok(dg_parts_p(disc, j, field, disc.error_quad_order())?.norm())
}

/// `||v||` over the domain; scalar fields use component 0.
pub fn l2_norm(disc: &Discretization, field: &dyn FieldEval) -> Result<f64> {
    let sq = volume_integral(disc, disc.error_quad_order(), |e, x| {
        let v = field.eval(e, x).0;
        v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    })?;
    Ok(sq.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub p: usize,
    pub q: usize,
    /// `||u - u_h||_{DG,E}`.
    pub err_u_dg: f64,
    /// `sum_k ||sqrt(c_k) (p_k - p_kh)||`.
    pub err_p_l2: f64,
    /// `||p_k - p_kh||_{DG,P_k}` per network.
    pub err_p_dg: Vec<f64>,
    pub t_eval: f64,
}

/// Errors of `state` against `case` at time `t`.
pub fn error_report(disc: &Discretization, state: &TransientState, case: &ManufacturedCase, t: f64) -> Result<ErrorReport> {
    let err_u_dg = dg_norm_e(disc, &displacement_error(disc, case, &state.u, t))?;
    let np = disc.n_p();
    let mut err_p_l2 = 0.0;
    let mut err_p_dg = Vec::with_capacity(disc.n_networks());
    for j in 0..disc.n_networks() {
        let block = &state.p[j * np..(j + 1) * np];
        let e = pressure_error(disc, case, j, block, t);
        err_p_l2 += disc.params.networks[j].c.sqrt() * l2_norm(disc, &e)?;
        err_p_dg.push(dg_norm_p(disc, j, &e)?);
    }
    let report = ErrorReport {
        h: disc.mesh.mesh_size(),
        p: disc.p(),
        q: disc.q(),
        err_u_dg,
        err_p_l2,
        err_p_dg,
        t_eval: t,
    };
    let finite = report.err_u_dg.is_finite() && report.err_p_l2.is_finite() && report.err_p_dg.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite(t));
    }
    Ok(report)
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub h: f64,
    pub err_u_dg: f64,
    pub roc_u: Option<f64>,
    pub err_p_l2: f64,
    pub roc_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub label: String,
    pub rows: Vec<RateRow>,
}

pub const RATE_CSV_HEADER: &str = "h,err_u_dg,roc_u,err_p_l2,roc_p";

/// Rates between consecutive reports; `h` must strictly decrease.
pub fn convergence_rates(label: impl Into<String>, reports: &[ErrorReport]) -> Result<RateTable> {
    if reports.len() < 2 {
        return Err(Error::Rates(format!("need at least 2 reports, got {}", reports.len())));
    }
    for w in reports.windows(2) {
        if !(w[1].h < w[0].h) {
            return Err(Error::Rates(format!("mesh sizes must strictly decrease: {} then {}", w[0].h, w[1].h)));
        }
    }
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let prev = i.checked_sub(1).map(|k| &reports[k]);
            RateRow {
                h: r.h,
                err_u_dg: r.err_u_dg,
                roc_u: prev.map(|p| rate(p.err_u_dg, r.err_u_dg, p.h, r.h)),
                err_p_l2: r.err_p_l2,
                roc_p: prev.map(|p| rate(p.err_p_l2, r.err_p_l2, p.h, r.h)),
            }
        })
        .collect();
    Ok(RateTable {
        label: label.into(),
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl RateTable {
    pub fn last_rates(&self) -> (f64, f64) {
        let r = self.rows.last().expect("non-empty table");
        (r.roc_u.unwrap_or(f64::NAN), r.roc_p.unwrap_or(f64::NAN))
    }

    /// Block of CSV rows preceded by a `# label` comment line.
    pub fn to_csv_block(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# {}", self.label).unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:.6e},{:.6e},{},{:.6e},{}",
                r.h,
                r.err_u_dg,
                opt(r.roc_u),
                r.err_p_l2,
                opt(r.roc_p)
            )
            .unwrap();
        }
        s
    }
}

/// Full CSV document: header, then one block per table.
pub fn rates_csv(tables: &[RateTable]) -> String {
    let mut s = format!("{RATE_CSV_HEADER}\n");
    for t in tables {
        s.push_str(&t.to_csv_block());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub step: usize,
    pub t: f64,
    /// `||sqrt(rho) u_h'||^2 = Z^T M_u Z`.
    pub kinetic: f64,
    /// `U^T K_u U`.
    pub elastic: f64,
    /// `sum_k ||sqrt(c_k) p_k||^2`.
    pub storage: f64,
    /// Trapezoidal `int_0^t sum_k ||p_k||_{DG,P_k}^2`.
    pub dg_dissipation: f64,
    /// Trapezoidal `int_0^t sum_k ||sqrt(beta_k^e) p_k||^2`.
    pub leakage: f64,
}

impl EnergySample {
    pub fn instantaneous(&self) -> f64 {
        self.kinetic + self.elastic + self.storage
    }

    pub fn total(&self) -> f64 {
        self.instantaneous() + self.dg_dissipation + self.leakage
    }
}

/// Observer recording the energy functional of a transient run.
pub struct EnergyTrace<'a> {
    disc: &'a Discretization,
    system: &'a BlockSystem,
    stride: usize,
    last: Option<(f64, f64, f64)>,
    pub samples: Vec<EnergySample>,
}

impl<'a> EnergyTrace<'a> {
    pub fn new(disc: &'a Discretization, system: &'a BlockSystem, stride: usize) -> Self {
        EnergyTrace {
            disc,
            system,
            stride: stride.max(1),
            last: None,
            samples: Vec::new(),
        }
    }

    /// `sum_k ||p_k||_{DG,P_k}^2` and `sum_k beta_k^e ||p_k||^2`.
    fn rates(&self, p: &[f64]) -> Result<(f64, f64)> {
        let disc = self.disc;
        let np = disc.n_p();
        let mp = self.system.m_p.matvec(p);
        let mut dg = 0.0;
        let mut leak = 0.0;
        for (j, net) in disc.params.networks.iter().enumerate() {
            let r = j * np..(j + 1) * np;
            let n = dg_norm_p(disc, j, &discrete_pressure(disc, &p[r.clone()]))?;
            dg += n * n;
            if net.beta_e != 0.0 {
                let m: f64 = p[r.clone()].iter().zip(&mp[r]).map(|(a, b)| a * b).sum();
                leak += net.beta_e / net.c * m;
            }
        }
        Ok((dg, leak))
    }

    pub fn max_relative_growth(&self) -> f64 {
        let e0 = self.samples.first().map(|s| s.instantaneous()).unwrap_or(0.0);
        let peak = self.samples.iter().map(|s| s.instantaneous()).fold(f64::MIN, f64::max);
        if e0 > 0.0 {
            (peak - e0) / e0
        } else if peak > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    pub fn dissipation_monotone(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].dg_dissipation >= w[0].dg_dissipation && w[1].leakage >= w[0].leakage)
    }
}

impl Observer for EnergyTrace<'_> {
    fn stride(&self) -> usize {
        self.stride
    }

    fn observe(&mut self, step: usize, state: &TransientState) -> Result<()> {
        let sys = self.system;
        let kinetic = sys.m_u.quadratic_form(&state.z);
        let elastic = sys.k_u.quadratic_form(&state.u);
        let storage = sys.m_p.quadratic_form(&state.p);
        let (dg_rate, leak_rate) = self.rates(&state.p)?;
        let (mut dg, mut leak) = (0.0, 0.0);
        if let (Some(prev), Some((t0, d0, l0))) = (self.samples.last(), self.last) {
            let dt = state.t - t0;
            dg = prev.dg_dissipation + 0.5 * dt * (d0 + dg_rate);
            leak = prev.leakage + 0.5 * dt * (l0 + leak_rate);
        }
        self.last = Some((state.t, dg_rate, leak_rate));
        self.samples.push(EnergySample {
            step,
            t: state.t,
            kinetic,
            elastic,
            storage,
            dg_dissipation: dg,
            leakage: leak,
        });
        Ok(())
    }
}
