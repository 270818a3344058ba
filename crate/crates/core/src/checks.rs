//! Invariant suite behind the `check` command: structural properties of the
//! mesh, bases and assembled matrices, plus short transient sanity runs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{BlockSystem, Discretization, PenaltyConfig, RhsAssembler};
use crate::data::ProblemData;
use crate::error::Result;
use crate::manufactured::ManufacturedCase;
use crate::mesh::{agglomerate_mesh, build_structured_mesh, BoundaryConditions, BoxDomain, PolyMesh};
use crate::model::MpetParameters;
use crate::solver::{cholesky_succeeds, factorize, SolverKind};
use crate::sparse::{norm, CsrMatrix};
use crate::timestepper::{
    consistent_acceleration, full_matrices, full_source, run_transient, Stepper, TimeConfig, TransientState,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    /// Passes when `value <= tolerance`.
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        CheckOutcome {
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn relative_asymmetry(a: &CsrMatrix) -> f64 {
    a.max_asymmetry() / a.max_abs().max(f64::MIN_POSITIVE)
}

struct Setup {
    label: &'static str,
    disc: Discretization,
    system: BlockSystem,
}

fn setups(seed: u64) -> Result<Vec<Setup>> {
    let base = build_structured_mesh(&BoxDomain::unit(2), &[6, 6], 2)?;
    let poly = Arc::new(agglomerate_mesh(&base, 12, seed)?);
    let cube = Arc::new(build_structured_mesh(&BoxDomain::unit(3), &[2, 2, 2], 3)?);
    let mut two = MpetParameters::cube_verification();
    two.networks.truncate(2);
    two.beta = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    two.networks[1].beta_e = 0.5;
    let mut out = Vec::new();
    let cases: [(&'static str, Arc<PolyMesh>, MpetParameters, usize, usize); 2] = [
        ("2D polygonal P2-P2", poly, two, 2, 2),
        ("3D tetrahedral P1-P2", cube, MpetParameters::cube_verification(), 2, 1),
    ];
    for (label, mesh, raw, p, q) in cases {
        let params = raw.validate(mesh.dim())?;
        let nj = params.n_networks();
        let disc = Discretization::new(mesh, p, q, params, BoundaryConditions::all_dirichlet(nj), PenaltyConfig::default())?;
        let system = BlockSystem::assemble(&disc)?;
        out.push(Setup { label, disc, system });
    }
    Ok(out)
}

fn matrix_checks(s: &Setup, rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) {
    let l = s.label;
    let sys = &s.system;
    let mut named: Vec<(String, &CsrMatrix)> = vec![
        ("M_u".into(), &sys.m_u),
        ("K_u".into(), &sys.k_u),
        ("M_p".into(), &sys.m_p),
        ("K_p".into(), &sys.k_p),
        ("coupling".into(), &sys.coupling),
    ];
    for (j, a) in sys.a_blocks.iter().enumerate() {
        named.push((format!("A_P{}", j + 1), a));
    }
    for (name, a) in &named {
        out.push(CheckOutcome::at_most(format!("{l}: {name} symmetric"), relative_asymmetry(a), 1e-12));
    }
    out.push(CheckOutcome::holds(format!("{l}: M_u SPD"), cholesky_succeeds(&sys.m_u)));
    out.push(CheckOutcome::holds(format!("{l}: M_p SPD"), cholesky_succeeds(&sys.m_p)));
    out.push(CheckOutcome::holds(
        format!("{l}: K_u positive definite (Dirichlet)"),
        cholesky_succeeds(&sys.k_u),
    ));
    let scale = sys.coupling.max_abs().max(f64::MIN_POSITIVE);
    let worst = (0..1000)
        .map(|_| {
            let x = random_vec(rng, sys.coupling.nrows());
            let nx = norm(&x);
            sys.coupling.quadratic_form(&x) / (scale * nx * nx)
        })
        .fold(f64::INFINITY, f64::min);
    out.push(CheckOutcome::at_most(
        format!("{l}: coupling PSD on 1000 random vectors"),
        (-worst).max(0.0),
        1e-12,
    ));
}

fn basis_checks(s: &Setup, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let mesh = &s.disc.mesh;
    let space = &s.disc.space_u;
    let mut dev: f64 = 0.0;
    for e in 0..mesh.n_elements() {
        let g = space.gram(e)?;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g[(i, j)] - target).abs());
            }
        }
    }
    out.push(CheckOutcome::at_most(format!("{}: basis orthonormal", s.label), dev, 1e-10));
    let closure = (0..mesh.n_elements())
        .map(|e| {
            let v = mesh.element_normal_sum(e);
            (v[0].powi(2) + v[1].powi(2) + v[2].powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    out.push(CheckOutcome::at_most(format!("{}: element boundaries closed", s.label), closure, 1e-12));
    out.push(CheckOutcome::at_most(
        format!("{}: mesh covers the domain", s.label),
        (mesh.total_measure() - 1.0).abs(),
        1e-12,
    ));
    Ok(())
}

fn rigid_motion_check(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let base = build_structured_mesh(&BoxDomain::unit(2), &[4, 4], 2)?;
    let mesh = Arc::new(agglomerate_mesh(&base, 6, 0)?);
    let params = MpetParameters::cube_verification();
    let mut raw = params.clone();
    raw.networks.truncate(1);
    raw.beta = vec![vec![0.0]];
    let disc = Discretization::new(
        mesh,
        1,
        1,
        raw.validate(2)?,
        BoundaryConditions::all_neumann(1),
        PenaltyConfig::default(),
    )?;
    let k = crate::assembly::assemble_elastic_stiffness(&disc)?;
    let mut worst: f64 = 0.0;
    for f in [
        |_: &crate::Point| [1.0, 0.0, 0.0],
        |_: &crate::Point| [0.0, 1.0, 0.0],
        |x: &crate::Point| [-x[1], x[0], 0.0],
    ] {
        let v = disc.space_u.project(2, f)?;
        worst = worst.max(norm(&k.matvec(&v)) / (k.max_abs() * norm(&v)));
    }
    out.push(CheckOutcome::at_most("rigid motions in the kernel of K_u (Neumann)", worst, 1e-12));
    Ok(())
}

fn transient_checks(s: &Setup, rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let l = s.label;
    let disc = &s.disc;
    let sys = &s.system;
    let zero = RhsAssembler::new(disc, ProblemData::zero())?;
    let n_p = sys.m_p.nrows();

    // Pure elastodynamics: trapezoidal Newmark conserves the mechanical energy.
    let mut elastic = sys.clone();
    elastic.b = CsrMatrix::zeros(sys.b.nrows(), sys.b.ncols());
    let u = random_vec(rng, disc.n_u());
    let z = random_vec(rng, disc.n_u());
    let p = vec![0.0; n_p];
    let a = consistent_acceleration(&elastic, &zero, 0.0, &u, &p)?;
    let energy = |s: &TransientState| 0.5 * (elastic.m_u.quadratic_form(&s.z) + elastic.k_u.quadratic_form(&s.u));
    let init = TransientState { t: 0.0, u, p, z, a };
    let e0 = energy(&init);
    let cfg = TimeConfig::new(1e-2, 2.0);
    let end = run_transient(&elastic, &zero, init, &cfg, SolverKind::Direct, &mut [])?.final_state;
    out.push(CheckOutcome::at_most(
        format!("{l}: Newmark energy drift over 200 steps"),
        (energy(&end) - e0).abs() / e0,
        1e-8,
    ));

    // One staged step against the assembled four-block map.
    let mut cfg = TimeConfig::new(1e-2, 1.0);
    cfg.beta = 0.3;
    cfg.gamma = 0.55;
    cfg.theta = 0.7;
    let state = TransientState {
        t: 0.0,
        u: random_vec(rng, disc.n_u()),
        p: random_vec(rng, n_p),
        z: random_vec(rng, disc.n_u()),
        a: random_vec(rng, disc.n_u()),
    };
    let next = Stepper::new(sys, cfg.clone(), SolverKind::Direct)?.step(&state, &zero)?;
    let (a1, a2) = full_matrices(sys, &cfg);
    let x: Vec<f64> = [&state.u[..], &state.p[..], &state.z[..], &state.a[..]].concat();
    let g0 = vec![0.0; n_p];
    let f1 = vec![0.0; disc.n_u()];
    let mut b = a2.matvec(&x);
    for (bi, si) in b.iter_mut().zip(full_source(&cfg, &f1, &g0, &g0)) {
        *bi += si;
    }
    let y = factorize(&a1, SolverKind::Direct)?.solve(&b)?;
    let expect: Vec<f64> = [&next.u[..], &next.p[..], &next.z[..], &next.a[..]].concat();
    let diff: Vec<f64> = y.iter().zip(&expect).map(|(a, b)| a - b).collect();
    out.push(CheckOutcome::at_most(
        format!("{l}: staged step equals the block map"),
        norm(&diff) / norm(&expect),
        1e-12,
    ));
    Ok(())
}

fn consistency_check(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let base = build_structured_mesh(&BoxDomain::unit(2), &[4, 4], 2)?;
    let mesh = Arc::new(agglomerate_mesh(&base, 5, 1)?);
    let mut raw = MpetParameters::cube_verification();
    raw.networks.truncate(2);
    raw.beta = vec![vec![0.0, 0.4], vec![0.4, 0.0]];
    let params = raw.validate(2)?;
    let case = Arc::new(ManufacturedCase::polynomial(params.clone())?);
    let disc = Discretization::new(mesh, 2, 2, params, BoundaryConditions::all_dirichlet(2), PenaltyConfig::default())?;
    let sys = BlockSystem::assemble(&disc)?;
    let rhs = RhsAssembler::new(&disc, ProblemData::from_case(case.clone()))?;
    let t = 0.4;
    let (f, g) = rhs.assemble(t);
    let proj_u = |h: &(dyn Fn(&crate::Point) -> [f64; 3] + Sync)| disc.space_u.project(2, |x| h(x));
    let u = proj_u(&|x| case.displacement(x, t))?;
    let ud = proj_u(&|x| case.velocity(x, t))?;
    let udd = proj_u(&|x| case.acceleration(x, t))?;
    let mut p = Vec::new();
    let mut pd = Vec::new();
    for j in 0..2 {
        p.extend(disc.space_p.project(2, |x| [case.pressure(j, x, t), 0.0, 0.0])?);
        pd.extend(disc.space_p.project(2, |x| [case.pressure_rate(j, x, t), 0.0, 0.0])?);
    }
    let (mu, ku, btp) = (sys.m_u.matvec(&udd), sys.k_u.matvec(&u), sys.b.transpose_matvec(&p));
    let r_u: Vec<f64> = (0..f.len()).map(|i| mu[i] + ku[i] - btp[i] - f[i]).collect();
    let (mp, kp, bu) = (sys.m_p.matvec(&pd), sys.k_p.matvec(&p), sys.b.matvec(&ud));
    let r_p: Vec<f64> = (0..g.len()).map(|i| mp[i] + kp[i] + bu[i] - g[i]).collect();
    out.push(CheckOutcome::at_most(
        "Galerkin consistency on a polynomial solution",
        (norm(&r_u) / norm(&f)).max(norm(&r_p) / norm(&g)),
        1e-10,
    ));
    Ok(())
}

/// Runs every check; `seed` drives the agglomeration and random vectors.
pub fn run_invariant_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in setups(seed)? {
        basis_checks(&s, &mut out)?;
        matrix_checks(&s, &mut rng, &mut out);
        transient_checks(&s, &mut rng, &mut out)?;
    }
    rigid_motion_check(&mut out)?;
    consistency_check(&mut out)?;
    Ok(out)
}
