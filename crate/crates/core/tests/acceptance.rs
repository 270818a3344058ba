//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed.
//! Criteria can be selected by number: `cargo test --test acceptance -- 4 5`.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use mpet_polydg::analysis::{EnergyTrace, RateTable};
use mpet_polydg::assembly::{BlockSystem, Discretization, PenaltyConfig, RhsAssembler};
use mpet_polydg::config::{parse_config_str, ValidatedConfig};
use mpet_polydg::data::ProblemData;
use mpet_polydg::geometry::Point;
use mpet_polydg::manufactured::ManufacturedCase;
use mpet_polydg::mesh::{agglomerate_mesh, build_structured_mesh, BoundaryConditions, BoxDomain, PolyMesh};
use mpet_polydg::model::MpetParameters;
use mpet_polydg::solver::{cholesky_succeeds, SolverKind};
use mpet_polydg::sparse::CsrMatrix;
use mpet_polydg::study::{run_convergence_study, simulate, SimulationOptions};
use mpet_polydg::timestepper::{
    consistent_acceleration, full_matrices, full_source, run_transient, Observer, Stepper, TimeConfig, TransientState,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

fn config(text: &str) -> Result<ValidatedConfig, String> {
    parse_config_str(text, Path::new(".")).map_err(|e| e.to_string())
}

fn table<'a>(tables: &'a [RateTable], label: &str) -> Result<&'a RateTable, String> {
    tables
        .iter()
        .find(|t| t.label == label)
        .ok_or_else(|| format!("no rate table for {label}"))
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

// Published errors at h = 0.866, 0.433, 0.217: (displacement, pressure).
const PUBLISHED_P1P2: [(f64, f64); 3] = [(1.97e-2, 9.52e-3), (3.69e-3, 2.56e-3), (6.53e-4, 6.23e-4)];
const PUBLISHED_P1P1: [(f64, f64); 3] = [(7.26e-2, 2.01e-2), (2.87e-2, 5.56e-3), (1.06e-2, 1.42e-3)];

fn criterion_1() -> Check {
    let cfg = config(
        r#"
test_case = "tc1"
degrees = [{ p = 2, q = 1 }, { p = 1, q = 1 }]
[mesh]
kind = "structured"
divisions = [2, 4, 8]
[time]
dt = 1e-5
t_final = 5e-3
"#,
    )?;
    let out = run_convergence_study(&cfg).map_err(|e| e.to_string())?;
    if out.failures() > 0 {
        return Err(out.csv);
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, (ru, rp), published) in [
        ("P1-P2", ((2.1, 2.8), (1.7, 2.3)), PUBLISHED_P1P2),
        ("P1-P1", ((1.0, 1.7), (1.6, 2.2)), PUBLISHED_P1P1),
    ] {
        let t = table(&out.tables, label)?;
        let (roc_u, roc_p) = t.last_rates();
        let rates_ok = within(roc_u, ru.0, ru.1) && within(roc_p, rp.0, rp.1);
        ok &= rates_ok;
        notes.push(format!(
            "{label} roc_u {roc_u:.2} in [{}, {}], roc_p {roc_p:.2} in [{}, {}]{}",
            ru.0,
            ru.1,
            rp.0,
            rp.1,
            if rates_ok { "" } else { " (out of range)" }
        ));
        for (row, (pu, pp)) in t.rows.iter().zip(published) {
            let fu = row.err_u_dg / pu;
            let fp = row.err_p_l2 / pp;
            let mag_ok = within(fu, 0.5, 2.0) && within(fp, 0.5, 2.0);
            ok &= mag_ok;
            notes.push(format!(
                "{label} h={:.3} err_u {:.2e} ({fu:.2}x published), err_p {:.2e} ({fp:.2}x published){}",
                row.h,
                row.err_u_dg,
                row.err_p_l2,
                if mag_ok { "" } else { " (beyond factor 2)" }
            ));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_2() -> Check {
    let cfg = config(
        r#"
test_case = "tc2"
degrees = [{ p = 2, q = 1 }, { p = 3, q = 2 }]
[mesh]
kind = "structured"
divisions = [4, 8, 16, 32]
[time]
dt = 1e-6
t_final = 1e-4
"#,
    )?;
    let out = run_convergence_study(&cfg).map_err(|e| e.to_string())?;
    if out.failures() > 0 {
        return Err(out.csv);
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for d in &cfg.raw.degrees {
        let t = table(&out.tables, &d.label())?;
        let n = t.rows.len();
        for row in &t.rows[n - 2..] {
            let (ru, rp) = (row.roc_u.unwrap(), row.roc_p.unwrap());
            let pass = ru >= d.p as f64 - 0.3 && rp >= d.q as f64 + 0.6;
            ok &= pass;
            notes.push(format!(
                "{} h={:.4} roc_u {ru:.2} (>= {:.1}), roc_p {rp:.2} (>= {:.1})",
                t.label,
                row.h,
                d.p as f64 - 0.3,
                d.q as f64 + 0.6
            ));
        }
    }
    Ok((ok, notes.join("; ")))
}

/// Index of the first entry that does not decrease, or the length.
fn decreasing_prefix(e: &[f64]) -> usize {
    (1..e.len()).find(|&k| e[k] >= e[k - 1]).unwrap_or(e.len())
}

fn criterion_3() -> Check {
    let text = r#"
test_case = "tc2"
degrees = [
    { p = 1, q = 1 },
    { p = 2, q = 2 },
    { p = 3, q = 3 },
    { p = 4, q = 4 },
    { p = 5, q = 5 },
]
seed = 1
[mesh]
kind = "agglomerated"
base_divisions = 16
elements = 51
[time]
dt = 1e-7
t_final = 1e-5
[study]
mode = "p"
"#;
    let cfg = config(text)?;
    let mesh = cfg.build_mesh(0).map_err(|e| e.to_string())?;
    let n_el = mesh.n_elements();
    let out = run_convergence_study(&cfg).map_err(|e| e.to_string())?;
    let reports: Vec<_> = out
        .points
        .iter()
        .map(|p| p.outcome.clone())
        .collect::<Result<Vec<_>, _>>()?;
    let eu: Vec<f64> = reports.iter().map(|r| r.err_u_dg).collect();
    let ep: Vec<f64> = reports.iter().map(|r| r.err_p_l2).collect();
    // Strict decrease up to a floor; past the floor the error stays within a
    // factor of two of it.
    let shape_ok = |e: &[f64]| {
        let k = decreasing_prefix(e);
        k >= 3 && e[k..].iter().all(|v| *v <= 2.0 * e[k - 1])
    };
    let decay_ok = shape_ok(&eu) && shape_ok(&ep);

    // A floor exists if the pressure error stops decreasing or its last
    // decrease is less than twofold. It must then drop when dt is halved.
    let n = ep.len();
    let floor = decreasing_prefix(&ep) < n || ep[n - 1] > 0.5 * ep[n - 2];
    let last = *cfg.raw.degrees.last().unwrap();
    let mut half = cfg.raw.time.clone();
    half.dt *= 0.5;
    let case = Arc::new(cfg.manufactured_case().map_err(|e| e.to_string())?);
    let refined = simulate(&cfg, &case, mesh, last, &half, &SimulationOptions::default())
        .map_err(|e| e.to_string())?
        .report;
    let change = refined.err_p_l2 / ep[n - 1];
    let floor_ok = if floor { change < 0.9 } else { change <= 1.0 + 1e-3 };
    let fmt = |e: &[f64]| e.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" ");
    Ok((
        decay_ok && floor_ok,
        format!(
            "{n_el} elements, q=1..5 err_u [{}], err_p [{}]; {}; q=5 with dt/2 scales err_p by {change:.4}",
            fmt(&eu),
            fmt(&ep),
            if floor { "floor reached" } else { "no floor reached up to q=5 (spatial error dominates)" },
        ),
    ))
}

fn polygon_mesh(base: usize, parts: usize, seed: u64) -> Arc<PolyMesh> {
    let fine = build_structured_mesh(&BoxDomain::unit(2), &[base, base], 2).unwrap();
    Arc::new(agglomerate_mesh(&fine, parts, seed).unwrap())
}

fn two_network_parameters() -> MpetParameters {
    let mut raw = MpetParameters::cube_verification();
    raw.networks.truncate(2);
    raw.networks[1].beta_e = 0.5;
    raw.beta = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    raw
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn criterion_4() -> Check {
    let mesh = polygon_mesh(6, 12, 5);
    let params = two_network_parameters().validate(2).unwrap().without_coupling();
    let disc = Discretization::new(
        mesh,
        2,
        1,
        params,
        BoundaryConditions::all_dirichlet(2),
        PenaltyConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let sys = BlockSystem::assemble(&disc).map_err(|e| e.to_string())?;
    let rhs = RhsAssembler::new(&disc, ProblemData::zero()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = random_vec(&mut rng, disc.n_u());
    let z = random_vec(&mut rng, disc.n_u());
    let p = vec![0.0; disc.n_networks() * disc.n_p()];
    let a = consistent_acceleration(&sys, &rhs, 0.0, &u, &p).map_err(|e| e.to_string())?;
    let mut state = TransientState { t: 0.0, u, p, z, a };
    let energy = |s: &TransientState| 0.5 * (sys.m_u.quadratic_form(&s.z) + sys.k_u.quadratic_form(&s.u));
    let e0 = energy(&state);
    let cfg = TimeConfig::new(1e-2, 10.0);
    let mut stepper = Stepper::new(&sys, cfg, SolverKind::Direct).map_err(|e| e.to_string())?;
    let mut drift: f64 = 0.0;
    for _ in 0..1000 {
        state = stepper.step(&state, &rhs).map_err(|e| e.to_string())?;
        drift = drift.max((energy(&state) - e0).abs() / e0);
    }
    Ok((drift < 1e-8, format!("max relative drift {drift:.2e} over 1000 steps (< 1e-8)")))
}

fn stability_run(disc: &Discretization, seed: u64, dt: f64) -> Result<(f64, bool), String> {
    let sys = BlockSystem::assemble(disc).map_err(|e| e.to_string())?;
    let rhs = RhsAssembler::new(disc, ProblemData::zero()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_vec(&mut rng, disc.n_u());
    let z = random_vec(&mut rng, disc.n_u());
    let p = random_vec(&mut rng, disc.n_networks() * disc.n_p());
    let a = consistent_acceleration(&sys, &rhs, 0.0, &u, &p).map_err(|e| e.to_string())?;
    let initial = TransientState { t: 0.0, u, p, z, a };
    let mut trace = EnergyTrace::new(disc, &sys, 1);
    {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut trace];
        run_transient(&sys, &rhs, initial, &TimeConfig::new(dt, 1000.0 * dt), SolverKind::Direct, &mut observers)
            .map_err(|e| e.to_string())?;
    }
    if trace.samples.len() != 1001 {
        return Err(format!("expected 1001 energy samples, got {}", trace.samples.len()));
    }
    Ok((trace.max_relative_growth(), trace.dissipation_monotone()))
}

fn criterion_5() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    let square = polygon_mesh(6, 12, 9);
    let cube = Arc::new(build_structured_mesh(&BoxDomain::unit(3), &[2, 2, 2], 3).unwrap());
    let mut cube_params = MpetParameters::cube_verification();
    cube_params.networks[2].beta_e = 0.3;
    for (name, mesh, raw, p, q) in [
        ("2D polygons P2-P2", square, two_network_parameters(), 2, 2),
        ("3D tetrahedra P1-P2", cube, cube_params, 2, 1),
    ] {
        let dim = mesh.dim();
        let params = raw.validate(dim).map_err(|e| e.to_string())?;
        let nj = params.n_networks();
        let disc = Discretization::new(mesh, p, q, params, BoundaryConditions::all_dirichlet(nj), PenaltyConfig::default())
            .map_err(|e| e.to_string())?;
        let (growth, monotone) = stability_run(&disc, 11, 1e-2)?;
        let pass = growth <= 1e-6 && monotone;
        ok &= pass;
        notes.push(format!(
            "{name}: max growth {growth:.2e} (<= 1e-6), accumulators {}",
            if monotone { "monotone" } else { "NOT monotone" }
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_6() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, mesh) in common::tiny_meshes() {
        if mesh.n_elements() > 4 {
            return Err(format!("{name} has {} elements", mesh.n_elements()));
        }
        let dim = mesh.dim();
        let mut raw = if dim == 2 { two_network_parameters() } else { MpetParameters::cube_verification() };
        raw.networks[0].alpha = 0.4;
        raw.networks[1].viscosity = 2.0;
        let params = raw.validate(dim).map_err(|e| e.to_string())?;
        let nj = params.n_networks();
        for (p, q) in [(1, 1), (2, 1), (2, 2)] {
            let penalty = PenaltyConfig::uniform(9.0, 11.0);
            let disc = Discretization::new(mesh.clone(), p, q, params.clone(), common::mixed_conditions(nj), penalty.clone())
                .map_err(|e| e.to_string())?;
            let sys = BlockSystem::assemble(&disc).map_err(|e| e.to_string())?;
            let r = common::reference_matrices(&disc, &penalty);
            let mut pairs = vec![
                (sys.m_u.to_dense(), r.m_u.clone()),
                (sys.k_u.to_dense(), r.k_u.clone()),
                (sys.m_p.to_dense(), r.m_p.clone()),
                (sys.coupling.to_dense(), r.transfer.clone()),
            ];
            for j in 0..nj {
                pairs.push((sys.a_blocks[j].to_dense(), r.a_p[j].clone()));
                pairs.push((sys.b_blocks[j].to_dense(), r.b[j].clone()));
            }
            for (a, b) in &pairs {
                worst = worst.max(common::max_abs_diff(a, b));
                count += 1;
            }
        }
    }
    let step = one_step_mismatch()?;
    Ok((
        worst < 1e-10 && step < 1e-12,
        format!("{count} matrices, max entry difference {worst:.2e} (< 1e-10); one step vs full linear map {step:.2e} (< 1e-12)"),
    ))
}

/// Relative difference between one staged step and the solution of the
/// full `A1 X^{n+1} = A2 X^n + S` system, solved densely.
fn one_step_mismatch() -> Result<f64, String> {
    let mesh = polygon_mesh(4, 4, 7);
    let params = two_network_parameters().validate(2).map_err(|e| e.to_string())?;
    let disc = Discretization::new(mesh, 2, 1, params.clone(), BoundaryConditions::all_dirichlet(2), PenaltyConfig::default())
        .map_err(|e| e.to_string())?;
    let sys = BlockSystem::assemble(&disc).map_err(|e| e.to_string())?;
    let case = Arc::new(ManufacturedCase::polynomial(params).map_err(|e| e.to_string())?);
    let rhs = RhsAssembler::new(&disc, ProblemData::from_case(case)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n_u, n_p) = (disc.n_u(), disc.n_networks() * disc.n_p());
    let state = TransientState {
        t: 0.1,
        u: random_vec(&mut rng, n_u),
        p: random_vec(&mut rng, n_p),
        z: random_vec(&mut rng, n_u),
        a: random_vec(&mut rng, n_u),
    };
    let cfg = TimeConfig::new(1e-2, 1.0);
    let next = Stepper::new(&sys, cfg.clone(), SolverKind::Direct)
        .and_then(|mut s| s.step(&state, &rhs))
        .map_err(|e| e.to_string())?;
    let (a1, a2) = full_matrices(&sys, &cfg);
    let x: Vec<f64> = [&state.u[..], &state.p[..], &state.z[..], &state.a[..]].concat();
    let (f1, g1) = rhs.assemble(state.t + cfg.dt);
    let (_, g0) = rhs.assemble(state.t);
    let mut b = a2.matvec(&x);
    for (bi, si) in b.iter_mut().zip(full_source(&cfg, &f1, &g1, &g0)) {
        *bi += si;
    }
    let dense: DMatrix<f64> = a1.to_dense();
    let y = dense
        .full_piv_lu()
        .solve(&DVector::from_vec(b))
        .ok_or("full step matrix is singular")?;
    let staged: Vec<f64> = [&next.u[..], &next.p[..], &next.z[..], &next.a[..]].concat();
    let scale = staged.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(y.iter().zip(&staged).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

/// Fourth-order central difference of `f` at `s`.
fn d1(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (-f(s + 2.0 * h) + 8.0 * f(s + h) - 8.0 * f(s - h) + f(s - 2.0 * h)) / (12.0 * h)
}

fn d2(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (-f(s + 2.0 * h) + 16.0 * f(s + h) - 30.0 * f(s) + 16.0 * f(s - h) - f(s - 2.0 * h)) / (12.0 * h * h)
}

fn shifted(x: &Point, k: usize, s: f64) -> Point {
    let mut y = *x;
    y[k] = s;
    y
}

/// Largest relative residual of the momentum and pressure equations,
/// evaluated with finite differences of the exact fields only.
fn forcing_residual(case: &ManufacturedCase, x: &Point, t: f64) -> f64 {
    let params = case.params();
    let dim = case.dim();
    let nj = case.n_networks();
    let (h, ht) = (1e-3, 1e-3);
    let (lambda, mu) = (params.lambda, params.mu);
    let u = |c: usize, x: &Point, t: f64| case.displacement(x, t)[c];
    // Displacement gradient G[c][k] at a point, by differences.
    let grad_u = |x: &Point, t: f64| {
        let mut g = [[0.0; 3]; 3];
        for (c, row) in g.iter_mut().enumerate().take(dim) {
            for (k, v) in row.iter_mut().enumerate().take(dim) {
                *v = d1(&|s| u(c, &shifted(x, k, s), t), x[k], h);
            }
        }
        g
    };
    let stress = |x: &Point, t: f64| {
        let g = grad_u(x, t);
        let tr: f64 = (0..dim).map(|i| g[i][i]).sum();
        let mut s = [[0.0; 3]; 3];
        for i in 0..dim {
            for k in 0..dim {
                s[i][k] = mu * (g[i][k] + g[k][i]) + if i == k { lambda * tr } else { 0.0 };
            }
        }
        s
    };
    let f = case.body_force(x, t);
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let acc = params.rho * d2(&|s| u(i, x, s), t, ht);
        let div_sigma: f64 = (0..dim).map(|k| d1(&|s| stress(&shifted(x, k, s), t)[i][k], x[k], h)).sum();
        let grad_p: f64 = (0..nj)
            .map(|j| params.networks[j].alpha * d1(&|s| case.pressure(j, &shifted(x, i, s), t), x[i], h))
            .sum();
        let terms = [acc, div_sigma, grad_p, f[i]];
        let scale = terms.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        worst = worst.max((acc - div_sigma + grad_p - f[i]).abs() / scale);
    }
    for j in 0..nj {
        let net = &params.networks[j];
        let d = params.diffusion(j);
        let pj = |x: &Point, t: f64| case.pressure(j, x, t);
        let storage = net.c * d1(&|s| pj(x, s), t, ht);
        let div_ut: f64 = (0..dim)
            .map(|k| d1(&|s| d1(&|r| u(k, &shifted(x, k, s), r), t, ht), x[k], h))
            .sum::<f64>()
            * net.alpha;
        let flux = |y: &Point, a: usize| -> f64 { (0..dim).map(|b| d[a][b] * d1(&|s| pj(&shifted(y, b, s), t), y[b], h)).sum() };
        let div_flux: f64 = (0..dim).map(|a| d1(&|s| flux(&shifted(x, a, s), a), x[a], h)).sum();
        let transfer: f64 = (0..nj).map(|k| params.beta[j][k] * (pj(x, t) - case.pressure(k, x, t))).sum::<f64>()
            + net.beta_e * pj(x, t);
        let g = case.source(j, x, t);
        let terms = [storage, div_ut, div_flux, transfer, g];
        let scale = terms.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        worst = worst.max((storage + div_ut - div_flux + transfer - g).abs() / scale);
    }
    worst
}

fn criterion_7() -> Check {
    let tc1 = ManufacturedCase::tc1(MpetParameters::cube_verification().validate(3).unwrap()).map_err(|e| e.to_string())?;
    let tc2 = ManufacturedCase::tc2(MpetParameters::brain_tissue().validate(2).unwrap()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut notes = Vec::new();
    let mut ok = true;
    for case in [&tc1, &tc2] {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let mut x = [0.0; 3];
            for v in x.iter_mut().take(case.dim()) {
                *v = rng.gen_range(0.0..1.0);
            }
            let t = rng.gen_range(0.0..1.0);
            worst = worst.max(forcing_residual(case, &x, t));
        }
        ok &= worst < 1e-6;
        notes.push(format!("{}: max relative residual {worst:.2e} (< 1e-6)", case.name()));
    }
    Ok((ok, notes.join("; ")))
}

fn max_asym(m: &CsrMatrix) -> f64 {
    m.max_asymmetry() / m.max_abs().max(f64::MIN_POSITIVE)
}

fn criterion_8() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cube = Arc::new(build_structured_mesh(&BoxDomain::unit(3), &[2, 2, 2], 3).unwrap());
    for (name, mesh, raw, p, q) in [
        ("2D polygons P2-P2", polygon_mesh(6, 12, 3), two_network_parameters(), 2, 2),
        ("3D tetrahedra P1-P2", cube, MpetParameters::cube_verification(), 2, 1),
    ] {
        let dim = mesh.dim();
        let params = raw.validate(dim).map_err(|e| e.to_string())?;
        let nj = params.n_networks();
        let disc = Discretization::new(mesh, p, q, params, common::mixed_conditions(nj), PenaltyConfig::default())
            .map_err(|e| e.to_string())?;
        let sys = BlockSystem::assemble(&disc).map_err(|e| e.to_string())?;
        let mut sym: f64 = 0.0;
        for m in [&sys.m_u, &sys.k_u, &sys.m_p, &sys.k_p, &sys.coupling].into_iter().chain(&sys.a_blocks) {
            sym = sym.max(max_asym(m));
        }
        let spd = cholesky_succeeds(&sys.m_u) && cholesky_succeeds(&sys.m_p);
        let ku_pd = cholesky_succeeds(&sys.k_u);
        let mut min_ratio = f64::INFINITY;
        let n = sys.coupling.nrows();
        for _ in 0..1000 {
            let v = random_vec(&mut rng, n);
            let vv: f64 = v.iter().map(|x| x * x).sum();
            min_ratio = min_ratio.min(sys.coupling.quadratic_form(&v) / vv);
        }
        let psd = min_ratio >= -1e-12 * sys.coupling.max_abs();
        let pass = sym < 1e-12 && spd && ku_pd && psd;
        ok &= pass;
        notes.push(format!(
            "{name}: asymmetry {sym:.1e}, masses SPD {spd}, K_u PD {ku_pd}, coupling min v'Cv/v'v {min_ratio:.2e}"
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Check); 8] = [
        (1, "3D convergence", criterion_1),
        (2, "2D h-convergence", criterion_2),
        (3, "polygonal spectral convergence", criterion_3),
        (4, "Newmark energy conservation", criterion_4),
        (5, "energy stability", criterion_5),
        (6, "oracle equivalence", criterion_6),
        (7, "manufactured forcing residual", criterion_7),
        (8, "matrix properties", criterion_8),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} ({name}): {} [{:.1} s] {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
