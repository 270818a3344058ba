use super::*;
use crate::config::parse_config_str;

fn custom(divisions: &str, degrees: &str, mode: &str) -> ValidatedConfig {
    let text = format!(
        r#"
test_case = "custom"
dim = 2
degrees = {degrees}
[mesh]
kind = "structured"
divisions = {divisions}
[time]
dt = 0.05
t_final = 0.1
[study]
mode = "{mode}"
[parameters]
rho = 1.0
lambda = 2.0
mu = 1.0
beta = [[0.0, 0.5], [0.5, 0.0]]
[[parameters.networks]]
alpha = 0.3
c = 0.2
permeability = 1.0
viscosity = 1.0
[[parameters.networks]]
alpha = 0.5
c = 0.1
permeability = 2.0
viscosity = 1.0
beta_e = 0.1
"#
    );
    parse_config_str(&text, Path::new(".")).unwrap()
}

#[test]
fn exactly_representable_solution_has_no_error() {
    let cfg = custom("[2]", "[{ p = 2, q = 2 }]", "h");
    let case = Arc::new(cfg.manufactured_case().unwrap());
    let sim = simulate(
        &cfg,
        &case,
        cfg.build_mesh(0).unwrap(),
        cfg.raw.degrees[0],
        &cfg.raw.time,
        &SimulationOptions {
            energy_stride: 1,
            dump_matrices: None,
            snapshots: None,
        },
    )
    .unwrap();
    assert!(sim.report.err_u_dg < 1e-8, "{:?}", sim.report);
    assert!(sim.report.err_p_l2 < 1e-8, "{:?}", sim.report);
    assert!((sim.report.t_eval - 0.1).abs() < 1e-14);
    assert_eq!(sim.steps, 2);
    assert_eq!(sim.energy.len(), 3);
}

#[test]
fn h_study_produces_rates_and_is_deterministic() {
    let cfg = custom("[2, 4, 8]", "[{ p = 1, q = 1 }]", "h");
    let a = run_convergence_study(&cfg).unwrap();
    assert_eq!(a.failures(), 0);
    assert_eq!(a.tables.len(), 1);
    let rows = &a.tables[0].rows;
    assert_eq!(rows.len(), 3);
    let (ru, rp) = a.tables[0].last_rates();
    assert!(ru > 0.7 && ru < 1.6, "{ru}");
    assert!(rp > 1.6, "{rp}");
    let lines: Vec<&str> = a.csv.lines().collect();
    assert_eq!(lines[0], RATE_CSV_HEADER);
    assert_eq!(lines[1], "# P1-P1");
    assert_eq!(lines.len(), 5);
    let b = run_convergence_study(&cfg).unwrap();
    assert_eq!(a.csv, b.csv);
    let mut par = cfg.clone();
    par.raw.study.parallel = true;
    assert_eq!(run_convergence_study(&par).unwrap().csv, a.csv);
}

#[test]
fn p_study_lists_degrees() {
    let cfg = custom("[3]", "[{ p = 1, q = 1 }, { p = 2, q = 2 }]", "p");
    let out = run_convergence_study(&cfg).unwrap();
    let lines: Vec<&str> = out.csv.lines().collect();
    assert_eq!(lines[0], DEGREE_CSV_HEADER);
    assert!(lines[1].starts_with("1,1,"));
    assert!(lines[2].starts_with("2,2,"));
    let err = |l: &str| l.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    assert!(err(lines[2]) < 1e-3 * err(lines[1]));
}

#[test]
fn empty_divisions_fail_before_assembly() {
    let mut cfg = custom("[2]", "[{ p = 1, q = 1 }]", "h");
    cfg.raw.mesh = MeshSpec::Structured {
        divisions: vec![],
        min: None,
        max: None,
    };
    assert!(matches!(run_convergence_study(&cfg), Err(Error::Config(_))));
}

#[test]
fn failed_points_become_comment_rows() {
    let cfg = custom("[2, 4, 8]", "[{ p = 1, q = 1 }]", "h");
    let report = |h: f64, e: f64| ErrorReport {
        h,
        p: 1,
        q: 1,
        err_u_dg: e,
        err_p_l2: e,
        err_p_dg: vec![],
        t_eval: 0.1,
    };
    let d = cfg.raw.degrees[0];
    let points = vec![
        SweepPoint { degrees: d, mesh: 0, outcome: Ok(report(0.5, 1.0)) },
        SweepPoint { degrees: d, mesh: 1, outcome: Err("linear solver failed".into()) },
        SweepPoint { degrees: d, mesh: 2, outcome: Ok(report(0.125, 0.25)) },
    ];
    let (tables, csv) = h_tables(&cfg, &points).unwrap();
    assert_eq!(tables[0].rows.len(), 2);
    assert!((tables[0].last_rates().0 - 1.0).abs() < 1e-12);
    assert!(csv.lines().any(|l| l == "# failed P1-P1 mesh 1: linear solver failed"));
    let csv = degree_csv(&points);
    assert_eq!(csv.lines().filter(|l| l.starts_with("# failed")).count(), 1);
}

#[test]
fn single_run_writes_artifacts() {
    let mut cfg = custom("[2]", "[{ p = 1, q = 1 }]", "h");
    cfg.raw.output.energy_stride = 1;
    let dir = tempfile::tempdir().unwrap();
    let out = run_single(&cfg, dir.path(), true).unwrap();
    let names: Vec<String> = out
        .files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["errors.csv", "energy.csv", "fields.vtk"]);
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert!(errors.starts_with("p,q,h,t,err_u_dg,err_p_l2,err_p1_dg,err_p2_dg\n1,1,"));
    let energy = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 4);
    assert!(dir.path().join("matrices/K_u.txt").exists());
}
