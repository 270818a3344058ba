//! Linear solvers for the coupled step matrix: sparse LU (factor once, reuse)
//! with iterative refinement, and restarted GMRES with block-Jacobi
//! preconditioning.

use faer::prelude::Solve;
use faer::Mat;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{axpy, norm, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SolverKind {
    /// Direct below `AUTO_DIRECT_LIMIT` unknowns, GMRES above.
    #[default]
    Auto,
    Direct,
    Gmres {
        #[serde(default = "default_restart")]
        restart: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
}

fn default_restart() -> usize {
    200
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    20_000
}

/// Size above which `Auto` switches to GMRES; sparse LU fill on 3D DG
/// matrices grows too fast beyond this.
pub const AUTO_DIRECT_LIMIT: usize = 60_000;

impl SolverKind {
    pub fn gmres() -> Self {
        SolverKind::Gmres {
            restart: default_restart(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

pub trait LinearSolver: Send + Sync {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;

    /// Solve starting from the guess `x0`; direct solvers ignore it.
    fn solve_from(&self, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let _ = x0;
        self.solve(b)
    }
}

/// Prepares a solver for `a`; the direct variant factorizes here.
pub fn factorize(a: &CsrMatrix, kind: SolverKind) -> Result<Box<dyn LinearSolver>> {
    match kind {
        SolverKind::Auto if a.nrows() <= AUTO_DIRECT_LIMIT => Ok(Box::new(DirectSolver::new(a)?)),
        SolverKind::Auto => factorize(a, SolverKind::gmres()),
        SolverKind::Direct => Ok(Box::new(DirectSolver::new(a)?)),
        SolverKind::Gmres { restart, tol, max_iter } => Ok(Box::new(Gmres::new(a, restart, tol, max_iter)?)),
    }
}

/// LU of the symmetrically equilibrated matrix `S A S`, `S = |diag A|^{-1/2}`.
pub struct DirectSolver {
    a: CsrMatrix,
    scale: Vec<f64>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl DirectSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Solver("matrix is not square".into()));
        }
        let scale: Vec<f64> = a
            .diagonal()
            .iter()
            .map(|d| if d.abs() > 0.0 && d.is_finite() { 1.0 / d.abs().sqrt() } else { 1.0 })
            .collect();
        let scaled = CsrMatrix::from_triplets(
            a.nrows(),
            a.ncols(),
            a.triplets().map(|(i, j, v)| (i, j, v * scale[i] * scale[j])).collect(),
        );
        let lu = scaled
            .to_faer()
            .sp_lu()
            .map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(DirectSolver { a: a.clone(), scale, lu })
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let s = &self.scale;
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i] * s[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)] * s[i]).collect()
    }
}

impl LinearSolver for DirectSolver {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.raw_solve(b);
        let mut r = residual(&self.a, &x, b);
        let mut rn = norm(&r);
        // A couple of refinement sweeps recover accuracy lost to poor scaling.
        for _ in 0..3 {
            if !rn.is_finite() || rn <= 1e-15 * bn {
                break;
            }
            let dx = self.raw_solve(&r);
            let mut trial = x.clone();
            axpy(1.0, &dx, &mut trial);
            let tr = residual(&self.a, &trial, b);
            let trn = norm(&tr);
            if trn >= rn {
                break;
            }
            x = trial;
            r = tr;
            rn = trn;
        }
        if !rn.is_finite() || rn > 1e-6 * bn {
            return Err(Error::Solver(format!("direct solve residual {:.3e} (relative)", rn / bn)));
        }
        Ok(x)
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect()
}

/// Largest diagonal block inverted by the preconditioner.
const MAX_BLOCK: usize = 256;

/// Splits the rows into runs of consecutive rows with identical sparsity
/// patterns. For DG matrices these are the degrees of freedom of one element
/// and one field.
fn pattern_blocks(a: &CsrMatrix) -> Vec<std::ops::Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=a.nrows() {
        if i == a.nrows() || i - start >= MAX_BLOCK || a.row_indices(i) != a.row_indices(start) {
            blocks.push(start..i);
            start = i;
        }
    }
    blocks
}

/// Inverse of the diagonal block on `rows`, or of its diagonal if singular.
fn block_inverse(a: &CsrMatrix, rows: std::ops::Range<usize>) -> DMatrix<f64> {
    let n = rows.len();
    let block = DMatrix::from_fn(n, n, |i, j| a.get(rows.start + i, rows.start + j));
    block.clone().try_inverse().filter(|m| m.iter().all(|v| v.is_finite())).unwrap_or_else(|| {
        DMatrix::from_fn(n, n, |i, j| match (i == j, block[(i, i)]) {
            (true, d) if d != 0.0 => 1.0 / d,
            (true, _) => 1.0,
            _ => 0.0,
        })
    })
}

/// Restarted GMRES with left block-Jacobi preconditioning. Convergence is
/// declared on the preconditioned relative residual, which weighs the
/// displacement and pressure rows comparably however differently they scale.
pub struct Gmres {
    a: CsrMatrix,
    blocks: Vec<(std::ops::Range<usize>, DMatrix<f64>)>,
    restart: usize,
    tol: f64,
    max_iter: usize,
}

impl Gmres {
    pub fn new(a: &CsrMatrix, restart: usize, tol: f64, max_iter: usize) -> Result<Self> {
        if restart == 0 || !(tol > 0.0) {
            return Err(Error::Solver("GMRES needs restart >= 1 and tol > 0".into()));
        }
        let blocks = pattern_blocks(a)
            .into_iter()
            .map(|r| {
                let inv = block_inverse(a, r.clone());
                (r, inv)
            })
            .collect();
        Ok(Gmres {
            a: a.clone(),
            blocks,
            restart,
            tol,
            max_iter,
        })
    }

    fn precond(&self, v: &mut [f64]) {
        for (r, inv) in &self.blocks {
            let x = DVector::from_column_slice(&v[r.clone()]);
            v[r.clone()].copy_from_slice((inv * x).as_slice());
        }
    }
}

impl LinearSolver for Gmres {
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_from(b, &vec![0.0; b.len()])
    }

    fn solve_from(&self, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let mut pb = b.to_vec();
        self.precond(&mut pb);
        let bn = norm(&pb);
        if bn == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = x0.to_vec();
        let m = self.restart;
        let mut iters = 0;
        loop {
            let mut z = residual(&self.a, &x, b);
            self.precond(&mut z);
            let beta = norm(&z);
            let rel = beta / bn;
            if rel <= self.tol {
                return Ok(x);
            }
            if iters >= self.max_iter {
                return Err(Error::Solver(format!(
                    "GMRES did not converge in {iters} iterations (relative residual {rel:.3e})"
                )));
            }
            let target = self.tol * bn * 0.5;
            let mut basis: Vec<Vec<f64>> = vec![z.iter().map(|v| v / beta).collect()];
            let mut h = vec![vec![0.0; m]; m + 1];
            let mut cs = vec![0.0; m];
            let mut sn = vec![0.0; m];
            let mut g = vec![0.0; m + 1];
            g[0] = beta;
            let mut k_used = 0;
            for k in 0..m {
                let mut w = self.a.matvec(&basis[k]);
                self.precond(&mut w);
                // modified Gram-Schmidt, twice
                for _ in 0..2 {
                    for (i, v) in basis.iter().enumerate() {
                        let hij: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
                        h[i][k] += hij;
                        axpy(-hij, v, &mut w);
                    }
                }
                let wn = norm(&w);
                h[k + 1][k] = wn;
                for i in 0..k {
                    let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                    h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                    h[i][k] = t;
                }
                let denom = h[k][k].hypot(h[k + 1][k]);
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
                h[k][k] = denom;
                h[k + 1][k] = 0.0;
                g[k + 1] = -sn[k] * g[k];
                g[k] *= cs[k];
                k_used = k + 1;
                iters += 1;
                if g[k + 1].abs() <= target || wn == 0.0 || iters >= self.max_iter {
                    break;
                }
                basis.push(w.iter().map(|v| v / wn).collect());
            }
            let mut y = vec![0.0; k_used];
            for i in (0..k_used).rev() {
                let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            for (i, yi) in y.iter().enumerate() {
                axpy(*yi, &basis[i], &mut x);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver("GMRES produced non-finite iterate".into()));
            }
        }
    }
}

/// Whether the symmetric matrix `a` admits a sparse Cholesky factorization.
pub fn cholesky_succeeds(a: &CsrMatrix) -> bool {
    a.nrows() == a.ncols() && a.to_faer().sp_cholesky(faer::Side::Lower).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn test_matrix(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            if i + 1 < n {
                t.push((i, i + 1, rng.gen_range(-1.0..1.0)));
                t.push((i + 1, i, rng.gen_range(-1.0..1.0)));
            }
            let j = rng.gen_range(0..n);
            t.push((i, j, rng.gen_range(-0.5..0.5)));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn direct_and_gmres_agree() {
        let a = test_matrix(300, 1);
        let x_true: Vec<f64> = (0..300).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x_true);
        for kind in [SolverKind::Direct, SolverKind::Gmres { restart: 30, tol: 1e-12, max_iter: 5000 }] {
            let x = factorize(&a, kind).unwrap().solve(&b).unwrap();
            let err = x.iter().zip(&x_true).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{kind:?}: {err}");
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = test_matrix(10, 2);
        assert_eq!(factorize(&a, SolverKind::gmres()).unwrap().solve(&[0.0; 10]).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn pattern_blocks_group_element_rows() {
        // Two dense 2x2 blocks coupled by one off-diagonal pair.
        let mut t = Vec::new();
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)] {
            t.push((r, c, if r == c { 3.0 } else { 1.0 }));
        }
        t.push((0, 2, 0.5));
        t.push((1, 2, 0.5));
        let a = CsrMatrix::from_triplets(4, 4, t);
        assert_eq!(pattern_blocks(&a), vec![0..2, 2..4]);
        // Dense 2x2 inverse of [[3, 1], [1, 3]].
        let inv = block_inverse(&a, 0..2);
        assert!((inv[(0, 0)] - 0.375).abs() < 1e-15 && (inv[(0, 1)] + 0.125).abs() < 1e-15);
    }

    #[test]
    fn gmres_returns_exact_guess_untouched() {
        let a = test_matrix(50, 4);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let b = a.matvec(&x_true);
        let x = factorize(&a, SolverKind::gmres()).unwrap().solve_from(&b, &x_true).unwrap();
        assert_eq!(x, x_true);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let spd = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        assert!(cholesky_succeeds(&spd));
        let ind = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(!cholesky_succeeds(&ind));
    }
}
