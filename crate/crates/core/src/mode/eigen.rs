//! Shift-invert Krylov–Schur eigensolver for sparse complex matrices.
//!
//! Eigenvalues of `A` nearest a shift `σ` are the dominant eigenvalues
//! `θ = 1/(λ - σ)` of `B = (A - σI)⁻¹`. `B` is applied through a sparse LU
//! factorization; the Krylov basis is restarted by keeping an orthonormal
//! basis of the wanted Ritz subspace, which preserves the Krylov–Schur
//! relation `B·V = V·H + v·bᵀ` without reordering a Schur form.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, LuSymbolicParams, NumericLu, SymbolicLu};
use faer::sparse::SparseColMat;
use faer::{Conj, MatMut, Par};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

type C = Complex64;
const ZERO: C = C { re: 0.0, im: 0.0 };

/// `x ↦ (A - σI)⁻¹ x` through a sparse LU factorization.
pub struct ShiftInvert {
    n: usize,
    sigma: C,
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, C>,
    scratch: MemBuffer,
}

impl ShiftInvert {
    pub fn new(a: &CsrMatrix, sigma: C) -> Result<Self> {
        let n = a.nrows();
        let shifted = a.shifted(-sigma);
        let mat = SparseColMat::<usize, C>::try_new_from_triplets(n, n, &shifted.triplets())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let symbolic = factorize_symbolic_lu(mat.symbolic(), LuSymbolicParams::default())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let mut numeric = NumericLu::new();
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<C>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_lu(&mut numeric, mat.as_ref(), Par::Seq, MemStack::new(&mut mem), Default::default())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let scratch = MemBuffer::new(symbolic.solve_in_place_scratch::<C>(1, Par::Seq));
        Ok(Self { n, sigma, symbolic, numeric, scratch })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> C {
        self.sigma
    }

    /// Overwrites `x` with `(A - σI)⁻¹ x`.
    pub fn apply(&mut self, x: &mut [C]) {
        assert_eq!(x.len(), self.n);
        let lu = LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let rhs = MatMut::from_column_major_slice_mut(x, self.n, 1);
        lu.solve_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut self.scratch));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Number of eigenpairs wanted.
    pub nev: usize,
    /// Largest Krylov subspace dimension.
    pub krylov_dim: usize,
    /// Relative residual `‖Bx - θx‖ / (|θ|·‖x‖)` required of each pair.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { nev: 6, krylov_dim: 40, tol: 1e-10, max_restarts: 50, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Eigenvalue of `A`.
    pub value: C,
    /// Unit-norm eigenvector.
    pub vector: Vec<C>,
    /// Relative residual in shift-invert form.
    pub residual: f64,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonalizes `w` against `basis` with two classical Gram–Schmidt passes;
/// returns the accumulated coefficients.
fn orthogonalize(basis: &[Vec<C>], w: &mut [C]) -> Vec<C> {
    let mut coeffs = vec![ZERO; basis.len()];
    for _ in 0..2 {
        for (k, v) in basis.iter().enumerate() {
            let h = dot(v, w);
            coeffs[k] += h;
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= h * vi;
            }
        }
    }
    coeffs
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Eigenvalues and unit eigenvectors of a small dense matrix, via its
/// complex Schur form.
fn dense_eig(h: &DMatrix<C>) -> (Vec<C>, DMatrix<C>) {
    let m = h.nrows();
    let (q, t) = nalgebra::Schur::new(h.clone()).unpack();
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut vecs = DMatrix::<C>::zeros(m, m);
    for i in 0..m {
        let lam = t[(i, i)];
        let mut x = vec![ZERO; m];
        x[i] = C::new(1.0, 0.0);
        for k in (0..i).rev() {
            let s: C = (k + 1..=i).map(|l| t[(k, l)] * x[l]).sum();
            let mut d = t[(k, k)] - lam;
            if d.norm() < f64::EPSILON * scale {
                d = C::new(f64::EPSILON * scale, 0.0);
            }
            x[k] = -s / d;
        }
        let y = &q * nalgebra::DVector::from_vec(x);
        let nrm = y.norm();
        vecs.set_column(i, &(y / C::new(nrm, 0.0)));
    }
    let vals = (0..m).map(|i| t[(i, i)]).collect();
    (vals, vecs)
}

/// Finds the `nev` eigenvalues of `a` closest to `sigma`, ordered by
/// increasing distance from it.
pub fn eigs_near(a: &CsrMatrix, sigma: C, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>> {
    let mut op = ShiftInvert::new(a, sigma)?;
    eigs_shift_invert(&mut op, opts)
}

pub fn eigs_shift_invert(op: &mut ShiftInvert, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if opts.nev == 0 {
        return Ok(Vec::new());
    }
    if opts.nev >= n {
        return Err(Error::config(format!("requested {} eigenpairs of a {n}-dimensional operator", opts.nev)));
    }
    let m = opts.krylov_dim.clamp(2 * opts.nev + 2, n);
    let keep = (opts.nev + (m - opts.nev) / 2).min(m - 1).max(opts.nev);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Krylov–Schur state: `basis[0..k]` with projected block `h[0..k, 0..k]`,
    // coupling row `h[k, 0..k]` and continuation vector `basis[k]`.
    let mut h = DMatrix::<C>::zeros(m + 1, m);
    let mut basis: Vec<Vec<C>> = Vec::with_capacity(m + 1);
    let mut v0 = random_vector(&mut rng, n);
    let nrm = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nrm);
    basis.push(v0);
    let mut k = 0usize;
    let mut worst = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        for j in k..m {
            let mut w = basis[j].clone();
            op.apply(&mut w);
            let wnorm0 = norm(&w);
            let coeffs = orthogonalize(&basis[..=j], &mut w);
            for (r, c) in coeffs.into_iter().enumerate() {
                h[(r, j)] += c;
            }
            let mut beta = norm(&w);
            if beta <= 1e-13 * wnorm0 {
                // Invariant subspace found: continue with a fresh direction.
                beta = 0.0;
                w = random_vector(&mut rng, n);
                orthogonalize(&basis[..=j], &mut w);
                let nw = norm(&w);
                w.iter_mut().for_each(|x| *x /= nw);
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
            }
            h[(j + 1, j)] = C::new(beta, 0.0);
            basis.push(w);
        }

        let hm = h.view((0, 0), (m, m)).into_owned();
        let (theta, y) = dense_eig(&hm);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()).then(a.cmp(&b)));

        let resid = |i: usize| -> f64 {
            let r: C = (0..m).map(|c| h[(m, c)] * y[(c, i)]).sum();
            r.norm() / theta[i].norm()
        };
        worst = order[..opts.nev].iter().map(|&i| resid(i)).fold(0.0, f64::max);
        if worst <= opts.tol || restart == opts.max_restarts {
            if worst > opts.tol {
                break;
            }
            let mut out = Vec::with_capacity(opts.nev);
            for &i in &order[..opts.nev] {
                let mut x = vec![ZERO; n];
                for (c, v) in basis[..m].iter().enumerate() {
                    let yc = y[(c, i)];
                    for (xi, vi) in x.iter_mut().zip(v) {
                        *xi += yc * vi;
                    }
                }
                let nx = norm(&x);
                x.iter_mut().for_each(|v| *v /= nx);
                let mut bx = x.clone();
                op.apply(&mut bx);
                let th = theta[i];
                let res = bx.iter().zip(&x).map(|(b, v)| (b - th * v).norm_sqr()).sum::<f64>().sqrt() / th.norm();
                out.push(EigenPair { value: op.sigma() + C::new(1.0, 0.0) / th, vector: x, residual: res });
            }
            return Ok(out);
        }

        // Restart on an orthonormal basis W of the `keep` dominant Ritz vectors.
        let mut yk = DMatrix::<C>::zeros(m, keep);
        for (c, &i) in order[..keep].iter().enumerate() {
            yk.set_column(c, &y.column(i));
        }
        let w = yk.qr().q();
        let s = w.adjoint() * &hm * &w;
        let b = h.row(m) * &w;
        let mut new_basis: Vec<Vec<C>> = Vec::with_capacity(m + 1);
        for c in 0..keep {
            let mut v = vec![ZERO; n];
            for (r, bv) in basis[..m].iter().enumerate() {
                let coef = w[(r, c)];
                for (vi, bi) in v.iter_mut().zip(bv) {
                    *vi += coef * bi;
                }
            }
            new_basis.push(v);
        }
        new_basis.push(basis.swap_remove(m));
        basis = new_basis;
        h.fill(ZERO);
        h.view_mut((0, 0), (keep, keep)).copy_from(&s);
        h.view_mut((keep, 0), (1, keep)).copy_from(&b);
        k = keep;
    }
    Err(Error::NoConvergence { iterations: opts.max_restarts, residual: worst })
}
