//! Lowest eigenpairs of sparse hermitian operators.
//!
//! Small problems (`dim ≤ dense_threshold`) go through a dense hermitian
//! eigendecomposition. Larger ones use a thick-restart Lanczos iteration with
//! full reorthogonalization; eigenpairs are found one at a time and locked, so
//! degenerate levels come out with orthogonal vectors. Every returned pair
//! carries a residual certificate `‖Hv − Ev‖ ≤ eig_tol·(|E| + scale)`, where
//! `scale` is a power-iteration estimate of `‖H‖`.
//!
//! Operators with purely real entries (all model Hamiltonians) are solved in
//! real arithmetic.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    displacement_sum_op, spin_ops, CsrMatrix, Factor, QuantumState, SparseOperator, C64,
};

const POWER_ITERATIONS: usize = 20;
const FIRST_CUTOFF: usize = 16;
const MAX_CUTOFF: usize = 4096;
/// Hilbert-space dimension beyond which the cutoff search gives up.
const MAX_AUTO_DIM: usize = 1 << 21;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Relative residual tolerance.
    pub eig_tol: f64,
    /// Matrix–vector product budget per eigenpair.
    pub max_lanczos_iters: usize,
    /// Dimensions up to this use dense diagonalization.
    pub dense_threshold: usize,
    /// Seed of the pseudo-random start vectors.
    pub seed: u64,
    /// Krylov basis size held between restarts.
    pub krylov_dim: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            eig_tol: 1e-10,
            max_lanczos_iters: 500,
            dense_threshold: 2000,
            seed: 7,
            krylov_dim: 80,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eig_tol > 0.0 && self.eig_tol < 1e-4) {
            return Err(Error::InvalidParameter(format!(
                "eig_tol {} must be in (0, 1e-4)",
                self.eig_tol
            )));
        }
        if self.max_lanczos_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_lanczos_iters must be positive".into(),
            ));
        }
        if self.krylov_dim < 4 {
            return Err(Error::InvalidParameter("krylov_dim must be >= 4".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending.
    pub energies: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub residual_norms: Vec<f64>,
    /// Fock cutoff of the first factor, when it is a Fock factor.
    pub cutoff_used: Option<usize>,
    /// Estimate of `‖H‖` used to normalize residuals.
    pub spectral_scale: f64,
    /// Matrix–vector products spent (0 for dense solves).
    pub iterations: usize,
    pub method: Method,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground(&self) -> &QuantumState {
        &self.states[0]
    }
}

/// Lowest eigenpair.
pub fn ground_state(h: &SparseOperator, cfg: &SolveConfig) -> Result<SpectrumResult> {
    low_spectrum(h, 1, cfg)
}

/// The `k` lowest eigenpairs, ascending.
pub fn low_spectrum(h: &SparseOperator, k: usize, cfg: &SolveConfig) -> Result<SpectrumResult> {
    cfg.validate()?;
    if !h.is_hermitian() {
        return Err(Error::NonHermitian);
    }
    let dim = h.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let raw = match h.to_real_csr() {
        Some(csr) => solve_generic(&csr, k, cfg)?.into_complex(),
        None => solve_generic(&h.to_csr(), k, cfg)?,
    };
    let states = raw
        .vectors
        .into_iter()
        .map(|v| QuantumState::normalized(h.space().clone(), v))
        .collect::<Result<Vec<_>>>()?;
    let cutoff_used = match h.space().factors()[0] {
        Factor::Fock { cutoff } => Some(cutoff),
        _ => None,
    };
    Ok(SpectrumResult {
        energies: raw.values,
        states,
        residual_norms: raw.residuals,
        cutoff_used,
        spectral_scale: raw.scale,
        iterations: raw.iterations,
        method: raw.method,
    })
}

struct RawSpectrum<T> {
    values: Vec<f64>,
    vectors: Vec<Vec<T>>,
    residuals: Vec<f64>,
    scale: f64,
    iterations: usize,
    method: Method,
}

impl RawSpectrum<f64> {
    fn into_complex(self) -> RawSpectrum<C64> {
        RawSpectrum {
            values: self.values,
            vectors: self
                .vectors
                .into_iter()
                .map(|v| v.into_iter().map(|x| C64::new(x, 0.0)).collect())
                .collect(),
            residuals: self.residuals,
            scale: self.scale,
            iterations: self.iterations,
            method: self.method,
        }
    }
}

trait Scalar: ComplexField<RealField = f64> + Copy {
    /// All eigenpairs of a dense hermitian matrix, eigenvectors as columns.
    fn dense_eigh(m: DMatrix<Self>) -> (Vec<f64>, DMatrix<Self>);
}

impl Scalar for f64 {
    fn dense_eigh(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let n = m.nrows();
        let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
        match fm.self_adjoint_eigen(faer::Side::Lower) {
            Ok(eig) => {
                let values = (0..n).map(|i| eig.S().column_vector()[i]).collect();
                let vectors = DMatrix::from_fn(n, n, |i, j| eig.U()[(i, j)]);
                (values, vectors)
            }
            Err(_) => {
                let eig = SymmetricEigen::new(m);
                (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
            }
        }
    }
}

impl Scalar for C64 {
    fn dense_eigh(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(m);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * *xi);
}

fn scale_in_place<T: Scalar>(v: &mut [T], s: f64) {
    v.iter_mut().for_each(|x| *x = x.scale(s));
}

/// Two passes of classical Gram–Schmidt against `basis`; returns the summed
/// coefficients.
fn orthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) -> Vec<T> {
    let mut coeffs = vec![T::zero(); basis.len()];
    for _ in 0..2 {
        for (c, b) in coeffs.iter_mut().zip(basis) {
            let h = dot(b, w);
            axpy(-h, b, w);
            *c += h;
        }
    }
    coeffs
}

fn random_vector<T: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<T> {
    (0..dim)
        .map(|_| T::from_real(rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Fixes the global phase: the largest-magnitude component is real positive.
fn fix_phase<T: Scalar>(v: &mut [T]) {
    let Some(pivot) = v
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.modulus().total_cmp(&b.1.modulus()).then(b.0.cmp(&a.0)))
        .map(|(_, x)| x)
    else {
        return;
    };
    let m = pivot.modulus();
    if m == 0.0 {
        return;
    }
    let phase = pivot.conjugate().unscale(m);
    v.iter_mut().for_each(|x| *x *= phase);
}

fn residual_norm<T: Scalar>(a: &CsrMatrix<T>, value: f64, v: &[T]) -> f64 {
    let mut hv = vec![T::zero(); v.len()];
    a.matvec(v, &mut hv);
    axpy(T::from_real(-value), v, &mut hv);
    norm(&hv)
}

/// Residual of the operator restricted to the complement of `locked`.
fn deflated_residual<T: Scalar>(a: &CsrMatrix<T>, locked: &[Vec<T>], value: f64, v: &[T]) -> f64 {
    let mut hv = vec![T::zero(); v.len()];
    a.matvec(v, &mut hv);
    orthogonalize(locked, &mut hv);
    axpy(T::from_real(-value), v, &mut hv);
    norm(&hv)
}

fn spectral_scale<T: Scalar>(a: &CsrMatrix<T>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5ca1e);
    let mut v: Vec<T> = random_vector(&mut rng, a.dim);
    let mut hv = vec![T::zero(); a.dim];
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let n = norm(&v);
        if n == 0.0 {
            return 0.0;
        }
        scale_in_place(&mut v, 1.0 / n);
        a.matvec(&v, &mut hv);
        est = norm(&hv);
        std::mem::swap(&mut v, &mut hv);
    }
    est
}

/// Locking is stricter than the certificate so the final rotation over the
/// locked block stays inside it.
const LOCK_MARGIN: f64 = 0.25;

fn solve_generic<T: Scalar>(
    a: &CsrMatrix<T>,
    k: usize,
    cfg: &SolveConfig,
) -> Result<RawSpectrum<T>> {
    let scale = spectral_scale(a, cfg.seed);
    let tolerance = |value: f64| cfg.eig_tol * (value.abs() + scale);

    if a.dim <= cfg.dense_threshold {
        let (eigenvalues, eigenvectors) = T::dense_eigh(a.to_dense());
        let mut order: Vec<usize> = (0..a.dim).collect();
        order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
        let mut out = RawSpectrum {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            scale,
            iterations: 0,
            method: Method::Dense,
        };
        for &i in order.iter().take(k) {
            let value = eigenvalues[i];
            let mut v: Vec<T> = eigenvectors.column(i).iter().copied().collect();
            fix_phase(&mut v);
            let res = residual_norm(a, value, &v);
            if res > tolerance(value) {
                return Err(Error::NotConverged {
                    iterations: 0,
                    residual: res,
                });
            }
            out.values.push(value);
            out.vectors.push(v);
            out.residuals.push(res);
        }
        return Ok(out);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut locked: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut iterations = 0;
    for _ in 0..k {
        let start = random_vector(&mut rng, a.dim);
        let pair = lowest_in_complement(a, &locked, start, cfg, scale, &tolerance)?;
        iterations += pair.iterations;
        locked.push(pair.vector);
    }

    // locked vectors only satisfy the deflated problem; a Rayleigh–Ritz pass
    // over their span removes the coupling between them
    let hv: Vec<Vec<T>> = locked
        .iter()
        .map(|v| {
            let mut out = vec![T::zero(); a.dim];
            a.matvec(v, &mut out);
            out
        })
        .collect();
    let small = DMatrix::<T>::from_fn(k, k, |i, j| dot(&locked[i], &hv[j]));
    let small = (&small + small.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(small);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut out = RawSpectrum {
        values: vec![],
        vectors: vec![],
        residuals: vec![],
        scale,
        iterations,
        method: Method::Lanczos,
    };
    for i in order {
        let y: Vec<T> = eig.eigenvectors.column(i).iter().copied().collect();
        let mut v = combine(&locked, &y);
        let n = norm(&v);
        scale_in_place(&mut v, 1.0 / n);
        let value = eig.eigenvalues[i];
        let res = residual_norm(a, value, &v);
        if res > tolerance(value) {
            return Err(Error::NotConverged {
                iterations,
                residual: res,
            });
        }
        fix_phase(&mut v);
        out.values.push(value);
        out.residuals.push(res);
        out.vectors.push(v);
    }
    Ok(out)
}

struct Pair<T> {
    vector: Vec<T>,
    iterations: usize,
}

/// Lowest eigenpair of `H` restricted to the orthogonal complement of
/// `locked`, by thick-restart Lanczos.
fn lowest_in_complement<T: Scalar>(
    a: &CsrMatrix<T>,
    locked: &[Vec<T>],
    mut start: Vec<T>,
    cfg: &SolveConfig,
    scale: f64,
    tolerance: &dyn Fn(f64) -> f64,
) -> Result<Pair<T>> {
    let available = a.dim - locked.len();
    let m = cfg.krylov_dim.min(available);
    let keep = (m / 2).max(1);

    orthogonalize(locked, &mut start);
    let n0 = norm(&start);
    if n0 == 0.0 {
        return Err(Error::NotConverged {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    scale_in_place(&mut start, 1.0 / n0);

    let mut basis: Vec<Vec<T>> = vec![start];
    let mut proj = DMatrix::<T>::zeros(m, m);
    let mut w = vec![T::zero(); a.dim];
    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;

    loop {
        // expand the basis to m vectors (plus the trailing residual direction)
        let mut beta = 0.0;
        let mut breakdown = false;
        while basis.len() <= m {
            let j = basis.len() - 1;
            a.matvec(&basis[j], &mut w);
            iterations += 1;
            // locked directions are lifted above the spectrum rather than
            // projected to zero, which would plant a spurious level at 0
            orthogonalize(locked, &mut w);
            for v in locked {
                let c = dot(v, &basis[j]);
                axpy(c * T::from_real(2.0 * scale), v, &mut w);
            }
            let h = orthogonalize(&basis, &mut w);
            // the lift amplifies any rounding-level locked component, so keep
            // the next basis vector strictly in the complement
            orthogonalize(locked, &mut w);
            for (i, &hi) in h.iter().enumerate().take(j) {
                proj[(i, j)] = hi;
                proj[(j, i)] = hi.conjugate();
            }
            proj[(j, j)] = T::from_real(h[j].real());
            beta = norm(&w);

            let size = j + 1;
            let converged_check = size == m || size % 8 == 0 || iterations >= cfg.max_lanczos_iters;
            if beta <= 1e-12 * scale || size == available {
                breakdown = true;
            }
            if breakdown || converged_check {
                let (theta, y) = lowest_ritz(&proj, size);
                let estimate = if breakdown {
                    0.0
                } else {
                    beta * y[size - 1].modulus()
                };
                if estimate <= LOCK_MARGIN * tolerance(theta) || breakdown {
                    let mut vector = combine(&basis[..size], &y);
                    orthogonalize(locked, &mut vector);
                    let n = norm(&vector);
                    scale_in_place(&mut vector, 1.0 / n);
                    let residual = deflated_residual(a, locked, theta, &vector);
                    best_residual = best_residual.min(residual);
                    if residual <= LOCK_MARGIN * tolerance(theta) {
                        return Ok(Pair { vector, iterations });
                    }
                    if breakdown {
                        return Err(Error::NotConverged {
                            iterations,
                            residual,
                        });
                    }
                } else {
                    best_residual = best_residual.min(estimate);
                }
                if iterations >= cfg.max_lanczos_iters {
                    return Err(Error::NotConverged {
                        iterations,
                        residual: best_residual,
                    });
                }
                if size == m {
                    break;
                }
            }
            let mut next = w.clone();
            scale_in_place(&mut next, 1.0 / beta);
            basis.push(next);
        }

        // thick restart: keep the lowest Ritz vectors and the residual direction
        let eig = SymmetricEigen::new(proj.view((0, 0), (m, m)).into_owned());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut kept = Vec::with_capacity(keep + 1);
        for &i in order.iter().take(keep) {
            let y: Vec<T> = eig.eigenvectors.column(i).iter().copied().collect();
            kept.push(combine(&basis[..m], &y));
        }
        let mut residual_dir = w.clone();
        scale_in_place(&mut residual_dir, 1.0 / beta);
        for v in kept.iter_mut() {
            orthogonalize(locked, v);
        }
        // re-orthogonalize the kept block against rounding drift
        for i in 0..kept.len() {
            let (done, rest) = kept.split_at_mut(i);
            orthogonalize(done, &mut rest[0]);
            let n = norm(&rest[0]);
            scale_in_place(&mut rest[0], 1.0 / n);
        }
        orthogonalize(&kept, &mut residual_dir);
        let n = norm(&residual_dir);
        scale_in_place(&mut residual_dir, 1.0 / n);

        proj.fill(T::zero());
        for (slot, &i) in order.iter().take(keep).enumerate() {
            proj[(slot, slot)] = T::from_real(eig.eigenvalues[i]);
        }
        basis = kept;
        basis.push(residual_dir);
    }
}

fn lowest_ritz<T: Scalar>(proj: &DMatrix<T>, size: usize) -> (f64, Vec<T>) {
    let eig = SymmetricEigen::new(proj.view((0, 0), (size, size)).into_owned());
    let i = (0..size)
        .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
        .expect("size >= 1");
    (
        eig.eigenvalues[i],
        eig.eigenvectors.column(i).iter().copied().collect(),
    )
}

fn combine<T: Scalar>(basis: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); basis[0].len()];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(c, b, &mut out);
    }
    out
}

/// The two polariton frequencies read off the spectrum above the ground
/// state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolaritonGaps {
    pub lower: f64,
    pub upper: f64,
    /// Fraction of the probe spectral weight carried by each peak.
    pub lower_weight: f64,
    pub upper_weight: f64,
    pub ground_energy: f64,
}

const MAX_PROBE_BLOCKS: usize = 30;

/// Generalized vacuum Rabi splitting: the two bright excitation frequencies
/// `(ω̃, Ω̃)` of a two-factor Hamiltonian.
///
/// The factors are probed with their coordinate operators (`a + a†` for Fock
/// factors, `Sx` for spin factors) acting on the ground state. A block Krylov
/// space grown from these probe vectors is diagonalized and the two Ritz
/// values carrying the largest probe weight are returned as excitation
/// energies above the ground state. For quadratic Hamiltonians the probe span
/// is exactly the one-polariton subspace, so the first block is already exact;
/// this also picks the upper polariton correctly when multi-quantum levels of
/// the lower one (`2ω̃, 3ω̃, …`) lie below it.
pub fn gap_frequencies(h: &SparseOperator, cfg: &SolveConfig) -> Result<(f64, f64)> {
    let gaps = polariton_gaps(h, cfg)?;
    Ok((gaps.lower, gaps.upper))
}

pub fn polariton_gaps(h: &SparseOperator, cfg: &SolveConfig) -> Result<PolaritonGaps> {
    if h.space().factors().len() != 2 {
        return Err(Error::InvalidParameter(
            "gap extraction needs a two-factor Hamiltonian".into(),
        ));
    }
    let ground = ground_state(h, cfg)?;
    let e0 = ground.ground_energy();
    let psi = ground.ground().amplitudes();
    let space = h.space();

    let mut probes = Vec::with_capacity(2);
    for (slot, factor) in space.factors().iter().enumerate() {
        let op = match factor {
            Factor::Fock { .. } => displacement_sum_op(space, slot)?,
            Factor::Spin { .. } => spin_ops(space, slot)?.x,
        };
        probes.push(op.apply_vec(psi)?);
    }

    let csr = h.to_csr();
    let scale = ground.spectral_scale;
    let tol = |v: f64| cfg.eig_tol.sqrt() * (v.abs() + scale);

    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut block: Vec<Vec<C64>> = Vec::new();
    let ground_vec = vec![psi.to_vec()];
    for mut p in probes.iter().cloned() {
        orthogonalize(&ground_vec, &mut p);
        orthogonalize(&basis, &mut p);
        let n = norm(&p);
        if n > 1e-12 {
            scale_in_place(&mut p, 1.0 / n);
            basis.push(p.clone());
            block.push(p);
        }
    }
    if basis.is_empty() {
        return Err(Error::InvalidParameter(
            "probe operators annihilate the ground state".into(),
        ));
    }

    let mut last: Option<PolaritonGaps> = None;
    for _ in 0..MAX_PROBE_BLOCKS {
        let size = basis.len();
        let mut hb: Vec<Vec<C64>> = Vec::with_capacity(size);
        for b in &basis {
            let mut out = vec![C64::new(0.0, 0.0); b.len()];
            csr.matvec(b, &mut out);
            hb.push(out);
        }
        let mut proj = DMatrix::<C64>::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = dot(&basis[i], &hb[j]);
                proj[(i, j)] = v;
                proj[(j, i)] = v.conj();
            }
            proj[(i, i)] = C64::new(proj[(i, i)].re, 0.0);
        }
        let eig = SymmetricEigen::new(proj);

        let weights: Vec<f64> = (0..size)
            .map(|r| {
                let ritz = combine(
                    &basis,
                    &eig.eigenvectors
                        .column(r)
                        .iter()
                        .copied()
                        .collect::<Vec<_>>(),
                );
                let w: f64 = probes.iter().map(|p| dot(&ritz, p).norm_sqr()).sum();
                w
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut by_weight: Vec<usize> = (0..size).collect();
        by_weight.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]).then(i.cmp(&j)));
        let mut picked = [by_weight[0], *by_weight.get(1).unwrap_or(&by_weight[0])];
        picked.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let mut converged = true;
        for &r in &picked {
            let y: Vec<C64> = eig.eigenvectors.column(r).iter().copied().collect();
            let mut res = combine(&hb, &y);
            let x = combine(&basis, &y);
            axpy(C64::new(-eig.eigenvalues[r], 0.0), &x, &mut res);
            if norm(&res) > tol(eig.eigenvalues[r]) {
                converged = false;
            }
        }
        let gaps = PolaritonGaps {
            lower: eig.eigenvalues[picked[0]] - e0,
            upper: eig.eigenvalues[picked[1]] - e0,
            lower_weight: weights[picked[0]] / total,
            upper_weight: weights[picked[1]] / total,
            ground_energy: e0,
        };
        last = Some(gaps);
        if converged {
            break;
        }

        // next block: H applied to the newest block, orthogonalized
        let mut next = Vec::with_capacity(block.len());
        for b in &block {
            let mut v = vec![C64::new(0.0, 0.0); b.len()];
            csr.matvec(b, &mut v);
            orthogonalize(&ground_vec, &mut v);
            orthogonalize(&basis, &mut v);
            let n = norm(&v);
            if n > 1e-10 * scale.max(1.0) {
                scale_in_place(&mut v, 1.0 / n);
                basis.push(v.clone());
                next.push(v);
            }
        }
        if next.is_empty() {
            break;
        }
        block = next;
    }

    let gaps = last.expect("at least one block is evaluated");
    if gaps.lower < 1e-6 * gaps.upper {
        return Err(Error::IllConditionedGap { gap: gaps.lower });
    }
    Ok(gaps)
}

/// Population of basis states in which any Fock factor sits at its top level.
pub fn top_level_population(state: &QuantumState) -> f64 {
    let space = state.space();
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(flat, _)| {
            space
                .local_indices(*flat)
                .iter()
                .zip(space.factors())
                .any(|(&i, f)| matches!(f, Factor::Fock { cutoff } if i == *cutoff))
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// `⟨a†a⟩` of the Fock factor at slot 0, optionally restricted to levels
/// `n ≤ max_level` and renormalized.
fn field_occupation(state: &QuantumState, max_level: Option<usize>) -> Result<f64> {
    let space = state.space();
    let Factor::Fock { cutoff } = space.factors()[0] else {
        return Err(Error::WrongFactor {
            slot: 0,
            expected: "Fock",
        });
    };
    let limit = max_level.unwrap_or(cutoff);
    let (_, d, inner) = space.strides(0);
    let amps = state.amplitudes();
    let (mut weighted, mut total) = (0.0, 0.0);
    for n in 0..d.min(limit + 1) {
        let p: f64 = amps[n * inner..(n + 1) * inner]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        weighted += n as f64 * p;
        total += p;
    }
    Ok(if total > 0.0 { weighted / total } else { 0.0 })
}

/// Adaptive Fock cutoff: starting at 16 and doubling, stop once `⟨a†a⟩` of the
/// first factor changes by less than `max(1e-6, 1e-4·⟨a†a⟩)` between
/// successive cutoffs and the top-level population is below 1e-8. At the
/// first cutoff the comparison is made against the same state truncated to
/// its lower half of levels. Gives up beyond cutoff 4096.
pub fn auto_cutoff<F>(recipe: F, cfg: &SolveConfig) -> Result<(usize, SpectrumResult)>
where
    F: Fn(usize) -> Result<SparseOperator>,
{
    let mut cutoff = FIRST_CUTOFF;
    let mut previous: Option<f64> = None;
    loop {
        let h = recipe(cutoff)?;
        if h.dim() > MAX_AUTO_DIM {
            return Err(Error::CutoffNotConverged {
                cutoff,
                previous: previous.unwrap_or(f64::NAN),
                last: f64::NAN,
            });
        }
        let result = ground_state(&h, cfg)?;
        let state = result.ground();
        let n = field_occupation(state, None)?;
        let reference = match previous {
            Some(p) => p,
            None => field_occupation(state, Some(cutoff / 2))?,
        };
        let settled = (n - reference).abs() < (1e-4 * n.abs()).max(1e-6);
        if settled && top_level_population(state) < 1e-8 {
            let mut result = result;
            result.cutoff_used = Some(cutoff);
            return Ok((cutoff, result));
        }
        if cutoff >= MAX_CUTOFF {
            return Err(Error::CutoffNotConverged {
                cutoff,
                previous: reference,
                last: n,
            });
        }
        previous = Some(n);
        cutoff *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{number_op, SpaceSpec};

    fn diag(values: &[f64]) -> SparseOperator {
        SparseOperator::diagonal(SpaceSpec::fock(values.len() - 1), values).unwrap()
    }

    #[test]
    fn diagonal_ground_state() {
        let res = ground_state(&diag(&[0.0, 1.0, 2.0]), &SolveConfig::default()).unwrap();
        assert_eq!(res.energies, vec![0.0]);
        let amps = res.ground().amplitudes();
        assert_eq!(amps[0], C64::new(1.0, 0.0));
        assert_eq!(amps[1].norm() + amps[2].norm(), 0.0);
    }

    #[test]
    fn degenerate_levels_come_out_orthogonal() {
        let res = low_spectrum(&diag(&[0.0, 0.0, 1.0]), 2, &SolveConfig::default()).unwrap();
        assert_eq!(res.energies, vec![0.0, 0.0]);
        assert!(res.states[0].inner(&res.states[1]).norm() < 1e-14);
    }

    #[test]
    fn degenerate_levels_lanczos() {
        let mut d: Vec<f64> = (0..300)
            .map(|i| 1.0 + (i as f64 * 0.37).sin().abs())
            .collect();
        d[17] = 0.0;
        d[201] = 0.0;
        let cfg = SolveConfig {
            dense_threshold: 0,
            max_lanczos_iters: 5000,
            ..Default::default()
        };
        let res = low_spectrum(&diag(&d), 3, &cfg).unwrap();
        assert_eq!(res.method, Method::Lanczos);
        assert!(res.energies[0].abs() < 1e-10 && res.energies[1].abs() < 1e-10);
        assert!(res.states[0].inner(&res.states[1]).norm() < 1e-8);
    }

    #[test]
    fn locked_directions_do_not_leave_a_zero_level() {
        // all levels above the ground are positive, so a projected-out lock
        // would show up as a fake eigenvalue at 0
        let d: Vec<f64> = (0..400)
            .map(|i| if i == 0 { -0.1 } else { 0.6 + 0.01 * i as f64 })
            .collect();
        let cfg = SolveConfig {
            dense_threshold: 0,
            max_lanczos_iters: 5000,
            ..Default::default()
        };
        let res = low_spectrum(&diag(&d), 3, &cfg).unwrap();
        assert!((res.energies[2] - 0.62).abs() < 1e-10, "{:?}", res.energies);
    }

    #[test]
    fn free_field_ladder() {
        let space = SpaceSpec::fock(30);
        let h = number_op(&space, 0).unwrap().scale(0.7);
        for threshold in [0, 2000] {
            let cfg = SolveConfig {
                dense_threshold: threshold,
                ..Default::default()
            };
            let res = low_spectrum(&h, 3, &cfg).unwrap();
            for (k, e) in res.energies.iter().enumerate() {
                assert!(
                    (e - 0.7 * k as f64).abs() < 1e-10,
                    "{threshold}: {:?}",
                    res.energies
                );
            }
        }
    }

    #[test]
    fn rejects_non_hermitian_and_bad_k() {
        let space = SpaceSpec::fock(3);
        let a = crate::hilbert::annihilation_op(&space, 0).unwrap();
        assert_eq!(
            ground_state(&a, &SolveConfig::default()).unwrap_err(),
            Error::NonHermitian
        );
        assert!(low_spectrum(&diag(&[1.0, 2.0]), 3, &SolveConfig::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_non_convergence() {
        let d: Vec<f64> = (0..3000)
            .map(|i| i as f64 * 1e-3 + (i as f64).sin() * 1e-4)
            .collect();
        let cfg = SolveConfig {
            max_lanczos_iters: 10,
            dense_threshold: 0,
            ..Default::default()
        };
        match ground_state(&diag(&d), &cfg) {
            Err(Error::NotConverged {
                iterations,
                residual,
            }) => {
                assert!(iterations <= 10);
                assert!(residual.is_finite() && residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig {
            eig_tol: 1e-3,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolveConfig {
            max_lanczos_iters: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolveConfig::default().validate().is_ok());
    }

    #[test]
    fn top_population_counts_any_fock_factor() {
        let space = SpaceSpec::fock(2).tensor(&SpaceSpec::fock(2));
        let state = QuantumState::basis(space.clone(), space.flat_index(&[0, 2])).unwrap();
        assert_eq!(top_level_population(&state), 1.0);
        let state = QuantumState::basis(space.clone(), space.flat_index(&[1, 1])).unwrap();
        assert_eq!(top_level_population(&state), 0.0);
    }
}
