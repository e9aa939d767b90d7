//! Truncated Hilbert spaces and sparse operators on them.
//!
//! A [`SpaceSpec`] is an ordered tensor product of Fock and collective-spin
//! factors. Flat indices are lexicographic with the first factor slowest, and
//! a spin factor of `n_spins` spins is the maximal-`j` ladder `j = n_spins/2`
//! with local index `i` ↔ `m = i − j` (ascending `m`).

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One tensor factor of a [`SpaceSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// Bosonic mode truncated to `|0⟩ … |cutoff⟩`.
    Fock { cutoff: usize },
    /// Symmetric (maximal total spin) sector of `n_spins` two-level systems.
    Spin { n_spins: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::Fock { cutoff } => cutoff + 1,
            Factor::Spin { n_spins } => n_spins + 1,
        }
    }

    pub fn is_fock(&self) -> bool {
        matches!(self, Factor::Fock { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    factors: Vec<Factor>,
    dim: usize,
}

impl SpaceSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter(
                "a space needs at least one factor".into(),
            ));
        }
        for f in &factors {
            if let Factor::Spin { n_spins: 0 } = f {
                return Err(Error::InvalidParameter(
                    "spin factor needs n_spins >= 1".into(),
                ));
            }
        }
        let dim = factors.iter().map(Factor::dim).product();
        Ok(Self { factors, dim })
    }

    pub fn fock(cutoff: usize) -> Self {
        Self {
            factors: vec![Factor::Fock { cutoff }],
            dim: cutoff + 1,
        }
    }

    pub fn spin(n_spins: usize) -> Result<Self> {
        Self::new(vec![Factor::Spin { n_spins }])
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &SpaceSpec) -> SpaceSpec {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        SpaceSpec {
            factors,
            dim: self.dim * other.dim,
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self, slot: usize) -> Result<Factor> {
        self.factors
            .get(slot)
            .copied()
            .ok_or(Error::SlotOutOfRange {
                slot,
                n_factors: self.factors.len(),
            })
    }

    /// `(outer, local, inner)` block sizes around `slot`.
    pub fn strides(&self, slot: usize) -> (usize, usize, usize) {
        let outer = self.factors[..slot].iter().map(Factor::dim).product();
        let inner = self.factors[slot + 1..].iter().map(Factor::dim).product();
        (outer, self.factors[slot].dim(), inner)
    }

    pub fn flat_index(&self, local: &[usize]) -> usize {
        debug_assert_eq!(local.len(), self.factors.len());
        local
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&i, f)| acc * f.dim() + i)
    }

    pub fn local_indices(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in self.factors.iter().enumerate().rev() {
            out[slot] = flat % f.dim();
            flat /= f.dim();
        }
        out
    }
}

/// Coordinate-list sparse matrix on a [`SpaceSpec`].
///
/// Entries are kept in canonical order (row-major, duplicates summed in
/// insertion order, exact zeros dropped), so two operators with the same
/// matrix compare equal entry by entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    space: SpaceSpec,
    entries: Vec<(usize, usize, C64)>,
    hermitian: bool,
}

impl SparseOperator {
    pub fn from_entries(
        space: SpaceSpec,
        entries: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let dim = space.dim();
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.max(c) + 1,
            });
        }
        Ok(Self {
            space,
            entries: canonicalize(entries),
            hermitian,
        })
    }

    pub fn zero(space: SpaceSpec) -> Self {
        Self {
            space,
            entries: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let entries = (0..space.dim()).map(|i| (i, i, ONE)).collect();
        Self {
            space,
            entries,
            hermitian: true,
        }
    }

    /// Real diagonal operator.
    pub fn diagonal(space: SpaceSpec, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: diag.len(),
            });
        }
        let entries = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        Ok(Self {
            space,
            entries: canonicalize(entries),
            hermitian: true,
        })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// The hermitian flag carried by the operator.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Entry-level check that the operator equals its conjugate transpose.
    pub fn is_hermitian_exact(&self) -> bool {
        self.entries == self.adjoint().entries
    }

    /// Re-derives the hermitian flag from the entries.
    pub fn with_hermitian_check(mut self) -> Self {
        self.hermitian = self.is_hermitian_exact();
        self
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im == 0.0)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match self
            .entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(row, col)))
        {
            Ok(k) => self.entries[k].2,
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        Self {
            space: self.space.clone(),
            entries: canonicalize(entries),
            hermitian: self.hermitian,
        }
    }

    /// Multiplies every entry by a real factor (hermiticity is preserved).
    pub fn scale(&self, factor: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, v * factor))
            .collect();
        Self {
            space: self.space.clone(),
            entries: canonicalize(entries),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, v * factor))
            .collect();
        Self {
            space: self.space.clone(),
            entries: canonicalize(entries),
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        self.check_space(other)?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(Self {
            space: self.space.clone(),
            entries: canonicalize(entries),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<Self> {
        self.check_space(other)?;
        let rhs = other.to_csr();
        let mut entries = Vec::new();
        for &(r, k, a) in &self.entries {
            for idx in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                entries.push((r, rhs.cols[idx], a * rhs.vals[idx]));
            }
        }
        Ok(Self {
            space: self.space.clone(),
            entries: canonicalize(entries),
            hermitian: false,
        })
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?).map(|mut op| {
            op.hermitian = false;
            op
        })
    }

    /// Kronecker product on `self.space ⊗ other.space`.
    pub fn kron(&self, other: &SparseOperator) -> Self {
        let d2 = other.dim();
        let mut entries = Vec::with_capacity(self.nnz() * other.nnz());
        for &(r1, c1, a) in &self.entries {
            for &(r2, c2, b) in &other.entries {
                entries.push((r1 * d2 + r2, c1 * d2 + c2, a * b));
            }
        }
        Self {
            space: self.space.tensor(&other.space),
            entries: canonicalize(entries),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    pub fn to_csr(&self) -> CsrMatrix<C64> {
        CsrMatrix::from_sorted(self.dim(), self.entries.iter().map(|&(r, c, v)| (r, c, v)))
    }

    /// Real CSR copy when every entry has zero imaginary part.
    pub fn to_real_csr(&self) -> Option<CsrMatrix<f64>> {
        if !self.is_real() {
            return None;
        }
        Some(CsrMatrix::from_sorted(
            self.dim(),
            self.entries.iter().map(|&(r, c, v)| (r, c, v.re)),
        ))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn apply_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut y = vec![ZERO; x.len()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    fn check_space(&self, other: &SparseOperator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

fn canonicalize(mut entries: Vec<(usize, usize, C64)>) -> Vec<(usize, usize, C64)> {
    entries.sort_by_key(|e| (e.0, e.1));
    let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|e| e.2 != ZERO);
    out
}

/// Compressed-row matrix used by the eigensolver.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: ComplexField + Copy> CsrMatrix<T> {
    /// Builds from row-major sorted triples, summing duplicates.
    fn from_sorted(dim: usize, triples: impl Iterator<Item = (usize, usize, T)>) -> Self {
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols: Vec<usize> = Vec::new();
        let mut vals: Vec<T> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triples {
            if last == Some((r, c)) {
                let k = vals.len() - 1;
                vals[k] += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            *out = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[idx])] += self.vals[idx];
            }
        }
        m
    }
}

/// Normalized pure state on a [`SpaceSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    space: SpaceSpec,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// Wraps amplitudes that are already normalized to 1e-12.
    pub fn new(space: SpaceSpec, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "state norm {norm} is not 1"
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn normalized(space: SpaceSpec, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero vector".into(),
            ));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: SpaceSpec, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: index + 1,
            });
        }
        let mut amplitudes = vec![ZERO; space.dim()];
        amplitudes[index] = ONE;
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

pub(crate) fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Embeds a local operator given as triples on `slot` into the full space.
fn embed(
    space: &SpaceSpec,
    slot: usize,
    local: &[(usize, usize, C64)],
    hermitian: bool,
) -> SparseOperator {
    let (outer, d, inner) = space.strides(slot);
    let mut entries = Vec::with_capacity(outer * inner * local.len());
    for o in 0..outer {
        for &(r, c, v) in local {
            for i in 0..inner {
                entries.push(((o * d + r) * inner + i, (o * d + c) * inner + i, v));
            }
        }
    }
    SparseOperator {
        space: space.clone(),
        entries: canonicalize(entries),
        hermitian,
    }
}

fn fock_slot(space: &SpaceSpec, slot: usize) -> Result<usize> {
    match space.factor(slot)? {
        Factor::Fock { cutoff } => Ok(cutoff),
        _ => Err(Error::WrongFactor {
            slot,
            expected: "Fock",
        }),
    }
}

fn spin_slot(space: &SpaceSpec, slot: usize) -> Result<usize> {
    match space.factor(slot)? {
        Factor::Spin { n_spins } => Ok(n_spins),
        _ => Err(Error::WrongFactor {
            slot,
            expected: "Spin",
        }),
    }
}

/// Annihilation operator of the Fock factor at `slot`, `⟨n−1|a|n⟩ = √n`.
pub fn annihilation_op(space: &SpaceSpec, slot: usize) -> Result<SparseOperator> {
    let cutoff = fock_slot(space, slot)?;
    let local: Vec<_> = (1..=cutoff)
        .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
        .collect();
    Ok(embed(space, slot, &local, false))
}

pub fn creation_op(space: &SpaceSpec, slot: usize) -> Result<SparseOperator> {
    Ok(annihilation_op(space, slot)?.adjoint())
}

/// `a†a`, built directly as a diagonal.
pub fn number_op(space: &SpaceSpec, slot: usize) -> Result<SparseOperator> {
    let cutoff = fock_slot(space, slot)?;
    let local: Vec<_> = (1..=cutoff)
        .map(|n| (n, n, C64::new(n as f64, 0.0)))
        .collect();
    Ok(embed(space, slot, &local, true))
}

/// `a + a†` on `slot`, with exactly symmetric entries.
pub fn displacement_sum_op(space: &SpaceSpec, slot: usize) -> Result<SparseOperator> {
    let cutoff = fock_slot(space, slot)?;
    let mut local = Vec::with_capacity(2 * cutoff);
    for n in 1..=cutoff {
        let v = C64::new((n as f64).sqrt(), 0.0);
        local.push((n - 1, n, v));
        local.push((n, n - 1, v));
    }
    Ok(embed(space, slot, &local, true))
}

#[derive(Clone, Debug)]
pub struct SpinOps {
    pub x: SparseOperator,
    pub y: SparseOperator,
    pub z: SparseOperator,
}

/// `S₊` on the spin factor at `slot`.
pub fn spin_raising_op(space: &SpaceSpec, slot: usize) -> Result<SparseOperator> {
    let n_spins = spin_slot(space, slot)?;
    Ok(embed(space, slot, &spin_raising_local(n_spins), false))
}

fn spin_raising_local(n_spins: usize) -> Vec<(usize, usize, C64)> {
    let j = n_spins as f64 / 2.0;
    (0..n_spins)
        .map(|i| {
            let m = i as f64 - j;
            (
                i + 1,
                i,
                C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0),
            )
        })
        .collect()
}

/// Collective spin components `(Sx, Sy, Sz)` on the spin factor at `slot`.
pub fn spin_ops(space: &SpaceSpec, slot: usize) -> Result<SpinOps> {
    let n_spins = spin_slot(space, slot)?;
    let j = n_spins as f64 / 2.0;
    let plus = spin_raising_local(n_spins);
    let mut lx = Vec::with_capacity(2 * plus.len());
    let mut ly = Vec::with_capacity(2 * plus.len());
    for &(r, c, v) in &plus {
        let half = v * 0.5;
        lx.push((r, c, half));
        lx.push((c, r, half));
        // (S₊ − S₋)/(2i): S₊ contributes −i/2, S₋ contributes +i/2
        ly.push((r, c, C64::new(0.0, -half.re)));
        ly.push((c, r, C64::new(0.0, half.re)));
    }
    let lz: Vec<_> = (0..=n_spins)
        .map(|i| (i, i, C64::new(i as f64 - j, 0.0)))
        .collect();
    Ok(SpinOps {
        x: embed(space, slot, &lx, true),
        y: embed(space, slot, &ly, true),
        z: embed(space, slot, &lz, true),
    })
}

/// Excitation parity `(−1)^(Σ local indices)`.
///
/// On `Fock ⊗ Spin` this is `exp[iπ(n + m + j)]`; the same sign rule applies
/// to every factor layout (Fock index `n`, spin index `m + j`).
pub fn parity_op(space: &SpaceSpec) -> SparseOperator {
    let diag: Vec<f64> = (0..space.dim())
        .map(|flat| {
            let total: usize = space.local_indices(flat).iter().sum();
            if total % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    SparseOperator::diagonal(space.clone(), &diag).expect("length matches by construction")
}

/// Sparse matrix–vector product `op · state` (not renormalized).
pub fn apply(op: &SparseOperator, state: &QuantumState) -> Result<Vec<C64>> {
    if op.space() != state.space() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: state.space().dim(),
        });
    }
    op.apply_vec(state.amplitudes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn fock2_annihilation_elements() {
        let s = SpaceSpec::fock(2);
        let a = annihilation_op(&s, 0).unwrap();
        assert_eq!(a.entries(), &[(0, 1, c(1.0)), (1, 2, c(2f64.sqrt()))]);
    }

    #[test]
    fn number_from_ladder_product() {
        let s = SpaceSpec::fock(3);
        let a = annihilation_op(&s, 0).unwrap();
        let n = a.adjoint().matmul(&a).unwrap();
        for k in 0..4 {
            assert!((n.get(k, k) - c(k as f64)).norm() < 1e-15);
        }
        assert_eq!(n.nnz(), 3);
    }

    #[test]
    fn truncated_commutator_has_top_level_artifact() {
        for cutoff in [1, 2, 5, 17] {
            let s = SpaceSpec::fock(cutoff);
            let a = annihilation_op(&s, 0).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            // √n·√n is exact up to one rounding
            for n in 0..cutoff {
                assert!((comm.get(n, n) - c(1.0)).norm() <= 4.0 * f64::EPSILON * (n + 1) as f64);
            }
            assert!(
                (comm.get(cutoff, cutoff) + c(cutoff as f64)).norm()
                    <= 4.0 * f64::EPSILON * cutoff as f64
            );
            assert_eq!(comm.nnz(), cutoff + 1);
        }
    }

    #[test]
    fn slot_errors() {
        let s = SpaceSpec::fock(3).tensor(&SpaceSpec::spin(2).unwrap());
        assert!(matches!(
            annihilation_op(&s, 2),
            Err(Error::SlotOutOfRange { .. })
        ));
        assert!(matches!(
            annihilation_op(&s, 1),
            Err(Error::WrongFactor { .. })
        ));
        assert!(matches!(spin_ops(&s, 0), Err(Error::WrongFactor { .. })));
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let s = SpaceSpec::spin(1).unwrap();
        let ops = spin_ops(&s, 0).unwrap();
        assert_eq!(ops.z.get(0, 0), c(-0.5));
        assert_eq!(ops.z.get(1, 1), c(0.5));
        assert_eq!(ops.x.get(0, 1), c(0.5));
        assert_eq!(ops.x.get(1, 0), c(0.5));
    }

    #[test]
    fn spin_one_ladder() {
        let s = SpaceSpec::spin(2).unwrap();
        let ops = spin_ops(&s, 0).unwrap();
        assert_eq!(ops.z.get(0, 0), c(-1.0));
        assert_eq!(ops.z.get(1, 1), c(0.0));
        assert_eq!(ops.z.get(2, 2), c(1.0));
        let plus = spin_raising_op(&s, 0).unwrap();
        assert_eq!(plus.get(1, 0), c(2f64.sqrt()));
        assert_eq!(plus.get(2, 1), c(2f64.sqrt()));
    }

    #[test]
    fn angular_momentum_algebra_and_casimir() {
        for n_spins in 1..=20 {
            let s = SpaceSpec::spin(n_spins).unwrap();
            let ops = spin_ops(&s, 0).unwrap();
            let comm = ops.x.commutator(&ops.y).unwrap();
            let diff = comm.sub(&ops.z.scale_complex(C64::new(0.0, 1.0))).unwrap();
            assert!(diff.max_abs() < 1e-12, "n_spins {n_spins}");

            let j = n_spins as f64 / 2.0;
            let casimir = ops
                .x
                .matmul(&ops.x)
                .unwrap()
                .add(&ops.y.matmul(&ops.y).unwrap())
                .unwrap()
                .add(&ops.z.matmul(&ops.z).unwrap())
                .unwrap();
            let target = SparseOperator::identity(s.clone()).scale(j * (j + 1.0));
            assert!(casimir.sub(&target).unwrap().max_abs() < 1e-12);
            for op in [&ops.x, &ops.y, &ops.z] {
                assert!(op.is_hermitian() && op.is_hermitian_exact());
            }
        }
    }

    #[test]
    fn parity_signs() {
        let s = SpaceSpec::fock(3).tensor(&SpaceSpec::spin(3).unwrap());
        let p = parity_op(&s);
        assert_eq!(p.get(s.flat_index(&[0, 0]), s.flat_index(&[0, 0])), c(1.0));
        assert_eq!(p.get(s.flat_index(&[1, 0]), s.flat_index(&[1, 0])), c(-1.0));
        assert_eq!(p.get(s.flat_index(&[1, 1]), s.flat_index(&[1, 1])), c(1.0));
    }

    #[test]
    fn index_convention_first_factor_slowest() {
        let s = SpaceSpec::fock(2).tensor(&SpaceSpec::spin(3).unwrap());
        assert_eq!(s.dim(), 12);
        assert_eq!(s.flat_index(&[1, 2]), 6);
        assert_eq!(s.local_indices(6), vec![1, 2]);
        let n = number_op(&s, 0).unwrap();
        assert_eq!(n.get(6, 6), c(1.0));
        assert_eq!(n.get(2, 2), c(0.0));
    }

    #[test]
    fn apply_examples() {
        let s = SpaceSpec::fock(2);
        let psi = QuantumState::normalized(s.clone(), vec![c(1.0), c(0.0), c(1.0)]).unwrap();
        let id = SparseOperator::identity(s.clone());
        assert_eq!(apply(&id, &psi).unwrap(), psi.amplitudes());

        let one = QuantumState::basis(s.clone(), 1).unwrap();
        let a = annihilation_op(&s, 0).unwrap();
        assert_eq!(apply(&a, &one).unwrap(), vec![c(1.0), c(0.0), c(0.0)]);

        let n = number_op(&s, 0).unwrap();
        let out = apply(&n, &psi).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0]).norm() < 1e-15 && out[1].norm() < 1e-15);
        assert!((out[2] - c(2.0 * r)).norm() < 1e-15);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let op = SparseOperator::identity(SpaceSpec::fock(2));
        let psi = QuantumState::basis(SpaceSpec::fock(3), 0).unwrap();
        assert!(matches!(
            apply(&op, &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn state_norm_checked() {
        let s = SpaceSpec::fock(1);
        assert!(QuantumState::new(s.clone(), vec![c(1.0), c(1.0)]).is_err());
        assert!(QuantumState::new(s, vec![c(0.6), c(0.8)]).is_ok());
    }

    #[test]
    fn out_of_range_entries_rejected() {
        let s = SpaceSpec::fock(1);
        assert!(SparseOperator::from_entries(s, vec![(0, 2, c(1.0))], false).is_err());
    }

    #[test]
    fn duplicates_are_summed() {
        let s = SpaceSpec::fock(1);
        let op = SparseOperator::from_entries(
            s,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 1, c(0.5))],
            false,
        )
        .unwrap();
        assert_eq!(op.entries(), &[(0, 1, c(3.0)), (1, 1, c(0.5))]);
        let csr = op.to_csr();
        assert_eq!(csr.row_ptr, vec![0, 1, 2]);
    }

    #[test]
    fn embedded_operators_act_as_identity_elsewhere() {
        let s = SpaceSpec::fock(2).tensor(&SpaceSpec::fock(3));
        let nb = number_op(&s, 1).unwrap();
        for na in 0..3 {
            for k in 0..4 {
                let i = s.flat_index(&[na, k]);
                assert_eq!(nb.get(i, i), c(k as f64));
            }
        }
    }
}
