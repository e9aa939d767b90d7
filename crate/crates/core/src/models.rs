//! Hamiltonians of the Dicke model, its two-oscillator limit, the quantum
//! Rabi model and the single-mode effective oscillator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{displacement_sum_op, number_op, spin_ops, SpaceSpec, SparseOperator, C64};

/// Fock truncation: a concrete level or adaptive selection by the solver.
///
/// Serialized as an integer or the string `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CutoffRepr", into = "CutoffRepr")]
pub enum Cutoff {
    Fixed(usize),
    Auto,
}

impl Cutoff {
    pub fn resolved(self) -> Result<usize> {
        match self {
            Cutoff::Fixed(k) => Ok(k),
            Cutoff::Auto => Err(Error::UnresolvedCutoff),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Cutoff::Auto);
        }
        s.parse().map(Cutoff::Fixed).map_err(|_| {
            Error::InvalidParameter(format!("cutoff must be `auto` or an integer, got `{s}`"))
        })
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Fixed(k) => write!(f, "{k}"),
            Cutoff::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CutoffRepr {
    Level(usize),
    Word(String),
}

impl TryFrom<CutoffRepr> for Cutoff {
    type Error = Error;

    fn try_from(repr: CutoffRepr) -> Result<Self> {
        match repr {
            CutoffRepr::Level(k) => Ok(Cutoff::Fixed(k)),
            CutoffRepr::Word(w) => w.parse(),
        }
    }
}

impl From<Cutoff> for CutoffRepr {
    fn from(c: Cutoff) -> Self {
        match c {
            Cutoff::Fixed(k) => CutoffRepr::Level(k),
            Cutoff::Auto => CutoffRepr::Word("auto".into()),
        }
    }
}

/// The diagonalizable models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dicke,
    Hp,
    Rabi,
    Effective,
}

impl ModelKind {
    /// Hamiltonian with every Fock factor truncated at `cutoff`.
    pub fn hamiltonian(self, params: &ModelParams, cutoff: usize) -> Result<SparseOperator> {
        let fixed = params.with_cutoff(Cutoff::Fixed(cutoff));
        match self {
            ModelKind::Dicke => dicke_hamiltonian(&fixed),
            ModelKind::Hp => hp_hamiltonian(&fixed, cutoff, cutoff),
            ModelKind::Rabi => rabi_hamiltonian(&fixed),
            ModelKind::Effective => effective_oscillator_hamiltonian(&fixed, cutoff),
        }
    }

    /// Whether the second factor carries a matter excitation number.
    pub fn has_matter_mode(self) -> bool {
        !matches!(self, ModelKind::Effective)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dicke" => Ok(ModelKind::Dicke),
            "hp" => Ok(ModelKind::Hp),
            "rabi" => Ok(ModelKind::Rabi),
            "effective" => Ok(ModelKind::Effective),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Dicke => "dicke",
            ModelKind::Hp => "hp",
            ModelKind::Rabi => "rabi",
            ModelKind::Effective => "effective",
        })
    }
}

/// Physical inputs, in energy units with ħ = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Field mode frequency ω.
    pub omega: f64,
    /// Atomic transition frequency Ω.
    pub omega_atom: f64,
    /// Light–matter coupling g.
    pub g: f64,
    /// Number of two-level systems (Dicke model only).
    pub n_spins: usize,
    pub fock_cutoff: Cutoff,
}

impl ModelParams {
    pub fn new(omega: f64, omega_atom: f64, g: f64) -> Result<Self> {
        let p = Self {
            omega,
            omega_atom,
            g,
            n_spins: 1,
            fock_cutoff: Cutoff::Auto,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `g = ratio · √(ωΩ)`.
    pub fn from_ratio(omega: f64, omega_atom: f64, ratio: f64) -> Result<Self> {
        check_frequencies(omega, omega_atom)?;
        if !(ratio >= 0.0) || !ratio.is_finite() {
            return Err(Error::Domain {
                what: "coupling ratio",
                value: ratio,
            });
        }
        Self::new(omega, omega_atom, ratio * (omega * omega_atom).sqrt())
    }

    pub fn with_spins(mut self, n_spins: usize) -> Self {
        self.n_spins = n_spins;
        self
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.fock_cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_frequencies(self.omega, self.omega_atom)?;
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coupling g = {} must be >= 0",
                self.g
            )));
        }
        Ok(())
    }

    /// `g_c = √(ωΩ)`.
    pub fn critical_coupling(&self) -> f64 {
        (self.omega * self.omega_atom).sqrt()
    }

    pub fn coupling_ratio(&self) -> f64 {
        self.g / self.critical_coupling()
    }
}

fn check_frequencies(omega: f64, omega_atom: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "omega = {omega} must be > 0"
        )));
    }
    if !(omega_atom > 0.0 && omega_atom.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Omega = {omega_atom} must be > 0"
        )));
    }
    Ok(())
}

/// `H = ω a†a + Ω Sz + (g/√N)(a† + a) Sx` on `Fock(cutoff) ⊗ Spin(N)`.
pub fn dicke_hamiltonian(params: &ModelParams) -> Result<SparseOperator> {
    params.validate()?;
    let cutoff = params.fock_cutoff.resolved()?;
    if params.n_spins == 0 {
        return Err(Error::InvalidParameter("n_spins must be >= 1".into()));
    }
    let coupling = params.g / (params.n_spins as f64).sqrt();
    spin_boson(
        params.omega,
        params.omega_atom,
        coupling,
        cutoff,
        params.n_spins,
    )
}

/// `H = ω a†a + (Ω/2)σz + (g/2)(a + a†)σx` on `Fock(cutoff) ⊗ Spin(1)`.
pub fn rabi_hamiltonian(params: &ModelParams) -> Result<SparseOperator> {
    params.validate()?;
    let cutoff = params.fock_cutoff.resolved()?;
    // σ = 2S, so (Ω/2)σz = Ω Sz and (g/2)σx = g Sx
    spin_boson(params.omega, params.omega_atom, params.g, cutoff, 1)
}

fn spin_boson(
    omega: f64,
    omega_atom: f64,
    coupling: f64,
    cutoff: usize,
    n_spins: usize,
) -> Result<SparseOperator> {
    let fock = SpaceSpec::fock(cutoff);
    let spin = SpaceSpec::spin(n_spins)?;
    let spin_ops = spin_ops(&spin, 0)?;
    let id_fock = SparseOperator::identity(fock.clone());
    let id_spin = SparseOperator::identity(spin.clone());

    let field = number_op(&fock, 0)?.scale(omega).kron(&id_spin);
    let atoms = id_fock.kron(&spin_ops.z.scale(omega_atom));
    let interaction = displacement_sum_op(&fock, 0)?
        .kron(&spin_ops.x)
        .scale(coupling);
    field.add(&atoms)?.add(&interaction)
}

/// `H = ω a†a + Ω b†b + (g/2)(a† + a)(b† + b)` on `Fock(cutoff_a) ⊗ Fock(cutoff_b)`.
///
/// The `g/2` normalization is what the Holstein–Primakoff expansion of the
/// Dicke Hamiltonian produces; with it the normal-mode frequencies at
/// resonance are `ω√(1 ∓ g/g_c)` with `g_c = √(ωΩ)`.
/// Quadratic models are unbounded below past the critical coupling.
fn check_normal_phase(params: &ModelParams) -> Result<()> {
    let ratio = params.coupling_ratio();
    // allow the rounding of g = ratio·g_c at ratio 1
    if ratio > 1.0 + 1e-12 {
        return Err(Error::Singular { ratio });
    }
    Ok(())
}

pub fn hp_hamiltonian(
    params: &ModelParams,
    cutoff_a: usize,
    cutoff_b: usize,
) -> Result<SparseOperator> {
    params.validate()?;
    check_normal_phase(params)?;
    if cutoff_a < 1 || cutoff_b < 1 {
        return Err(Error::InvalidParameter(
            "oscillator cutoffs must be >= 1".into(),
        ));
    }
    let fa = SpaceSpec::fock(cutoff_a);
    let fb = SpaceSpec::fock(cutoff_b);
    let ida = SparseOperator::identity(fa.clone());
    let idb = SparseOperator::identity(fb.clone());

    let mode_a = number_op(&fa, 0)?.scale(params.omega).kron(&idb);
    let mode_b = ida.kron(&number_op(&fb, 0)?.scale(params.omega_atom));
    let interaction = displacement_sum_op(&fa, 0)?
        .kron(&displacement_sum_op(&fb, 0)?)
        .scale(params.g / 2.0);
    mode_a.add(&mode_b)?.add(&interaction)
}

/// `H = ω a†a − (g²/4Ω)(a + a†)²` on `Fock(cutoff)`.
///
/// `(a + a†)²` uses its exact matrix elements `a² + a†² + 2a†a + 1` restricted
/// to the truncated space, not the square of the truncated `a + a†`.
pub fn effective_oscillator_hamiltonian(
    params: &ModelParams,
    cutoff: usize,
) -> Result<SparseOperator> {
    params.validate()?;
    check_normal_phase(params)?;
    if cutoff < 1 {
        return Err(Error::InvalidParameter("cutoff must be >= 1".into()));
    }
    let space = SpaceSpec::fock(cutoff);
    let kappa = params.g * params.g / (4.0 * params.omega_atom);
    let mut entries = Vec::with_capacity(3 * (cutoff + 1));
    for n in 0..=cutoff {
        let nf = n as f64;
        entries.push((
            n,
            n,
            C64::new(params.omega * nf - kappa * (2.0 * nf + 1.0), 0.0),
        ));
        if n >= 2 {
            let v = C64::new(-kappa * (nf * (nf - 1.0)).sqrt(), 0.0);
            entries.push((n - 2, n, v));
            entries.push((n, n - 2, v));
        }
    }
    SparseOperator::from_entries(space, entries, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{parity_op, Factor};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1).is_err());
        let p = ModelParams::from_ratio(1.0, 4.0, 0.5).unwrap();
        assert_eq!(p.critical_coupling(), 2.0);
        assert_eq!(p.g, 1.0);
        assert_eq!(p.coupling_ratio(), 0.5);
    }

    #[test]
    fn dicke_uncoupled_is_diagonal_n_plus_m() {
        let p = ModelParams::new(1.0, 1.0, 0.0)
            .unwrap()
            .with_spins(2)
            .with_cutoff(Cutoff::Fixed(2));
        let h = dicke_hamiltonian(&p).unwrap();
        let s = h.space().clone();
        assert!(h.entries().iter().all(|e| e.0 == e.1));
        for n in 0..=2 {
            for i in 0..=2 {
                let k = s.flat_index(&[n, i]);
                assert_eq!(h.get(k, k), c(n as f64 + i as f64 - 1.0));
            }
        }
    }

    #[test]
    fn dicke_coupling_matrix_element() {
        let p = ModelParams::from_ratio(1.0, 1.0, 1.0)
            .unwrap()
            .with_spins(1)
            .with_cutoff(Cutoff::Fixed(2));
        let h = dicke_hamiltonian(&p).unwrap();
        let s = h.space().clone();
        // ⟨1,+½| g (a + a†) Sx |0,−½⟩ = 1 · 1 · ½
        let from = s.flat_index(&[0, 0]);
        let to = s.flat_index(&[1, 1]);
        assert_eq!(h.get(to, from), c(0.5));
        assert_eq!(h.get(from, to), c(0.5));
        // ⟨2,−½| … |1,+½⟩ = √2 · ½
        assert_eq!(
            h.get(s.flat_index(&[2, 0]), s.flat_index(&[1, 1])),
            c(2f64.sqrt() * 0.5)
        );
    }

    #[test]
    fn unresolved_cutoff_is_an_error() {
        let p = ModelParams::new(1.0, 1.0, 0.3).unwrap().with_spins(4);
        assert_eq!(dicke_hamiltonian(&p), Err(Error::UnresolvedCutoff));
        assert_eq!(rabi_hamiltonian(&p), Err(Error::UnresolvedCutoff));
        let p = p.with_cutoff(Cutoff::Fixed(3)).with_spins(0);
        assert!(dicke_hamiltonian(&p).is_err());
    }

    #[test]
    fn hamiltonians_are_exactly_hermitian() {
        let p = ModelParams::from_ratio(1.3, 0.7, 0.8)
            .unwrap()
            .with_spins(5)
            .with_cutoff(Cutoff::Fixed(9));
        for h in [
            dicke_hamiltonian(&p).unwrap(),
            rabi_hamiltonian(&p).unwrap(),
            hp_hamiltonian(&p, 7, 5).unwrap(),
            effective_oscillator_hamiltonian(&p, 11).unwrap(),
        ] {
            assert!(h.is_hermitian());
            assert!(h.is_hermitian_exact());
        }
    }

    #[test]
    fn dicke_and_rabi_conserve_parity() {
        let p = ModelParams::from_ratio(1.0, 2.0, 0.9)
            .unwrap()
            .with_spins(6)
            .with_cutoff(Cutoff::Fixed(12));
        for h in [
            dicke_hamiltonian(&p).unwrap(),
            rabi_hamiltonian(&p).unwrap(),
        ] {
            let par = parity_op(h.space());
            assert!(h
                .entries()
                .iter()
                .all(|&(r, c, _)| par.get(r, r) == par.get(c, c)));
            let comm = h.commutator(&par).unwrap();
            assert_eq!(comm.max_abs(), 0.0);
        }
    }

    #[test]
    fn hp_uncoupled_diagonal() {
        let p = ModelParams::new(1.0, 2.5, 0.0).unwrap();
        let h = hp_hamiltonian(&p, 3, 4).unwrap();
        let s = h.space().clone();
        assert_eq!(
            s.factors(),
            &[Factor::Fock { cutoff: 3 }, Factor::Fock { cutoff: 4 }]
        );
        for na in 0..=3 {
            for nb in 0..=4 {
                let k = s.flat_index(&[na, nb]);
                assert_eq!(h.get(k, k), c(na as f64 + 2.5 * nb as f64));
            }
        }
        assert!(hp_hamiltonian(&p, 0, 3).is_err());
    }

    #[test]
    fn hp_resonant_mode_swap_symmetry() {
        let p = ModelParams::from_ratio(0.8, 0.8, 0.7).unwrap();
        let h = hp_hamiltonian(&p, 9, 9).unwrap();
        let s = h.space().clone();
        let swap = |k: usize| {
            let idx = s.local_indices(k);
            s.flat_index(&[idx[1], idx[0]])
        };
        let swapped: Vec<_> = h
            .entries()
            .iter()
            .map(|&(r, col, v)| (swap(r), swap(col), v))
            .collect();
        let swapped = SparseOperator::from_entries(s.clone(), swapped, true).unwrap();
        assert_eq!(swapped.entries(), h.entries());
    }

    #[test]
    fn rabi_uncoupled() {
        let p = ModelParams::new(0.5, 3.0, 0.0)
            .unwrap()
            .with_cutoff(Cutoff::Fixed(4));
        let h = rabi_hamiltonian(&p).unwrap();
        let s = h.space().clone();
        for n in 0..=4 {
            assert_eq!(
                h.get(s.flat_index(&[n, 0]), s.flat_index(&[n, 0])),
                c(0.5 * n as f64 - 1.5)
            );
            assert_eq!(
                h.get(s.flat_index(&[n, 1]), s.flat_index(&[n, 1])),
                c(0.5 * n as f64 + 1.5)
            );
        }
    }

    #[test]
    fn effective_oscillator_elements() {
        let p = ModelParams::new(1.0, 1.0, 0.0).unwrap();
        let h = effective_oscillator_hamiltonian(&p, 5).unwrap();
        for n in 0..=5 {
            assert_eq!(h.get(n, n), c(n as f64));
        }
        assert_eq!(h.nnz(), 5);
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let h = effective_oscillator_hamiltonian(&p, 5).unwrap();
        // κ = 1/4: diag n − (2n + 1)/4, off-diagonal −√(n(n−1))/4
        assert_eq!(h.get(3, 3), c(3.0 - 1.75));
        assert_eq!(h.get(1, 3), c(-(6f64).sqrt() / 4.0));
        let p = ModelParams::new(1.0, 1.0, 2.0).unwrap();
        assert!(matches!(effective_oscillator_hamiltonian(&p, 5), Err(Error::Singular { .. })));
        assert!(matches!(hp_hamiltonian(&p, 5, 5), Err(Error::Singular { .. })));
    }
}
