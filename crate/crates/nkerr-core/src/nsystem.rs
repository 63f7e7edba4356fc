//! The driven four-level N-configuration master equation on the composite
//! atom⊗Fock space.
//!
//! The cavity couples the 1↔2 and 3↔4 transitions (rates g₁, g₂), a
//! classical control field drives 2↔3 (Rabi rate Ω_c), and the cavity mode
//! is pumped coherently (amplitude E_p). In the rotating frame:
//!
//! H/ħ = Δ₂₁σ₂₂ + Δ₃₁σ₃₃ + Δ₄₁σ₄₄
//!       + g₁(a†σ₁₂ + σ₂₁a) + g₂(a†σ₃₄ + σ₄₃a)
//!       + (Ω_c*σ₃₂ + Ω_c σ₂₃) + E_p(a + a†)
//!
//! Dissipation: a cavity channel (κ, a), one channel (γᵢⱼ, σⱼᵢ) per decay
//! i→j, and optional pure-dephasing channels (γ_kk, σ_kk).

use ndarray::prelude::*;

use crate::algebra::{
    atomic_sigma, dagger, fock_annihilation, liouvillian_matrix, HilbertSpace, Operator,
    SuperOperator, C64,
};
use crate::circuit::HBAR;
use crate::error::CoreError;
use crate::Result;

/// Full parameter set of the master equation. All rates are angular and in
/// consistent units (use κ = 1 for dimensionless figure work).
#[derive(Debug, Clone, PartialEq)]
pub struct NSystemParams {
    /// Cavity coupling on 1↔2.
    pub g1: f64,
    /// Cavity coupling on 3↔4.
    pub g2: f64,
    /// Control Rabi rate on 2↔3 (complex; every tabulated scenario is real).
    pub omega_c: C64,
    /// Coherent cavity drive amplitude.
    pub e_p: f64,
    /// Rotating-frame level shifts relative to level 1.
    pub delta_21: f64,
    pub delta_31: f64,
    pub delta_41: f64,
    /// Cavity decay rate.
    pub kappa: f64,
    /// Decay rates γ[i][j] for the transition (i+1) → (j+1); only
    /// off-diagonal entries may be nonzero.
    pub gamma: [[f64; 4]; 4],
    /// Pure dephasing rate per level (channel operator σ_kk).
    pub gamma_ph: [f64; 4],
    /// Fock truncation.
    pub n_max: usize,
}

impl NSystemParams {
    /// All couplings and drives off, κ = 1, no atomic decay.
    pub fn bare_cavity(kappa: f64, e_p: f64, n_max: usize) -> Self {
        Self {
            g1: 0.0,
            g2: 0.0,
            omega_c: C64::new(0.0, 0.0),
            e_p,
            delta_21: 0.0,
            delta_31: 0.0,
            delta_41: 0.0,
            kappa,
            gamma: [[0.0; 4]; 4],
            gamma_ph: [0.0; 4],
            n_max,
        }
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.n_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa < 0.0 {
            return Err(CoreError::NegativeRate(self.kappa));
        }
        for i in 0..4 {
            for j in 0..4 {
                if self.gamma[i][j] < 0.0 {
                    return Err(CoreError::NegativeRate(self.gamma[i][j]));
                }
                if i == j && self.gamma[i][j] != 0.0 {
                    return Err(CoreError::InvalidParameter(format!(
                        "gamma[{0}][{0}] must be zero; use gamma_ph for dephasing",
                        i + 1
                    )));
                }
            }
        }
        for k in 0..4 {
            if self.gamma_ph[k] < 0.0 {
                return Err(CoreError::NegativeRate(self.gamma_ph[k]));
            }
        }
        if self.n_max < 2 {
            return Err(CoreError::InvalidParameter("n_max must be at least 2".into()));
        }
        Ok(())
    }

    /// Decay channels plus dephasing channels plus the cavity channel.
    pub fn channel_count(&self) -> usize {
        let decays = self.gamma.iter().flatten().filter(|g| **g > 0.0).count();
        let dephasings = self.gamma_ph.iter().filter(|g| **g > 0.0).count();
        1 + decays + dephasings
    }
}

/// Rotating-frame level shifts from the physical detunings
/// Δ = ω₄₃ − ω_a, δ = ω₂₁ − ω_a, δ_c = ω₂₃ − ω_c (cavity frame at the probe,
/// control frame at ω_c):
/// Δ₂₁ = δ, Δ₃₁ = δ − δ_c, Δ₄₁ = δ − δ_c + Δ.
pub fn detuning_map(delta_big: f64, delta_small: f64, delta_control: f64) -> (f64, f64, f64) {
    let d21 = delta_small;
    let d31 = delta_small - delta_control;
    let d41 = delta_small - delta_control + delta_big;
    (d21, d31, d41)
}

/// Cavity drive amplitude from incident power: E_p = √(Pκ/(ħω_a)), the
/// dimensional completion (ħ restored) of E_p ∼ √(Pκ/ω_a). Direct entry of
/// E_p in units of κ remains the primary interface.
pub fn drive_from_power(power: f64, kappa: f64, omega_a: f64) -> Result<f64> {
    if power < 0.0 {
        return Err(CoreError::InvalidParameter(format!("negative power {power}")));
    }
    Ok((power * kappa / (HBAR * omega_a)).sqrt())
}

/// Inverse of [`drive_from_power`].
pub fn power_from_drive(e_p: f64, kappa: f64, omega_a: f64) -> f64 {
    e_p * e_p * HBAR * omega_a / kappa
}

/// Assemble the system Hamiltonian on `space`.
pub fn system_hamiltonian(p: &NSystemParams, space: HilbertSpace) -> Result<Operator> {
    p.validate()?;
    if space.atom_dim() != 4 {
        return Err(CoreError::DimensionMismatch(
            "N-system needs a four-level atomic factor".into(),
        ));
    }
    let a = fock_annihilation(space);
    let adag = a.dagger();
    let re = |x: f64| C64::new(x, 0.0);

    let sig = |i, j| atomic_sigma(space, i, j);
    let mut h = Array2::<C64>::zeros((space.total_dim(), space.total_dim()));
    h.scaled_add(re(p.delta_21), &sig(2, 2)?.matrix);
    h.scaled_add(re(p.delta_31), &sig(3, 3)?.matrix);
    h.scaled_add(re(p.delta_41), &sig(4, 4)?.matrix);

    let jc1 = adag.matrix.dot(&sig(1, 2)?.matrix);
    h.scaled_add(re(p.g1), &(&jc1 + &dagger(&jc1)));
    let jc2 = adag.matrix.dot(&sig(3, 4)?.matrix);
    h.scaled_add(re(p.g2), &(&jc2 + &dagger(&jc2)));

    h.scaled_add(p.omega_c.conj(), &sig(3, 2)?.matrix);
    h.scaled_add(p.omega_c, &sig(2, 3)?.matrix);

    h.scaled_add(re(p.e_p), &(&a.matrix + &adag.matrix));
    Operator::new(space, h)
}

/// Collapse channels in deterministic order: the cavity first, then decays
/// (i, j) scanned row-major, then dephasing k = 1..4.
pub fn collapse_channels(p: &NSystemParams, space: HilbertSpace) -> Result<Vec<(f64, Operator)>> {
    p.validate()?;
    let mut channels = Vec::with_capacity(p.channel_count());
    channels.push((p.kappa, fock_annihilation(space)));
    for i in 0..4 {
        for j in 0..4 {
            if p.gamma[i][j] > 0.0 {
                // decay (i+1) → (j+1) jumps with σ_{ji}
                channels.push((p.gamma[i][j], atomic_sigma(space, j + 1, i + 1)?));
            }
        }
    }
    for k in 0..4 {
        if p.gamma_ph[k] > 0.0 {
            channels.push((p.gamma_ph[k], atomic_sigma(space, k + 1, k + 1)?));
        }
    }
    Ok(channels)
}

/// Hamiltonian and collapse channels assembled into the master-equation
/// generator on the space implied by `p.n_max`.
pub fn build_liouvillian(p: &NSystemParams) -> Result<SuperOperator> {
    let space = p.space()?;
    let h = system_hamiltonian(p, space)?;
    let channels = collapse_channels(p, space)?;
    liouvillian_matrix(&h, &channels)
}

/// Decay-rate matrix of the figure presets: γ₂₃ = γ₄₁ = 0.01κ and
/// γ₂₁ = γ₄₃ = γ₃₁ = γ₄₂ = 0.1κ, all six downhill channels open.
pub fn figure_decay_rates(kappa: f64) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    g[1][0] = 0.1 * kappa; // 2 → 1
    g[1][2] = 0.01 * kappa; // 2 → 3
    g[2][0] = 0.1 * kappa; // 3 → 1
    g[3][0] = 0.01 * kappa; // 4 → 1
    g[3][1] = 0.1 * kappa; // 4 → 2
    g[3][2] = 0.1 * kappa; // 4 → 3
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::frobenius;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray_linalg::{Eigh, UPLO};

    fn fig3_params(e_p: f64, omega_c: f64, n_max: usize) -> NSystemParams {
        let (d21, d31, d41) = detuning_map(0.5, 0.5, 0.0);
        NSystemParams {
            g1: 300.0,
            g2: 300.0,
            omega_c: C64::new(omega_c, 0.0),
            e_p,
            delta_21: d21,
            delta_31: d31,
            delta_41: d41,
            kappa: 1.0,
            gamma: figure_decay_rates(1.0),
            gamma_ph: [0.0; 4],
            n_max,
        }
    }

    #[test]
    fn zero_params_give_zero_hamiltonian() {
        let p = NSystemParams::bare_cavity(0.0, 0.0, 3);
        let space = p.space().unwrap();
        let h = system_hamiltonian(&p, space).unwrap();
        assert_abs_diff_eq!(frobenius(&h.matrix), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_hermitian_with_complex_control() {
        let mut p = fig3_params(0.1, 500.0, 3);
        p.omega_c = C64::new(1.0, 2.0);
        let space = p.space().unwrap();
        let h = system_hamiltonian(&p, space).unwrap();
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn resonant_jaynes_cummings_vacuum_rabi_splitting() {
        // g₂ = Ω_c = 0, Δ = 0: one-excitation eigenvalues ±g₁ in the
        // {|1,1⟩, |2,0⟩} block
        let mut p = NSystemParams::bare_cavity(0.0, 0.0, 2);
        p.g1 = 2.5;
        let space = p.space().unwrap();
        let h = system_hamiltonian(&p, space).unwrap();
        let i10 = space.index(0, 1); // |level 1, n=1⟩
        let i20 = space.index(1, 0); // |level 2, n=0⟩
        let block = array![
            [h.matrix[[i10, i10]], h.matrix[[i10, i20]]],
            [h.matrix[[i20, i10]], h.matrix[[i20, i20]]]
        ];
        let (vals, _) = block.eigh(UPLO::Lower).unwrap();
        assert_relative_eq!(vals[0], -p.g1, max_relative = 1e-12);
        assert_relative_eq!(vals[1], p.g1, max_relative = 1e-12);
    }

    #[test]
    fn block_diagonal_in_atom_when_uncoupled() {
        // g₁ = g₂ = Ω_c = 0: H has no matrix elements between atomic levels
        let mut p = NSystemParams::bare_cavity(0.0, 0.3, 4);
        p.delta_21 = 1.0;
        p.delta_31 = -0.5;
        p.delta_41 = 2.0;
        let space = p.space().unwrap();
        let h = system_hamiltonian(&p, space).unwrap();
        let n = space.fock_dim();
        for r in 0..space.total_dim() {
            for c in 0..space.total_dim() {
                if r / n != c / n {
                    assert_eq!(h.matrix[[r, c]], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn figure_channel_census() {
        // preset rate set: six decays plus the cavity channel
        let p = fig3_params(0.1, 500.0, 2);
        let space = p.space().unwrap();
        let ch = collapse_channels(&p, space).unwrap();
        assert_eq!(ch.len(), 7);
        assert_eq!(p.channel_count(), 7);
    }

    #[test]
    fn only_cavity_channel_without_atomic_decay() {
        let p = NSystemParams::bare_cavity(1.0, 0.1, 3);
        let space = p.space().unwrap();
        let ch = collapse_channels(&p, space).unwrap();
        assert_eq!(ch.len(), 1);
        assert_relative_eq!(ch[0].0, 1.0);
    }

    #[test]
    fn dephasing_adds_four_channels() {
        let mut p = fig3_params(0.1, 500.0, 2);
        let gamma_ph = 2.5 * 0.1; // γ_ph = 2.5·γᵢⱼ
        p.gamma_ph = [gamma_ph; 4];
        let space = p.space().unwrap();
        let ch = collapse_channels(&p, space).unwrap();
        assert_eq!(ch.len(), 11);
        // dephasing operators are the level projectors
        let (rate, op) = &ch[7];
        assert_relative_eq!(*rate, gamma_ph);
        let sq = op.matrix.dot(&op.matrix);
        assert_abs_diff_eq!(frobenius(&(&sq - &op.matrix)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn detuning_map_examples() {
        assert_eq!(detuning_map(0.0, 0.0, 0.0), (0.0, 0.0, 0.0));
        // blockade-landscape setting (Δ, δ) = (0.5, 0.5), resonant control
        assert_eq!(detuning_map(0.5, 0.5, 0.0), (0.5, 0.5, 1.0));
        // squeezing setting (Δ, δ) = (5.13, −4.89), resonant control
        let (d21, d31, d41) = detuning_map(5.13, -4.89, 0.0);
        assert_relative_eq!(d21, -4.89);
        assert_relative_eq!(d31, -4.89);
        assert_relative_eq!(d41, 0.24, max_relative = 1e-12);
    }

    #[test]
    fn drive_power_roundtrip() {
        let kappa = 2.0 * std::f64::consts::PI * 1e6;
        let omega_a = 2.0 * std::f64::consts::PI * 5e9;
        assert_eq!(drive_from_power(0.0, kappa, omega_a).unwrap(), 0.0);
        let p0 = 1e-15;
        let e1 = drive_from_power(p0, kappa, omega_a).unwrap();
        let e4 = drive_from_power(4.0 * p0, kappa, omega_a).unwrap();
        assert_relative_eq!(e4, 2.0 * e1, max_relative = 1e-12);
        let back = power_from_drive(e1, kappa, omega_a);
        assert_relative_eq!(back, p0, max_relative = 1e-12);
        assert!(drive_from_power(-1.0, kappa, omega_a).is_err());
    }

    #[test]
    fn validation_rejects_diagonal_gamma_and_negative_rates() {
        let mut p = fig3_params(0.1, 500.0, 2);
        p.gamma[2][2] = 0.1;
        assert!(p.validate().is_err());
        let mut q = fig3_params(0.1, 500.0, 2);
        q.gamma[1][0] = -0.1;
        assert!(q.validate().is_err());
    }
}
