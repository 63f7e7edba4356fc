//! Device physics for the coupled Cooper-pair-box pair: electrostatic
//! geometry, charging and Josephson energies, the two-qubit Hamiltonian in
//! the product basis {|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩}, and its four-level spectrum.
//!
//! File-facing quantities are SI (metres, farads, joules, webers); every
//! frequency returned from here is angular (rad/s).

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::CoreError;
use crate::Result;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Lateral geometry of the two coplanar superconducting islands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    /// Island length l (m).
    pub length: f64,
    /// Island width w (m).
    pub width: f64,
    /// Inter-island gap r (m).
    pub gap: f64,
    /// Relative permittivity of the substrate.
    pub epsilon_r: f64,
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        if self.length <= 0.0 || self.width <= 0.0 || self.gap <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "geometry lengths must be positive".into(),
            ));
        }
        if self.width + self.gap >= self.length {
            return Err(CoreError::InvalidParameter(
                "geometry requires w + r < l".into(),
            ));
        }
        if self.epsilon_r < 1.0 {
            return Err(CoreError::InvalidParameter(
                "relative permittivity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Raw circuit inputs for the two boxes, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Junction capacitance per box (F).
    pub junction_capacitance: [f64; 2],
    /// Gate capacitance per box (F).
    pub gate_capacitance: [f64; 2],
    /// Mutual capacitance between the islands (F).
    pub mutual_capacitance: f64,
    /// Bare Josephson energy per junction (J).
    pub josephson_energy: [f64; 2],
    /// Gate charge per box, in Cooper pairs.
    pub gate_charge: [f64; 2],
    /// Flux threading each box, as a fraction of the flux quantum Φ/Φ₀.
    pub flux_ratio: [f64; 2],
}

impl CircuitParams {
    /// Total island capacitance C_Σj = C⁽ᵐ⁾ + C_g⁽ʲ⁾ + C⁽ʲ⁾.
    pub fn sigma_capacitance(&self, j: usize) -> f64 {
        self.mutual_capacitance + self.gate_capacitance[j] + self.junction_capacitance[j]
    }

    /// Ξ = C_Σ1·C_Σ2 − C⁽ᵐ⁾²; must stay positive for finite energies.
    pub fn xi_determinant(&self) -> f64 {
        self.sigma_capacitance(0) * self.sigma_capacitance(1)
            - self.mutual_capacitance * self.mutual_capacitance
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..2 {
            if self.junction_capacitance[j] <= 0.0 || self.gate_capacitance[j] <= 0.0 {
                return Err(CoreError::InvalidParameter(
                    "capacitances must be positive".into(),
                ));
            }
        }
        if self.mutual_capacitance <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "mutual capacitance must be positive".into(),
            ));
        }
        let xi = self.xi_determinant();
        if xi <= 0.0 {
            return Err(CoreError::SingularCapacitance { xi });
        }
        Ok(())
    }
}

/// K(x) = x·asinh(1/x) + asinh(x), the slab-geometry kernel of the mutual
/// capacitance formula.
pub fn slab_kernel(x: f64) -> f64 {
    x * (1.0 / x).asinh() + x.asinh()
}

/// Mutual capacitance of two coplanar islands,
/// C⁽ᵐ⁾ = 2π·r·ε_r·ε₀·w / ξ with ξ = K(2r/l) + K(2w/l) − K(2(w+r)/l).
pub fn mutual_capacitance(geom: &GeometryParams) -> Result<f64> {
    geom.validate()?;
    let l = geom.length;
    let xi = slab_kernel(2.0 * geom.gap / l) + slab_kernel(2.0 * geom.width / l)
        - slab_kernel(2.0 * (geom.width + geom.gap) / l);
    if xi <= 0.0 {
        return Err(CoreError::DegenerateGeometry { xi });
    }
    Ok(2.0 * std::f64::consts::PI * geom.gap * geom.epsilon_r * EPSILON_0 * geom.width / xi)
}

/// Charging energies (E_C⁽¹⁾, E_C⁽²⁾, E_m) in joules:
/// E_C⁽ʲ⁾ = (2e)²·C_Σ_other / (2Ξ),  E_m = (2e)²·C⁽ᵐ⁾ / (2Ξ).
pub fn charging_energies(c: &CircuitParams) -> Result<(f64, f64, f64)> {
    c.validate()?;
    let xi = c.xi_determinant();
    let q2 = (2.0 * E_CHARGE) * (2.0 * E_CHARGE);
    let ec1 = q2 * c.sigma_capacitance(1) / (2.0 * xi);
    let ec2 = q2 * c.sigma_capacitance(0) / (2.0 * xi);
    let em = q2 * c.mutual_capacitance / (2.0 * xi);
    Ok((ec1, ec2, em))
}

/// Flux-tuned Josephson energy E_J(Φ) = 2·ℰ_J·cos(πΦ/Φ₀); the sign is kept.
pub fn josephson_from_flux(bare_energy: f64, flux: f64, flux_quantum: f64) -> f64 {
    2.0 * bare_energy * (std::f64::consts::PI * flux / flux_quantum).cos()
}

/// Derived qubit-level frequencies of one box pair (all rad/s):
/// ω_z⁽ʲ⁾ = (E_C⁽ʲ⁾ + E_m/2)/ħ, ω_x⁽ʲ⁾ = E_J⁽ʲ⁾(Φ)/ħ, J = E_m/(4ħ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxFrequencies {
    pub omega_z: [f64; 2],
    pub omega_x: [f64; 2],
    pub exchange: f64,
}

/// Map circuit parameters to the level-structure frequencies. The tunable
/// Josephson term uses E_J(Φ) = 2ℰ_J cos(πΦ/Φ₀) with ħω_x = E_J.
pub fn box_frequencies(c: &CircuitParams) -> Result<BoxFrequencies> {
    let (ec1, ec2, em) = charging_energies(c)?;
    let ej = [
        josephson_from_flux(c.josephson_energy[0], c.flux_ratio[0], 1.0),
        josephson_from_flux(c.josephson_energy[1], c.flux_ratio[1], 1.0),
    ];
    Ok(BoxFrequencies {
        omega_z: [(ec1 + em / 2.0) / HBAR, (ec2 + em / 2.0) / HBAR],
        omega_x: [ej[0] / HBAR, ej[1] / HBAR],
        exchange: em / (4.0 * HBAR),
    })
}

/// Two-qubit molecule Hamiltonian (units rad/s) in the product basis
/// {|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩} with Ẑ = |0⟩⟨0|−|1⟩⟨1|, X̂ = |0⟩⟨1|+|1⟩⟨0|:
///
/// H/ħ = Σⱼ ω̄_z⁽ʲ⁾ Ẑ⁽ʲ⁾ − Σⱼ ω_x⁽ʲ⁾ X̂⁽ʲ⁾ + J Ẑ⁽¹⁾Ẑ⁽²⁾
pub fn molecule_hamiltonian(
    omega_z_bar: (f64, f64),
    omega_x: (f64, f64),
    exchange: f64,
) -> Array2<f64> {
    let (z1, z2) = omega_z_bar;
    let (x1, x2) = omega_x;
    let j = exchange;
    // basis order: 00, 01, 10, 11 (left qubit is box 1)
    let mut h = Array2::zeros((4, 4));
    h[[0, 0]] = z1 + z2 + j;
    h[[1, 1]] = z1 - z2 - j;
    h[[2, 2]] = -z1 + z2 - j;
    h[[3, 3]] = -z1 - z2 + j;
    // −ω_x⁽¹⁾ X⊗I
    h[[0, 2]] = -x1;
    h[[2, 0]] = -x1;
    h[[1, 3]] = -x1;
    h[[3, 1]] = -x1;
    // −ω_x⁽²⁾ I⊗X
    h[[0, 1]] = -x2;
    h[[1, 0]] = -x2;
    h[[2, 3]] = -x2;
    h[[3, 2]] = -x2;
    h
}

/// Eigenstructure of the molecule with levels labeled in energy order:
/// E₁ ≤ E₃ ≤ E₂ ≤ E₄ (ground |1⟩, then |3⟩, |2⟩, |4⟩).
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpectrum {
    /// Energies indexed by level label − 1 (i.e. `[E₁, E₂, E₃, E₄]`), rad/s.
    pub energies: [f64; 4],
    /// Outer-to-inner splitting ratio (E₄−E₁)/(E₂−E₃); equals ε of the
    /// co-resonant closed form and is ≥ 1 by the level ordering.
    pub epsilon: f64,
    /// Transition table ω[i][j] = Eᵢ₊₁ − Eⱼ₊₁.
    pub omega: [[f64; 4]; 4],
    /// Detuning-asymmetry ratio R = ω₄₂/ω₂₁.
    pub r_ratio: f64,
    /// R̄ = ω₃₄ − ω₁₂ (rad/s).
    pub r_bar: f64,
}

impl MoleculeSpectrum {
    /// ωᵢⱼ = Eᵢ − Eⱼ with 1-based level labels.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.omega[i - 1][j - 1]
    }

    /// True if any pair of levels is degenerate within `tol` (relative to
    /// the overall spectral width).
    pub fn degenerate_pairs(&self, tol: f64) -> Vec<(usize, usize)> {
        let span = (self.energies[3] - self.energies[0]).abs().max(f64::MIN_POSITIVE);
        let mut pairs = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (self.energies[i] - self.energies[j]).abs() <= tol * span {
                    pairs.push((i + 1, j + 1));
                }
            }
        }
        pairs
    }
}

/// Diagonalise a 4×4 Hermitian molecule Hamiltonian and label the levels
/// E₁ ≤ E₃ ≤ E₂ ≤ E₄. Degenerate energies are ordered deterministically by
/// the dominant product-basis component of their eigenvectors.
pub fn spectrum(h4: &Array2<f64>) -> Result<MoleculeSpectrum> {
    if h4.dim() != (4, 4) {
        return Err(CoreError::DimensionMismatch("molecule Hamiltonian must be 4x4".into()));
    }
    if h4.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidParameter(
            "molecule Hamiltonian has non-finite entries".into(),
        ));
    }
    let asym = h4
        .indexed_iter()
        .map(|((r, c), v)| (v - h4[[c, r]]).abs())
        .fold(0.0f64, f64::max);
    let scale = h4.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    if asym > 1e-12 * scale {
        return Err(CoreError::InvalidParameter(
            "molecule Hamiltonian must be symmetric".into(),
        ));
    }

    let (vals, vecs) = h4.eigh(UPLO::Lower)?;
    // ascending energies with ties broken by dominant basis component
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&p, &q| {
        vals[p]
            .partial_cmp(&vals[q])
            .unwrap()
            .then_with(|| dominant_component(&vecs.column(p)).cmp(&dominant_component(&vecs.column(q))))
    });
    let sorted: Vec<f64> = order.iter().map(|&k| vals[k]).collect();

    // ascending → labels (1, 3, 2, 4)
    let energies = [sorted[0], sorted[2], sorted[1], sorted[3]];
    let mut omega = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            omega[i][j] = energies[i] - energies[j];
        }
    }
    let inner = omega[1][2]; // ω₂₃
    let epsilon = if inner.abs() > 0.0 { (energies[3] - energies[0]) / inner } else { f64::INFINITY };
    let r_ratio = if omega[1][0].abs() > 0.0 { omega[3][1] / omega[1][0] } else { f64::INFINITY };
    let r_bar = omega[2][3] - omega[0][1];
    Ok(MoleculeSpectrum { energies, epsilon, omega, r_ratio, r_bar })
}

fn dominant_component(v: &ArrayView1<f64>) -> usize {
    let mut best = 0;
    let mut mag = -1.0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > mag + 1e-12 {
            mag = x.abs();
            best = k;
        }
    }
    best
}

/// Closed-form co-resonance eigenvalues J·(−ε, 1, −1, ε)-sorted, with
/// ε² = 1 + 4ω_x²/J². Returned in label order `[E₁, E₂, E₃, E₄]`.
pub fn co_resonance_energies(omega_x: f64, exchange: f64) -> [f64; 4] {
    let eps = (1.0 + 4.0 * omega_x * omega_x / (exchange * exchange)).sqrt();
    [-exchange * eps, exchange, -exchange, exchange * eps]
}

/// Detunings of the cavity (ω_a) and control (ω_c) fields from the molecule
/// transitions: Δ = ω₄₃ − ω_a, δ = ω₂₁ − ω_a, δ_c = ω₂₃ − ω_c. Positive when
/// the transition lies above the field frequency.
pub fn detunings(spec: &MoleculeSpectrum, omega_a: f64, omega_c: f64) -> (f64, f64, f64) {
    let delta_big = spec.transition(4, 3) - omega_a;
    let delta_small = spec.transition(2, 1) - omega_a;
    let delta_c = spec.transition(2, 3) - omega_c;
    (delta_big, delta_small, delta_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sample_geometry() -> GeometryParams {
        GeometryParams { length: 50e-6, width: 10e-6, gap: 0.5e-6, epsilon_r: 9.0 }
    }

    #[test]
    fn slab_kernel_symmetric_point() {
        // K(1) = 2·asinh(1) = 2·ln(1+√2)
        assert_relative_eq!(slab_kernel(1.0), 1.7627471740390860, max_relative = 1e-15);
    }

    #[test]
    fn mutual_capacitance_reference_geometry() {
        // frozen from an independent high-precision evaluation of K and ξ
        let geom = sample_geometry();
        let l = geom.length;
        let xi = slab_kernel(2.0 * geom.gap / l) + slab_kernel(2.0 * geom.width / l)
            - slab_kernel(2.0 * (geom.width + geom.gap) / l);
        assert_relative_eq!(xi, 0.079615087476417736, max_relative = 1e-13);
        let cm = mutual_capacitance(&geom).unwrap();
        assert_relative_eq!(cm, 3.1444575445567935e-20, max_relative = 1e-13);
    }

    #[test]
    fn mutual_capacitance_grows_with_width() {
        let geom = sample_geometry();
        let wider = GeometryParams { width: 2.0 * geom.width, ..geom };
        assert!(mutual_capacitance(&wider).unwrap() > mutual_capacitance(&geom).unwrap());
    }

    #[test]
    fn mutual_capacitance_linear_in_permittivity() {
        let geom = sample_geometry();
        let doubled = GeometryParams { epsilon_r: 2.0 * geom.epsilon_r, ..geom };
        assert_relative_eq!(
            mutual_capacitance(&doubled).unwrap(),
            2.0 * mutual_capacitance(&geom).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn geometry_validation() {
        let mut geom = sample_geometry();
        geom.width = 49.9e-6; // w + r >= l
        assert!(mutual_capacitance(&geom).is_err());
    }

    fn symmetric_circuit(c_sigma: f64, c_m: f64) -> CircuitParams {
        // split C_Σ − C_m evenly between junction and gate
        let rest = (c_sigma - c_m) / 2.0;
        CircuitParams {
            junction_capacitance: [rest, rest],
            gate_capacitance: [rest, rest],
            mutual_capacitance: c_m,
            josephson_energy: [1e-24, 1e-24],
            gate_charge: [0.5, 0.5],
            flux_ratio: [0.0, 0.0],
        }
    }

    #[test]
    fn charging_energy_decoupling_limit() {
        // C_m → 0: E_m → 0 and E_C⁽ʲ⁾ → (2e)²/(2C_Σj)
        let mut c = symmetric_circuit(16e-18, 1e-26);
        c.junction_capacitance = [8e-18, 8e-18];
        c.gate_capacitance = [8e-18 - 1e-26, 8e-18 - 1e-26];
        let (ec1, _ec2, em) = charging_energies(&c).unwrap();
        let q2 = (2.0 * E_CHARGE) * (2.0 * E_CHARGE);
        let expected = q2 / (2.0 * c.sigma_capacitance(0));
        assert_relative_eq!(ec1, expected, max_relative = 1e-6);
        assert!(em < 1e-8 * ec1);
    }

    #[test]
    fn charging_energy_symmetric_boxes() {
        let c = symmetric_circuit(16e-18, 3.1e-20);
        let (ec1, ec2, _) = charging_energies(&c).unwrap();
        assert_relative_eq!(ec1, ec2, max_relative = 1e-15);
    }

    #[test]
    fn charging_energy_box_exchange_symmetry() {
        let mut c = symmetric_circuit(16e-18, 3.1e-20);
        c.junction_capacitance = [9e-18, 5e-18];
        c.gate_capacitance = [4e-18, 7e-18];
        let (ec1, ec2, em) = charging_energies(&c).unwrap();
        let swapped = CircuitParams {
            junction_capacitance: [c.junction_capacitance[1], c.junction_capacitance[0]],
            gate_capacitance: [c.gate_capacitance[1], c.gate_capacitance[0]],
            ..c
        };
        let (sc1, sc2, sem) = charging_energies(&swapped).unwrap();
        assert_relative_eq!(ec1, sc2, max_relative = 1e-15);
        assert_relative_eq!(ec2, sc1, max_relative = 1e-15);
        assert_relative_eq!(em, sem, max_relative = 1e-15);
    }

    #[test]
    fn exchange_coupling_for_reference_instance() {
        // C_Σ = 16 aF, C_m = 3.1e-20 F → J/2π ≈ 2.35 GHz (frozen from an
        // independent evaluation of E_m/(4ħ·2π))
        let c = symmetric_circuit(16e-18, 3.1e-20);
        let f = box_frequencies(&c).unwrap();
        let j_hz = f.exchange / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(j_hz, 2.3456225139671590e9, max_relative = 1e-12);
        assert!(j_hz > 1e9 && j_hz < 1e10, "coupling should be GHz scale");
    }

    #[test]
    fn josephson_flux_tuning() {
        let e = 3.0e-24;
        assert_relative_eq!(josephson_from_flux(e, 0.0, 1.0), 2.0 * e, max_relative = 1e-15);
        assert_abs_diff_eq!(josephson_from_flux(e, 0.5, 1.0), 0.0, epsilon = 1e-38);
        assert_relative_eq!(josephson_from_flux(e, 1.0 / 3.0, 1.0), e, max_relative = 1e-12);
        // cos sign retained past the zero
        assert!(josephson_from_flux(e, 0.6, 1.0) < 0.0);
    }

    #[test]
    fn molecule_hamiltonian_zz_only() {
        let j = 0.7;
        let h = molecule_hamiltonian((0.0, 0.0), (0.0, 0.0), j);
        let expected = Array2::from_diag(&array![j, -j, -j, j]);
        for (a, b) in h.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn co_resonance_closed_form_matches_diagonalisation() {
        // J/2π = 0.2 GHz, ω_x/2π = 2.6 GHz → ε = 26.019..., ω₂₁ = 2π·5.4038 GHz
        let tau = 2.0 * std::f64::consts::PI;
        let j = tau * 0.2e9;
        let wx = tau * 2.6e9;
        let h = molecule_hamiltonian((0.0, 0.0), (wx, wx), j);
        let spec = spectrum(&h).unwrap();
        let closed = co_resonance_energies(wx, j);
        for k in 0..4 {
            assert_relative_eq!(spec.energies[k], closed[k], max_relative = 1e-12);
        }
        assert_relative_eq!(spec.epsilon, 26.019223662515375, max_relative = 1e-12);
        assert_relative_eq!(spec.transition(2, 1), tau * 5.4038447325030750e9, max_relative = 1e-12);
        // co-resonance: inner gap ω₂₃ = 2J, outer gaps equal
        assert_relative_eq!(spec.transition(2, 3), 2.0 * j, max_relative = 1e-12);
        assert_relative_eq!(spec.transition(4, 3), spec.transition(2, 1), max_relative = 1e-12);
        // symmetric about zero
        assert_relative_eq!(spec.energies[0], -spec.energies[3], max_relative = 1e-12);
        assert_relative_eq!(spec.energies[2], -spec.energies[1], max_relative = 1e-12);
    }

    #[test]
    fn spectrum_degenerate_at_zero_tunneling() {
        let j = 1.0;
        let h = molecule_hamiltonian((0.0, 0.0), (0.0, 0.0), j);
        let spec = spectrum(&h).unwrap();
        assert_relative_eq!(spec.epsilon, 1.0, max_relative = 1e-12);
        let pairs = spec.degenerate_pairs(1e-9);
        // {J, J, −J, −J}: levels (1,3) and (2,4) coincide
        assert!(pairs.contains(&(1, 3)));
        assert!(pairs.contains(&(2, 4)));
    }

    #[test]
    fn spectrum_rejects_asymmetric_input() {
        let mut h = molecule_hamiltonian((0.0, 0.0), (1.0, 1.0), 0.5);
        h[[0, 1]] += 1e-3;
        assert!(spectrum(&h).is_err());
    }

    #[test]
    fn detunings_vanish_on_resonance() {
        let j = 2.0 * std::f64::consts::PI * 0.2e9;
        let wx = 2.0 * std::f64::consts::PI * 2.6e9;
        let h = molecule_hamiltonian((0.0, 0.0), (wx, wx), j);
        let spec = spectrum(&h).unwrap();
        let omega_a = spec.transition(2, 1);
        let omega_c = spec.transition(2, 3);
        let (dd, ds, dc) = detunings(&spec, omega_a, omega_c);
        assert_abs_diff_eq!(dd / omega_a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ds / omega_a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dc / omega_a, 0.0, epsilon = 1e-12);
        // R̄ vanishes at co-resonance and R = ω₄₂/ω₂₁ = (ε−1)/(ε+1)
        assert_abs_diff_eq!(spec.r_bar / omega_a, 0.0, epsilon = 1e-12);
        let eps = spec.epsilon;
        assert_relative_eq!(spec.r_ratio, (eps - 1.0) / (eps + 1.0), max_relative = 1e-12);
    }

    #[test]
    fn detuned_scenario_rbar_near_kappa() {
        // documented flux-detuning scenario: ω_x/2π = 4 GHz, J/2π = 0.2 GHz,
        // ω_z/2π = 16 GHz, gate offset 2.8e-3, κ/2π = 100 kHz; R̄/κ should be
        // order unity (checked, not assumed)
        let tau = 2.0 * std::f64::consts::PI;
        let wz_bar = tau * 16e9 * 2.8e-3;
        let h = molecule_hamiltonian((wz_bar, wz_bar), (tau * 4e9, tau * 4e9), tau * 0.2e9);
        let spec = spectrum(&h).unwrap();
        let kappa = tau * 100e3;
        let ratio = spec.r_bar.abs() / kappa;
        assert!(
            ratio > 0.05 && ratio < 50.0,
            "R̄/κ = {ratio} not within an order of magnitude of 1"
        );
    }
}
