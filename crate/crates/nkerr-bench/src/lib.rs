//! Shared model builders for the solver benchmarks.

use num_complex::Complex64 as C64;

use nkerr_core::nsystem::{detuning_map, figure_decay_rates, NSystemParams};

/// Blockade-point parameter set at a given Fock truncation.
pub fn blockade_params(n_max: usize) -> NSystemParams {
    let (d21, d31, d41) = detuning_map(0.5, 0.5, 0.0);
    NSystemParams {
        g1: 300.0,
        g2: 300.0,
        omega_c: C64::new(500.0, 0.0),
        e_p: 0.1,
        delta_21: d21,
        delta_31: d31,
        delta_41: d41,
        kappa: 1.0,
        gamma: figure_decay_rates(1.0),
        gamma_ph: [0.0; 4],
        n_max,
    }
}
