//! Single-mode χ⁽³⁾ reference cavity: H = Δ_a a†a + η a†²a² + E_p(a + a†)
//! with a decay channel (κ, a). Its numerically exact steady state converts a
//! measured g²(0) into an effective self-Kerr rate η by root finding.

use crate::algebra::{
    dagger, fock_annihilation, fock_ladder, kron, liouvillian_matrix, HilbertSpace, Operator,
    SuperOperator, C64,
};
use crate::error::CoreError;
use crate::observables::{g2_zero, G2Result};
use crate::solver::{converged_steady_state, ConvergedSolve, TruncationPolicy};
use crate::Result;

use ndarray::prelude::*;

/// Parameters of the reference Kerr cavity, in consistent angular units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrParams {
    /// Self-Kerr rate η.
    pub eta: f64,
    /// Cavity decay κ (must be positive).
    pub kappa: f64,
    /// Coherent drive amplitude.
    pub e_p: f64,
    /// Cavity detuning; the blockade analysis drives on resonance.
    pub delta_a: f64,
    /// Base Fock truncation.
    pub n_max: usize,
}

impl KerrParams {
    pub fn resonant(eta: f64, kappa: f64, e_p: f64) -> Self {
        Self { eta, kappa, e_p, delta_a: 0.0, n_max: 8 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa <= 0.0 {
            return Err(CoreError::InvalidParameter("kappa must be positive".into()));
        }
        if self.n_max < 3 {
            return Err(CoreError::InvalidParameter("n_max must be at least 3".into()));
        }
        Ok(())
    }
}

/// Master-equation generator of the Kerr cavity at the given truncation.
pub fn build_liouvillian(p: &KerrParams, fock_dim: usize) -> Result<SuperOperator> {
    p.validate()?;
    let space = HilbertSpace::single_mode(fock_dim)?;
    let a_bare = fock_ladder(fock_dim);
    let num = dagger(&a_bare).dot(&a_bare);
    // a†²a² = n(n−1), diagonal
    let n2 = num.dot(&num) - &num;
    let drive = &a_bare + &dagger(&a_bare);

    let mut h = Array2::<C64>::zeros((fock_dim, fock_dim));
    h.scaled_add(C64::new(p.delta_a, 0.0), &num);
    h.scaled_add(C64::new(p.eta, 0.0), &n2);
    h.scaled_add(C64::new(p.e_p, 0.0), &drive);
    // single-mode space: atom factor is trivial
    let h_full = Operator::new(space, kron(&Array2::eye(1), &h))?;
    liouvillian_matrix(&h_full, &[(p.kappa, fock_annihilation(space))])
}

/// Steady state of the Kerr cavity with truncation escalation; errors out if
/// the ladder tops out unconverged.
pub fn kerr_steady_state(p: &KerrParams) -> Result<ConvergedSolve> {
    let params = *p;
    let policy = TruncationPolicy {
        base: p.n_max.max(3),
        cap: (p.n_max.max(3) * 4).max(24),
        verify_resolve: true,
    };
    let solve = converged_steady_state(&move |n| build_liouvillian(&params, n), policy)?;
    if !solve.converged {
        return Err(CoreError::TruncationNonConvergence(format!(
            "Kerr steady state unconverged at fock_dim {} (top population {:.3e})",
            solve.fock_dim, solve.state.top_fock_population
        )));
    }
    Ok(solve)
}

/// g²(0) and n̄ of the driven Kerr cavity.
pub fn kerr_g2_zero(p: &KerrParams) -> Result<G2Result> {
    let solve = kerr_steady_state(p)?;
    g2_zero(&solve.state)
}

/// Bisection window for log₁₀(η/κ) used by [`eta_fit`].
pub const ETA_LOG_RANGE: (f64, f64) = (-3.0, 12.0);
/// Maximum bisection steps.
pub const ETA_MAX_STEPS: usize = 60;
/// Relative tolerance on the fitted g²(0).
pub const ETA_FIT_REL_TOL: f64 = 1e-3;

/// Invert g²(0) ↦ η for the Kerr cavity at fixed (E_p, κ): bracketed
/// bisection on log₁₀(η/κ), relying on g²(0) decreasing monotonically with η
/// at weak drive. Targets outside the achievable range are reported together
/// with the attainable bounds.
pub fn eta_fit(target_g2: f64, e_p: f64, kappa: f64) -> Result<f64> {
    if !(target_g2 > 0.0 && target_g2 < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "target g2(0) must lie strictly inside (0, 1), got {target_g2}"
        )));
    }
    let g2_at = |log_eta: f64| -> Result<f64> {
        let p = KerrParams::resonant(kappa * 10f64.powf(log_eta), kappa, e_p);
        Ok(kerr_g2_zero(&p)?.g2_zero)
    };

    let (mut lo, mut hi) = ETA_LOG_RANGE;
    let g2_lo = g2_at(lo)?; // small η → g² near 1
    let g2_hi = g2_at(hi)?; // large η → hard blockade
    if target_g2 > g2_lo || target_g2 < g2_hi {
        return Err(CoreError::TargetOutOfRange { target: target_g2, lo: g2_hi, hi: g2_lo });
    }

    for _ in 0..ETA_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        let g2_mid = g2_at(mid)?;
        if (g2_mid - target_g2).abs() <= ETA_FIT_REL_TOL * target_g2 {
            return Ok(kappa * 10f64.powf(mid));
        }
        if g2_mid > target_g2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // interval exhausted without hitting the tolerance band
    let mid = 0.5 * (lo + hi);
    let g2_mid = g2_at(mid)?;
    if (g2_mid - target_g2).abs() <= ETA_FIT_REL_TOL * target_g2 {
        Ok(kappa * 10f64.powf(mid))
    } else {
        Err(CoreError::TruncationNonConvergence(format!(
            "eta bisection stalled: g2({mid:.4}) = {g2_mid:.6e} vs target {target_g2:.6e}"
        )))
    }
}
