//! Physical outputs: photon autocorrelations g²(0) and g²(τ), the analytic
//! self-Kerr estimator, the quadrature squeezing spectrum, and the blockade
//! landscape sweep over (E_p, Ω_c).

use ndarray::prelude::*;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::algebra::{
    dagger, expm, fock_annihilation, trace_of_product, vectorize, Operator, SuperOperator, C64,
};
use crate::error::CoreError;
use crate::nsystem::{build_liouvillian, NSystemParams};
use crate::solver::{
    converged_steady_state, spectral_correlations, two_time, ConvergedSolve, CorrelationSeries,
    SeedSide, SteadyState, TruncationPolicy,
};
use crate::Result;

/// Mean photon number below which g²(0) is reported undefined (0/0).
pub const G2_NBAR_FLOOR: f64 = 1e-12;
/// Floor applied before taking log₁₀ of g² values for presentation.
pub const LOG10_CLAMP: f64 = 1e-12;

/// Second-order autocorrelation at zero delay, with the mean photon number
/// it was normalised by and an optional delay series.
#[derive(Debug, Clone)]
pub struct G2Result {
    pub g2_zero: f64,
    pub n_bar: f64,
    pub series: Option<CorrelationSeries>,
}

/// g²(0) = ⟨a†a†aa⟩ / ⟨a†a⟩² from a steady state.
pub fn g2_zero(ss: &SteadyState) -> Result<G2Result> {
    let space = ss.rho.space;
    let a = fock_annihilation(space);
    let ad = a.dagger();
    let n_bar = (&ad * &a).expectation(&ss.rho.matrix).re;
    if n_bar < G2_NBAR_FLOOR {
        return Err(CoreError::UndefinedCorrelation { n_bar });
    }
    let fourth = (&(&ad * &ad) * &(&a * &a)).expectation(&ss.rho.matrix).re;
    Ok(G2Result { g2_zero: (fourth / (n_bar * n_bar)).max(0.0), n_bar, series: None })
}

/// g²(τ) = ⟨a†(0) a†a(τ) a(0)⟩ / ⟨a†a⟩² via the regression theorem, including
/// the τ = 0 point which coincides with [`g2_zero`].
pub fn g2_tau(
    l: &SuperOperator,
    ss: &SteadyState,
    tau_grid: &[f64],
) -> Result<G2Result> {
    let base = g2_zero(ss)?;
    let space = ss.rho.space;
    let a = fock_annihilation(space);
    let ad = a.dagger();
    let n_op = &ad * &a;
    let raw = two_time(l, &n_op, &ad, &a, &ss.rho.matrix, tau_grid, "g2")?;
    let norm = base.n_bar * base.n_bar;
    let values: Vec<C64> = raw.values.iter().map(|v| v / norm).collect();
    Ok(G2Result {
        g2_zero: base.g2_zero,
        n_bar: base.n_bar,
        series: Some(CorrelationSeries::new(raw.abscissa, values, "g2")?),
    })
}

/// log₁₀ with the presentation clamp at 10⁻¹².
pub fn log10_clamped(x: f64) -> f64 {
    x.max(LOG10_CLAMP).log10()
}

/// Analytic weak-coupling estimate of the effective self-Kerr rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaEstimate {
    /// η in the units of the inputs.
    pub eta: f64,
    /// True when (g₁/|Ω_c|)² ≤ 0.1, the stated domain of validity.
    pub regime_valid: bool,
}

/// η = (g₁/Ω_c)²·(g₂²Δ/(γ₄₃²+Δ²) − g₁²δ/((γ₂₁+γ₂₃)²+δ²)),
/// valid for (g₁/Ω_c)² ≪ 1.
#[allow(clippy::too_many_arguments)]
pub fn kerr_eta_estimate(
    g1: f64,
    g2: f64,
    omega_c: C64,
    delta_big: f64,
    delta_small: f64,
    gamma_43: f64,
    gamma_21: f64,
    gamma_23: f64,
) -> Result<EtaEstimate> {
    let oc2 = omega_c.norm_sqr();
    if oc2 == 0.0 {
        return Err(CoreError::InvalidParameter(
            "eta estimate undefined at zero control amplitude".into(),
        ));
    }
    let prefactor = g1 * g1 / oc2;
    let term_34 = g2 * g2 * delta_big / (gamma_43 * gamma_43 + delta_big * delta_big);
    let width_12 = gamma_21 + gamma_23;
    let term_12 = g1 * g1 * delta_small / (width_12 * width_12 + delta_small * delta_small);
    Ok(EtaEstimate { eta: prefactor * (term_34 - term_12), regime_valid: prefactor <= 0.1 })
}

/// Quadrature choice for the squeezing spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// Phase of the steady-state field amplitude ⟨a⟩ (amplitude quadrature);
    /// falls back to θ = 0 when ⟨a⟩ vanishes.
    Auto,
    Fixed(f64),
}

/// Output-field squeezing spectrum normalised so that vacuum = 1:
/// S_θ(ω) = 1 + 2κ ∫_{−∞}^{∞} dτ e^{iωτ} ⟨:ΔX_θ(τ)ΔX_θ(0):⟩_ss
/// with X_θ = a e^{−iθ} + a† e^{iθ}; S < 1 indicates squeezing.
#[derive(Debug, Clone)]
pub struct SqueezeSpectrum {
    pub omega: Vec<f64>,
    pub s: Vec<f64>,
    pub theta: f64,
    /// θ fell back to 0 because ⟨a⟩_ss vanished under `Quadrature::Auto`.
    pub theta_defaulted: bool,
}

impl SqueezeSpectrum {
    pub const VACUUM_LEVEL: f64 = 1.0;

    pub fn min(&self) -> f64 {
        self.s.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn resolve_theta(ss: &SteadyState, quadrature: Quadrature) -> (f64, bool) {
    match quadrature {
        Quadrature::Fixed(t) => (t, false),
        Quadrature::Auto => {
            let amp = ss.field_amplitude();
            if amp.norm() < 1e-12 {
                (0.0, true)
            } else {
                (amp.arg(), false)
            }
        }
    }
}

/// The four normally-ordered, time-ordered fluctuation correlators entering
/// S_θ(ω), kept in one place so the resolvent and FFT routes stay in sync.
/// For τ ≥ 0 (annihilation parts chronological, creation parts
/// anti-chronological, which makes G real and the photocurrent spectrum
/// nonnegative and even):
/// G(τ) = e^{−2iθ}⟨Δa(τ)Δa(0)⟩ + ⟨Δa†(0)Δa(τ)⟩
///        + ⟨Δa†(τ)Δa(0)⟩ + e^{2iθ}⟨Δa†(0)Δa†(τ)⟩.
fn quadrature_terms(space: crate::algebra::HilbertSpace) -> (Operator, Operator) {
    let a = fock_annihilation(space);
    let adag = a.dagger();
    (a, adag)
}

/// Frequency-domain (resolvent) evaluation of the squeezing spectrum, one
/// factorisation per frequency.
pub fn squeezing_spectrum(
    l: &SuperOperator,
    ss: &SteadyState,
    kappa: f64,
    quadrature: Quadrature,
    omega_grid: &[f64],
) -> Result<SqueezeSpectrum> {
    let (theta, theta_defaulted) = resolve_theta(ss, quadrature);
    let (a, adag) = quadrature_terms(ss.rho.space);
    let terms = [
        (&a, &a, SeedSide::Left),        // ⟨Δa(τ)Δa(0)⟩
        (&a, &adag, SeedSide::Right),    // ⟨Δa†(0)Δa(τ)⟩
        (&adag, &a, SeedSide::Left),     // ⟨Δa†(τ)Δa(0)⟩
        (&adag, &adag, SeedSide::Right), // ⟨Δa†(0)Δa†(τ)⟩
    ];
    let solved = spectral_correlations(l, &terms, &ss.rho.matrix, omega_grid)?;
    let phase = C64::from_polar(1.0, -2.0 * theta);
    let s: Vec<f64> = solved
        .iter()
        .map(|t| {
            let one_sided = phase * t[0] + t[1] + t[2] + phase.conj() * t[3];
            1.0 + 2.0 * kappa * 2.0 * one_sided.re
        })
        .collect();
    Ok(SqueezeSpectrum { omega: omega_grid.to_vec(), s, theta, theta_defaulted })
}

/// Agreement report between the FFT-of-correlation route and the resolvent
/// route for S_θ(ω), evaluated at a set of FFT bin frequencies.
#[derive(Debug, Clone)]
pub struct DualMethodReport {
    pub omega: Vec<f64>,
    pub s_fft: Vec<f64>,
    pub s_resolvent: Vec<f64>,
    /// max over bins of |s_fft − s_resolvent| / |s_resolvent|.
    pub max_rel_err: f64,
    /// |G(τ_max)| / max_τ |G(τ)|: how far the correlation decayed before the
    /// window closed.
    pub tail_ratio: f64,
}

/// Time-domain route to the squeezing spectrum: propagate the fluctuation
/// correlators on a uniform τ grid with one cached exponential, then Fourier
/// transform with composite-Simpson weights evaluated through FFTs. `steps`
/// must be even; bin `m` sits at ω = 2πm/(steps·dt).
pub fn squeezing_dual_method_check(
    l: &SuperOperator,
    ss: &SteadyState,
    kappa: f64,
    quadrature: Quadrature,
    dt: f64,
    steps: usize,
    check_bins: &[usize],
) -> Result<DualMethodReport> {
    if steps < 2 || steps % 2 != 0 {
        return Err(CoreError::InvalidParameter("steps must be even and ≥ 2".into()));
    }
    if dt <= 0.0 {
        return Err(CoreError::InvalidParameter("dt must be positive".into()));
    }
    for &m in check_bins {
        if m == 0 || m >= steps / 2 {
            return Err(CoreError::InvalidParameter(format!(
                "check bin {m} outside 1..{}",
                steps / 2
            )));
        }
    }
    let (theta, _) = resolve_theta(ss, quadrature);
    let (a, _) = quadrature_terms(ss.rho.space);
    let rho = &ss.rho.matrix;
    let d = rho.nrows();
    let n = d * d;

    let mean_a = trace_of_product(&a.matrix, rho);
    let eye: Array2<C64> = Array2::eye(d);
    let da = &a.matrix - &eye.mapv(|z| z * mean_a);
    let dad = dagger(&da);

    // two seeds serve all four correlators: Δa·ρ and ρ·Δa†
    let mut x: Array2<C64> = Array2::zeros((n, 2));
    x.column_mut(0).assign(&vectorize(&da.dot(rho)));
    x.column_mut(1).assign(&vectorize(&rho.dot(&dad)));

    // trace functionals: Tr[A·unvec(x)] = vec(Aᵀ)·x
    let w_da = vectorize(&da.t().to_owned());
    let w_dad = vectorize(&dad.t().to_owned());

    let propagator = expm(&l.matrix.mapv(|z| z * C64::new(dt, 0.0)))?;
    let phase = C64::from_polar(1.0, -2.0 * theta);

    let mut g = Vec::with_capacity(steps + 1);
    let mut g_peak = 0.0f64;
    for k in 0..=steps {
        if k > 0 {
            x = propagator.dot(&x);
        }
        let t1 = w_da.dot(&x.column(0)); // ⟨Δa(τ)Δa(0)⟩
        let t2 = w_da.dot(&x.column(1)); // ⟨Δa†(0)Δa(τ)⟩
        let t3 = w_dad.dot(&x.column(0)); // ⟨Δa†(τ)Δa(0)⟩
        let t4 = w_dad.dot(&x.column(1)); // ⟨Δa†(0)Δa†(τ)⟩
        let val = phase * t1 + t2 + t3 + phase.conj() * t4;
        g_peak = g_peak.max(val.norm());
        g.push(val);
    }
    let tail_ratio = g[steps].norm() / g_peak.max(f64::MIN_POSITIVE);

    let transform = simpson_fourier_bins(&g, dt);

    let omegas: Vec<f64> =
        check_bins.iter().map(|&m| 2.0 * std::f64::consts::PI * m as f64 / (steps as f64 * dt)).collect();
    let s_fft: Vec<f64> =
        check_bins.iter().map(|&m| 1.0 + 2.0 * kappa * 2.0 * transform[m].re).collect();

    let resolvent =
        squeezing_spectrum(l, ss, kappa, Quadrature::Fixed(theta), &omegas)?;
    let max_rel_err = s_fft
        .iter()
        .zip(&resolvent.s)
        .map(|(f, r)| (f - r).abs() / r.abs().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);

    Ok(DualMethodReport {
        omega: omegas,
        s_fft,
        s_resolvent: resolvent.s.clone(),
        max_rel_err,
        tail_ratio,
    })
}

/// One-sided transforms T(ω_m) = ∫₀^{Mdt} e^{iω_m τ} G(τ) dτ at the FFT bin
/// frequencies ω_m = 2πm/(M·dt), using composite Simpson weights assembled
/// from one length-M and one length-M/2 FFT. `g` holds M+1 samples.
fn simpson_fourier_bins(g: &[C64], dt: f64) -> Vec<C64> {
    let m_steps = g.len() - 1;
    let half = m_steps / 2;
    let mut planner = FftPlanner::<f64>::new();

    // e^{+iωτ} sums via conjugation of the forward transform
    let fft_all = planner.plan_fft_forward(m_steps);
    let mut buf_all: Vec<rustfft::num_complex::Complex<f64>> =
        g[..m_steps].iter().map(|z| z.conj()).collect();
    fft_all.process(&mut buf_all);

    let fft_even = planner.plan_fft_forward(half);
    let mut buf_even: Vec<rustfft::num_complex::Complex<f64>> =
        (0..half).map(|j| g[2 * j].conj()).collect();
    fft_even.process(&mut buf_even);

    let g0 = g[0];
    let gm = g[m_steps];
    (0..m_steps)
        .map(|m| {
            let s_all = buf_all[m].conj() + gm;
            let s_even = buf_even[m % half].conj() + gm;
            // Simpson weights: 4·(all) − 2·(even-indexed) − endpoints
            (dt / 3.0) * (4.0 * s_all - 2.0 * s_even - g0 - gm)
        })
        .collect()
}

/// One cell of the blockade landscape.
#[derive(Debug, Clone)]
pub struct G2Cell {
    pub e_p: f64,
    pub omega_c: f64,
    pub g2: Option<f64>,
    pub n_bar: Option<f64>,
    pub converged: bool,
    pub fock_dim: usize,
    pub error: Option<String>,
}

/// Blockade landscape over an (E_p, Ω_c) grid, cells in grid order (E_p
/// outermost), with the per-column minimum locus.
#[derive(Debug, Clone)]
pub struct G2Map {
    pub e_p_grid: Vec<f64>,
    pub omega_c_grid: Vec<f64>,
    pub cells: Vec<G2Cell>,
    /// (E_p, argmin Ω_c, min g²) per pump value; ties go to the smaller Ω_c.
    pub locus: Vec<(f64, f64, f64)>,
}

impl G2Map {
    pub fn cell(&self, ie: usize, io: usize) -> &G2Cell {
        &self.cells[ie * self.omega_c_grid.len() + io]
    }

    pub fn unconverged_fraction(&self) -> f64 {
        let bad = self.cells.iter().filter(|c| !c.converged).count();
        bad as f64 / self.cells.len().max(1) as f64
    }
}

/// Converged steady-state solve of the N-system at the given policy.
pub fn solve_n_system(p: &NSystemParams, policy: TruncationPolicy) -> Result<ConvergedSolve> {
    let base = p.clone();
    converged_steady_state(
        &move |n| {
            let mut q = base.clone();
            q.n_max = n;
            build_liouvillian(&q)
        },
        policy,
    )
}

/// Sweep g²(0) over pump and control grids. Cells run independently (in
/// parallel when a rayon pool is configured); failures are recorded
/// per-cell, never fatal.
pub fn g2_map(
    base: &NSystemParams,
    e_p_grid: &[f64],
    omega_c_grid: &[f64],
    policy: TruncationPolicy,
) -> Result<G2Map> {
    if e_p_grid.is_empty() || omega_c_grid.is_empty() {
        return Err(CoreError::InvalidParameter("sweep grids must be nonempty".into()));
    }
    let points: Vec<(f64, f64)> = e_p_grid
        .iter()
        .flat_map(|&ep| omega_c_grid.iter().map(move |&oc| (ep, oc)))
        .collect();

    let cells: Vec<G2Cell> = points
        .par_iter()
        .map(|&(e_p, omega_c)| {
            let mut p = base.clone();
            p.e_p = e_p;
            p.omega_c = C64::new(omega_c, 0.0);
            match solve_n_system(&p, policy).and_then(|cs| Ok((g2_zero(&cs.state)?, cs))) {
                Ok((g2, cs)) => G2Cell {
                    e_p,
                    omega_c,
                    g2: Some(g2.g2_zero),
                    n_bar: Some(g2.n_bar),
                    converged: cs.converged,
                    fock_dim: cs.fock_dim,
                    error: None,
                },
                Err(e) => G2Cell {
                    e_p,
                    omega_c,
                    g2: None,
                    n_bar: None,
                    converged: false,
                    fock_dim: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut locus = Vec::with_capacity(e_p_grid.len());
    for (ie, &ep) in e_p_grid.iter().enumerate() {
        let mut best: Option<(f64, f64)> = None;
        for (io, &oc) in omega_c_grid.iter().enumerate() {
            if let Some(g2) = cells[ie * omega_c_grid.len() + io].g2 {
                // strict improvement keeps the smaller Ω_c on ties
                if best.map_or(true, |(_, bg)| g2 < bg) {
                    best = Some((oc, g2));
                }
            }
        }
        if let Some((oc, g2)) = best {
            locus.push((ep, oc, g2));
        }
    }

    Ok(G2Map {
        e_p_grid: e_p_grid.to_vec(),
        omega_c_grid: omega_c_grid.to_vec(),
        cells,
        locus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{liouvillian_matrix, HilbertSpace};
    use crate::solver::steady_state;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn driven_cavity(e_p: f64, n_max: usize) -> (SuperOperator, SteadyState) {
        let space = HilbertSpace::single_mode(n_max).unwrap();
        let a = fock_annihilation(space);
        let drive = (&a.matrix + &dagger(&a.matrix)).mapv(|z| z * C64::new(e_p, 0.0));
        let h = Operator::new(space, drive).unwrap();
        let l = liouvillian_matrix(&h, &[(1.0, a)]).unwrap();
        let ss = steady_state(&l).unwrap();
        (l, ss)
    }

    #[test]
    fn coherent_state_g2_is_one() {
        let (_, ss) = driven_cavity(0.2, 14);
        let g2 = g2_zero(&ss).unwrap();
        assert_abs_diff_eq!(g2.g2_zero, 1.0, epsilon = 1e-8);
        assert_relative_eq!(g2.n_bar, 0.04, max_relative = 1e-6);
    }

    #[test]
    fn single_photon_fock_state_g2_is_zero() {
        let space = HilbertSpace::single_mode(4).unwrap();
        let mut rho = Array2::zeros((4, 4));
        rho[[1, 1]] = C64::new(1.0, 0.0);
        let ss = SteadyState {
            rho: Operator::new(space, rho).unwrap(),
            residual: 0.0,
            top_fock_population: 0.0,
            converged: true,
        };
        let g2 = g2_zero(&ss).unwrap();
        assert_abs_diff_eq!(g2.g2_zero, 0.0, epsilon = 1e-14);
        assert_relative_eq!(g2.n_bar, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn vacuum_g2_is_undefined() {
        let space = HilbertSpace::single_mode(4).unwrap();
        let mut rho = Array2::zeros((4, 4));
        rho[[0, 0]] = C64::new(1.0, 0.0);
        let ss = SteadyState {
            rho: Operator::new(space, rho).unwrap(),
            residual: 0.0,
            top_fock_population: 0.0,
            converged: true,
        };
        assert!(matches!(g2_zero(&ss), Err(CoreError::UndefinedCorrelation { .. })));
    }

    #[test]
    fn g2_tau_of_linear_cavity_stays_at_one() {
        let (l, ss) = driven_cavity(0.15, 12);
        let taus: Vec<f64> = (0..21).map(|k| k as f64).collect();
        let g2 = g2_tau(&l, &ss, &taus).unwrap();
        let series = g2.series.unwrap();
        // coherent light: flat unit correlation, in particular at τ_max = 20/κ
        for v in &series.values {
            assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-3);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(series.values[0].re, g2.g2_zero, epsilon = 1e-10);
    }

    #[test]
    fn eta_estimate_reference_values() {
        // Δ = γ, δ = 0, γ₄₃ = γ, (g/Ω_c)² = 0.1 → η = 0.1·g²/(2γ)
        let g = 300.0;
        let gamma = 0.1;
        let omega_c = C64::new(g / 0.1f64.sqrt(), 0.0);
        let est =
            kerr_eta_estimate(g, g, omega_c, gamma, 0.0, gamma, gamma, gamma).unwrap();
        assert_relative_eq!(est.eta, 45_000.0, max_relative = 1e-12);
        assert!(est.regime_valid);

        // Hood row: g = 120, κ = 40, γ = 2.6 (2π MHz) → η/κ ≈ 6.92
        let (g, kappa, gamma) = (120.0, 40.0, 2.6);
        let omega_c = C64::new(g / 0.1f64.sqrt(), 0.0);
        let est =
            kerr_eta_estimate(g, g, omega_c, gamma, 0.0, gamma, gamma, gamma).unwrap();
        assert_relative_eq!(est.eta / kappa, 6.923076923076923, max_relative = 1e-12);
    }

    #[test]
    fn eta_estimate_zero_detunings_vanish() {
        let est = kerr_eta_estimate(
            1.0,
            2.0,
            C64::new(10.0, 0.0),
            0.0,
            0.0,
            0.3,
            0.1,
            0.2,
        )
        .unwrap();
        assert_abs_diff_eq!(est.eta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eta_estimate_term_swap_antisymmetry() {
        // swapping (g₂, Δ, γ₄₃) ↔ (g₁, δ, γ₂₁+γ₂₃) negates η when g₁ = g₂
        let g = 4.0;
        let oc = C64::new(30.0, 0.0);
        let (db, ds) = (0.7, 0.2);
        let (g43, g21, g23) = (0.3, 0.05, 0.15);
        let fwd = kerr_eta_estimate(g, g, oc, db, ds, g43, g21, g23).unwrap();
        let swapped =
            kerr_eta_estimate(g, g, oc, ds, db, g21 + g23, g43 / 2.0, g43 / 2.0).unwrap();
        assert_relative_eq!(fwd.eta, -swapped.eta, max_relative = 1e-12);
    }

    #[test]
    fn eta_estimate_rejects_zero_control() {
        assert!(kerr_eta_estimate(1.0, 1.0, C64::new(0.0, 0.0), 1.0, 0.0, 0.1, 0.1, 0.1)
            .is_err());
    }

    #[test]
    fn empty_cavity_spectrum_is_flat_vacuum() {
        // no drive: normally ordered fluctuations vanish, S ≡ 1, θ defaults
        let space = HilbertSpace::single_mode(4).unwrap();
        let a = fock_annihilation(space);
        let h = Operator::zeros(space);
        let l = liouvillian_matrix(&h, &[(1.0, a)]).unwrap();
        let ss = steady_state(&l).unwrap();
        let omegas: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.7).collect();
        let spec = squeezing_spectrum(&l, &ss, 1.0, Quadrature::Auto, &omegas).unwrap();
        assert!(spec.theta_defaulted);
        for s in &spec.s {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn driven_linear_cavity_spectrum_is_flat_vacuum() {
        // coherent displacement has no normally ordered fluctuations either
        let (l, ss) = driven_cavity(0.3, 12);
        let omegas = [-4.0, -1.0, 0.0, 1.0, 4.0];
        let spec = squeezing_spectrum(&l, &ss, 1.0, Quadrature::Auto, &omegas).unwrap();
        assert!(!spec.theta_defaulted);
        for s in &spec.s {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn parametric_amplifier_spectra_match_closed_form() {
        // degenerate parametric amplifier below threshold,
        // H = i(ε/2)(a†² − a²), channel (κ, a): the output quadrature
        // spectra are exactly
        //   S_x(ω) = 1 + 4κε/((κ−ε)² + ω²)   (amplified, θ = 0)
        //   S_y(ω) = 1 − 4κε/((κ+ε)² + ω²)   (squeezed, θ = π/2)
        let eps = 0.5;
        let kappa = 1.0;
        let space = HilbertSpace::single_mode(24).unwrap();
        let a = fock_annihilation(space);
        let a2 = a.matrix.dot(&a.matrix);
        let h_mat = (&dagger(&a2) - &a2).mapv(|z| C64::new(0.0, eps / 2.0) * z);
        let h = Operator::new(space, h_mat).unwrap();
        let l = liouvillian_matrix(&h, &[(kappa, fock_annihilation(space))]).unwrap();
        let ss = steady_state(&l).unwrap();
        assert!(ss.converged);
        // n̄ = ε²/(2(κ²−ε²)) for the below-threshold Gaussian state
        assert_relative_eq!(
            ss.mean_photon_number(),
            eps * eps / (2.0 * (kappa * kappa - eps * eps)),
            max_relative = 1e-6
        );

        let omegas = [-3.0, -1.2, -0.4, 0.0, 0.4, 1.2, 3.0];
        let sx = squeezing_spectrum(&l, &ss, kappa, Quadrature::Fixed(0.0), &omegas).unwrap();
        let sy = squeezing_spectrum(
            &l,
            &ss,
            kappa,
            Quadrature::Fixed(std::f64::consts::FRAC_PI_2),
            &omegas,
        )
        .unwrap();
        for (k, &w) in omegas.iter().enumerate() {
            let x_expected = 1.0 + 4.0 * kappa * eps / ((kappa - eps).powi(2) + w * w);
            let y_expected = 1.0 - 4.0 * kappa * eps / ((kappa + eps).powi(2) + w * w);
            assert_relative_eq!(sx.s[k], x_expected, max_relative = 1e-6);
            assert_relative_eq!(sy.s[k], y_expected, max_relative = 1e-6);
            assert!(sy.s[k] >= 0.0);
        }
    }

    #[test]
    fn kerr_cavity_spectrum_stays_nonnegative() {
        // strongly driven Kerr cavity: deep squeezing but a legitimate
        // (nonnegative) photocurrent spectrum at every frequency
        let p = crate::kerr::KerrParams { eta: 0.5, kappa: 1.0, e_p: 1.5, delta_a: 0.0, n_max: 18 };
        let l = crate::kerr::build_liouvillian(&p, 18).unwrap();
        let ss = steady_state(&l).unwrap();
        assert!(ss.converged);
        let omegas: Vec<f64> = (-60..=60).map(|k| k as f64 * 0.25).collect();
        let spec = squeezing_spectrum(&l, &ss, 1.0, Quadrature::Auto, &omegas).unwrap();
        assert!(spec.min() >= -1e-9, "min S = {}", spec.min());
        assert!(spec.min() < 1.0);
        // even symmetry of the photocurrent spectrum on ±ω pairs
        let n = spec.s.len();
        for k in 0..n / 2 {
            assert_abs_diff_eq!(spec.s[k], spec.s[n - 1 - k], epsilon = 1e-8);
        }
    }

    #[test]
    fn simpson_fourier_matches_direct_sum() {
        // frozen against a direct weighted sum at three frequencies
        let m_steps = 64;
        let dt = 0.05;
        let g: Vec<C64> = (0..=m_steps)
            .map(|k| {
                let t = k as f64 * dt;
                C64::new((-0.8 * t).exp() * (3.0 * t).cos(), 0.3 * (-t).exp() * (2.0 * t).sin())
            })
            .collect();
        let bins = simpson_fourier_bins(&g, dt);
        for &m in &[1usize, 5, 11] {
            let omega = 2.0 * std::f64::consts::PI * m as f64 / (m_steps as f64 * dt);
            let mut direct = C64::new(0.0, 0.0);
            for (k, val) in g.iter().enumerate() {
                let w = if k == 0 || k == m_steps {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                direct += C64::from_polar(w, omega * k as f64 * dt) * val;
            }
            direct *= dt / 3.0;
            assert_abs_diff_eq!((bins[m] - direct).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_method_agrees_on_linear_cavity() {
        let (l, ss) = driven_cavity(0.25, 10);
        // ⟨ΔaΔa†⟩-type fluctuations are vacuum here, so both routes give 1
        let report =
            squeezing_dual_method_check(&l, &ss, 1.0, Quadrature::Auto, 0.02, 2048, &[3, 9, 20])
                .unwrap();
        assert!(report.max_rel_err < 1e-6, "rel err {}", report.max_rel_err);
        for s in &report.s_fft {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn single_cell_map_reduces_to_g2_zero() {
        let mut base = NSystemParams::bare_cavity(1.0, 0.0, 6);
        base.g1 = 5.0;
        base.g2 = 5.0;
        base.gamma = crate::nsystem::figure_decay_rates(1.0);
        let policy = TruncationPolicy { base: 6, cap: 12, verify_resolve: true };
        let map = g2_map(&base, &[0.1], &[20.0], policy).unwrap();
        assert_eq!(map.cells.len(), 1);
        let cell = &map.cells[0];
        assert!(cell.error.is_none());

        let mut p = base.clone();
        p.e_p = 0.1;
        p.omega_c = C64::new(20.0, 0.0);
        let cs = solve_n_system(&p, policy).unwrap();
        let direct = g2_zero(&cs.state).unwrap();
        assert_relative_eq!(cell.g2.unwrap(), direct.g2_zero, max_relative = 1e-10);
        assert_eq!(map.locus.len(), 1);
        assert_relative_eq!(map.locus[0].2, direct.g2_zero, max_relative = 1e-10);
    }

    #[test]
    fn log10_clamp_floors_tiny_values() {
        assert_relative_eq!(log10_clamped(1e-20), -12.0);
        assert_relative_eq!(log10_clamped(0.01), -2.0);
    }
}
