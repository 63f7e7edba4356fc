//! Steady states of 𝓛ρ = 0, propagation of vectorised operators under
//! exp(𝓛τ), two-time correlation functions via the quantum regression
//! theorem, and frequency-domain resolvent solves.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, Factorize, Solve, UPLO};
use rayon::prelude::*;

use crate::algebra::{
    dagger, expm, frobenius, norm2, trace_of_product, trace_of_vec, unvectorize, vectorize,
    Operator, SuperOperator, C64,
};
use crate::error::CoreError;
use crate::Result;

/// Residual bound for the constrained steady-state solve, measured as
/// ‖L·vec(ρ)‖₂ / ‖L‖_F (dimensionless; ‖vec(ρ)‖₂ ≤ 1 for a state).
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;
/// Trace and Hermiticity bound for a returned steady state.
pub const STATE_TOL: f64 = 1e-10;
/// Most negative admissible density-matrix eigenvalue before aborting.
pub const POSITIVITY_FLOOR: f64 = -1e-8;
/// Population of the top two Fock levels above which the truncation is
/// declared unconverged.
pub const TOP_POPULATION_TOL: f64 = 1e-8;
/// Relative change of ⟨a†a⟩ allowed between a solve and its fock_dim + 3
/// verification re-solve.
pub const RESOLVE_REL_TOL: f64 = 1e-4;

/// Steady-state solution with solve diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: Operator,
    /// ‖L·vec(ρ)‖₂ / ‖L‖_F against the unmodified generator.
    pub residual: f64,
    /// Combined population of the two highest Fock levels.
    pub top_fock_population: f64,
    /// Truncation flag: top-level population below [`TOP_POPULATION_TOL`].
    /// Full convergence additionally requires the re-solve test, see
    /// [`converged_steady_state`].
    pub converged: bool,
}

impl SteadyState {
    pub fn mean_photon_number(&self) -> f64 {
        let n = crate::algebra::fock_number(self.rho.space);
        n.expectation(&self.rho.matrix).re
    }

    pub fn field_amplitude(&self) -> C64 {
        let a = crate::algebra::fock_annihilation(self.rho.space);
        a.expectation(&self.rho.matrix)
    }
}

/// Solve 𝓛·vec(ρ) = 0 under Tr ρ = 1 by replacing the ρ̇₀₀ row with a scaled
/// trace constraint. The residual is verified against the unmodified 𝓛.
pub fn steady_state(l: &SuperOperator) -> Result<SteadyState> {
    let d = l.space.total_dim();
    let n = d * d;
    if l.matrix.nrows() != n || l.matrix.ncols() != n {
        return Err(CoreError::DimensionMismatch(format!(
            "superoperator is {}x{}, space wants {n}",
            l.matrix.nrows(),
            l.matrix.ncols()
        )));
    }

    // row balance: scale the trace row to the typical row magnitude
    let scale = frobenius(&l.matrix) / (n as f64).sqrt();
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut m = l.matrix.clone();
    let mut row0 = m.row_mut(0);
    row0.fill(C64::new(0.0, 0.0));
    for c in 0..d {
        row0[c * d + c] = C64::new(scale, 0.0);
    }
    let mut b: Array1<C64> = Array1::zeros(n);
    b[0] = C64::new(scale, 0.0);

    let lu = m.factorize().map_err(|e| CoreError::SteadyState(format!("factorisation: {e}")))?;
    let mut x = lu
        .solve(&b)
        .map_err(|e| CoreError::SteadyState(format!("constrained solve: {e}")))?;
    // one refinement pass against the constrained system
    let r = &b - &m.dot(&x);
    if let Ok(dx) = lu.solve(&r) {
        x += &dx;
    }

    let mut rho = unvectorize(&x.view(), d);
    // enforce Hermiticity and exact unit trace; both corrections are at
    // round-off scale for a healthy solve
    let rho_dag = dagger(&rho);
    let herm_defect = frobenius(&(&rho - &rho_dag)) / 2.0;
    rho = (&rho + &rho_dag).mapv(|z| 0.5 * z);
    let tr = rho.diag().sum();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return Err(CoreError::SteadyState(format!(
            "trace after constrained solve is {tr}; null space may be non-unique"
        )));
    }
    rho.mapv_inplace(|z| z / tr.re);
    if herm_defect > STATE_TOL {
        return Err(CoreError::SteadyState(format!(
            "Hermiticity defect {herm_defect:.3e} exceeds {STATE_TOL:.0e}"
        )));
    }

    let residual = norm2(&l.matrix.dot(&vectorize(&rho))) / frobenius(&l.matrix);
    if residual > STEADY_RESIDUAL_TOL {
        return Err(CoreError::SteadyState(format!(
            "residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL:.0e}; generator may be singular beyond the trace direction"
        )));
    }

    // numerical positivity: abort rather than clip
    let (eigs, _) = rho.eigh(UPLO::Lower)?;
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < POSITIVITY_FLOOR {
        return Err(CoreError::PositivityViolation { min_eig, floor: POSITIVITY_FLOOR });
    }

    let top = top_fock_population(&rho, l.space.atom_dim(), l.space.fock_dim());
    Ok(SteadyState {
        rho: Operator { space: l.space, matrix: rho },
        residual,
        top_fock_population: top,
        converged: top < TOP_POPULATION_TOL,
    })
}

/// Population of the two highest Fock levels, summed over atomic states.
fn top_fock_population(rho: &Array2<C64>, atom_dim: usize, fock_dim: usize) -> f64 {
    let mut pop = 0.0;
    for a in 0..atom_dim {
        for n in fock_dim.saturating_sub(2)..fock_dim {
            pop += rho[[a * fock_dim + n, a * fock_dim + n]].re;
        }
    }
    pop
}

/// Propagate X(τ) = exp(𝓛τ)·X₀ across `tau_grid` (strictly increasing,
/// starting at 0, where X(0) is returned exactly). Dense scaling-and-squaring
/// exponentials are cached per distinct step so uniform grids cost one expm.
pub fn evolve(l: &Array2<C64>, x0: &Array1<C64>, tau_grid: &[f64]) -> Result<Vec<Array1<C64>>> {
    let n = l.nrows();
    if l.ncols() != n || x0.len() != n {
        return Err(CoreError::DimensionMismatch("evolve: L and X0 dimensions differ".into()));
    }
    if tau_grid.is_empty() {
        return Ok(Vec::new());
    }
    if tau_grid[0] < 0.0 {
        return Err(CoreError::InvalidParameter("tau grid must start at 0".into()));
    }
    for w in tau_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(CoreError::InvalidParameter("tau grid must be strictly increasing".into()));
        }
    }

    // cache propagators per distinct step; grid arithmetic jitters dt at the
    // last few bits, so match steps to 1e-12 relative rather than bit-exact
    let mut propagators: Vec<(f64, Array2<C64>)> = Vec::new();
    let mut out = Vec::with_capacity(tau_grid.len());
    let mut x = x0.clone();
    let mut t_prev = 0.0;
    for &t in tau_grid {
        let dt = t - t_prev;
        if dt > 0.0 {
            let cached = propagators.iter().find(|(d, _)| (d - dt).abs() <= 1e-12 * d.abs());
            let p = match cached {
                Some((_, p)) => p,
                None => {
                    let p = expm(&l.mapv(|z| z * C64::new(dt, 0.0)))?;
                    propagators.push((dt, p));
                    &propagators.last().unwrap().1
                }
            };
            x = p.dot(&x);
        }
        out.push(x.clone());
        t_prev = t;
    }
    Ok(out)
}

/// Delay- or frequency-indexed correlation data.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    /// Delays (1/rate units) or angular frequencies, strictly increasing.
    pub abscissa: Vec<f64>,
    pub values: Vec<C64>,
    pub tag: String,
}

impl CorrelationSeries {
    pub fn new(abscissa: Vec<f64>, values: Vec<C64>, tag: impl Into<String>) -> Result<Self> {
        if abscissa.len() != values.len() {
            return Err(CoreError::DimensionMismatch(
                "correlation series abscissa and values lengths differ".into(),
            ));
        }
        if abscissa.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidParameter(
                "correlation series abscissa must be strictly increasing".into(),
            ));
        }
        Ok(Self { abscissa, values, tag: tag.into() })
    }
}

/// Escalation policy for the Fock truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// First Fock dimension to try.
    pub base: usize,
    /// Largest Fock dimension of the escalation ladder.
    pub cap: usize,
    /// Run the fock_dim + 3 re-solve comparison of ⟨a†a⟩ before declaring
    /// convergence. Skipping it halves the cost of large sweeps; the cell is
    /// then flagged converged on the top-population test alone.
    pub verify_resolve: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { base: 8, cap: 20, verify_resolve: true }
    }
}

/// Steady state with the truncation bookkeeping of the escalation ladder.
#[derive(Debug, Clone)]
pub struct ConvergedSolve {
    pub state: SteadyState,
    /// Fock dimension of the returned solution.
    pub fock_dim: usize,
    /// Relative ⟨a†a⟩ change of the fock_dim + 3 re-solve, when performed.
    pub verified_rel_change: Option<f64>,
    /// Top-population test passed, and the re-solve test too if requested.
    pub converged: bool,
}

/// Solve the steady state at increasing Fock truncation (steps of 3, capped)
/// until the top two Fock levels hold less than [`TOP_POPULATION_TOL`]
/// population; optionally verify with a fock_dim + 3 re-solve of ⟨a†a⟩.
pub fn converged_steady_state(
    build: &dyn Fn(usize) -> Result<SuperOperator>,
    policy: TruncationPolicy,
) -> Result<ConvergedSolve> {
    let mut fock_dim = policy.base.max(2);
    loop {
        let l = build(fock_dim)?;
        let ss = steady_state(&l)?;
        if ss.converged {
            if !policy.verify_resolve {
                return Ok(ConvergedSolve {
                    state: ss,
                    fock_dim,
                    verified_rel_change: None,
                    converged: true,
                });
            }
            let l2 = build(fock_dim + 3)?;
            let ss2 = steady_state(&l2)?;
            let n1 = ss.mean_photon_number();
            let n2 = ss2.mean_photon_number();
            let rel = (n1 - n2).abs() / n2.abs().max(1e-12);
            if rel <= RESOLVE_REL_TOL {
                return Ok(ConvergedSolve {
                    state: ss,
                    fock_dim,
                    verified_rel_change: Some(rel),
                    converged: true,
                });
            }
            if fock_dim >= policy.cap {
                return Ok(ConvergedSolve {
                    state: ss2,
                    fock_dim: fock_dim + 3,
                    verified_rel_change: Some(rel),
                    converged: false,
                });
            }
        } else if fock_dim >= policy.cap {
            return Ok(ConvergedSolve {
                state: ss,
                fock_dim,
                verified_rel_change: None,
                converged: false,
            });
        }
        fock_dim = (fock_dim + 3).min(policy.cap);
    }
}

/// Quantum-regression two-time average
/// ⟨B(t)·A(t+τ)·C(t)⟩_ss = Tr[A · exp(𝓛τ)(C ρ_ss B)] over `tau_grid`.
pub fn two_time(
    l: &SuperOperator,
    a: &Operator,
    b: &Operator,
    c: &Operator,
    rho_ss: &Array2<C64>,
    tau_grid: &[f64],
    tag: &str,
) -> Result<CorrelationSeries> {
    let seed = c.matrix.dot(rho_ss).dot(&b.matrix);
    let states = evolve(&l.matrix, &vectorize(&seed), tau_grid)?;
    let d = rho_ss.nrows();
    let values: Vec<C64> = states
        .iter()
        .map(|x| trace_of_product(&a.matrix, &unvectorize(&x.view(), d)))
        .collect();
    CorrelationSeries::new(tau_grid.to_vec(), values, tag)
}

/// Which side of ρ_ss the τ=0 fluctuation operator multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SeedSide {
    /// V = ΔB·ρ_ss, giving ∫₀^∞ e^{iωτ} ⟨ΔA(τ)ΔB(0)⟩ dτ.
    Left,
    /// V = ρ_ss·ΔB, giving ∫₀^∞ e^{iωτ} ⟨ΔB(0)ΔA(τ)⟩ dτ.
    Right,
}

/// One-sided Fourier transform of a steady-state fluctuation correlation:
/// spectral_solve returns T(ω) = ∫₀^∞ e^{iωτ}⟨ΔA(τ)ΔB(0)⟩ dτ
///                            = −Tr[ΔA · (𝓛 + iωI)⁻¹ (ΔB ρ_ss)]
/// with one linear solve per frequency. The generator's zero mode is
/// deflated with a rank-one shift that leaves the traceless sector intact,
/// so ω = 0 is regular whenever the steady state is unique.
pub fn spectral_solve(
    l: &SuperOperator,
    a: &Operator,
    b: &Operator,
    rho_ss: &Array2<C64>,
    omega_grid: &[f64],
    tag: &str,
) -> Result<CorrelationSeries> {
    let values = spectral_correlations(l, &[(a, b, SeedSide::Left)], rho_ss, omega_grid)?;
    CorrelationSeries::new(omega_grid.to_vec(), values.into_iter().map(|v| v[0]).collect(), tag)
}

/// Batched resolvent solves: for each ω, factorise 𝓛 + iωI (deflated) once
/// and evaluate every requested (A, B, side) trace. Frequencies are solved
/// in parallel and merged in grid order.
pub(crate) fn spectral_correlations(
    l: &SuperOperator,
    terms: &[(&Operator, &Operator, SeedSide)],
    rho_ss: &Array2<C64>,
    omega_grid: &[f64],
) -> Result<Vec<Vec<C64>>> {
    let d = l.space.total_dim();
    let n = d * d;
    let rho_vec = vectorize(rho_ss);
    let scale = frobenius(&l.matrix) / (n as f64).sqrt();
    let scale = if scale > 0.0 { scale } else { 1.0 };

    // fluctuation operators and seeds: V = Δ(B)·ρ or ρ·Δ(B)
    let mut lefts: Vec<Array2<C64>> = Vec::with_capacity(terms.len());
    let mut seeds: Vec<Array1<C64>> = Vec::with_capacity(terms.len());
    for (a_op, b_op, side) in terms {
        let mean_a = trace_of_product(&a_op.matrix, rho_ss);
        let mean_b = trace_of_product(&b_op.matrix, rho_ss);
        let da = &a_op.matrix - &(Array2::eye(d).mapv(|z: C64| z * mean_a));
        let db = &b_op.matrix - &(Array2::eye(d).mapv(|z: C64| z * mean_b));
        let seed = match side {
            SeedSide::Left => db.dot(rho_ss),
            SeedSide::Right => rho_ss.dot(&db),
        };
        let v = vectorize(&seed);
        debug_assert!(trace_of_vec(&v.view(), d).norm() < 1e-8);
        lefts.push(da);
        seeds.push(v);
    }

    omega_grid
        .par_iter()
        .map(|&omega| {
            // M = L + iω I + scale·|vec ρ⟩⟨vec I|
            let mut m = l.matrix.clone();
            let iw = C64::new(0.0, omega);
            for k in 0..n {
                m[[k, k]] += iw;
            }
            let shift = C64::new(scale, 0.0);
            for r in 0..n {
                let w = shift * rho_vec[r];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..d {
                    m[[r, c * d + c]] += w;
                }
            }
            let lu = m.factorize()?;
            let mut row = Vec::with_capacity(terms.len());
            for (left, v) in lefts.iter().zip(&seeds) {
                let x = lu.solve(v)?;
                let val = -trace_of_product(left, &unvectorize(&x.view(), d));
                row.push(val);
            }
            Ok(row)
        })
        .collect()
}
