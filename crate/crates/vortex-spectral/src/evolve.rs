//! The evolution group e^{itH} = F̃⁻¹ e^{itλ} F̃, decay and growth measurements,
//! and a region-split evaluator for the model low-frequency oscillatory integral.

use std::borrow::Cow;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dft::{DftError, SpectralDensity};
use crate::eigen::{eigenfunction, EigenConfig, EigenError, EigenTable};
use crate::field::{RadialField, C2};
use crate::grid::{dlambda_dxi, lambda_of_xi, RadialGrid, XiGrid, XiGridSpec};
use crate::odesys::SpectralPoint;
use crate::profile::VortexProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("phase step {increment:.3} rad at t = {t} exceeds π/4; refine the ξ-grid")]
    PhaseUnderResolved { t: f64, increment: f64 },
    #[error("oscillatory integral not resolved on [{a}, {b}] after {panels} panels")]
    Unresolved { a: f64, b: f64, panels: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Dft(#[from] DftError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Largest allowed change of tλ(ξ) between neighbouring ξ-nodes.
pub const MAX_PHASE_STEP: f64 = FRAC_PI_4;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub t: f64,
    pub field: RadialField,
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub argmax_r: f64,
}

impl EvolutionResult {
    pub fn new(t: f64, field: RadialField) -> Self {
        let (sup_norm, l2_norm, argmax_r) = (field.sup_norm(), field.l2_norm(), field.argmax_r());
        Self { t, field, sup_norm, l2_norm, argmax_r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhasePolicy {
    Refuse,
    /// halve the ξ-step until every requested time is resolved
    Refine,
}

/// Where eigenfunctions come from: a stored table, or computed one ξ at a
/// time and dropped after use (for grids too large to hold in memory).
#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Table(&'a EigenTable),
    Stream { profile: &'a VortexProfile, xi: &'a XiGrid, cfg: &'a EigenConfig, policy: PhasePolicy },
}

impl Backend<'_> {
    fn grid(&self) -> &std::sync::Arc<RadialGrid> {
        match self {
            Backend::Table(t) => &t.grid,
            Backend::Stream { profile, .. } => &profile.grid,
        }
    }
}

/// max_k |t|·(λ(ξ_{k+1}) − λ(ξ_k)).
pub fn max_phase_increment(xi: &XiGrid, t: f64) -> f64 {
    xi.xi.windows(2).map(|w| t.abs() * (lambda_of_xi(w[1]) - lambda_of_xi(w[0]))).fold(0.0, f64::max)
}

/// ξ-grid uniform in λ at large ξ whose phase steps stay below π/4 up to |t| = t_max.
pub fn phase_resolving_spec(t_max: f64, xi_min: f64, xi_max: f64) -> XiGridSpec {
    let scale = 0.5;
    XiGridSpec { xi_min, xi_max, scale, dtau: 0.99 * MAX_PHASE_STEP / (t_max.max(1.0) * scale), uniform_in_lambda: true }
}

fn check_phase(xi: &XiGrid, times: &[f64]) -> Result<(), EvolveError> {
    for &t in times {
        let increment = max_phase_increment(xi, t);
        if increment > MAX_PHASE_STEP {
            return Err(EvolveError::PhaseUnderResolved { t, increment });
        }
    }
    Ok(())
}

const SUM_BLOCK: usize = 32;
const SUM_WAVE: usize = 8;

/// Σₖ body(k) into a zeroed buffer of `len` entries. Blocks of consecutive k run
/// in parallel and are added in block order, so the result is bit-identical
/// for any thread count.
pub(crate) fn ordered_sum<E: Send>(
    n: usize,
    len: usize,
    body: impl Fn(&mut [C2], usize) -> Result<(), E> + Sync,
) -> Result<Vec<C2>, E> {
    let zero = Complex64::new(0.0, 0.0);
    let mut total = vec![[zero; 2]; len];
    let blocks: Vec<usize> = (0..n.div_ceil(SUM_BLOCK)).collect();
    for wave in blocks.chunks(SUM_WAVE) {
        let parts = wave
            .par_iter()
            .map(|&b| {
                let mut acc = vec![[zero; 2]; len];
                for k in b * SUM_BLOCK..((b + 1) * SUM_BLOCK).min(n) {
                    body(&mut acc, k)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>, E>>()?;
        for p in parts {
            for (x, y) in total.iter_mut().zip(&p) {
                x[0] += y[0];
                x[1] += y[1];
            }
        }
    }
    Ok(total)
}

/// e^{itH}φ for every field and time. Result is indexed `[field][time]`.
pub fn evolve(fields: &[RadialField], times: &[f64], backend: Backend) -> Result<Vec<Vec<EvolutionResult>>, EvolveError> {
    let grid = backend.grid().clone();
    for f in fields {
        if f.grid.nodes != grid.nodes {
            return Err(DftError::GridMismatch.into());
        }
    }
    let refined;
    let xi = match backend {
        Backend::Table(table) => {
            check_phase(&table.xi, times)?;
            &table.xi
        }
        Backend::Stream { xi, policy, .. } => match (check_phase(xi, times), policy) {
            (Ok(()), _) => xi,
            (Err(e), PhasePolicy::Refuse) => return Err(e),
            (Err(_), PhasePolicy::Refine) => {
                let mut spec = xi.spec;
                loop {
                    spec = spec.refined();
                    let g = XiGrid::new(spec).map_err(|e| EvolveError::Degenerate(e.to_string()))?;
                    if check_phase(&g, times).is_ok() {
                        refined = g;
                        break &refined;
                    }
                }
            }
        },
    };
    let samples = |k: usize| -> Result<Cow<'_, [[f64; 2]]>, EvolveError> {
        match backend {
            Backend::Table(t) => Ok(Cow::Borrowed(&t.eigenfunctions[k].samples)),
            Backend::Stream { profile, cfg, .. } => {
                Ok(Cow::Owned(eigenfunction(&SpectralPoint::from_xi(xi.xi[k]), profile, cfg)?.samples))
            }
        }
    };
    let n = grid.len();
    let (nf, nt) = (fields.len(), times.len());
    let zero = Complex64::new(0.0, 0.0);
    let acc = ordered_sum(xi.len(), nf * nt * n, |acc, k| {
        let psi = samples(k)?;
        let c = xi.weights[k] * dlambda_dxi(xi.xi[k]) / PI;
        let lam = lambda_of_xi(xi.xi[k]);
        for (fi, f) in fields.iter().enumerate() {
            // F̃φ(±ξ): ψ(−ξ) = −σ₁ψ(ξ)
            let (mut fp, mut fm) = (zero, zero);
            for ((p, v), w) in psi.iter().zip(&f.values).zip(&grid.weights) {
                fp += (v[0] * p[0] - v[1] * p[1]) * *w;
                fm += (v[1] * p[0] - v[0] * p[1]) * *w;
            }
            for (ti, &t) in times.iter().enumerate() {
                let ph = Complex64::from_polar(c, t * lam);
                let (zp, zm) = (fp * ph, fm * ph.conj());
                let out = &mut acc[(fi * nt + ti) * n..(fi * nt + ti + 1) * n];
                for (o, p) in out.iter_mut().zip(psi.iter()) {
                    o[0] += zp * p[0] + zm * p[1];
                    o[1] += zp * p[1] + zm * p[0];
                }
            }
        }
        Ok::<_, EvolveError>(())
    })?;
    Ok((0..nf)
        .map(|fi| {
            (0..nt)
                .map(|ti| {
                    let v: Vec<C2> = acc[(fi * nt + ti) * n..(fi * nt + ti + 1) * n].to_vec();
                    EvolutionResult::new(times[ti], RadialField::new(grid.clone(), v))
                })
                .collect()
        })
        .collect())
}

/// ζ(ξ) ↦ e^{itλ(ξ)}ζ(ξ) on both signs of ξ.
pub fn apply_multiplier(density: &SpectralDensity, t: f64) -> SpectralDensity {
    density.map(|x, z| z * Complex64::from_polar(1.0, t * lambda_of_xi(x)))
}

pub fn propagate(field: &RadialField, t: f64, table: &EigenTable) -> Result<EvolutionResult, EvolveError> {
    Ok(evolve(std::slice::from_ref(field), &[t], Backend::Table(table))?.remove(0).remove(0))
}

/// L² norms of e^{itH}φ; the t = 0 entry is ‖φ‖ itself.
pub fn l2_growth(field: &RadialField, times: &[f64], backend: Backend) -> Result<Vec<f64>, EvolveError> {
    let nonzero: Vec<f64> = times.iter().copied().filter(|&t| t != 0.0).collect();
    let mut evolved = evolve(std::slice::from_ref(field), &nonzero, backend)?.remove(0).into_iter();
    Ok(times
        .iter()
        .map(|&t| if t == 0.0 { field.l2_norm() } else { evolved.next().map_or(f64::NAN, |e| e.l2_norm) })
        .collect())
}

// ---------------------------------------------------------------------------
// resonance pairings

fn pair_real(field: &RadialField, g: impl Fn(usize) -> [f64; 2]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (j, (v, w)) in field.values.iter().zip(&field.grid.weights).enumerate() {
        let p = g(j);
        s += (v[0] * p[0] + v[1] * p[1]) * *w;
    }
    s
}

/// (⟨φ, (ρ,ρ)⟩, ⟨φ, (rρ′+ρ, −rρ′−ρ)⟩) in L²(r dr); the profile is real so no conjugation is needed.
pub fn orthogonality(field: &RadialField, profile: &VortexProfile) -> (Complex64, Complex64) {
    let r = &profile.grid.nodes;
    let a = pair_real(field, |j| [profile.rho[j], profile.rho[j]]);
    let b = pair_real(field, |j| {
        let q = r[j] * profile.drho[j] + profile.rho[j];
        [q, -q]
    });
    (a, b)
}

/// Fixed template used to remove the (ρ,ρ) pairing: T(r) = r e^{−4r²/9}·(1, 1).
pub fn resonance_template(grid: &std::sync::Arc<RadialGrid>) -> RadialField {
    RadialField::from_real(grid.clone(), |r| {
        let g = r * (-4.0 * r * r / 9.0).exp();
        [g, g]
    })
}

/// φ − cT with c chosen so that ⟨φ − cT, (ρ,ρ)⟩ = 0.
pub fn project_resonance(field: &RadialField, profile: &VortexProfile) -> RadialField {
    let t = resonance_template(&field.grid);
    let c = orthogonality(field, profile).0 / orthogonality(&t, profile).0;
    field.sub(&t.scale(c))
}

// ---------------------------------------------------------------------------
// fits

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub r2: f64,
}

/// Least-squares slope of ln(norm) against ln(t).
pub fn fit_decay(times: &[f64], norms: &[f64]) -> Result<DecayFit, EvolveError> {
    if times.len() != norms.len() || times.len() < 5 {
        return Err(EvolveError::Degenerate(format!("need ≥ 5 paired samples, got {} and {}", times.len(), norms.len())));
    }
    if times.iter().chain(norms).any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(EvolveError::Degenerate("times and norms must be positive".into()));
    }
    let (lo, hi) = times.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if hi < 10.0 * lo {
        return Err(EvolveError::Degenerate(format!("times span [{lo}, {hi}], less than a decade")));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit { exponent, r2 })
}

/// Log-spaced sample times between t0 and t1 inclusive.
pub fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| t0 * (t1 / t0).powf(k as f64 / (n - 1) as f64)).collect()
}

// ---------------------------------------------------------------------------
// model oscillatory integral

/// Positive root of λ′(ξ) = r/t, or None below the cone r/t < √2.
pub fn stationary_point(t: f64, r: f64) -> Option<f64> {
    let q = r / t;
    if q < SQRT_2 {
        return None;
    }
    // 4(s+1)² = q²(s+2) with s = ξ²
    let q2 = q * q;
    let s = (q2 - 8.0 + q * (q2 + 16.0).sqrt()) / 8.0;
    Some(s.max(0.0).sqrt())
}

const GL16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
    (0.617_876_244_402_643_7, 0.149_595_988_816_576_7),
    (0.755_404_408_355_003, 0.124_628_971_255_533_9),
    (0.865_631_202_387_831_7, 0.095_158_511_682_492_78),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_09),
];

fn gl_panels(a: f64, b: f64, panels: usize, f: &impl Fn(f64) -> Complex64) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &GL16 {
            s += (f(mid - 0.5 * h * x) + f(mid + 0.5 * h * x)) * w;
        }
    }
    s * (0.5 * h)
}

/// I(t, r) = ∫ e^{i(tλ(ξ) − rξ)} ξ φ̃(ξ) W(ξ, r) dξ over |ξ| ≤ support.
///
/// The line is cut at 0, at ±ξ₀ ± (tξ₀)^{-1/2} around stationary points, and at
/// ±t^{-1/3} when ξ₀ is below that scale. Each piece gets Gauss–Legendre panels
/// sized by the largest phase derivative on it, doubled until two passes agree.
pub fn model_integral(
    t: f64,
    r: f64,
    phi_tilde: impl Fn(f64) -> Complex64,
    envelope: impl Fn(f64, f64) -> f64,
    support: f64,
) -> Result<Complex64, EvolveError> {
    if !(t > 0.0 && r >= 0.0 && support > 0.0) {
        return Err(EvolveError::Degenerate(format!("t = {t}, r = {r}, support = {support}")));
    }
    let f = |x: f64| Complex64::from_polar(1.0, t * lambda_of_xi(x) - r * x) * phi_tilde(x) * (x * envelope(x, r));
    let dphi = |x: f64| (t * dlambda_dxi(x) - r).abs();
    let mut cuts = vec![0.0, support];
    match stationary_point(t, r) {
        Some(x0) if x0 > t.powf(-1.0 / 3.0) => {
            let w = (t * x0).powf(-0.5);
            cuts.extend([x0 - w, x0, x0 + w]);
        }
        _ => cuts.push(t.powf(-1.0 / 3.0)),
    }
    cuts.retain(|c| (0.0..=support).contains(c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        for (a, b) in [(w[0], w[1]), (-w[1], -w[0])] {
            let span = dphi(a).max(dphi(b)) * (b - a);
            let mut panels = (span.ceil() as usize).max(4);
            let mut prev = gl_panels(a, b, panels, &f);
            loop {
                panels *= 2;
                let next = gl_panels(a, b, panels, &f);
                if (next - prev).norm() <= 1e-12 * (1.0 + next.norm()) {
                    total += next;
                    break;
                }
                if panels > 1 << 20 {
                    return Err(EvolveError::Unresolved { a, b, panels });
                }
                prev = next;
            }
        }
    }
    Ok(total)
}
