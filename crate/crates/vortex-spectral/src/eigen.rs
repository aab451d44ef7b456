//! Generalized eigenfunctions ψ(ξ, ·) of H and their scattering coefficients.
//!
//! The two solution families (regular at the origin, non-growing at infinity)
//! are integrated towards each other with continuous orthonormalization: the
//! columns are re-orthonormalized after every step and the triangular factors
//! are kept per node interval, so the exponentially growing directions never
//! swamp the others. The families are glued at a node r_match through the null
//! space of the 4×5 matching matrix, and the coordinates are then carried back
//! along both sweeps to produce ψ at every node and the oscillatory
//! coefficients at the far end.

use std::sync::Arc;

use nalgebra::Matrix5;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::RadialField;
use crate::grid::{RadialGrid, XiGrid};
use crate::odesys::{
    frobenius_uv, preferred_representation, seed_jost, system, wronskian_real, JostKind, OdeError, Representation,
    SolutionSample, SpectralPoint,
};
use crate::profile::VortexProfile;
use crate::rk::Dop853;
use crate::special::{bessel, BesselKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("ξ = 0 is not a table frequency; use the stored zero-frequency limit")]
    ZeroFrequency,
    #[error("matching matrix is rank deficient at ξ = {xi}: gap {gap:.3e} below {min:.1e}")]
    RankDeficient { xi: f64, gap: f64, min: f64 },
    #[error("ODE failure at ξ = {xi}: {source}")]
    Ode { xi: f64, source: OdeError },
    #[error("table build failed at {} nodes: {}", .0.len(), .0.iter().map(|(i, e)| format!("[{i}] {e}")).collect::<Vec<_>>().join("; "))]
    Table(Vec<(usize, String)>),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Numerical constants of the construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub ode_tol: f64,
    pub match_gap: f64,
    pub y0: f64,
    pub lambda_switch: f64,
    /// far end of the inward sweep sits at ξ·R ≥ far_x
    pub far_x: f64,
    /// and at R ≥ far_r, where the r⁻⁴ part of ρ² − 1 left out of the seeds is negligible
    pub far_r: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { ode_tol: 1e-10, match_gap: 1e3, y0: 0.5, lambda_switch: 0.5, far_x: 20.0, far_r: 200.0 }
    }
}

impl EigenConfig {
    pub fn validate(&self) -> Result<(), EigenError> {
        let pos = [self.ode_tol, self.match_gap, self.y0, self.lambda_switch, self.far_x, self.far_r];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(EigenError::Config(format!("all constants must be positive: {self:?}")));
        }
        if self.far_x < 20.0 {
            return Err(EigenError::Config("far_x must be at least 20".into()));
        }
        Ok(())
    }
}

/// Default matching radius max(2, 4y₀/ξ), capped at r_max/3.
pub fn default_r_match(xi: f64, y0: f64, r_max: f64) -> f64 {
    (4.0 * y0 / xi.abs()).max(2.0).min(r_max / 3.0)
}

/// Coefficients of ψ in the paper-style bases: origin solutions with
/// (φ, ψ) ≈ (ξr/2)·e_k, the decaying Jost direction normalized at r_match and
/// the Re/Im H-type oscillatory Jost seeds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MatchingCoefficients {
    pub beta1: f64,
    pub beta2: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    /// σ₄ / (σ₅ + tol·σ₁) of the matching matrix
    pub gap: f64,
    /// |A x| / ‖A‖ for the returned null vector
    pub null_residual: f64,
}

/// Quality figures recorded while building one eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EigenDiagnostics {
    /// (max − min)/max |W| of a Wronskian pairing ψ with a second bounded solution
    pub wronskian_spread: f64,
    /// relative change of ψ when matching at 2·r_match instead
    pub two_radius_dev: f64,
    /// relative mismatch of the two sides at r_match
    pub match_jump: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    pub sp: SpectralPoint,
    pub grid: Arc<RadialGrid>,
    /// ψ(ξ, r) in (u, v) form at the grid nodes
    pub samples: Vec<[f64; 2]>,
    /// ∂_r ψ at the grid nodes
    pub derivs: Vec<[f64; 2]>,
    pub coeffs: MatchingCoefficients,
    /// far field (γ1 sin(ξr) + γ2 cos(ξr))/√(ξr)·e(ξ)
    pub gamma: (f64, f64),
    /// ∂_r ψ(ξ, 0)
    pub slope0: [f64; 2],
    pub r_match: f64,
    pub diagnostics: EigenDiagnostics,
}

impl Eigenfunction {
    pub fn to_field(&self) -> RadialField {
        let values = self.samples.iter().map(|&[a, b]| [a.into(), b.into()]).collect();
        RadialField::new(self.grid.clone(), values)
    }

    /// ψ(−ξ, ·) = −σ₁ψ(ξ, ·).
    pub fn mirrored(&self) -> Eigenfunction {
        let flip = |v: &Vec<[f64; 2]>| v.iter().map(|[a, b]| [-b, -a]).collect();
        Eigenfunction {
            sp: SpectralPoint::from_xi(-self.sp.xi),
            samples: flip(&self.samples),
            derivs: flip(&self.derivs),
            slope0: [-self.slope0[1], -self.slope0[0]],
            ..self.clone()
        }
    }
}

// ---------------------------------------------------------------------------
// continuous orthonormalization

/// k columns of length 4 stored contiguously.
fn qr_in_place(y: &mut [f64], k: usize) -> [f64; 9] {
    let mut r = [0.0; 9];
    for j in 0..k {
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for i in 0..j {
                let d: f64 = (0..4).map(|t| y[4 * i + t] * y[4 * j + t]).sum();
                r[3 * i + j] += d;
                for t in 0..4 {
                    y[4 * j + t] -= d * y[4 * i + t];
                }
            }
        }
        let n = (0..4).map(|t| y[4 * j + t].powi(2)).sum::<f64>().sqrt();
        r[3 * j + j] = n;
        for t in 0..4 {
            y[4 * j + t] /= n;
        }
    }
    r
}

/// a ← b·a for k×k upper-triangular matrices in 3×3 storage.
fn tri_mul_left(b: &[f64; 9], a: &mut [f64; 9], k: usize) {
    let mut out = [0.0; 9];
    for i in 0..k {
        for j in i..k {
            out[3 * i + j] = (i..=j).map(|l| b[3 * i + l] * a[3 * l + j]).sum();
        }
    }
    *a = out;
}

/// Solve P c_prev = c for upper-triangular P, skipping rows below `first`.
fn tri_solve(p: &[f64; 9], c: &[f64; 3], k: usize, first: usize) -> [f64; 3] {
    let mut x = [f64::NAN; 3];
    for i in (first..k).rev() {
        let s: f64 = ((i + 1)..k).map(|j| p[3 * i + j] * x[j]).sum();
        x[i] = (c[i] - s) / p[3 * i + i];
    }
    x
}

const ROW0_LIMIT: f64 = 1e150;

struct Sweep {
    k: usize,
    /// orthonormal columns at each path point
    q: Vec<[f64; 12]>,
    /// triangular transfer over each path interval
    p: Vec<[f64; 9]>,
    /// false when row 0 of the interval product had to be rescaled
    row0: Vec<bool>,
    r0: [f64; 9],
}

fn sweep(
    sp: &SpectralPoint,
    profile: &VortexProfile,
    rep: Representation,
    seeds: &[[f64; 4]],
    path: &[f64],
    tol: f64,
) -> Result<Sweep, OdeError> {
    let k = seeds.len();
    let f = system(sp, &profile.table, rep);
    let solver = Dop853::new(tol, tol);
    let mut y: Vec<f64> = seeds.iter().flatten().copied().collect();
    let r0 = qr_in_place(&mut y, k);
    let mut q = Vec::with_capacity(path.len());
    let mut p = Vec::with_capacity(path.len());
    let mut row0 = Vec::with_capacity(path.len());
    let store = |y: &[f64]| {
        let mut a = [0.0; 12];
        a[..4 * k].copy_from_slice(y);
        a
    };
    q.push(store(&y));
    let mut h = 0.0;
    for w in path.windows(2) {
        let mut acc = [0.0; 9];
        for i in 0..k {
            acc[3 * i + i] = 1.0;
        }
        let mut valid = true;
        if w[1] != w[0] {
            solver.integrate(&f, w[0], &mut y, w[1], &mut h, |_, y| {
                let rs = qr_in_place(y, k);
                tri_mul_left(&rs, &mut acc, k);
                if acc[0].abs() > ROW0_LIMIT {
                    for j in 0..k {
                        acc[j] /= ROW0_LIMIT;
                    }
                    valid = false;
                }
                true
            })?;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::Overflow(w[1]));
        }
        q.push(store(&y));
        p.push(acc);
        row0.push(valid);
    }
    Ok(Sweep { k, q, p, row0, r0 })
}

impl Sweep {
    /// Coordinates at every path point given coordinates at path index `end`.
    fn carry_back(&self, end: usize, c_end: [f64; 3]) -> Vec<[f64; 3]> {
        let mut c = vec![[0.0; 3]; end + 1];
        c[end] = c_end;
        for i in (0..end).rev() {
            let first = if self.row0[i] && c[i + 1][0].is_finite() { 0 } else { 1 };
            c[i] = tri_solve(&self.p[i], &c[i + 1], self.k, first);
        }
        c
    }

    fn value(&self, i: usize, c: &[f64; 3]) -> [f64; 4] {
        let mut v = [0.0; 4];
        for j in 0..self.k {
            for t in 0..4 {
                v[t] += self.q[i][4 * j + t] * c[j];
            }
        }
        v
    }
}

fn to_uv(sp: &SpectralPoint, rep: Representation, v: [f64; 4]) -> [f64; 4] {
    SolutionSample::real(0.0, v, rep).to(sp, Representation::UV).re()
}

fn from_uv(sp: &SpectralPoint, rep: Representation, v: [f64; 4]) -> [f64; 4] {
    SolutionSample::real(0.0, v, Representation::UV).to(sp, rep).re()
}

struct Matched {
    x_b: [f64; 3],
    x_e: [f64; 3],
    gap: f64,
    null_residual: f64,
    jump: f64,
}

fn match_at(qb: &[f64; 12], qe: &[f64; 12], tol: f64) -> Matched {
    // rows: the four solution components; columns: [Q_B | −Q_E], zero-padded
    let a = Matrix5::from_fn(|i, j| {
        if i >= 4 {
            0.0
        } else if j < 3 {
            qb[4 * j + i]
        } else {
            -qe[4 * (j - 3) + i]
        }
    });
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..5).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let s: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let null = vt.row(idx[4]);
    let x: Vec<f64> = (0..5).map(|j| null[j]).collect();
    let ax = a * nalgebra::Vector5::from_column_slice(&x);
    let gap = s[3] / (s[4] + tol * s[0]);
    let x_b = [x[0], x[1], x[2]];
    let x_e = [x[3], x[4], 0.0];
    let vb: Vec<f64> = (0..4).map(|t| (0..3).map(|j| qb[4 * j + t] * x_b[j]).sum()).collect();
    let ve: Vec<f64> = (0..4).map(|t| (0..2).map(|j| qe[4 * j + t] * x_e[j]).sum()).collect();
    let nb = vb.iter().map(|v| v * v).sum::<f64>().sqrt();
    let jump = vb.iter().zip(&ve).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / nb;
    Matched { x_b, x_e, gap, null_residual: ax.norm() / s[0], jump }
}

struct Assembled {
    values: Vec<[f64; 4]>,
    alpha: [f64; 3],
    beta_uv: [f64; 2],
    coords_b: Vec<[f64; 3]>,
}

/// ψ at all nodes (UV) from matching coordinates at node `jm`, unnormalized.
fn assemble(
    sp: &SpectralPoint,
    rep: Representation,
    e: &Sweep,
    b: &Sweep,
    n: usize,
    jm: usize,
    m: &Matched,
) -> Assembled {
    // E path: path index i is node i; B path: index 0 is R_top, index t is node n − t
    let ce = e.carry_back(jm, m.x_e);
    let bi = n - jm;
    let cb = b.carry_back(bi, m.x_b);
    let mut values = vec![[0.0; 4]; n];
    for (j, v) in values.iter_mut().enumerate() {
        let raw = if j <= jm { e.value(j, &ce[j]) } else { b.value(n - j, &cb[n - j]) };
        *v = to_uv(sp, rep, raw);
    }
    let beta = tri_solve(&e.r0, &ce[0], 2, 0);
    let alpha = tri_solve(&b.r0, &cb[0], 3, 1);
    Assembled { values, alpha, beta_uv: [beta[0], beta[1]], coords_b: cb }
}

/// Generalized eigenfunction at one frequency with the default matching radius.
pub fn eigenfunction(sp: &SpectralPoint, profile: &VortexProfile, cfg: &EigenConfig) -> Result<Eigenfunction, EigenError> {
    let r_match = default_r_match(sp.xi, cfg.y0, profile.grid.r_max());
    eigenfunction_at(sp, profile, cfg, r_match)
}

/// Generalized eigenfunction matched at the grid node nearest `r_match`; the
/// consistency check uses the node nearest 2·r_match.
pub fn eigenfunction_at(
    sp: &SpectralPoint,
    profile: &VortexProfile,
    cfg: &EigenConfig,
    r_match: f64,
) -> Result<Eigenfunction, EigenError> {
    if sp.xi == 0.0 {
        return Err(EigenError::ZeroFrequency);
    }
    if sp.xi < 0.0 {
        let pos = SpectralPoint::from_xi(-sp.xi);
        return Ok(eigenfunction_at(&pos, profile, cfg, r_match)?.mirrored());
    }
    let ode = |source| EigenError::Ode { xi: sp.xi, source };
    let grid = &profile.grid;
    let nodes = &grid.nodes;
    let n = nodes.len();
    let jm = grid.nearest(r_match).clamp(1, n - 2);
    let jm2 = grid.nearest(2.0 * nodes[jm]).clamp(jm, n - 2);
    let rep = preferred_representation(sp, cfg.lambda_switch);
    let tol = cfg.ode_tol;

    // outward from the origin
    let a = profile.slope_a;
    let r_min = nodes[0];
    let seeds_e = [[1.0, 0.0], [0.0, 1.0]].map(|c| from_uv(sp, rep, frobenius_uv(sp, a, c, r_min)));
    let e = sweep(sp, profile, rep, &seeds_e, &nodes[..=jm2], tol).map_err(ode)?;

    // inward from far out
    let r_top = (cfg.far_x / sp.xi * (1.0 + 1e-12)).max(grid.r_max()).max(cfg.far_r).max(20.0 / sp.kappa);
    let jost = |kind| seed_jost(sp, &profile.table, kind, r_top).map(|s| s.to(sp, rep).re());
    let seeds_b = [
        jost(JostKind::Decaying).map_err(ode)?,
        jost(JostKind::OscCos).map_err(ode)?,
        jost(JostKind::OscSin).map_err(ode)?,
    ];
    let mut path_b = vec![r_top];
    path_b.extend(nodes[jm..].iter().rev());
    let b = sweep(sp, profile, rep, &seeds_b, &path_b, tol).map_err(ode)?;

    let m1 = match_at(&b.q[n - jm], &e.q[jm], tol);
    if !(m1.gap >= cfg.match_gap) {
        return Err(EigenError::RankDeficient { xi: sp.xi, gap: m1.gap, min: cfg.match_gap });
    }
    let m2 = match_at(&b.q[n - jm2], &e.q[jm2], tol);

    let one = assemble(sp, rep, &e, &b, n, jm, &m1);
    let two = assemble(sp, rep, &e, &b, n, jm2, &m2);

    let c = sp.c_factor();
    let norm = |asm: &Assembled| {
        let (a3, a4) = (asm.alpha[1], asm.alpha[2]);
        let g1 = c / std::f64::consts::PI.sqrt() * (a3 - a4);
        let g2 = -c / std::f64::consts::PI.sqrt() * (a3 + a4);
        let nn = g1.hypot(g2);
        // sign: ψ′(0)·e(ξ) > 0
        let s = if asm.beta_uv[0] * sp.e_vec[0] + asm.beta_uv[1] * sp.e_vec[1] >= 0.0 { 1.0 } else { -1.0 };
        (s / nn, (s * g1 / nn, s * g2 / nn))
    };
    let (k1, gamma) = norm(&one);
    let (k2, _) = norm(&two);
    let psi1: Vec<[f64; 4]> = one.values.iter().map(|v| v.map(|x| x * k1)).collect();
    let psi2: Vec<[f64; 4]> = two.values.iter().map(|v| v.map(|x| x * k2)).collect();
    let top = psi1.iter().map(|v| v[0].hypot(v[2])).fold(0.0, f64::max);
    let two_radius_dev =
        psi1.iter().zip(&psi2).map(|(a, b)| (a[0] - b[0]).hypot(a[2] - b[2])).fold(0.0, f64::max) / top;

    let wronskian_spread = wronskian_check(sp, rep, &b, n, jm, &m1, &one, nodes, r_top, &seeds_b);

    let beta_uv = one.beta_uv.map(|x| x * k1);
    let mm = sp.m();
    let beta_chan = [
        2.0 / sp.xi * (mm[0][0] * beta_uv[0] + mm[0][1] * beta_uv[1]),
        2.0 / sp.xi * (mm[1][0] * beta_uv[0] + mm[1][1] * beta_uv[1]),
    ];
    let coeffs = MatchingCoefficients {
        beta1: beta_chan[0],
        beta2: beta_chan[1],
        alpha2: m1.x_b[0] * k1,
        alpha3: one.alpha[1] * k1,
        alpha4: one.alpha[2] * k1,
        gap: m1.gap,
        null_residual: m1.null_residual,
    };
    Ok(Eigenfunction {
        sp: *sp,
        grid: grid.clone(),
        samples: psi1.iter().map(|v| [v[0], v[2]]).collect(),
        derivs: psi1.iter().map(|v| [v[1], v[3]]).collect(),
        coeffs,
        gamma,
        slope0: beta_uv,
        r_match: nodes[jm],
        diagnostics: EigenDiagnostics { wronskian_spread, two_radius_dev, match_jump: m1.jump },
    })
}

/// Pair ψ with a second bounded solution χ (fixed by its coordinates at
/// r_match) and measure how much W(ψ, χ) drifts over [r_match, r_max] and at
/// the far seed radius.
#[allow(clippy::too_many_arguments)]
fn wronskian_check(
    sp: &SpectralPoint,
    rep: Representation,
    b: &Sweep,
    n: usize,
    jm: usize,
    m: &Matched,
    psi: &Assembled,
    nodes: &[f64],
    r_top: f64,
    seeds_b: &[[f64; 4]; 3],
) -> f64 {
    let bi = n - jm;
    let y = [0.0, -m.x_b[2], m.x_b[1]];
    let cy = b.carry_back(bi, y);
    let mut ws = Vec::with_capacity(bi + 1);
    for t in 1..=bi {
        let j = n - t;
        let chi = to_uv(sp, rep, b.value(t, &cy[t]));
        let p = to_uv(sp, rep, b.value(t, &psi.coords_b[t]));
        ws.push(wronskian_real(nodes[j], &p, &chi));
    }
    // at the seed radius both are combinations of the oscillatory seeds
    let chi_alpha = tri_solve(&b.r0, &cy[0], 3, 1);
    let seed_uv: Vec<[f64; 4]> = seeds_b.iter().map(|s| to_uv(sp, rep, *s)).collect();
    let wcs = wronskian_real(r_top, &seed_uv[1], &seed_uv[2]);
    ws.push(wcs * (psi.alpha[1] * chi_alpha[2] - psi.alpha[2] * chi_alpha[1]));
    let max = ws.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    let hi = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ws.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo) / max
}

// ---------------------------------------------------------------------------
// scattering coefficients and decomposition

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Regime {
    FlatLow,
    SharpHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum TemplateCoeffs {
    Flat { b: f64, c: f64 },
    Sharp { a: f64, b: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub regime: Regime,
    pub template_coeffs: TemplateCoeffs,
    pub singular_part: Vec<[f64; 2]>,
    pub regular_part: Vec<[f64; 2]>,
}

/// Smooth cutoff: 1 on [0, 1], 0 on [2, ∞).
pub fn chi(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// (b♭, c♭) from the far-field phase pair.
pub fn flat_coeffs(gamma: (f64, f64)) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (s * (gamma.0 + gamma.1), s * (gamma.0 - gamma.1))
}

/// (a♯, b♯, c♯): a♯ from the slope at the origin, (b♯, c♯) = (γ2, γ1).
pub fn sharp_coeffs(eig: &Eigenfunction) -> (f64, f64, f64) {
    let e = eig.sp.e_vec;
    let a = 2.0 * (eig.slope0[0] * e[0] + eig.slope0[1] * e[1]) / eig.sp.xi;
    (a, eig.gamma.1, eig.gamma.0)
}

fn template(eig: &Eigenfunction, profile: &VortexProfile, regime: Regime) -> (TemplateCoeffs, Vec<[f64; 2]>) {
    let xi = eig.sp.xi;
    let e = eig.sp.e_vec;
    let sq = std::f64::consts::FRAC_PI_2.sqrt();
    let q = std::f64::consts::FRAC_PI_4;
    match regime {
        Regime::FlatLow => {
            let (b, c) = flat_coeffs(eig.gamma);
            let v = eig
                .grid
                .nodes
                .iter()
                .zip(&profile.rho)
                .map(|(&r, &rho)| {
                    let x = xi * r;
                    let j0 = bessel(BesselKind::J0, x).unwrap_or(0.0);
                    sq * b * ((rho - 1.0) * chi(x) + j0) + c * (x - q).sin() / x.sqrt() * (1.0 - chi(x))
                })
                .collect();
            (TemplateCoeffs::Flat { b, c }, orient(v, e))
        }
        Regime::SharpHigh => {
            let (a, b, c) = sharp_coeffs(eig);
            let v = eig
                .grid
                .nodes
                .iter()
                .map(|&r| {
                    let x = xi * r;
                    let j1 = bessel(BesselKind::J1, x).unwrap_or(0.0);
                    a * j1 * chi(r) + (b * x.cos() + c * x.sin()) / x.sqrt() * (1.0 - chi(r))
                })
                .collect();
            (TemplateCoeffs::Sharp { a, b, c }, orient(v, e))
        }
    }
}

fn orient(v: Vec<f64>, e: [f64; 2]) -> Vec<[f64; 2]> {
    v.iter().map(|s| [s * e[0], s * e[1]]).collect()
}

pub fn scattering_coeffs(eig: &Eigenfunction, profile: &VortexProfile) -> EigenDecomposition {
    if eig.sp.xi < 0.0 {
        let d = scattering_coeffs(&eig.mirrored(), profile);
        let flip = |v: Vec<[f64; 2]>| v.into_iter().map(|[a, b]| [-b, -a]).collect();
        return EigenDecomposition {
            singular_part: flip(d.singular_part),
            regular_part: flip(d.regular_part),
            ..d
        };
    }
    let xi = eig.sp.xi;
    let build = |regime| {
        let (coeffs, s) = template(eig, profile, regime);
        let r: Vec<[f64; 2]> = eig.samples.iter().zip(&s).map(|(p, t)| [p[0] - t[0], p[1] - t[1]]).collect();
        EigenDecomposition { regime, template_coeffs: coeffs, singular_part: s, regular_part: r }
    };
    if xi <= 0.5 {
        build(Regime::FlatLow)
    } else if xi >= 2.0 {
        build(Regime::SharpHigh)
    } else {
        let lo = build(Regime::FlatLow);
        let hi = build(Regime::SharpHigh);
        let sup = |d: &EigenDecomposition| d.regular_part.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        if sup(&lo) <= sup(&hi) {
            lo
        } else {
            hi
        }
    }
}

// ---------------------------------------------------------------------------
// tables

/// Eigenfunctions at the positive nodes of a ξ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTable {
    pub xi: XiGrid,
    pub grid: Arc<RadialGrid>,
    pub eigenfunctions: Vec<Eigenfunction>,
    /// ψ(0, ·) = √(π/4)·Ξ₀, the continuous extension to ξ = 0
    pub zero_limit: Vec<[f64; 2]>,
}

impl EigenTable {
    /// ψ at signed index: `negative` selects −ξ via −σ₁.
    pub fn psi(&self, i: usize, negative: bool) -> Vec<[f64; 2]> {
        let s = &self.eigenfunctions[i].samples;
        if negative {
            s.iter().map(|[a, b]| [-b, -a]).collect()
        } else {
            s.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.eigenfunctions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenfunctions.is_empty()
    }
}

pub fn zero_limit(profile: &VortexProfile) -> Vec<[f64; 2]> {
    let c = (std::f64::consts::FRAC_PI_4).sqrt();
    profile.rho.iter().map(|&p| [c * p, -c * p]).collect()
}

pub fn build_table(profile: &VortexProfile, xi: &XiGrid, cfg: &EigenConfig) -> Result<EigenTable, EigenError> {
    cfg.validate()?;
    let results: Vec<Result<Eigenfunction, EigenError>> =
        xi.xi.par_iter().map(|&x| eigenfunction(&SpectralPoint::from_xi(x), profile, cfg)).collect();
    let mut fails = Vec::new();
    let mut eigs = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => eigs.push(e),
            Err(e) => fails.push((i, e.to_string())),
        }
    }
    if !fails.is_empty() {
        return Err(EigenError::Table(fails));
    }
    Ok(EigenTable { xi: xi.clone(), grid: profile.grid.clone(), eigenfunctions: eigs, zero_limit: zero_limit(profile) })
}
