//! The eigenvalue equation Hψ = λψ on the first harmonic as a first-order
//! 4-system, in the (u, v) variables or the diagonalized (φ, ψ) variables,
//! with seeds at the origin and at large r.

use num_complex::Complex64;
use thiserror::Error;

use crate::profile::ProfileTable;
use crate::rk::{Dop853, RkError};
use crate::special::{hankel_type, k_type_scaled};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("step size underflow at r = {0} (seed too close to the origin or grid misuse)")]
    StepUnderflow(f64),
    #[error("solution overflow at r = {0} (growing mode integrated in the wrong direction)")]
    Overflow(f64),
    #[error("integration failed: {0}")]
    Integration(RkError),
    #[error("samples at different radii: {0} vs {1}")]
    RadiusMismatch(f64, f64),
    #[error("Wronskian needs samples in the (u, v) representation")]
    Representation,
}

impl From<RkError> for OdeError {
    fn from(e: RkError) -> Self {
        match e {
            RkError::StepUnderflow { t } => OdeError::StepUnderflow(t),
            RkError::NonFinite { t } => OdeError::Overflow(t),
            other => OdeError::Integration(other),
        }
    }
}

/// Spectral parameter in both the time frequency λ and the space frequency ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lam: f64,
    pub xi: f64,
    /// ⟨λ⟩ = √(1 + λ²)
    pub jlam: f64,
    pub kappa: f64,
    /// λ′(ξ)
    pub dlam: f64,
    pub e_vec: [f64; 2],
    pub a_plus: f64,
    pub a_minus: f64,
}

impl SpectralPoint {
    pub fn from_xi(xi: f64) -> Self {
        let x2 = xi * xi;
        let lam = xi * (x2 + 2.0).sqrt();
        let jlam = 1.0 + x2;
        // a₊ = λ + ⟨λ⟩ and a₋ = −1/a₊, each evaluated without cancellation
        let (a_plus, a_minus) = if lam >= 0.0 {
            let ap = lam + jlam;
            (ap, -1.0 / ap)
        } else {
            let am = lam - jlam;
            (-1.0 / am, am)
        };
        let n = (a_plus * a_plus + 1.0).sqrt();
        Self {
            lam,
            xi,
            jlam,
            kappa: (2.0 + x2).sqrt(),
            dlam: 2.0 * (x2 + 1.0) / (x2 + 2.0).sqrt(),
            e_vec: [a_plus / n, -1.0 / n],
            a_plus,
            a_minus,
        }
    }

    pub fn from_lambda(lam: f64) -> Self {
        let jlam = (1.0 + lam * lam).sqrt();
        // ξ² = ⟨λ⟩ − 1 = λ²/(⟨λ⟩ + 1)
        let xi = lam.signum() * (lam * lam / (jlam + 1.0)).sqrt();
        Self::from_xi(if lam == 0.0 { 0.0 } else { xi })
    }

    /// M with (φ, ψ) = M (u, v).
    pub fn m(&self) -> [[f64; 2]; 2] {
        [[1.0 / self.a_plus, 1.0], [-1.0, -self.a_minus]]
    }

    pub fn m_inv(&self) -> [[f64; 2]; 2] {
        let det = 1.0 - self.a_minus / self.a_plus;
        [[-self.a_minus / det, -1.0 / det], [1.0 / det, 1.0 / (self.a_plus * det)]]
    }

    /// C with M⁻¹ (0, 1)ᵀ = C e(ξ).
    pub fn c_factor(&self) -> f64 {
        -(self.a_plus / (2.0 * self.jlam)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    UV,
    PhiPsi,
}

/// (u, u′, v, v′) or (φ, φ′, ψ, ψ′) at radius r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionSample {
    pub r: f64,
    pub value: [Complex64; 4],
    pub representation: Representation,
}

fn mul2<T>(m: [[f64; 2]; 2], a: T, b: T) -> (T, T)
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    (a * m[0][0] + b * m[0][1], a * m[1][0] + b * m[1][1])
}

impl SolutionSample {
    pub fn real(r: f64, v: [f64; 4], representation: Representation) -> Self {
        Self { r, value: v.map(|x| Complex64::new(x, 0.0)), representation }
    }

    pub fn to(&self, sp: &SpectralPoint, rep: Representation) -> Self {
        if rep == self.representation {
            return *self;
        }
        let m = match rep {
            Representation::PhiPsi => sp.m(),
            Representation::UV => sp.m_inv(),
        };
        let [a, da, b, db] = self.value;
        let (p, q) = mul2(m, a, b);
        let (dp, dq) = mul2(m, da, db);
        Self { r: self.r, value: [p, dp, q, dq], representation: rep }
    }

    pub fn re(&self) -> [f64; 4] {
        self.value.map(|z| z.re)
    }

    pub fn im(&self) -> [f64; 4] {
        self.value.map(|z| z.im)
    }
}

/// Right-hand side of the 4-system for one column y = (a, a′, b, b′).
#[inline]
pub fn rhs4(sp: &SpectralPoint, rep: Representation, r: f64, m: f64, y: &[f64], d: &mut [f64]) {
    let ir = 1.0 / r;
    let ir2 = ir * ir;
    let (a, da, b, db) = (y[0], y[1], y[2], y[3]);
    d[0] = da;
    d[2] = db;
    match rep {
        Representation::UV => {
            d[1] = -da * ir + a * ir2 + (1.0 - sp.lam) * a + b + m * (2.0 * a + b);
            d[3] = -db * ir + b * ir2 + a + (1.0 + sp.lam) * b + m * (a + 2.0 * b);
        }
        Representation::PhiPsi => {
            let s = m / sp.jlam;
            d[1] = -da * ir + a * ir2 + sp.kappa * sp.kappa * a + s * ((1.0 + 2.0 * sp.jlam) * a - sp.lam * b);
            d[3] = -db * ir + b * ir2 - sp.xi * sp.xi * b + s * (-sp.lam * a + (2.0 * sp.jlam - 1.0) * b);
        }
    }
}

/// The system acting on any number of stacked columns.
pub fn system<'a>(
    sp: &'a SpectralPoint,
    profile: &'a ProfileTable,
    rep: Representation,
) -> impl Fn(f64, &[f64], &mut [f64]) + 'a {
    move |r, y, d| {
        let m = profile.rho2m1(r);
        for (yc, dc) in y.chunks_exact(4).zip(d.chunks_exact_mut(4)) {
            rhs4(sp, rep, r, m, yc, dc);
        }
    }
}

/// Representation used for integration at this λ.
pub fn preferred_representation(sp: &SpectralPoint, lambda_switch: f64) -> Representation {
    if sp.lam.abs() >= lambda_switch {
        Representation::PhiPsi
    } else {
        Representation::UV
    }
}

/// Frobenius seed at the origin: (u, v) = r e_which + r³ w + r⁵ z.
pub fn seed_origin(sp: &SpectralPoint, profile: &ProfileTable, which: usize, r0: f64) -> Result<SolutionSample, OdeError> {
    if !(r0 > 0.0 && r0 <= 0.05) {
        return Err(OdeError::Precondition(format!("origin seed needs 0 < r0 <= 0.05, got {r0}")));
    }
    if which != 1 && which != 2 {
        return Err(OdeError::Precondition(format!("which must be 1 or 2, got {which}")));
    }
    let c = if which == 1 { [1.0, 0.0] } else { [0.0, 1.0] };
    Ok(SolutionSample::real(r0, frobenius_uv(sp, profile.slope_a, c, r0), Representation::UV))
}

/// Three-term odd expansion of the regular solution with leading coefficient c.
pub fn frobenius_uv(sp: &SpectralPoint, a: f64, c: [f64; 2], r: f64) -> [f64; 4] {
    let lam = sp.lam;
    let w = [-(1.0 + lam) * c[0] / 8.0, -(1.0 - lam) * c[1] / 8.0];
    let a2 = a * a;
    let z = [
        (a2 * (2.0 * c[0] + c[1]) - (1.0 + lam) * w[0]) / 24.0,
        (a2 * (2.0 * c[1] + c[0]) - (1.0 - lam) * w[1]) / 24.0,
    ];
    let (r2, r4) = (r * r, r.powi(4));
    let f = |k: usize| (c[k] * r + w[k] * r * r2 + z[k] * r * r4, c[k] + 3.0 * w[k] * r2 + 5.0 * z[k] * r4);
    let (u, du) = f(0);
    let (v, dv) = f(1);
    [u, du, v, dv]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostKind {
    Decaying,
    OscCos,
    OscSin,
}

/// Seed at large R in (u, v) form.
///
/// Decaying: φ-channel K-type profile with the factor e^{−κR} removed.
/// Oscillating: real/imaginary part of the H₁-type profile in the ψ-channel.
/// Each carries the forced response of the other channel to leading order in
/// 1/r².
pub fn seed_jost(sp: &SpectralPoint, profile: &ProfileTable, kind: JostKind, big_r: f64) -> Result<SolutionSample, OdeError> {
    let (rho, drho, _) = profile.eval(big_r);
    let m = profile.rho2m1(big_r);
    let dm = 2.0 * rho * drho;
    let ph = match kind {
        JostKind::Decaying => {
            if sp.kappa * big_r < 20.0 {
                return Err(OdeError::Precondition(format!("κR = {} < 20", sp.kappa * big_r)));
            }
            let mu = -4.0 * sp.kappa * sp.kappa / sp.jlam;
            let (g, dg) = k_type_scaled(mu, sp.kappa * big_r);
            // f = e^{−κr} g(κr), scaled by e^{κR}
            let (f, df) = (g, sp.kappa * (dg - g));
            let c = -sp.lam / (sp.jlam * (sp.kappa * sp.kappa + sp.xi * sp.xi));
            [f, df, c * m * f, c * (dm * f + m * df)]
        }
        JostKind::OscCos | JostKind::OscSin => {
            if sp.xi.abs() * big_r < 20.0 {
                return Err(OdeError::Precondition(format!("ξR = {} < 20", sp.xi.abs() * big_r)));
            }
            let xi = sp.xi.abs();
            let mu = 4.0 * (1.0 / sp.jlam - 1.0);
            let (h, dh) = hankel_type(mu, xi * big_r);
            let (f, df) = match kind {
                JostKind::OscCos => (h.re, xi * dh.re),
                _ => (h.im, xi * dh.im),
            };
            let c = sp.lam / (sp.jlam * (sp.kappa * sp.kappa + sp.xi * sp.xi));
            [c * m * f, c * (dm * f + m * df), f, df]
        }
    };
    Ok(SolutionSample::real(big_r, ph, Representation::PhiPsi).to(sp, Representation::UV))
}

/// Integrate a seed through `targets` (monotone, all on one side of the seed),
/// returning samples in the seed's representation.
pub fn integrate(
    sp: &SpectralPoint,
    profile: &ProfileTable,
    seed: &SolutionSample,
    targets: &[f64],
    tol: f64,
) -> Result<Vec<SolutionSample>, OdeError> {
    if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(OdeError::Precondition(format!("target radius {t} must be positive")));
    }
    let rep = seed.representation;
    let f = system(sp, profile, rep);
    let solver = Dop853::new(tol, tol);
    let mut y: Vec<f64> = seed.re().into_iter().chain(seed.im()).collect();
    let mut r = seed.r;
    let mut h = 0.0;
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        if t != r {
            solver.integrate(&f, r, &mut y, t, &mut h, |_, _| false)?;
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > 1e250) {
            return Err(OdeError::Overflow(t));
        }
        r = t;
        let value = [0, 1, 2, 3].map(|k| Complex64::new(y[k], y[k + 4]));
        out.push(SolutionSample { r, value, representation: rep });
    }
    Ok(out)
}

/// W(a, b) = F′·G − G′·F for F = √r a, G = √r b (bilinear, no conjugation).
pub fn wronskian(a: &SolutionSample, b: &SolutionSample) -> Result<Complex64, OdeError> {
    if a.representation != Representation::UV || b.representation != Representation::UV {
        return Err(OdeError::Representation);
    }
    if a.r != b.r {
        return Err(OdeError::RadiusMismatch(a.r, b.r));
    }
    let [u, du, v, dv] = a.value;
    let [p, dp, q, dq] = b.value;
    Ok(((du * p - dp * u) + (dv * q - dq * v)) * a.r)
}

/// Real form of the Wronskian for raw (u, u′, v, v′) columns.
pub fn wronskian_real(r: f64, a: &[f64], b: &[f64]) -> f64 {
    r * ((a[1] * b[0] - b[1] * a[0]) + (a[3] * b[2] - b[3] * a[2]))
}
