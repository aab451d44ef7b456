//! The degree-one vortex profile ρ, the resonance pair and the kernel
//! solutions of L0 and L0 − 2ρ².
//!
//! ρ solves ρ'' + ρ'/r − ρ/r² + (1 − ρ²)ρ = 0, ρ(0) = 0, ρ(∞) = 1. It is the
//! separatrix between solutions that overshoot 1 and solutions that turn
//! back towards 0, so the origin slope is found by bisection on that
//! dichotomy. A single shot loses the separatrix after a few units of r
//! (the unstable direction grows like e^{√2 r}), so the shot is re-anchored:
//! once the two bracketing trajectories separate, the accepted part is kept
//! and a new bisection on ρ'(r_anchor) starts from there. Beyond `R_JOIN` the
//! large-r asymptotic series in r⁻² is used.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::interp::quintic_hermite;
use crate::rk::{Dop853, RkError};

/// Spacing of the internal profile table.
pub const TABLE_STEP: f64 = 0.005;
/// Radius beyond which the asymptotic series replaces the table.
pub const R_JOIN: f64 = 30.0;

const SEPARATION: f64 = 1e-13;
const BLEND: f64 = 1.0;
const MAX_BISECTIONS: usize = 200;
const SHOT_LENGTH: f64 = 45.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("shooting bisection did not converge: {0}")]
    NoConvergence(String),
    #[error("integration failed: {0}")]
    Integration(#[from] RkError),
    #[error("grid must reach r_max >= 40, got {0}")]
    GridTooShort(f64),
    #[error("ODE residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
}

/// Fine uniform table of (ρ, ρ') on [0, R_JOIN] plus the asymptotic series.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub h: f64,
    pub rho: Vec<f64>,
    pub drho: Vec<f64>,
    pub slope_a: f64,
    series: Vec<f64>,
}

/// Coefficients c_k of ρ ~ Σ c_k r^{-2k} (c_0 = 1).
pub fn asymptotic_coefficients(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    // δ = ρ - 1 coefficients are c[1..]; d2 = δ², d3 = δ³
    for m in 1..=n {
        let mut d2 = 0.0;
        for i in 1..m {
            d2 += c[i] * c[m - i];
        }
        let mut d3 = 0.0;
        for i in 1..m {
            for j in 1..(m - i) {
                d3 += c[i] * c[j] * c[m - i - j];
            }
        }
        let k = (m - 1) as f64;
        c[m] = (c[m - 1] * (4.0 * k * k - 1.0) - 3.0 * d2 - d3) / 2.0;
    }
    c
}

fn profile_rhs(r: f64, y: &[f64], d: &mut [f64]) {
    d[0] = y[1];
    d[1] = -y[1] / r + y[0] / (r * r) - (1.0 - y[0] * y[0]) * y[0];
}

fn rho_second(r: f64, rho: f64, drho: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        -drho / r + rho / (r * r) - (1.0 - rho * rho) * rho
    }
}

fn rho_third(r: f64, rho: f64, drho: f64, d2rho: f64, a: f64) -> f64 {
    if r == 0.0 {
        -0.75 * a
    } else {
        -d2rho / r + 2.0 * drho / (r * r) - 2.0 * rho / (r * r * r) - (1.0 - 3.0 * rho * rho) * drho
    }
}

/// Three-term expansion a r − (a/8) r³ + ((a/8 + a³)/24) r⁵ and its derivative.
pub fn frobenius_rho(a: f64, r: f64) -> (f64, f64) {
    let c3 = -a / 8.0;
    let c5 = (a / 8.0 + a * a * a) / 24.0;
    (a * r + c3 * r.powi(3) + c5 * r.powi(5), a + 3.0 * c3 * r * r + 5.0 * c5 * r.powi(4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fate {
    Over,
    Under,
}

struct Shot {
    fate: Fate,
    traj: Vec<[f64; 2]>,
}

/// Integrate from table node `ja` with state `y` until the fate is decided.
fn shoot(h: f64, ja: usize, y: [f64; 2], series: &[f64]) -> Result<Shot, ProfileError> {
    let solver = Dop853::new(1e-14, 1e-16);
    let mut traj = vec![y];
    let mut y = y;
    let mut hs = 0.0;
    let jmax = ja + (SHOT_LENGTH / h) as usize;
    for j in ja..jmax {
        let (r0, r1) = (j as f64 * h, (j + 1) as f64 * h);
        solver.integrate(&profile_rhs, r0, &mut y, r1, &mut hs, |_, _| false)?;
        traj.push(y);
        if y[0] > 1.0 {
            return Ok(Shot { fate: Fate::Over, traj });
        }
        if y[1] < 0.0 {
            return Ok(Shot { fate: Fate::Under, traj });
        }
    }
    // undecided after a long shot: compare with the asymptotic profile
    let r = jmax as f64 * h;
    let fate = if y[0] > series_eval(series, r).0 { Fate::Over } else { Fate::Under };
    Ok(Shot { fate, traj })
}

fn series_eval(c: &[f64], r: f64) -> (f64, f64, f64) {
    // returns (ρ - 1, ρ', ρ'')
    let s = 1.0 / (r * r);
    let (mut d, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let mut sk = 1.0;
    let mut prev = f64::INFINITY;
    for (k, ck) in c.iter().enumerate().skip(1) {
        sk *= s;
        let t = ck * sk;
        if t.abs() > prev {
            break;
        }
        prev = t.abs();
        let kf = k as f64;
        d += t;
        d1 += -2.0 * kf * t / r;
        d2 += 2.0 * kf * (2.0 * kf + 1.0) * t / (r * r);
        if t.abs() < 1e-18 {
            break;
        }
    }
    (d, d1, d2)
}

impl ProfileTable {
    /// Solve for the profile by re-anchored bisection.
    pub fn solve() -> Result<Self, ProfileError> {
        let h = TABLE_STEP;
        let series = asymptotic_coefficients(40);
        let n_join = (R_JOIN / h).round() as usize;
        let mut rho = vec![0.0; n_join + 1];
        let mut drho = vec![0.0; n_join + 1];

        // origin segment: the parameter is the slope a, seeded at node 1
        let launch_origin = |a: f64| -> Result<Shot, ProfileError> {
            let (p, dp) = frobenius_rho(a, h);
            let mut s = shoot(h, 1, [p, dp], &series)?;
            s.traj.insert(0, [0.0, a]);
            Ok(s)
        };
        let (a_lo, a_hi, lo, hi) = bisect(0.4, 0.8, launch_origin)?;
        let slope_a = 0.5 * (a_lo + a_hi);

        let mut ja = 0usize;
        let (mut lo, mut hi) = (lo, hi);
        loop {
            // accept nodes while the two bracketing trajectories agree
            let m = lo.traj.len().min(hi.traj.len());
            let div = (0..m).find(|&k| (lo.traj[k][0] - hi.traj[k][0]).abs() > SEPARATION).unwrap_or(m);
            let margin = (0.5 / h) as usize;
            if div < 2 * margin {
                return Err(ProfileError::NoConvergence(format!(
                    "bracketing trajectories separate {} units after r = {}",
                    div as f64 * h,
                    ja as f64 * h
                )));
            }
            let keep = div - margin;
            for k in 0..=keep {
                let j = ja + k;
                if j > n_join {
                    break;
                }
                rho[j] = 0.5 * (lo.traj[k][0] + hi.traj[k][0]);
                drho[j] = 0.5 * (lo.traj[k][1] + hi.traj[k][1]);
            }
            if ja + keep >= n_join {
                break;
            }
            ja += keep;
            let rho_a = rho[ja];
            let (s1, s2) = (lo.traj[keep][1], hi.traj[keep][1]);
            let w = 10.0 * (s1 - s2).abs() + 1e-12;
            let launch = |s: f64| shoot(h, ja, [rho_a, s], &series);
            let (_, _, l, u) = bisect(s1.min(s2) - w, s1.max(s2) + w, launch)?;
            lo = l;
            hi = u;
        }
        Ok(Self { h, rho, drho, slope_a, series })
    }

    /// Rebuild from stored columns.
    pub fn from_columns(h: f64, rho: Vec<f64>, drho: Vec<f64>, slope_a: f64) -> Self {
        Self { h, rho, drho, slope_a, series: asymptotic_coefficients(40) }
    }

    pub fn r_join(&self) -> f64 {
        self.h * (self.rho.len() - 1) as f64
    }

    /// (ρ, ρ', ρ'') at any r; odd extension for r < 0.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r < 0.0 {
            let (p, dp, d2p) = self.eval(-r);
            return (-p, dp, -d2p);
        }
        let rj = self.r_join();
        if r >= rj {
            let (d, d1, d2) = series_eval(&self.series, r);
            return (1.0 + d, d1, d2);
        }
        let (p, dp) = self.table_eval(r);
        if r > rj - BLEND {
            // smooth hand-over to the series so no derivative jumps at r_join
            let (d, d1, _) = series_eval(&self.series, r);
            let t = (r - (rj - BLEND)) / BLEND;
            let w = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
            let dw = 30.0 * t * t * (1.0 - t) * (1.0 - t) / BLEND;
            let (q, dq) = (1.0 + d, d1);
            let pb = p + w * (q - p);
            let dpb = dp + w * (dq - dp) + dw * (q - p);
            return (pb, dpb, rho_second(r, pb, dpb));
        }
        (p, dp, rho_second(r, p, dp))
    }

    fn table_eval(&self, r: f64) -> (f64, f64) {
        let j = ((r / self.h) as usize).min(self.rho.len() - 2);
        let (r0, r1) = (j as f64 * self.h, (j + 1) as f64 * self.h);
        let (p0, q0) = (self.rho[j], self.drho[j]);
        let (p1, q1) = (self.rho[j + 1], self.drho[j + 1]);
        let (s0, s1) = (rho_second(r0, p0, q0), rho_second(r1, p1, q1));
        let (t0, t1) = (rho_third(r0, p0, q0, s0, self.slope_a), rho_third(r1, p1, q1, s1, self.slope_a));
        let p = quintic_hermite(r0, r1, [p0, q0, s0], [p1, q1, s1], r).0;
        // ρ' gets its own interpolant: differencing values near 1 would cost digits
        let dp = quintic_hermite(r0, r1, [q0, s0, t0], [q1, s1, t1], r).0;
        (p, dp)
    }

    /// ρ² − 1 without cancellation at large r.
    pub fn rho2m1(&self, r: f64) -> f64 {
        if r >= self.r_join() {
            let d = series_eval(&self.series, r).0;
            d * (2.0 + d)
        } else {
            let p = self.eval(r).0;
            (p - 1.0) * (p + 1.0)
        }
    }

    /// Mismatch between the table end and the asymptotic series there.
    pub fn junction_jump(&self) -> f64 {
        let r = self.r_join();
        let n = self.rho.len() - 1;
        let (d, d1, _) = series_eval(&self.series, r);
        (self.rho[n] - 1.0 - d).abs().max((self.drho[n] - d1).abs())
    }
}

fn bisect<F>(mut lo: f64, mut hi: f64, launch: F) -> Result<(f64, f64, Shot, Shot), ProfileError>
where
    F: Fn(f64) -> Result<Shot, ProfileError>,
{
    let mut s_lo = launch(lo)?;
    let mut s_hi = launch(hi)?;
    let mut widen = 0;
    while s_lo.fate != Fate::Under || s_hi.fate != Fate::Over {
        let w = hi - lo;
        if s_lo.fate != Fate::Under {
            lo -= w;
            s_lo = launch(lo)?;
        }
        if s_hi.fate != Fate::Over {
            hi += w;
            s_hi = launch(hi)?;
        }
        widen += 1;
        if widen > 40 {
            return Err(ProfileError::NoConvergence("could not bracket the separatrix".into()));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((lo, hi, s_lo, s_hi));
        }
        let s = launch(mid)?;
        match s.fate {
            Fate::Over => {
                hi = mid;
                s_hi = s;
            }
            Fate::Under => {
                lo = mid;
                s_lo = s;
            }
        }
    }
    Err(ProfileError::NoConvergence(format!("bracket [{lo}, {hi}] after {MAX_BISECTIONS} steps")))
}

/// ρ sampled on a radial grid, with the table it came from.
#[derive(Debug, Clone)]
pub struct VortexProfile {
    pub grid: Arc<RadialGrid>,
    pub rho: Vec<f64>,
    pub drho: Vec<f64>,
    pub slope_a: f64,
    pub tol: f64,
    pub table: Arc<ProfileTable>,
}

impl VortexProfile {
    pub fn from_table(table: Arc<ProfileTable>, grid: Arc<RadialGrid>, tol: f64) -> Self {
        let (rho, drho) = grid.nodes.iter().map(|&r| {
            let (p, dp, _) = table.eval(r);
            (p, dp)
        }).unzip();
        Self { slope_a: table.slope_a, grid, rho, drho, tol, table }
    }

    pub fn rho_at(&self, r: f64) -> f64 {
        self.table.eval(r).0
    }

    pub fn drho_at(&self, r: f64) -> f64 {
        self.table.eval(r).1
    }

    pub fn rho2m1_at(&self, r: f64) -> f64 {
        self.table.rho2m1(r)
    }

    /// C in |1 − ρ − 1/(2r²)| ≤ C/r⁴, fitted over nodes with r ≥ 10.
    pub fn tail_constant(&self) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.rho)
            .filter(|(r, _)| **r >= 10.0)
            .map(|(r, p)| (1.0 - p - 0.5 / (r * r)).abs() * r.powi(4))
            .fold(0.0, f64::max)
    }

    /// Max |ρ'' + ρ'/r − ρ/r² + (1 − ρ²)ρ| over interior nodes, by fourth-order
    /// central differences of step `h` on the profile function.
    pub fn ode_residual(&self, h: f64) -> f64 {
        let n = self.grid.len();
        self.grid.nodes[1..n - 1]
            .iter()
            .map(|&r| {
                let (d1, d2) = central_derivatives(|x| self.rho_at(x), r, h);
                let p = self.rho_at(r);
                (d2 + d1 / r - p / (r * r) + (1.0 - p * p) * p).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Fourth-order central first and second derivatives.
pub fn central_derivatives(f: impl Fn(f64) -> f64, r: f64, h: f64) -> (f64, f64) {
    let (m2, m1, z, p1, p2) = (f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// Solve for the profile and sample it on `grid`.
pub fn solve_profile(grid: Arc<RadialGrid>, tol: f64) -> Result<VortexProfile, ProfileError> {
    if grid.r_max() < 40.0 {
        return Err(ProfileError::GridTooShort(grid.r_max()));
    }
    sample_profile(Arc::new(ProfileTable::solve()?), grid, tol)
}

/// Sample a stored table on `grid`, with the same checks as [`solve_profile`].
pub fn sample_profile(table: Arc<ProfileTable>, grid: Arc<RadialGrid>, tol: f64) -> Result<VortexProfile, ProfileError> {
    if grid.r_max() < 40.0 {
        return Err(ProfileError::GridTooShort(grid.r_max()));
    }
    let p = VortexProfile::from_table(table, grid, tol);
    let residual = p.ode_residual(1e-3);
    if residual > tol {
        return Err(ProfileError::Residual { residual, tol });
    }
    Ok(p)
}

/// Ξ0 = (ρ, −ρ) and Ξ1 = (rρ' + ρ, rρ' + ρ).
#[derive(Debug, Clone)]
pub struct ResonancePair {
    pub xi0: RadialField,
    pub xi1: RadialField,
}

pub fn resonance_vectors(profile: &VortexProfile) -> ResonancePair {
    let g = profile.grid.clone();
    let c = |x: f64| Complex64::new(x, 0.0);
    let xi0 = RadialField::new(g.clone(), profile.rho.iter().map(|&p| [c(p), c(-p)]).collect());
    let xi1 = RadialField::new(
        g.clone(),
        g.nodes.iter().zip(profile.rho.iter().zip(&profile.drho)).map(|(&r, (&p, &dp))| {
            let v = r * dp + p;
            [c(v), c(v)]
        }).collect(),
    );
    ResonancePair { xi0, xi1 }
}

/// P0, Q0 and Q̃0 sampled on the profile grid.
#[derive(Debug, Clone)]
pub struct KernelSolutions {
    pub p0: Vec<f64>,
    pub q0: Vec<f64>,
    pub q0_tilde: Vec<f64>,
    /// Derivative Q0' at the nodes (used for interpolation and checks).
    pub dq0: Vec<f64>,
}

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Gauss–Legendre 8-point rule on [a, b].
pub fn gl8(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL8_X.iter().zip(GL8_W).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

fn q0_rhs(p: &ProfileTable) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |r, y, d| {
        let rho = p.eval(r).0;
        d[0] = y[1];
        d[1] = -y[1] / r + y[0] / (r * r) - (1.0 - 3.0 * rho * rho) * y[0];
    }
}

pub fn kernel_solutions(profile: &VortexProfile) -> Result<KernelSolutions, ProfileError> {
    let nodes = &profile.grid.nodes;
    let n = nodes.len();
    let t = &profile.table;
    // P0 = ρ ∫_1^r ds / (s ρ²)
    let inv = |s: f64| {
        let p = t.eval(s).0;
        1.0 / (s * p * p)
    };
    // accumulate away from r = 1 so the large values near the origin do not
    // swamp the small ones
    let k1 = profile.grid.nearest(1.0);
    let mut cum = vec![0.0; n];
    cum[k1] = gl8(1.0, nodes[k1], inv);
    for j in k1 + 1..n {
        cum[j] = cum[j - 1] + gl8(nodes[j - 1], nodes[j], inv);
    }
    for j in (0..k1).rev() {
        cum[j] = cum[j + 1] - gl8(nodes[j], nodes[j + 1], inv);
    }
    let p0: Vec<f64> = (0..n).map(|j| profile.rho[j] * cum[j]).collect();
    if !p0.iter().all(|v| v.is_finite()) {
        return Err(ProfileError::Quadrature("P0 integral not finite".into()));
    }

    // Q0: Frobenius seed r − r³/8 + ((3a² + 1/8)/24) r⁵, outward integration
    let a = profile.slope_a;
    let q5 = (3.0 * a * a + 0.125) / 24.0;
    let r0 = nodes[0];
    let mut y = [r0 - r0.powi(3) / 8.0 + q5 * r0.powi(5), 1.0 - 3.0 * r0 * r0 / 8.0 + 5.0 * q5 * r0.powi(4)];
    let solver = Dop853::new(1e-13, 1e-300);
    let rhs = q0_rhs(t);
    let mut q0 = vec![y[0]; n];
    let mut dq0 = vec![y[1]; n];
    let mut hs = 0.0;
    for j in 1..n {
        solver.integrate(&rhs, nodes[j - 1], &mut y, nodes[j], &mut hs, |_, _| false)?;
        q0[j] = y[0];
        dq0[j] = y[1];
    }

    // Q̃0 = Q0 ∫_r^∞ ds/(s Q0²): quadrature with Hermite-interpolated Q0,
    // plus the tail of C1 e^{√2 s}/√s beyond r_max
    let q_at = |j: usize, s: f64| {
        let d2 = |r: f64, q: f64, dq: f64| {
            let rho = t.eval(r).0;
            -dq / r + q / (r * r) - (1.0 - 3.0 * rho * rho) * q
        };
        let (x0, x1) = (nodes[j], nodes[j + 1]);
        quintic_hermite(
            x0,
            x1,
            [q0[j], dq0[j], d2(x0, q0[j], dq0[j])],
            [q0[j + 1], dq0[j + 1], d2(x1, q0[j + 1], dq0[j + 1])],
            s,
        )
        .0
    };
    let rmax = nodes[n - 1];
    let tail = 1.0 / (2.0 * std::f64::consts::SQRT_2 * rmax * q0[n - 1] * q0[n - 1]);
    let mut g = vec![0.0; n];
    g[n - 1] = tail;
    for j in (0..n - 1).rev() {
        g[j] = g[j + 1] + gl8(nodes[j], nodes[j + 1], |s| {
            let q = q_at(j, s);
            1.0 / (s * q * q)
        });
    }
    let q0_tilde: Vec<f64> = (0..n).map(|j| q0[j] * g[j]).collect();
    if !q0_tilde.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(ProfileError::Quadrature("Q̃0 not positive/finite".into()));
    }
    Ok(KernelSolutions { p0, q0, q0_tilde, dq0 })
}
