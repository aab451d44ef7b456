//! Bessel-type special functions of orders 0 and 1, the Hankel function H^(1),
//! and the imaginary-order pair solving `f'' + f'/x - f + f/x^2 = 0`.
//!
//! Ordinary orders use a power series below `x_switch` and the Hankel-type
//! asymptotic expansion above it. The J/Y series are summed in double-double
//! arithmetic so that the cancellation between large alternating terms does
//! not cost accuracy. K between 2 and `x_switch` uses the trapezoid rule on
//! `K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::rk::Dop853;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Default switch point between series and asymptotic evaluation.
pub const X_SWITCH: f64 = 25.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("argument {x} outside the domain of {kind:?}")]
    Domain { kind: BesselKind, x: f64 },
    #[error("{kind:?} overflows at x = {x}")]
    Overflow { kind: BesselKind, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Family {
    J,
    Y,
    I,
    K,
    IImag,
    KImag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BesselKind {
    pub family: Family,
    /// 0 or 1; ignored for the imaginary-order pair.
    pub order: u8,
}

impl BesselKind {
    pub const J0: Self = Self { family: Family::J, order: 0 };
    pub const J1: Self = Self { family: Family::J, order: 1 };
    pub const Y0: Self = Self { family: Family::Y, order: 0 };
    pub const Y1: Self = Self { family: Family::Y, order: 1 };
    pub const I0: Self = Self { family: Family::I, order: 0 };
    pub const I1: Self = Self { family: Family::I, order: 1 };
    pub const K0: Self = Self { family: Family::K, order: 0 };
    pub const K1: Self = Self { family: Family::K, order: 1 };
    pub const I_IMAG: Self = Self { family: Family::IImag, order: 0 };
    pub const K_IMAG: Self = Self { family: Family::KImag, order: 0 };
}

/// Evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BesselConfig {
    pub x_switch: f64,
}

impl Default for BesselConfig {
    fn default() -> Self {
        Self { x_switch: X_SWITCH }
    }
}

/// Value of the function `kind` at `x` with default settings.
pub fn bessel(kind: BesselKind, x: f64) -> Result<f64, SpecialError> {
    bessel_with(kind, x, &BesselConfig::default()).map(|(f, _)| f)
}

/// Derivative of `kind` at `x`, from the standard recurrences.
pub fn bessel_deriv(kind: BesselKind, x: f64) -> Result<f64, SpecialError> {
    bessel_with(kind, x, &BesselConfig::default()).map(|(_, d)| d)
}

/// Value and derivative.
pub fn bessel_with(kind: BesselKind, x: f64, cfg: &BesselConfig) -> Result<(f64, f64), SpecialError> {
    let dom = || SpecialError::Domain { kind, x };
    if !x.is_finite() {
        return Err(dom());
    }
    let xs = cfg.x_switch;
    match kind.family {
        Family::J => {
            if x < 0.0 {
                return Err(dom());
            }
            if x == 0.0 {
                return Ok(if kind.order == 0 { (1.0, 0.0) } else { (0.0, 0.5) });
            }
            let (j0, j1) = if x <= xs { jy_series(x).0 } else { jy_asymptotic(x).0 };
            Ok(pick_jy(kind.order, x, j0, j1))
        }
        Family::Y => {
            if x <= 0.0 {
                return Err(dom());
            }
            let (y0, y1) = if x <= xs { jy_series(x).1 } else { jy_asymptotic(x).1 };
            Ok(pick_jy(kind.order, x, y0, y1))
        }
        Family::I => {
            if x <= 0.0 {
                return Err(dom());
            }
            if x > 700.0 {
                return Err(SpecialError::Overflow { kind, x });
            }
            let (i0, i1) = if x <= xs { i_series(x) } else { i_asymptotic(x) };
            Ok(if kind.order == 0 { (i0, i1) } else { (i1, i0 - i1 / x) })
        }
        Family::K => {
            if x <= 0.0 {
                return Err(dom());
            }
            let (k0, k1) = if x <= 2.0 {
                k_series(x)
            } else if x <= xs {
                k_integral(x)
            } else {
                k_asymptotic(x)
            };
            Ok(if kind.order == 0 { (k0, -k1) } else { (k1, -k0 - k1 / x) })
        }
        Family::IImag | Family::KImag => {
            let t = imag_table();
            if x < t.r_star {
                return Err(dom());
            }
            if kind.family == Family::IImag && x > 700.0 {
                return Err(SpecialError::Overflow { kind, x });
            }
            Ok(t.eval(kind.family == Family::KImag, x))
        }
    }
}

fn pick_jy(order: u8, x: f64, f0: f64, f1: f64) -> (f64, f64) {
    if order == 0 {
        (f0, -f1)
    } else {
        (f1, f0 - f1 / x)
    }
}

/// H^(1)_n(x) = J_n(x) + i Y_n(x).
pub fn hankel1(order: u8, x: f64) -> Result<Complex64, SpecialError> {
    let kind = BesselKind { family: Family::Y, order };
    if x <= 0.0 || !x.is_finite() {
        return Err(SpecialError::Domain { kind, x });
    }
    let j = bessel(BesselKind { family: Family::J, order }, x)?;
    let y = bessel(kind, x)?;
    Ok(Complex64::new(j, y))
}

/// The positivity threshold of the imaginary-order pair: both functions are
/// positive on `(r_star, inf)`.
pub fn r_star() -> f64 {
    imag_table().r_star
}

// ---------------------------------------------------------------------------
// double-double helpers

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        quick_two_sum(p, e)
    }
    fn div_f(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let pe = q1.mul_add(d, -p);
        let (s, e) = two_sum(self.hi, -p);
        let q2 = (s + (e - pe + self.lo)) / d;
        quick_two_sum(q1, q2)
    }
    fn val(self) -> f64 {
        self.hi + self.lo
    }
}

// ---------------------------------------------------------------------------
// series

/// ((J0, J1), (Y0, Y1)) by power series.
fn jy_series(x: f64) -> ((f64, f64), (f64, f64)) {
    let x2 = Dd::from(x).mul(Dd::from(x));
    let q = x2.div_f(4.0);
    // J0 and Y0 sums
    let mut t0 = Dd::from(1.0);
    let mut s_j0 = Dd::from(1.0);
    let mut s_y0 = Dd::from(0.0);
    // J1 and Y1 sums, t1_k = (-q)^k / (k!(k+1)!)
    let mut t1 = Dd::from(1.0);
    let mut s_j1 = Dd::from(1.0);
    let mut h = Dd::from(0.0);
    let mut s_y1 = Dd::from(1.0); // (H_0 + H_1) t1_0
    let mut k = 1.0f64;
    loop {
        t0 = t0.mul(q).div_f(k * k).neg();
        t1 = t1.mul(q).div_f(k * (k + 1.0)).neg();
        h = h.add(Dd::from(1.0).div_f(k));
        let h_next = h.add(Dd::from(1.0).div_f(k + 1.0));
        s_j0 = s_j0.add(t0);
        s_y0 = s_y0.add(h.mul(t0).neg());
        s_j1 = s_j1.add(t1);
        s_y1 = s_y1.add(h.add(h_next).mul(t1));
        if (t0.hi.abs() < 1e-34 && t1.hi.abs() < 1e-34 && k > q.hi) || k > 400.0 {
            break;
        }
        k += 1.0;
    }
    let j0 = s_j0.val();
    let j1 = 0.5 * x * s_j1.val();
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let y0 = 2.0 / PI * (lg * j0 + s_y0.val());
    let y1 = 2.0 / PI * lg * j1 - 2.0 / (PI * x) - 0.5 * x / PI * s_y1.val();
    ((j0, j1), (y0, y1))
}

fn i_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 1.0);
    let (mut s0, mut s1) = (1.0, 1.0);
    let mut k = 1.0;
    while k < 500.0 {
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < 1e-18 * s0 && t1 < 1e-18 * s1 {
            break;
        }
        k += 1.0;
    }
    (s0, 0.5 * x * s1)
}

fn k_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (i0, i1) = i_series(x);
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let (mut t0, mut t1) = (1.0, 1.0);
    let mut h = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 1.0; // (H_0 + H_1) t1_0
    let mut k = 1.0;
    while k < 200.0 {
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        h += 1.0 / k;
        s0 += h * t0;
        s1 += (2.0 * h + 1.0 / (k + 1.0)) * t1;
        if t0 < 1e-18 && t1 < 1e-18 {
            break;
        }
        k += 1.0;
    }
    (-lg * i0 + s0, 1.0 / x + lg * i1 - 0.25 * x * s1)
}

fn k_integral(x: f64) -> (f64, f64) {
    // trapezoid on exp(-x (cosh t - 1)) cosh(n t); analytic in a strip so the
    // error is exp(-pi^2 / h)
    let h = 0.1;
    let mut s0 = 0.5;
    let mut s1 = 0.5;
    let mut j = 1.0;
    loop {
        let t: f64 = j * h;
        let g = (-x * (t.cosh() - 1.0)).exp();
        s0 += g;
        s1 += g * t.cosh();
        if g * t.cosh() < 1e-19 {
            break;
        }
        j += 1.0;
    }
    let sc = (-x).exp() * h;
    (s0 * sc, s1 * sc)
}

// ---------------------------------------------------------------------------
// asymptotic expansions

/// Terms a_k(mu) / x^k of the Hankel expansion, truncated at the smallest term.
pub(crate) fn hankel_terms(mu: f64, x: f64) -> Vec<f64> {
    let mut terms = vec![1.0];
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let m = 2.0 * kf - 1.0;
        a *= (mu - m * m) / (8.0 * kf * x);
        if a == 0.0 {
            break;
        }
        if a.abs() >= prev {
            break;
        }
        prev = a.abs();
        terms.push(a);
        if a.abs() < 1e-18 {
            break;
        }
    }
    terms
}

fn pq(order: u8, x: f64) -> (f64, f64) {
    let mu = if order == 0 { 0.0 } else { 4.0 };
    let terms = hankel_terms(mu, x);
    let (mut p, mut q) = (0.0, 0.0);
    for (k, t) in terms.iter().enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * t;
        } else {
            q += sign * t;
        }
    }
    (p, q)
}

fn jy_asymptotic(x: f64) -> ((f64, f64), (f64, f64)) {
    let amp = (2.0 / (PI * x)).sqrt();
    let mut j = [0.0; 2];
    let mut y = [0.0; 2];
    for n in 0..2u8 {
        let (p, q) = pq(n, x);
        let chi = x - (0.5 * n as f64 + 0.25) * PI;
        let (s, c) = chi.sin_cos();
        j[n as usize] = amp * (p * c - q * s);
        y[n as usize] = amp * (p * s + q * c);
    }
    ((j[0], j[1]), (y[0], y[1]))
}

fn i_asymptotic(x: f64) -> (f64, f64) {
    let pre = x.exp() / (2.0 * PI * x).sqrt();
    let f = |mu: f64| {
        hankel_terms(mu, x)
            .iter()
            .enumerate()
            .map(|(k, t)| if k % 2 == 0 { *t } else { -*t })
            .sum::<f64>()
    };
    (pre * f(0.0), pre * f(4.0))
}

fn k_asymptotic(x: f64) -> (f64, f64) {
    let pre = (FRAC_PI_2 / x).sqrt() * (-x).exp();
    let f = |mu: f64| hankel_terms(mu, x).iter().sum::<f64>();
    (pre * f(0.0), pre * f(4.0))
}

/// Decaying solution of `f'' + f'/x - f - (mu/4) f / x^2 = 0` with the leading
/// exponential removed: returns (g, g') with f = exp(-x) g.
pub(crate) fn k_type_scaled(mu: f64, x: f64) -> (f64, f64) {
    let terms = hankel_terms(mu, x);
    let pre = (FRAC_PI_2 / x).sqrt();
    let mut g = 0.0;
    let mut dg = 0.0;
    for (k, t) in terms.iter().enumerate() {
        // d/dx [x^{-1/2-k}] = -(k + 1/2) x^{-3/2-k}
        g += t;
        dg -= (k as f64 + 0.5) * t / x;
    }
    (pre * g, pre * dg)
}

/// Outgoing oscillatory solution of `f'' + f'/x + f - (mu/4) f / x^2 = 0`,
/// normalized like H^(1)_1: sqrt(2/(pi x)) exp(i(x - 3pi/4)) (1 + O(1/x)).
/// Returns (f, f').
pub(crate) fn hankel_type(mu: f64, x: f64) -> (Complex64, Complex64) {
    let terms = hankel_terms(mu, x);
    let mut s = Complex64::new(0.0, 0.0);
    let mut ds = Complex64::new(0.0, 0.0);
    let mut ik = Complex64::new(1.0, 0.0);
    for (k, t) in terms.iter().enumerate() {
        let c = ik * *t;
        s += c;
        // derivative of x^{-1/2-k} e^{ix}: e^{ix} x^{-1/2-k} (i - (k+1/2)/x)
        ds += c * Complex64::new(-(k as f64 + 0.5) / x, 1.0);
        ik *= Complex64::i();
    }
    let ph = Complex64::from_polar((2.0 / (PI * x)).sqrt(), x - 3.0 * FRAC_PI_4);
    (ph * s, ph * ds)
}

// ---------------------------------------------------------------------------
// imaginary-order pair

const IMAG_SEED_X: f64 = 60.0;
const IMAG_ANCHOR_X: f64 = 0.01;
const IMAG_LOW_X: f64 = 1e-3;

struct ImagTable {
    x: Vec<f64>,
    k: Vec<[f64; 2]>,
    i: Vec<[f64; 2]>,
    /// amplitude of I against exp(x)/sqrt(2 pi x) times the series, at the top
    i_amp: f64,
    r_star: f64,
}

fn imag_rhs(x: f64, y: &[f64], d: &mut [f64]) {
    d[0] = y[1];
    d[1] = -y[1] / x + y[0] - y[0] / (x * x);
}

fn imag_table() -> &'static ImagTable {
    static T: OnceLock<ImagTable> = OnceLock::new();
    T.get_or_init(build_imag_table)
}

fn imag_nodes() -> Vec<f64> {
    let mut x = vec![IMAG_LOW_X];
    while *x.last().unwrap() < 1.0 {
        let v = x.last().unwrap() * 1.004;
        x.push(v.min(1.0));
    }
    let n = ((IMAG_SEED_X - 1.0) / 0.005).round() as usize;
    for j in 1..=n {
        x.push(1.0 + (IMAG_SEED_X - 1.0) * j as f64 / n as f64);
    }
    x
}

fn march(nodes: &[f64], from: usize, to: usize, y0: [f64; 2], out: &mut [[f64; 2]]) {
    let solver = Dop853::new(1e-14, 1e-300);
    let mut y = y0;
    out[from] = y;
    let mut h = 0.0;
    let step: isize = if to > from { 1 } else { -1 };
    let mut j = from as isize;
    while j != to as isize {
        let nj = j + step;
        solver
            .integrate(&imag_rhs, nodes[j as usize], &mut y, nodes[nj as usize], &mut h, |_, _| false)
            .expect("imaginary-order integration");
        out[nj as usize] = y;
        j = nj;
    }
}

fn build_imag_table() -> ImagTable {
    let x = imag_nodes();
    let n = x.len();
    let top = n - 1;
    // K: decaying seed, integrated inward (stable direction)
    let (g, dg) = k_type_scaled(-4.0, IMAG_SEED_X);
    let e = (-IMAG_SEED_X).exp();
    let mut k = vec![[0.0; 2]; n];
    march(&x, top, 0, [e * g, e * (dg - g)], &mut k);
    // I: complement of K at an anchor deep in the oscillatory region, in the
    // log variable, normalized by x (I K' - I' K) = -1
    let a = x.iter().position(|&v| v >= IMAG_ANCHOR_X).unwrap();
    let [ka, dka] = k[a];
    let xa = x[a];
    let c = 1.0 / (ka * ka + xa * xa * dka * dka);
    let seed = [-xa * dka * c, ka * c / xa];
    let mut i = vec![[0.0; 2]; n];
    march(&x, a, top, seed, &mut i);
    march(&x, a, 0, seed, &mut i);
    let series = |xx: f64| {
        hankel_terms(-4.0, xx)
            .iter()
            .enumerate()
            .map(|(k, t)| if k % 2 == 0 { *t } else { -*t })
            .sum::<f64>()
            * xx.exp()
            / (2.0 * PI * xx).sqrt()
    };
    let i_amp = i[top][0] / series(x[top]);
    let mut t = ImagTable { x, k, i, i_amp, r_star: 0.0 };
    // last sign change of either function, refined by bisection
    let j = (0..top).rev().find(|&j| t.k[j][0] <= 0.0 || t.i[j][0] <= 0.0).expect("pair oscillates near 0");
    let low = |t: &ImagTable, v: f64| t.eval(true, v).0.min(t.eval(false, v).0);
    let (mut lo, mut hi) = (t.x[j], t.x[j + 1]);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if low(&t, mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t.r_star = hi;
    t
}

impl ImagTable {
    fn eval(&self, is_k: bool, x: f64) -> (f64, f64) {
        let top = *self.x.last().unwrap();
        if x >= top {
            if is_k {
                let (g, dg) = k_type_scaled(-4.0, x);
                let e = (-x).exp();
                return (e * g, e * (dg - g));
            }
            let terms = hankel_terms(-4.0, x);
            let (mut s, mut ds) = (0.0, 0.0);
            for (k, t) in terms.iter().enumerate() {
                let t = if k % 2 == 0 { *t } else { -*t };
                s += t;
                ds -= (k as f64 + 0.5) * t / x;
            }
            let pre = self.i_amp * x.exp() / (2.0 * PI * x).sqrt();
            return (pre * s, pre * (s + ds));
        }
        let tab = if is_k { &self.k } else { &self.i };
        let j = match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(j) => return (tab[j][0], tab[j][1]),
            Err(j) => j - 1,
        };
        let (x0, x1) = (self.x[j], self.x[j + 1]);
        let d2 = |xx: f64, y: [f64; 2]| -y[1] / xx + y[0] - y[0] / (xx * xx);
        crate::interp::quintic_hermite(
            x0,
            x1,
            [tab[j][0], tab[j][1], d2(x0, tab[j])],
            [tab[j + 1][0], tab[j + 1][1], d2(x1, tab[j + 1])],
            x,
        )
    }
}
