//! Dormand–Prince 8(5,3) explicit Runge–Kutta integrator with Hairer's
//! step-size control, for small dense systems `y' = f(t, y)`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RkError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Per-call statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Dop853 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrate from `t0` to `t1` (either direction), landing exactly on `t1`.
    /// `h` carries the step-size guess in and the proposed next step out
    /// (0 requests an automatic initial guess). `on_step(t, y)` runs after
    /// every accepted step and may modify `y`; it must return `true` if it did.
    pub fn integrate<F, C>(
        &self,
        f: &F,
        t0: f64,
        y: &mut [f64],
        t1: f64,
        h: &mut f64,
        mut on_step: C,
    ) -> Result<RkStats, RkError>
    where
        F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
        C: FnMut(f64, &mut [f64]) -> bool,
    {
        let n = y.len();
        let mut stats = RkStats::default();
        if t1 == t0 {
            return Ok(stats);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 10];
        let mut ys = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut k11 = vec![0.0; n];
        let mut k12 = vec![0.0; n];
        let mut t = t0;
        f(t, y, &mut k[0]);

        let mut hh = h.abs();
        if hh == 0.0 || !hh.is_finite() {
            hh = self.initial_step(f, t, y, &k[0], dir, span);
        }
        hh = hh.min(self.h_max);
        let mut rejected_last = false;
        let (safe, facc1, facc2, expo1): (f64, f64, f64, f64) = (0.9, 1.0 / 0.333, 1.0 / 6.0, 1.0 / 8.0);

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(RkError::MaxSteps(self.max_steps));
            }
            let remaining = (t1 - t).abs();
            let last = hh >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { hh };
            if hs < 1e-15 * t.abs().max(1.0) && !last {
                return Err(RkError::StepUnderflow { t });
            }
            let hd = dir * hs;

            macro_rules! stage {
                ($dst:expr, $c:expr, [$(($coef:expr, $src:expr)),*]) => {{
                    for i in 0..n {
                        let mut acc = 0.0;
                        $( acc += $coef * $src[i]; )*
                        ys[i] = y[i] + hd * acc;
                    }
                    f(t + $c * hd, &ys, &mut $dst);
                }};
            }
            {
                let (k1, rest) = k.split_at_mut(1);
                let k1 = &k1[0];
                let (k2, rest) = rest.split_at_mut(1);
                let k2 = &mut k2[0];
                stage!(*k2, C2, [(A21, k1)]);
                let (k3, rest) = rest.split_at_mut(1);
                let k3 = &mut k3[0];
                stage!(*k3, C3, [(A31, k1), (A32, k2)]);
                let (k4, rest) = rest.split_at_mut(1);
                let k4 = &mut k4[0];
                stage!(*k4, C4, [(A41, k1), (A43, k3)]);
                let (k5, rest) = rest.split_at_mut(1);
                let k5 = &mut k5[0];
                stage!(*k5, C5, [(A51, k1), (A53, k3), (A54, k4)]);
                let (k6, rest) = rest.split_at_mut(1);
                let k6 = &mut k6[0];
                stage!(*k6, C6, [(A61, k1), (A64, k4), (A65, k5)]);
                let (k7, rest) = rest.split_at_mut(1);
                let k7 = &mut k7[0];
                stage!(*k7, C7, [(A71, k1), (A74, k4), (A75, k5), (A76, k6)]);
                let (k8, rest) = rest.split_at_mut(1);
                let k8 = &mut k8[0];
                stage!(*k8, C8, [(A81, k1), (A84, k4), (A85, k5), (A86, k6), (A87, k7)]);
                let (k9, rest) = rest.split_at_mut(1);
                let k9 = &mut k9[0];
                stage!(*k9, C9, [(A91, k1), (A94, k4), (A95, k5), (A96, k6), (A97, k7), (A98, k8)]);
                let k10 = &mut rest[0];
                stage!(
                    *k10,
                    C10,
                    [(A101, k1), (A104, k4), (A105, k5), (A106, k6), (A107, k7), (A108, k8), (A109, k9)]
                );
                stage!(
                    k11,
                    C11,
                    [(A111, k1), (A114, k4), (A115, k5), (A116, k6), (A117, k7), (A118, k8), (A119, k9), (A1110, k10)]
                );
                stage!(
                    k12,
                    1.0,
                    [
                        (A121, k1),
                        (A124, k4),
                        (A125, k5),
                        (A126, k6),
                        (A127, k7),
                        (A128, k8),
                        (A129, k9),
                        (A1210, k10),
                        (A1211, k11)
                    ]
                );
            }
            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..n {
                let bsum = B1 * k[0][i]
                    + B6 * k[5][i]
                    + B7 * k[6][i]
                    + B8 * k[7][i]
                    + B9 * k[8][i]
                    + B10 * k[9][i]
                    + B11 * k11[i]
                    + B12 * k12[i];
                ynew[i] = y[i] + hd * bsum;
                let sk = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                let e2 = bsum - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k12[i];
                err2 += (e2 / sk).powi(2);
                let e1 = ER1 * k[0][i]
                    + ER6 * k[5][i]
                    + ER7 * k[6][i]
                    + ER8 * k[7][i]
                    + ER9 * k[8][i]
                    + ER10 * k[9][i]
                    + ER11 * k11[i]
                    + ER12 * k12[i];
                err += (e1 / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = hs * err * (1.0 / (deno * n as f64)).sqrt();
            if !err.is_finite() {
                if hs < 1e-12 * span {
                    return Err(RkError::NonFinite { t });
                }
                hh = hs * 0.1;
                stats.rejected += 1;
                rejected_last = true;
                continue;
            }
            let fac11 = err.powf(expo1);
            let fac = facc2.max(facc1.min(fac11 / safe));
            let mut h_new = hs / fac;
            if err <= 1.0 {
                stats.accepted += 1;
                t = if last { t1 } else { t + hd };
                y.copy_from_slice(&ynew);
                let modified = on_step(t, y);
                if rejected_last {
                    h_new = h_new.min(hs);
                }
                rejected_last = false;
                if last {
                    *h = if hs < hh { hh.min(h_new.max(hh)) } else { h_new }.min(self.h_max);
                    return Ok(stats);
                }
                if modified {
                    f(t, y, &mut k[0]);
                } else {
                    f(t, y, &mut ys);
                    k[0].copy_from_slice(&ys);
                }
                hh = h_new.min(self.h_max);
            } else {
                h_new = hs / facc1.min(fac11 / safe);
                rejected_last = true;
                stats.rejected += 1;
                hh = h_new;
            }
        }
    }

    fn initial_step<F>(&self, f: &F, t: f64, y: &[f64], f0: &[f64], dir: f64, span: f64) -> f64
    where
        F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
    {
        let n = y.len();
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..n {
            let sk = self.atol + self.rtol * y[i].abs();
            dnf += (f0[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(span).min(self.h_max);
        let y1: Vec<f64> = (0..n).map(|i| y[i] + dir * h * f0[i]).collect();
        let mut f1 = vec![0.0; n];
        f(t + dir * h, &y1, &mut f1);
        let mut der2 = 0.0;
        for i in 0..n {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((f1[i] - f0[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
        (100.0 * h).min(h1).min(span).min(self.h_max)
    }
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
