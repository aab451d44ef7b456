//! Piecewise Hermite interpolation.

/// Quintic Hermite interpolation on `[x0, x1]` from (f, f', f'') at both ends.
/// Returns (f(x), f'(x)).
pub fn quintic_hermite(x0: f64, x1: f64, a: [f64; 3], b: [f64; 3], x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
    let d00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d01 = -d00;
    let d11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let f = h00 * a[0] + h10 * h * a[1] + h20 * h * h * a[2] + h01 * b[0] + h11 * h * b[1] + h21 * h * h * b[2];
    let df = (d00 * a[0] + d10 * h * a[1] + d20 * h * h * a[2] + d01 * b[0] + d11 * h * b[1] + d21 * h * h * b[2]) / h;
    (f, df)
}

/// Locate the interval `[xs[j], xs[j+1]]` holding `x` (clamped to the ends).
pub fn bracket(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    xs.partition_point(|&v| v <= x) - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + 0.25 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x + 1.25 * x.powi(4);
        let d2p = |x: f64| 3.0 * x + 5.0 * x.powi(3);
        let (a, b) = (0.3, 1.1);
        for k in 0..=10 {
            let x = a + (b - a) * k as f64 / 10.0;
            let (f, df) = quintic_hermite(a, b, [p(a), dp(a), d2p(a)], [p(b), dp(b), d2p(b)], x);
            assert!((f - p(x)).abs() < 1e-14);
            assert!((df - dp(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn bracket_finds_interval() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(bracket(&xs, 1.5), 1);
        assert_eq!(bracket(&xs, 1.0), 1);
        assert_eq!(bracket(&xs, 3.0), 2);
        assert_eq!(bracket(&xs, -1.0), 0);
    }
}
