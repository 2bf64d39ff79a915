//! Truncated power series over 256-bit binary floats.
//!
//! Only the handful of operations the coefficient routines need: products,
//! real powers and logarithms of series with a positive constant term.
//! Everything is `O(n^2)` on purpose; the series are at most a few hundred
//! terms long.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

/// Working precision in bits.
pub const PRECISION: usize = 256;

pub type Hp = FBig<HalfEven>;

pub fn hp(x: f64) -> Hp {
    Hp::try_from(x)
        .expect("finite f64")
        .with_precision(PRECISION)
        .value()
}

pub fn hp_int(n: i64) -> Hp {
    Hp::from(n).with_precision(PRECISION).value()
}

pub fn to_f64(x: &Hp) -> f64 {
    x.to_f64().value()
}

pub fn zero() -> Hp {
    hp_int(0)
}

/// Truncated product `a * b` up to and including degree `n`.
pub fn mul(a: &[Hp], b: &[Hp], n: usize) -> Vec<Hp> {
    (0..=n)
        .map(|k| {
            let mut acc = zero();
            for i in 0..=k {
                if i < a.len() && k - i < b.len() {
                    acc += &a[i] * &b[k - i];
                }
            }
            acc
        })
        .collect()
}

/// `F^beta` for a series with `F[0] > 0`, given `F[0]^beta` as `lead`.
///
/// Uses the J.C.P. Miller recurrence
/// `P_n = 1/(n F_0) Σ_{k=1}^{n} ((beta + 1) k - n) F_k P_{n-k}`.
pub fn pow(f: &[Hp], beta: f64, lead: Hp, n: usize) -> Vec<Hp> {
    let beta1 = hp(beta + 1.0);
    let mut p = Vec::with_capacity(n + 1);
    p.push(lead);
    for m in 1..=n {
        let mut acc = zero();
        for k in 1..=m.min(f.len() - 1) {
            let coef = &beta1 * hp_int(k as i64) - hp_int(m as i64);
            acc += coef * &f[k] * &p[m - k];
        }
        let denom = hp_int(m as i64) * &f[0];
        p.push(acc / denom);
    }
    p
}

/// `log F` for a series with `F[0] > 0`, given `log F[0]` as `lead`.
pub fn log(f: &[Hp], lead: Hp, n: usize) -> Vec<Hp> {
    let mut l = Vec::with_capacity(n + 1);
    l.push(lead);
    for m in 1..=n {
        let mut acc = hp_int(m as i64) * f.get(m).cloned().unwrap_or_else(zero);
        for k in 1..m {
            if m - k < f.len() {
                acc -= hp_int(k as i64) * &l[k] * &f[m - k];
            }
        }
        l.push(acc / (hp_int(m as i64) * &f[0]));
    }
    l
}

/// Coefficients of `(1 - s)^a` up to degree `n`.
pub fn one_minus_s_pow(a: f64, n: usize) -> Vec<Hp> {
    let f = vec![hp_int(1), hp_int(-1)];
    pow(&f, a, hp_int(1), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_series_matches_closed_form() {
        // (1 - s)^{1/2} = 1 - s/2 - s^2/8 - s^3/16 - 5 s^4/128
        let c = one_minus_s_pow(0.5, 4);
        let expect = [1.0, -0.5, -0.125, -0.0625, -5.0 / 128.0];
        for (x, e) in c.iter().zip(expect) {
            assert!((to_f64(x) - e).abs() < 1e-300_f64.max(1e-17));
        }
    }

    #[test]
    fn log_of_geometric_series() {
        // log(1/(1-s)) = Σ s^k / k
        let f: Vec<Hp> = (0..8).map(|_| hp_int(1)).collect();
        let l = log(&f, zero(), 7);
        for (k, lk) in l.iter().enumerate().skip(1) {
            assert!((to_f64(lk) - 1.0 / k as f64).abs() < 1e-16);
        }
    }

    #[test]
    fn product_with_inverse_is_one() {
        let f = vec![hp(2.0), hp(1.0), hp(-3.0), hp(0.25)];
        let inv = pow(&f, -1.0, hp(0.5), 10);
        let prod = mul(&f, &inv, 10);
        assert!((to_f64(&prod[0]) - 1.0).abs() < 1e-30);
        for p in &prod[1..] {
            assert!(to_f64(p).abs() < 1e-60);
        }
    }
}
