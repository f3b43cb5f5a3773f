//! Double-double reference arithmetic (about 31 significant digits) and the
//! Bessel power series evaluated in it. Shared by the integration tests.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn from(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Decimal literal such as `"3.1415926535897932384626433832795"`.
    pub fn parse(s: &str) -> DD {
        let (neg, digits) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let mut acc = DD::ZERO;
        let mut frac = 0u32;
        let mut seen_dot = false;
        for c in digits.chars() {
            if c == '.' {
                seen_dot = true;
                continue;
            }
            let d = c.to_digit(10).expect("decimal digit") as f64;
            acc = acc * DD::from(10.0) + DD::from(d);
            if seen_dot {
                frac += 1;
            }
        }
        for _ in 0..frac {
            acc = acc / DD::from(10.0);
        }
        if neg {
            -acc
        } else {
            acc
        }
    }

    pub fn powi(self, n: u32) -> DD {
        let mut r = DD::ONE;
        for _ in 0..n {
            r = r * self;
        }
        r
    }

    pub fn exp(self) -> DD {
        let ln2 = ln2();
        let m = (self.to_f64() / std::f64::consts::LN_2).round();
        let r = (self - ln2 * DD::from(m)) / DD::from(1024.0);
        let mut term = DD::ONE;
        let mut sum = DD::ONE;
        for i in 1..30 {
            term = term * r / DD::from(i as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum * DD::from(2f64.powi(m as i32))
    }

    /// Natural logarithm by Newton iteration on `exp`.
    pub fn ln(self) -> DD {
        assert!(self.hi > 0.0);
        let mut y = DD::from(self.hi.ln());
        for _ in 0..3 {
            y = y + self * (-y).exp() - DD::ONE;
        }
        y
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from(q3)
    }
}

pub fn pi() -> DD {
    DD::parse("3.14159265358979323846264338327950288")
}

pub fn ln2() -> DD {
    DD::parse("0.693147180559945309417232121458176568")
}

pub fn euler_gamma() -> DD {
    DD::parse("0.577215664901532860606512090082402431")
}

/// `J_n(x) = Σ_k (−1)^k (x/2)^{2k+n} / (k! (k+n)!)`.
pub fn dd_bessel_j(n: u32, x: f64) -> DD {
    let h = DD::from(x) / DD::from(2.0);
    let h2 = h * h;
    let mut term = h.powi(n);
    for i in 1..=n {
        term = term / DD::from(i as f64);
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term = -(term * h2) / DD::from(k * (k + n as f64));
        sum = sum + term;
        if term.abs().hi < 1e-36 * sum.abs().hi.max(1e-300) && k > h.hi {
            break;
        }
        k += 1.0;
        assert!(k < 2000.0);
    }
    sum
}

/// `Y_0(x) = (2/π)[(ln(x/2) + γ) J_0(x) + Σ_{k≥1} (−1)^{k+1} H_k (x²/4)^k / (k!)²]`.
pub fn dd_bessel_y0(x: f64) -> DD {
    let h = DD::from(x) / DD::from(2.0);
    let h2 = h * h;
    let mut term = DD::ONE;
    let mut harmonic = DD::ZERO;
    let mut sum = DD::ZERO;
    let mut k = 1.0;
    loop {
        term = -(term * h2) / DD::from(k * k);
        harmonic = harmonic + DD::ONE / DD::from(k);
        let t = -(term * harmonic);
        sum = sum + t;
        if t.abs().hi < 1e-36 && k > h.hi {
            break;
        }
        k += 1.0;
    }
    let two_over_pi = DD::from(2.0) / pi();
    two_over_pi * ((h.ln() + euler_gamma()) * dd_bessel_j(0, x) + sum)
}

/// `Y_1(x) = (2/π) ln(x/2) J_1 − 2/(πx) − (1/π) Σ_k (−1)^k (ψ(k+1) + ψ(k+2)) (x/2)^{2k+1} / (k!(k+1)!)`.
pub fn dd_bessel_y1(x: f64) -> DD {
    let h = DD::from(x) / DD::from(2.0);
    let h2 = h * h;
    let gamma = euler_gamma();
    // ψ(k+1) = H_k − γ
    let mut hk = DD::ZERO;
    let mut hk1 = DD::ONE;
    let mut term = h;
    let mut sum = (hk - gamma + hk1 - gamma) * term;
    let mut k = 1.0;
    loop {
        term = -(term * h2) / DD::from(k * (k + 1.0));
        hk = hk + DD::ONE / DD::from(k);
        hk1 = hk1 + DD::ONE / DD::from(k + 1.0);
        let t = (hk - gamma + hk1 - gamma) * term;
        sum = sum + t;
        if t.abs().hi < 1e-36 && k > h.hi {
            break;
        }
        k += 1.0;
    }
    let p = pi();
    DD::from(2.0) / p * h.ln() * dd_bessel_j(1, x) - DD::from(2.0) / (p * DD::from(x)) - sum / p
}

/// First positive zero of `J_0`, bisected on the double-double series.
pub fn dd_j0_first_zero() -> DD {
    let mut lo = DD::from(2.0);
    let mut hi = DD::from(3.0);
    for _ in 0..110 {
        let mid = (lo + hi) / DD::from(2.0);
        if dd_bessel_j(0, mid.hi).hi > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).hi < 1e-17 {
            break;
        }
    }
    (lo + hi) / DD::from(2.0)
}

/// Relative-or-absolute error, `|a − b| / max(1, |b|)`.
pub fn scaled_error(a: f64, b: DD) -> f64 {
    (DD::from(a) - b).abs().to_f64() / b.abs().to_f64().max(1.0)
}

pub mod suite;
pub mod fixtures;
