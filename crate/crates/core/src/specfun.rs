//! Real-argument cylinder functions and the two-dimensional Helmholtz
//! Green's function.
//!
//! Integer-order `J_n` is evaluated by regime:
//!
//! * `x <= 2`: ascending power series (no cancellation on this interval),
//! * `x >= 30` and `x >= n^2`: Hankel asymptotic expansion,
//! * otherwise: Miller backward recurrence normalized with
//!   `J_0 + 2 sum J_2k = 1`.
//!
//! Values whose magnitude falls below `1e-300` are flushed to exactly zero,
//! so a series truncation can rely on `== 0.0` as its negligibility test.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex field value. `norm()` goes through `hypot`, so moduli of
/// components up to `1e150` do not overflow.
pub type ComplexScalar = Complex64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Magnitudes below this are returned as exact zero.
pub const UNDERFLOW: f64 = 1e-300;

/// Minimum separation accepted by [`green`].
pub const SINGULAR_DISTANCE: f64 = 1e-12;

/// Default lower bound on `k * radius` for [`far_field_green`].
pub const DEFAULT_FAR_FIELD_LIMIT: f64 = 20.0;

const SERIES_MAX_X: f64 = 2.0;
const ASYMPTOTIC_MIN_X: f64 = 30.0;
const MILLER_MAX_X: f64 = 1.0e5;
const RESCALE: f64 = 1.0e250;

/// A point of the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// `radius * (cos angle, sin angle)`.
    pub fn polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(radius * c, radius * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[inline]
fn flush(v: f64) -> f64 {
    if v.abs() < UNDERFLOW {
        0.0
    } else {
        v
    }
}

fn ln_factorial(n: u32) -> f64 {
    if n < 32 {
        (2..=n).map(|j| (j as f64).ln()).sum()
    } else {
        let n = n as f64;
        n * n.ln() - n + 0.5 * (2.0 * PI * n).ln() + 1.0 / (12.0 * n) - 1.0 / (360.0 * n.powi(3))
    }
}

/// `|J_n(x)| <= (x/2)^n / n!` for `x >= 0`; true when that bound is already
/// below the underflow threshold.
fn certainly_underflows(order: u32, x: f64) -> bool {
    if order == 0 {
        return false;
    }
    let ln_bound = order as f64 * (0.5 * x).ln() - ln_factorial(order);
    ln_bound < UNDERFLOW.ln() - 1.0
}

/// Highest order whose value can exceed the underflow threshold at `x`.
fn last_live_order(x: f64, cap: u32) -> u32 {
    if !certainly_underflows(cap, x) {
        return cap;
    }
    // The bound is >= 1 at n = floor(x/2) and decreases beyond it.
    let mut lo = ((0.5 * x).floor() as u32).min(cap);
    let mut hi = cap;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if certainly_underflows(mid, x) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

fn power_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for j in 1..=order {
        lead *= half / j as f64;
    }
    let q = half * half;
    let n = order as f64;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + n));
        sum += term;
        if term.abs() <= 1e-18 * lead.abs() {
            break;
        }
    }
    sum
}

/// Hankel's large-argument expansion; returns `(J_nu(x), Y_nu(x))`.
fn hankel_asymptotic(order: u32, x: f64) -> (f64, f64) {
    let nu = order as f64;
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0_f64;
    let mut k = 1u32;
    loop {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() > a.abs() || next == 0.0 {
            break;
        }
        a = next;
        // a_k carries sign (-1)^floor(k/2) in P (even k) and Q (odd k).
        let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        if k.is_multiple_of(2) {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
        k += 1;
        if k > 200 {
            break;
        }
    }
    // chi = x - (nu/2 + 1/4) pi, with nu reduced mod 4 to keep the phase exact.
    let phase = ((order % 4) as f64 * 0.5 + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

/// Miller backward recurrence for `J_0..=J_max_order` at `x > 0`.
fn miller_sequence(max_order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    let live = last_live_order(x, max_order as u32) as usize;
    let reach = (live as f64).max(x);
    let mut start = (reach + 20.0 + 15.0 * reach.cbrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1.0;
    let mut norm = 0.0;
    // Highest stored index that may still be nonzero after rescaling.
    let mut top = live;
    for m in (1..=start).rev() {
        if m <= live {
            out[m] = current;
        }
        if m % 2 == 0 {
            norm += 2.0 * current;
        }
        let below = (m as f64 * two_over_x) * current - above;
        above = current;
        current = below;
        if current.abs() > RESCALE {
            let s = 1.0 / RESCALE;
            current *= s;
            above *= s;
            norm *= s;
            if m <= live {
                for v in &mut out[m..=top] {
                    *v *= s;
                }
                while top > m && out[top] == 0.0 {
                    top -= 1;
                }
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in &mut out[..=live] {
        *v = flush(*v / norm);
    }
    out
}

/// Bessel function of the first kind, integer order, real argument.
///
/// Negative arguments use `J_n(-x) = (-1)^n J_n(x)`.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        let v = bessel_j(order, -x);
        return if order % 2 == 1 { -v } else { v };
    }
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if x.is_infinite() || certainly_underflows(order, x) {
        return 0.0;
    }
    let n = order as f64;
    let v = if x <= SERIES_MAX_X {
        power_series(order, x)
    } else if x >= ASYMPTOTIC_MIN_X && x >= n * n {
        hankel_asymptotic(order, x).0
    } else {
        miller_sequence(order as usize, x)[order as usize]
    };
    flush(v)
}

/// `J_0(x), ..., J_max_order(x)` from a single backward recurrence.
pub fn bessel_j_sequence(max_order: u32, x: f64) -> Vec<f64> {
    let len = max_order as usize + 1;
    if x.is_nan() {
        return vec![f64::NAN; len];
    }
    if x < 0.0 {
        let mut v = bessel_j_sequence(max_order, -x);
        for (n, value) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *value = -*value;
            }
        }
        return v;
    }
    if x == 0.0 {
        let mut v = vec![0.0; len];
        v[0] = 1.0;
        return v;
    }
    if x <= MILLER_MAX_X {
        miller_sequence(max_order as usize, x)
    } else {
        (0..=max_order).map(|n| bessel_j(n, x)).collect()
    }
}

fn neumann_y01(x: f64) -> (f64, f64) {
    let order = (x + 20.0 + 15.0 * x.cbrt()).ceil() as u32 | 1;
    let j = bessel_j_sequence(order + 1, x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1usize;
    while 2 * k < order as usize {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / (2 * k) as f64;
        k += 1;
    }
    let y0 = (2.0 / PI) * (log_term * j[0] - 2.0 * s0);
    let y1 = -(2.0 / PI) * (j[0] / x - log_term * j[1]) + (4.0 / PI) * s1;
    (y0, y1)
}

fn positive_domain(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            expected: "x > 0",
        })
    }
}

/// Bessel function of the second kind of order zero.
pub fn bessel_y0(x: f64) -> Result<f64> {
    positive_domain("bessel_y0", x)?;
    if x >= ASYMPTOTIC_MIN_X {
        Ok(hankel_asymptotic(0, x).1)
    } else {
        Ok(neumann_y01(x).0)
    }
}

/// Bessel function of the second kind of order one.
pub fn bessel_y1(x: f64) -> Result<f64> {
    positive_domain("bessel_y1", x)?;
    if x >= ASYMPTOTIC_MIN_X {
        Ok(hankel_asymptotic(1, x).1)
    } else {
        Ok(neumann_y01(x).1)
    }
}

/// `H_0^(1)(x) = J_0(x) + i Y_0(x)`.
pub fn hankel1_0(x: f64) -> Result<ComplexScalar> {
    positive_domain("hankel1_0", x)?;
    Ok(ComplexScalar::new(bessel_j(0, x), bessel_y0(x)?))
}

/// Outgoing fundamental solution `-(i/4) H_0^(1)(k |a - b|)`.
pub fn green(k: f64, a: Point2, b: Point2) -> Result<ComplexScalar> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain {
            function: "green",
            value: k,
            expected: "k > 0",
        });
    }
    let distance = a.distance(b);
    if !(distance >= SINGULAR_DISTANCE) {
        return Err(Error::Singularity {
            distance,
            minimum: SINGULAR_DISTANCE,
        });
    }
    Ok(ComplexScalar::new(0.0, -0.25) * hankel1_0(k * distance)?)
}

/// Far-field form of `G(radius * theta_hat, x)` with the default gate
/// `k * radius >= 20`.
pub fn far_field_green(k: f64, radius: f64, angle: f64, x: Point2) -> Result<ComplexScalar> {
    far_field_green_with_limit(k, radius, angle, x, DEFAULT_FAR_FIELD_LIMIT)
}

/// `-(1+i) e^{i k radius} / (4 sqrt(pi k radius)) * e^{-i k theta_hat . x}`,
/// rejected when `k * radius < min_k_radius`.
pub fn far_field_green_with_limit(
    k: f64,
    radius: f64,
    angle: f64,
    x: Point2,
    min_k_radius: f64,
) -> Result<ComplexScalar> {
    let k_radius = k * radius;
    if !(k_radius >= min_k_radius) {
        return Err(Error::precondition(format!(
            "far-field kernel needs k*radius >= {min_k_radius}, got {k_radius}"
        )));
    }
    let direction = Point2::polar(1.0, angle);
    Ok(far_field_prefactor(k_radius) * ComplexScalar::from_polar(1.0, -k * direction.dot(x)))
}

pub(crate) fn far_field_prefactor(k_radius: f64) -> ComplexScalar {
    -ComplexScalar::new(1.0, 1.0) * ComplexScalar::from_polar(1.0, k_radius)
        / (4.0 * (k_radius * PI).sqrt())
}
