//! Special-function checks as `(name, observed, tolerance)` triples, so the
//! same suite backs both the unit-style tests and the acceptance report.

use super::*;
use bifocus::specfun::{bessel_j, bessel_j_sequence, bessel_y0, bessel_y1, hankel1_0};

pub struct Check {
    pub name: &'static str,
    pub observed: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.observed <= self.tolerance
    }
}

/// Scaled error against the double-double series.
pub const ORACLE_TOL: f64 = 2e-15;
/// Published 15-digit constants, compared to the oracle.
pub const CONSTANT_TOL: f64 = 1e-15;
pub const IDENTITY_TOL: f64 = 1e-13;

fn sample_points() -> Vec<f64> {
    (1..=400).map(|i| i as f64 * 0.1).collect()
}

fn wide_points() -> Vec<f64> {
    let mut xs = sample_points();
    xs.extend([45.5, 63.0, 99.9, 140.0, 250.0, 1234.5, 1e4, 3.3e4]);
    xs
}

pub fn run() -> Vec<Check> {
    let mut out = Vec::new();

    let constants = [
        (dd_bessel_j(0, 1.0), 0.765197686557967),
        (dd_bessel_y0(1.0), 0.088256964215677),
        (dd_j0_first_zero(), 2.404825557695773),
    ];
    let worst = constants
        .iter()
        .map(|(dd, printed)| (dd.to_f64() - printed).abs())
        .fold(0.0, f64::max);
    out.push(Check {
        name: "oracle reproduces J0(1), Y0(1), j0,1",
        observed: worst,
        tolerance: CONSTANT_TOL,
    });

    let worst = [
        scaled_error(bessel_j(0, 1.0), constants[0].0),
        scaled_error(bessel_y0(1.0).unwrap(), constants[1].0),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    out.push(Check {
        name: "library J0(1), Y0(1) vs oracle",
        observed: worst,
        tolerance: ORACLE_TOL,
    });

    // Zero of the library J0 via bisection, compared to the oracle's.
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j(0, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.push(Check {
        name: "library J0 first zero vs oracle",
        observed: (0.5 * (lo + hi) - dd_j0_first_zero().to_f64()).abs(),
        tolerance: 1e-15,
    });

    let mut worst: f64 = 0.0;
    for n in 0..=30 {
        for &x in &sample_points() {
            worst = worst.max(scaled_error(bessel_j(n, x), dd_bessel_j(n, x)));
        }
    }
    out.push(Check {
        name: "J_n vs oracle, n <= 30, 0 < x <= 40",
        observed: worst,
        tolerance: ORACLE_TOL,
    });

    let mut worst: f64 = 0.0;
    for &x in &sample_points() {
        worst = worst.max(scaled_error(bessel_y0(x).unwrap(), dd_bessel_y0(x)));
        worst = worst.max(scaled_error(bessel_y1(x).unwrap(), dd_bessel_y1(x)));
    }
    out.push(Check {
        name: "Y0, Y1 vs oracle, 0 < x <= 40",
        observed: worst,
        tolerance: ORACLE_TOL,
    });

    // J0 + 2 Σ J_2k = 1 from scalar calls; J0² + 2 Σ J_k² = 1 from the sequence.
    let mut worst: f64 = 0.0;
    for &x in &wide_points() {
        let top = (x + 30.0 * x.cbrt()) as u32 + 60;
        let seq = bessel_j_sequence(top, x);
        let sq = seq[0] * seq[0] + 2.0 * seq.iter().skip(1).map(|v| v * v).sum::<f64>();
        worst = worst.max((sq - 1.0).abs());
        if x <= 250.0 {
            let j: Vec<f64> = (0..=top).map(|n| bessel_j(n, x)).collect();
            let lin = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
            worst = worst.max((lin - 1.0).abs());
        }
    }
    out.push(Check {
        name: "normalization identities up to x = 3.3e4",
        observed: worst,
        tolerance: IDENTITY_TOL,
    });

    // J_{n−1} + J_{n+1} = (2n/x) J_n, absolute residual over max(1, |J_n|).
    let mut worst: f64 = 0.0;
    for &x in &wide_points() {
        let top = (x as u32).clamp(100, 200) + 30;
        let j = bessel_j_sequence(top + 1, x);
        let scalar: Vec<f64> = (0..=top + 1).map(|n| bessel_j(n, x)).collect();
        for n in 1..=top as usize {
            for v in [&j, &scalar] {
                let lhs = v[n - 1] + v[n + 1];
                let rhs = 2.0 * n as f64 / x * v[n];
                worst = worst.max((lhs - rhs).abs() / v[n].abs().max(1.0));
            }
        }
    }
    out.push(Check {
        name: "three-term recurrence residual",
        observed: worst,
        tolerance: IDENTITY_TOL,
    });

    // J1 Y0 − J0 Y1 = 2/(πx).
    let mut worst: f64 = 0.0;
    for &x in &wide_points() {
        let w = bessel_j(1, x) * bessel_y0(x).unwrap() - bessel_j(0, x) * bessel_y1(x).unwrap();
        let exact = 2.0 / (std::f64::consts::PI * x);
        worst = worst.max((w - exact).abs() / exact);
    }
    out.push(Check {
        name: "Wronskian J1 Y0 - J0 Y1 = 2/(pi x)",
        observed: worst,
        tolerance: IDENTITY_TOL,
    });

    // 1/π written out as a 16-digit reference value.
    let x = 2.0;
    let w = bessel_j(1, x) * bessel_y0(x).unwrap() - bessel_j(0, x) * bessel_y1(x).unwrap();
    out.push(Check {
        name: "Wronskian at x = 2 equals 0.318309886...",
        #[allow(clippy::approx_constant)]
        observed: (w - 0.318_309_886_183_790_7).abs(),
        tolerance: 1e-15,
    });

    let mut worst: f64 = 0.0;
    for &x in &sample_points() {
        let h = hankel1_0(x).unwrap();
        worst = worst
            .max(scaled_error(h.re, dd_bessel_j(0, x)))
            .max(scaled_error(h.im, dd_bessel_y0(x)));
    }
    out.push(Check {
        name: "H0(1) vs oracle",
        observed: worst,
        tolerance: ORACLE_TOL,
    });

    out
}
