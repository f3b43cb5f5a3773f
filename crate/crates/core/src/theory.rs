//! The Bessel-series structure kernel of the far-field bifocusing indicator.
//!
//! For a target at distance `d` from the sampling point, the continuous
//! (N → ∞) indicator is proportional to
//!
//! ```text
//! K(d; α) = J₀(a d) J₀(b d) + 2 Σ_{q≥1} (−1)^q J_2q(a d) J_2q(b d),
//! a = k (1 + cos α),  b = k sin α.
//! ```
//!
//! [`quadrature_kernel`] evaluates the same quantity as the angular average
//! of the plane-wave phase, without touching any Bessel code, and serves as
//! the reference for the series.
//!
//! The series collapses to `J₀(2k |cos(α/2)| d)` because
//! `a² + b² = 4k² cos²(α/2)` (Neumann's addition theorem at a right angle);
//! [`closed_form_kernel`] exposes that form for resolution analysis.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::specfun::{bessel_j, bessel_j_sequence};

/// Default negligibility threshold for a single series term.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;
/// Default hard cap on the series index.
pub const DEFAULT_Q_CAP: usize = 100_000;
/// Extra terms past `⌈k d⌉` in the automatic cutoff.
pub const AUTO_MARGIN: usize = 16;
/// Refinement cap for the trapezoid quadrature.
pub const QUADRATURE_MAX_NODES: usize = 1 << 20;

const QUADRATURE_TOL: f64 = 1e-14;

/// Parameters of the structure-kernel series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    /// k, 1/m.
    pub wavenumber: f64,
    /// α, rad.
    pub alpha: f64,
    /// Hard cap on the series index q.
    pub q_max: usize,
    pub tail_tol: f64,
}

impl SeriesParams {
    pub fn new(wavenumber: f64, alpha: f64) -> Self {
        SeriesParams {
            wavenumber,
            alpha,
            q_max: DEFAULT_Q_CAP,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn with_limits(wavenumber: f64, alpha: f64, q_max: usize, tail_tol: f64) -> Result<Self> {
        let p = SeriesParams {
            wavenumber,
            alpha,
            q_max,
            tail_tol,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_max < 1 {
            return Err(Error::precondition("q_max must be at least 1"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::precondition("tail_tol must be positive"));
        }
        if !(self.wavenumber > 0.0 && self.wavenumber.is_finite()) {
            return Err(Error::precondition("wavenumber must be positive"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::precondition("alpha must be finite"));
        }
        Ok(())
    }

    /// `⌈k d⌉ + 16`, capped at `q_max`.
    pub fn auto_terms(&self, d: f64) -> usize {
        ((self.wavenumber * d).ceil() as usize + AUTO_MARGIN).min(self.q_max)
    }
}

/// Result of a truncated series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEvaluation {
    /// `J₀(a d) J₀(b d)`.
    pub leading: f64,
    /// `2 Σ (−1)^q J_2q(a d) J_2q(b d)` over the terms used.
    pub tail: f64,
    /// Number of series terms summed.
    pub terms: usize,
    /// True when the last term fell below `tail_tol` past the turning point
    /// `2q > max(|a d|, |b d|)`, where the terms decay monotonically.
    pub certified: bool,
}

impl SeriesEvaluation {
    pub fn value(&self) -> f64 {
        self.leading + self.tail
    }
}

fn arguments(d: f64, k: f64, alpha: f64) -> (f64, f64) {
    let (s, c) = alpha.sin_cos();
    (k * (1.0 + c) * d, k * s * d)
}

/// Series evaluation with automatic truncation; see the module docs.
/// The kernel is even in `d`.
pub fn structure_series(d: f64, p: &SeriesParams) -> SeriesEvaluation {
    let d = d.abs();
    let (a, b) = arguments(d, p.wavenumber, p.alpha);
    let turning = a.abs().max(b.abs());
    let mut q_limit = p.auto_terms(d).max(1);
    loop {
        let ja = bessel_j_sequence(2 * q_limit as u32, a);
        let jb = bessel_j_sequence(2 * q_limit as u32, b);
        let leading = ja[0] * jb[0];
        let mut tail = 0.0;
        let mut terms = 0;
        let mut certified = false;
        for q in 1..=q_limit {
            let term = 2.0 * ja[2 * q] * jb[2 * q];
            tail += if q % 2 == 0 { term } else { -term };
            terms = q;
            if (2 * q) as f64 > turning && term.abs() < p.tail_tol {
                certified = true;
                break;
            }
        }
        if certified || q_limit >= p.q_max {
            if !certified {
                log::warn!(
                    "structure series not certified at q_max = {} (d = {d}, alpha = {})",
                    p.q_max,
                    p.alpha
                );
            }
            return SeriesEvaluation {
                leading,
                tail,
                terms,
                certified,
            };
        }
        q_limit = (2 * q_limit).min(p.q_max);
    }
}

/// Structure kernel `K(d; α)`.
pub fn structure_kernel(d: f64, p: &SeriesParams) -> f64 {
    structure_series(d, p).value()
}

/// The series summed over exactly `q_terms` terms, returned as
/// `(leading, tail)`; no early exit.
pub fn structure_series_fixed(d: f64, k: f64, alpha: f64, q_terms: usize) -> (f64, f64) {
    let (a, b) = arguments(d.abs(), k, alpha);
    let ja = bessel_j_sequence(2 * q_terms as u32, a);
    let jb = bessel_j_sequence(2 * q_terms as u32, b);
    let mut tail = 0.0;
    for q in 1..=q_terms {
        let term = 2.0 * ja[2 * q] * jb[2 * q];
        tail += if q % 2 == 0 { term } else { -term };
    }
    (ja[0] * jb[0], tail)
}

/// `J₀(2k |cos(α/2)| d)`.
pub fn closed_form_kernel(d: f64, k: f64, alpha: f64) -> f64 {
    bessel_j(0, 2.0 * k * (0.5 * alpha).cos().abs() * d.abs())
}

/// Periodic trapezoid value of the phase integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    /// Real part of the normalized integral.
    pub value: f64,
    /// Imaginary part; analytically zero, reported as a diagnostic.
    pub imag: f64,
    pub nodes: usize,
}

/// `(1/2π) ∫₀^{2π} exp(i k d ((1+cos α) cos θ − sin α sin θ)) dθ`.
pub fn quadrature_kernel(d: f64, k: f64, alpha: f64) -> Result<QuadratureValue> {
    quadrature_kernel_at(d, k, alpha, 0.0)
}

/// Same integral with the direction of `x − z` at angle `phi`; the result
/// does not depend on `phi`.
pub fn quadrature_kernel_at(d: f64, k: f64, alpha: f64, phi: f64) -> Result<QuadratureValue> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Domain {
            function: "quadrature_kernel",
            value: d,
            expected: "finite d >= 0",
        });
    }
    let (a, b) = arguments(d, k, alpha);
    let phase = |theta: f64| {
        let (s, c) = (theta - phi).sin_cos();
        a * c - b * s
    };
    let sample_sum = |nodes: usize, offset: f64| -> (f64, f64) {
        let step = TAU / nodes as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..nodes {
            let (s, c) = phase((j as f64 + offset) * step).sin_cos();
            re += c;
            im += s;
        }
        (re, im)
    };
    // The integrand is band-limited to about sqrt(a² + b²) harmonics; refine
    // at least past that before trusting successive agreement.
    let bandwidth = a.hypot(b);
    let min_nodes = (bandwidth.ceil() as usize + 32).next_power_of_two();
    let mut nodes = 16usize;
    let (mut sre, mut sim) = sample_sum(nodes, 0.0);
    let mut prev = (sre / nodes as f64, sim / nodes as f64);
    let mut agreed = 0;
    while nodes < QUADRATURE_MAX_NODES {
        let (mre, mim) = sample_sum(nodes, 0.5);
        sre += mre;
        sim += mim;
        nodes *= 2;
        let cur = (sre / nodes as f64, sim / nodes as f64);
        let diff = (cur.0 - prev.0).hypot(cur.1 - prev.1);
        prev = cur;
        if diff <= QUADRATURE_TOL {
            agreed += 1;
        } else {
            agreed = 0;
        }
        if agreed >= 2 && nodes >= min_nodes {
            return Ok(QuadratureValue {
                value: cur.0,
                imag: cur.1,
                nodes,
            });
        }
    }
    Err(Error::Precondition(format!(
        "phase quadrature did not converge within {QUADRATURE_MAX_NODES} nodes (d = {d}, alpha = {alpha})"
    )))
}

/// `|J₀(a|x|) J₀(b|x|)|`, the leading term alone.
pub fn profile_e1(x: f64, k: f64, alpha: f64) -> f64 {
    let (a, b) = arguments(x.abs(), k, alpha);
    (bessel_j(0, a) * bessel_j(0, b)).abs()
}

/// `|2 Σ (−1)^q J_2q(a|x|) J_2q(b|x|)|` with at most `q_max` terms.
pub fn profile_e2(x: f64, k: f64, alpha: f64, q_max: usize) -> f64 {
    let p = SeriesParams {
        q_max: q_max.max(1),
        ..SeriesParams::new(k, alpha)
    };
    structure_series(x, &p).tail.abs()
}

/// `|K(|x|; α)|`.
pub fn profile_e(x: f64, k: f64, alpha: f64, q_max: usize) -> f64 {
    let p = SeriesParams {
        q_max: q_max.max(1),
        ..SeriesParams::new(k, alpha)
    };
    structure_series(x, &p).value().abs()
}

/// `√(a² + b²) = 2k |cos(α/2)|`: the effective wavenumber of the collapsed kernel.
pub fn effective_wavenumber(k: f64, alpha: f64) -> f64 {
    2.0 * k * (0.5 * alpha).cos().abs()
}

/// Half-width at half-maximum of `|J₀(κ d)|` scaled for the given α; infinite
/// when the kernel is flat (α = π).
pub fn half_width_at_half_max(k: f64, alpha: f64) -> f64 {
    // J₀(z) = 1/2 at z ≈ 1.5211; solved by bisection to stay self-contained.
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bessel_j(0, mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = effective_wavenumber(k, alpha);
    if kappa < 1e-12 * k {
        f64::INFINITY
    } else {
        0.5 * (lo + hi) / kappa
    }
}
