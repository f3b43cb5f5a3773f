//! Bistatic acquisition geometry and ground-truth scene description.
//!
//! Transmitter `n` (1-based) sits at `T (cos θ_n, sin θ_n)` with
//! `θ_n = 2π (n-1) / N`; its paired receiver sits at
//! `R (cos(θ_n + α), sin(θ_n + α))` for a fixed bistatic angle `α`.
//! Angles are radians everywhere in the library; the JSON document and the
//! CLI speak degrees and gigahertz.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::Point2;

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Speed of light in the vacuum background, `1/sqrt(ε₀ μ₀)`.
pub fn speed_of_light() -> f64 {
    1.0 / (EPS0 * MU0).sqrt()
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Bistatic acquisition parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub n_samples: usize,
    /// Bistatic angle α in radians, reduced to `[0, 2π)`.
    pub bistatic_angle: f64,
    pub tx_radius: f64,
    pub rx_radius: f64,
    /// Operating frequency in Hz.
    pub frequency: f64,
}

impl MeasurementConfig {
    pub fn new(
        n_samples: usize,
        bistatic_angle: f64,
        tx_radius: f64,
        rx_radius: f64,
        frequency: f64,
    ) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::precondition("n_samples must be at least 1"));
        }
        if !bistatic_angle.is_finite() {
            return Err(Error::precondition("bistatic angle must be finite"));
        }
        for (name, v) in [("tx_radius", tx_radius), ("rx_radius", rx_radius), ("frequency", frequency)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::precondition(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(MeasurementConfig {
            n_samples,
            bistatic_angle: wrap_angle(bistatic_angle),
            tx_radius,
            rx_radius,
            frequency,
        })
    }

    /// `k = 2π f sqrt(ε₀ μ₀)`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI * self.frequency * (EPS0 * MU0).sqrt()
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    pub fn wavelength(&self) -> f64 {
        speed_of_light() / self.frequency
    }

    /// Transmitter angular step `Δθ = 2π / N`.
    pub fn angular_step(&self) -> f64 {
        TAU / self.n_samples as f64
    }

    /// Same geometry with a different bistatic angle.
    pub fn with_angle(&self, bistatic_angle: f64) -> Self {
        MeasurementConfig {
            bistatic_angle: wrap_angle(bistatic_angle),
            ..*self
        }
    }

    /// `θ_n` for a 0-based sample index.
    pub fn tx_angle(&self, index: usize) -> f64 {
        TAU * index as f64 / self.n_samples as f64
    }
}

/// One small penetrable inclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inhomogeneity {
    pub center: Point2,
    /// Area in m².
    pub area: f64,
    /// Relative permittivity `ε_m / ε₀`.
    pub permittivity_ratio: f64,
}

impl Inhomogeneity {
    pub fn new(center: Point2, area: f64, permittivity_ratio: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::precondition("target center must be finite"));
        }
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::precondition(format!("target area must be positive, got {area}")));
        }
        if !permittivity_ratio.is_finite() {
            return Err(Error::precondition("permittivity ratio must be finite"));
        }
        if permittivity_ratio <= 1.0 {
            log::warn!("permittivity ratio {permittivity_ratio} <= 1 is not a dielectric inclusion");
        }
        Ok(Inhomogeneity {
            center,
            area,
            permittivity_ratio,
        })
    }

    /// Disk of the given radius.
    pub fn disk(center: Point2, radius: f64, permittivity_ratio: f64) -> Result<Self> {
        Inhomogeneity::new(center, PI * radius * radius, permittivity_ratio)
    }

    /// `(ε_m − ε₀) / (ε₀ μ₀)`, the Born-integral weight.
    pub fn contrast(&self) -> f64 {
        (self.permittivity_ratio - 1.0) * EPS0 / (EPS0 * MU0)
    }
}

/// Ground-truth targets in a vacuum background.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub targets: Vec<Inhomogeneity>,
}

impl Scene {
    pub fn new(targets: Vec<Inhomogeneity>) -> Self {
        Scene { targets }
    }

    pub fn empty() -> Self {
        Scene::default()
    }

    /// Target pairs closer than two wavelengths, as `(i, j, distance)`.
    /// Logged as warnings; imaging still proceeds.
    pub fn separation_warnings(&self, wavelength: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.targets.len() {
            for j in i + 1..self.targets.len() {
                let d = self.targets[i].center.distance(self.targets[j].center);
                if d < 2.0 * wavelength {
                    log::warn!(
                        "targets {i} and {j} are {d:.4} m apart, below 2 wavelengths ({:.4} m)",
                        2.0 * wavelength
                    );
                    out.push((i, j, d));
                }
            }
        }
        out
    }
}

/// Transmitter/receiver position pairs, in sample order.
pub fn make_bistatic_array(config: &MeasurementConfig) -> Vec<(Point2, Point2)> {
    (0..config.n_samples)
        .map(|n| {
            let theta = config.tx_angle(n);
            (
                Point2::polar(config.tx_radius, theta),
                Point2::polar(config.rx_radius, theta + config.bistatic_angle),
            )
        })
        .collect()
}

/// `(θ_n, θ_n + α)` per sample, both reduced to `[0, 2π)`.
pub fn angular_positions(config: &MeasurementConfig) -> Vec<(f64, f64)> {
    (0..config.n_samples)
        .map(|n| {
            let theta = config.tx_angle(n);
            (wrap_angle(theta), wrap_angle(theta + config.bistatic_angle))
        })
        .collect()
}

/// JSON form of a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDocument {
    pub center_m: [f64; 2],
    pub area_m2: f64,
    pub eps_ratio: f64,
}

/// JSON form of an acquisition plus its scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub n_samples: usize,
    pub bistatic_angle_deg: f64,
    pub tx_radius_m: f64,
    pub rx_radius_m: f64,
    pub frequency_ghz: f64,
    #[serde(default)]
    pub targets: Vec<TargetDocument>,
}

impl SceneDocument {
    pub fn measurement(&self) -> Result<MeasurementConfig> {
        MeasurementConfig::new(
            self.n_samples,
            self.bistatic_angle_deg.to_radians(),
            self.tx_radius_m,
            self.rx_radius_m,
            self.frequency_ghz * 1e9,
        )
    }

    pub fn scene(&self) -> Result<Scene> {
        self.targets
            .iter()
            .map(|t| {
                Inhomogeneity::new(Point2::new(t.center_m[0], t.center_m[1]), t.area_m2, t.eps_ratio)
            })
            .collect::<Result<Vec<_>>>()
            .map(Scene::new)
    }

    pub fn from_parts(config: &MeasurementConfig, scene: &Scene) -> Self {
        SceneDocument {
            n_samples: config.n_samples,
            bistatic_angle_deg: config.bistatic_angle.to_degrees(),
            tx_radius_m: config.tx_radius,
            rx_radius_m: config.rx_radius,
            frequency_ghz: config.frequency / 1e9,
            targets: scene
                .targets
                .iter()
                .map(|t| TargetDocument {
                    center_m: [t.center.x, t.center.y],
                    area_m2: t.area,
                    eps_ratio: t.permittivity_ratio,
                })
                .collect(),
        }
    }
}
