//! Synthetic multistatic tables built from forward synthesis.

use bifocus::forward::{synth_scattered, Kernel, DEFAULT_RADIUS};
use bifocus::fresnel::{MultistaticRecords, Record};
use bifocus::scene::{wrap_angle, Inhomogeneity, MeasurementConfig, Scene};
use bifocus::specfun::{ComplexScalar, Point2};

pub const FREQ: f64 = 4e9;

pub fn example_scene() -> Scene {
    Scene::new(vec![Inhomogeneity::disk(Point2::new(-0.03, 0.0), 0.015, 3.0).unwrap()])
}

/// 36 sources every 10°, receivers every `rx_step_deg`, receivers closer
/// than `mask_half_deg` to their source dropped. Incident values are
/// arbitrary so that subtraction is exercised.
pub fn multistatic_from_forward(scene: &Scene, rx_step_deg: f64, mask_half_deg: f64) -> MultistaticRecords {
    let steps = (360.0 / rx_step_deg).round() as usize;
    let mut records = Vec::new();
    for m in 0..steps {
        let alpha = (m as f64 * rx_step_deg).to_radians();
        let cfg = MeasurementConfig::new(36, alpha, DEFAULT_RADIUS, DEFAULT_RADIUS, FREQ).unwrap();
        let data = synth_scattered(scene, &cfg, Kernel::Exact).unwrap();
        for (n, s) in data.samples.iter().enumerate() {
            let tx = wrap_angle(cfg.tx_angle(n));
            let rx = wrap_angle(cfg.tx_angle(n) + alpha);
            let gap = (rx - tx).rem_euclid(std::f64::consts::TAU);
            if gap.min(std::f64::consts::TAU - gap) < mask_half_deg.to_radians() - 1e-9 {
                continue;
            }
            let incident = ComplexScalar::new(0.5 + n as f64 * 0.01, -0.25 + m as f64 * 0.001);
            records.push(Record {
                tx_angle: tx,
                rx_angle: rx,
                frequency: FREQ,
                total: s.u_scat + incident,
                incident,
            });
        }
    }
    MultistaticRecords {
        records,
        source_name: "fixture".into(),
        scattered: false,
    }
}
