//! Born-approximation synthesis of bistatic scattered fields and seeded
//! noise injection.
//!
//! For point-like targets the scattered field at sample `n` is
//!
//! ```text
//! u_scat(r_n, t_n) = k² Σ_m area_m · (ε_m − ε₀)/(ε₀ μ₀) · G(t_n, z_m) · G(r_n, z_m)
//! ```
//!
//! with `G` either the exact Green's function or its far-field form.
//! Datasets serialize to the CSV layout `n,theta_deg,tx_x,tx_y,rx_x,rx_y,re,im`,
//! shared with the Fresnel extractor and the imaging stage.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{make_bistatic_array, wrap_angle, MeasurementConfig, Scene};
use crate::specfun::{far_field_green, green, ComplexScalar, Point2};

/// Minimum distance between a target and any array element.
pub const TARGET_CLEARANCE: f64 = 1e-6;

/// ChaCha20 stream used by [`add_noise`]. Stream 0 is left free for callers
/// that derive other draws from the same seed.
pub const NOISE_STREAM: u64 = 1;

/// Default transmitter and receiver ring radius, m.
pub const DEFAULT_RADIUS: f64 = 1.67;

/// CSV header of the dataset format.
pub const DATASET_HEADER: [&str; 8] = ["n", "theta_deg", "tx_x", "tx_y", "rx_x", "rx_y", "re", "im"];

/// Which Green's function is used for synthesis or back-propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Exact,
    Farfield,
}

impl Kernel {
    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::Exact => "exact",
            Kernel::Farfield => "farfield",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SyntheticExact,
    SyntheticFarfield,
    Fresnel,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SyntheticExact => "synthetic_exact",
            Provenance::SyntheticFarfield => "synthetic_farfield",
            Provenance::Fresnel => "fresnel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub tx: Point2,
    pub rx: Point2,
    pub u_scat: ComplexScalar,
}

/// The `N` scattered-field samples of one bistatic sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredDataset {
    pub config: MeasurementConfig,
    pub samples: Vec<Sample>,
    pub provenance: Provenance,
}

/// Green's function between an array element and a point of the domain.
///
/// `radius` and `angle` locate the element; the far-field form only uses those.
pub(crate) fn element_green(
    kernel: Kernel,
    k: f64,
    element: Point2,
    radius: f64,
    angle: f64,
    x: Point2,
) -> Result<ComplexScalar> {
    match kernel {
        Kernel::Exact => green(k, element, x),
        Kernel::Farfield => far_field_green(k, radius, angle, x),
    }
}

/// Noiseless Born-approximation dataset for `scene` observed with `config`.
pub fn synth_scattered(
    scene: &Scene,
    config: &MeasurementConfig,
    kernel: Kernel,
) -> Result<ScatteredDataset> {
    let k = config.wavenumber();
    let array = make_bistatic_array(config);
    for (tx, rx) in &array {
        for t in &scene.targets {
            let d = t.center.distance(*tx).min(t.center.distance(*rx));
            if d < TARGET_CLEARANCE {
                return Err(Error::Singularity {
                    distance: d,
                    minimum: TARGET_CLEARANCE,
                });
            }
        }
    }
    let samples = array
        .iter()
        .enumerate()
        .map(|(n, &(tx, rx))| {
            let theta = config.tx_angle(n);
            let mut u = ComplexScalar::new(0.0, 0.0);
            for t in &scene.targets {
                let gt = element_green(kernel, k, tx, config.tx_radius, theta, t.center)?;
                let gr = element_green(
                    kernel,
                    k,
                    rx,
                    config.rx_radius,
                    theta + config.bistatic_angle,
                    t.center,
                )?;
                u += gt * gr * (k * k * t.area * t.contrast());
            }
            Ok(Sample { tx, rx, u_scat: u })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScatteredDataset {
        config: *config,
        samples,
        provenance: match kernel {
            Kernel::Exact => Provenance::SyntheticExact,
            Kernel::Farfield => Provenance::SyntheticFarfield,
        },
    })
}

/// Adds circular complex white Gaussian noise at `snr_db` relative to the
/// mean sample power of `data`. `snr_db = +inf` returns the input unchanged.
///
/// Each sample receives `σ (a + i b) / √2` with `a, b ~ N(0, 1)` drawn in
/// sample order (real part first) from ChaCha20 seeded with `seed` on
/// [`NOISE_STREAM`], so the output depends only on `(data, snr_db, seed)`.
pub fn add_noise(data: &ScatteredDataset, snr_db: f64, seed: u64) -> Result<ScatteredDataset> {
    if data.samples.is_empty() {
        return Err(Error::Degenerate("cannot add noise to an empty dataset".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(data.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::precondition("snr_db must not be NaN"));
    }
    let power = signal_power(data);
    if power == 0.0 {
        return Err(Error::Degenerate(
            "all samples are zero; signal-relative noise is undefined".into(),
        ));
    }
    let sigma = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    let scale = sigma / std::f64::consts::SQRT_2;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let mut out = data.clone();
    for s in &mut out.samples {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        s.u_scat += ComplexScalar::new(re, im) * scale;
    }
    Ok(out)
}

/// Mean of `|u_scat|²` over the samples.
pub fn signal_power(data: &ScatteredDataset) -> f64 {
    if data.samples.is_empty() {
        return 0.0;
    }
    data.samples.iter().map(|s| s.u_scat.norm_sqr()).sum::<f64>() / data.samples.len() as f64
}

impl ScatteredDataset {
    /// Transmitter angle of each sample in `[0, 2π)`.
    pub fn tx_angle(&self, index: usize) -> f64 {
        let tx = self.samples[index].tx;
        wrap_angle(tx.y.atan2(tx.x))
    }

    pub fn rx_angle(&self, index: usize) -> f64 {
        let rx = self.samples[index].rx;
        wrap_angle(rx.y.atan2(rx.x))
    }

    /// Every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.u_scat *= factor;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(DATASET_HEADER)?;
        for (n, s) in self.samples.iter().enumerate() {
            w.write_record(&[
                (n + 1).to_string(),
                self.tx_angle(n).to_degrees().to_string(),
                s.tx.x.to_string(),
                s.tx.y.to_string(),
                s.rx.x.to_string(),
                s.rx.y.to_string(),
                s.u_scat.re.to_string(),
                s.u_scat.im.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Reads the CSV dataset format. The file carries positions only, so the
    /// frequency is supplied by the caller and the radii and bistatic angle
    /// are recovered from the first sample.
    pub fn read_csv<R: Read>(reader: R, frequency: f64, provenance: Provenance) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(DATASET_HEADER.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                token: header.iter().collect::<Vec<_>>().join(","),
                message: format!("expected header {}", DATASET_HEADER.join(",")),
            });
        }
        let mut samples = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let field = |j: usize| -> Result<f64> {
                let token = record.get(j).unwrap_or("");
                token.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    token: token.to_string(),
                    message: format!("column `{}` is not a number", DATASET_HEADER[j]),
                })
            };
            if record.len() != DATASET_HEADER.len() {
                return Err(Error::Parse {
                    line,
                    token: record.iter().collect::<Vec<_>>().join(","),
                    message: format!("expected {} fields, found {}", DATASET_HEADER.len(), record.len()),
                });
            }
            samples.push(Sample {
                tx: Point2::new(field(2)?, field(3)?),
                rx: Point2::new(field(4)?, field(5)?),
                u_scat: ComplexScalar::new(field(6)?, field(7)?),
            });
        }
        let first = samples
            .first()
            .ok_or_else(|| Error::Degenerate("dataset file has no samples".into()))?;
        let alpha = first.rx.y.atan2(first.rx.x) - first.tx.y.atan2(first.tx.x);
        let config = MeasurementConfig::new(
            samples.len(),
            alpha,
            first.tx.norm(),
            first.rx.norm(),
            frequency,
        )?;
        Ok(ScatteredDataset {
            config,
            samples,
            provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Inhomogeneity;

    fn config(alpha_deg: f64) -> MeasurementConfig {
        MeasurementConfig::new(36, alpha_deg.to_radians(), DEFAULT_RADIUS, DEFAULT_RADIUS, 4e9).unwrap()
    }

    fn target(x: f64, y: f64) -> Inhomogeneity {
        Inhomogeneity::disk(Point2::new(x, y), 0.015, 3.0).unwrap()
    }

    #[test]
    fn empty_scene_gives_zero_samples() {
        let d = synth_scattered(&Scene::empty(), &config(60.0), Kernel::Exact).unwrap();
        assert_eq!(d.samples.len(), 36);
        assert!(d.samples.iter().all(|s| s.u_scat == ComplexScalar::new(0.0, 0.0)));
        assert!(matches!(add_noise(&d, 20.0, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn superposition_of_targets() {
        let c = config(90.0);
        for kernel in [Kernel::Exact, Kernel::Farfield] {
            let a = synth_scattered(&Scene::new(vec![target(-0.045, 0.0)]), &c, kernel).unwrap();
            let b = synth_scattered(&Scene::new(vec![target(0.045, 0.01)]), &c, kernel).unwrap();
            let ab = synth_scattered(
                &Scene::new(vec![target(-0.045, 0.0), target(0.045, 0.01)]),
                &c,
                kernel,
            )
            .unwrap();
            for i in 0..36 {
                let sum = a.samples[i].u_scat + b.samples[i].u_scat;
                let err = (ab.samples[i].u_scat - sum).norm() / sum.norm();
                assert!(err <= 1e-15, "{err}");
            }
        }
    }

    #[test]
    fn target_on_array_is_singular() {
        let c = config(0.0);
        let scene = Scene::new(vec![target(DEFAULT_RADIUS, 0.0)]);
        assert!(matches!(
            synth_scattered(&scene, &c, Kernel::Exact),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn noise_is_seeded_and_infinite_snr_is_identity() {
        let d = synth_scattered(&Scene::new(vec![target(0.01, -0.02)]), &config(60.0), Kernel::Exact).unwrap();
        assert_eq!(add_noise(&d, f64::INFINITY, 9).unwrap(), d);
        let a = add_noise(&d, 20.0, 42).unwrap();
        let b = add_noise(&d, 20.0, 42).unwrap();
        let c = add_noise(&d, 20.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn csv_layout() {
        let d = synth_scattered(&Scene::new(vec![target(0.01, -0.02)]), &config(60.0), Kernel::Exact).unwrap();
        let text = d.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,theta_deg,tx_x,tx_y,rx_x,rx_y,re,im"));
        assert_eq!(text.lines().count(), 37);
        assert!(!text.contains('\r'));
        let back = ScatteredDataset::read_csv(text.as_bytes(), 4e9, Provenance::SyntheticExact).unwrap();
        assert_eq!(back.samples, d.samples);
        assert!((back.config.bistatic_angle - d.config.bistatic_angle).abs() < 1e-12);
        assert!((back.config.tx_radius - DEFAULT_RADIUS).abs() < 1e-12);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let text = "n,theta_deg,tx_x,tx_y,rx_x,rx_y,re,im\n1,0,1,0,0,1,abc,0\n";
        match ScatteredDataset::read_csv(text.as_bytes(), 4e9, Provenance::Fresnel) {
            Err(Error::Parse { line, token, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(token, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
