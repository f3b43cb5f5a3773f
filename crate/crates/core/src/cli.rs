//! Command-line front end. Every command reads one JSON config, writes its
//! outputs and a `manifest.json` into an output directory, and is a pure
//! function of its inputs.
//!
//! Exit codes: 0 success, 2 config or schema, 3 precondition or coverage,
//! 4 I/O.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::forward::{add_noise, synth_scattered, Kernel, Provenance, ScatteredDataset};
use crate::fresnel::{
    coverage, extract_bistatic, parse_fresnel, scattered_records, ColumnMap, FRESNEL_RX_RADIUS,
    FRESNEL_TX_RADIUS,
};
use crate::imaging::{
    default_exclusion_radius, export_map, extract_peaks, import_map_csv, indicator_map,
    localization_error, normalize_map, ImagingGrid, IndicatorMap, MapFormat,
};
use crate::scene::{speed_of_light, Inhomogeneity, Scene, SceneDocument, TargetDocument};
use crate::specfun::Point2;
use crate::theory::{
    profile_e, profile_e1, profile_e2, quadrature_kernel, structure_series, SeriesParams,
    DEFAULT_Q_CAP, DEFAULT_TAIL_TOL,
};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bifocus", version, about = "Bistatic bifocusing imaging of small inclusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a scattered-field dataset.
    Synth(CommonArgs),
    /// Image a dataset and extract peaks.
    Image(CommonArgs),
    /// Tabulate the structure kernel profiles and oracle residuals.
    Theory(CommonArgs),
    /// Extract a fixed-angle dataset from a multistatic table.
    Fresnel(CommonArgs),
    /// Extract peaks from an exported map.
    Peaks(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub alpha_deg: Option<f64>,
    #[arg(long)]
    pub freq_ghz: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        _ => EXIT_PRECONDITION,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Image(a) => cmd_image(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Fresnel(a) => cmd_fresnel(a),
        Command::Peaks(a) => cmd_peaks(a),
    }
}

fn config_error(pointer: &str, message: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

/// Parses a config, reporting failures with a JSON pointer to the field.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{key}")),
                Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
                Segment::Unknown => pointer.push_str("/?"),
            }
        }
        if pointer.is_empty() {
            pointer.push('/');
        }
        config_error(&pointer, e.inner().to_string())
    })
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn reject(flag: Option<impl Sized>, name: &str, command: &str) -> Result<()> {
    if flag.is_some() {
        return Err(config_error("/", format!("{name} does not apply to `{command}`")));
    }
    Ok(())
}

fn output_dir(args: &CommonArgs, configured: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = args
        .out
        .clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| config_error("/output_dir", "no output directory (set output_dir or --out)"))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_manifest(dir: &Path, command: &str, config: &impl Serialize, details: Value) -> Result<()> {
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "details": details,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}

fn targets_to_scene(targets: &[TargetDocument]) -> Result<Scene> {
    targets
        .iter()
        .map(|t| Inhomogeneity::new(Point2::new(t.center_m[0], t.center_m[1]), t.area_m2, t.eps_ratio))
        .collect::<Result<Vec<_>>>()
        .map(Scene::new)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub scene: SceneDocument,
    pub kernel: Kernel,
    /// Omitted for noiseless data.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

pub fn cmd_synth(args: &CommonArgs) -> Result<()> {
    let mut cfg: SynthConfig = load_config(&args.config)?;
    if let Some(a) = args.alpha_deg {
        cfg.scene.bistatic_angle_deg = a;
    }
    if let Some(f) = args.freq_ghz {
        cfg.scene.frequency_ghz = f;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let dir = output_dir(args, &cfg.output_dir)?;
    let measurement = cfg.scene.measurement()?;
    let scene = cfg.scene.scene()?;
    let warnings = scene.separation_warnings(measurement.wavelength());
    let clean = synth_scattered(&scene, &measurement, cfg.kernel)?;
    let data = match cfg.snr_db {
        Some(snr) => add_noise(&clean, snr, cfg.seed)?,
        None => clean,
    };
    write_file(&dir.join("dataset.csv"), data.to_csv_string().as_bytes())?;
    cfg.output_dir = None;
    write_manifest(
        &dir,
        "synth",
        &cfg,
        json!({
            "kernel": cfg.kernel,
            "provenance": data.provenance,
            "n_samples": data.samples.len(),
            "wavenumber": measurement.wavenumber(),
            "close_target_pairs": warnings.len(),
        }),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageConfig {
    pub dataset: PathBuf,
    pub frequency_ghz: f64,
    pub kernel: Kernel,
    #[serde(default = "default_provenance")]
    pub provenance: Provenance,
    #[serde(default)]
    pub grid: ImagingGrid,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Defaults to a quarter wavelength.
    #[serde(default)]
    pub exclusion_radius_m: Option<f64>,
    #[serde(default)]
    pub truth_targets: Option<Vec<TargetDocument>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_provenance() -> Provenance {
    Provenance::SyntheticExact
}

fn default_threshold() -> f64 {
    0.5
}

fn peak_outputs(
    dir: &Path,
    map: &IndicatorMap,
    threshold: f64,
    exclusion: f64,
    truth: &Option<Vec<TargetDocument>>,
) -> Result<Value> {
    let peaks = extract_peaks(map, threshold, exclusion)?;
    write_json(&dir.join("peaks.json"), &peaks)?;
    let mut details = json!({
        "peak_count": peaks.len(),
        "threshold": threshold,
        "exclusion_radius_m": exclusion,
    });
    if peaks.is_empty() {
        log::info!("no peaks at threshold {threshold}");
    }
    if let Some(targets) = truth {
        let scene = targets_to_scene(targets)?;
        let report = localization_error(&peaks, &scene);
        write_json(&dir.join("localization.json"), &report)?;
        details["missed_targets"] = json!(report.missed());
    }
    Ok(details)
}

pub fn cmd_image(args: &CommonArgs) -> Result<()> {
    reject(args.alpha_deg, "--alpha-deg", "image")?;
    reject(args.seed, "--seed", "image")?;
    let mut cfg: ImageConfig = load_config(&args.config)?;
    if let Some(f) = args.freq_ghz {
        cfg.frequency_ghz = f;
    }
    let dir = output_dir(args, &cfg.output_dir)?;
    let file = fs::File::open(&cfg.dataset).map_err(|e| Error::io(&cfg.dataset, e))?;
    let data = ScatteredDataset::read_csv(file, cfg.frequency_ghz * 1e9, cfg.provenance)?;
    let raw = indicator_map(&data, &cfg.grid, cfg.kernel)?;
    let map = normalize_map(&raw)?;
    write_file(&dir.join("map.csv"), &export_map(&map, MapFormat::Csv)?)?;
    write_file(&dir.join("map.pgm"), &export_map(&map, MapFormat::Pgm)?)?;
    let exclusion = cfg
        .exclusion_radius_m
        .unwrap_or_else(|| default_exclusion_radius(data.config.frequency));
    let mut details = peak_outputs(&dir, &map, cfg.threshold, exclusion, &cfg.truth_targets)?;
    details["kernel"] = json!(cfg.kernel);
    details["raw_max"] = json!(raw.max());
    details["bistatic_angle_deg"] = json!(data.config.bistatic_angle.to_degrees());
    cfg.output_dir = None;
    write_manifest(&dir, "image", &cfg, details)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeaksConfig {
    pub map: PathBuf,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub exclusion_radius_m: Option<f64>,
    #[serde(default)]
    pub truth_targets: Option<Vec<TargetDocument>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

pub fn cmd_peaks(args: &CommonArgs) -> Result<()> {
    reject(args.alpha_deg, "--alpha-deg", "peaks")?;
    reject(args.seed, "--seed", "peaks")?;
    reject(args.freq_ghz, "--freq-ghz", "peaks")?;
    let mut cfg: PeaksConfig = load_config(&args.config)?;
    let dir = output_dir(args, &cfg.output_dir)?;
    let text = fs::read_to_string(&cfg.map).map_err(|e| Error::io(&cfg.map, e))?;
    let mut map = import_map_csv(&text)?;
    if !map.normalized {
        map = normalize_map(&map)?;
    }
    let exclusion = cfg
        .exclusion_radius_m
        .unwrap_or_else(|| default_exclusion_radius(map.meta.frequency));
    let details = peak_outputs(&dir, &map, cfg.threshold, exclusion, &cfg.truth_targets)?;
    cfg.output_dir = None;
    write_manifest(&dir, "peaks", &cfg, details)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub frequency_ghz: f64,
    pub alpha_deg: Vec<f64>,
    #[serde(default = "default_x_range")]
    pub x_range_m: [f64; 2],
    #[serde(default = "default_profile_points")]
    pub n_points: usize,
    #[serde(default = "default_q_max")]
    pub q_max: usize,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default)]
    pub residuals: ResidualSweep,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Distances × angles at which the series is checked against the quadrature.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSweep {
    pub d_max_m: f64,
    pub n_d: usize,
    pub n_alpha: usize,
}

impl Default for ResidualSweep {
    fn default() -> Self {
        ResidualSweep {
            d_max_m: 0.15,
            n_d: 50,
            n_alpha: 19,
        }
    }
}

fn default_x_range() -> [f64; 2] {
    [-0.1, 0.1]
}
fn default_profile_points() -> usize {
    401
}
fn default_q_max() -> usize {
    DEFAULT_Q_CAP
}
fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

fn alpha_label(deg: f64) -> String {
    format!("value_{deg}deg")
}

pub fn cmd_theory(args: &CommonArgs) -> Result<()> {
    reject(args.seed, "--seed", "theory")?;
    let mut cfg: TheoryConfig = load_config(&args.config)?;
    if let Some(a) = args.alpha_deg {
        cfg.alpha_deg = vec![a];
    }
    if let Some(f) = args.freq_ghz {
        cfg.frequency_ghz = f;
    }
    if cfg.alpha_deg.is_empty() {
        return Err(config_error("/alpha_deg", "at least one angle is required"));
    }
    if !(cfg.frequency_ghz > 0.0) {
        return Err(config_error("/frequency_ghz", "must be positive"));
    }
    if cfg.n_points < 2 || !(cfg.x_range_m[0] < cfg.x_range_m[1]) {
        return Err(config_error("/x_range_m", "need x_min < x_max and n_points >= 2"));
    }
    if cfg.residuals.n_d < 1 || cfg.residuals.n_alpha < 1 || !(cfg.residuals.d_max_m >= 0.0) {
        return Err(config_error("/residuals", "need n_d, n_alpha >= 1 and d_max_m >= 0"));
    }
    let dir = output_dir(args, &cfg.output_dir)?;
    let k = 2.0 * std::f64::consts::PI * cfg.frequency_ghz * 1e9 / speed_of_light();
    let params = SeriesParams::with_limits(k, 0.0, cfg.q_max, cfg.tail_tol)?;
    let xs = linspace(cfg.x_range_m[0], cfg.x_range_m[1], cfg.n_points);

    let mut e2_max = (0.0_f64, 0.0_f64, cfg.alpha_deg[0]);
    let mut max_terms = 0usize;
    let mut tables = [String::new(), String::new(), String::new()];
    for t in &mut tables {
        t.push_str("x_m");
        for &a in &cfg.alpha_deg {
            t.push(',');
            t.push_str(&alpha_label(a));
        }
        t.push('\n');
    }
    for &x in &xs {
        let mut rows = [x.to_string(), x.to_string(), x.to_string()];
        for &a in &cfg.alpha_deg {
            let alpha = a.to_radians();
            let p = SeriesParams { alpha, ..params };
            max_terms = max_terms.max(structure_series(x, &p).terms);
            let e2 = profile_e2(x, k, alpha, cfg.q_max);
            if e2 > e2_max.0 {
                e2_max = (e2, x, a);
            }
            for (row, v) in rows.iter_mut().zip([
                profile_e(x, k, alpha, cfg.q_max),
                profile_e1(x, k, alpha),
                e2,
            ]) {
                row.push(',');
                row.push_str(&v.to_string());
            }
        }
        for (t, r) in tables.iter_mut().zip(rows) {
            t.push_str(&r);
            t.push('\n');
        }
    }
    for (name, t) in ["e.csv", "e1.csv", "e2.csv"].iter().zip(&tables) {
        write_file(&dir.join(name), t.as_bytes())?;
    }

    let mut residuals = String::from("d_m,alpha_deg,series,quadrature,abs_diff\n");
    let mut max_residual = 0.0_f64;
    let ds = linspace(0.0, cfg.residuals.d_max_m, cfg.residuals.n_d);
    let alphas = linspace(0.0, 180.0, cfg.residuals.n_alpha);
    for &a in &alphas {
        let p = SeriesParams { alpha: a.to_radians(), ..params };
        for &d in &ds {
            let s = structure_series(d, &p).value();
            let q = quadrature_kernel(d, k, p.alpha)?.value;
            let diff = (s - q).abs();
            max_residual = max_residual.max(diff);
            residuals.push_str(&format!("{d},{a},{s},{q},{diff}\n"));
        }
    }
    write_file(&dir.join("residuals.csv"), residuals.as_bytes())?;
    let summary = json!({
        "e2_max": e2_max.0,
        "e2_argmax_x_m": e2_max.1,
        "e2_argmax_alpha_deg": e2_max.2,
        "max_residual": max_residual,
        "max_series_terms": max_terms,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    cfg.output_dir = None;
    write_manifest(
        &dir,
        "theory",
        &cfg,
        json!({
            "wavenumber": k,
            "q_max": cfg.q_max,
            "tail_tol": cfg.tail_tol,
            "max_series_terms": max_terms,
            "max_residual": max_residual,
        }),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FresnelConfig {
    pub data_file: PathBuf,
    /// Named preset; ignored when `column_map` is given.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub column_map: Option<ColumnMap>,
    pub alpha_deg: f64,
    pub frequency_ghz: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance_deg: f64,
    #[serde(default = "default_fresnel_tx")]
    pub tx_radius_m: f64,
    #[serde(default = "default_fresnel_rx")]
    pub rx_radius_m: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1.0
}
fn default_fresnel_tx() -> f64 {
    FRESNEL_TX_RADIUS
}
fn default_fresnel_rx() -> f64 {
    FRESNEL_RX_RADIUS
}

pub fn cmd_fresnel(args: &CommonArgs) -> Result<()> {
    reject(args.seed, "--seed", "fresnel")?;
    let mut cfg: FresnelConfig = load_config(&args.config)?;
    if let Some(a) = args.alpha_deg {
        cfg.alpha_deg = a;
    }
    if let Some(f) = args.freq_ghz {
        cfg.frequency_ghz = f;
    }
    let map = match (&cfg.column_map, &cfg.preset) {
        (Some(m), _) => m.clone(),
        (None, Some(name)) => ColumnMap::preset(name)
            .ok_or_else(|| config_error("/preset", format!("unknown preset `{name}`")))?,
        (None, None) => return Err(config_error("/preset", "set preset or column_map")),
    };
    map.validate()
        .map_err(|e| config_error("/column_map", e.to_string()))?;
    let dir = output_dir(args, &cfg.output_dir)?;
    let records = scattered_records(&parse_fresnel(&cfg.data_file, &map)?);
    let alpha = cfg.alpha_deg.to_radians();
    let freq = cfg.frequency_ghz * 1e9;
    let tol = cfg.tolerance_deg.to_radians();
    let report = coverage(&records, alpha, freq, tol)?;
    write_json(&dir.join("coverage.json"), &report)?;
    let data = extract_bistatic(&records, alpha, freq, tol, (cfg.tx_radius_m, cfg.rx_radius_m))?;
    write_file(&dir.join("dataset.csv"), data.to_csv_string().as_bytes())?;
    cfg.output_dir = None;
    write_manifest(
        &dir,
        "fresnel",
        &cfg,
        json!({
            "n_samples": data.samples.len(),
            "frequency_ghz": report.frequency_ghz,
            "rx_stride_deg": report.rx_stride_deg,
        }),
    )
}
