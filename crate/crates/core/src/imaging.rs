//! Indicator maps over a rectangular grid, peak extraction, localization
//! scoring and raster export.
//!
//! The bifocusing indicator at a sampling point `x` is
//!
//! ```text
//! F(x) = | Σ_n u_scat(r_n, t_n) / (G(t_n, x) G(r_n, x)) |
//! ```
//!
//! Grid values are stored row-major with `iy` as the outer index, `iy = 0`
//! being `y_min`. Each grid point sums its samples pairwise in dataset
//! order, so results do not depend on the number of worker threads.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{element_green, Kernel, Provenance, ScatteredDataset, TARGET_CLEARANCE};
use crate::scene::{wrap_angle, Scene};
use crate::specfun::{ComplexScalar, Point2};
use crate::sum::pairwise_sum;
use crate::theory::{structure_kernel, SeriesParams};

/// Two neighbouring values closer than this are treated as equal when
/// testing for a strict local maximum.
pub const PLATEAU_TOL: f64 = 1e-9;

/// Rectangular sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ImagingGrid {
    /// 128 × 128 over `[-0.1, 0.1]²` m.
    fn default() -> Self {
        ImagingGrid {
            x_min: -0.1,
            x_max: 0.1,
            y_min: -0.1,
            y_max: 0.1,
            nx: 128,
            ny: 128,
        }
    }
}

impl ImagingGrid {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let g = ImagingGrid {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::precondition(format!(
                "grid bounds must satisfy x_min < x_max and y_min < y_max, got [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::precondition(format!(
                "grid needs at least 2 x 2 points, got {} x {}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        if ix + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + ix as f64 * self.dx()
        }
    }

    pub fn y(&self, iy: usize) -> f64 {
        if iy + 1 == self.ny {
            self.y_max
        } else {
            self.y_min + iy as f64 * self.dy()
        }
    }

    pub fn point(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(self.x(ix), self.y(iy))
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// `(ix, iy)` of a flat index.
    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    /// All grid points in storage order.
    pub fn points(&self) -> Vec<Point2> {
        (0..self.len())
            .map(|i| {
                let (ix, iy) = self.cell(i);
                self.point(ix, iy)
            })
            .collect()
    }
}

/// Where the values of a map came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    /// Bistatic angle, rad.
    pub alpha: f64,
    /// Hz.
    pub frequency: f64,
    /// Back-propagation kernel; `None` for theory maps.
    pub kernel: Option<Kernel>,
    /// Dataset provenance; `None` for theory maps.
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMap {
    pub grid: ImagingGrid,
    pub values: Vec<f64>,
    pub normalized: bool,
    pub meta: MapMeta,
}

impl IndicatorMap {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Flat index of the largest value; the first one in storage order on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmax_point(&self) -> Point2 {
        let (ix, iy) = self.grid.cell(self.argmax());
        self.grid.point(ix, iy)
    }

    /// Row `iy` as a slice along x.
    pub fn row(&self, iy: usize) -> &[f64] {
        let start = self.grid.index(0, iy);
        &self.values[start..start + self.grid.nx]
    }
}

/// Bifocusing indicator of `data` on `grid`.
///
/// The far-field kernel takes each element's distance from the origin and
/// polar angle from its stored position.
pub fn indicator_map(data: &ScatteredDataset, grid: &ImagingGrid, kernel: Kernel) -> Result<IndicatorMap> {
    grid.validate()?;
    if data.samples.is_empty() {
        return Err(Error::Degenerate("dataset has no samples".into()));
    }
    let k = data.config.wavenumber();
    let elements: Vec<_> = data
        .samples
        .iter()
        .map(|s| {
            (
                s.tx,
                s.tx.norm(),
                wrap_angle(s.tx.y.atan2(s.tx.x)),
                s.rx,
                s.rx.norm(),
                wrap_angle(s.rx.y.atan2(s.rx.x)),
                s.u_scat,
            )
        })
        .collect();
    let values = grid
        .points()
        .into_par_iter()
        .map(|x| -> Result<f64> {
            let mut terms = Vec::with_capacity(elements.len());
            for &(tx, t_radius, t_angle, rx, r_radius, r_angle, u) in &elements {
                let d = x.distance(tx).min(x.distance(rx));
                if !(d >= TARGET_CLEARANCE) {
                    return Err(Error::Singularity {
                        distance: d,
                        minimum: TARGET_CLEARANCE,
                    });
                }
                let gt = element_green(kernel, k, tx, t_radius, t_angle, x)?;
                let gr = element_green(kernel, k, rx, r_radius, r_angle, x)?;
                terms.push(u / (gt * gr));
            }
            Ok(pairwise_sum::<ComplexScalar>(&terms).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorMap {
        grid: *grid,
        values,
        normalized: false,
        meta: MapMeta {
            alpha: data.config.bistatic_angle,
            frequency: data.config.frequency,
            kernel: Some(kernel),
            provenance: Some(data.provenance),
        },
    })
}

/// Divides by the maximum so that the largest value is exactly 1.
pub fn normalize_map(map: &IndicatorMap) -> Result<IndicatorMap> {
    let max = map.max();
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::Degenerate(format!("map maximum is {max}; cannot normalize")));
    }
    let mut out = map.clone();
    for v in &mut out.values {
        *v /= max;
    }
    // Division by the maximum already yields 1.0 there; pin it regardless.
    let top = out.argmax();
    out.values[top] = 1.0;
    out.normalized = true;
    Ok(out)
}

/// Continuous-limit map `|N k² Σ_m area_m contrast_m K(|x − z_m|)|` for the
/// far-field indicator with `n_samples` samples.
pub fn theory_map(
    scene: &Scene,
    grid: &ImagingGrid,
    p: &SeriesParams,
    n_samples: usize,
) -> Result<IndicatorMap> {
    grid.validate()?;
    p.validate()?;
    let k = p.wavenumber;
    let scale = n_samples as f64 * k * k;
    let values = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let terms: Vec<f64> = scene
                .targets
                .iter()
                .map(|t| t.area * t.contrast() * structure_kernel(x.distance(t.center), p))
                .collect();
            (scale * pairwise_sum(&terms)).abs()
        })
        .collect();
    Ok(IndicatorMap {
        grid: *grid,
        values,
        normalized: false,
        meta: MapMeta {
            alpha: wrap_angle(p.alpha),
            frequency: k / (2.0 * std::f64::consts::PI * (crate::scene::EPS0 * crate::scene::MU0).sqrt()),
            kernel: None,
            provenance: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: Point2,
    pub value: f64,
    pub ix: usize,
    pub iy: usize,
}

/// Peaks in descending value order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakList {
    pub threshold: f64,
    pub exclusion_radius: f64,
    pub peaks: Vec<Peak>,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

/// Default exclusion radius: a quarter wavelength.
pub fn default_exclusion_radius(frequency: f64) -> f64 {
    0.25 * crate::scene::speed_of_light() / frequency
}

/// Local maxima of a normalized map at or above `threshold`, selected
/// greedily in descending value and at least `exclusion_radius` apart.
///
/// A cell qualifies when no neighbour (8-connected, clipped at the border)
/// exceeds it and at least one neighbour is lower by more than
/// [`PLATEAU_TOL`]; flat maps therefore have no peaks. Ties in value are
/// broken by storage order.
pub fn extract_peaks(map: &IndicatorMap, threshold: f64, exclusion_radius: f64) -> Result<PeakList> {
    if !map.normalized {
        return Err(Error::precondition("extract_peaks needs a normalized map"));
    }
    if !(exclusion_radius >= 0.0) {
        return Err(Error::precondition("exclusion radius must be non-negative"));
    }
    let g = &map.grid;
    let mut candidates = Vec::new();
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let v = map.get(ix, iy);
            if !(v >= threshold) {
                continue;
            }
            let mut is_max = true;
            let mut lowest = f64::INFINITY;
            for jy in iy.saturating_sub(1)..=(iy + 1).min(g.ny - 1) {
                for jx in ix.saturating_sub(1)..=(ix + 1).min(g.nx - 1) {
                    if (jx, jy) == (ix, iy) {
                        continue;
                    }
                    let w = map.get(jx, jy);
                    if w > v {
                        is_max = false;
                    }
                    lowest = lowest.min(w);
                }
            }
            if is_max && v - lowest > PLATEAU_TOL {
                candidates.push(Peak {
                    location: g.point(ix, iy),
                    value: v,
                    ix,
                    iy,
                });
            }
        }
    }
    // Stable sort keeps storage order among equal values.
    candidates.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut peaks: Vec<Peak> = Vec::new();
    for c in candidates {
        if peaks
            .iter()
            .all(|p| p.location.distance(c.location) >= exclusion_radius)
        {
            peaks.push(c);
        }
    }
    Ok(PeakList {
        threshold,
        exclusion_radius,
        peaks,
    })
}

/// Optimal one-to-one matching of peaks to true target centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// Distance from each target to its assigned peak; `None` when missed.
    pub errors: Vec<Option<f64>>,
    /// Assigned peak index per target.
    pub assignment: Vec<Option<usize>>,
    /// Peaks assigned to no target.
    pub unmatched_peaks: Vec<usize>,
}

impl LocalizationReport {
    pub fn missed(&self) -> usize {
        self.errors.iter().filter(|e| e.is_none()).count()
    }
}

/// Minimum-total-distance assignment between peaks and target centers.
pub fn localization_error(peaks: &PeakList, scene: &Scene) -> LocalizationReport {
    let n_t = scene.targets.len();
    let n_p = peaks.peaks.len();
    let mut errors = vec![None; n_t];
    let mut assignment = vec![None; n_t];
    let mut used = vec![false; n_p];
    if n_t > 0 && n_p > 0 {
        let transpose = n_t > n_p;
        let (rows, cols) = if transpose { (n_p, n_t) } else { (n_t, n_p) };
        let cost: Vec<Vec<f64>> = (0..rows)
            .map(|i| {
                (0..cols)
                    .map(|j| {
                        let (t, p) = if transpose { (j, i) } else { (i, j) };
                        scene.targets[t].center.distance(peaks.peaks[p].location)
                    })
                    .collect()
            })
            .collect();
        for (i, j) in hungarian(&cost).into_iter().enumerate() {
            let (t, p) = if transpose { (j, i) } else { (i, j) };
            errors[t] = Some(cost[i][j]);
            assignment[t] = Some(p);
            used[p] = true;
        }
    }
    LocalizationReport {
        errors,
        assignment,
        unmatched_peaks: (0..n_p).filter(|&p| !used[p]).collect(),
    }
}

/// Column assigned to each row of a `rows <= cols` cost matrix, minimising
/// the total (potential-based Hungarian method).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFormat {
    Csv,
    Pgm,
}

fn meta_lines(map: &IndicatorMap) -> Vec<String> {
    let g = &map.grid;
    vec![
        format!("alpha_deg={}", map.meta.alpha.to_degrees()),
        format!("frequency_ghz={}", map.meta.frequency / 1e9),
        format!("kernel={}", map.meta.kernel.map_or("theory", Kernel::as_str)),
        format!("provenance={}", map.meta.provenance.map_or("theory", Provenance::as_str)),
        format!("normalized={}", map.normalized),
        format!("grid={},{},{},{},{},{}", g.nx, g.ny, g.x_min, g.x_max, g.y_min, g.y_max),
    ]
}

/// Serializes a map. CSV: `#` metadata lines, header `x_m,y_m,value`, one row
/// per point in storage order. PGM: binary P5, 16-bit big-endian, `[0, max]`
/// scaled linearly onto `[0, 65535]`, first image row at `y_max`.
pub fn export_map(map: &IndicatorMap, format: MapFormat) -> Result<Vec<u8>> {
    if map.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::precondition("map contains non-finite values"));
    }
    let g = &map.grid;
    match format {
        MapFormat::Csv => {
            let mut s = String::new();
            for line in meta_lines(map) {
                let _ = writeln!(s, "# {line}");
            }
            s.push_str("x_m,y_m,value\n");
            for (i, v) in map.values.iter().enumerate() {
                let (ix, iy) = g.cell(i);
                let _ = writeln!(s, "{},{},{}", g.x(ix), g.y(iy), v);
            }
            Ok(s.into_bytes())
        }
        MapFormat::Pgm => {
            let max = map.max();
            let mut out = Vec::with_capacity(64 + 2 * map.values.len());
            out.extend_from_slice(b"P5\n");
            for line in meta_lines(map) {
                out.extend_from_slice(format!("# {line}\n").as_bytes());
            }
            out.extend_from_slice(format!("{} {}\n65535\n", g.nx, g.ny).as_bytes());
            for iy in (0..g.ny).rev() {
                for ix in 0..g.nx {
                    let v = map.get(ix, iy);
                    let level = if max > 0.0 {
                        (v / max * 65535.0).round().clamp(0.0, 65535.0) as u16
                    } else {
                        0
                    };
                    out.extend_from_slice(&level.to_be_bytes());
                }
            }
            Ok(out)
        }
    }
}

/// [`export_map`] written to `path`.
pub fn write_map(map: &IndicatorMap, format: MapFormat, path: &Path) -> Result<()> {
    let bytes = export_map(map, format)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Parses the CSV produced by [`export_map`].
pub fn import_map_csv(text: &str) -> Result<IndicatorMap> {
    let mut meta = std::collections::HashMap::new();
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some(c) = raw.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !header_seen {
            if raw.trim() != "x_m,y_m,value" {
                return Err(Error::Parse {
                    line,
                    token: raw.to_string(),
                    message: "expected header x_m,y_m,value".into(),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                token: raw.to_string(),
                message: "expected 3 fields".into(),
            });
        }
        let v = fields[2].trim();
        rows.push(v.parse::<f64>().map_err(|_| Error::Parse {
            line,
            token: v.to_string(),
            message: "value is not a number".into(),
        })?);
    }
    let field = |key: &str| -> Result<&String> {
        meta.get(key)
            .ok_or_else(|| Error::Parse {
                line: 0,
                token: key.to_string(),
                message: "missing metadata line".into(),
            })
    };
    let num = |tok: &str| -> Result<f64> {
        tok.parse::<f64>().map_err(|_| Error::Parse {
            line: 0,
            token: tok.to_string(),
            message: "metadata value is not a number".into(),
        })
    };
    let grid_fields: Vec<&str> = field("grid")?.split(',').collect();
    if grid_fields.len() != 6 {
        return Err(Error::Parse {
            line: 0,
            token: field("grid")?.clone(),
            message: "grid needs nx,ny,x_min,x_max,y_min,y_max".into(),
        });
    }
    let count = |tok: &str| -> Result<usize> {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line: 0,
            token: tok.to_string(),
            message: "grid size is not an integer".into(),
        })
    };
    let grid = ImagingGrid::new(
        (num(grid_fields[2])?, num(grid_fields[3])?),
        (num(grid_fields[4])?, num(grid_fields[5])?),
        count(grid_fields[0])?,
        count(grid_fields[1])?,
    )?;
    if rows.len() != grid.len() {
        return Err(Error::Parse {
            line: 0,
            token: rows.len().to_string(),
            message: format!("expected {} rows", grid.len()),
        });
    }
    let kernel = match field("kernel")?.as_str() {
        "exact" => Some(Kernel::Exact),
        "farfield" => Some(Kernel::Farfield),
        _ => None,
    };
    let provenance = match field("provenance")?.as_str() {
        "synthetic_exact" => Some(Provenance::SyntheticExact),
        "synthetic_farfield" => Some(Provenance::SyntheticFarfield),
        "fresnel" => Some(Provenance::Fresnel),
        _ => None,
    };
    Ok(IndicatorMap {
        grid,
        values: rows,
        normalized: field("normalized")? == "true",
        meta: MapMeta {
            alpha: num(field("alpha_deg")?)?.to_radians(),
            frequency: num(field("frequency_ghz")?)? * 1e9,
            kernel,
            provenance,
        },
    })
}
