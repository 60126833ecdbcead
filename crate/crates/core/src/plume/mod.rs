//! Synthetic meteorology and ground-level tracer plume on a space-time grid.
//!
//! A continuous point release is dispersed by a Gaussian plume with
//! power-law spread and ground reflection, advected by a wind that turns
//! steadily over the run. Meteorological columns are smooth random fields
//! plus trends: pressure and temperature follow a static terrain, water
//! vapour a static moisture gradient, the surface fluxes and turbulence a
//! diurnal cycle, and the wind components the turning mean wind. Together
//! they carry enough information about place and time for the plume to be
//! learnable from meteorology alone.

mod noise;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::tabular::{Dataset, SCENARIO_COLUMNS};
use crate::{Error, Result};

pub use stats::{scenario_stats, ColumnSummary, ScenarioStats};

const METERS_PER_DEG_LAT: f64 = 111_320.0;
const MIN_WIND: f64 = 0.5;
const CORRELATION_CELLS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

/// Wind directions are meteorological: degrees clockwise from north that the
/// wind blows from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindRegime {
    pub initial_direction: f64,
    pub final_direction: f64,
    pub mean_speed: f64,
}

/// Power-law plume spread `sigma = a * x^b` (x in metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dispersion {
    pub a_y: f64,
    pub b_y: f64,
    pub a_z: f64,
    pub b_z: f64,
}

impl Default for Dispersion {
    // Neutral stability (class D).
    fn default() -> Self {
        Self {
            a_y: 0.08,
            b_y: 0.894,
            a_z: 0.06,
            b_z: 0.915,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid_size: usize,
    pub cell_m: f64,
    pub n_timesteps: usize,
    pub step_minutes: f64,
    /// Local time of the first step, in hours.
    pub start_hour: f64,
    pub release_point: LatLon,
    /// Centre of the domain; the release point when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_center: Option<LatLon>,
    /// kg/s
    pub release_rate: f64,
    /// Effective release height in metres.
    pub release_height_m: f64,
    pub wind: WindRegime,
    pub dispersion: Dispersion,
    /// ppm-V per kg/m³ of modelled ground-level concentration.
    pub ppm_scale: f64,
    pub target_positive_fraction: f64,
    /// Fixed clamp floor in ppm-V; by default the floor is the quantile that
    /// yields `target_positive_fraction`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor_ppm: Option<f64>,
    /// Multiplier on every meteorological perturbation.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid_size: 61,
            cell_m: 125.0,
            n_timesteps: 61,
            step_minutes: 6.0,
            start_hour: 12.0,
            release_point: LatLon {
                lat: 33.25,
                lon: -81.65,
            },
            domain_center: None,
            release_rate: 147_000.0 / 3600.0,
            release_height_m: 100.0,
            wind: WindRegime {
                initial_direction: 292.5,
                final_direction: 225.0,
                mean_speed: 3.0,
            },
            dispersion: Dispersion::default(),
            ppm_scale: 4000.0,
            target_positive_fraction: 0.0294,
            floor_ppm: None,
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn center(&self) -> LatLon {
        self.domain_center.unwrap_or(self.release_point)
    }

    pub fn n_rows(&self) -> usize {
        self.grid_size * self.grid_size * self.n_timesteps
    }

    fn meters_per_deg_lon(&self) -> f64 {
        METERS_PER_DEG_LAT * self.center().lat.to_radians().cos()
    }

    /// Release position in metres east and north of the domain centre.
    pub fn release_offset_m(&self) -> (f64, f64) {
        let c = self.center();
        (
            (self.release_point.lon - c.lon) * self.meters_per_deg_lon(),
            (self.release_point.lat - c.lat) * METERS_PER_DEG_LAT,
        )
    }

    /// Cell centre in metres east and north of the domain centre.
    pub fn cell_offset_m(&self, col: usize, row: usize) -> (f64, f64) {
        let mid = (self.grid_size as f64 - 1.0) / 2.0;
        ((col as f64 - mid) * self.cell_m, (row as f64 - mid) * self.cell_m)
    }

    pub fn cell_lat_lon(&self, col: usize, row: usize) -> LatLon {
        let (e, n) = self.cell_offset_m(col, row);
        let c = self.center();
        LatLon {
            lat: c.lat + n / METERS_PER_DEG_LAT,
            lon: c.lon + e / self.meters_per_deg_lon(),
        }
    }

    fn progress(&self, t: usize) -> f64 {
        if self.n_timesteps > 1 {
            t as f64 / (self.n_timesteps - 1) as f64
        } else {
            0.0
        }
    }

    /// Wind at timestep `t`: direction (from, degrees) and speed (m/s).
    pub fn wind_at(&self, t: usize) -> (f64, f64) {
        let p = self.progress(t);
        let w = &self.wind;
        let delta = (w.final_direction - w.initial_direction + 540.0).rem_euclid(360.0) - 180.0;
        let dir = (w.initial_direction + delta * p).rem_euclid(360.0);
        let speed = w.mean_speed * (1.0 + 0.15 * (std::f64::consts::TAU * 1.5 * p + 0.7).sin());
        (dir, speed.max(MIN_WIND))
    }

    /// Unit vector (east, north) the wind blows toward at timestep `t`.
    pub fn heading_at(&self, t: usize) -> (f64, f64) {
        let to = (self.wind_at(t).0 + 180.0).to_radians();
        (to.sin(), to.cos())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.grid_size < 4 {
            return bad(format!("grid_size {} is below 4", self.grid_size));
        }
        if self.n_timesteps == 0 {
            return bad("n_timesteps must be at least 1".into());
        }
        let positive = [
            ("cell_m", self.cell_m),
            ("step_minutes", self.step_minutes),
            ("release_rate", self.release_rate),
            ("wind.mean_speed", self.wind.mean_speed),
            ("ppm_scale", self.ppm_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.release_height_m >= 0.0 && self.noise_scale >= 0.0) {
            return bad("release_height_m and noise_scale must be non-negative".into());
        }
        let d = &self.dispersion;
        if ![d.a_y, d.b_y, d.a_z, d.b_z].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad("dispersion coefficients must be positive".into());
        }
        if !(self.target_positive_fraction > 0.0 && self.target_positive_fraction < 0.5) {
            return bad(format!(
                "target_positive_fraction {} is outside (0, 0.5)",
                self.target_positive_fraction
            ));
        }
        if let Some(f) = self.floor_ppm.filter(|f| !(*f >= 0.0)) {
            return bad(format!("floor_ppm {f} is negative"));
        }
        let half = (self.grid_size as f64 - 1.0) / 2.0 * self.cell_m + self.cell_m / 2.0;
        let (rx, ry) = self.release_offset_m();
        if rx.abs() > half || ry.abs() > half {
            return bad("release point lies outside the domain".into());
        }
        Ok(())
    }
}

/// Pre-clamp ground-level concentration (ppm-V) for every timestep,
/// row-major over the grid (row = north index, column = east index).
#[derive(Debug, Clone, PartialEq)]
pub struct PlumeField {
    pub grid_size: usize,
    pub concentration: Vec<Vec<f64>>,
}

impl PlumeField {
    pub fn at(&self, t: usize, col: usize, row: usize) -> f64 {
        self.concentration[t][row * self.grid_size + col]
    }

    /// `(col, row)` of the largest concentration at timestep `t`.
    pub fn argmax(&self, t: usize) -> (usize, usize) {
        let c = &self.concentration[t];
        let mut best = 0;
        for i in 1..c.len() {
            if c[i] > c[best] {
                best = i;
            }
        }
        (best % self.grid_size, best / self.grid_size)
    }
}

/// Gaussian plume with ground reflection at a point `(down, cross)` metres
/// from the source in wind-aligned coordinates. Zero at and upwind of the
/// source.
pub fn gaussian_plume(q: f64, u: f64, h: f64, d: &Dispersion, down: f64, cross: f64) -> f64 {
    if down <= 0.0 {
        return 0.0;
    }
    let sy = d.a_y * down.powf(d.b_y);
    let sz = d.a_z * down.powf(d.b_z);
    let shape = (-cross * cross / (2.0 * sy * sy)).exp() * (-h * h / (2.0 * sz * sz)).exp()
        / (std::f64::consts::PI * u.max(MIN_WIND) * sy * sz);
    q * shape
}

pub fn plume_field(cfg: &ScenarioConfig) -> Result<PlumeField> {
    cfg.validate()?;
    let n = cfg.grid_size;
    let (rx, ry) = cfg.release_offset_m();
    let concentration = (0..cfg.n_timesteps)
        .map(|t| {
            let (_, speed) = cfg.wind_at(t);
            let (hx, hy) = cfg.heading_at(t);
            let mut c = vec![0.0; n * n];
            for row in 0..n {
                for col in 0..n {
                    let (e, no) = cfg.cell_offset_m(col, row);
                    let (dx, dy) = (e - rx, no - ry);
                    let down = dx * hx + dy * hy;
                    let cross = -dx * hy + dy * hx;
                    let per_unit = gaussian_plume(1.0, speed, cfg.release_height_m, &cfg.dispersion, down, cross);
                    c[row * n + col] = cfg.release_rate * (cfg.ppm_scale * per_unit);
                }
            }
            c
        })
        .collect();
    Ok(PlumeField {
        grid_size: n,
        concentration,
    })
}

/// A generated scenario and the clamp it used.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dataset: Dataset,
    pub floor_ppm: f64,
    pub positive_fraction: f64,
    pub peak_ppm: f64,
}

/// Floor such that the fraction of cells strictly above it is as close to
/// `target` as the values allow.
fn quantile_floor(values: &[f64], target: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = ((target * values.len() as f64).round() as usize).clamp(1, values.len());
    if k < sorted.len() {
        sorted[k]
    } else {
        0.0
    }
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Dataset> {
    Ok(generate(cfg)?.dataset)
}

/// Generate the full scenario table, timestep-major, then north-to-south
/// rows, then west-to-east cells.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    let field = plume_field(cfg)?;
    let all: Vec<f64> = field.concentration.concat();
    let total = all.len() as f64;
    let floor = match cfg.floor_ppm {
        Some(f) => f,
        None => quantile_floor(&all, cfg.target_positive_fraction),
    };
    let positives = all.iter().filter(|&&c| c > floor).count();
    let achieved = positives as f64 / total;
    let target = cfg.target_positive_fraction;
    if (achieved - target).abs() > 0.2 * target {
        return Err(Error::Degenerate(format!(
            "positive tracer fraction {achieved:.5} is not within 20% of the target {target}"
        )));
    }
    let peak = all.iter().copied().fold(0.0, f64::max);

    let n = cfg.grid_size;
    let gen_seed = rng::substream(cfg.seed, "generate");
    let terrain = Terrain::new(cfg, rng::substream(gen_seed, "terrain"));
    let blocks: Vec<Vec<[f64; 15]>> = (0..cfg.n_timesteps)
        .into_par_iter()
        .map(|t| timestep_rows(cfg, &terrain, &field.concentration[t], floor, t, gen_seed))
        .collect();
    let mut columns = vec![Vec::with_capacity(cfg.n_rows()); SCENARIO_COLUMNS.len()];
    for block in blocks {
        for row in block {
            for (c, v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        }
    }
    debug_assert_eq!(columns[0].len(), n * n * cfg.n_timesteps);
    let dataset = Dataset::new(SCENARIO_COLUMNS.iter().map(|s| s.to_string()).collect(), columns)?;
    Ok(Scenario {
        dataset,
        floor_ppm: floor,
        positive_fraction: achieved,
        peak_ppm: peak,
    })
}

/// Static surface fields shared by every timestep.
struct Terrain {
    /// Elevation in metres.
    elevation: Vec<f64>,
    /// Dimensionless moisture index, roughly in [-1.2, 1.2].
    moisture: Vec<f64>,
}

impl Terrain {
    fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        let n = cfg.grid_size;
        let mut r = rng::seeded(seed);
        let bumps = noise::smooth_field(n, CORRELATION_CELLS, &mut r);
        let wet = noise::smooth_field(n, CORRELATION_CELLS, &mut r);
        let s = cfg.noise_scale;
        let mut elevation = vec![0.0; n * n];
        let mut moisture = vec![0.0; n * n];
        for row in 0..n {
            for col in 0..n {
                let (ex, ny) = unit_coords(n, col, row);
                let i = row * n + col;
                // Rises from about 30 m in the south-west to 128 m in the north-east.
                elevation[i] = 79.0 + 40.0 * ny + 8.0 * ex + 2.0 * s * bumps[i];
                moisture[i] = 0.1 * ny - 0.8 * ex + 0.05 * s * wet[i];
            }
        }
        Self { elevation, moisture }
    }
}

fn unit_coords(n: usize, col: usize, row: usize) -> (f64, f64) {
    let mid = (n as f64 - 1.0) / 2.0;
    ((col as f64 - mid) / mid, (row as f64 - mid) / mid)
}

/// Solar forcing in [0, 1]: zero at night, peaking at noon.
fn diurnal(hour: f64) -> f64 {
    (std::f64::consts::PI * (hour - 6.0) / 12.0).sin().max(0.0)
}

/// Saturation vapour pressure (hPa) over water.
fn saturation_hpa(temp_c: f64) -> f64 {
    6.112 * (17.67 * temp_c / (temp_c + 243.5)).exp()
}

fn timestep_rows(
    cfg: &ScenarioConfig,
    terrain: &Terrain,
    conc: &[f64],
    floor: f64,
    t: usize,
    gen_seed: u64,
) -> Vec<[f64; 15]> {
    let n = cfg.grid_size;
    let mut r = rng::seeded(rng::child(gen_seed, t as u64));
    let s = cfg.noise_scale;
    let mut field = || noise::smooth_field(n, CORRELATION_CELLS, &mut r);
    let (n_temp, n_pres, n_vap, n_tke, n_shf, n_lhf, n_u, n_v, n_w) = (
        field(),
        field(),
        field(),
        field(),
        field(),
        field(),
        field(),
        field(),
        field(),
    );
    let p = cfg.progress(t);
    let minutes = t as f64 * cfg.step_minutes;
    let hour = cfg.start_hour + minutes / 60.0;
    let sun = diurnal(hour);
    let (_, speed) = cfg.wind_at(t);
    let (hx, hy) = cfg.heading_at(t);
    let (mean_u, mean_v) = (speed * hx, speed * hy);

    let mut rows = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let i = row * n + col;
            let pos = cfg.cell_lat_lon(col, row);
            let elev = terrain.elevation[i];
            let wet = terrain.moisture[i];
            let (ex, ny) = unit_coords(n, col, row);

            let temperature = 18.0 + 9.0 * sun - 0.0065 * elev + 0.4 * wet + 0.05 * s * n_temp[i];
            let pressure = 1013.25 - 0.119 * elev - 0.3 * p + 0.01 * s * n_pres[i];
            let water_vapor = 10.5 + 2.0 * wet + 0.15 * p + 0.03 * s * n_vap[i];
            // Vapour pressure from mixing ratio (g/kg) at the local pressure.
            let e = water_vapor / 1000.0 * pressure / (0.622 + water_vapor / 1000.0);
            let relative_humidity = (100.0 * e / saturation_hpa(temperature)).clamp(1.0, 100.0);
            let tke = (0.25 + 1.1 * sun + 0.04 * speed * speed + 0.05 * ex + 0.02 * s * n_tke[i]).max(0.01);
            let sensible = 20.0 + 260.0 * sun * (1.0 - 0.3 * wet) + 3.0 * s * n_shf[i];
            let latent = 40.0 + 180.0 * sun * (1.0 + 0.4 * wet) + 3.0 * s * n_lhf[i];
            // Flow speeds up over the higher ground and turns slightly with it.
            let (du, dv) = (0.08 * ny, -0.08 * ex);
            let wind_u = mean_u * (1.0 + 0.05 * ny) + du + 0.03 * s * n_u[i];
            let wind_v = mean_v * (1.0 + 0.05 * ny) + dv + 0.03 * s * n_v[i];
            let wind_w = 0.02 * (ex + ny) * sun + 0.01 * s * n_w[i];

            let c = conc[i];
            let tracer = if c > floor { c } else { 0.0 };
            rows.push([
                minutes,
                pos.lat,
                pos.lon,
                temperature,
                relative_humidity,
                pressure,
                water_vapor,
                tke,
                0.0,
                sensible,
                latent,
                wind_u,
                wind_v,
                wind_w,
                tracer,
            ]);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            grid_size: 21,
            cell_m: 360.0,
            n_timesteps: 7,
            step_minutes: 60.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn default_domain_geometry() {
        let c = ScenarioConfig::default();
        assert_eq!(c.n_rows(), 226_981);
        let sw = c.cell_lat_lon(0, 0);
        let ne = c.cell_lat_lon(60, 60);
        assert!((sw.lat - 33.216).abs() < 0.001 && (ne.lat - 33.284).abs() < 0.001);
        assert!((sw.lon + 81.69).abs() < 0.001 && (ne.lon + 81.61).abs() < 0.001);
        assert!((c.release_rate - 40.83).abs() < 0.01);
        let (d0, _) = c.wind_at(0);
        let (d1, _) = c.wind_at(60);
        assert!((d0 - 292.5).abs() < 1e-9 && (d1 - 225.0).abs() < 1e-9);
    }

    #[test]
    fn plume_is_linear_in_release_rate() {
        let c = small();
        let a = plume_field(&c).unwrap();
        let b = plume_field(&ScenarioConfig { release_rate: 2.0 * c.release_rate, ..c }).unwrap();
        let mut positive = 0;
        for (x, y) in a.concentration.concat().iter().zip(b.concentration.concat()) {
            // Exact wherever the value is not subnormal.
            if x.is_normal() {
                assert_eq!(2.0 * x, y);
                positive += 1;
            } else {
                assert!((2.0 * x - y).abs() <= 2.0 * f64::MIN_POSITIVE);
            }
        }
        assert!(positive > 0);
    }

    #[test]
    fn peak_lies_downwind() {
        let c = ScenarioConfig::default();
        let f = plume_field(&c).unwrap();
        let (rx, ry) = c.release_offset_m();
        for t in 0..c.n_timesteps {
            let (col, row) = f.argmax(t);
            let (e, n) = c.cell_offset_m(col, row);
            let (hx, hy) = c.heading_at(t);
            let (dx, dy) = (e - rx, n - ry);
            let cos = (dx * hx + dy * hy) / (dx * dx + dy * dy).sqrt();
            assert!(cos >= std::f64::consts::FRAC_1_SQRT_2, "timestep {t}: cos {cos}");
        }
    }

    #[test]
    fn small_scenario_is_deterministic_and_valid() {
        let c = small();
        let a = generate(&c).unwrap();
        let b = generate(&c).unwrap();
        assert_eq!(a, b);
        let ds = &a.dataset;
        assert_eq!(ds.n_rows(), 21 * 21 * 7);
        assert_eq!(ds.column_names(), SCENARIO_COLUMNS.map(String::from));
        assert!(ds.column("precipitation_rate").unwrap().iter().all(|&v| v == 0.0));
        assert!(ds.column("tracer_concentration").unwrap().iter().all(|&v| v >= 0.0));
        let other = generate(&ScenarioConfig { seed: 1, ..c }).unwrap();
        assert_ne!(other.dataset, a.dataset);
    }

    #[test]
    fn unreachable_fraction_is_reported() {
        let c = ScenarioConfig {
            release_rate: 1e-12,
            floor_ppm: Some(0.05),
            ..small()
        };
        let err = generate(&c).unwrap_err().to_string();
        assert!(err.contains("0.00000"), "{err}");
    }

    #[test]
    fn invalid_configs() {
        for c in [
            ScenarioConfig { release_rate: 0.0, ..small() },
            ScenarioConfig { grid_size: 3, ..small() },
            ScenarioConfig { n_timesteps: 0, ..small() },
            ScenarioConfig {
                release_point: LatLon { lat: 40.0, lon: -81.65 },
                domain_center: Some(LatLon { lat: 33.25, lon: -81.65 }),
                ..small()
            },
        ] {
            assert!(matches!(generate(&c), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn config_toml_round_trip_and_partial_files() {
        let c = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
        let p = ScenarioConfig::from_toml("grid_size = 31\nseed = 4\n").unwrap();
        assert_eq!((p.grid_size, p.seed, p.n_timesteps), (31, 4, 61));
        assert!(ScenarioConfig::from_toml("gird_size = 31").is_err());
    }
}
