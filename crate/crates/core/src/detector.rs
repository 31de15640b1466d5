//! A toy barrel detector: concentric cylindrical layers in a uniform
//! solenoid field, a helix generator for synthetic events, and a
//! TrackML-like hit CSV format.
//!
//! Particles start at `(0, 0, z0)`. In the transverse plane a track is a
//! circle through the origin of radius `R = pt / (0.3 B |q|)`; it reaches a
//! layer of radius `r` iff `2R >= r`, after turning by `psi = 2 asin(r / 2R)`.
//! The hit azimuth is `phi0 - q psi / 2` and `z = z0 + cot_theta * R psi`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const CSV_HEADER: &str = "hit_id,x,y,z,layer,particle_id";

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorGeometry {
    layer_radii: Vec<f64>,
    half_length_z: f64,
    magnetic_field: f64,
}

impl DetectorGeometry {
    pub fn new(layer_radii: Vec<f64>, half_length_z: f64, magnetic_field: f64) -> Result<Self> {
        if layer_radii.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "detector needs at least 3 layers, got {}",
                layer_radii.len()
            )));
        }
        if layer_radii[0] <= 0.0 || layer_radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "layer radii must be positive and strictly increasing".into(),
            ));
        }
        if magnetic_field.is_nan() || magnetic_field <= 0.0 {
            return Err(Error::InvalidInput("magnetic field must be positive".into()));
        }
        if half_length_z.is_nan() || half_length_z <= 0.0 {
            return Err(Error::InvalidInput("half_length_z must be positive".into()));
        }
        Ok(Self {
            layer_radii,
            half_length_z,
            magnetic_field,
        })
    }

    pub fn layer_radii(&self) -> &[f64] {
        &self.layer_radii
    }

    pub fn n_layers(&self) -> usize {
        self.layer_radii.len()
    }

    pub fn half_length_z(&self) -> f64 {
        self.half_length_z
    }

    pub fn magnetic_field(&self) -> f64 {
        self.magnetic_field
    }
}

impl Default for DetectorGeometry {
    fn default() -> Self {
        Self {
            layer_radii: vec![0.032, 0.072, 0.116, 0.172],
            half_length_z: 0.5,
            magnetic_field: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub charge: i8,
    /// Transverse momentum in GeV.
    pub pt: f64,
    pub phi0: f64,
    pub z0: f64,
    pub cot_theta: f64,
}

impl Particle {
    /// Transverse helix radius in meters for a field in Tesla.
    pub fn helix_radius(&self, magnetic_field: f64) -> f64 {
        helix_radius(self.pt, magnetic_field, self.charge)
    }

    /// Unsmeared crossing point with the cylinder of radius `r`, if reached.
    pub fn crossing(&self, r: f64, magnetic_field: f64) -> Option<[f64; 3]> {
        let big_r = self.helix_radius(magnetic_field);
        if 2.0 * big_r < r {
            return None;
        }
        let psi = 2.0 * (r / (2.0 * big_r)).min(1.0).asin();
        let phi = self.phi0 - f64::from(self.charge.signum()) * psi / 2.0;
        let z = self.z0 + self.cot_theta * big_r * psi;
        Some([r * phi.cos(), r * phi.sin(), z])
    }
}

pub fn helix_radius(pt: f64, magnetic_field: f64, charge: i8) -> f64 {
    pt / (0.3 * magnetic_field * f64::from(charge.unsigned_abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub layer: usize,
    pub truth_particle: Option<u64>,
}

impl Hit {
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Azimuth in `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }
}

/// Wraps into `[0, 2π)`.
pub fn normalize_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps a difference into `(-π, π]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Event {
    pub hits: Vec<Hit>,
    /// Empty when the event was loaded from a file without truth records.
    pub particles: Vec<Particle>,
    pub density: usize,
}

impl Event {
    pub fn hit_index(&self) -> HashMap<u64, &Hit> {
        self.hits.iter().map(|h| (h.id, h)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for h in &self.hits {
            if !seen.insert(h.id) {
                return Err(Error::InvalidInput(format!("duplicate hit id {}", h.id)));
            }
        }
        if !self.particles.is_empty() {
            let ids: HashSet<u64> = self.particles.iter().map(|p| p.id).collect();
            if let Some(h) = self
                .hits
                .iter()
                .find(|h| h.truth_particle.is_some_and(|p| !ids.contains(&p)))
            {
                return Err(Error::InvalidInput(format!(
                    "hit {} references unknown particle {:?}",
                    h.id, h.truth_particle
                )));
            }
        }
        Ok(())
    }
}

/// Knobs for [`generate_event_with`]. Defaults give a clean, fully
/// efficient detector with 50 µm smearing.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    pub smearing_sigma: f64,
    /// Probability that a crossed layer records a hit.
    pub hit_efficiency: f64,
    /// Uniformly scattered hits added per layer, with no truth particle.
    pub noise_hits_per_layer: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            smearing_sigma: 50e-6,
            hit_efficiency: 1.0,
            noise_hits_per_layer: 0,
        }
    }
}

pub fn generate_event(
    geometry: &DetectorGeometry,
    density: usize,
    smearing_sigma: f64,
    seed: u64,
) -> Result<Event> {
    let options = GeneratorOptions {
        smearing_sigma,
        ..GeneratorOptions::default()
    };
    generate_event_with(geometry, density, &options, seed)
}

pub fn generate_event_with(
    geometry: &DetectorGeometry,
    density: usize,
    options: &GeneratorOptions,
    seed: u64,
) -> Result<Event> {
    if density == 0 {
        return Err(Error::InvalidInput("density must be at least 1".into()));
    }
    if geometry.n_layers() < 3 {
        return Err(Error::InvalidInput("detector needs at least 3 layers".into()));
    }
    if options.smearing_sigma.is_nan() || options.smearing_sigma < 0.0 {
        return Err(Error::InvalidInput("smearing sigma must be non-negative".into()));
    }
    if !(0.0..=1.0).contains(&options.hit_efficiency) {
        return Err(Error::InvalidInput("hit efficiency must lie in [0, 1]".into()));
    }

    let mut rng = rng_from_seed(seed);
    let z0_dist = Normal::new(0.0, 0.05).expect("fixed width");
    let smear = Normal::new(0.0, options.smearing_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (ln_lo, ln_hi) = (0.5f64.ln(), 5.0f64.ln());
    let b = geometry.magnetic_field();

    let mut particles = Vec::with_capacity(density);
    let mut hits = Vec::new();
    for pid in 0..density as u64 {
        let particle = Particle {
            id: pid,
            charge: if rng.random::<bool>() { 1 } else { -1 },
            pt: rng.random_range(ln_lo..ln_hi).exp(),
            phi0: rng.random_range(0.0..TAU),
            z0: z0_dist.sample(&mut rng),
            cot_theta: rng.random_range(-1.0..=1.0),
        };
        for (layer, &r) in geometry.layer_radii().iter().enumerate() {
            let Some([x, y, z]) = particle.crossing(r, b) else {
                continue;
            };
            if z.abs() > geometry.half_length_z() {
                continue;
            }
            // Draw unconditionally so the stream does not depend on the
            // efficiency setting.
            let keep = rng.random::<f64>();
            let (dx, dy, dz) = if options.smearing_sigma > 0.0 {
                (
                    smear.sample(&mut rng),
                    smear.sample(&mut rng),
                    smear.sample(&mut rng),
                )
            } else {
                (0.0, 0.0, 0.0)
            };
            if keep >= options.hit_efficiency {
                continue;
            }
            hits.push(Hit {
                id: hits.len() as u64,
                x: x + dx,
                y: y + dy,
                z: z + dz,
                layer,
                truth_particle: Some(pid),
            });
        }
        particles.push(particle);
    }
    for (layer, &r) in geometry.layer_radii().iter().enumerate() {
        for _ in 0..options.noise_hits_per_layer {
            let phi = rng.random_range(0.0..TAU);
            let z = rng.random_range(-geometry.half_length_z()..=geometry.half_length_z());
            hits.push(Hit {
                id: hits.len() as u64,
                x: r * phi.cos(),
                y: r * phi.sin(),
                z,
                layer,
                truth_particle: None,
            });
        }
    }
    Ok(Event {
        hits,
        particles,
        density,
    })
}

/// Writes hits as `hit_id,x,y,z,layer,particle_id` with 9 significant
/// digits. Particle truth goes into leading `# particle,...` comment lines
/// so a load restores the full event.
pub fn save_hits_csv(event: &Event, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, hits_to_csv(event)).map_err(|e| Error::io(path, e))
}

pub fn hits_to_csv(event: &Event) -> String {
    let mut out = String::new();
    for p in &event.particles {
        let _ = writeln!(
            out,
            "# particle,{},{},{:e},{:e},{:e},{:e}",
            p.id, p.charge, p.pt, p.phi0, p.z0, p.cot_theta
        );
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for h in &event.hits {
        let pid = h.truth_particle.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{},{}",
            h.id, h.x, h.y, h.z, h.layer, pid
        );
    }
    out
}

pub fn load_hits_csv(path: impl AsRef<Path>) -> Result<Event> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hits_csv(&text, path)
}

pub fn parse_hits_csv(text: &str, path: &Path) -> Result<Event> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut particles = Vec::new();
    let mut hits = Vec::new();
    let mut seen = HashSet::new();
    let mut header_seen = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(rec) = rest.trim().strip_prefix("particle,") {
                particles.push(parse_particle(rec).map_err(|m| err(line_no, m))?);
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.join(",") != CSV_HEADER {
                return Err(err(line_no, format!("expected header `{CSV_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let hit = parse_hit(line).map_err(|m| err(line_no, m))?;
        if !seen.insert(hit.id) {
            return Err(err(line_no, format!("duplicate hit_id {}", hit.id)));
        }
        hits.push(hit);
    }

    let density = if particles.is_empty() {
        hits.iter()
            .filter_map(|h| h.truth_particle)
            .collect::<HashSet<_>>()
            .len()
    } else {
        particles.len()
    };
    let event = Event {
        hits,
        particles,
        density,
    };
    event.validate()?;
    Ok(event)
}

fn field<T: std::str::FromStr>(cols: &[&str], idx: usize, name: &str) -> Result<T, String> {
    let raw = cols.get(idx).ok_or_else(|| format!("missing column `{name}`"))?;
    raw.trim()
        .parse()
        .map_err(|_| format!("cannot parse `{name}` from `{}`", raw.trim()))
}

fn parse_hit(line: &str) -> Result<Hit, String> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 6 {
        return Err(format!("expected 6 columns, found {}", cols.len()));
    }
    let pid = cols[5].trim();
    Ok(Hit {
        id: field(&cols, 0, "hit_id")?,
        x: field(&cols, 1, "x")?,
        y: field(&cols, 2, "y")?,
        z: field(&cols, 3, "z")?,
        layer: field(&cols, 4, "layer")?,
        truth_particle: if pid.is_empty() {
            None
        } else {
            Some(field(&cols, 5, "particle_id")?)
        },
    })
}

fn parse_particle(rec: &str) -> Result<Particle, String> {
    let cols: Vec<&str> = rec.split(',').collect();
    if cols.len() != 6 {
        return Err(format!("particle record needs 6 fields, found {}", cols.len()));
    }
    Ok(Particle {
        id: field(&cols, 0, "id")?,
        charge: field(&cols, 1, "charge")?,
        pt: field(&cols, 2, "pt")?,
        phi0: field(&cols, 3, "phi0")?,
        z0: field(&cols, 4, "z0")?,
        cot_theta: field(&cols, 5, "cot_theta")?,
    })
}
