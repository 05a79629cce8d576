//! Run configuration, read from a TOML document.
//!
//! ```toml
//! gamma0 = 1.0
//! t_final = 5.0
//! dt = "auto"            # or a number
//! output_stride = 10
//! output_dir = "out"
//! tracked_particles = [0, 17]
//! seed = 1
//!
//! [domain]
//! kind = "exterior"      # or "interior"
//! map = "exterior_segment"
//! half_length = 1.0
//!
//! [patch]
//! shape = "disk"         # disk | annulus | square
//! center = [1.6, 0.6]
//! size = 0.3             # radius, outer radius, or half side
//! h = 0.02
//! omega0 = { uniform = -1.0 }
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::Deserialize;

use crate::biot_savart::VortexEnsemble;
use crate::conformal::{ConformalMap, DomainKind, DomainSpec, MapShape, Point};
use crate::error::{FlowError, Result};

/// Initial vorticity profile of the patch.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Omega0 {
    Uniform(f64),
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    Gaussian { amplitude: f64, width: f64 },
}

impl Omega0 {
    pub fn eval(&self, x: Point, center: Point) -> f64 {
        match *self {
            Omega0::Uniform(v) => v,
            Omega0::Gaussian { amplitude, width } => {
                amplitude * (-(x - center).norm_sqr() / (2.0 * width * width)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchShape {
    Disk,
    Annulus { inner: f64 },
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchConfig {
    pub shape: PatchShape,
    pub center: Point,
    /// Radius (disk), outer radius (annulus) or half side (square).
    pub size: f64,
    pub omega0: Omega0,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    /// `None` runs the vorticity-free flow.
    pub patch: Option<PatchConfig>,
    pub gamma0: f64,
    pub t_final: f64,
    pub dt: TimeStep,
    pub output_stride: usize,
    pub output_dir: PathBuf,
    pub tracked_particles: Vec<usize>,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    patch: Option<RawPatch>,
    gamma0: f64,
    t_final: f64,
    dt: RawDt,
    #[serde(default = "default_stride")]
    output_stride: i64,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default)]
    tracked_particles: Vec<usize>,
    #[serde(default)]
    seed: u64,
}

fn default_stride() -> i64 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDt {
    Fixed(f64),
    Named(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: String,
    map: String,
    radius: Option<f64>,
    half_length: Option<f64>,
    semi_major: Option<f64>,
    semi_minor: Option<f64>,
    angle: Option<f64>,
    #[serde(default)]
    corners: Vec<RawCorner>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorner {
    location: [f64; 2],
    angle: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPatch {
    shape: String,
    center: [f64; 2],
    size: f64,
    inner: Option<f64>,
    omega0: Omega0,
    h: f64,
}

fn invalid(invariant: &str, message: impl Into<String>) -> FlowError {
    FlowError::Validation { invariant: invariant.into(), message: message.into() }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| FlowError::Parse {
        location: match e.span() {
            Some(span) => format!("line {}", line_of(text, span.start)),
            None => "document".into(),
        },
        message: e.message().to_string(),
    })?;
    let domain = build_domain(&raw.domain)?;
    let map = ConformalMap::new(domain.clone());

    if !(raw.t_final > 0.0 && raw.t_final.is_finite()) {
        return Err(invalid("t_final > 0", format!("got {}", raw.t_final)));
    }
    if raw.output_stride < 1 {
        return Err(invalid("output_stride >= 1", format!("got {}", raw.output_stride)));
    }
    let dt = match raw.dt {
        RawDt::Fixed(v) if v > 0.0 && v.is_finite() => TimeStep::Fixed(v),
        RawDt::Fixed(v) => return Err(invalid("dt > 0", format!("got {v}"))),
        RawDt::Named(s) if s == "auto" => TimeStep::Auto,
        RawDt::Named(s) => return Err(invalid("dt is a number or \"auto\"", format!("got {s:?}"))),
    };
    if domain.kind == DomainKind::Interior && raw.gamma0 != 0.0 {
        return Err(invalid(
            "interior domains have gamma0 = 0",
            format!("got {}", raw.gamma0),
        ));
    }
    let patch = match raw.patch {
        None => None,
        Some(p) => {
            let shape = match (p.shape.as_str(), p.inner) {
                ("disk", None) => PatchShape::Disk,
                ("square", None) => PatchShape::Square,
                ("annulus", Some(inner)) => {
                    if !(inner > 0.0 && inner < p.size) {
                        return Err(invalid("0 < inner < size", format!("inner = {inner}")));
                    }
                    PatchShape::Annulus { inner }
                }
                ("annulus", None) => return Err(invalid("annulus needs inner", "missing `inner`")),
                ("disk" | "square", Some(_)) => {
                    return Err(invalid("inner only applies to annulus", p.shape.clone()))
                }
                (other, _) => return Err(invalid("patch shape", format!("unknown shape {other:?}"))),
            };
            if !(p.h > 0.0 && p.h.is_finite()) {
                return Err(invalid("h > 0", format!("got {}", p.h)));
            }
            if !(p.size > 0.0 && p.size.is_finite()) {
                return Err(invalid("patch size > 0", format!("got {}", p.size)));
            }
            if let Omega0::Gaussian { width, .. } = p.omega0 {
                if !(width > 0.0) {
                    return Err(invalid("gaussian width > 0", format!("got {width}")));
                }
            }
            let patch = PatchConfig {
                shape,
                center: Point::new(p.center[0], p.center[1]),
                size: p.size,
                omega0: p.omega0,
                h: p.h,
            };
            crate::transport::check_patch_clearance(&map, &patch).map_err(|e| match e {
                FlowError::PatchTouchesBoundary { .. } => invalid("PatchTouchesBoundary", e.to_string()),
                other => other,
            })?;
            Some(patch)
        }
    };
    Ok(RunConfig {
        domain,
        patch,
        gamma0: raw.gamma0,
        t_final: raw.t_final,
        dt,
        output_stride: raw.output_stride as usize,
        output_dir: raw.output_dir,
        tracked_particles: raw.tracked_particles,
        seed: raw.seed,
    })
}

fn build_domain(raw: &RawDomain) -> Result<DomainSpec> {
    let kind = match raw.kind.as_str() {
        "exterior" => DomainKind::Exterior,
        "interior" => DomainKind::Interior,
        other => return Err(invalid("domain kind", format!("unknown kind {other:?}"))),
    };
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| invalid("map parameters", format!("map {} needs `{name}`", raw.map)))
    };
    let (shape, used): (MapShape, &[&str]) = match raw.map.as_str() {
        "unit_disk_identity" => (MapShape::UnitDiskIdentity, &[]),
        "scaled_disk" => (MapShape::ScaledDisk { radius: need(raw.radius, "radius")? }, &["radius"]),
        "exterior_segment" => (
            MapShape::ExteriorSegment { half_length: raw.half_length.unwrap_or(1.0) },
            &["half_length"],
        ),
        "exterior_ellipse" => (
            MapShape::ExteriorEllipse {
                semi_major: need(raw.semi_major, "semi_major")?,
                semi_minor: need(raw.semi_minor, "semi_minor")?,
            },
            &["semi_major", "semi_minor"],
        ),
        "interior_wedge_lens" => {
            (MapShape::InteriorWedgeLens { angle: need(raw.angle, "angle")? }, &["angle"])
        }
        other => return Err(invalid("map", format!("unknown map {other:?}"))),
    };
    let given = [
        ("radius", raw.radius),
        ("half_length", raw.half_length),
        ("semi_major", raw.semi_major),
        ("semi_minor", raw.semi_minor),
        ("angle", raw.angle),
    ];
    for (name, value) in given {
        if value.is_some() && !used.contains(&name) {
            return Err(invalid(
                "map parameters",
                format!("`{name}` does not apply to map {}", raw.map),
            ));
        }
    }
    let extra: Vec<(Point, f64)> = raw
        .corners
        .iter()
        .map(|c| (Point::new(c.location[0], c.location[1]), c.angle))
        .collect();
    for &(_, angle) in &extra {
        if !(angle > PI / 2.0 && angle <= 2.0 * PI) {
            return Err(invalid("corner angle in (pi/2, 2pi]", format!("got {angle}")));
        }
    }
    if let MapShape::InteriorWedgeLens { angle } = shape {
        if !(angle > PI / 2.0 && angle <= 2.0 * PI) {
            return Err(invalid("corner angle in (pi/2, 2pi]", format!("got {angle}")));
        }
    }
    DomainSpec::new(kind, shape, &extra).map_err(|e| invalid("domain", e.to_string()))
}

/// Whether the hypotheses for boundary avoidance hold: one-signed vorticity
/// and, outside an obstacle, `γ₀ ≥ −∫ω₀` (or the mirrored signs).
pub fn sign_conditions_met(kind: DomainKind, ens: &VortexEnsemble, gamma0: f64) -> bool {
    let nonpositive = ens.particles.iter().all(|p| p.circulation <= 0.0);
    let nonnegative = ens.particles.iter().all(|p| p.circulation >= 0.0);
    let total = ens.total_circulation();
    match kind {
        DomainKind::Interior => nonpositive || nonnegative,
        DomainKind::Exterior => {
            (nonpositive && gamma0 >= -total) || (nonnegative && gamma0 <= -total)
        }
    }
}
