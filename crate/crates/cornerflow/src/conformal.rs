//! Closed-form conformal maps from the flow domain onto the exterior (or
//! interior) of the unit disk.
//!
//! Points and complex derivatives are both [`Complex64`]. A plane vector
//! `(x, y)` is the complex number `x + iy`, so the rotation `v⊥ = (-v₂, v₁)`
//! is multiplication by `i`, and the transposed Jacobian of a holomorphic
//! map acting on `v` is `conj(T') * v`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FlowError, Result};
use crate::numerics::{linear_fit, log_spaced};

pub type Point = Complex64;

/// Whether the fluid lives outside or inside the boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapId {
    UnitDiskIdentity,
    ScaledDisk,
    ExteriorSegment,
    ExteriorEllipse,
    InteriorWedgeLens,
}

impl MapId {
    pub fn name(self) -> &'static str {
        match self {
            MapId::UnitDiskIdentity => "unit_disk_identity",
            MapId::ScaledDisk => "scaled_disk",
            MapId::ExteriorSegment => "exterior_segment",
            MapId::ExteriorEllipse => "exterior_ellipse",
            MapId::InteriorWedgeLens => "interior_wedge_lens",
        }
    }
}

/// A map family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapShape {
    UnitDiskIdentity,
    ScaledDisk { radius: f64 },
    /// Flat plate `[-half_length, half_length] × {0}`.
    ExteriorSegment { half_length: f64 },
    ExteriorEllipse { semi_major: f64, semi_minor: f64 },
    /// Region bounded by a circular arc with one corner of `angle` at the origin.
    /// The sector opens counter-clockwise from the positive real axis.
    InteriorWedgeLens { angle: f64 },
}

impl MapShape {
    pub fn id(&self) -> MapId {
        match self {
            MapShape::UnitDiskIdentity => MapId::UnitDiskIdentity,
            MapShape::ScaledDisk { .. } => MapId::ScaledDisk,
            MapShape::ExteriorSegment { .. } => MapId::ExteriorSegment,
            MapShape::ExteriorEllipse { .. } => MapId::ExteriorEllipse,
            MapShape::InteriorWedgeLens { .. } => MapId::InteriorWedgeLens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerSpec {
    pub location: Point,
    /// Interior angle of the fluid sector, in radians.
    pub angle: f64,
    /// `T(location)`, on the unit circle.
    pub image_on_circle: Point,
    /// Unit vector pointing from the corner into the fluid along the sector bisector.
    pub bisector: Point,
}

impl CornerSpec {
    /// Exponent of `|T'|` near this corner.
    pub fn expected_exponent(&self) -> f64 {
        PI / self.angle - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub shape: MapShape,
    pub corners: Vec<CornerSpec>,
}

fn check_angle(angle: f64) -> Result<()> {
    if !(angle > PI / 2.0 && angle <= TAU) {
        return Err(FlowError::InvalidDomain(format!(
            "corner angle {angle} must lie in (pi/2, 2pi]"
        )));
    }
    Ok(())
}

impl DomainSpec {
    /// Builds a domain, adding the natural corners of the shape followed by
    /// any extra declared `(location, angle)` pairs. Extra corners must lie on
    /// the boundary; a smooth boundary point is declared with angle `π`.
    pub fn new(kind: DomainKind, shape: MapShape, extra_corners: &[(Point, f64)]) -> Result<Self> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(FlowError::InvalidDomain(format!("{what} must be positive, got {v}")))
            }
        };
        match (kind, shape) {
            (_, MapShape::UnitDiskIdentity) => {}
            (_, MapShape::ScaledDisk { radius }) => positive(radius, "disk radius")?,
            (DomainKind::Exterior, MapShape::ExteriorSegment { half_length }) => {
                positive(half_length, "segment half-length")?
            }
            (DomainKind::Exterior, MapShape::ExteriorEllipse { semi_major, semi_minor }) => {
                positive(semi_minor, "ellipse semi-minor axis")?;
                if !(semi_major >= semi_minor) || !semi_major.is_finite() {
                    return Err(FlowError::InvalidDomain(
                        "ellipse needs semi_major >= semi_minor".into(),
                    ));
                }
            }
            (DomainKind::Interior, MapShape::InteriorWedgeLens { angle }) => check_angle(angle)?,
            (k, s) => {
                return Err(FlowError::InvalidDomain(format!(
                    "map {} does not support {:?} domains",
                    s.id().name(),
                    k
                )))
            }
        }
        let mut spec = DomainSpec { kind, shape, corners: Vec::new() };
        let mut natural = Vec::new();
        match shape {
            MapShape::ExteriorSegment { half_length } => {
                natural.push((Point::new(half_length, 0.0), TAU));
                natural.push((Point::new(-half_length, 0.0), TAU));
            }
            MapShape::InteriorWedgeLens { angle } => natural.push((Point::new(0.0, 0.0), angle)),
            _ => {}
        }
        for &(location, angle) in natural.iter().chain(extra_corners) {
            check_angle(angle)?;
            let image = map_raw(&shape, location);
            if !image.is_finite() || (image.norm() - 1.0).abs() > 1e-12 {
                return Err(FlowError::InvalidDomain(format!(
                    "corner at ({}, {}) is not on the boundary",
                    location.re, location.im
                )));
            }
            let image = image / image.norm();
            let off = match kind {
                DomainKind::Exterior => 1.0 + 1e-4,
                DomainKind::Interior => 1.0 - 1e-4,
            };
            let d = inverse_raw(&shape, image * off) - location;
            spec.corners.push(CornerSpec {
                location,
                angle,
                image_on_circle: image,
                bisector: d / d.norm(),
            });
        }
        Ok(spec)
    }

    pub fn map_id(&self) -> MapId {
        self.shape.id()
    }
}

/// `arg z` taken in `[0, 2π)`.
fn arg_positive(z: Point) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Joukowski-family coefficients `(A, B, c)` with inverse `z = A w + B / w`
/// and `c² = 4AB` the squared focal distance.
fn joukowski(shape: &MapShape) -> Option<(f64, f64, f64)> {
    match *shape {
        MapShape::ExteriorSegment { half_length } => {
            Some((half_length / 2.0, half_length / 2.0, half_length))
        }
        MapShape::ExteriorEllipse { semi_major: a, semi_minor: b } => {
            Some(((a + b) / 2.0, (a - b) / 2.0, ((a - b) * (a + b)).sqrt()))
        }
        _ => None,
    }
}

/// `√(z−c)·√(z+c)` with principal roots: a branch of `√(z²−c²)` cut along
/// `[-c, c]` that behaves like `z` at infinity.
fn focal_root(z: Point, c: f64) -> Point {
    (z - c).sqrt() * (z + c).sqrt()
}

pub(crate) fn map_raw(shape: &MapShape, z: Point) -> Point {
    match *shape {
        MapShape::UnitDiskIdentity => z,
        MapShape::ScaledDisk { radius } => z / radius,
        MapShape::ExteriorSegment { .. } | MapShape::ExteriorEllipse { .. } => {
            let (a, _, c) = joukowski(shape).unwrap();
            if c == 0.0 {
                return z / a;
            }
            (z + focal_root(z, c)) / (2.0 * a)
        }
        MapShape::InteriorWedgeLens { angle } => {
            let p = PI / angle;
            Point::from_polar(z.norm().powf(p), p * arg_positive(z)) - Point::i()
        }
    }
}

pub(crate) fn derivative_raw(shape: &MapShape, z: Point) -> Point {
    match *shape {
        MapShape::UnitDiskIdentity => Point::new(1.0, 0.0),
        MapShape::ScaledDisk { radius } => Point::new(1.0 / radius, 0.0),
        MapShape::ExteriorSegment { .. } | MapShape::ExteriorEllipse { .. } => {
            let (a, _, c) = joukowski(shape).unwrap();
            if c == 0.0 {
                return Point::new(1.0 / a, 0.0);
            }
            let s = focal_root(z, c);
            (z + s) / (2.0 * a) / s
        }
        MapShape::InteriorWedgeLens { angle } => {
            let p = PI / angle;
            let zeta = Point::from_polar(z.norm().powf(p), p * arg_positive(z));
            p * zeta / z
        }
    }
}

pub(crate) fn inverse_raw(shape: &MapShape, w: Point) -> Point {
    match *shape {
        MapShape::UnitDiskIdentity => w,
        MapShape::ScaledDisk { radius } => w * radius,
        MapShape::ExteriorSegment { .. } | MapShape::ExteriorEllipse { .. } => {
            let (a, b, _) = joukowski(shape).unwrap();
            a * w + b / w
        }
        MapShape::InteriorWedgeLens { angle } => {
            let q = angle / PI;
            let v = w + Point::i();
            Point::from_polar(v.norm().powf(q), q * v.im.atan2(v.re))
        }
    }
}

/// Result of a far-field fit `T(z) ≈ βz + β̃` on a large circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    pub beta: f64,
    pub beta_tilde: Point,
    /// `max |T(z) − βz − β̃|` on `|z| = 10³`.
    pub residual: f64,
    /// Same quantity on `|z| = 10⁴`.
    pub residual_far: f64,
}

/// Output of [`ConformalMap::corner_exponent_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerFit {
    pub angle: f64,
    pub expected_exponent: f64,
    pub fitted_exponent: f64,
}

/// An evaluable biholomorphism `T` from the flow domain onto the exterior
/// (or interior) of the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMap {
    spec: DomainSpec,
    farfield_beta: Option<f64>,
    farfield_beta_tilde: Option<Point>,
}

impl ConformalMap {
    pub fn new(spec: DomainSpec) -> Self {
        let (beta, beta_tilde) = match spec.kind {
            DomainKind::Interior => (None, None),
            DomainKind::Exterior => {
                let beta = match spec.shape {
                    MapShape::UnitDiskIdentity => 1.0,
                    MapShape::ScaledDisk { radius } => 1.0 / radius,
                    _ => 1.0 / joukowski(&spec.shape).unwrap().0,
                };
                (Some(beta), Some(Point::new(0.0, 0.0)))
            }
        };
        ConformalMap { spec, farfield_beta: beta, farfield_beta_tilde: beta_tilde }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn kind(&self) -> DomainKind {
        self.spec.kind
    }

    pub fn is_exterior(&self) -> bool {
        self.spec.kind == DomainKind::Exterior
    }

    pub fn corners(&self) -> &[CornerSpec] {
        &self.spec.corners
    }

    /// Analytic `β` (exterior domains only).
    pub fn farfield_beta(&self) -> Option<f64> {
        self.farfield_beta
    }

    /// Analytic `β̃` (exterior domains only).
    pub fn farfield_beta_tilde(&self) -> Option<Point> {
        self.farfield_beta_tilde
    }

    /// A point of the obstacle (exterior) used to decide whether a closed
    /// contour winds around it.
    /// Every exterior family here is centred on the origin.
    pub fn obstacle_point(&self) -> Point {
        Point::new(0.0, 0.0)
    }

    fn in_shape(&self, z: Point) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        let inside_curve = match self.spec.shape {
            MapShape::UnitDiskIdentity => z.norm() < 1.0,
            MapShape::ScaledDisk { radius } => z.norm() < radius,
            MapShape::ExteriorSegment { half_length } => z.im == 0.0 && z.re.abs() <= half_length,
            MapShape::ExteriorEllipse { semi_major, semi_minor } => {
                (z.re / semi_major).powi(2) + (z.im / semi_minor).powi(2) <= 1.0
            }
            MapShape::InteriorWedgeLens { angle } => {
                let a = arg_positive(z);
                z.norm() > 0.0 && a > 0.0 && a < angle
            }
        };
        let shape_ok = match self.spec.kind {
            DomainKind::Interior => inside_curve,
            DomainKind::Exterior => !inside_curve,
        };
        if !shape_ok {
            return false;
        }
        let r = map_raw(&self.spec.shape, z).norm();
        match self.spec.kind {
            DomainKind::Exterior => r > 1.0,
            DomainKind::Interior => r < 1.0,
        }
    }

    /// Whether `z` lies strictly inside the flow domain.
    pub fn contains(&self, z: Point) -> bool {
        self.in_shape(z)
    }

    fn require_inside(&self, z: Point) -> Result<()> {
        if self.in_shape(z) {
            Ok(())
        } else {
            Err(FlowError::PointOutsideDomain { re: z.re, im: z.im })
        }
    }

    /// `T(z)`.
    pub fn map(&self, z: Point) -> Result<Point> {
        self.require_inside(z)?;
        let w = map_raw(&self.spec.shape, z);
        if !w.is_finite() {
            return Err(FlowError::BranchCutViolation { re: z.re, im: z.im });
        }
        Ok(w)
    }

    /// `T⁻¹(w)`.
    pub fn inverse(&self, w: Point) -> Result<Point> {
        let ok = match self.spec.kind {
            DomainKind::Exterior => w.norm() > 1.0,
            DomainKind::Interior => w.norm() < 1.0,
        };
        if !ok || !w.is_finite() {
            return Err(FlowError::PointOutsideTarget { re: w.re, im: w.im });
        }
        Ok(inverse_raw(&self.spec.shape, w))
    }

    /// Complex derivative `T'(z)`.
    pub fn derivative(&self, z: Point) -> Result<Point> {
        for c in &self.spec.corners {
            if c.angle != PI && (z - c.location).norm() < 1e-14 {
                return Err(FlowError::CornerSingularity { re: z.re, im: z.im });
            }
        }
        self.require_inside(z)?;
        let d = derivative_raw(&self.spec.shape, z);
        if !d.is_finite() {
            return Err(FlowError::BranchCutViolation { re: z.re, im: z.im });
        }
        Ok(d)
    }

    /// `|T(z)| − 1` (exterior) or `1 − |T(z)|` (interior).
    pub fn mapped_gap(&self, z: Point) -> Result<f64> {
        let r = self.map(z)?.norm();
        Ok(self.gap_of_image(r))
    }

    pub(crate) fn gap_of_image(&self, r: f64) -> f64 {
        match self.spec.kind {
            DomainKind::Exterior => r - 1.0,
            DomainKind::Interior => 1.0 - r,
        }
    }

    /// Boundary point `T⁻¹(e^{iθ})`.
    pub fn boundary_point(&self, theta: f64) -> Point {
        inverse_raw(&self.spec.shape, Point::from_polar(1.0, theta))
    }

    /// Unit vector pointing from the boundary point `T⁻¹(e^{iθ})` into the fluid.
    pub fn inward_normal(&self, theta: f64) -> Point {
        let w = Point::from_polar(1.0, theta);
        let h = 1e-7;
        let dz = inverse_raw(&self.spec.shape, w * (1.0 + h))
            - inverse_raw(&self.spec.shape, w * (1.0 - h));
        let n = dz / dz.norm();
        match self.spec.kind {
            DomainKind::Exterior => n,
            DomainKind::Interior => -n,
        }
    }

    /// Euclidean distance from `z` to the boundary curve.
    pub fn boundary_distance(&self, z: Point) -> f64 {
        match self.spec.shape {
            MapShape::UnitDiskIdentity => return (z.norm() - 1.0).abs(),
            MapShape::ScaledDisk { radius } => return (z.norm() - radius).abs(),
            MapShape::ExteriorSegment { half_length } => {
                let x = z.re.clamp(-half_length, half_length);
                return (z - Point::new(x, 0.0)).norm();
            }
            _ => {}
        }
        let m = 4096;
        let dist = |t: f64| (self.boundary_point(t) - z).norm();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in 0..m {
            let d = dist(TAU * k as f64 / m as f64);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        // golden-section refinement on the bracketing cell pair
        let step = TAU / m as f64;
        let (mut lo, mut hi) = (best as f64 * step - step, best as f64 * step + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if dist(a) < dist(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        best_d.min(dist(0.5 * (lo + hi)))
    }

    /// Distance from `z` to the nearest declared corner with angle `≠ π`.
    pub fn corner_distance(&self, z: Point) -> f64 {
        self.spec
            .corners
            .iter()
            .filter(|c| c.angle != PI)
            .map(|c| (z - c.location).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Fits `β`, `β̃` from samples of `T` on the circle `|z| = 10³`.
    pub fn farfield_coefficients(&self) -> Result<FarField> {
        if self.spec.kind == DomainKind::Interior {
            return Err(FlowError::InteriorDomainHasNoFarField);
        }
        let n = 64;
        let circle = |radius: f64| -> Vec<Point> {
            (0..n)
                .map(|k| Point::from_polar(radius, TAU * (k as f64 + 0.5) / n as f64))
                .collect()
        };
        let zs = circle(1e3);
        let ws: Vec<Point> = zs.iter().map(|&z| self.map(z)).collect::<Result<_>>()?;
        let beta_c = zs.iter().zip(&ws).map(|(z, w)| w / z).sum::<Point>() / n as f64;
        let beta = beta_c.re;
        let beta_tilde = zs.iter().zip(&ws).map(|(z, w)| w - beta * z).sum::<Point>() / n as f64;
        let residual_on = |radius: f64| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for z in circle(radius) {
                worst = worst.max((self.map(z)? - beta * z - beta_tilde).norm());
            }
            Ok(worst)
        };
        Ok(FarField {
            beta,
            beta_tilde,
            residual: residual_on(1e3)?,
            residual_far: residual_on(1e4)?,
        })
    }

    /// Log–log least-squares slope of `|T'|` against the distance to
    /// `corner`, sampled along the corner bisector.
    pub fn corner_exponent_probe(&self, corner: &CornerSpec, radii: &[f64]) -> Result<CornerFit> {
        if radii.len() < 5 {
            return Err(FlowError::InsufficientSamples(radii.len()));
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 1e-5 && **r < 1e-1)) {
            return Err(FlowError::InvalidArgument(format!(
                "probe radius {r} outside (1e-5, 1e-1)"
            )));
        }
        let mut xs = Vec::with_capacity(radii.len());
        let mut ys = Vec::with_capacity(radii.len());
        for &r in radii {
            let d = self.derivative(corner.location + corner.bisector * r)?;
            xs.push(r.ln());
            ys.push(d.norm().ln());
        }
        let (slope, _) = linear_fit(&xs, &ys).ok_or(FlowError::FitDegenerate)?;
        Ok(CornerFit {
            angle: corner.angle,
            expected_exponent: corner.expected_exponent(),
            fitted_exponent: slope,
        })
    }

    /// Probe with the default 8 log-spaced radii in `[1e-4, 1e-2]`.
    pub fn corner_exponent_default(&self, corner: &CornerSpec) -> Result<CornerFit> {
        self.corner_exponent_probe(corner, &log_spaced(1e-4, 1e-2, 8))
    }

    /// Max of `|T(T⁻¹(y)) − y|` over `n` random points of the target
    /// annulus `1.01 ≤ |y| ≤ 10` (exterior) or disk `|y| ≤ 0.99` (interior).
    pub fn roundtrip_max_error(&self, n: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let theta = rng.gen_range(0.0..TAU);
            let rho = match self.spec.kind {
                DomainKind::Exterior => rng.gen_range(1.01..10.0),
                DomainKind::Interior => rng.gen_range(0.0..0.99),
            };
            let y = Point::from_polar(rho, theta);
            let back = self.map(self.inverse(y)?)?;
            worst = worst.max((back - y).norm());
        }
        Ok(worst)
    }
}
