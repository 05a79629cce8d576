//! Green function, Biot–Savart kernel and velocity of a vortex-blob ensemble.
//!
//! Everything is evaluated in the mapped plane `p = T(x)`, where the Green
//! function of the unit-disk exterior (or interior) is explicit:
//!
//! `G(p, q) = (1/2π) ln(|p − q| / |p q̄ − 1|)`.
//!
//! Blobs regularize both the free and the image part with the same `δ²`:
//!
//! `G_δ(p, q) = (1/4π) ln((|p − q|² + δ²) / (|p q̄ − 1|² + δ²))`,
//!
//! which still vanishes identically on `|p| = 1`. The velocity used by the
//! particles is exactly `∇⊥` of the corresponding stream function, so the
//! boundary stays a streamline of the discrete flow.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::conformal::{ConformalMap, DomainKind, Point};
use crate::error::{FlowError, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexParticle {
    pub position: Point,
    /// Signed circulation `Γ_j`.
    pub circulation: f64,
    /// Regularization length `δ_j`, measured in the mapped plane.
    pub blob_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VortexEnsemble {
    pub particles: Vec<VortexParticle>,
    /// Cell area `A` used at initialization (`Γ_j = ω₀(x_j)·A`).
    pub patch_cell_area: f64,
}

impl VortexEnsemble {
    pub fn new(particles: Vec<VortexParticle>, patch_cell_area: f64) -> Self {
        VortexEnsemble { particles, patch_cell_area }
    }

    pub fn empty() -> Self {
        VortexEnsemble { particles: Vec::new(), patch_cell_area: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// `ΣΓ_j`, summed in index order.
    pub fn total_circulation(&self) -> f64 {
        self.particles.iter().map(|p| p.circulation).sum()
    }

    /// `Σ|Γ_j|`, the discrete `‖ω‖₁`.
    pub fn l1_proxy(&self) -> f64 {
        self.particles.iter().map(|p| p.circulation.abs()).sum()
    }

    /// `max|Γ_j| / A`, the discrete `‖ω‖∞`.
    pub fn linf_proxy(&self) -> f64 {
        self.particles.iter().map(|p| p.circulation.abs()).fold(0.0, f64::max)
            / self.patch_cell_area
    }

    /// `max|x_j|`, zero when empty.
    pub fn support_radius(&self) -> f64 {
        self.particles.iter().map(|p| p.position.norm()).fold(0.0, f64::max)
    }

    pub fn positions(&self) -> Vec<Point> {
        self.particles.iter().map(|p| p.position).collect()
    }

    /// Copy with every particle moved to the given positions.
    pub fn with_positions(&self, positions: &[Point]) -> Self {
        assert_eq!(positions.len(), self.particles.len());
        let particles = self
            .particles
            .iter()
            .zip(positions)
            .map(|(p, &x)| VortexParticle { position: x, ..*p })
            .collect();
        VortexEnsemble { particles, patch_cell_area: self.patch_cell_area }
    }

    /// Copy with all circulations negated.
    pub fn negated(&self) -> Self {
        let particles = self
            .particles
            .iter()
            .map(|p| VortexParticle { circulation: -p.circulation, ..*p })
            .collect();
        VortexEnsemble { particles, patch_cell_area: self.patch_cell_area }
    }
}

/// Prescribed circulation around the obstacle and `α = γ₀ + ∫ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculationSpec {
    pub gamma0: f64,
    pub alpha: f64,
}

impl CirculationSpec {
    /// `α = γ₀ + ΣΓ_j` for exterior domains; interior domains need `γ₀ = 0`
    /// and get `α = 0`.
    pub fn new(map: &ConformalMap, gamma0: f64, ens: &VortexEnsemble) -> Result<Self> {
        match map.kind() {
            DomainKind::Exterior => {
                Ok(CirculationSpec { gamma0, alpha: gamma0 + ens.total_circulation() })
            }
            DomainKind::Interior if gamma0 == 0.0 => Ok(CirculationSpec { gamma0, alpha: 0.0 }),
            DomainKind::Interior => Err(FlowError::InvalidArgument(
                "interior domains carry no circulation around an obstacle".into(),
            )),
        }
    }
}

/// Images `T(x_j)` of the particles, with circulations and `δ_j²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedSources {
    pub(crate) t: Vec<Point>,
    pub(crate) gamma: Vec<f64>,
    pub(crate) d2: Vec<f64>,
}

impl MappedSources {
    pub fn new(map: &ConformalMap, ens: &VortexEnsemble) -> Result<Self> {
        let mut t = Vec::with_capacity(ens.len());
        for p in &ens.particles {
            t.push(map.map(p.position)?);
        }
        Ok(MappedSources {
            t,
            gamma: ens.particles.iter().map(|p| p.circulation).collect(),
            d2: ens.particles.iter().map(|p| p.blob_radius * p.blob_radius).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Regularized free term `(p − q) / (|p − q|² + δ²)`.
#[inline]
pub(crate) fn free_term(p: Point, q: Point, d2: f64) -> Point {
    let d = p - q;
    d / (d.norm_sqr() + d2)
}

/// Regularized image term `(|q|² p − q) / (|p q̄ − 1|² + δ²)`; for `δ = 0`
/// this is `(p − q*) / |p − q*|²` with `q* = q / |q|²`.
#[inline]
pub(crate) fn image_term(p: Point, q: Point, d2: f64) -> Point {
    (q.norm_sqr() * p - q) / ((p * q.conj() - 1.0).norm_sqr() + d2)
}

/// `G_δ(p, q)`, the regularized Green function of the unit disk in the mapped plane.
#[inline]
pub(crate) fn green_mapped(p: Point, q: Point, d2: f64) -> f64 {
    ((p - q).norm_sqr() + d2).ln() / (2.0 * TAU) - ((p * q.conj() - 1.0).norm_sqr() + d2).ln() / (2.0 * TAU)
}

/// `Σ Γ_j (free − image)` at the mapped point `p`, optionally skipping the
/// free term of one particle. Summed in index order.
#[inline]
pub(crate) fn pair_sum(p: Point, src: &MappedSources, skip: Option<usize>) -> Point {
    let mut acc = Point::new(0.0, 0.0);
    for j in 0..src.t.len() {
        let q = src.t[j];
        let d2 = src.d2[j];
        let mut term = -image_term(p, q, d2);
        if skip != Some(j) {
            term += free_term(p, q, d2);
        }
        acc += src.gamma[j] * term;
    }
    acc
}

/// Mapped-plane field `R[ω](p) + α p⊥/|p|²` (without the `1/2π` and the `DTᵀ` factor).
#[inline]
pub(crate) fn mapped_field(p: Point, src: &MappedSources, alpha: f64, skip: Option<usize>) -> Point {
    let mut w = I * pair_sum(p, src, skip);
    if alpha != 0.0 {
        w += alpha * I / p.conj();
    }
    w
}

/// Exact Green function `G_Ω(x, y)`.
pub fn green_function(map: &ConformalMap, x: Point, y: Point) -> Result<f64> {
    if x == y {
        return Err(FlowError::CoincidentPoints);
    }
    let p = map.map(x)?;
    let q = map.map(y)?;
    if p == q {
        return Err(FlowError::CoincidentPoints);
    }
    Ok(((p - q).norm() / (p * q.conj() - 1.0).norm()).ln() / TAU)
}

/// Biot–Savart kernel `K_Ω(x, y) = ∇ₓ⊥ G_Ω(x, y)`.
pub fn kernel_k(map: &ConformalMap, x: Point, y: Point) -> Result<Point> {
    if x == y {
        return Err(FlowError::CoincidentPoints);
    }
    let dt = map.derivative(x)?;
    let p = map.map(x)?;
    let q = map.map(y)?;
    if p == q {
        return Err(FlowError::CoincidentPoints);
    }
    Ok(dt.conj() * I * (free_term(p, q, 0.0) - image_term(p, q, 0.0)) / TAU)
}

/// Harmonic field `H_Ω(x) = (1/2π) DTᵀ(x) T(x)⊥ / |T(x)|²`, unit circulation around the obstacle.
pub fn harmonic_field(map: &ConformalMap, x: Point) -> Result<Point> {
    if map.kind() == DomainKind::Interior {
        return Err(FlowError::InteriorDomainHasNoHarmonicField);
    }
    let dt = map.derivative(x)?;
    let p = map.map(x)?;
    Ok(dt.conj() * I / p.conj() / TAU)
}

/// Remainder operator `R[ω](x)` (mapped-plane vector, no `DTᵀ` factor).
pub fn operator_r(map: &ConformalMap, ens: &VortexEnsemble, x: Point) -> Result<Point> {
    let src = MappedSources::new(map, ens)?;
    Ok(I * pair_sum(map.map(x)?, &src, None))
}

/// Velocity `u(x) = (1/2π) DTᵀ(x) (R[ω](x) + α T(x)⊥/|T(x)|²)`.
pub fn velocity(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    x: Point,
) -> Result<Point> {
    let src = MappedSources::new(map, ens)?;
    velocity_from_sources(map, &src, circ.alpha, x, None)
}

/// Velocity at `x` from precomputed sources; `skip` drops one particle's free term.
pub fn velocity_from_sources(
    map: &ConformalMap,
    src: &MappedSources,
    alpha: f64,
    x: Point,
    skip: Option<usize>,
) -> Result<Point> {
    let dt = map.derivative(x)?;
    let p = map.map(x)?;
    Ok(dt.conj() * mapped_field(p, src, alpha, skip) / TAU)
}

/// Velocity at many points, parallel over targets. Each target sums the
/// particles in index order, so the result does not depend on the thread count.
pub fn velocity_at(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    xs: &[Point],
) -> Result<Vec<Point>> {
    let src = MappedSources::new(map, ens)?;
    xs.par_iter()
        .map(|&x| velocity_from_sources(map, &src, circ.alpha, x, None))
        .collect()
}

/// A closed contour for circulation integrals.
#[derive(Debug, Clone, PartialEq)]
pub enum Contour {
    /// Counter-clockwise circle, integrated with the periodic trapezoid rule.
    Circle { center: Point, radius: f64, nodes: usize },
    /// Closed polyline (last vertex joins the first), composite trapezoid
    /// with `subdivisions` panels per edge.
    Polyline { vertices: Vec<Point>, subdivisions: usize },
}

impl Contour {
    /// Circle with the default 512 quadrature nodes.
    pub fn circle(center: Point, radius: f64) -> Self {
        Contour::Circle { center, radius, nodes: 512 }
    }

    /// Quadrature nodes with their weighted tangent elements `dx`.
    pub fn quadrature(&self) -> Vec<(Point, Point)> {
        match self {
            Contour::Circle { center, radius, nodes } => (0..*nodes)
                .map(|k| {
                    let e = Point::from_polar(1.0, TAU * k as f64 / *nodes as f64);
                    (center + radius * e, I * radius * e * (TAU / *nodes as f64))
                })
                .collect(),
            Contour::Polyline { vertices, subdivisions } => {
                let m = (*subdivisions).max(1);
                let n = vertices.len();
                let mut out = Vec::with_capacity(n * (m + 1));
                for k in 0..n {
                    let a = vertices[k];
                    let b = vertices[(k + 1) % n];
                    for j in 0..=m {
                        let w = if j == 0 || j == m { 0.5 } else { 1.0 } / m as f64;
                        out.push((a + (b - a) * (j as f64 / m as f64), (b - a) * w));
                    }
                }
                out
            }
        }
    }

    /// Winding number of the contour around `z` (zero or ±1 for simple contours).
    pub fn winding_number(&self, z: Point) -> i32 {
        match self {
            Contour::Circle { center, radius, .. } => ((z - center).norm() < *radius) as i32,
            Contour::Polyline { vertices, .. } => {
                let n = vertices.len();
                let mut total = 0.0;
                for k in 0..n {
                    let a = vertices[k] - z;
                    let b = vertices[(k + 1) % n] - z;
                    total += (b / a).arg();
                }
                (total / TAU).round() as i32
            }
        }
    }
}

/// `∮ u·τ̂ ds` along `contour`.
pub fn circulation_probe(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    contour: &Contour,
) -> Result<f64> {
    let quad = contour.quadrature();
    if quad.iter().any(|(x, _)| !map.contains(*x)) {
        return Err(FlowError::ContourLeavesDomain);
    }
    if let Contour::Polyline { vertices, .. } = contour {
        let n = vertices.len();
        for k in 0..n {
            if segment_hits_slit(map, vertices[k], vertices[(k + 1) % n]) {
                return Err(FlowError::ContourLeavesDomain);
            }
        }
    }
    let src = MappedSources::new(map, ens)?;
    let terms: Vec<f64> = quad
        .par_iter()
        .map(|&(x, dx)| {
            velocity_from_sources(map, &src, circ.alpha, x, None).map(|u| u.re * dx.re + u.im * dx.im)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Whether the straight segment `a → b` crosses a plate obstacle between
/// quadrature nodes. Other shapes are caught by the node containment test.
pub(crate) fn segment_hits_slit(map: &ConformalMap, a: Point, b: Point) -> bool {
    if let crate::conformal::MapShape::ExteriorSegment { half_length } = map.spec().shape {
        if (a.im > 0.0) != (b.im > 0.0) || a.im == 0.0 || b.im == 0.0 {
            if a.im == b.im {
                return a.re.min(b.re) <= half_length && a.re.max(b.re) >= -half_length;
            }
            let t = a.im / (a.im - b.im);
            let x = a.re + t * (b.re - a.re);
            return x.abs() <= half_length;
        }
    }
    false
}

/// Tangential velocity trace `g` at the boundary point `T⁻¹(e^{iθ})`.
///
/// `τ̂` is the counter-clockwise tangent. The trace is extrapolated from
/// offsets `ρ ∈ {1e-2, 5e-3, 2.5e-3}` along the inward normal.
pub fn sheet_density(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    theta: f64,
) -> Result<f64> {
    let x0 = map.boundary_point(theta);
    let distance = map.corner_distance(x0);
    if distance <= 1e-2 {
        return Err(FlowError::TooCloseToCorner { distance });
    }
    let n = map.inward_normal(theta);
    let tau = match map.kind() {
        DomainKind::Exterior => I * n,
        DomainKind::Interior => -I * n,
    };
    let src = MappedSources::new(map, ens)?;
    let trace = |rho: f64| -> Result<f64> {
        let u = velocity_from_sources(map, &src, circ.alpha, x0 + rho * n, None)?;
        Ok(u.re * tau.re + u.im * tau.im)
    };
    let (f1, f2, f3) = (trace(1e-2)?, trace(5e-3)?, trace(2.5e-3)?);
    let r1 = 2.0 * f2 - f1;
    let r2 = 2.0 * f3 - f2;
    Ok((4.0 * r2 - r1) / 3.0)
}

/// Sum of the two one-sided sheet traces at abscissa `x1` of a plate
/// `[-a, a] × {0}`: the jump of tangential velocity across the plate.
pub fn plate_sheet_jump(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    x1: f64,
) -> Result<f64> {
    let a = match map.spec().shape {
        crate::conformal::MapShape::ExteriorSegment { half_length } => half_length,
        _ => return Err(FlowError::InvalidArgument("plate_sheet_jump needs a plate".into())),
    };
    let theta = (x1 / a).clamp(-1.0, 1.0).acos();
    Ok(sheet_density(map, ens, circ, theta)? + sheet_density(map, ens, circ, -theta)?)
}

/// Ratio `sup|R[ω]| / (‖ω‖₁^{1/2}‖ω‖∞^{1/2} + ‖ω‖₁^a‖ω‖∞^{1−a} + ‖ω‖₁)` over
/// the sample points, with the discrete norms of the ensemble.
pub fn ift_constant(map: &ConformalMap, ens: &VortexEnsemble, samples: &[Point], a: f64) -> Result<f64> {
    let src = MappedSources::new(map, ens)?;
    let sup = samples
        .par_iter()
        .map(|&x| map.map(x).map(|p| pair_sum(p, &src, None).norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let l1 = ens.l1_proxy();
    let linf = ens.linf_proxy();
    let denom = (l1 * linf).sqrt() + l1.powf(a) * linf.powf(1.0 - a) + l1;
    Ok(sup / denom)
}

/// Free-space kernel `K_{R²}(x) = x⊥ / (2π|x|²)`.
pub fn freespace_kernel(x: Point) -> Point {
    I * x / x.norm_sqr() / TAU
}

/// Exponent `a = (p₀−2)/(2(p₀−1))` of the interpolation bound. With every
/// corner angle at least `π`, `det DT⁻¹` is bounded and `a = 1/2`. Otherwise
/// `det DT⁻¹ ∈ L^{p₀}` for `p₀ < 1/(1−α/π)`; the midpoint of `(2, 1/(1−α/π))` is used.
pub fn ift_exponent(map: &ConformalMap) -> f64 {
    let sharpest = map.corners().iter().map(|c| c.angle).fold(PI, f64::min);
    if sharpest >= PI {
        return 0.5;
    }
    let p0 = 0.5 * (2.0 + 1.0 / (1.0 - sharpest / PI));
    (p0 - 2.0) / (2.0 * (p0 - 1.0))
}
