//! The stream function `L₁` used as a Liapounov functional, its bounds near
//! the boundary, its time derivative, and the Gronwall monitor along traces.
//!
//! `L₁(x) = Σ_j Γ_j G_δ(T(x), T(x_j)) + (α/2π) ln|T(x)|`, with the same
//! regularized Green function as the velocity, so `u = ∇⊥L₁` holds exactly
//! for the discrete flow. `L = −ln|L₁|` blows up only at the boundary.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::biot_savart::{
    free_term, green_mapped, image_term, mapped_field, velocity_from_sources, CirculationSpec,
    MappedSources, VortexEnsemble,
};
use crate::conformal::{ConformalMap, DomainKind, Point};
use crate::error::{FlowError, Result};
use crate::numerics::median;

/// Values of `L₁` along the path of one tracked particle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LyapunovTrace {
    pub particle_id: usize,
    pub times: Vec<f64>,
    pub l1_values: Vec<f64>,
    pub l_values: Vec<f64>,
    pub dtl1_formula: Vec<f64>,
    pub dtl1_finite_diff: Vec<f64>,
}

impl LyapunovTrace {
    pub fn new(particle_id: usize) -> Self {
        LyapunovTrace { particle_id, ..Default::default() }
    }

    pub fn push(&mut self, t: f64, l1: f64, dt_formula: f64, dt_fd: f64) {
        self.times.push(t);
        self.l1_values.push(l1);
        self.l_values.push(l_from_l1(l1));
        self.dtl1_formula.push(dt_formula);
        self.dtl1_finite_diff.push(dt_fd);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `L = −ln|L₁|`, or `+∞` once `|L₁| < 1e-300`.
pub fn l_from_l1(l1: f64) -> f64 {
    if l1.abs() < 1e-300 {
        f64::INFINITY
    } else {
        -l1.abs().ln()
    }
}

/// `L₁` at the mapped point `p`.
pub(crate) fn l1_mapped(p: Point, src: &MappedSources, alpha: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..src.t.len() {
        acc += src.gamma[j] * green_mapped(p, src.t[j], src.d2[j]);
    }
    if alpha != 0.0 {
        acc += alpha * p.norm().ln() / TAU;
    }
    acc
}

fn check_off_particles(ens: &VortexEnsemble, x: Point) -> Result<()> {
    for (j, p) in ens.particles.iter().enumerate() {
        if (p.position - x).norm() <= 1e-14 * (1.0 + x.norm()) {
            return Err(FlowError::CoincidesWithParticle(j));
        }
    }
    Ok(())
}

/// Stream function `L₁(x)`.
pub fn stream_l1(map: &ConformalMap, ens: &VortexEnsemble, circ: &CirculationSpec, x: Point) -> Result<f64> {
    check_off_particles(ens, x)?;
    let src = MappedSources::new(map, ens)?;
    Ok(l1_mapped(map.map(x)?, &src, circ.alpha))
}

/// Per-particle weights `|T'(x_j)|² (R[ω](x_j) + α T_j⊥/|T_j|²)`, i.e. `2π` times the
/// mapped-plane particle velocity.
pub(crate) fn particle_weights(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    src: &MappedSources,
    alpha: f64,
) -> Result<Vec<Point>> {
    (0..ens.len())
        .into_par_iter()
        .map(|j| {
            let d = map.derivative(ens.particles[j].position)?;
            Ok(d.norm_sqr() * mapped_field(src.t[j], src, alpha, Some(j)))
        })
        .collect()
}

/// `∂ₜL₁` at the mapped point `p`, given the particle weights.
pub(crate) fn dt_l1_mapped(p: Point, src: &MappedSources, weights: &[Point]) -> f64 {
    let mut acc = 0.0;
    for j in 0..src.t.len() {
        let q = src.t[j];
        let d2 = src.d2[j];
        let grad = free_term(q, p, d2) - image_term(q, p, d2);
        let w = weights[j];
        acc += src.gamma[j] * (grad.re * w.re + grad.im * w.im);
    }
    acc / (TAU * TAU)
}

/// `∂ₜL₁(x) = (1/4π²) Σ_j Γ_j |det DT(x_j)| ∇_y G(x, y)|_{y=x_j} · (R[ω](x_j) + α T_j⊥/|T_j|²)`.
pub fn dt_l1_formula(map: &ConformalMap, ens: &VortexEnsemble, circ: &CirculationSpec, x: Point) -> Result<f64> {
    check_off_particles(ens, x)?;
    let src = MappedSources::new(map, ens)?;
    let weights = particle_weights(map, ens, &src, circ.alpha)?;
    Ok(dt_l1_mapped(map.map(x)?, &src, &weights))
}

/// Length scale for finite differences at `x`: distance to the nearest
/// particle, corner or (estimated) boundary, capped at 1.
fn local_scale(map: &ConformalMap, ens: &VortexEnsemble, x: Point) -> Result<f64> {
    let gap = map.mapped_gap(x)?;
    let d = map.derivative(x)?.norm();
    let mut s = (gap / d).min(1.0).min(map.corner_distance(x));
    for p in &ens.particles {
        s = s.min((p.position - x).norm());
    }
    Ok(s)
}

/// `|u·∇L₁| / (|u||∇L₁|)` with `∇L₁` from central differences.
pub fn orthogonality_residual(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    x: Point,
) -> Result<f64> {
    check_off_particles(ens, x)?;
    let src = MappedSources::new(map, ens)?;
    let u = velocity_from_sources(map, &src, circ.alpha, x, None)?;
    let s = 1e-6 * local_scale(map, ens, x)?;
    let l = |z: Point| -> Result<f64> { Ok(l1_mapped(map.map(z)?, &src, circ.alpha)) };
    let gx = (l(x + s)? - l(x - s)?) / (2.0 * s);
    let gy = (l(x + Point::new(0.0, s))? - l(x - Point::new(0.0, s))?) / (2.0 * s);
    let dot = u.re * gx + u.im * gy;
    Ok(dot.abs() / (u.norm() * gx.hypot(gy) + 1e-300))
}

/// Outcome of the upper pinch `|L₁| ≤ C₁ gap^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperFit {
    /// Smallest admissible `C₁`.
    pub c1: f64,
    /// `max / median` of `|L₁| / gap^{1/2}`.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Outcome of the lower pinch `L₁ ≥ C₂ gap` (sign-adjusted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerFit {
    /// Largest admissible `C₂`.
    pub c2: f64,
    /// `max / min` of `|L₁| / gap`.
    pub worst_ratio: f64,
    pub pass: bool,
}

fn l1_and_gaps(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    samples: &[Point],
) -> Result<Vec<(f64, f64)>> {
    let src = MappedSources::new(map, ens)?;
    samples
        .par_iter()
        .map(|&x| {
            let p = map.map(x)?;
            Ok((l1_mapped(p, &src, circ.alpha), map.gap_of_image(p.norm())))
        })
        .collect()
}

pub fn check_l1_upper(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    samples: &[Point],
) -> Result<UpperFit> {
    let ratios: Vec<f64> = l1_and_gaps(map, ens, circ, samples)?
        .into_iter()
        .map(|(l1, gap)| l1.abs() / gap.sqrt())
        .collect();
    let c1 = ratios.iter().cloned().fold(0.0, f64::max);
    let med = median(&ratios);
    let worst_ratio = if c1 == 0.0 { 1.0 } else { c1 / med };
    Ok(UpperFit { c1, worst_ratio, pass: worst_ratio.is_finite() && worst_ratio < 50.0 })
}

/// Sign of `L₁` implied by one-signed data, or `SignConditionViolated`.
fn pinch_sign(map: &ConformalMap, ens: &VortexEnsemble, circ: &CirculationSpec) -> Result<f64> {
    let nonpos = ens.particles.iter().all(|p| p.circulation <= 0.0);
    let nonneg = ens.particles.iter().all(|p| p.circulation >= 0.0);
    let alpha = if map.kind() == DomainKind::Interior { 0.0 } else { circ.alpha };
    if nonpos && alpha >= 0.0 {
        Ok(1.0)
    } else if nonneg && alpha <= 0.0 {
        Ok(-1.0)
    } else {
        Err(FlowError::SignConditionViolated)
    }
}

pub fn check_l1_lower(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    samples: &[Point],
) -> Result<LowerFit> {
    let sign = pinch_sign(map, ens, circ)?;
    let ratios: Vec<f64> = l1_and_gaps(map, ens, circ, samples)?
        .into_iter()
        .map(|(l1, gap)| sign * l1 / gap)
        .collect();
    let c2 = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(LowerFit { c2, worst_ratio: max / c2, pass: c2 > 0.0 && c2.is_finite() })
}

/// `C₃(g_min) = max |∂ₜL₁| / (gap (1 + |ln gap|))` over samples with gap in `[g_min, 1e-2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub c3_by_floor: Vec<(f64, f64)>,
    /// `max / min` of the fitted constants.
    pub spread: f64,
    /// Spread within 30%.
    pub stable: bool,
}

/// Checks `|∂ₜL₁(x)| ≤ C₃ gap (1 + |ln gap|)` as the gap shrinks from
/// `1e-2` to `1e-4` along the given boundary angles.
pub fn dt_l1_decay_check(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    thetas: &[f64],
) -> Result<DecayFit> {
    let src = MappedSources::new(map, ens)?;
    let weights = particle_weights(map, ens, &src, circ.alpha)?;
    let gaps = crate::numerics::log_spaced(1e-4, 1e-2, 13);
    let mut samples = Vec::new();
    for &theta in thetas {
        for &g in &gaps {
            let rho = match map.kind() {
                DomainKind::Exterior => 1.0 + g,
                DomainKind::Interior => 1.0 - g,
            };
            let p = Point::from_polar(rho, theta);
            let ratio = dt_l1_mapped(p, &src, &weights).abs() / (g * (1.0 + g.ln().abs()));
            samples.push((g, ratio));
        }
    }
    let c3_by_floor: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&floor| {
            let c = samples
                .iter()
                .filter(|(g, _)| *g >= floor * (1.0 - 1e-9))
                .map(|(_, r)| *r)
                .fold(0.0, f64::max);
            (floor, c)
        })
        .collect();
    let hi = c3_by_floor.iter().map(|c| c.1).fold(0.0, f64::max);
    let lo = c3_by_floor.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let spread = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(DecayFit { c3_by_floor, spread, stable: spread <= 1.3 })
}

/// Fitted Gronwall envelope `L(t) ≤ (L(0) + C₅/C₆) e^{C₆ t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallFit {
    pub c5: f64,
    pub c6: f64,
    /// Envelope value at the final time.
    pub envelope: f64,
    pub max_l: f64,
    pub bound_ok: bool,
}

/// Fits the smallest `C₅ ≥ 0` for each `C₆` on a grid so that
/// `L(t_{k+1}) − L(t_k) ≤ (C₅ + C₆ L(t_k)) Δt` for every step, and keeps the
/// pair with the tightest envelope at the final time. `+∞` samples are skipped.
pub fn gronwall_monitor(trace: &LyapunovTrace) -> Result<GronwallFit> {
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.l_values)
        .filter(|(_, l)| l.is_finite())
        .map(|(t, l)| (*t, *l))
        .collect();
    if pts.is_empty() {
        return Err(FlowError::EmptyTrace);
    }
    let (t0, l0) = pts[0];
    let t_end = pts.last().unwrap().0 - t0;
    let max_l = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let slopes: Vec<(f64, f64)> = pts
        .windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0), w[0].1))
        .collect();
    let envelope_for = |c6: f64| -> (f64, f64) {
        let c5 = slopes.iter().map(|(s, l)| s - c6 * l).fold(0.0, f64::max);
        let env = if c6 == 0.0 {
            l0 + c5 * t_end
        } else {
            (l0 + c5 / c6) * (c6 * t_end).exp()
        };
        (c5, env)
    };
    let mut best = (0.0, envelope_for(0.0).0, envelope_for(0.0).1);
    for c6 in crate::numerics::log_spaced(1e-6, 1e2, 161) {
        let (c5, env) = envelope_for(c6);
        if env.is_finite() && env < best.2 {
            best = (c6, c5, env);
        }
    }
    let (c6, c5, envelope) = best;
    Ok(GronwallFit { c5, c6, envelope, max_l, bound_ok: max_l <= envelope + 0.1 * envelope.abs() })
}

/// Quadrature check of `∫ |h(y)| / (|y − x||y − x*|) dy ≤ C_h (|ln(|x|−1)| + |x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TechnicFit {
    pub c_h: f64,
    /// Integral divided by `|ln(|x|−1)| + |x|`, per sample point.
    pub ratios: Vec<f64>,
}

/// `h` is supported in the annulus `1 ≤ |y| ≤ r_h`; the integral is computed
/// by the midpoint rule on an `n_r × n_θ` polar grid.
pub fn technic_bound_check(
    h: &(dyn Fn(Point) -> f64 + Sync),
    r_h: f64,
    x_samples: &[Point],
    n_r: usize,
    n_theta: usize,
) -> Result<TechnicFit> {
    if !(r_h > 1.0) {
        return Err(FlowError::InvalidArgument("support radius must exceed 1".into()));
    }
    if let Some(x) = x_samples.iter().find(|x| x.norm() <= 1.0) {
        return Err(FlowError::InvalidArgument(format!("sample {x} inside the unit disk")));
    }
    let dr = (r_h - 1.0) / n_r as f64;
    let dth = TAU / n_theta as f64;
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_r {
        let r = 1.0 + (i as f64 + 0.5) * dr;
        for k in 0..n_theta {
            let y = Point::from_polar(r, (k as f64 + 0.5) * dth);
            let hv = h(y).abs();
            if hv != 0.0 {
                nodes.push((y, hv * r * dr * dth));
            }
        }
    }
    let ratios: Vec<f64> = x_samples
        .par_iter()
        .map(|&x| {
            let xs = x / x.norm_sqr();
            let integral: f64 = nodes.iter().map(|(y, w)| w / ((y - x).norm() * (y - xs).norm())).sum();
            integral / ((x.norm() - 1.0).ln().abs() + x.norm())
        })
        .collect();
    let c_h = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(TechnicFit { c_h, ratios })
}

/// Points `T⁻¹(ρ e^{iθ})` with uniform `θ` and log-uniform mapped gap in
/// `[gap_min, gap_max]`, kept only if inside `B(0, radius_limit)`.
pub fn near_boundary_samples(
    map: &ConformalMap,
    n: usize,
    gap_min: f64,
    gap_max: f64,
    radius_limit: f64,
    seed: u64,
) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n {
        attempts += 1;
        let theta = rng.gen_range(0.0..TAU);
        let g = (gap_min.ln() + rng.gen::<f64>() * (gap_max.ln() - gap_min.ln())).exp();
        let rho = match map.kind() {
            DomainKind::Exterior => 1.0 + g,
            DomainKind::Interior => 1.0 - g,
        };
        if let Ok(x) = map.inverse(Point::from_polar(rho, theta)) {
            if x.norm() <= radius_limit && map.contains(x) {
                out.push(x);
            }
        }
    }
    out
}
