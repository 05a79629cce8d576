//! Lagrangian transport of the vortex blobs with fixed-step RK4, and the
//! per-step diagnostics of a run.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;

use crate::biot_savart::{
    circulation_probe, mapped_field, segment_hits_slit, velocity_from_sources, CirculationSpec, Contour, MappedSources,
    VortexEnsemble, VortexParticle,
};
use crate::config::{sign_conditions_met, PatchConfig, PatchShape, RunConfig, TimeStep};
use crate::conformal::{ConformalMap, DomainKind, Point};
use crate::error::{FlowError, Result};
use crate::lyapunov::{dt_l1_mapped, l1_mapped, l_from_l1, particle_weights, LyapunovTrace};
use crate::numerics::median;

#[derive(Debug, Clone)]
pub struct FlowState {
    pub time: f64,
    pub ensemble: VortexEnsemble,
    pub circ: CirculationSpec,
    pub map: Arc<ConformalMap>,
}

impl FlowState {
    pub fn new(map: Arc<ConformalMap>, ensemble: VortexEnsemble, gamma0: f64) -> Result<Self> {
        let circ = CirculationSpec::new(&map, gamma0, &ensemble)?;
        Ok(FlowState { time: 0.0, ensemble, circ, map })
    }

    /// `min_j` mapped gap, `+∞` without particles.
    pub fn min_mapped_gap(&self) -> Result<f64> {
        let mut g = f64::INFINITY;
        for p in &self.ensemble.particles {
            g = g.min(self.map.mapped_gap(p.position)?);
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub total_circulation: f64,
    pub l1_proxy: f64,
    pub linf_proxy: f64,
    pub support_radius: f64,
    pub min_mapped_gap: f64,
    /// Circulation around the obstacle measured on a fixed large contour.
    pub gamma: f64,
    /// `max L` over tracked particles, `NaN` when none are tracked.
    pub lyapunov_max: f64,
}

struct Rates {
    velocity: Vec<Point>,
    mapped_speed: Vec<f64>,
    gaps: Vec<f64>,
}

fn rates(map: &ConformalMap, ens: &VortexEnsemble, alpha: f64) -> Result<Rates> {
    let src = MappedSources::new(map, ens)?;
    let out: Vec<(Point, f64, f64)> = (0..ens.len())
        .into_par_iter()
        .map(|i| {
            let d = map.derivative(ens.particles[i].position)?;
            let u = d.conj() * mapped_field(src.t[i], &src, alpha, Some(i)) / TAU;
            Ok((u, d.norm() * u.norm(), map.gap_of_image(src.t[i].norm())))
        })
        .collect::<Result<_>>()?;
    for (i, o) in out.iter().enumerate() {
        if o.2 < 1e-12 {
            return Err(FlowError::ParticleOnBoundary { index: i, gap: o.2 });
        }
    }
    Ok(Rates {
        velocity: out.iter().map(|o| o.0).collect(),
        mapped_speed: out.iter().map(|o| o.1).collect(),
        gaps: out.iter().map(|o| o.2).collect(),
    })
}

/// Particle velocities; each particle skips its own free term.
pub fn rhs(state: &FlowState) -> Result<Vec<Point>> {
    Ok(rates(&state.map, &state.ensemble, state.circ.alpha)?.velocity)
}

/// Largest admissible step `0.5 · min gap / max mapped speed` (`+∞` for a
/// static ensemble).
pub fn max_stable_dt(state: &FlowState) -> Result<f64> {
    let r = rates(&state.map, &state.ensemble, state.circ.alpha)?;
    Ok(stable_limit(&r))
}

fn stable_limit(r: &Rates) -> f64 {
    let gap = r.gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let speed = r.mapped_speed.iter().cloned().fold(0.0, f64::max);
    if speed == 0.0 {
        f64::INFINITY
    } else {
        0.5 * gap / speed
    }
}

/// Default step `0.25 · min gap / max mapped speed`, clamped to `[1e-4, 1e-1]`.
pub fn auto_dt(state: &FlowState) -> Result<f64> {
    Ok((0.5 * max_stable_dt(state)?).clamp(1e-4, 1e-1))
}

fn escaped(map: &ConformalMap, from: &[Point], to: &[Point], time: f64) -> Result<()> {
    for (i, (a, b)) in from.iter().zip(to).enumerate() {
        if !map.contains(*b) || segment_hits_slit(map, *a, *b) {
            return Err(FlowError::ParticleEscapedDomain { index: i, time });
        }
    }
    Ok(())
}

fn axpy(x: &[Point], a: f64, k: &[Point]) -> Vec<Point> {
    x.iter().zip(k).map(|(x, k)| x + a * k).collect()
}

/// One classical RK4 step. `dt` may be negative (backward integration) or
/// zero (identity).
pub fn step_rk4(state: &FlowState, dt: f64) -> Result<FlowState> {
    let r1 = rates(&state.map, &state.ensemble, state.circ.alpha)?;
    step_with(state, dt, r1)
}

fn step_with(state: &FlowState, dt: f64, r1: Rates) -> Result<FlowState> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let limit = stable_limit(&r1);
    if dt.abs() > limit {
        return Err(FlowError::StepTooLarge { dt: dt.abs(), limit });
    }
    let map = &*state.map;
    let alpha = state.circ.alpha;
    let x0 = state.ensemble.positions();
    let t = state.time;
    let k1 = r1.velocity;
    let x2 = axpy(&x0, 0.5 * dt, &k1);
    escaped(map, &x0, &x2, t + 0.5 * dt)?;
    let k2 = rates(map, &state.ensemble.with_positions(&x2), alpha)?.velocity;
    let x3 = axpy(&x0, 0.5 * dt, &k2);
    escaped(map, &x0, &x3, t + 0.5 * dt)?;
    let k3 = rates(map, &state.ensemble.with_positions(&x3), alpha)?.velocity;
    let x4 = axpy(&x0, dt, &k3);
    escaped(map, &x0, &x4, t + dt)?;
    let k4 = rates(map, &state.ensemble.with_positions(&x4), alpha)?.velocity;
    let x_new: Vec<Point> = (0..x0.len())
        .map(|i| x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    escaped(map, &x0, &x_new, t + dt)?;
    Ok(FlowState {
        time: t + dt,
        ensemble: state.ensemble.with_positions(&x_new),
        circ: state.circ,
        map: state.map.clone(),
    })
}

fn outline(patch: &PatchConfig) -> Vec<Point> {
    let n = 720;
    let circle = |r: f64| -> Vec<Point> {
        (0..n).map(|k| patch.center + Point::from_polar(r, TAU * k as f64 / n as f64)).collect()
    };
    match patch.shape {
        PatchShape::Disk => circle(patch.size),
        PatchShape::Annulus { inner } => {
            let mut pts = circle(patch.size);
            pts.extend(circle(inner));
            pts
        }
        PatchShape::Square => {
            let s = patch.size;
            let corners = [Point::new(-s, -s), Point::new(s, -s), Point::new(s, s), Point::new(-s, s)];
            let m = n / 4;
            (0..4)
                .flat_map(|e| {
                    let a = corners[e];
                    let b = corners[(e + 1) % 4];
                    (0..m).map(move |j| a + (b - a) * (j as f64 / m as f64))
                })
                .map(|p| patch.center + p)
                .collect()
        }
    }
}

/// Fails with `PatchTouchesBoundary` unless the patch outline stays more
/// than `2h` away from the boundary, and the patch region lies in the domain.
pub fn check_patch_clearance(map: &ConformalMap, patch: &PatchConfig) -> Result<()> {
    let required = 2.0 * patch.h;
    let mut distance = f64::INFINITY;
    let pts = outline(patch);
    for &z in &pts {
        if !map.contains(z) {
            return Err(FlowError::PatchTouchesBoundary { distance: 0.0, required });
        }
        distance = distance.min(map.boundary_distance(z));
    }
    // An obstacle swallowed whole by the patch is caught by its own boundary
    // point falling inside the outline.
    let b = map.boundary_point(0.0);
    let inside = match patch.shape {
        PatchShape::Disk => (b - patch.center).norm() < patch.size,
        PatchShape::Annulus { inner } => {
            let r = (b - patch.center).norm();
            r < patch.size && r > inner
        }
        PatchShape::Square => {
            let d = b - patch.center;
            d.re.abs() < patch.size && d.im.abs() < patch.size
        }
    };
    if inside {
        distance = 0.0;
    }
    if distance <= required {
        return Err(FlowError::PatchTouchesBoundary { distance, required });
    }
    Ok(())
}

/// Cell centres and common cell area for the patch.
///
/// Disks and annuli use rings of equal-area cells, so a uniform `ω₀` gets the
/// exact total circulation; squares use a plain lattice.
fn patch_cells(shape: PatchShape, center: Point, size: f64, h: f64) -> (Vec<Point>, f64) {
    match shape {
        PatchShape::Square => {
            let n = ((2.0 * size / h).round() as usize).max(1);
            let dx = 2.0 * size / n as f64;
            let mut pts = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    pts.push(
                        center
                            + Point::new(-size + (j as f64 + 0.5) * dx, -size + (i as f64 + 0.5) * dx),
                    );
                }
            }
            (pts, dx * dx)
        }
        PatchShape::Disk | PatchShape::Annulus { .. } => {
            let r_in = match shape {
                PatchShape::Annulus { inner } => inner,
                _ => 0.0,
            };
            let rings = (((size - r_in) / h).round() as usize).max(1);
            let width = (size - r_in) / rings as f64;
            let counts: Vec<usize> = (0..rings)
                .map(|k| {
                    let r_mid = r_in + (k as f64 + 0.5) * width;
                    ((TAU * r_mid / h).round() as usize).max(1)
                })
                .collect();
            let total: usize = counts.iter().sum();
            let area = PI * (size * size - r_in * r_in) / total as f64;
            let mut pts = Vec::with_capacity(total);
            let mut r_lo = r_in;
            for (k, &n) in counts.iter().enumerate() {
                let r_hi = if k + 1 == rings {
                    size
                } else {
                    (r_lo * r_lo + n as f64 * area / PI).sqrt()
                };
                if n == 1 && r_lo == 0.0 {
                    pts.push(center);
                } else {
                    // area centroid radius of an annular sector
                    let rc = 2.0 / 3.0 * (r_hi.powi(3) - r_lo.powi(3)) / (r_hi * r_hi - r_lo * r_lo);
                    let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
                    for i in 0..n {
                        let th = TAU * (i as f64 + shift) / n as f64;
                        pts.push(center + Point::from_polar(rc, th));
                    }
                }
                r_lo = r_hi;
            }
            (pts, area)
        }
    }
}

/// Discretizes `ω₀` on the patch with spacing `h`. Particles carry
/// `Γ_j = ω₀(x_j)·A` and the blob radius `δ = 2 h_mapped`, where `h_mapped` is
/// the median nearest-neighbour distance in the mapped plane.
pub fn patch_init(
    map: &ConformalMap,
    shape: PatchShape,
    center: Point,
    size: f64,
    omega0: &dyn Fn(Point) -> f64,
    h: f64,
) -> Result<VortexEnsemble> {
    let patch = PatchConfig { shape, center, size, omega0: crate::config::Omega0::Uniform(0.0), h };
    check_patch_clearance(map, &patch)?;
    let (pts, area) = patch_cells(shape, center, size, h);
    let mut particles = Vec::with_capacity(pts.len());
    for x in pts {
        if !map.contains(x) {
            return Err(FlowError::PatchTouchesBoundary { distance: 0.0, required: 2.0 * h });
        }
        particles.push(VortexParticle { position: x, circulation: omega0(x) * area, blob_radius: 1.0 });
    }
    let mut ens = VortexEnsemble::new(particles, area);
    let delta = blob_radius_for(map, &ens, h)?;
    for p in &mut ens.particles {
        p.blob_radius = delta;
    }
    Ok(ens)
}

/// Builds the ensemble described by a patch configuration.
pub fn patch_from_config(map: &ConformalMap, patch: &PatchConfig) -> Result<VortexEnsemble> {
    let omega = patch.omega0;
    let c = patch.center;
    patch_init(map, patch.shape, patch.center, patch.size, &move |x| omega.eval(x, c), patch.h)
}

/// `2 ×` the median nearest-neighbour distance of the particles in the mapped
/// plane; a lone particle uses its mapped cell size `h |T'|`.
pub fn blob_radius_for(map: &ConformalMap, ens: &VortexEnsemble, h: f64) -> Result<f64> {
    let n = ens.len();
    if n == 0 {
        return Ok(h);
    }
    let t: Vec<Point> = ens.particles.iter().map(|p| map.map(p.position)).collect::<Result<_>>()?;
    if n == 1 {
        return Ok(2.0 * h * map.derivative(ens.particles[0].position)?.norm());
    }
    let nn: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (t[i] - t[j]).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(2.0 * median(&nn))
}

/// A complete run: diagnostics, snapshots, Liapounov traces and the
/// constants behind the support bound.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub records: Vec<DiagnosticsRecord>,
    /// Ensemble at every output step.
    pub snapshots: Vec<(f64, VortexEnsemble)>,
    pub traces: Vec<LyapunovTrace>,
    pub dt: f64,
    pub steps: usize,
    pub gamma0: f64,
    pub alpha: f64,
    /// `support_radius(0)`.
    pub r0: f64,
    /// Speed bound `C` with `support_radius(t) ≤ R₀ + C t`: the largest field
    /// speed seen on `|x| = R₀` or by particles outside it.
    pub support_speed: f64,
    /// Radius of the circle used for the circulation probe (0 for interior domains).
    pub probe_radius: f64,
    pub sign_conditions: bool,
    pub final_state: FlowState,
}

impl SimulationOutput {
    /// Whether every record satisfies `support_radius(t) ≤ R₀ + C t`.
    pub fn support_bound_holds(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.support_radius <= self.r0 + self.support_speed * r.time + 1e-12 * (1.0 + self.r0))
    }
}

/// Options for [`simulate_from`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub t_final: f64,
    pub dt: TimeStep,
    pub output_stride: usize,
    pub tracked_particles: Vec<usize>,
    /// Time offset for the finite-difference check of `∂ₜL₁` (0 disables it).
    pub fd_epsilon: f64,
}

/// Runs the configuration from its initial patch.
pub fn simulate(config: &RunConfig) -> Result<SimulationOutput> {
    let map = Arc::new(ConformalMap::new(config.domain.clone()));
    let ens = match &config.patch {
        Some(p) => patch_from_config(&map, p)?,
        None => VortexEnsemble::empty(),
    };
    let opts = RunOptions {
        t_final: config.t_final,
        dt: config.dt,
        output_stride: config.output_stride,
        tracked_particles: config.tracked_particles.clone(),
        fd_epsilon: 1e-4,
    };
    simulate_from(map, ens, config.gamma0, &opts)
}

/// Largest field speed on the circle `|x| = r` (points in the domain, away
/// from corners).
fn circle_speed(map: &ConformalMap, ens: &VortexEnsemble, alpha: f64, r: f64) -> Result<f64> {
    const NODES: usize = 128;
    let src = MappedSources::new(map, ens)?;
    let speeds: Vec<f64> = (0..NODES)
        .into_par_iter()
        .map(|k| {
            let x = Point::from_polar(r, TAU * k as f64 / NODES as f64);
            if !map.contains(x) || map.corner_distance(x) < 1e-2 {
                return Ok(0.0);
            }
            Ok(velocity_from_sources(map, &src, alpha, x, None)?.norm())
        })
        .collect::<Result<_>>()?;
    Ok(speeds.into_iter().fold(0.0, f64::max))
}

fn obstacle_extent(map: &ConformalMap) -> f64 {
    (0..256).map(|k| map.boundary_point(TAU * k as f64 / 256.0).norm()).fold(0.0, f64::max)
}

/// Runs from an explicit initial ensemble.
pub fn simulate_from(
    map: Arc<ConformalMap>,
    ens: VortexEnsemble,
    gamma0: f64,
    opts: &RunOptions,
) -> Result<SimulationOutput> {
    if let Some(&bad) = opts.tracked_particles.iter().find(|&&i| i >= ens.len()) {
        return Err(FlowError::InvalidArgument(format!(
            "tracked particle {bad} out of range ({} particles)",
            ens.len()
        )));
    }
    let sign_conditions = sign_conditions_met(map.kind(), &ens, gamma0);
    if !sign_conditions {
        warn!("sign conditions not met; boundary-avoidance assertions disarmed");
    }
    let mut state = FlowState::new(map.clone(), ens, gamma0)?;
    let dt_nominal = match opts.dt {
        TimeStep::Fixed(v) => v,
        TimeStep::Auto => auto_dt(&state)?,
    };
    let steps = ((opts.t_final / dt_nominal) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = opts.t_final / steps as f64;
    let r0 = state.ensemble.support_radius();
    let probe_radius = match map.kind() {
        DomainKind::Exterior => 2.0 * r0.max(obstacle_extent(&map)) + 1.0,
        DomainKind::Interior => 0.0,
    };
    let mut traces: Vec<LyapunovTrace> =
        opts.tracked_particles.iter().map(|&i| LyapunovTrace::new(i)).collect();
    let mut out = SimulationOutput {
        records: Vec::new(),
        snapshots: Vec::new(),
        traces: Vec::new(),
        dt,
        steps,
        gamma0,
        alpha: state.circ.alpha,
        r0,
        support_speed: 0.0,
        probe_radius,
        sign_conditions,
        final_state: state.clone(),
    };
    let mut support_speed: f64 = 0.0;
    for step in 0..=steps {
        let r = rates(&map, &state.ensemble, state.circ.alpha)?;
        if r0 > 0.0 {
            support_speed = support_speed.max(circle_speed(&map, &state.ensemble, state.circ.alpha, r0)?);
        }
        for (p, u) in state.ensemble.particles.iter().zip(&r.velocity) {
            if p.position.norm() > r0 {
                support_speed = support_speed.max(u.norm());
            }
        }
        if step % opts.output_stride == 0 || step == steps {
            let record = record_output(&state, &r, probe_radius, opts, &mut traces)?;
            out.records.push(record);
            out.snapshots.push((state.time, state.ensemble.clone()));
        }
        if step == steps {
            break;
        }
        let x_old = state.ensemble.positions();
        let next = step_with(&state, dt, r)?;
        for (a, b) in x_old.iter().zip(next.ensemble.particles.iter()) {
            if b.position.norm() > r0 {
                support_speed = support_speed.max((b.position - a).norm() / dt);
            }
        }
        state = next;
        // keep the final time exact
        if step + 1 == steps {
            state.time = opts.t_final;
        }
    }
    out.support_speed = support_speed;
    out.traces = traces;
    out.final_state = state;
    Ok(out)
}

fn record_output(
    state: &FlowState,
    r: &Rates,
    probe_radius: f64,
    opts: &RunOptions,
    traces: &mut [LyapunovTrace],
) -> Result<DiagnosticsRecord> {
    let map = &*state.map;
    let ens = &state.ensemble;
    let gamma = if probe_radius > 0.0 {
        let contour = Contour::circle(map.obstacle_point(), probe_radius);
        let enclosed: f64 = ens
            .particles
            .iter()
            .filter(|p| contour.winding_number(p.position) != 0)
            .map(|p| p.circulation)
            .sum();
        circulation_probe(map, ens, &state.circ, &contour)? - enclosed
    } else {
        0.0
    };
    let mut lyap_max = f64::NAN;
    if !traces.is_empty() {
        let src = MappedSources::new(map, ens)?;
        let weights = particle_weights(map, ens, &src, state.circ.alpha)?;
        let (plus, minus) = if opts.fd_epsilon > 0.0 {
            let eps = opts.fd_epsilon;
            let fwd = step_rk4(state, eps)?;
            let bwd = step_rk4(state, -eps)?;
            (
                Some(MappedSources::new(map, &fwd.ensemble)?),
                Some(MappedSources::new(map, &bwd.ensemble)?),
            )
        } else {
            (None, None)
        };
        for trace in traces.iter_mut() {
            let p = src.t[trace.particle_id];
            let l1 = l1_mapped(p, &src, state.circ.alpha);
            let formula = dt_l1_mapped(p, &src, &weights);
            let fd = match (&plus, &minus) {
                (Some(a), Some(b)) => {
                    (l1_mapped(p, a, state.circ.alpha) - l1_mapped(p, b, state.circ.alpha))
                        / (2.0 * opts.fd_epsilon)
                }
                _ => f64::NAN,
            };
            trace.push(state.time, l1, formula, fd);
            let l = l_from_l1(l1);
            lyap_max = if lyap_max.is_nan() { l } else { lyap_max.max(l) };
        }
    }
    Ok(DiagnosticsRecord {
        time: state.time,
        total_circulation: ens.total_circulation(),
        l1_proxy: ens.l1_proxy(),
        linf_proxy: ens.linf_proxy(),
        support_radius: ens.support_radius(),
        min_mapped_gap: r.gaps.iter().cloned().fold(f64::INFINITY, f64::min),
        gamma,
        lyapunov_max: lyap_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{DomainSpec, MapShape};
    use approx::assert_relative_eq;

    fn disk() -> Arc<ConformalMap> {
        Arc::new(ConformalMap::new(
            DomainSpec::new(DomainKind::Exterior, MapShape::UnitDiskIdentity, &[]).unwrap(),
        ))
    }

    fn single(x: Point, gamma: f64, delta: f64) -> VortexEnsemble {
        VortexEnsemble::new(vec![VortexParticle { position: x, circulation: gamma, blob_radius: delta }], 1.0)
    }

    #[test]
    fn single_vortex_rhs() {
        let s = FlowState::new(disk(), single(Point::new(2.0, 0.0), 1.0, 1e-7), -1.0).unwrap();
        let u = rhs(&s).unwrap();
        assert!(u[0].re.abs() < 1e-16);
        assert_relative_eq!(u[0].im, -1.0 / (3.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn mirrored_pair_is_antisymmetric() {
        let a = Point::new(1.7, 0.6);
        let ens = VortexEnsemble::new(
            vec![
                VortexParticle { position: a, circulation: 0.4, blob_radius: 0.05 },
                VortexParticle { position: a.conj(), circulation: -0.4, blob_radius: 0.05 },
            ],
            1.0,
        );
        let s = FlowState::new(disk(), ens, 0.0).unwrap();
        assert_eq!(s.circ.alpha, 0.0);
        let u = rhs(&s).unwrap();
        assert!((u[0] - u[1].conj()).norm() < 1e-12);
    }

    #[test]
    fn empty_rhs() {
        let s = FlowState::new(disk(), VortexEnsemble::empty(), 1.0).unwrap();
        assert!(rhs(&s).unwrap().is_empty());
        assert_eq!(max_stable_dt(&s).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zero_step_is_identity() {
        let s = FlowState::new(disk(), single(Point::new(2.0, 0.0), 1.0, 0.1), 0.0).unwrap();
        let t = step_rk4(&s, 0.0).unwrap();
        assert_eq!(t.ensemble, s.ensemble);
        assert_eq!(t.time, s.time);
    }

    #[test]
    fn step_round_trip() {
        let s = FlowState::new(disk(), single(Point::new(2.0, 0.3), 1.0, 0.1), 0.5).unwrap();
        let back = step_rk4(&step_rk4(&s, 0.01).unwrap(), -0.01).unwrap();
        assert!((back.ensemble.particles[0].position - s.ensemble.particles[0].position).norm() < 1e-10);
    }

    #[test]
    fn oversized_step_rejected() {
        let s = FlowState::new(disk(), single(Point::new(1.1, 0.0), 1.0, 0.01), 0.0).unwrap();
        let limit = max_stable_dt(&s).unwrap();
        assert!(matches!(step_rk4(&s, 2.0 * limit), Err(FlowError::StepTooLarge { .. })));
    }

    #[test]
    fn particle_on_boundary_reported() {
        let s = FlowState::new(disk(), single(Point::new(1.0 + 1e-13, 0.0), 1.0, 0.01), 0.0).unwrap();
        assert!(matches!(rhs(&s), Err(FlowError::ParticleOnBoundary { index: 0, .. })));
    }

    #[test]
    fn uniform_disk_patch_total() {
        let m = disk();
        let h = 0.05;
        let ens = patch_init(&m, PatchShape::Disk, Point::new(3.0, 0.0), 0.5, &|_| -1.0, h).unwrap();
        assert!((ens.total_circulation() + PI / 4.0).abs() <= 2.0 * h * h);
        assert!(ens.particles.iter().all(|p| p.circulation <= 0.0));
        assert!(ens.particles.iter().all(|p| (p.position - Point::new(3.0, 0.0)).norm() < 0.5));
        // about one particle per h² of area
        let n = ens.len() as f64;
        assert!((n * h * h / (PI * 0.25) - 1.0).abs() < 0.15, "{n}");
    }

    #[test]
    fn zero_vorticity_patch() {
        let ens = patch_init(&disk(), PatchShape::Square, Point::new(0.0, 3.0), 0.4, &|_| 0.0, 0.1).unwrap();
        assert!(ens.particles.iter().all(|p| p.circulation == 0.0));
        assert_eq!(ens.len(), 64);
        assert_relative_eq!(ens.patch_cell_area, 0.01, max_relative = 1e-12);
    }

    #[test]
    fn annulus_patch_total() {
        let ens = patch_init(
            &disk(),
            PatchShape::Annulus { inner: 0.2 },
            Point::new(0.0, -3.0),
            0.6,
            &|_| 2.0,
            0.04,
        )
        .unwrap();
        assert_relative_eq!(ens.total_circulation(), 2.0 * PI * (0.36 - 0.04), max_relative = 1e-12);
        assert!(ens.particles.iter().all(|p| {
            let r = (p.position - Point::new(0.0, -3.0)).norm();
            r > 0.2 && r < 0.6
        }));
    }

    #[test]
    fn patch_touching_boundary_rejected() {
        let r = patch_init(&disk(), PatchShape::Disk, Point::new(1.55, 0.0), 0.5, &|_| -1.0, 0.05);
        assert!(matches!(r, Err(FlowError::PatchTouchesBoundary { .. })));
        let r = patch_init(&disk(), PatchShape::Disk, Point::new(0.0, 0.0), 3.0, &|_| -1.0, 0.05);
        assert!(matches!(r, Err(FlowError::PatchTouchesBoundary { .. })));
    }

    #[test]
    fn blob_radius_is_twice_spacing() {
        let ens = patch_init(&disk(), PatchShape::Square, Point::new(0.0, 4.0), 0.3, &|_| 1.0, 0.05).unwrap();
        // |T'| = 1 for the identity map
        assert_relative_eq!(ens.particles[0].blob_radius, 0.1, max_relative = 1e-9);
    }

    #[test]
    fn static_run_without_vorticity() {
        let opts = RunOptions {
            t_final: 1.0,
            dt: TimeStep::Auto,
            output_stride: 1,
            tracked_particles: vec![],
            fd_epsilon: 0.0,
        };
        let out = simulate_from(disk(), VortexEnsemble::empty(), 1.0, &opts).unwrap();
        assert_eq!(out.dt, 0.1);
        assert_eq!(out.records.len(), 11);
        for r in &out.records {
            assert_eq!(r.total_circulation, 0.0);
            assert!((r.gamma - 1.0).abs() < 1e-9);
        }
        assert!(out.support_bound_holds());
    }

    #[test]
    fn bad_tracked_index() {
        let opts = RunOptions {
            t_final: 1.0,
            dt: TimeStep::Auto,
            output_stride: 1,
            tracked_particles: vec![3],
            fd_epsilon: 0.0,
        };
        assert!(matches!(
            simulate_from(disk(), single(Point::new(2.0, 0.0), 1.0, 0.1), 0.0, &opts),
            Err(FlowError::InvalidArgument(_))
        ));
    }
}
