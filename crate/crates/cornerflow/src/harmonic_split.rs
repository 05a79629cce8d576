//! Split of the velocity into the free-space Biot–Savart part `v` and the
//! boundary correction `w = u − v`, with the harmonicity, projection and
//! twin-run checks built on it.
//!
//! Outside the domain the velocity is extended by zero, so on the obstacle
//! `w = −v`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::biot_savart::{velocity_from_sources, CirculationSpec, MappedSources, VortexEnsemble};
use crate::config::{RunConfig, TimeStep};
use crate::conformal::{ConformalMap, Point};
use crate::error::{FlowError, Result};
use crate::numerics::linear_fit;
use crate::transport::{auto_dt, patch_from_config, simulate_from, FlowState, RunOptions};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Rectangular lattice `origin + (i·spacing, j·spacing)`, `i < nx`, `j < ny`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Cell-centred lattice on the square `[−r, r]²`.
    pub fn covering(radius: f64, spacing: f64) -> Self {
        let n = ((2.0 * radius / spacing).ceil() as usize).max(1);
        let half = 0.5 * spacing * n as f64;
        GridSpec {
            origin: Point::new(-half + 0.5 * spacing, -half + 0.5 * spacing),
            spacing,
            nx: n,
            ny: n,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes in row-major order.
    pub fn points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                pts.push(self.origin + Point::new(i as f64, j as f64) * self.spacing);
            }
        }
        pts
    }

    /// Discrete `L²` norm `(Σ|f|² h²)^{1/2}` of samples on this grid.
    pub fn l2_norm(&self, samples: &[Point]) -> f64 {
        (samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.spacing * self.spacing).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitField {
    pub grid: GridSpec,
    pub v_samples: Vec<Point>,
    pub w_samples: Vec<Point>,
}

/// Free-space field `v(x) = Σ Γ_j (x − x_j)⊥ / (2π(|x − x_j|² + δ_j²))`.
pub fn freespace_velocity(ens: &VortexEnsemble, x: Point) -> Point {
    let mut acc = Point::new(0.0, 0.0);
    for p in &ens.particles {
        let d = x - p.position;
        acc += p.circulation * d / (d.norm_sqr() + p.blob_radius * p.blob_radius);
    }
    I * acc / TAU
}

/// `v_a − v_b` at `x`, summed as one ensemble.
fn freespace_difference(a: &VortexEnsemble, b: &VortexEnsemble, x: Point) -> Point {
    freespace_velocity(a, x) - freespace_velocity(b, x)
}

/// Velocity extended by zero outside the domain.
fn extended_velocity(map: &ConformalMap, src: &MappedSources, alpha: f64, x: Point) -> Result<Point> {
    if !map.contains(x) {
        return Ok(Point::new(0.0, 0.0));
    }
    velocity_from_sources(map, src, alpha, x, None)
}

/// Samples `v` and `w = u − v` on the grid.
pub fn split_field(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    grid: &GridSpec,
) -> Result<SplitField> {
    let src = MappedSources::new(map, ens)?;
    let pts = grid.points();
    let vw: Vec<(Point, Point)> = pts
        .par_iter()
        .map(|&x| {
            let v = freespace_velocity(ens, x);
            let u = extended_velocity(map, &src, circ.alpha, x)?;
            Ok((v, u - v))
        })
        .collect::<Result<_>>()?;
    Ok(SplitField {
        grid: *grid,
        v_samples: vw.iter().map(|s| s.0).collect(),
        w_samples: vw.iter().map(|s| s.1).collect(),
    })
}

/// `w = u − v` at a single point of the domain.
pub fn boundary_correction(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    x: Point,
) -> Result<Point> {
    let src = MappedSources::new(map, ens)?;
    Ok(velocity_from_sources(map, &src, circ.alpha, x, None)? - freespace_velocity(ens, x))
}

/// `|f(c) − ⟨f⟩_circle| / (|f(c)| + 1e-300)`, circle average by the 256-node
/// trapezoid rule. No check is made that the disk is vorticity-free.
pub fn mean_value_residual(
    field: &(dyn Fn(Point) -> Result<Point> + Sync),
    center: Point,
    radius: f64,
) -> Result<f64> {
    const NODES: usize = 256;
    let mut avg = Point::new(0.0, 0.0);
    for k in 0..NODES {
        avg += field(center + Point::from_polar(radius, TAU * k as f64 / NODES as f64))?;
    }
    avg /= NODES as f64;
    let fc = field(center)?;
    Ok((fc - avg).norm() / (fc.norm() + 1e-300))
}

/// Verifies that `B(center, radius)` lies in the domain and that no particle
/// lies within `radius + 3δ_j` of the centre.
pub fn check_collar_disk(map: &ConformalMap, ens: &VortexEnsemble, center: Point, radius: f64) -> Result<()> {
    if !map.contains(center) || map.boundary_distance(center) <= radius {
        return Err(FlowError::DiskLeavesRegion);
    }
    if ens
        .particles
        .iter()
        .any(|p| (p.position - center).norm() < radius + 3.0 * p.blob_radius)
    {
        return Err(FlowError::DiskContainsVorticity);
    }
    Ok(())
}

/// Mean-value residual of `w` on a vorticity-free disk inside the domain.
pub fn collar_residual(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    center: Point,
    radius: f64,
) -> Result<f64> {
    check_collar_disk(map, ens, center, radius)?;
    let src = MappedSources::new(map, ens)?;
    let w = |x: Point| -> Result<Point> {
        Ok(velocity_from_sources(map, &src, circ.alpha, x, None)? - freespace_velocity(ens, x))
    };
    mean_value_residual(&w, center, radius)
}

/// Residuals at radius `ρ` and `ρ/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingCheck {
    pub residual: f64,
    pub residual_half: f64,
    /// `residual_half ≤ residual/2 + 1e-13`.
    pub halves: bool,
}

pub fn collar_halving(
    map: &ConformalMap,
    ens: &VortexEnsemble,
    circ: &CirculationSpec,
    center: Point,
    radius: f64,
) -> Result<HalvingCheck> {
    let residual = collar_residual(map, ens, circ, center, radius)?;
    let residual_half = collar_residual(map, ens, circ, center, 0.5 * radius)?;
    Ok(HalvingCheck { residual, residual_half, halves: residual_half <= 0.5 * residual + 1e-13 })
}

/// Gradient of a harmonic field against its mean-value bound
/// `|∇w(c)| ≤ (2/R₁)·max_{|y−c|=R₁} |w(y)|`. Returns `(|∇w(c)|, bound)`;
/// the gradient is a central difference (Frobenius norm).
pub fn gradient_mean_value_check(
    field: &(dyn Fn(Point) -> Result<Point> + Sync),
    center: Point,
    r1: f64,
) -> Result<(f64, f64)> {
    let h = 1e-5 * r1;
    let dx = (field(center + h)? - field(center - h)?) / (2.0 * h);
    let dy = (field(center + I * h)? - field(center - I * h)?) / (2.0 * h);
    let grad = (dx.norm_sqr() + dy.norm_sqr()).sqrt();
    let mut max_w: f64 = 0.0;
    for k in 0..256 {
        max_w = max_w.max(field(center + Point::from_polar(r1, TAU * k as f64 / 256.0))?.norm());
    }
    Ok((grad, 2.0 * max_w / r1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCheck {
    /// `‖w̃‖` on the grid.
    pub lhs: f64,
    /// `2‖ṽ‖` on the grid.
    pub rhs: f64,
    /// `lhs ≤ 1.05·rhs`.
    pub pass: bool,
}

/// Discrete check of `‖w̃‖ ≤ 2‖ṽ‖` for two ensembles with the same total
/// circulation and the same `γ₀`.
pub fn projection_inequality_check(
    ens_a: &VortexEnsemble,
    ens_b: &VortexEnsemble,
    map: &ConformalMap,
    gamma0: f64,
    grid: &GridSpec,
) -> Result<ProjectionCheck> {
    let (a, b) = (ens_a.total_circulation(), ens_b.total_circulation());
    if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1e-300) && (a - b).abs() > 1e-300 {
        return Err(FlowError::CirculationMismatch { a, b });
    }
    let ca = CirculationSpec::new(map, gamma0, ens_a)?;
    let cb = CirculationSpec::new(map, gamma0, ens_b)?;
    let sa = MappedSources::new(map, ens_a)?;
    let sb = MappedSources::new(map, ens_b)?;
    let pts = grid.points();
    let vw: Vec<(Point, Point)> = pts
        .par_iter()
        .map(|&x| {
            let v = freespace_difference(ens_a, ens_b, x);
            let u = extended_velocity(map, &sa, ca.alpha, x)? - extended_velocity(map, &sb, cb.alpha, x)?;
            Ok((v, u - v))
        })
        .collect::<Result<_>>()?;
    let v: Vec<Point> = vw.iter().map(|s| s.0).collect();
    let w: Vec<Point> = vw.iter().map(|s| s.1).collect();
    let lhs = grid.l2_norm(&w);
    let rhs = 2.0 * grid.l2_norm(&v);
    Ok(ProjectionCheck { lhs, rhs, pass: lhs <= 1.05 * rhs })
}

/// How the second member of a twin run differs from the first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Same configuration, run twice.
    Identical,
    /// Every particle displaced by exactly `ε` in a random direction.
    Jitter(f64),
    /// Patch discretized with `h/2`.
    Refine,
}

/// Displaces each particle by `ε e^{iθ_j}`, `θ_j` drawn from a seeded ChaCha8 stream.
pub fn jitter_ensemble(ens: &VortexEnsemble, eps: f64, seed: u64) -> VortexEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<Point> = ens
        .positions()
        .into_iter()
        .map(|x| x + Point::from_polar(eps, rng.gen_range(0.0..TAU)))
        .collect();
    ens.with_positions(&pos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinRunReport {
    pub times: Vec<f64>,
    /// `‖v_a − v_b‖` on the grid at each output time.
    pub gaps: Vec<f64>,
    /// Slope of `ln gap` against `t` over the outputs up to each time
    /// (`NaN` while fewer than two positive gaps are available).
    pub running_rates: Vec<f64>,
    /// Rate fitted over the whole run (0 if the gap vanishes).
    pub rate: f64,
    pub grid: GridSpec,
    pub dt: f64,
}

fn rate_fit(times: &[f64], gaps: &[f64]) -> Option<f64> {
    let (t, g): (Vec<f64>, Vec<f64>) =
        times.iter().zip(gaps).filter(|(_, g)| **g > 0.0).map(|(t, g)| (*t, g.ln())).unzip();
    if t.len() < 2 {
        return None;
    }
    linear_fit(&t, &g).map(|(slope, _)| slope)
}

/// Runs the configuration and a perturbed twin with a common time step and
/// records the `L²` distance of their free-space velocities on a grid
/// covering `B(0, R₀ + C T* + 2)` with the patch spacing.
pub fn twin_run_divergence(config: &RunConfig, perturbation: Perturbation) -> Result<TwinRunReport> {
    let map = Arc::new(ConformalMap::new(config.domain.clone()));
    let (ens_a, h) = match &config.patch {
        Some(p) => (patch_from_config(&map, p)?, p.h),
        None => (VortexEnsemble::empty(), 1.0),
    };
    let ens_b = match perturbation {
        Perturbation::Identical => ens_a.clone(),
        Perturbation::Jitter(eps) => jitter_ensemble(&ens_a, eps, config.seed),
        Perturbation::Refine => match &config.patch {
            Some(p) => {
                let mut fine = *p;
                fine.h = 0.5 * p.h;
                patch_from_config(&map, &fine)?
            }
            None => VortexEnsemble::empty(),
        },
    };
    let dt = match config.dt {
        TimeStep::Fixed(v) => v,
        TimeStep::Auto => {
            let da = auto_dt(&FlowState::new(map.clone(), ens_a.clone(), config.gamma0)?)?;
            let db = auto_dt(&FlowState::new(map.clone(), ens_b.clone(), config.gamma0)?)?;
            da.min(db)
        }
    };
    let opts = RunOptions {
        t_final: config.t_final,
        dt: TimeStep::Fixed(dt),
        output_stride: config.output_stride,
        tracked_particles: vec![],
        fd_epsilon: 0.0,
    };
    let run_a = simulate_from(map.clone(), ens_a, config.gamma0, &opts)?;
    let run_b = simulate_from(map.clone(), ens_b, config.gamma0, &opts)?;
    let c = run_a.support_speed.max(run_b.support_speed);
    let grid = GridSpec::covering(run_a.r0.max(run_b.r0) + c * config.t_final + 2.0, h);
    let pts = grid.points();
    let mut times = Vec::new();
    let mut gaps = Vec::new();
    let mut running_rates = Vec::new();
    for ((t, a), (_, b)) in run_a.snapshots.iter().zip(&run_b.snapshots) {
        let diff: Vec<Point> = pts.par_iter().map(|&x| freespace_difference(a, b, x)).collect();
        times.push(*t);
        gaps.push(grid.l2_norm(&diff));
        running_rates.push(rate_fit(&times, &gaps).unwrap_or(f64::NAN));
    }
    let rate = rate_fit(&times, &gaps).unwrap_or(0.0);
    Ok(TwinRunReport { times, gaps, running_rates, rate, grid, dt: run_a.dt })
}
