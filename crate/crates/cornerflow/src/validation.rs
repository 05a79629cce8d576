//! Invariant suites behind the `probe-map`, `kernel-test`,
//! `validate-lyapunov` and `simulate` reports.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::biot_savart::{
    circulation_probe, green_function, harmonic_field, kernel_k, plate_sheet_jump, velocity_from_sources,
    CirculationSpec, Contour, MappedSources, VortexEnsemble, VortexParticle,
};
use crate::conformal::{ConformalMap, CornerFit, DomainKind, MapShape, Point};
use crate::error::{FlowError, Result};
use crate::lyapunov::{
    check_l1_lower, check_l1_upper, dt_l1_decay_check, dt_l1_formula, gronwall_monitor, near_boundary_samples,
    orthogonality_residual, stream_l1, LyapunovTrace,
};
use crate::numerics::{linear_fit, log_spaced};
use crate::transport::{step_rk4, FlowState, SimulationOutput};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeMapReport {
    pub beta: Option<f64>,
    pub beta_tilde: Option<[f64; 2]>,
    pub corner_fits: Vec<CornerFitReport>,
    pub roundtrip_max_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerFitReport {
    pub angle: f64,
    pub expected_exponent: f64,
    pub fitted_exponent: f64,
}

impl From<CornerFit> for CornerFitReport {
    fn from(c: CornerFit) -> Self {
        CornerFitReport { angle: c.angle, expected_exponent: c.expected_exponent, fitted_exponent: c.fitted_exponent }
    }
}

/// Far-field constants, corner exponents of every declared corner and the
/// worst round-trip error `|T⁻¹(T(z)) − z|` over 1000 samples.
pub fn probe_map(map: &ConformalMap) -> Result<ProbeMapReport> {
    let corner_fits = map
        .corners()
        .iter()
        .filter(|c| (c.angle - PI).abs() > 1e-12)
        .map(|c| map.corner_exponent_default(c).map(CornerFitReport::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeMapReport {
        beta: map.farfield_beta(),
        beta_tilde: map.farfield_beta_tilde().map(|b| [b.re, b.im]),
        corner_fits,
        roundtrip_max_error: map.roundtrip_max_error(1000, 0)?,
    })
}

/// One line of the `kernel-test` report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCheck {
    pub check_name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl KernelCheck {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        KernelCheck {
            check_name: name.to_string(),
            max_error,
            tolerance,
            pass: max_error.is_finite() && max_error <= tolerance,
        }
    }
}

/// Points of the domain drawn through the inverse map, at mapped radius in
/// `[1.05, 3]` (exterior) or `[0.1, 0.9]` (interior), away from corners.
pub fn domain_samples(map: &ConformalMap, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = match map.kind() {
        DomainKind::Exterior => (1.05, 3.0),
        DomainKind::Interior => (0.1, 0.9),
    };
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n {
        attempts += 1;
        let w = Point::from_polar(rng.gen_range(lo..hi), rng.gen_range(0.0..TAU));
        if let Ok(x) = map.inverse(w) {
            if map.contains(x) && map.corner_distance(x) > 1e-2 {
                out.push(x);
            }
        }
    }
    out
}

fn obstacle_extent(map: &ConformalMap) -> f64 {
    (0..256).map(|k| map.boundary_point(TAU * k as f64 / 256.0).norm()).fold(0.0, f64::max)
}

fn decay_slope(f: &dyn Fn(Point) -> Result<Point>, direction: f64) -> Result<f64> {
    let rs = log_spaced(1e2, 1e4, 9);
    let mut ys = Vec::with_capacity(rs.len());
    for &r in &rs {
        ys.push(f(Point::from_polar(r, direction))?.norm().ln());
    }
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    linear_fit(&xs, &ys).map(|f| f.0).ok_or(FlowError::FitDegenerate)
}

/// Ensemble used by the checks that need vorticity: the configured patch if
/// any, else a single unit vortex in the domain.
fn probe_ensemble(map: &ConformalMap, ens: &VortexEnsemble) -> VortexEnsemble {
    if !ens.is_empty() {
        return ens.clone();
    }
    let w = match map.kind() {
        DomainKind::Exterior => Point::from_polar(1.8, 0.9),
        DomainKind::Interior => Point::from_polar(0.4, 0.9),
    };
    let x = map.inverse(w).unwrap_or(w);
    VortexEnsemble::new(vec![VortexParticle { position: x, circulation: 1.0, blob_radius: 0.05 }], 1.0)
}

/// Kernel and velocity identities for the given domain. `ens`/`gamma0`
/// describe the configured initial data; an empty ensemble is replaced by a
/// single probe vortex where vorticity is needed.
pub fn kernel_test_suite(map: &ConformalMap, ens: &VortexEnsemble, gamma0: f64) -> Result<Vec<KernelCheck>> {
    let mut checks = Vec::new();
    let pts = domain_samples(map, 400, 11);
    let exterior = map.kind() == DomainKind::Exterior;

    let mut sym: f64 = 0.0;
    for pair in pts.chunks(2).take(200) {
        let (x, y) = (pair[0], pair[1]);
        sym = sym.max((green_function(map, x, y)? - green_function(map, y, x)?).abs());
    }
    checks.push(KernelCheck::new("green_symmetry", sym, 1e-12));

    let mut trace: f64 = 0.0;
    let rho = if exterior { 1.0 + 1e-8 } else { 1.0 - 1e-8 };
    for k in 0..64 {
        let w = Point::from_polar(rho, TAU * (k as f64 + 0.5) / 64.0);
        if let Ok(x) = map.inverse(w) {
            if map.contains(x) {
                trace = trace.max(green_function(map, x, pts[k])?.abs());
            }
        }
    }
    checks.push(KernelCheck::new("green_boundary_trace", trace, 1e-6));

    let mut fd: f64 = 0.0;
    for pair in pts.chunks(2).skip(200 / 2).take(20) {
        let (x, y) = (pair[0], pair[1]);
        let k = kernel_k(map, x, y)?;
        let s = 1e-6 * (x - y).norm().min(map.boundary_distance(x)).min(1.0);
        let gx = (green_function(map, x + s, y)? - green_function(map, x - s, y)?) / (2.0 * s);
        let gy = (green_function(map, x + Point::new(0.0, s), y)? - green_function(map, x - Point::new(0.0, s), y)?)
            / (2.0 * s);
        let perp = Point::new(-gy, gx);
        fd = fd.max((k - perp).norm() / k.norm());
    }
    checks.push(KernelCheck::new("kernel_perp_gradient", fd, 1e-5));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut frac: f64 = 0.0;
    for _ in 0..1000 {
        let a = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let b = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let lhs = (a / a.norm_sqr() - b / b.norm_sqr()).norm();
        let rhs = (a - b).norm() / (a.norm() * b.norm());
        frac = frac.max((lhs - rhs).abs() / rhs);
    }
    checks.push(KernelCheck::new("fraction_identity", frac, 1e-12));

    let probe = probe_ensemble(map, ens);
    let probe_gamma0 = if exterior { gamma0 } else { 0.0 };
    let circ = CirculationSpec::new(map, probe_gamma0, &probe)?;
    let src = MappedSources::new(map, &probe)?;

    if exterior {
        let r = 2.0 * obstacle_extent(map).max(probe.support_radius()) + 1.0;
        let h = circulation_probe(map, &VortexEnsemble::empty(), &CirculationSpec::new(map, 1.0, &VortexEnsemble::empty())?, &Contour::circle(map.obstacle_point(), r))?;
        checks.push(KernelCheck::new("harmonic_circulation", (h - 1.0).abs(), 1e-6));

        let slope = decay_slope(&|x| harmonic_field(map, x), 0.7)?;
        checks.push(KernelCheck::new("harmonic_decay_slope", (slope + 1.0).abs(), 0.01));

        // α = 0: the far field is dipolar
        let zero = CirculationSpec { gamma0: -probe.total_circulation(), alpha: 0.0 };
        let slope = decay_slope(&|x| velocity_from_sources(map, &src, zero.alpha, x, None), 0.7)?;
        checks.push(KernelCheck::new("zero_alpha_decay_slope", (slope + 2.0).abs(), 0.05));
    }

    let mut div: f64 = 0.0;
    let mut curl_h: f64 = 0.0;
    for &x in pts.iter().skip(300).take(50) {
        if probe.particles.iter().any(|p| (p.position - x).norm() < 4.0 * p.blob_radius) {
            continue;
        }
        let s = 1e-5 * map.boundary_distance(x).min(map.corner_distance(x)).min(1.0);
        let u = |z: Point| velocity_from_sources(map, &src, circ.alpha, z, None);
        let (ux1, ux0) = (u(x + s)?, u(x - s)?);
        let (uy1, uy0) = (u(x + Point::new(0.0, s))?, u(x - Point::new(0.0, s))?);
        let dx = (ux1 - ux0) / (2.0 * s);
        let dy = (uy1 - uy0) / (2.0 * s);
        let grad = (dx.norm_sqr() + dy.norm_sqr()).sqrt();
        div = div.max((dx.re + dy.im).abs() / grad);
        if exterior {
            let hx = (harmonic_field(map, x + s)? - harmonic_field(map, x - s)?) / (2.0 * s);
            let hy = (harmonic_field(map, x + Point::new(0.0, s))? - harmonic_field(map, x - Point::new(0.0, s))?)
                / (2.0 * s);
            let g = (hx.norm_sqr() + hy.norm_sqr()).sqrt();
            curl_h = curl_h.max((hx.im - hy.re).abs() / g).max((hx.re + hy.im).abs() / g);
        }
    }
    checks.push(KernelCheck::new("velocity_divergence", div, 1e-5));
    if exterior {
        checks.push(KernelCheck::new("harmonic_div_curl", curl_h, 1e-5));
    }

    // normal component against the largest probe speed; pointwise ratios
    // blow up at stagnation points
    let mut normal: f64 = 0.0;
    let mut speed: f64 = 0.0;
    for k in 0..128 {
        let theta = TAU * (k as f64 + 0.5) / 128.0;
        let b = map.boundary_point(theta);
        if map.corner_distance(b) <= 0.1 {
            continue;
        }
        let n = map.inward_normal(theta);
        let x = b + 1e-3 * n;
        if !map.contains(x) {
            continue;
        }
        let u = velocity_from_sources(map, &src, circ.alpha, x, None)?;
        normal = normal.max((u.re * n.re + u.im * n.im).abs());
        speed = speed.max(u.norm());
    }
    let tangency = if speed > 0.0 { normal / speed } else { 0.0 };
    checks.push(KernelCheck::new("boundary_tangency", tangency, 1e-2));

    if let MapShape::ExteriorSegment { half_length } = map.spec().shape {
        let unit = CirculationSpec::new(map, 1.0, &VortexEnsemble::empty())?;
        let mut worst: f64 = 0.0;
        for x1 in [0.0, 0.3, -0.3, 0.6, -0.6] {
            let jump = plate_sheet_jump(map, &VortexEnsemble::empty(), &unit, x1 * half_length)?;
            let s = x1;
            let exact = 1.0 / (PI * half_length * (1.0 - s * s).sqrt());
            worst = worst.max((jump - exact).abs() / exact);
        }
        checks.push(KernelCheck::new("plate_sheet_jump", worst, 0.02));
    }

    let mut cr: f64 = 0.0;
    let mut dtdt: f64 = 0.0;
    for &x in pts.iter().take(100) {
        let s = 1e-6 * map.boundary_distance(x).min(1.0);
        let tx = (map.map(x + s)? - map.map(x - s)?) / (2.0 * s);
        let ty = (map.map(x + Point::new(0.0, s))? - map.map(x - Point::new(0.0, s))?) / (2.0 * s);
        // Jacobian [[a, b], [c, d]] = [[tx.re, ty.re], [tx.im, ty.im]]
        let scale = tx.norm();
        cr = cr.max((tx.re - ty.im).abs().max((ty.re + tx.im).abs()) / scale);
        let d = map.derivative(x)?;
        let (a, b) = (d.re, -d.im);
        // DT·DTᵀ for [[a, b], [−b, a]] is (a² + b²)·Id; compare with |T'|²
        let det = a * a + b * b;
        dtdt = dtdt.max((det - d.norm_sqr()).abs() / det);
    }
    checks.push(KernelCheck::new("cauchy_riemann", cr, 1e-8));
    checks.push(KernelCheck::new("jacobian_conformality", dtdt, 1e-10));

    let probe = probe_map(map)?;
    let worst_corner = probe
        .corner_fits
        .iter()
        .map(|c| (c.fitted_exponent - c.expected_exponent).abs())
        .fold(0.0, f64::max);
    checks.push(KernelCheck::new("corner_exponents", worst_corner, 0.05));
    checks.push(KernelCheck::new("map_roundtrip", probe.roundtrip_max_error, 1e-10));
    Ok(checks)
}

/// One entry of the `validate-lyapunov` report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovCheck {
    pub check: String,
    pub fitted_constants: BTreeMap<String, f64>,
    pub worst_ratio: f64,
    pub pass: bool,
}

impl LyapunovCheck {
    fn new(check: &str, constants: &[(&str, f64)], worst_ratio: f64, pass: bool) -> Self {
        LyapunovCheck {
            check: check.to_string(),
            fitted_constants: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            worst_ratio,
            pass,
        }
    }
}

/// Relative mismatch of the `∂ₜL₁` formula against its finite difference,
/// with a floor of `1e-9` on the denominator.
pub fn dt_relative_error(formula: f64, fd: f64) -> f64 {
    (formula - fd).abs() / formula.abs().max(fd.abs()).max(1e-9)
}

fn off_particles(ens: &VortexEnsemble, x: Point, factor: f64) -> bool {
    ens.particles.iter().all(|p| (p.position - x).norm() > factor * p.blob_radius.max(1e-6))
}

/// Liapounov checks on one snapshot, plus trace-based checks when a trace
/// is supplied. The lower pinch and the decay fit need the sign conditions
/// and are skipped with a warning otherwise.
pub fn validate_lyapunov(
    map: Arc<ConformalMap>,
    ens: &VortexEnsemble,
    gamma0: f64,
    trace: Option<&LyapunovTrace>,
) -> Result<Vec<LyapunovCheck>> {
    let circ = CirculationSpec::new(&map, gamma0, ens)?;
    let mut checks = Vec::new();

    let samples: Vec<Point> =
        domain_samples(&map, 400, 21).into_iter().filter(|&x| off_particles(ens, x, 2.0)).take(100).collect();
    let mut ortho: f64 = 0.0;
    for &x in &samples {
        ortho = ortho.max(orthogonality_residual(&map, ens, &circ, x)?);
    }
    checks.push(LyapunovCheck::new("orthogonality", &[], ortho, ortho < 1e-5));

    let mut corner_ortho: f64 = 0.0;
    let mut any_corner = false;
    for c in map.corners().iter().filter(|c| (c.angle - PI).abs() > 1e-12) {
        let x = c.location + 1e-3 * c.bisector;
        if map.contains(x) && off_particles(ens, x, 2.0) {
            any_corner = true;
            corner_ortho = corner_ortho.max(orthogonality_residual(&map, ens, &circ, x)?);
        }
    }
    if any_corner {
        checks.push(LyapunovCheck::new("orthogonality_near_corner", &[], corner_ortho, corner_ortho < 1e-4));
    }

    // ∂ₜL₁ against a centred difference of micro-steps from this snapshot
    let state = FlowState::new(map.clone(), ens.clone(), gamma0)?;
    let eps = 1e-4;
    let fwd = step_rk4(&state, eps)?;
    let bwd = step_rk4(&state, -eps)?;
    let mut dt_err: f64 = 0.0;
    for &x in samples.iter().filter(|&&x| off_particles(ens, x, 4.0)).take(20) {
        let f = dt_l1_formula(&map, ens, &circ, x)?;
        let d = (stream_l1(&map, &fwd.ensemble, &fwd.circ, x)? - stream_l1(&map, &bwd.ensemble, &bwd.circ, x)?)
            / (2.0 * eps);
        dt_err = dt_err.max(dt_relative_error(f, d));
    }
    checks.push(LyapunovCheck::new("dtl1_formula_vs_finite_difference", &[], dt_err, dt_err < 1e-3));

    let radius_limit = 2.0 * ens.support_radius().max(obstacle_extent(&map)) + 2.0;
    let near = near_boundary_samples(&map, 1000, 1e-4, 1e-1, radius_limit, 31);
    let upper = check_l1_upper(&map, ens, &circ, &near)?;
    checks.push(LyapunovCheck::new("l1_upper_pinch", &[("c1", upper.c1)], upper.worst_ratio, upper.pass));

    match check_l1_lower(&map, ens, &circ, &near) {
        Ok(lower) => {
            checks.push(LyapunovCheck::new("l1_lower_pinch", &[("c2", lower.c2)], lower.worst_ratio, lower.pass));
            let thetas: Vec<f64> = (0..8).map(|k| TAU * (k as f64 + 0.25) / 8.0).collect();
            let decay = dt_l1_decay_check(&map, ens, &circ, &thetas)?;
            let consts: Vec<(String, f64)> =
                decay.c3_by_floor.iter().map(|(f, c)| (format!("c3_gap_{f:e}"), *c)).collect();
            let refs: Vec<(&str, f64)> = consts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            checks.push(LyapunovCheck::new("dtl1_boundary_decay", &refs, decay.spread, decay.stable));
        }
        Err(FlowError::SignConditionViolated) => {
            warn!("sign conditions not met; lower pinch and decay checks skipped");
        }
        Err(e) => return Err(e),
    }

    let neg = ens.negated();
    let neg_circ = CirculationSpec::new(&map, -gamma0, &neg)?;
    let mut mirror: f64 = 0.0;
    for &x in &samples {
        mirror = mirror.max((stream_l1(&map, &neg, &neg_circ, x)? + stream_l1(&map, ens, &circ, x)?).abs());
    }
    checks.push(LyapunovCheck::new("mirrored_sign_symmetry", &[], mirror, mirror == 0.0));

    if let Some(trace) = trace {
        checks.extend(trace_checks(trace)?);
    }
    Ok(checks)
}

/// Formula/finite-difference agreement and the Gronwall envelope along a trace.
pub fn trace_checks(trace: &LyapunovTrace) -> Result<Vec<LyapunovCheck>> {
    let mut out = Vec::new();
    let err = trace
        .dtl1_formula
        .iter()
        .zip(&trace.dtl1_finite_diff)
        .filter(|(_, d)| d.is_finite())
        .map(|(f, d)| dt_relative_error(*f, *d))
        .fold(0.0, f64::max);
    out.push(LyapunovCheck::new(
        &format!("trace_{}_dtl1_formula_vs_finite_difference", trace.particle_id),
        &[],
        err,
        err < 1e-3,
    ));
    let g = gronwall_monitor(trace)?;
    let ratio = if g.envelope > 0.0 { g.max_l / g.envelope } else { f64::NAN };
    out.push(LyapunovCheck::new(
        &format!("trace_{}_gronwall", trace.particle_id),
        &[("c5", g.c5), ("c6", g.c6), ("envelope", g.envelope), ("max_l", g.max_l)],
        ratio,
        g.bound_ok,
    ));
    Ok(out)
}

/// One named invariant of a run summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub all_invariants: Vec<InvariantResult>,
    pub sign_conditions_met: bool,
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.all_invariants.iter().all(|i| i.pass)
    }
}

fn inv(name: &str, value: f64, tolerance: f64, pass: bool) -> InvariantResult {
    InvariantResult { name: name.to_string(), pass, value, tolerance }
}

/// Largest departure of a recorded series from its first value.
fn drift(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max)
}

/// Evaluates the run invariants. Boundary avoidance is armed only under the
/// sign conditions.
pub fn summarize_run(out: &SimulationOutput, map: &ConformalMap) -> Result<RunSummary> {
    let mut all = Vec::new();
    let mut notes = Vec::new();
    let recs = &out.records;
    let circ = drift(recs.iter().map(|r| r.total_circulation));
    all.push(inv("total_circulation_constant", circ, 0.0, circ == 0.0));
    let l1 = drift(recs.iter().map(|r| r.l1_proxy));
    all.push(inv("l1_proxy_constant", l1, 0.0, l1 == 0.0));
    let linf = drift(recs.iter().map(|r| r.linf_proxy));
    all.push(inv("linf_proxy_constant", linf, 0.0, linf == 0.0));
    if map.kind() == DomainKind::Exterior {
        let g = recs.iter().map(|r| (r.gamma - out.gamma0).abs()).fold(0.0, f64::max);
        all.push(inv("gamma_conserved", g, 1e-3, g <= 1e-3));
    }
    let excess = recs
        .iter()
        .map(|r| r.support_radius - (out.r0 + out.support_speed * r.time))
        .fold(f64::NEG_INFINITY, f64::max);
    all.push(inv("support_bound", excess.max(0.0), 1e-12 * (1.0 + out.r0), out.support_bound_holds()));
    if out.sign_conditions {
        let g0 = recs[0].min_mapped_gap;
        if g0.is_finite() {
            let ratio = recs.iter().map(|r| r.min_mapped_gap / g0).fold(f64::INFINITY, f64::min);
            all.push(inv("boundary_avoidance_gap_ratio", ratio, 0.5, ratio >= 0.5));
        }
    } else {
        notes.push("sign conditions not met".to_string());
    }
    for trace in &out.traces {
        let err = trace
            .dtl1_formula
            .iter()
            .zip(&trace.dtl1_finite_diff)
            .filter(|(_, d)| d.is_finite())
            .map(|(f, d)| dt_relative_error(*f, *d))
            .fold(0.0, f64::max);
        all.push(inv(&format!("trace_{}_dtl1_formula_vs_finite_difference", trace.particle_id), err, 1e-3, err < 1e-3));
        if out.sign_conditions {
            let g = gronwall_monitor(trace)?;
            let ratio = if g.envelope > 0.0 { g.max_l / g.envelope } else { f64::NAN };
            all.push(inv(&format!("trace_{}_gronwall", trace.particle_id), ratio, 1.1, g.bound_ok));
        }
    }
    Ok(RunSummary { all_invariants: all, sign_conditions_met: out.sign_conditions, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::DomainSpec;

    fn plate() -> ConformalMap {
        ConformalMap::new(
            DomainSpec::new(DomainKind::Exterior, MapShape::ExteriorSegment { half_length: 1.0 }, &[]).unwrap(),
        )
    }

    #[test]
    fn plate_probe_report() {
        let r = probe_map(&plate()).unwrap();
        assert_eq!(r.beta, Some(2.0));
        assert_eq!(r.corner_fits.len(), 2);
        for c in &r.corner_fits {
            assert!((c.fitted_exponent + 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn kernel_suite_passes_on_plate() {
        let checks = kernel_test_suite(&plate(), &VortexEnsemble::empty(), 1.0).unwrap();
        for c in &checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(checks.iter().any(|c| c.check_name == "plate_sheet_jump"));
    }

    #[test]
    fn kernel_suite_passes_on_disk_and_lens() {
        for (kind, shape) in [
            (DomainKind::Exterior, MapShape::UnitDiskIdentity),
            (DomainKind::Exterior, MapShape::ExteriorEllipse { semi_major: 2.0, semi_minor: 1.0 }),
            (DomainKind::Interior, MapShape::InteriorWedgeLens { angle: 1.5 * PI }),
        ] {
            let m = ConformalMap::new(DomainSpec::new(kind, shape, &[]).unwrap());
            let g = if kind == DomainKind::Exterior { 1.0 } else { 0.0 };
            for c in kernel_test_suite(&m, &VortexEnsemble::empty(), g).unwrap() {
                assert!(c.pass, "{shape:?} {c:?}");
            }
        }
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(dt_relative_error(0.0, 0.0), 0.0);
        assert!((dt_relative_error(1.0, 1.001) - 0.001 / 1.001).abs() < 1e-15);
    }

    #[test]
    fn samples_inside() {
        let m = plate();
        let s = domain_samples(&m, 100, 3);
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|&x| m.contains(x)));
    }
}
