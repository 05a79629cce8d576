#![allow(dead_code)]

use std::f64::consts::PI;

use cornerflow::config::{parse_config, RunConfig};
use cornerflow::{ConformalMap, DomainKind, DomainSpec, MapShape};

pub fn plate() -> ConformalMap {
    ConformalMap::new(DomainSpec::new(DomainKind::Exterior, MapShape::ExteriorSegment { half_length: 1.0 }, &[]).unwrap())
}

pub fn disk() -> ConformalMap {
    ConformalMap::new(DomainSpec::new(DomainKind::Exterior, MapShape::UnitDiskIdentity, &[]).unwrap())
}

pub fn ellipse() -> ConformalMap {
    ConformalMap::new(
        DomainSpec::new(DomainKind::Exterior, MapShape::ExteriorEllipse { semi_major: 2.0, semi_minor: 1.0 }, &[])
            .unwrap(),
    )
}

pub fn wedge(angle: f64) -> ConformalMap {
    ConformalMap::new(DomainSpec::new(DomainKind::Interior, MapShape::InteriorWedgeLens { angle }, &[]).unwrap())
}

pub fn wedge_270() -> ConformalMap {
    wedge(1.5 * PI)
}

/// Uniform `ω₀ = −1` disk patch of radius 0.15 next to the right tip of the
/// unit plate, `γ₀ = 1`.
pub fn near_tip_config(h: f64, dt: &str, t_final: f64, stride: usize, tracked: &str) -> RunConfig {
    parse_config(&format!(
        r#"
gamma0 = 1.0
t_final = {t_final}
dt = {dt}
output_stride = {stride}
tracked_particles = {tracked}
seed = 3

[domain]
kind = "exterior"
map = "exterior_segment"
half_length = 1.0

[patch]
shape = "disk"
center = [1.2, 0.15]
size = 0.15
h = {h}
omega0 = {{ uniform = -1.0 }}
"#
    ))
    .unwrap()
}

/// Disk patch of radius 0.3 at `(1.6, 0.6)` beside the plate.
pub fn plate_patch_config(h: f64, stride: usize) -> RunConfig {
    parse_config(&format!(
        r#"
gamma0 = 1.0
t_final = 5.0
dt = "auto"
output_stride = {stride}
seed = 3

[domain]
kind = "exterior"
map = "exterior_segment"

[patch]
shape = "disk"
center = [1.6, 0.6]
size = 0.3
h = {h}
omega0 = {{ uniform = -1.0 }}
"#
    ))
    .unwrap()
}
