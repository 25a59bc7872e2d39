//! Deployment geometry.
//!
//! Coordinates are meters in a right-handed frame. The BS sits at
//! `(-200, 0, 0)`, the IRSs on a half circle in the `x = 0` plane, the devices
//! on a disk in the `y = 0` plane.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    pub fn unit(self) -> Point3 {
        self * (1.0 / self.norm())
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// An IRS panel: its center and an orthonormal frame. `normal` points at the
/// coordinate origin; `axis_x` and `axis_y` span the element grid
/// (`N_x` along `axis_x`, `N_y` along `axis_y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsPanel {
    pub position: Point3,
    pub normal: Point3,
    pub axis_x: Point3,
    pub axis_y: Point3,
}

impl IrsPanel {
    /// Panel at `position` facing the origin. The horizontal grid axis is the
    /// global x axis, which lies in the panel plane because the panel center
    /// has `x = 0`.
    pub fn facing_origin(position: Point3) -> Self {
        let normal = (Point3::ORIGIN - position).unit();
        let axis_x = Point3::new(1.0, 0.0, 0.0);
        let axis_y = normal.cross(axis_x);
        Self {
            position,
            normal,
            axis_x,
            axis_y,
        }
    }

    /// Azimuth `theta` and elevation `phi` of the direction towards `target`,
    /// defined so that `cos(phi)` is the direction cosine along `axis_x` and
    /// `sin(phi) cos(theta)` the one along `axis_y`. Broadside is
    /// `theta = phi = pi/2`.
    pub fn departure_angles(&self, target: Point3) -> (f64, f64) {
        let dir = (target - self.position).unit();
        let cx = dir.dot(self.axis_x).clamp(-1.0, 1.0);
        let cy = dir.dot(self.axis_y);
        let cn = dir.dot(self.normal);
        let elevation = cx.acos();
        // atan2 of the in-plane-y and normal components, measured from axis_y.
        let azimuth = cn.atan2(cy);
        (azimuth, elevation)
    }
}

/// IRS centers: `M` points at angles `pi*m/(M+1)`, `m = 1..M`, on the half
/// circle of the given diameter in the `x = 0` plane, on the `z >= 0` side.
pub fn irs_positions(num_irs: usize, arc_diameter: f64) -> Vec<Point3> {
    let radius = arc_diameter / 2.0;
    (1..=num_irs)
        .map(|m| {
            let angle = PI * m as f64 / (num_irs + 1) as f64;
            Point3::new(0.0, radius * angle.cos(), radius * angle.sin())
        })
        .collect()
}

/// `K` points uniform over the device disk (`y = 0` plane).
pub fn sample_device_positions<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<Point3> {
    let center = config.deployment.device_center;
    let radius = config.deployment.device_radius;
    (0..config.num_devices)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            Point3::new(center.x + r * a.cos(), 0.0, center.z + r * a.sin())
        })
        .collect()
}

/// Positions of every node in one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub bs: Point3,
    pub irs: Vec<IrsPanel>,
    pub devices: Vec<Point3>,
}

impl Layout {
    /// Fixed BS and IRS placement plus a fresh device draw.
    pub fn sample<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Self {
        Self {
            bs: config.deployment.bs,
            irs: irs_positions(config.num_irs, config.deployment.irs_arc_diameter)
                .into_iter()
                .map(IrsPanel::facing_origin)
                .collect(),
            devices: sample_device_positions(config, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_irs_sits_at_arc_midpoint() {
        let p = irs_positions(1, 10.0);
        assert_eq!(p.len(), 1);
        assert!(p[0].x == 0.0 && p[0].y.abs() < 1e-12 && (p[0].z - 5.0).abs() < 1e-12);
    }

    #[test]
    fn two_irs_at_arc_thirds() {
        // angles pi/3 and 2pi/3 on radius 5: (0, +-2.5, 5*sqrt(3)/2)
        let p = irs_positions(2, 10.0);
        let h = 5.0 * 3f64.sqrt() / 2.0;
        assert!((p[0].y - 2.5).abs() < 1e-12 && (p[0].z - h).abs() < 1e-12);
        assert!((p[1].y + 2.5).abs() < 1e-12 && (p[1].z - h).abs() < 1e-12);
        assert!((p[0].distance(p[1]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn irs_on_yz_plane_and_facing_origin() {
        for m in 1..6 {
            for pos in irs_positions(m, 10.0) {
                assert_eq!(pos.x, 0.0);
                assert!((pos.norm() - 5.0).abs() < 1e-12);
                let panel = IrsPanel::facing_origin(pos);
                let to_origin = (Point3::ORIGIN - pos).unit();
                assert!((panel.normal.dot(to_origin) - 1.0).abs() < 1e-12);
                assert!(panel.axis_x.dot(panel.normal).abs() < 1e-12);
                assert!(panel.axis_y.dot(panel.normal).abs() < 1e-12);
                assert!((panel.axis_y.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn broadside_angles() {
        let panel = IrsPanel::facing_origin(Point3::new(0.0, 0.0, 5.0));
        let (theta, phi) = panel.departure_angles(Point3::new(0.0, 0.0, -100.0));
        assert!((theta - PI / 2.0).abs() < 1e-12);
        assert!((phi - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn angles_reproduce_direction_cosines() {
        let panel = IrsPanel::facing_origin(irs_positions(2, 10.0)[0]);
        let target = Point3::new(-200.0, 0.0, 0.0);
        let (theta, phi) = panel.departure_angles(target);
        let dir = (target - panel.position).unit();
        assert!((phi.cos() - dir.dot(panel.axis_x)).abs() < 1e-12);
        assert!((phi.sin() * theta.cos() - dir.dot(panel.axis_y)).abs() < 1e-12);
    }

    #[test]
    fn devices_inside_disk_and_deterministic() {
        let cfg = default_scenario();
        let a = sample_device_positions(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_device_positions(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        for p in &a {
            assert_eq!(p.y, 0.0);
            assert!(p.distance(cfg.deployment.device_center) <= 100.0 + 1e-9);
            assert!(p.distance(cfg.deployment.bs) > 0.0);
        }
    }

    #[test]
    fn device_disk_mean_is_center() {
        let mut cfg = default_scenario();
        cfg.num_devices = 100_000;
        let pts = sample_device_positions(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let n = pts.len() as f64;
        let mean = pts.iter().fold(Point3::ORIGIN, |acc, &p| acc + p) * (1.0 / n);
        assert!(
            mean.distance(cfg.deployment.device_center) < 1.0,
            "{mean:?}"
        );
    }
}
