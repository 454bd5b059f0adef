//! Spherical-Earth geometry.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Earth gravitational parameter, km^3/s^2.
pub const EARTH_MU: f64 = 398_600.441_8;
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;
/// Sidereal rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn unit(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl LatLon {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        Self { lat_deg, lon_deg }
    }

    /// Geocentric latitude/longitude of a position vector.
    pub fn from_cartesian(p: Vec3) -> Self {
        let lat = (p.z / p.norm()).clamp(-1.0, 1.0).asin();
        let lon = p.y.atan2(p.x);
        Self::new(lat.to_degrees(), lon.to_degrees())
    }

    /// Point on the sphere of `radius_km`, with the Earth rotated by
    /// `rotation_rad` about the polar axis.
    pub fn to_cartesian(self, radius_km: f64, rotation_rad: f64) -> Vec3 {
        let lat = self.lat_deg.to_radians();
        let lon = self.lon_deg.to_radians() + rotation_rad;
        Vec3::new(
            radius_km * lat.cos() * lon.cos(),
            radius_km * lat.cos() * lon.sin(),
            radius_km * lat.sin(),
        )
    }
}

/// Central angle between two points, radians (haversine form).
pub fn central_angle(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * h.sqrt().clamp(0.0, 1.0).asin()
}

pub fn great_circle_km(a: LatLon, b: LatLon) -> f64 {
    EARTH_RADIUS_KM * central_angle(a, b)
}

/// Light-speed delay along the great circle between two surface points.
pub fn ground_delay_s(a: LatLon, b: LatLon) -> f64 {
    great_circle_km(a, b) / SPEED_OF_LIGHT_KM_S
}

/// Elevation of `target` above the local horizon of `observer`, degrees.
pub fn elevation_deg(observer: Vec3, target: Vec3) -> f64 {
    let d = target - observer;
    let up = observer.unit();
    (d.dot(up) / d.norm()).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Cylindrical Earth-shadow test. `sun_direction` must be a unit vector.
pub fn sunlit(position: Vec3, sun_direction: Vec3) -> bool {
    let along = position.dot(sun_direction);
    if along >= 0.0 {
        return true;
    }
    let perp_sq = (position.dot(position) - along * along).max(0.0);
    perp_sq.sqrt() >= EARTH_RADIUS_KM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_delay() {
        let d = ground_delay_s(LatLon::new(0.0, 0.0), LatLon::new(0.0, 180.0));
        assert!((d - std::f64::consts::PI * 6371.0 / 299_792.458).abs() < 1e-12);
        assert!((d - 0.06676).abs() < 1e-5);
    }

    #[test]
    fn coincident_points_have_zero_delay() {
        let p = LatLon::new(47.6, -122.3);
        assert_eq!(ground_delay_s(p, p), 0.0);
    }

    #[test]
    fn separation_of_1583_km() {
        // 1583 km of arc along the equator
        let lon = (1583.0 / EARTH_RADIUS_KM).to_degrees();
        let d = ground_delay_s(LatLon::new(0.0, 0.0), LatLon::new(0.0, lon));
        assert!((d - 5.28e-3).abs() < 1e-5, "{d}");
    }

    #[test]
    fn zenith_is_ninety_degrees() {
        let site = LatLon::new(10.0, 20.0).to_cartesian(EARTH_RADIUS_KM, 0.0);
        let sat = LatLon::new(10.0, 20.0).to_cartesian(EARTH_RADIUS_KM + 550.0, 0.0);
        assert!((elevation_deg(site, sat) - 90.0).abs() < 1e-6);
        assert!(elevation_deg(site, sat * -1.0) < 0.0);
    }

    #[test]
    fn shadow_axis() {
        let sun = Vec3::new(1.0, 0.0, 0.0);
        assert!(sunlit(Vec3::new(6921.0, 0.0, 0.0), sun));
        assert!(!sunlit(Vec3::new(-6921.0, 0.0, 0.0), sun));
        // behind the Earth but outside the shadow cylinder
        assert!(sunlit(Vec3::new(-100.0, 6500.0, 0.0), sun));
    }
}
