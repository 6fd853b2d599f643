use crate::corpus::LocationRecord;
use crate::scalar::Scalar;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance in meters between two points given in degrees.
pub fn haversine<S: Scalar>(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> S {
    let (lat1, lon1, lat2, lon2) = (
        S::from_f64_lossy(lat1).to_radians(),
        S::from_f64_lossy(lon1).to_radians(),
        S::from_f64_lossy(lat2).to_radians(),
        S::from_f64_lossy(lon2).to_radians(),
    );
    let two = S::from_f64_lossy(2.0);
    let half_dlat = (lat2 - lat1) / two;
    let half_dlon = (lon2 - lon1) / two;
    let a = half_dlat.sin().powi(2) + lat1.cos() * lat2.cos() * half_dlon.sin().powi(2);
    let c = two * a.sqrt().min(S::one()).asin();
    S::from_f64_lossy(EARTH_RADIUS_M) * c
}

pub fn radial_distance<S: Scalar>(a: &LocationRecord, b: &LocationRecord) -> S {
    haversine(a.latitude, a.longitude, b.latitude, b.longitude)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_symmetric() {
        assert_eq!(haversine::<f64>(29.86, 77.89, 29.86, 77.89), 0.0);
        let ab: f64 = haversine(29.86, 77.89, 29.87, 77.90);
        let ba: f64 = haversine(29.87, 77.90, 29.86, 77.89);
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn one_degree_on_equator() {
        // R * pi / 180
        let d: f64 = haversine(0.0, 0.0, 0.0, 1.0);
        assert!((d - 111_195.0).abs() < 20.0, "{d}");
        let f: f32 = haversine(0.0, 0.0, 0.0, 1.0);
        assert!((f64::from(f) - 111_195.0).abs() < 20.0);
    }

    #[test]
    fn antipodes() {
        let d: f64 = haversine(0.0, 0.0, 0.0, 180.0);
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 1e-6);
    }
}
