use std::f64::consts::PI;

use super::PlantError;

/// Length of one reference primitive.
pub const PRIMITIVE_DURATION_S: f64 = 8.0;

/// Altitude reference and its analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub z: f64,
    pub v: f64,
    pub a: f64,
}

const OMEGA: f64 = 2.0 * PI / PRIMITIVE_DURATION_S;

/// Altitude channel of the circular primitive: a 1 m raised-cosine climb
/// and descent over 8 s.
pub fn reference_primitive(t: f64) -> Result<Reference, PlantError> {
    if !(0.0..=PRIMITIVE_DURATION_S).contains(&t) {
        return Err(PlantError::OutOfRange(t));
    }
    let (s, c) = (OMEGA * t).sin_cos();
    Ok(Reference {
        z: 0.5 * (1.0 - c),
        v: 0.5 * OMEGA * s,
        a: 0.5 * OMEGA * OMEGA * c,
    })
}
