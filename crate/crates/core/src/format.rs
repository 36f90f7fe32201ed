//! Text formatting shared by the CSV writers.

/// 17 significant digits in scientific notation; parses back to the same
/// `f64` bit pattern.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
