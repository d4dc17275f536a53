use crate::scalar::Scalar;

/// Shortest decimal text that parses back to the same value: plain notation
/// for moderate magnitudes, scientific otherwise.
pub fn fmt_real<F: Scalar>(v: F) -> String {
    let a = v.abs();
    if a == F::zero() || (a >= F::of(1e-5) && a < F::of(1e16)) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
