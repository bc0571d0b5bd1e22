//! Floating-point comparison helpers shared by every check in the crate.

/// Relative tolerance for metric-validity and inequality checks.
pub const REL: f64 = 1e-9;
/// Absolute floor used near zero.
pub const ABS: f64 = 1e-12;

/// `a <= b` up to tolerance.
#[inline]
pub fn le(a: f64, b: f64) -> bool {
    a <= b + REL * a.abs().max(b.abs()) + ABS
}

/// `a >= b` up to tolerance.
#[inline]
pub fn ge(a: f64, b: f64) -> bool {
    le(b, a)
}

/// `a == b` up to tolerance.
#[inline]
pub fn eq(a: f64, b: f64) -> bool {
    le(a, b) && le(b, a)
}

/// The γ-condition `far >= gamma * near`, accepted when
/// `far >= gamma * near * (1 - REL)`.
#[inline]
pub fn ratio_ok(far: f64, near: f64, gamma: f64) -> bool {
    far >= gamma * near * (1.0 - REL) - ABS
}

/// `num / den` with the conventions `0/0 = +inf` and `c/0 = +inf`.
#[inline]
pub fn ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sharpness_passes() {
        assert!(ratio_ok(1.5, 0.5, 3.0));
        assert!(!ratio_ok(1.5, 0.5, 3.01));
    }

    #[test]
    fn zero_ratios() {
        assert_eq!(ratio(0.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(2.0, 0.0), f64::INFINITY);
        assert!(ratio_ok(0.0, 0.0, 10.0));
    }
}
