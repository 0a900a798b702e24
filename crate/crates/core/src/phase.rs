//! Unit-modulus phases with exact values at quarter turns.

use crate::C64;
use std::f64::consts::PI;

/// `exp(2 pi i turns)`.
///
/// Multiples of a quarter turn come out exact, so integer and half-integer
/// statistics parameters give exactly `+1` / `-1`.
pub fn turns(turns: f64) -> C64 {
    let t = turns.rem_euclid(1.0);
    let quarters = t * 4.0;
    if quarters == quarters.round() {
        return match quarters as i64 % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * t)
}

/// `exp(i angle)`.
pub fn cis(angle: f64) -> C64 {
    C64::from_polar(1.0, angle)
}

/// Argument of `z`, valid for `Re z > 0` (no branch ambiguity there).
pub(crate) fn arg(z: C64) -> f64 {
    z.im.atan2(z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(turns(3.0), C64::new(1.0, 0.0));
        assert_eq!(turns(-2.5), C64::new(-1.0, 0.0));
        assert_eq!(turns(0.25), C64::new(0.0, 1.0));
        assert_eq!(turns(-0.25), C64::new(0.0, -1.0));
    }

    #[test]
    fn generic_turns_match_polar() {
        let z = turns(0.137);
        assert!((z - C64::from_polar(1.0, 2.0 * PI * 0.137)).norm() < 1e-15);
    }
}
