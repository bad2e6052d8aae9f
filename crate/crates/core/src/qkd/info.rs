//! Shannon-information side of the security analysis: the mutual
//! information of the legitimate parties, the eavesdropper's optimal
//! individual-attack information, and the error-rate threshold where
//! the two curves cross.

/// Binary entropy h(p) = −p·log₂p − (1−p)·log₂(1−p), with h(0)=h(1)=0.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p = {p} outside [0, 1]");
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Alice–Bob mutual information over a binary symmetric channel with
/// error rate D: I_AB = 1 − h(D).
pub fn mutual_info_ab(qber: f64) -> f64 {
    1.0 - binary_entropy(qber)
}

/// Eve's Shannon information under the optimal individual attack:
/// I_E = 1 − h(½ + √(D(1−D))).
pub fn eve_info_optimal(qber: f64) -> f64 {
    1.0 - binary_entropy(0.5 + (qber * (1.0 - qber)).sqrt())
}

/// Secret fraction I_AB − I_E available per sifted bit.
pub fn secret_fraction(qber: f64) -> f64 {
    mutual_info_ab(qber) - eve_info_optimal(qber)
}

/// The error rate below which Alice and Bob hold more mutual information
/// than Eve: ½(1 − 1/√2) ≈ 15%. Coincides with the visibility 1/√2 at
/// which the CHSH violation disappears.
pub fn security_threshold() -> f64 {
    0.5 * (1.0 - std::f64::consts::FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_endpoints_and_midpoint() {
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.146447), 0.60088, epsilon = 1e-5);
    }

    #[test]
    fn information_curves_at_landmarks() {
        assert_abs_diff_eq!(mutual_info_ab(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eve_info_optimal(0.0), 0.0, epsilon = 1e-15);

        // At the threshold the two curves cross at 0.39912.
        let d = 0.146447;
        assert_abs_diff_eq!(mutual_info_ab(d), 0.39912, epsilon = 1e-4);
        assert_abs_diff_eq!(eve_info_optimal(d), 0.39912, epsilon = 1e-4);

        // Beyond the threshold Eve knows more than Bob.
        assert!(eve_info_optimal(0.25) > mutual_info_ab(0.25));
    }

    #[test]
    fn threshold_value_and_visibility_correspondence() {
        assert_abs_diff_eq!(security_threshold(), 0.146446609, epsilon = 1e-9);
        let from_visibility =
            crate::quantum::qber_from_visibility(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert_abs_diff_eq!(security_threshold(), from_visibility, epsilon = 1e-12);
    }

    #[test]
    fn threshold_matches_bisection_root() {
        // Independent root-finding oracle on I_AB(D) − I_E(D).
        let f = |d: f64| mutual_info_ab(d) - eve_info_optimal(d);
        let (mut lo, mut hi) = (0.01f64, 0.49f64);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert_abs_diff_eq!(root, security_threshold(), epsilon = 1e-9);
    }
}
