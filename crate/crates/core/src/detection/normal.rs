use libm::erfc;

/// Standard normal CDF, `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Phi(x)`, evaluated without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // high-precision reference values
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_sf(2.0) / 0.022_750_131_948_179_21 - 1.0).abs() < 1e-14);
        assert!((normal_cdf(-1.0) / 0.158_655_253_931_457_05 - 1.0).abs() < 1e-14);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((normal_sf(8.0) / 6.220_960_574_271_784e-16 - 1.0).abs() < 1e-13);
        assert!((normal_cdf(8.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_and_monotone() {
        let mut prev = 0.0;
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
            assert!((normal_cdf(x) + normal_sf(x) - 1.0).abs() < 1e-15);
            assert!(normal_cdf(x) >= prev);
            prev = normal_cdf(x);
        }
    }
}
