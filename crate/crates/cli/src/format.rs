//! Human-readable number formatting for terminal tables.

use superdir::Complex64;

/// Formats `x` with `digits` significant digits, switching to scientific
/// notation outside `[1e-3, 1e5)`.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    if (-3..5).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let text = format!("{x:.decimals$}");
        // rounding can carry into a new leading digit (9.9996 -> 10.000)
        let carried = text.parse::<f64>().map_or(false, |r| r.abs() >= 10f64.powi(exp + 1));
        if carried && decimals > 0 {
            let decimals = decimals - 1;
            return format!("{x:.decimals$}");
        }
        text
    } else {
        format!("{x:.prec$e}", prec = digits - 1)
    }
}

pub fn sig4(x: f64) -> String {
    sig(x, 4)
}

pub fn complex4(z: Complex64) -> String {
    let sign = if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) { '-' } else { '+' };
    format!("{}{}{}j", sig4(z.re), sign, sig4(z.im.abs()))
}

pub fn dbi(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig4(3.97370612), "3.974");
        assert_eq!(sig4(0.012345), "0.01235");
        assert_eq!(sig4(18.62), "18.62");
        assert_eq!(sig4(1234.6), "1235");
        assert_eq!(sig4(9.99996), "10.00");
        assert_eq!(sig4(-2.0), "-2.000");
        assert_eq!(sig4(123456.0), "1.235e5");
        assert_eq!(sig4(0.0), "0");
        assert_eq!(sig4(0.05), "0.05000");
        assert_eq!(sig4(0.099996), "0.1000");
    }

    #[test]
    fn complex_values() {
        assert_eq!(complex4(Complex64::new(1.0, 0.0)), "1.000+0j");
        assert_eq!(complex4(Complex64::new(0.5, -0.25)), "0.5000-0.2500j");
    }
}
