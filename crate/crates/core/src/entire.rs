//! The entire functions `C(w) = cos(sqrt w)` and `S(w) = sin(sqrt w) / sqrt w`.
//!
//! Both are even in `sqrt w`, so the branch of the square root never matters.
//! For `|Im sqrt w| > 1` all four values are returned
//! multiplied by `exp(-|Im sqrt w|)`, and the exponent is reported separately.

use num_complex::Complex64;

/// Below this modulus of `w` the Taylor series is used.
const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 18;
const SCALE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct CosSinc {
    pub c: Complex64,
    pub s: Complex64,
    /// dC/dw
    pub dc: Complex64,
    /// dS/dw
    pub ds: Complex64,
    /// True values are the stored ones times `exp(log_scale)`.
    pub log_scale: f64,
}

pub(crate) fn cos_sinc(w: Complex64) -> CosSinc {
    if w.norm() < SERIES_RADIUS {
        return series(w);
    }
    let z = w.sqrt();
    let y = z.im;
    let i = Complex64::i();
    let (c, sin, log_scale) = if y.abs() <= SCALE_THRESHOLD {
        (z.cos(), z.sin(), 0.0)
    } else {
        // exp(iz) = exp(ix - y), exp(-iz) = exp(-ix + y); divide both by exp(|y|).
        let x = z.re;
        let (ep, em) = if y > 0.0 {
            (
                Complex64::from_polar((-2.0 * y).exp(), x),
                Complex64::from_polar(1.0, -x),
            )
        } else {
            (
                Complex64::from_polar(1.0, x),
                Complex64::from_polar((2.0 * y).exp(), -x),
            )
        };
        ((ep + em) * 0.5, (ep - em) / (2.0 * i), y.abs())
    };
    let s = sin / z;
    CosSinc {
        c,
        s,
        dc: -s * 0.5,
        ds: (c - s) / (2.0 * w),
        log_scale,
    }
}

fn series(w: Complex64) -> CosSinc {
    // C = sum (-w)^n / (2n)!,  S = sum (-w)^n / (2n+1)!
    let mut c = Complex64::new(0.0, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    let mut ds = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0); // (-w)^n
    let mut prev_pow = Complex64::new(0.0, 0.0); // (-w)^(n-1)
    let mut fact_even = 1.0; // (2n)!
    for n in 0..SERIES_TERMS {
        let fact_odd = fact_even * (2 * n + 1) as f64;
        c += pow / fact_even;
        s += pow / fact_odd;
        if n > 0 {
            // d/dw (-w)^n = -n (-w)^(n-1)
            ds -= prev_pow * (n as f64) / fact_odd;
        }
        prev_pow = pow;
        pow *= -w;
        fact_even = fact_odd * (2 * n + 2) as f64;
    }
    CosSinc {
        c,
        s,
        dc: -s * 0.5,
        ds,
        log_scale: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn direct(w: Complex64) -> (Complex64, Complex64) {
        let z = w.sqrt();
        (z.cos(), z.sin() / z)
    }

    #[test]
    fn origin_limit() {
        let v = cos_sinc(Complex64::new(0.0, 0.0));
        assert_eq!(v.c, Complex64::new(1.0, 0.0));
        assert_eq!(v.s, Complex64::new(1.0, 0.0));
        assert!(close(v.dc, Complex64::new(-0.5, 0.0), 1e-15));
        assert!(close(v.ds, Complex64::new(-1.0 / 6.0, 0.0), 1e-15));
    }

    #[test]
    fn matches_direct_evaluation_across_series_boundary() {
        for &w in &[
            Complex64::new(0.99, 0.0),
            Complex64::new(1.01, 0.0),
            Complex64::new(-0.7, 0.6),
            Complex64::new(-0.72, 0.7),
            Complex64::new(25.0, -3.0),
            Complex64::new(-4.0, 0.0),
        ] {
            let v = cos_sinc(w);
            let (c, s) = direct(w);
            let scale = v.log_scale.exp();
            assert!(close(v.c * scale, c, 1e-13), "C at {w}");
            assert!(close(v.s * scale, s, 1e-13), "S at {w}");
        }
    }

    #[test]
    fn scaled_values_for_large_imaginary_root() {
        let w = Complex64::new(-900.0, 40.0);
        let v = cos_sinc(w);
        assert!(v.log_scale > 20.0);
        let (c, s) = direct(w);
        let scale = v.log_scale.exp();
        assert!(close(v.c * scale, c, 1e-12));
        assert!(close(v.s * scale, s, 1e-12));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &w in &[
            Complex64::new(0.3, 0.1),
            Complex64::new(3.0, -0.5),
            Complex64::new(-50.0, 10.0),
        ] {
            let h = 1e-6;
            let plus = cos_sinc(w + h);
            let minus = cos_sinc(w - h);
            let v = cos_sinc(w);
            let rescale = |x: &CosSinc| (x.log_scale - v.log_scale).exp();
            let fd_c = (plus.c * rescale(&plus) - minus.c * rescale(&minus)) / (2.0 * h);
            let fd_s = (plus.s * rescale(&plus) - minus.s * rescale(&minus)) / (2.0 * h);
            assert!(close(v.dc, fd_c, 1e-7), "dC at {w}");
            assert!(close(v.ds, fd_s, 1e-7), "dS at {w}");
        }
    }

    #[test]
    fn continuous_through_zero_along_real_axis() {
        let mut prev = cos_sinc(Complex64::new(-2.0, 0.0));
        let mut w = -2.0;
        while w < 2.0 {
            w += 1e-3;
            let v = cos_sinc(Complex64::new(w, 0.0));
            let (sv, sp) = (v.log_scale.exp(), prev.log_scale.exp());
            assert!((v.c * sv - prev.c * sp).norm() < 5e-3);
            assert!((v.s * sv - prev.s * sp).norm() < 5e-3);
            prev = v;
        }
    }
}
