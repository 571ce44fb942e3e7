//! Scalar math shims that work with and without `std`.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline]
    pub fn acos(x: f64) -> f64 {
        x.acos()
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        y.atan2(x)
    }
    #[inline]
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    #[inline]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline]
    pub fn acos(x: f64) -> f64 {
        libm::acos(x)
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        libm::atan2(y, x)
    }
    #[inline]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
}

pub use imp::*;

/// sin(sqrt(u))/sqrt(u), smooth through u = 0.
#[inline]
pub fn sinc_sqrt(u: f64) -> f64 {
    if u < 1e-12 {
        1.0 - u / 6.0 + u * u / 120.0
    } else {
        let r = sqrt(u);
        sin(r) / r
    }
}

/// cos(sqrt(u)), written as a function of u = r^2.
#[inline]
pub fn cos_sqrt(u: f64) -> f64 {
    if u < 1e-12 {
        1.0 - u / 2.0 + u * u / 24.0
    } else {
        cos(sqrt(u))
    }
}

/// d/du of cos(sqrt(u)); smooth through u = 0.
#[inline]
pub fn dcos_sqrt(u: f64) -> f64 {
    // cos(sqrt u) = sum (-u)^k/(2k)! => derivative = -1/2 + u/12 - u^2/240 ...
    if u < 1e-8 {
        -0.5 + u / 12.0 - u * u / 240.0
    } else {
        let r = sqrt(u);
        -sin(r) / (2.0 * r)
    }
}

/// d/du of sin(sqrt(u))/sqrt(u); smooth through u = 0.
#[inline]
pub fn dsinc_sqrt(u: f64) -> f64 {
    // sinc = sum (-u)^k/(2k+1)! => derivative = -1/6 + u/60 - u^2/2520 ...
    if u < 1e-8 {
        -1.0 / 6.0 + u / 60.0 - u * u / 2520.0
    } else {
        let r = sqrt(u);
        (cos(r) - sin(r) / r) / (2.0 * u)
    }
}
