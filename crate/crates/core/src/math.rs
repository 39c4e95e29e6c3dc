//! Thin wrappers over `libm` so call sites read like std float code.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// ln(1 + e^z) without overflow for large |z|.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    let a = if z > 0.0 { z } else { -z };
    let m = if z > 0.0 { z } else { 0.0 };
    m + libm::log1p(libm::exp(-a))
}

#[inline]
/// `softplus(a) − softplus(b)` without cancellation when `a ≈ b`.
pub(crate) fn softplus_diff(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() > 30.0 {
        return softplus(a) - softplus(b);
    }
    libm::log1p(sigmoid(b) * libm::expm1(d))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}
