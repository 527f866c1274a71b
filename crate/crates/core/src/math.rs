//! Thin wrappers over `libm` so float math reads the same in `no_std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// `x^r` with exact fast paths for the common exponents.
pub(crate) fn pow_r(x: f64, r: f64) -> f64 {
    if r == 1.0 {
        x
    } else if r == 2.0 {
        x * x
    } else if x == 0.0 {
        0.0
    } else {
        powf(x, r)
    }
}

/// `x^{1/r}`.
pub(crate) fn root_r(x: f64, r: f64) -> f64 {
    if r == 1.0 {
        x
    } else if r == 2.0 {
        sqrt(x)
    } else if x == 0.0 {
        0.0
    } else {
        powf(x, 1.0 / r)
    }
}

/// Sign with `sgn(0) = +1`.
#[inline]
pub(crate) fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
