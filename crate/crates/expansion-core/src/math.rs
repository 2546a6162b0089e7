//! Thin wrappers over `libm` so the numerical kernels behave identically with
//! and without `std`. The `std` intrinsics and `libm` can differ in the last
//! ulp; routing everything through one implementation keeps results
//! bit-reproducible across feature combinations.

#[inline(always)]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline(always)]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}
