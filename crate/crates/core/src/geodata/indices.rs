use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn normalized_difference<T: Scalar>(a: T, b: T, what: &'static str) -> Result<T> {
    let sum = a + b;
    if sum == T::zero() {
        return Err(Error::DegenerateDenominator(what));
    }
    Ok((a - b) / sum)
}

/// Normalized Difference Vegetation Index, `(nir - red) / (nir + red)`.
pub fn compute_ndvi<T: Scalar>(nir: T, red: T) -> Result<T> {
    normalized_difference(nir, red, "nir + red")
}

/// Burned-area index, `(nir - swir) / (nir + swir)`.
pub fn compute_bai<T: Scalar>(nir: T, swir: T) -> Result<T> {
    normalized_difference(nir, swir, "nir + swir")
}
