//! Product and mixed product sections, indicator and Fourier coefficients,
//! and the translation of extended formulations into product relaxations.

mod coeffs;
mod key;
mod translate;

pub use coeffs::{
    fourier_coefficients, indicator, indicator_coefficients, IndicatorCoefficients, SectionTable,
    SubstitutionMatrix,
};
pub use key::{all_keys, mixed_product_section, product_section, ProductKey, SparseProductVector};
pub use translate::{
    check_sandwich, mixed_substitution, translate_ef, translate_mixed_ef, AffineForm,
    MixedSectionTable, SandwichReport, Translation,
};
