//! Grid and Fourier substrate: transforms, Littlewood-Paley blocks, Besov and Sobolev norms,
//! and the heat semigroup `exp(t (Delta - 1) / 2)`.

mod fft;
pub mod field;
pub mod littlewood_paley;

pub(crate) use field::from_spectral_unchecked;
pub use field::{
    from_spectral, is_positive_half, real_cons_element, to_spectral, SpectralCoeffs, TorusField,
    TorusGrid, HERMITIAN_TOLERANCE,
};
pub use littlewood_paley::{
    besov_norm, besov_norm_spectral, glue, heat_factors, heat_semigroup, heat_semigroup_spectral,
    lp_block, smooth_step_down, sobolev_norm, BesovNorm, DyadicPartition,
};
pub use rustfft::num_complex::Complex64;
