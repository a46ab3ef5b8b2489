//! Initialisation methods and baseline clusterers.

mod gmm;
mod spectral;

pub use gmm::{gmm_em, CovarianceModel, GmmModel, GmmOptions};
pub use spectral::{
    default_orl_grid, em_emb, gaussian_kernel, median_bandwidth, orl_sc, signed_spectral_init, spectral_cluster,
    EmEmbOptions, SpectralMode,
};
