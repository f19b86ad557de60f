//! Experiments that check the limit theorems on simulated data and the
//! convolution lemmas by quadrature.

pub mod config;
pub mod experiments;
pub mod ks;
pub mod report;

pub use config::{ExperimentConfig, Theorem};
pub use experiments::{
    mean_identity_rhs, run, run_coupled_clt, run_decoupled_clt, run_heavy_tail, run_lemma_exp, run_lemma_reg,
    run_mean_identity,
};
pub use ks::{kolmogorov_survival, ks_one_sample, ks_two_sample, KsResult};
pub use report::{CellReport, CheckReport, ExperimentReport, Verdict};
