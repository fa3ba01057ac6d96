//! Data-driven filter estimation and a small graph convolutional network:
//! adapt-then-combine diffusion LMS, sparsity-regularized system
//! identification, lifted blind deconvolution, and GCNN training with
//! hand-written reverse-mode gradients.

mod blind;
mod gnn;
mod lms;
mod sysid;

pub use blind::{blind_deconvolve, BlindConfig, LiftedSolution};
pub use gnn::{
    gnn_preset, Activation, GnnModel, GnnPreset, Layer, LayerConstraint, Loss, Readout,
    TrainConfig, TrainOutcome,
};
pub use lms::{lms_diffusion, LmsConfig, LmsDataModel, LmsOutcome};
pub use sysid::{system_identify, SysIdConfig, SysIdOutcome};
