//! Variational Monte Carlo with neural-network quantum states.

pub mod error;
pub mod exact;
pub mod hilbert;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod machine;
pub mod operator;
pub mod parallel;
pub mod optimizer;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod supervised;
pub mod tomography;
pub mod vmc;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision instantiations.
pub type HilbertSpace64 = hilbert::HilbertSpace<f64>;
pub type HilbertIndex64 = hilbert::HilbertIndex<f64>;
pub type Operator64 = operator::Operator<f64>;
pub type RbmSpin64 = machine::RbmSpin<f64>;
pub type RbmSpinSymm64 = machine::RbmSpinSymm<f64>;
pub type RbmMultiVal64 = machine::RbmMultiVal<f64>;
pub type Ffnn64 = machine::Ffnn<f64>;
pub type Jastrow64 = machine::Jastrow<f64>;
pub type Lookup64 = machine::Lookup<f64>;
pub type Sampler64 = sampler::Sampler<f64>;
pub type Optimizer64 = optimizer::Optimizer<f64>;

/// Single-precision instantiations.
pub type HilbertSpace32 = hilbert::HilbertSpace<f32>;
pub type HilbertIndex32 = hilbert::HilbertIndex<f32>;
pub type Operator32 = operator::Operator<f32>;
pub type RbmSpin32 = machine::RbmSpin<f32>;
pub type RbmSpinSymm32 = machine::RbmSpinSymm<f32>;
pub type RbmMultiVal32 = machine::RbmMultiVal<f32>;
pub type Ffnn32 = machine::Ffnn<f32>;
pub type Jastrow32 = machine::Jastrow<f32>;
pub type Lookup32 = machine::Lookup<f32>;
pub type Sampler32 = sampler::Sampler<f32>;
pub type Optimizer32 = optimizer::Optimizer<f32>;
