//! Numerical laboratory for Volterra Ito processes: path simulation with
//! singular kernels, Fourier-space occupation measures and their regularity
//! exponents, two-parameter Young integration, and self-interacting
//! equations with distributional drifts.

pub mod error;
pub mod fit;
pub mod grid;
pub mod kernels;
pub mod occupation;
pub mod regularity;
pub mod rng;
pub mod selfinteract;
pub mod sewing;
pub mod simulate;
pub mod special;
pub mod young2d;

mod quad;

pub use error::{Error, Result};
pub use fit::LinFit;
pub use grid::{SamplePath, TimeGrid};
pub use kernels::{KernelCertificate, KernelFamily, KernelRole, KernelSpec};
pub use occupation::{OccupationFt, Reconstruction, SelfIntersectionFt, SpectralGrid};
pub use regularity::{
    CharFnDecay, DecayFit, EnsembleMeanCurve, EnsembleMoments, RegularityPrediction,
};
pub use selfinteract::{
    BuiltField, FourierDrift, PicardSolution, SolveDiagnostics, SolverConfig, StabilityReport,
    ThresholdPreset,
};
pub use sewing::{Germ1D, GermContext, SewingRate};
pub use young2d::{GermExponent, GridField2, Holder2Seminorms, TwoParamField, YoungIntegral2};
pub use simulate::{
    Coefficient, CoefficientProcess, FbmSampler, InitialCurve, Simulator, VolterraModel,
    WeightKind, WeightProcess,
};
