//! Monte Carlo simulator for BB84 with an optical amplifier at the source,
//! a passive beam-splitter eavesdropper, generalized advantage distillation
//! and secret-yield accounting.

pub mod distillation;
pub mod error;
pub mod harness;
pub mod keyrate;
pub mod measurement;
pub mod optical_path;
pub mod photon_stats;
pub mod session;

pub use error::{Error, Result};
pub use keyrate::{TakeokaConvention, YieldPoint};
pub use measurement::{DetectorSpec, EveReceiver};
pub use optical_path::{AmplifierSpec, FiberSpec, FilterSpec, PolarizationSpec};
pub use photon_stats::PhotonDistribution;
pub use session::{run_session, PulseKernel, SessionConfig, SessionOutput};
