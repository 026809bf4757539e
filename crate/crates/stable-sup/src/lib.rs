//! Densities attached to the running supremum of a strictly stable Lévy process.
//!
//! The process is specified by a stability index alpha in (0,2) and the jump
//! intensities c_plus, c_minus of the Lévy density
//!
//! ```text
//!   nu(x) = c_plus * x^-(alpha+1)      for x > 0,
//!   nu(x) = c_minus * |x|^-(alpha+1)   for x < 0.
//! ```
//!
//! On top of that single parameterization the crate provides
//!
//! * the marginal density `f` of X_1, its derivatives and survival function,
//!   all by numerical inversion of the characteristic function ([`density`]);
//! * exact stable variate generation ([`sample`]);
//! * Monte Carlo estimation of the supremum density `m`, the meander density
//!   `ptilde` and the conditioned-to-stay-positive density via random-walk
//!   skeletons with level extrapolation ([`mc`]);
//! * deterministic evaluation of the convolution identity linking `ptilde`
//!   to `m`, first-passage densities, and the spectrally negative closed-form
//!   oracle ([`identities`]);
//! * power-law tail fitting and a pass/fail report for every asymptotic law
//!   the other modules are supposed to reproduce ([`asymptotics`]);
//! * a reproducible command line surface ([`cli`]).
//!
//! Every random quantity is a pure function of an explicit 64-bit seed; all
//! outputs are byte-reproducible independent of thread count.

pub mod asymptotics;
pub mod cf;
pub mod cli;
pub mod density;
pub mod identities;
pub mod mc;
pub mod params;
pub mod quad;
pub mod sample;
pub mod table;

pub use params::{validate_params, ParamError, StableParams};
pub use table::{DensityTable, Provenance, TableMeta};
