//! Sensing-assisted communication receiver: the effective delay-Doppler
//! channel, symbol detectors, the (7,5) convolutional code and FER runs.

pub mod code;
pub mod detect;
pub mod effective;
pub mod fer;

pub use code::{conv75_encode, viterbi75_decode};
pub use detect::{lmmse_detect, ml_detect, mp_detect, LmmseEqualizer, MpOptions, SoftDecisions};
pub use effective::{build_effective_dd_channel, EffectiveDdChannel, EffectiveTap, SparseDdChannel};
pub use fer::{fer_experiment, Detector, FerSeries, FerSetup};
