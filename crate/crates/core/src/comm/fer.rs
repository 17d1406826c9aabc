//! Frame error rate against average symbol SNR.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{sample_scenario, DelayDopplerPolicy, DopplerModel, Scenario, ScenarioSpec};
use crate::comm::code::{conv75_encode, payload_len, viterbi75_decode};
use crate::comm::detect::{mp_detect, LmmseEqualizer, MpOptions, SoftDecisions};
use crate::comm::effective::SparseDdChannel;
use crate::comm::effective::{average_symbol_energy, build_effective_dd_channel};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::otfs::FrameParams;
use crate::radar::{allocate_power, AllocationPolicy};
use crate::rng::{complex_gaussian, stream_rng};
use crate::stats::{CurvePoint, Proportion};
use crate::tx::{build_precoder_set, exact_estimates, PrecoderSet, VirtualIndexPolicy};

const STREAM_FER_SCENARIO: u64 = 0x4645_5231;
const STREAM_FER_DATA: u64 = 0x4645_5232;

/// Receiver used for a FER series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    /// Message passing on the exact sparse graph (integer-only channels).
    MessagePassing,
    /// Message passing on the graph of dense-channel entries above a relative
    /// magnitude threshold; accepts fractional channels.
    TruncatedMessagePassing { rel_threshold: f64 },
    /// Dense linear MMSE (any channel).
    Lmmse,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::MessagePassing => "mp",
            Detector::TruncatedMessagePassing { .. } => "mp-truncated",
            Detector::Lmmse => "lmmse",
        }
    }
}

/// One curve of a FER experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FerSeries {
    pub label: String,
    /// `None` transmits without precoding.
    pub precoding: Option<VirtualIndexPolicy>,
    pub allocation: AllocationPolicy,
    pub doppler: DopplerModel,
    pub detector: Detector,
}

/// Setup shared by all series of a FER experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FerSetup {
    pub params: FrameParams,
    pub users: usize,
    pub paths: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub policy: DelayDopplerPolicy,
    pub min_doppler_separation: f64,
    pub n_range: usize,
    pub constellation: Constellation,
    pub coded: bool,
    pub mp: MpOptions,
    pub series: Vec<FerSeries>,
    /// Average symbol SNR `β / N0` grid in dB.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl FerSetup {
    fn spec(&self, doppler: DopplerModel) -> ScenarioSpec {
        ScenarioSpec {
            l_max: self.l_max,
            k_max: self.k_max,
            doppler,
            policy: self.policy,
            min_doppler_separation: self.min_doppler_separation,
            n_range: self.n_range,
            ..ScenarioSpec::new(self.users, self.paths)
        }
    }

    /// Information bits carried by one frame.
    pub fn payload_bits(&self) -> Result<usize> {
        let raw = self.params.mn() * self.constellation.bits_per_symbol();
        if self.coded {
            payload_len(raw)
        } else {
            Ok(raw)
        }
    }
}

/// Receiver for one series within one trial.
enum Receiver {
    Sparse(SparseDdChannel),
    Dense(LmmseEqualizer),
}

fn precoders_for(
    setup: &FerSetup,
    scenario: &Scenario,
    policy: Option<VirtualIndexPolicy>,
    rng: &mut crate::rng::SimRng,
) -> Result<PrecoderSet> {
    match policy {
        None => Ok(PrecoderSet::identity(setup.params.n_bs)),
        Some(p) => build_precoder_set(&setup.params, &exact_estimates(scenario), p, setup.n_range, rng),
    }
}

fn frame_in_error(setup: &FerSetup, soft: &SoftDecisions, tx_indices: &[usize], payload: &[u8]) -> Result<bool> {
    if setup.coded {
        let llrs = setup.constellation.bit_llrs(&soft.probabilities);
        Ok(viterbi75_decode(&llrs)? != payload)
    } else {
        Ok(soft.decisions != tx_indices)
    }
}

/// Seeded FER Monte Carlo for user 1 of each sampled scenario.
///
/// Per trial the payload and a unit-variance noise vector are drawn once and
/// shared by every series and SNR point; each series re-draws the scenario
/// from the same stream, so series with the same channel model see the same
/// channels.
pub fn fer_experiment(setup: &FerSetup) -> Result<Vec<CurvePoint>> {
    if setup.trials == 0 {
        return Err(Error::config("FER experiment needs at least one trial"));
    }
    if setup.series.is_empty() {
        return Err(Error::config("FER experiment needs at least one series"));
    }
    let params = setup.params;
    let mn = params.mn();
    let c = setup.constellation;
    let k_payload = setup.payload_bits()?;
    let n_snr = setup.snr_db.len();

    let outcomes: Vec<Vec<bool>> = (0..setup.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<bool>> {
            let mut data_rng = stream_rng(setup.seed, STREAM_FER_DATA, t);
            let payload: Vec<u8> = (0..k_payload).map(|_| data_rng.random_range(0..2u8)).collect();
            let coded_bits = if setup.coded { conv75_encode(&payload) } else { payload.clone() };
            let tx_indices = c.bits_to_indices(&coded_bits);
            let x = c.modulate(&tx_indices);
            let w: Vec<Complex64> = (0..mn).map(|_| complex_gaussian(&mut data_rng, 1.0)).collect();

            let mut errors = Vec::with_capacity(setup.series.len() * n_snr);
            for series in &setup.series {
                let mut rng = stream_rng(setup.seed, STREAM_FER_SCENARIO, t);
                let scenario = sample_scenario(&params, &setup.spec(series.doppler), &mut rng)?;
                let precoders = precoders_for(setup, &scenario, series.precoding, &mut rng)?;
                let estimates = exact_estimates(&scenario);
                let alpha = allocate_power(series.allocation, &scenario, &estimates)?;
                let beta = average_symbol_energy(&scenario, 0, &alpha)?;
                let channel = build_effective_dd_channel(&scenario, 0, &precoders, &alpha)?;
                let (receiver, clean) = match series.detector {
                    Detector::MessagePassing => {
                        let sp = channel.sparse()?;
                        let clean = sp.apply(&x)?;
                        (Receiver::Sparse(sp), clean)
                    }
                    Detector::TruncatedMessagePassing { rel_threshold } => {
                        let sp = SparseDdChannel::truncated_from_dense(&channel.dense(), rel_threshold)?;
                        (Receiver::Sparse(sp), channel.apply(&x)?)
                    }
                    Detector::Lmmse => (Receiver::Dense(LmmseEqualizer::new(&channel.dense())), channel.apply(&x)?),
                };
                for &snr in &setup.snr_db {
                    let n0 = beta * 10f64.powf(-snr / 10.0);
                    let s = n0.sqrt();
                    let y: Vec<Complex64> = clean.iter().zip(&w).map(|(a, b)| a + b * s).collect();
                    let soft = match &receiver {
                        Receiver::Sparse(sp) => mp_detect(&y, sp, c, n0, setup.mp)?,
                        Receiver::Dense(eq) => eq.detect(&y, c, n0)?,
                    };
                    errors.push(frame_in_error(setup, &soft, &tx_indices, &payload)?);
                }
            }
            Ok(errors)
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(setup.series.len() * n_snr);
    for (si, series) in setup.series.iter().enumerate() {
        for (pi, &snr) in setup.snr_db.iter().enumerate() {
            let events = outcomes.iter().filter(|o| o[si * n_snr + pi]).count() as u64;
            points.push(CurvePoint::proportion(series.label.clone(), snr, Proportion { events, trials: setup.trials }));
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_setup(coded: bool) -> FerSetup {
        FerSetup {
            params: FrameParams::grid(4, 4, 16).unwrap(),
            users: 1,
            paths: 2,
            l_max: 2,
            k_max: 2,
            policy: DelayDopplerPolicy::Independent,
            min_doppler_separation: 0.0,
            n_range: 0,
            constellation: Constellation::Bpsk,
            coded,
            mp: MpOptions::default(),
            series: vec![FerSeries {
                label: "precoded".into(),
                precoding: Some(VirtualIndexPolicy::Distinct),
                allocation: AllocationPolicy::Equal,
                doppler: DopplerModel::Fractional,
                detector: Detector::MessagePassing,
            }],
            snr_db: vec![200.0],
            trials: 20,
            seed: 11,
        }
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        for coded in [false, true] {
            let pts = fer_experiment(&small_setup(coded)).unwrap();
            assert_eq!(pts.len(), 1);
            assert_eq!(pts[0].metric, 0.0, "coded={coded}");
        }
    }

    #[test]
    fn fractional_channel_rejects_message_passing() {
        let mut s = small_setup(false);
        s.series[0].precoding = None;
        s.policy = DelayDopplerPolicy::DistinctDelays;
        assert!(matches!(fer_experiment(&s), Err(Error::Unsupported(_))));
        s.series[0].detector = Detector::Lmmse;
        assert!(fer_experiment(&s).is_ok());
    }

    #[test]
    fn zero_trials_is_an_error() {
        let mut s = small_setup(false);
        s.trials = 0;
        assert!(fer_experiment(&s).is_err());
    }
}
