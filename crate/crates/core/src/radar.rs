//! Radar side: beam windows, de-spreading, trace-based AoA estimation and
//! the max-min echo power allocation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular::aoa_from_rx_index;
use crate::channel::{apply_radar_channel, sample_scenario, DopplerModel, Scenario, ScenarioSpec};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::otfs::{interleaved_dft, DdFrame, FrameParams};
use crate::rng::{complex_gaussian, stream_rng, SimRng};
use crate::stats::{mean_and_half_width, CurvePoint, Proportion};
use crate::tx::{build_precoder_set, exact_estimates, tda_signal, PathEstimate, PowerAllocation, PrecoderSet, VirtualIndexPolicy};

const STREAM_MISS: u64 = 0x4d49_5353;
const STREAM_AOA: u64 = 0x414f_4131;

/// Antennas that carry one path's beam.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeamSet {
    /// 1-based antenna indices, in window order.
    pub indices: Vec<usize>,
}

/// The `n_range + 1` modular-consecutive antennas centred at `a_center`.
pub fn beam_tracking_set(a_center: usize, n_range: usize, n_bs: usize) -> Result<BeamSet> {
    if n_range % 2 != 0 {
        return Err(Error::invalid(format!("beam width {n_range} must be even")));
    }
    if n_range >= n_bs {
        return Err(Error::invalid("beam width must be smaller than the antenna count"));
    }
    if a_center == 0 || a_center > n_bs {
        return Err(Error::invalid(format!("beam centre {a_center} outside 1..={n_bs}")));
    }
    let half = (n_range / 2) as i64;
    let c = a_center as i64 - 1;
    let indices = (-half..=half).map(|o| (c + o).rem_euclid(n_bs as i64) as usize + 1).collect();
    Ok(BeamSet { indices })
}

/// `(F ⊗ I_MN) r`: unitary DFT across the antenna partitions.
pub fn despread(r: &[Complex64], mn: usize, n_bs: usize) -> Result<Vec<Complex64>> {
    if r.len() != mn * n_bs {
        return Err(Error::invalid(format!("stacked signal length {} does not match MN*N_BS = {}", r.len(), mn * n_bs)));
    }
    let mut z = r.to_vec();
    interleaved_dft(&mut z, n_bs, mn, false);
    Ok(z)
}

/// `‖z̃_k‖² / MN` for every antenna partition of one frame.
pub fn block_traces(z: &[Complex64], mn: usize, n_bs: usize) -> Result<Vec<f64>> {
    if z.len() != mn * n_bs {
        return Err(Error::invalid("observation length does not match MN*N_BS"));
    }
    Ok(z.chunks(mn).map(|b| b.iter().map(|v| v.norm_sqr()).sum::<f64>() / mn as f64).collect())
}

/// Diagonal-block covariance traces averaged over observed frames.
pub fn covariance_block_traces(frames: &[Vec<Complex64>], mn: usize, n_bs: usize) -> Result<Vec<f64>> {
    if frames.is_empty() {
        return Err(Error::invalid("at least one observed frame is required"));
    }
    let mut acc = vec![0.0; n_bs];
    for f in frames {
        for (a, t) in acc.iter_mut().zip(block_traces(f, mn, n_bs)?) {
            *a += t;
        }
    }
    let n = frames.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Detected echoes, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarEstimate {
    pub detected_rx: Vec<usize>,
    pub aoas: Vec<f64>,
    pub traces: Vec<f64>,
    /// Trace minus the noise floor, floored at zero.
    pub powers: Vec<f64>,
    pub noise_floor: f64,
    /// Whether each detection exceeds the caller's threshold on `powers`
    /// (all `true` when no threshold is given).
    pub above_threshold: Vec<bool>,
}

impl RadarEstimate {
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.detected_rx.clone();
        v.sort_unstable();
        v
    }
}

/// Options for [`estimate_aoas`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimateOptions {
    /// Known noise floor; estimated as the median unselected trace when absent.
    pub noise_floor: Option<f64>,
    pub threshold: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Picks the `count` largest traces (ties toward the smaller index) and maps
/// each receive index back to an angle.
pub fn estimate_aoas(traces: &[f64], count: usize, opts: EstimateOptions) -> Result<RadarEstimate> {
    let n_bs = traces.len();
    if count > n_bs {
        return Err(Error::invalid(format!("cannot select {count} echoes from {n_bs} partitions")));
    }
    let mut order: Vec<usize> = (0..n_bs).collect();
    order.sort_by(|&a, &b| traces[b].total_cmp(&traces[a]).then(a.cmp(&b)));
    let noise_floor = opts.noise_floor.unwrap_or_else(|| median(order[count..].iter().map(|&i| traces[i]).collect()));
    let mut est = RadarEstimate {
        detected_rx: Vec::with_capacity(count),
        aoas: Vec::with_capacity(count),
        traces: Vec::with_capacity(count),
        powers: Vec::with_capacity(count),
        noise_floor,
        above_threshold: Vec::with_capacity(count),
    };
    for &i in &order[..count] {
        let power = (traces[i] - noise_floor).max(0.0);
        est.detected_rx.push(i + 1);
        est.aoas.push(aoa_from_rx_index(i + 1, n_bs)?);
        est.traces.push(traces[i]);
        est.powers.push(power);
        est.above_threshold.push(opts.threshold.is_none_or(|t| power > t));
    }
    Ok(est)
}

/// Max-min echo power allocation: `α_p ∝ 1/|h̃_p|²` with
/// `(N_range + 1) Σ_p α_p = α_total`, which equalises all echo powers.
pub fn radar_power_allocation(h_tilde_sq: &[f64], alpha_total: f64, n_range: usize) -> Result<Vec<f64>> {
    if h_tilde_sq.is_empty() {
        return Err(Error::invalid("at least one path is required"));
    }
    if h_tilde_sq.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
        return Err(Error::invalid("reflection powers must be positive and finite"));
    }
    let inv_sum: f64 = h_tilde_sq.iter().map(|g| 1.0 / g).sum();
    let scale = alpha_total / (n_range as f64 + 1.0);
    Ok(h_tilde_sq.iter().map(|g| scale * (1.0 / g) / inv_sum).collect())
}

/// Transmit power policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationPolicy {
    /// Equal power on every beam antenna (optimal for the communication PEP bound).
    Equal,
    /// Equalised echo power (optimal for the weakest radar echo).
    MaxMinRadar,
}

impl AllocationPolicy {
    pub fn label(self) -> &'static str {
        match self {
            AllocationPolicy::Equal => "equal",
            AllocationPolicy::MaxMinRadar => "maxmin-radar",
        }
    }
}

/// Per-antenna powers for a scenario; the max-min rule uses the true
/// reflection strengths (assumed tracked from the previous instant).
pub fn allocate_power(
    policy: AllocationPolicy,
    scenario: &Scenario,
    estimates: &[Vec<PathEstimate>],
) -> Result<PowerAllocation> {
    let params = &scenario.params;
    match policy {
        AllocationPolicy::Equal => PowerAllocation::equal(params, estimates, scenario.n_range),
        AllocationPolicy::MaxMinRadar => {
            let g: Vec<f64> = scenario.all_radar_paths().map(|r| r.h_tilde.norm_sqr()).collect();
            let per_path = radar_power_allocation(&g, params.alpha_total, scenario.n_range)?;
            PowerAllocation::from_path_powers(params, estimates, &per_path, scenario.n_range)
        }
    }
}

/// Radar SNR `α_total / Ñ0` in dB to the noise level `Ñ0`.
pub fn radar_noise_level(alpha_total: f64, snr_db: f64) -> f64 {
    alpha_total * 10f64.powf(-snr_db / 10.0)
}

/// Setup of the miss-detection experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MissDetectionSetup {
    pub params: FrameParams,
    pub users: usize,
    pub paths: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub doppler: DopplerModel,
    pub n_range: usize,
    pub constellation: Constellation,
    /// Precoding policy applied before transmission (`None` sends `v` unprecoded).
    pub precoding: Option<VirtualIndexPolicy>,
    pub allocations: Vec<AllocationPolicy>,
    /// Radar SNR grid in dB.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

fn random_frame(params: &FrameParams, c: Constellation, rng: &mut SimRng) -> Result<DdFrame> {
    let idx = c.random_indices(params.mn(), rng);
    DdFrame::new(c.modulate(&idx), params)
}

fn precoders_for(
    params: &FrameParams,
    scenario: &Scenario,
    estimates: &[Vec<PathEstimate>],
    policy: Option<VirtualIndexPolicy>,
    rng: &mut SimRng,
) -> Result<PrecoderSet> {
    match policy {
        None => Ok(PrecoderSet::identity(params.n_bs)),
        Some(p) => build_precoder_set(params, estimates, p, scenario.n_range, rng),
    }
}

/// Miss-detection probability versus radar SNR, one series per allocation policy.
///
/// Each trial draws one scenario, one frame and one unit-variance noise
/// realisation, reused across SNR points and policies (common random numbers).
pub fn miss_detection_experiment(setup: &MissDetectionSetup) -> Result<Vec<CurvePoint>> {
    if setup.trials == 0 {
        return Err(Error::config("miss-detection experiment needs at least one trial"));
    }
    let params = setup.params;
    let spec = ScenarioSpec {
        l_max: setup.l_max,
        k_max: setup.k_max,
        doppler: setup.doppler,
        n_range: setup.n_range,
        ..ScenarioSpec::new(setup.users, setup.paths)
    };
    let mn = params.mn();
    let n_bs = params.n_bs;
    let count = setup.users * setup.paths;
    let n_snr = setup.snr_db.len();
    let n0s: Vec<f64> = setup.snr_db.iter().map(|&s| radar_noise_level(params.alpha_total, s)).collect();

    let outcomes: Vec<Vec<bool>> = (0..setup.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<bool>> {
            let mut rng = stream_rng(setup.seed, STREAM_MISS, t);
            let scenario = sample_scenario(&params, &spec, &mut rng)?;
            let truth = scenario.true_rx_indices();
            let x = random_frame(&params, setup.constellation, &mut rng)?;
            let estimates = exact_estimates(&scenario);
            let precoders = precoders_for(&params, &scenario, &estimates, setup.precoding, &mut rng)?;
            let w: Vec<Complex64> = (0..mn * n_bs).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let w_energy: Vec<f64> = w.chunks(mn).map(|b| b.iter().map(|v| v.norm_sqr()).sum()).collect();
            let mut misses = Vec::with_capacity(setup.allocations.len() * n_snr);
            for &policy in &setup.allocations {
                let alpha = allocate_power(policy, &scenario, &estimates)?;
                let z = tda_signal(&x, &precoders, &alpha, &params)?;
                let echo = apply_radar_channel(&scenario, &z, 0.0, &mut rng)?;
                // ‖e + √Ñ0 w‖² = ‖e‖² + 2√Ñ0 Re⟨e, w⟩ + Ñ0 ‖w‖², per partition.
                let mut e_energy = vec![0.0; n_bs];
                let mut cross = vec![0.0; n_bs];
                for k in 0..n_bs {
                    let e = &echo[k * mn..(k + 1) * mn];
                    let nz = &w[k * mn..(k + 1) * mn];
                    e_energy[k] = e.iter().map(|v| v.norm_sqr()).sum();
                    cross[k] = e.iter().zip(nz).map(|(a, b)| (a.conj() * b).re).sum();
                }
                for &n0 in &n0s {
                    let s = n0.sqrt();
                    let traces: Vec<f64> = (0..n_bs)
                        .map(|k| (e_energy[k] + 2.0 * s * cross[k] + n0 * w_energy[k]) / mn as f64)
                        .collect();
                    let est = estimate_aoas(&traces, count, EstimateOptions::default())?;
                    misses.push(est.sorted_indices() != truth);
                }
            }
            Ok(misses)
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(setup.allocations.len() * n_snr);
    for (pi, policy) in setup.allocations.iter().enumerate() {
        for (si, &snr) in setup.snr_db.iter().enumerate() {
            let events = outcomes.iter().filter(|o| o[pi * n_snr + si]).count() as u64;
            let prop = Proportion { events, trials: setup.trials };
            points.push(CurvePoint::proportion(format!("alloc={}", policy.label()), snr, prop));
        }
    }
    Ok(points)
}

/// Setup of the angle-spectrum demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaDemoSetup {
    pub params: FrameParams,
    pub users: usize,
    pub paths: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub doppler: DopplerModel,
    pub constellation: Constellation,
    pub allocation: AllocationPolicy,
    pub beam_widths: Vec<usize>,
    pub snr_db: f64,
    /// Observed frames averaged into each spectrum.
    pub frames: u64,
    pub seed: u64,
}

/// Averaged block traces against antenna index for each beam width, plus the
/// true and detected receive indices.
///
/// Series per width `w`: `n_range=w/trace` (x = antenna index),
/// `n_range=w/true` (x = true receive index, metric = expected trace) and
/// `n_range=w/detected` (x = detected index, metric = averaged trace).
pub fn aoa_demo_experiment(setup: &AoaDemoSetup) -> Result<Vec<CurvePoint>> {
    if setup.frames == 0 {
        return Err(Error::config("the angle spectrum needs at least one frame"));
    }
    let params = setup.params;
    let mn = params.mn();
    let n_bs = params.n_bs;
    let n0 = radar_noise_level(params.alpha_total, setup.snr_db);
    let mut points = Vec::new();
    for (wi, &n_range) in setup.beam_widths.iter().enumerate() {
        let spec = ScenarioSpec {
            l_max: setup.l_max,
            k_max: setup.k_max,
            doppler: setup.doppler,
            n_range,
            ..ScenarioSpec::new(setup.users, setup.paths)
        };
        let mut rng = stream_rng(setup.seed, STREAM_AOA, wi as u64);
        let scenario = sample_scenario(&params, &spec, &mut rng)?;
        let estimates = exact_estimates(&scenario);
        let alpha = allocate_power(setup.allocation, &scenario, &estimates)?;
        let precoders = PrecoderSet::identity(n_bs);
        let per_frame: Vec<Vec<f64>> = (0..setup.frames)
            .into_par_iter()
            .map(|f| -> Result<Vec<f64>> {
                let mut frng = stream_rng(setup.seed, STREAM_AOA + 1 + wi as u64, f);
                let x = random_frame(&params, setup.constellation, &mut frng)?;
                let z = tda_signal(&x, &precoders, &alpha, &params)?;
                let obs = apply_radar_channel(&scenario, &z, n0, &mut frng)?;
                block_traces(&obs, mn, n_bs)
            })
            .collect::<Result<_>>()?;
        let label = format!("n_range={n_range}");
        let mut mean = vec![0.0; n_bs];
        for k in 0..n_bs {
            let vals: Vec<f64> = per_frame.iter().map(|t| t[k]).collect();
            let (m, hw) = mean_and_half_width(&vals);
            mean[k] = m;
            points.push(CurvePoint {
                series: format!("{label}/trace"),
                x: (k + 1) as f64,
                metric: m,
                n_trials: setup.frames,
                ci_half_width: hw,
            });
        }
        let mut truth: Vec<(usize, f64)> = scenario
            .all_radar_paths()
            .map(|r| (r.a_rx, alpha.alpha[r.a_tx - 1] * r.h_tilde.norm_sqr() + n0))
            .collect();
        truth.sort_by_key(|t| t.0);
        for (a, expected) in truth {
            points.push(CurvePoint::exact(format!("{label}/true"), a as f64, expected));
        }
        let est = estimate_aoas(&mean, setup.users * setup.paths, EstimateOptions::default())?;
        let mut det: Vec<(usize, f64)> = est.detected_rx.iter().copied().zip(est.traces.iter().copied()).collect();
        det.sort_by_key(|d| d.0);
        for (a, tr) in det {
            points.push(CurvePoint { series: format!("{label}/detected"), x: a as f64, metric: tr, n_trials: setup.frames, ci_half_width: 0.0 });
        }
    }
    Ok(points)
}
