//! Random multipath scenarios and the per-path channel operators.
//!
//! Every path acts on a time-delay vector as `h · Π^l Δ^{k+κ}`; the radar echo
//! of the same scatterer uses the round-trip quantities `2l` and `2(k+κ)`.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::angular;
use crate::error::{Error, Result};
use crate::otfs::{delay_shift_into, doppler_phase_in_place, FrameParams};
use crate::rng::{add_awgn, complex_gaussian};

/// How path angles relate to the antenna grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleRegime {
    /// `sin(phi)` is a multiple of the angular resolution; each path owns one antenna.
    OnGrid,
    /// Angles are perturbed off the grid (by less than half a resolution cell)
    /// and the full angular patterns are used.
    Free,
}

/// Whether Doppler shifts carry a fractional part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerModel {
    Integer,
    Fractional,
}

/// Joint constraints on the delay and integer Doppler indices of one user's paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayDopplerPolicy {
    /// Independent uniform draws; paths may share indices.
    Independent,
    /// No two paths share the same `(l, k)` pair.
    DistinctPairs,
    /// All delays differ; drawn from `0..=max(l_max, P-1)` so the request is feasible.
    DistinctDelays,
}

/// Parameters for [`sample_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub users: usize,
    pub paths: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub doppler: DopplerModel,
    pub policy: DelayDopplerPolicy,
    /// Minimum `|ν_p − ν_p'|` between the Doppler values of one user's paths.
    pub min_doppler_separation: f64,
    pub angles: AngleRegime,
    /// Beam width in antennas; the true index lies within `±n_range/2` of the
    /// previous estimate.
    pub n_range: usize,
}

impl ScenarioSpec {
    pub fn new(users: usize, paths: usize) -> Self {
        ScenarioSpec {
            users,
            paths,
            l_max: 10,
            k_max: 6,
            doppler: DopplerModel::Fractional,
            policy: DelayDopplerPolicy::Independent,
            min_doppler_separation: 0.0,
            angles: AngleRegime::OnGrid,
            n_range: 0,
        }
    }
}

/// One resolvable communication path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub h: Complex64,
    pub phi: f64,
    pub l: usize,
    pub k: usize,
    pub kappa: f64,
    /// Transmit angular index of `phi` (1-based).
    pub a_tx: usize,
    /// Receive angular index of `phi` (1-based).
    pub a_rx: usize,
    /// Transmit index estimated at the previous time instant; beams are centred here.
    pub beam_centre: usize,
}

impl Path {
    /// Doppler exponent `k + κ`.
    pub fn doppler(&self) -> f64 {
        self.k as f64 + self.kappa
    }
}

/// Radar echo of a path: reflection coefficient with round-trip delay and Doppler.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarPath {
    pub h_tilde: Complex64,
    pub phi: f64,
    /// Round-trip delay `2l` (reduced modulo `MN` when applied).
    pub delay: usize,
    /// Round-trip Doppler exponent `2(k + κ)`, applied as a single exponent.
    pub doppler: f64,
    pub a_tx: usize,
    pub a_rx: usize,
}

impl RadarPath {
    pub fn from_path(path: &Path, h_tilde: Complex64) -> Self {
        RadarPath {
            h_tilde,
            phi: path.phi,
            delay: 2 * path.l,
            doppler: 2.0 * path.doppler(),
            a_tx: path.a_tx,
            a_rx: path.a_rx,
        }
    }
}

/// All users' paths for one channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: FrameParams,
    pub regime: AngleRegime,
    pub n_range: usize,
    pub users: Vec<Vec<Path>>,
    pub radar: Vec<Vec<RadarPath>>,
}

impl Scenario {
    pub fn all_paths(&self) -> impl Iterator<Item = &Path> {
        self.users.iter().flatten()
    }

    pub fn all_radar_paths(&self) -> impl Iterator<Item = &RadarPath> {
        self.radar.iter().flatten()
    }

    pub fn path_count(&self) -> usize {
        self.users.iter().map(Vec::len).sum()
    }

    /// Receive indices of every echo, sorted ascending.
    pub fn true_rx_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.all_radar_paths().map(|r| r.a_rx).collect();
        v.sort_unstable();
        v
    }
}

/// `gain · Π^delay Δ^doppler` acting on length-`MN` vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdOperator {
    pub gain: Complex64,
    pub delay: usize,
    pub doppler: f64,
}

impl TdOperator {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_add(v, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += coeff · gain · Π^delay Δ^doppler v`.
    pub fn apply_add(&self, v: &[Complex64], coeff: Complex64, out: &mut [Complex64]) {
        let mut tmp = v.to_vec();
        doppler_phase_in_place(&mut tmp, self.doppler);
        let mut shifted = vec![Complex64::new(0.0, 0.0); v.len()];
        delay_shift_into(&tmp, self.delay as i64, &mut shifted);
        let c = coeff * self.gain;
        for (o, s) in out.iter_mut().zip(&shifted) {
            *o += c * s;
        }
    }
}

/// `h Π^l Δ^{k+κ}`: the Doppler ramp is applied first, then the delay, then the gain.
pub fn td_path_operator(path: &Path) -> TdOperator {
    TdOperator { gain: path.h, delay: path.l, doppler: path.doppler() }
}

/// `h̃ Π^{2l} Δ^{2(k+κ)}`.
pub fn radar_td_path_operator(rpath: &RadarPath) -> TdOperator {
    TdOperator { gain: rpath.h_tilde, delay: rpath.delay, doppler: rpath.doppler }
}

const MAX_REJECTIONS: usize = 10_000;

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

fn sample_delays_dopplers<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    params: &FrameParams,
    rng: &mut R,
) -> Result<Vec<(usize, usize, f64)>> {
    let p = spec.paths;
    for _ in 0..MAX_REJECTIONS {
        let pairs: Vec<(usize, usize)> = match spec.policy {
            DelayDopplerPolicy::Independent => (0..p)
                .map(|_| (rng.random_range(0..=spec.l_max), rng.random_range(0..=spec.k_max)))
                .collect(),
            DelayDopplerPolicy::DistinctPairs => {
                let cols = spec.k_max + 1;
                sample(rng, (spec.l_max + 1) * cols, p)
                    .into_iter()
                    .map(|i| (i / cols, i % cols))
                    .collect()
            }
            DelayDopplerPolicy::DistinctDelays => {
                let span = spec.l_max.max(p - 1) + 1;
                let delays = sample(rng, span, p).into_vec();
                delays.into_iter().map(|l| (l, rng.random_range(0..=spec.k_max))).collect()
            }
        };
        let out: Vec<(usize, usize, f64)> = pairs
            .into_iter()
            .map(|(l, k)| {
                let kappa = match spec.doppler {
                    DopplerModel::Integer => 0.0,
                    DopplerModel::Fractional => rng.random_range(-0.5..=0.5),
                };
                (l, k, kappa)
            })
            .collect();
        let ok = spec.min_doppler_separation <= 0.0
            || out.iter().enumerate().all(|(i, a)| {
                out[i + 1..]
                    .iter()
                    .all(|b| ((a.1 as f64 + a.2) - (b.1 as f64 + b.2)).abs() >= spec.min_doppler_separation)
            });
        if ok {
            debug_assert!(out.iter().all(|&(l, k, _)| l < params.m && k < params.n));
            return Ok(out);
        }
    }
    Err(Error::config("could not satisfy the minimum Doppler separation"))
}

fn validate_spec(spec: &ScenarioSpec, params: &FrameParams) -> Result<()> {
    if spec.users == 0 || spec.paths == 0 {
        return Err(Error::config("users and paths must be positive"));
    }
    if spec.n_range % 2 != 0 {
        return Err(Error::config("beam width n_range must be even"));
    }
    let total = spec.users * spec.paths;
    if total * (spec.n_range + 1) > params.n_bs {
        return Err(Error::config(format!(
            "{total} disjoint beams of width {} do not fit on {} antennas",
            spec.n_range + 1,
            params.n_bs
        )));
    }
    let l_top = match spec.policy {
        DelayDopplerPolicy::DistinctDelays => spec.l_max.max(spec.paths - 1),
        _ => spec.l_max,
    };
    if l_top >= params.m || spec.k_max >= params.n {
        return Err(Error::config("delay/Doppler maxima exceed the frame (need l < M, k < N)"));
    }
    if spec.policy == DelayDopplerPolicy::DistinctPairs && spec.paths > (spec.l_max + 1) * (spec.k_max + 1) {
        return Err(Error::config("not enough distinct (delay, Doppler) pairs"));
    }
    Ok(())
}

/// Draws beam centres whose windows of width `n_range + 1` are pairwise disjoint.
fn sample_beam_centres<R: Rng + ?Sized>(count: usize, n_range: usize, n_bs: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut centres: Vec<usize> = Vec::with_capacity(count);
    for _ in 0..count {
        let allowed: Vec<usize> = (1..=n_bs)
            .filter(|&c| centres.iter().all(|&o| circular_distance(c, o, n_bs) > n_range))
            .collect();
        if allowed.is_empty() {
            return Err(Error::config("cannot place disjoint beams for every path"));
        }
        centres.push(allowed[rng.random_range(0..allowed.len())]);
    }
    Ok(centres)
}

/// Samples a scenario: per-user delays and Dopplers, then angles for all
/// paths, then communication gains `CN(0, 1/P)` and reflection coefficients `CN(0, 1)`.
pub fn sample_scenario<R: Rng + ?Sized>(params: &FrameParams, spec: &ScenarioSpec, rng: &mut R) -> Result<Scenario> {
    params.validate()?;
    validate_spec(spec, params)?;
    let n_bs = params.n_bs;
    let dd: Vec<Vec<(usize, usize, f64)>> =
        (0..spec.users).map(|_| sample_delays_dopplers(spec, params, rng)).collect::<Result<_>>()?;
    let centres = sample_beam_centres(spec.users * spec.paths, spec.n_range, n_bs, rng)?;
    let half = (spec.n_range / 2) as i64;
    let mut angles = Vec::with_capacity(centres.len());
    for &c in &centres {
        let offset = if half > 0 { rng.random_range(-half..=half) } else { 0 };
        let a_tx = ((c as i64 - 1 + offset).rem_euclid(n_bs as i64)) as usize + 1;
        let phi = match spec.angles {
            AngleRegime::OnGrid => angular::on_grid_angle(a_tx, n_bs)?,
            AngleRegime::Free => {
                let s0 = angular::on_grid_angle(a_tx, n_bs)?.sin();
                let mut s = s0 + rng.random_range(-0.9..0.9) / n_bs as f64;
                if s < -1.0 {
                    s += 2.0;
                } else if s >= 1.0 {
                    s -= 2.0;
                }
                s.asin()
            }
        };
        let idx = angular::angular_indices(phi, n_bs)?;
        angles.push((c, phi, idx.pair.a_tx, idx.pair.a_rx));
    }
    let var = 1.0 / spec.paths as f64;
    let mut users = Vec::with_capacity(spec.users);
    let mut radar = Vec::with_capacity(spec.users);
    for (u, dd_u) in dd.into_iter().enumerate() {
        let mut paths = Vec::with_capacity(spec.paths);
        let mut echoes = Vec::with_capacity(spec.paths);
        for (p, (l, k, kappa)) in dd_u.into_iter().enumerate() {
            let (centre, phi, a_tx, a_rx) = angles[u * spec.paths + p];
            let h = complex_gaussian(rng, var);
            let h_tilde = complex_gaussian(rng, 1.0);
            let path = Path { h, phi, l, k, kappa, a_tx, a_rx, beam_centre: centre };
            echoes.push(RadarPath::from_path(&path, h_tilde));
            paths.push(path);
        }
        users.push(paths);
        radar.push(echoes);
    }
    Ok(Scenario { params: *params, regime: spec.angles, n_range: spec.n_range, users, radar })
}

fn check_stacked(len: usize, params: &FrameParams) -> Result<()> {
    if len != params.n_bs * params.mn() {
        return Err(Error::invalid(format!(
            "stacked signal length {len} does not match N_BS*M*N = {}",
            params.n_bs * params.mn()
        )));
    }
    Ok(())
}

/// Received time-delay vector of user `user` from the time-delay-angular
/// per-antenna signals `z` (antenna `a` occupies `z[(a-1)MN .. aMN]`).
///
/// On-grid scenarios use the separated model in which path `p` only sees the
/// signal on antenna `a_p`; free-angle scenarios weight every antenna by the
/// path's angular pattern.
pub fn apply_comm_channel<R: Rng + ?Sized>(
    scenario: &Scenario,
    user: usize,
    z: &[Complex64],
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let params = &scenario.params;
    let paths = scenario
        .users
        .get(user)
        .ok_or_else(|| Error::invalid(format!("unknown user index {user}")))?;
    check_stacked(z.len(), params)?;
    let mn = params.mn();
    let mut r = vec![Complex64::new(0.0, 0.0); mn];
    for path in paths {
        let op = td_path_operator(path);
        match scenario.regime {
            AngleRegime::OnGrid => {
                let seg = &z[(path.a_tx - 1) * mn..path.a_tx * mn];
                op.apply_add(seg, Complex64::new(1.0, 0.0), &mut r);
            }
            AngleRegime::Free => {
                let u = angular::tx_pattern(path.phi, params.n_bs)?;
                let mut mix = vec![Complex64::new(0.0, 0.0); mn];
                for (a, w) in u.iter().enumerate() {
                    for (m, s) in mix.iter_mut().zip(&z[a * mn..(a + 1) * mn]) {
                        *m += w * s;
                    }
                }
                op.apply_add(&mix, Complex64::new(1.0, 0.0), &mut r);
            }
        }
    }
    add_awgn(&mut r, n0, rng);
    Ok(r)
}

/// Received vector computed from the spatial (per-antenna transmitted) signal
/// `s` by summing every antenna through the steering response of each path.
/// This is exact for any angle and serves as the reference for
/// [`apply_comm_channel`].
pub fn apply_comm_channel_tds<R: Rng + ?Sized>(
    scenario: &Scenario,
    user: usize,
    s: &[Complex64],
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let params = &scenario.params;
    let paths = scenario
        .users
        .get(user)
        .ok_or_else(|| Error::invalid(format!("unknown user index {user}")))?;
    check_stacked(s.len(), params)?;
    let mn = params.mn();
    let mut r = vec![Complex64::new(0.0, 0.0); mn];
    for path in paths {
        let a = angular::steering_vector(path.phi, params.n_bs)?;
        let mut mix = vec![Complex64::new(0.0, 0.0); mn];
        for (nt, w) in a.iter().enumerate() {
            for (m, x) in mix.iter_mut().zip(&s[nt * mn..(nt + 1) * mn]) {
                *m += w * x;
            }
        }
        td_path_operator(path).apply_add(&mix, Complex64::new(1.0, 0.0), &mut r);
    }
    add_awgn(&mut r, n0, rng);
    Ok(r)
}

/// De-spread radar observation in the time-delay-angular domain.
///
/// On-grid echoes map antenna `a_tx` to receive partition `a_rx` only; in the
/// free regime the (rank-one) angular radar pattern is applied. Noise of
/// variance `n0_radar` is added to every sample.
pub fn apply_radar_channel<R: Rng + ?Sized>(
    scenario: &Scenario,
    z: &[Complex64],
    n0_radar: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let params = &scenario.params;
    check_stacked(z.len(), params)?;
    let mn = params.mn();
    let n_bs = params.n_bs;
    let mut out = vec![Complex64::new(0.0, 0.0); n_bs * mn];
    for rp in scenario.all_radar_paths() {
        let op = radar_td_path_operator(rp);
        match scenario.regime {
            AngleRegime::OnGrid => {
                let seg = &z[(rp.a_tx - 1) * mn..rp.a_tx * mn];
                op.apply_add(seg, Complex64::new(1.0, 0.0), &mut out[(rp.a_rx - 1) * mn..rp.a_rx * mn]);
            }
            AngleRegime::Free => {
                let ut = angular::tx_pattern(rp.phi, n_bs)?;
                let ur = angular::rx_pattern(rp.phi, n_bs)?;
                let mut mix = vec![Complex64::new(0.0, 0.0); mn];
                for (a, w) in ut.iter().enumerate() {
                    for (m, x) in mix.iter_mut().zip(&z[a * mn..(a + 1) * mn]) {
                        *m += w * x;
                    }
                }
                let echo = op.apply(&mix);
                for (k, w) in ur.iter().enumerate() {
                    for (o, e) in out[k * mn..(k + 1) * mn].iter_mut().zip(&echo) {
                        *o += w * e;
                    }
                }
            }
        }
    }
    add_awgn(&mut out, n0_radar, rng);
    Ok(out)
}

/// Radar observation at the antennas (before de-spreading), computed from the
/// spatial signal `s` through the full two-way steering responses.
pub fn apply_radar_channel_tds<R: Rng + ?Sized>(
    scenario: &Scenario,
    s: &[Complex64],
    n0_radar: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let params = &scenario.params;
    check_stacked(s.len(), params)?;
    let mn = params.mn();
    let n_bs = params.n_bs;
    let mut out = vec![Complex64::new(0.0, 0.0); n_bs * mn];
    for rp in scenario.all_radar_paths() {
        let a = angular::steering_vector(rp.phi, n_bs)?;
        let mut mix = vec![Complex64::new(0.0, 0.0); mn];
        for (nt, w) in a.iter().enumerate() {
            for (m, x) in mix.iter_mut().zip(&s[nt * mn..(nt + 1) * mn]) {
                *m += w * x;
            }
        }
        let echo = radar_td_path_operator(rp).apply(&mix);
        for (nr, w) in a.iter().enumerate() {
            for (o, e) in out[nr * mn..(nr + 1) * mn].iter_mut().zip(&echo) {
                *o += w * e;
            }
        }
    }
    add_awgn(&mut out, n0_radar, rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn aoa_demo_scenario_has_distinct_indices() {
        let params = FrameParams::grid(32, 16, 128).unwrap();
        let spec = ScenarioSpec::new(4, 2);
        let mut rng = stream_rng(1, 0, 0);
        let sc = sample_scenario(&params, &spec, &mut rng).unwrap();
        let mut tx: Vec<usize> = sc.all_paths().map(|p| p.a_tx).collect();
        tx.sort_unstable();
        tx.dedup();
        assert_eq!(tx.len(), 8);
        for p in sc.all_paths() {
            assert!(p.l <= 10 && p.k <= 6 && p.kappa.abs() <= 0.5);
            assert_eq!(p.a_tx, p.beam_centre);
        }
    }

    #[test]
    fn scenarios_are_reproducible() {
        let params = FrameParams::grid(8, 8, 16).unwrap();
        let spec = ScenarioSpec { n_range: 2, ..ScenarioSpec::new(2, 2) };
        let spec = ScenarioSpec { l_max: 4, k_max: 4, ..spec };
        let a = sample_scenario(&params, &spec, &mut stream_rng(5, 1, 2)).unwrap();
        let b = sample_scenario(&params, &spec, &mut stream_rng(5, 1, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_rule() {
        let path = Path { h: c(1.0), phi: 0.0, l: 1, k: 0, kappa: 0.5, a_tx: 1, a_rx: 1, beam_centre: 1 };
        let rp = RadarPath::from_path(&path, c(0.0));
        assert_eq!(rp.delay, 2);
        assert_eq!(rp.doppler, 1.0);
        let z = radar_td_path_operator(&rp).apply(&[c(1.0); 4]);
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn path_operator_examples() {
        let v: Vec<_> = (1..=4).map(|k| c(k as f64)).collect();
        let id = Path { h: c(1.0), phi: 0.0, l: 0, k: 0, kappa: 0.0, a_tx: 1, a_rx: 1, beam_centre: 1 };
        assert_eq!(td_path_operator(&id).apply(&v), v);
        let shift = Path { l: 1, ..id };
        assert_eq!(td_path_operator(&shift).apply(&v), vec![c(4.0), c(1.0), c(2.0), c(3.0)]);
    }

    #[test]
    fn unit_gain_variance_for_single_path() {
        let params = FrameParams::grid(4, 4, 4).unwrap();
        let spec = ScenarioSpec { l_max: 3, k_max: 3, ..ScenarioSpec::new(1, 1) };
        let draws = 100_000;
        let mut acc = 0.0;
        for t in 0..draws {
            let sc = sample_scenario(&params, &spec, &mut stream_rng(3, 0, t)).unwrap();
            acc += sc.users[0][0].h.norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |h|^2 = {mean}");
    }

    #[test]
    fn infeasible_requests_are_rejected() {
        let params = FrameParams::grid(8, 8, 8).unwrap();
        let spec = ScenarioSpec { l_max: 2, k_max: 2, n_range: 2, ..ScenarioSpec::new(2, 2) };
        assert!(sample_scenario(&params, &spec, &mut stream_rng(0, 0, 0)).is_err());
        let spec = ScenarioSpec {
            l_max: 0,
            k_max: 0,
            policy: DelayDopplerPolicy::DistinctPairs,
            ..ScenarioSpec::new(1, 2)
        };
        assert!(sample_scenario(&params, &spec, &mut stream_rng(0, 0, 0)).is_err());
    }

    #[test]
    fn policies_hold() {
        let params = FrameParams::grid(8, 8, 16).unwrap();
        for t in 0..200 {
            let spec = ScenarioSpec {
                l_max: 2,
                k_max: 2,
                policy: DelayDopplerPolicy::DistinctDelays,
                min_doppler_separation: 0.2,
                ..ScenarioSpec::new(1, 5)
            };
            let sc = sample_scenario(&params, &spec, &mut stream_rng(9, 0, t)).unwrap();
            let p = &sc.users[0];
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    assert_ne!(p[i].l, p[j].l);
                    assert!((p[i].doppler() - p[j].doppler()).abs() >= 0.2);
                }
            }
        }
    }

    #[test]
    fn identity_channel_returns_antenna_signal() {
        let params = FrameParams::grid(2, 2, 4).unwrap();
        let path = Path { h: c(1.0), phi: 0.0, l: 0, k: 0, kappa: 0.0, a_tx: 1, a_rx: 1, beam_centre: 1 };
        let sc = Scenario {
            params,
            regime: AngleRegime::OnGrid,
            n_range: 0,
            radar: vec![vec![RadarPath::from_path(&path, c(1.0))]],
            users: vec![vec![path]],
        };
        let z: Vec<_> = (0..16).map(|i| c(i as f64)).collect();
        let mut rng = stream_rng(0, 0, 0);
        let r = apply_comm_channel(&sc, 0, &z, 0.0, &mut rng).unwrap();
        assert_eq!(r, z[..4].to_vec());
        assert!(apply_comm_channel(&sc, 3, &z, 0.0, &mut rng).is_err());
        let zt = apply_radar_channel(&sc, &z, 0.0, &mut rng).unwrap();
        assert_eq!(&zt[..4], &z[..4]);
        assert!(zt[4..].iter().all(|v| v.norm() == 0.0));
    }
}
