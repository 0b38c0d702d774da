//! Link-quality computation: received power, free-space path loss,
//! small-scale fading, SNR, and the data-rate mapping.
//!
//! The received power of a formed beam is
//!
//! ```text
//! rsrp_dbm = tx_power_dbm − noise_ref_dbm
//!            + 10 log10( | sqrt(M / PL) · ζ · W_BB · sqrt(gain / M) |² )
//! ```
//!
//! where `M` is the array element count, `PL` the linear free-space path
//! loss, `ζ` the complex small-scale fading gain, `W_BB` the beam's baseband
//! amplitude weight and `gain` the directional power gain of the beam toward
//! the receiver. With `noise_ref_dbm = 0` the result is the raw received
//! power in dBm; with `noise_ref_dbm` set to the in-band noise power the
//! result is normalized to the noise reference (an SNR in dB), which is what
//! feeds the truncated Shannon data-rate model.
//!
//! Distances are in feet throughout (the dataset unit); conversion to meters
//! happens only inside the path-loss formula.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{BeamError, Codebook};

pub const FEET_PER_METER_INV: f64 = 0.3048;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("distance must be positive and finite, got {0} ft")]
    InvalidDistance(f64),
    #[error(transparent)]
    Beam(#[from] BeamError),
}

// ── parameters ──────────────────────────────────────────────────────────────

/// Link budget and fading parameters of one testbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_freq_ghz: f64,
    pub tx_power_dbm: f64,
    /// Noise reference subtracted from the received power (dBm). Zero means
    /// raw received power.
    pub noise_ref_dbm: f64,
    /// Standard deviation of each Gaussian quadrature of the fading gain.
    pub fading_std: f64,
    pub fading_enabled: bool,
}

/// Complex small-scale fading gain ζ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSample {
    pub re: f64,
    pub im: f64,
}

impl FadingSample {
    /// The unit gain used when fading is disabled.
    pub const UNITY: FadingSample = FadingSample { re: 1.0, im: 0.0 };

    pub fn amplitude_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Parameters of the truncated Shannon data-rate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    /// Occupied bandwidth (64 subcarriers × subcarrier spacing).
    pub bandwidth_hz: f64,
    /// SNR cutoff below which the link sustains no rate.
    pub snr_floor_db: f64,
    /// Hardware ceiling on the achievable rate.
    pub rate_cap_gbps: f64,
}

// ── operations ──────────────────────────────────────────────────────────────

/// Free-space path loss in dB at `freq_ghz` over `distance_ft` feet:
/// `20 log10(d_m) + 20 log10(f_Hz) − 147.55`.
pub fn path_loss_db(freq_ghz: f64, distance_ft: f64) -> Result<f64, ChannelError> {
    if !(distance_ft > 0.0) || !distance_ft.is_finite() {
        return Err(ChannelError::InvalidDistance(distance_ft));
    }
    let d_m = distance_ft * FEET_PER_METER_INV;
    let f_hz = freq_ghz * 1e9;
    Ok(20.0 * d_m.log10() + 20.0 * f_hz.log10() - 147.55)
}

/// Draw one fading gain `ζ = 1 + (g_r + i·g_i)` with independent zero-mean
/// Gaussian quadratures of std `fading_std` (a line-of-sight-dominant
/// perturbation). Returns exactly 1 when fading is disabled or the std is 0.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> FadingSample {
    if !params.fading_enabled || params.fading_std == 0.0 {
        return FadingSample::UNITY;
    }
    let normal = Normal::new(0.0, params.fading_std).expect("fading_std must be non-negative");
    let g_r = normal.sample(rng);
    let g_i = normal.sample(rng);
    FadingSample {
        re: 1.0 + g_r,
        im: g_i,
    }
}

/// Received power from an already-computed beam gain and path loss.
///
/// This is the composition shared by [`rsrp_dbm`] and the sweep harness,
/// which evaluates the gain in the beam-local frame.
pub fn rsrp_from_gain(
    gain_linear: f64,
    baseband_weight: f64,
    total_elements: usize,
    path_loss_db: f64,
    zeta: FadingSample,
    params: &ChannelParams,
) -> f64 {
    let m = total_elements as f64;
    let pl_linear = 10f64.powf(path_loss_db / 10.0);
    let beam_amplitude_sq = gain_linear / m;
    let power = (m / pl_linear) * zeta.amplitude_sq() * baseband_weight.powi(2) * beam_amplitude_sq;
    params.tx_power_dbm - params.noise_ref_dbm + 10.0 * power.log10()
}

/// Received power (dBm, or dB relative to `noise_ref_dbm`) of `beam_id`
/// observed from an absolute direction at `distance_ft`.
pub fn rsrp_dbm(
    codebook: &Codebook,
    beam_id: u32,
    obs_azimuth_deg: f64,
    obs_elevation_deg: f64,
    distance_ft: f64,
    zeta: FadingSample,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let gain = codebook.beam_gain(beam_id, obs_azimuth_deg, obs_elevation_deg)?;
    let w_bb = codebook.beam(beam_id)?.baseband_weight;
    let pl = path_loss_db(params.carrier_freq_ghz, distance_ft)?;
    Ok(rsrp_from_gain(
        gain,
        w_bb,
        codebook.geometry.total_elements(),
        pl,
        zeta,
        params,
    ))
}

/// SNR in dB given a received power and a noise power, both in dBm.
pub fn snr_db(rsrp_dbm_value: f64, noise_power_dbm: f64) -> f64 {
    rsrp_dbm_value - noise_power_dbm
}

/// Truncated Shannon rate: 0 below the SNR floor, otherwise
/// `min(cap, B · log2(1 + snr) / 1e9)` Gb/s.
pub fn data_rate_gbps(snr_db_value: f64, rate: &RateParams) -> f64 {
    if snr_db_value < rate.snr_floor_db {
        return 0.0;
    }
    let snr_linear = 10f64.powf(snr_db_value / 10.0);
    let shannon_gbps = rate.bandwidth_hz * (1.0 + snr_linear).log2() / 1e9;
    shannon_gbps.min(rate.rate_cap_gbps)
}

// ── tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::make_interdigital_codebook;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const DOUBLING_DB: f64 = 6.020599913279624; // 20 log10 2

    fn test_params() -> ChannelParams {
        ChannelParams {
            carrier_freq_ghz: 27.0,
            tx_power_dbm: 20.0,
            noise_ref_dbm: 0.0,
            fading_std: 0.1,
            fading_enabled: false,
        }
    }

    #[test]
    fn path_loss_distance_doubling_law() {
        for &(f, d) in &[(27.0, 4.0), (71.0, 1.0), (2.4, 100.0), (71.0, 2.5)] {
            let a = path_loss_db(f, d).unwrap();
            let b = path_loss_db(f, 2.0 * d).unwrap();
            assert!((b - a - DOUBLING_DB).abs() < 1e-9, "f={f} d={d}: {}", b - a);
        }
    }

    #[test]
    fn path_loss_frequency_law() {
        let expected = 20.0 * (71f64 / 27.0).log10();
        for &d in &[1.0, 4.0, 8.0] {
            let diff = path_loss_db(71.0, d).unwrap() - path_loss_db(27.0, d).unwrap();
            assert!((diff - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn path_loss_fixed_point() {
        // frozen from an independent evaluation of the formula
        let expected = 62.798774363090246;
        assert!((path_loss_db(27.0, 4.0).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn path_loss_rejects_bad_distance() {
        assert!(matches!(path_loss_db(27.0, 0.0), Err(ChannelError::InvalidDistance(_))));
        assert!(matches!(path_loss_db(27.0, -1.0), Err(ChannelError::InvalidDistance(_))));
        assert!(matches!(
            path_loss_db(27.0, f64::NAN),
            Err(ChannelError::InvalidDistance(_))
        ));
    }

    #[test]
    fn fading_disabled_is_unity() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let off = test_params();
        assert_eq!(sample_fading(&mut rng, &off), FadingSample::UNITY);

        let zero_std = ChannelParams {
            fading_enabled: true,
            fading_std: 0.0,
            ..off
        };
        assert_eq!(sample_fading(&mut rng, &zero_std), FadingSample::UNITY);
    }

    #[test]
    fn fading_mean_is_unity() {
        let params = ChannelParams {
            fading_enabled: true,
            fading_std: 0.1,
            ..test_params()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 100_000usize;
        let (mut sum_re, mut sum_im) = (0.0, 0.0);
        for _ in 0..n {
            let z = sample_fading(&mut rng, &params);
            sum_re += z.re;
            sum_im += z.im;
        }
        // per-quadrature 3σ/√n bound
        let bound = 3.0 * params.fading_std / (n as f64).sqrt();
        assert!((sum_re / n as f64 - 1.0).abs() < bound);
        assert!((sum_im / n as f64).abs() < bound);
    }

    #[test]
    fn rsrp_inherits_distance_doubling() {
        let book = make_interdigital_codebook();
        let p = test_params();
        let a = rsrp_dbm(&book, 32, 0.0, 0.0, 4.0, FadingSample::UNITY, &p).unwrap();
        let b = rsrp_dbm(&book, 32, 0.0, 0.0, 8.0, FadingSample::UNITY, &p).unwrap();
        assert!((a - b - DOUBLING_DB).abs() < 1e-9);
    }

    #[test]
    fn rsrp_gain_ratio_in_log_domain() {
        let book = make_interdigital_codebook();
        let p = test_params();
        let at_peak = rsrp_dbm(&book, 32, 0.0, 0.0, 4.0, FadingSample::UNITY, &p).unwrap();
        let off = rsrp_dbm(&book, 32, 10.0, 0.0, 4.0, FadingSample::UNITY, &p).unwrap();
        let gain = book.beam_gain(32, 10.0, 0.0).unwrap();
        let expected_drop = 10.0 * (64.0 / gain).log10();
        assert!((at_peak - off - expected_drop).abs() < 1e-9);
    }

    #[test]
    fn rsrp_full_pipeline_fixed_point() {
        // tx − PL + 10 log10(M) at boresight, unit fading, W_BB = 1:
        // 20 − 62.798774363090246 + 18.061799739838872
        let expected = -24.736974623251374;
        let book = make_interdigital_codebook();
        let p = test_params();
        let got = rsrp_dbm(&book, 32, 0.0, 0.0, 4.0, FadingSample::UNITY, &p).unwrap();
        assert!((got - expected).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn fading_enters_as_multiplicative_amplitude() {
        let book = make_interdigital_codebook();
        let p = test_params();
        for &c in &[0.5f64, 1.0, 2.0, 3.7] {
            let unit = rsrp_dbm(&book, 30, 3.0, 1.0, 5.0, FadingSample::UNITY, &p).unwrap();
            let scaled =
                rsrp_dbm(&book, 30, 3.0, 1.0, 5.0, FadingSample { re: c, im: 0.0 }, &p).unwrap();
            assert!((unit - scaled + 20.0 * c.log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn rsrp_decreasing_in_distance_and_peaked_at_boresight() {
        let book = make_interdigital_codebook();
        let p = test_params();
        let mut last = f64::INFINITY;
        for d in 1..=10 {
            let v = rsrp_dbm(&book, 32, 0.0, 0.0, d as f64, FadingSample::UNITY, &p).unwrap();
            assert!(v < last);
            last = v;
        }
        let peak = rsrp_dbm(&book, 32, 0.0, 0.0, 4.0, FadingSample::UNITY, &p).unwrap();
        for k in 1..=8 {
            let beta = k as f64 * 2.5;
            for sign in [-1.0, 1.0] {
                let v =
                    rsrp_dbm(&book, 32, sign * beta, 0.0, 4.0, FadingSample::UNITY, &p).unwrap();
                assert!(v < peak);
            }
        }
    }

    #[test]
    fn snr_is_subtraction() {
        assert_eq!(snr_db(-70.0, -90.0), 20.0);
        assert_eq!(snr_db(-90.0, -90.0), 0.0);
        assert_eq!(snr_db(-100.0, -90.0), -10.0);
    }

    #[test]
    fn rate_cutoff_and_shannon_point() {
        let rate = RateParams {
            bandwidth_hz: 1e9,
            snr_floor_db: -5.0,
            rate_cap_gbps: f64::INFINITY,
        };
        assert_eq!(data_rate_gbps(-5.1, &rate), 0.0);
        // snr_linear = 1 → log2(2) = 1 bit/s/Hz over 1 GHz
        assert!((data_rate_gbps(0.0, &rate) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_monotone_and_capped() {
        let rate = RateParams {
            bandwidth_hz: 7.68e6,
            snr_floor_db: 0.0,
            rate_cap_gbps: 0.1,
        };
        let mut last = -1.0;
        for i in -20..=80 {
            let r = data_rate_gbps(i as f64, &rate);
            assert!(r >= last);
            assert!(r <= rate.rate_cap_gbps);
            last = r;
        }
        assert_eq!(data_rate_gbps(80.0, &rate), 0.1); // cap reached
    }
}
