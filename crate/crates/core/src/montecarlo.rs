//! Seeded, parallel BER estimation.
//!
//! Every trial owns a ChaCha8 stream keyed by `(master seed, SNR)` and
//! selected by the trial index, so results depend only on the configuration
//! and never on scheduling. Per-point error counts are integer sums and
//! therefore identical for any number of worker threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::channel::{
    apply_csi_error, apply_time_variation, doppler_shift, ChannelMatrix, DopplerParams, FadingParams, ShadowedRician,
};
use crate::detection::{complexity_for, detect, transmit, OpCount};
use crate::error::{config, Error, Result};
use crate::link_budget::{db_to_linear_amplitude, total_path_loss, AtmosphereParams, LinkGeometry};
use crate::modem::{bits_per_use, demap, encode, Constellation, SchemeConfig};
use crate::Complex64;

/// How the large-scale path loss enters the received signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkMode {
    /// `sqrt(L) = 1`: the configured SNR is the receive-side SNR.
    #[default]
    Normalized,
    /// `sqrt(L)` from the full path-loss chain with per-trial shadow fading.
    Absolute,
}

impl fmt::Display for LinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkMode::Normalized => "normalized",
            LinkMode::Absolute => "absolute",
        })
    }
}

impl FromStr for LinkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normalized" => Ok(LinkMode::Normalized),
            "absolute" => Ok(LinkMode::Absolute),
            _ => config(format!("unknown link mode '{s}' (expected normalized or absolute)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scheme: SchemeConfig,
    pub geometry: LinkGeometry,
    pub atmosphere: AtmosphereParams,
    pub fading: FadingParams,
    pub doppler: DopplerParams,
    /// Variance of the CSI error entries; `None` ties it to `delta_e2_sq`.
    pub delta_e1_sq: Option<f64>,
    /// Weight of the CSI error in the true channel.
    pub delta_e2_sq: f64,
    /// E_b/N_0 grid in dB, strictly increasing.
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: u64,
    pub master_seed: u64,
    pub link_mode: LinkMode,
    /// Rotate the channel by the Doppler/delay phase of slot `trial index`.
    pub time_varying: bool,
    /// When false the channel is all ones (AWGN validation only).
    pub fading_enabled: bool,
    /// When true no noise is added.
    pub noiseless: bool,
}

impl SweepConfig {
    /// A sweep with the reference LEO link and channel defaults.
    pub fn new(scheme: SchemeConfig, snr_grid_db: Vec<f64>, trials_per_point: u64, master_seed: u64) -> Self {
        SweepConfig {
            scheme,
            geometry: LinkGeometry::default(),
            atmosphere: AtmosphereParams::default(),
            fading: FadingParams::default(),
            doppler: DopplerParams::default(),
            delta_e1_sq: None,
            delta_e2_sq: 0.0,
            snr_grid_db,
            trials_per_point,
            master_seed,
            link_mode: LinkMode::Normalized,
            time_varying: false,
            fading_enabled: true,
            noiseless: false,
        }
    }

    pub fn effective_delta_e1_sq(&self) -> f64 {
        self.delta_e1_sq.unwrap_or(self.delta_e2_sq)
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.geometry.validate()?;
        self.atmosphere.validate()?;
        self.fading.validate()?;
        self.doppler.validate()?;
        for (name, w) in [("delta_e1_sq", self.effective_delta_e1_sq()), ("delta_e2_sq", self.delta_e2_sq)] {
            if !(0.0..=1.0).contains(&w) {
                return config(format!("{name} must lie in [0, 1], got {w}"));
            }
        }
        if self.trials_per_point == 0 {
            return config("trials must be at least 1");
        }
        if self.snr_grid_db.is_empty() {
            return config("snr grid must not be empty");
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return config("snr grid values must be finite");
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return config("snr grid must be strictly increasing");
        }
        Ok(())
    }

    /// Deterministic path loss (no shadow fading) in dB.
    pub fn mean_path_loss_db(&self) -> Result<f64> {
        Ok(total_path_loss(&self.geometry, &self.atmosphere, 0.0)?.total())
    }

    /// Receive-side SNR for a configured SNR, accounting for the link mode.
    pub fn effective_receive_snr_db(&self, snr_db: f64) -> Result<f64> {
        Ok(match self.link_mode {
            LinkMode::Normalized => snr_db,
            LinkMode::Absolute => snr_db - self.mean_path_loss_db()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Normal-approximation 95% confidence half-width.
    pub half_width95: f64,
}

impl BerPoint {
    pub fn from_counts(snr_db: f64, bits_simulated: u64, bit_errors: u64) -> Self {
        let ber = bit_errors as f64 / bits_simulated as f64;
        BerPoint {
            snr_db,
            bits_simulated,
            bit_errors,
            ber,
            half_width95: 1.96 * (ber * (1.0 - ber) / bits_simulated as f64).sqrt(),
        }
    }

    /// Standard error implied by the 95% half-width.
    pub fn std_error(&self) -> f64 {
        self.half_width95 / 1.96
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub points: Vec<BerPoint>,
    pub se_bpcu: usize,
    pub complexity: OpCount,
    pub wall_clock_s: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for one trial.
pub fn trial_rng(master_seed: u64, snr_db: f64, trial_index: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(master_seed) ^ snr_db.to_bits());
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial_index);
    rng
}

/// Validated configuration with per-sweep precomputation.
pub struct Simulator {
    cfg: SweepConfig,
    sampler: ShadowedRician,
    constellation: Constellation,
    shadow: Normal<f64>,
    doppler_hz: f64,
    bits_per_use: usize,
}

impl Simulator {
    pub fn new(cfg: &SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let geo = &cfg.geometry;
        Ok(Simulator {
            sampler: ShadowedRician::new(&cfg.fading)?,
            constellation: cfg.scheme.constellation()?,
            shadow: Normal::new(0.0, cfg.atmosphere.shadow_sigma_db)
                .map_err(|e| Error::Domain(format!("shadow fading: {e}")))?,
            doppler_hz: doppler_shift(&cfg.doppler, geo.carrier_ghz, geo.altitude_km, geo.earth_radius_km)?,
            bits_per_use: bits_per_use(&cfg.scheme),
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    pub fn bits_per_use(&self) -> usize {
        self.bits_per_use
    }

    /// Bit errors in one channel use.
    pub fn run_trial(&self, snr_db: f64, trial_index: u64) -> Result<u64> {
        let cfg = &self.cfg;
        let scheme = &cfg.scheme;
        let mut rng = trial_rng(cfg.master_seed, snr_db, trial_index);

        let shadow_db = self.shadow.sample(&mut rng);
        let l_amp = match cfg.link_mode {
            LinkMode::Normalized => 1.0,
            LinkMode::Absolute => db_to_linear_amplitude(total_path_loss(&cfg.geometry, &cfg.atmosphere, shadow_db)?.total()),
        };

        let mut h = if cfg.fading_enabled {
            self.sampler.sample_matrix(scheme.nt, scheme.nr, &mut rng)
        } else {
            ChannelMatrix::filled(scheme.nr, scheme.nt, Complex64::new(1.0, 0.0))
        };
        if cfg.time_varying {
            let d = &cfg.doppler;
            h = apply_time_variation(&h, self.doppler_hz, cfg.geometry.carrier_ghz, trial_index, d.delay_slope, d.slot_s);
        }
        let realization = apply_csi_error(&h, cfg.effective_delta_e1_sq(), cfg.delta_e2_sq, &mut rng)?;

        let bits: Vec<bool> = (0..self.bits_per_use).map(|_| rng.random()).collect();
        let tv = encode(&bits, scheme, &self.constellation)?;
        let n0 = if cfg.noiseless { 0.0 } else { 10f64.powf(-snr_db / 10.0) };
        let rx = transmit(realization.h_true(), &tv, scheme.scheme, l_amp, 1.0, n0, &mut rng)?;
        let decision = detect(&rx, realization.h_est(), scheme, &self.constellation)?;
        let recovered = demap(decision.antenna_index, decision.symbol_index.unwrap_or(0), scheme)?;
        Ok(bits.iter().zip(&recovered).filter(|(a, b)| a != b).count() as u64)
    }

    pub fn estimate_ber(&self, snr_db: f64) -> Result<BerPoint> {
        let errors = (0..self.cfg.trials_per_point)
            .into_par_iter()
            .map(|t| self.run_trial(snr_db, t))
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        let bits = self.cfg.trials_per_point * self.bits_per_use as u64;
        Ok(BerPoint::from_counts(snr_db, bits, errors))
    }

    pub fn run_sweep(&self) -> Result<SweepResult> {
        let start = Instant::now();
        let points = self
            .cfg
            .snr_grid_db
            .iter()
            .map(|&snr| self.estimate_ber(snr))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepResult {
            config: self.cfg.clone(),
            points,
            se_bpcu: self.bits_per_use,
            complexity: complexity_for(&self.cfg.scheme),
            wall_clock_s: start.elapsed().as_secs_f64(),
        })
    }
}

/// Bit errors of trial `trial_index` at `snr_db`; a pure function of the
/// configuration and its arguments.
pub fn run_trial(cfg: &SweepConfig, snr_db: f64, trial_index: u64) -> Result<u64> {
    Simulator::new(cfg)?.run_trial(snr_db, trial_index)
}

pub fn estimate_ber(cfg: &SweepConfig, snr_db: f64) -> Result<BerPoint> {
    Simulator::new(cfg)?.estimate_ber(snr_db)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    Simulator::new(cfg)?.run_sweep()
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Uncoded BPSK over AWGN: `Q(sqrt(2 * snr))`.
pub fn awgn_bpsk_reference(snr_db: f64) -> f64 {
    q_function((2.0 * 10f64.powf(snr_db / 10.0)).sqrt())
}
