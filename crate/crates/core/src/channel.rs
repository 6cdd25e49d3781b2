//! Small-scale shadowed-Rician channel, Doppler/delay rotation and the
//! imperfect-CSI model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{domain, usage, Result};

/// Speed of light in m/s.
pub const LIGHT_SPEED_MPS: f64 = 2.998e8;

/// Dense complex `nr x nt` matrix stored column by column, so that the
/// response of one transmit antenna is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    nr: usize,
    nt: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(nr: usize, nt: usize) -> Self {
        ChannelMatrix {
            nr,
            nt,
            data: vec![Complex64::new(0.0, 0.0); nr * nt],
        }
    }

    /// Builds a matrix from `f(row, col)`.
    pub fn from_fn(nr: usize, nt: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(nr * nt);
        for col in 0..nt {
            for row in 0..nr {
                data.push(f(row, col));
            }
        }
        ChannelMatrix { nr, nt, data }
    }

    pub fn filled(nr: usize, nt: usize, value: Complex64) -> Self {
        ChannelMatrix {
            nr,
            nt,
            data: vec![value; nr * nt],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.nr + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[col * self.nr + row] = value;
    }

    /// Response of transmit antenna `col` across all receive antennas.
    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.nr..(col + 1) * self.nr]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        ChannelMatrix {
            nr: self.nr,
            nt: self.nt,
            data: self.data.iter().map(|&h| f(h)).collect(),
        }
    }
}

/// Parameters of the shadowed-Rician entry distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    /// LoS-to-NLoS power ratio (linear).
    pub rician_k: f64,
    /// Nakagami shape of the LoS magnitude.
    pub nakagami_m: f64,
    /// Nakagami spread (mean power) of the LoS magnitude.
    pub nakagami_omega: f64,
    /// Rayleigh scale of the NLoS magnitude.
    pub rayleigh_sigma: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        FadingParams {
            rician_k: 1.0,
            nakagami_m: 0.8,
            nakagami_omega: 1.0,
            rayleigh_sigma: 1.0,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rician_k >= 0.0 && self.rician_k.is_finite()) {
            return domain(format!("Rician factor must be non-negative, got {}", self.rician_k));
        }
        if !(self.nakagami_m >= 0.5 && self.nakagami_m.is_finite()) {
            return domain(format!("Nakagami shape must be at least 0.5, got {}", self.nakagami_m));
        }
        if !(self.nakagami_omega > 0.0 && self.nakagami_omega.is_finite()) {
            return domain(format!("Nakagami spread must be positive, got {}", self.nakagami_omega));
        }
        if !(self.rayleigh_sigma > 0.0 && self.rayleigh_sigma.is_finite()) {
            return domain(format!("Rayleigh scale must be positive, got {}", self.rayleigh_sigma));
        }
        Ok(())
    }

    /// Mean entry power `K/(K+1)*Omega + 2*sigma^2/(K+1)`.
    pub fn mean_power(&self) -> f64 {
        let k = self.rician_k;
        k / (k + 1.0) * self.nakagami_omega + 2.0 * self.rayleigh_sigma.powi(2) / (k + 1.0)
    }
}

/// Reusable sampler for shadowed-Rician entries.
///
/// Each entry is `a*|h_los|*e^{j phi1} + b*|h_nlos|*e^{j phi2}` with
/// `a = sqrt(K/(K+1))`, `b = sqrt(1/(K+1))`, a Nakagami LoS magnitude, a
/// Rayleigh NLoS magnitude and two independent uniform phases.
#[derive(Debug, Clone)]
pub struct ShadowedRician {
    los_power: Gamma<f64>,
    los_weight: f64,
    nlos_weight: f64,
    rayleigh_sigma: f64,
}

impl ShadowedRician {
    pub fn new(fp: &FadingParams) -> Result<Self> {
        fp.validate()?;
        let los_power = Gamma::new(fp.nakagami_m, fp.nakagami_omega / fp.nakagami_m)
            .map_err(|e| crate::Error::Domain(format!("Nakagami parameters: {e}")))?;
        let k = fp.rician_k;
        Ok(ShadowedRician {
            los_power,
            los_weight: (k / (k + 1.0)).sqrt(),
            nlos_weight: (1.0 / (k + 1.0)).sqrt(),
            rayleigh_sigma: fp.rayleigh_sigma,
        })
    }

    /// Nakagami(m, Omega) magnitude: square root of a Gamma(m, Omega/m) power.
    pub fn nakagami<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.los_power.sample(rng).sqrt()
    }

    pub fn rayleigh<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1], keeping the log finite.
        self.rayleigh_sigma * (-2.0 * (1.0 - u).ln()).sqrt()
    }

    pub fn sample_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let los = self.nakagami(rng);
        let los_phase = uniform_phase(rng);
        let nlos = self.rayleigh(rng);
        let nlos_phase = uniform_phase(rng);
        Complex64::from_polar(self.los_weight * los, los_phase)
            + Complex64::from_polar(self.nlos_weight * nlos, nlos_phase)
    }

    pub fn sample_matrix<R: Rng + ?Sized>(&self, nt: usize, nr: usize, rng: &mut R) -> ChannelMatrix {
        ChannelMatrix::from_fn(nr, nt, |_, _| self.sample_entry(rng))
    }
}

fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    2.0 * PI * rng.random::<f64>()
}

/// Draws an `nr x nt` matrix of i.i.d. shadowed-Rician entries.
pub fn sample_channel_matrix<R: Rng + ?Sized>(
    fp: &FadingParams,
    nt: usize,
    nr: usize,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if nt == 0 || nr == 0 {
        return domain(format!("channel dimensions must be positive, got {nr}x{nt}"));
    }
    Ok(ShadowedRician::new(fp)?.sample_matrix(nt, nr, rng))
}

/// Satellite motion and delay parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerParams {
    /// Relative satellite/terminal speed in m/s.
    pub speed_mps: f64,
    /// Satellite elevation angle used for the Doppler projection, degrees.
    pub alpha_deg: f64,
    pub light_speed_mps: f64,
    /// Distance between the satellite centre and the terminal, km.
    pub center_distance_km: f64,
    /// Delay slope: the delay at slot `t` is `eta * t * slot_s`.
    pub delay_slope: f64,
    /// Slot duration in seconds.
    pub slot_s: f64,
}

impl Default for DopplerParams {
    fn default() -> Self {
        DopplerParams {
            speed_mps: 100.0 / 3.6,
            alpha_deg: 30.0,
            light_speed_mps: LIGHT_SPEED_MPS,
            center_distance_km: 700.0,
            delay_slope: 1.0 / 3.0 * 1e-6,
            slot_s: 1e-3,
        }
    }
}

impl DopplerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_mps >= 0.0 && self.speed_mps.is_finite()) {
            return domain(format!("speed must be non-negative, got {} m/s", self.speed_mps));
        }
        if !(0.0..=90.0).contains(&self.alpha_deg) {
            return domain(format!("Doppler elevation must lie in [0, 90], got {}", self.alpha_deg));
        }
        if !(self.light_speed_mps > 0.0 && self.light_speed_mps.is_finite()) {
            return domain("speed of light must be positive");
        }
        if !(self.center_distance_km > 0.0 && self.center_distance_km.is_finite()) {
            return domain(format!("centre distance must be positive, got {} km", self.center_distance_km));
        }
        if !(self.delay_slope >= 0.0 && self.delay_slope.is_finite()) {
            return domain(format!("delay slope must be non-negative, got {}", self.delay_slope));
        }
        if !(self.slot_s >= 0.0 && self.slot_s.is_finite()) {
            return domain(format!("slot duration must be non-negative, got {} s", self.slot_s));
        }
        Ok(())
    }
}

/// Downlink Doppler shift in Hz.
pub fn doppler_shift(dp: &DopplerParams, carrier_ghz: f64, altitude_km: f64, earth_radius_km: f64) -> Result<f64> {
    dp.validate()?;
    if !(altitude_km > 0.0 && earth_radius_km > 0.0 && carrier_ghz >= 0.0) {
        return domain("altitude and earth radius must be positive, carrier non-negative");
    }
    let projection = earth_radius_km / (earth_radius_km + altitude_km) * dp.alpha_deg.to_radians().cos();
    Ok(dp.speed_mps / dp.light_speed_mps * projection * carrier_ghz * 1e9)
}

/// One-way propagation delay `D / c` in seconds.
pub fn propagation_delay(dp: &DopplerParams) -> f64 {
    dp.center_distance_km * 1e3 / dp.light_speed_mps
}

/// Rotates every entry by the Doppler and delay phases of slot `slot`:
/// `exp(-j 2 pi fd t) * exp(-j 2 pi fc tau_t)` with `t = slot * slot_s` and
/// `tau_t = eta * t`. Magnitudes are untouched.
pub fn apply_time_variation(
    h: &ChannelMatrix,
    doppler_hz: f64,
    carrier_ghz: f64,
    slot: u64,
    delay_slope: f64,
    slot_s: f64,
) -> ChannelMatrix {
    if slot == 0 {
        return h.clone();
    }
    let t = slot as f64 * slot_s;
    let phase = -2.0 * PI * (doppler_hz * t + carrier_ghz * 1e9 * delay_slope * t);
    let rot = Complex64::from_polar(1.0, phase);
    h.map(|x| x * rot)
}

/// True and estimated channel for one trial.
///
/// The detector only sees `h_est`; `h_true` produces the received signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h_true: ChannelMatrix,
    h_est: ChannelMatrix,
    delta_e2_sq: f64,
}

impl ChannelRealization {
    /// Perfect CSI: truth and estimate coincide.
    pub fn perfect(h: ChannelMatrix) -> Self {
        ChannelRealization {
            h_true: h.clone(),
            h_est: h,
            delta_e2_sq: 0.0,
        }
    }

    pub fn h_true(&self) -> &ChannelMatrix {
        &self.h_true
    }

    pub fn h_est(&self) -> &ChannelMatrix {
        &self.h_est
    }

    pub fn delta_e2_sq(&self) -> f64 {
        self.delta_e2_sq
    }
}

fn check_weight(name: &str, w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return domain(format!("{name} must lie in [0, 1], got {w}"));
    }
    Ok(())
}

/// Imperfect-CSI mixing.
///
/// Draws an error matrix `E` with i.i.d. `CN(0, delta_e1_sq)` entries and
/// returns `h_est = base`, `h_true = (1 - delta_e2_sq) * base + delta_e2_sq * E`.
/// `E` is always drawn, so the random stream advances identically for every
/// weight.
pub fn apply_csi_error<R: Rng + ?Sized>(
    base: &ChannelMatrix,
    delta_e1_sq: f64,
    delta_e2_sq: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    check_weight("delta_e1^2", delta_e1_sq)?;
    check_weight("delta_e2^2", delta_e2_sq)?;
    if base.entries().iter().any(|h| !h.is_finite()) {
        return usage("channel estimate contains non-finite entries");
    }
    let error_scale = (delta_e1_sq / 2.0).sqrt();
    let error = ChannelMatrix::from_fn(base.nr(), base.nt(), |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * error_scale
    });
    let h_true = if delta_e2_sq == 0.0 {
        base.clone()
    } else {
        let keep = 1.0 - delta_e2_sq;
        ChannelMatrix::from_fn(base.nr(), base.nt(), |r, c| {
            base.get(r, c) * keep + error.get(r, c) * delta_e2_sq
        })
    };
    Ok(ChannelRealization {
        h_true,
        h_est: base.clone(),
        delta_e2_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: usize = 100_000;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn entries(fp: &FadingParams, seed: u64) -> Vec<Complex64> {
        let m = sample_channel_matrix(fp, N, 1, &mut rng(seed)).unwrap();
        m.entries().to_vec()
    }

    /// Mean of `|h|^2` and its standard error.
    fn power_stats(h: &[Complex64]) -> (f64, f64) {
        let p: Vec<f64> = h.iter().map(|x| x.norm_sqr()).collect();
        let n = p.len() as f64;
        let mean = p.iter().sum::<f64>() / n;
        let var = p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn los_only_limit_has_unit_power() {
        let fp = FadingParams { rician_k: 1e9, nakagami_m: 1.0, ..FadingParams::default() };
        let (mean, _) = power_stats(&entries(&fp, 1));
        assert!((mean - 1.0).abs() < 0.02, "mean power {mean}");
    }

    #[test]
    fn unit_k_power_is_one_and_a_half() {
        let fp = FadingParams { rician_k: 1.0, nakagami_m: 1.0, ..FadingParams::default() };
        let (mean, _) = power_stats(&entries(&fp, 2));
        assert!((mean - 1.5).abs() < 0.03, "mean power {mean}");
    }

    #[test]
    fn nlos_only_limit_is_rayleigh() {
        let fp = FadingParams { rician_k: 0.0, ..FadingParams::default() };
        let h = entries(&fp, 3);
        let (mean, _) = power_stats(&h);
        assert!((mean - 2.0).abs() < 0.04, "mean power {mean}");
        // Rayleigh: E|h| = sigma * sqrt(pi / 2).
        let mean_mag = h.iter().map(|x| x.norm()).sum::<f64>() / h.len() as f64;
        assert!((mean_mag - (PI / 2.0).sqrt()).abs() < 0.01, "mean magnitude {mean_mag}");
    }

    #[test]
    fn moment_identity_over_grid() {
        let mut seed = 10;
        for k in [0.0, 1.0, 10.0] {
            for m in [0.8, 1.0, 2.0] {
                let fp = FadingParams { rician_k: k, nakagami_m: m, ..FadingParams::default() };
                let (mean, se) = power_stats(&entries(&fp, seed));
                seed += 1;
                let expected = fp.mean_power();
                assert!(
                    (mean - expected).abs() < 3.0 * se,
                    "K={k} m={m}: {mean} vs {expected} (se {se})"
                );
            }
        }
    }

    #[test]
    fn nakagami_moments() {
        for (m, omega) in [(0.8, 1.0), (2.0, 1.0), (1.5, 3.0)] {
            let fp = FadingParams { nakagami_m: m, nakagami_omega: omega, ..FadingParams::default() };
            let s = ShadowedRician::new(&fp).unwrap();
            let mut r = rng(20);
            let x2: Vec<f64> = (0..N).map(|_| s.nakagami(&mut r).powi(2)).collect();
            let n = N as f64;
            let mean = x2.iter().sum::<f64>() / n;
            let var = x2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((mean - omega).abs() < 3.0 * (var / n).sqrt(), "m={m}: E[X^2]={mean}");
            // Shape from the moment ratio m = Omega^2 / Var(X^2).
            let m_hat = mean * mean / var;
            assert!((m_hat - m).abs() / m < 0.05, "m={m}: recovered {m_hat}");
        }
    }

    #[test]
    fn phases_are_uniform() {
        let h = entries(&FadingParams::default(), 30);
        let resultant: Complex64 = h.iter().map(|x| x / x.norm()).sum::<Complex64>() / h.len() as f64;
        assert!(resultant.norm() < 0.01, "resultant length {}", resultant.norm());
    }

    #[test]
    fn rejects_invalid_params() {
        let bad_m = FadingParams { nakagami_m: 0.4, ..FadingParams::default() };
        assert!(sample_channel_matrix(&bad_m, 2, 2, &mut rng(0)).is_err());
        let bad_k = FadingParams { rician_k: -1.0, ..FadingParams::default() };
        assert!(sample_channel_matrix(&bad_k, 2, 2, &mut rng(0)).is_err());
        assert!(sample_channel_matrix(&FadingParams::default(), 0, 2, &mut rng(0)).is_err());
    }

    #[test]
    fn doppler_examples() {
        let dp = DopplerParams { speed_mps: 7500.0, alpha_deg: 30.0, ..DopplerParams::default() };
        let fd = doppler_shift(&dp, 28.0, 780.0, 6371.0).unwrap();
        assert!((fd - 5.40e5).abs() / 5.40e5 < 1e-3, "fd = {fd}");
        let still = DopplerParams { speed_mps: 0.0, ..dp };
        assert_eq!(doppler_shift(&still, 28.0, 780.0, 6371.0).unwrap(), 0.0);
        let overhead = DopplerParams { alpha_deg: 90.0, ..dp };
        assert!(doppler_shift(&overhead, 28.0, 780.0, 6371.0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn delay_examples() {
        let dp = DopplerParams::default();
        assert_abs_diff_eq!(propagation_delay(&dp), 2.335e-3, epsilon = 1e-6);
        let one_second = DopplerParams { center_distance_km: LIGHT_SPEED_MPS / 1e3, ..dp };
        assert_abs_diff_eq!(propagation_delay(&one_second), 1.0, epsilon = 1e-12);
        let tiny = DopplerParams { center_distance_km: 1e-12, ..dp };
        assert!(propagation_delay(&tiny) < 1e-17);
    }

    #[test]
    fn time_variation_phase() {
        let h = ChannelMatrix::filled(1, 1, Complex64::new(1.0, 0.0));
        assert_eq!(apply_time_variation(&h, 100.0, 28.0, 0, 1e-6, 1e-3), h);
        // 100 Hz over 2.5 ms is a quarter turn.
        let out = apply_time_variation(&h, 100.0, 0.0, 5, 0.0, 0.5e-3);
        assert_abs_diff_eq!(out.get(0, 0).re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.get(0, 0).im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn time_variation_preserves_magnitude_and_composes() {
        let h = sample_channel_matrix(&FadingParams::default(), 4, 3, &mut rng(40)).unwrap();
        let (fd, ts) = (5.4e5, 1e-6);
        for t in [1u64, 7, 1000] {
            let out = apply_time_variation(&h, fd, 28.0, t, 1e-7, ts);
            for (a, b) in h.entries().iter().zip(out.entries()) {
                assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm());
            }
        }
        let two_steps = apply_time_variation(&apply_time_variation(&h, fd, 0.0, 3, 0.0, ts), fd, 0.0, 4, 0.0, ts);
        let one_step = apply_time_variation(&h, fd, 0.0, 7, 0.0, ts);
        for (a, b) in two_steps.entries().iter().zip(one_step.entries()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn perfect_csi_keeps_truth_equal_to_estimate() {
        let h = sample_channel_matrix(&FadingParams::default(), 4, 2, &mut rng(50)).unwrap();
        let real = apply_csi_error(&h, 0.3, 0.0, &mut rng(51)).unwrap();
        assert_eq!(real.h_true(), real.h_est());
        assert_eq!(real.h_est(), &h);
    }

    #[test]
    fn pure_error_limit_is_independent_of_estimate() {
        let base = ChannelMatrix::filled(1, N, Complex64::new(5.0, -3.0));
        let real = apply_csi_error(&base, 1.0, 1.0, &mut rng(52)).unwrap();
        let (mean_power, se) = power_stats(real.h_true().entries());
        assert!((mean_power - 1.0).abs() < 3.0 * se);
        let mean: Complex64 = real.h_true().entries().iter().sum::<Complex64>() / N as f64;
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn half_mixing_mean() {
        let base = ChannelMatrix::filled(1, 1, Complex64::new(1.0, 0.0));
        let mut r = rng(53);
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..N {
            acc += apply_csi_error(&base, 1.0, 0.5, &mut r).unwrap().h_true().get(0, 0);
        }
        let mean = acc / N as f64;
        assert!((mean.re - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn csi_error_draws_are_paired_across_weights() {
        let h = sample_channel_matrix(&FadingParams::default(), 4, 2, &mut rng(60)).unwrap();
        let a = apply_csi_error(&h, 0.5, 0.2, &mut rng(61)).unwrap();
        let b = apply_csi_error(&h, 0.5, 0.2, &mut rng(61)).unwrap();
        assert_eq!(a, b);
        // Recover E from two weights with the same stream.
        let c = apply_csi_error(&h, 0.5, 0.5, &mut rng(61)).unwrap();
        for r in 0..h.nr() {
            for col in 0..h.nt() {
                let e_a = (a.h_true().get(r, col) - h.get(r, col) * 0.8) / 0.2;
                let e_c = (c.h_true().get(r, col) - h.get(r, col) * 0.5) / 0.5;
                assert!((e_a - e_c).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn csi_weights_are_range_checked() {
        let h = ChannelMatrix::identity(2);
        assert!(apply_csi_error(&h, 1.2, 0.1, &mut rng(0)).is_err());
        assert!(apply_csi_error(&h, 0.1, -0.1, &mut rng(0)).is_err());
    }
}
