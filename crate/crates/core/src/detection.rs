//! Received-signal synthesis and exhaustive maximum-likelihood detection.
//!
//! SM and the single-antenna benchmark search every (antenna, symbol) pair
//! for the minimum of `||y - sqrt(L) H v s||`. SSK searches antennas only,
//! against `sqrt(Es L) H v`. Detection always uses the channel estimate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelMatrix;
use crate::error::{domain, usage, Result};
use crate::modem::{Constellation, Scheme, SchemeConfig, TransmitVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal {
    pub y: Vec<Complex64>,
    /// Total complex noise variance per receive antenna.
    pub n0: f64,
    /// Path-loss amplitude `sqrt(L)`.
    pub l_amp: f64,
    /// Symbol-energy amplitude `sqrt(Es)`, applied to SSK only.
    pub es_amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub antenna_index: usize,
    /// `None` for SSK, which carries no symbol.
    pub symbol_index: Option<usize>,
    /// Euclidean distance to the winning hypothesis.
    pub metric: f64,
}

/// Complex multiplication and addition counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub cm: u64,
    pub ca: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.cm + self.ca
    }
}

impl std::ops::Add for OpCount {
    type Output = OpCount;

    fn add(self, rhs: OpCount) -> OpCount {
        OpCount {
            cm: self.cm + rhs.cm,
            ca: self.ca + rhs.ca,
        }
    }
}

/// Effective amplitude applied to the active column for a scheme.
fn signal_amplitude(scheme: Scheme, l_amp: f64, es_amp: f64) -> f64 {
    match scheme {
        Scheme::Ssk => es_amp * l_amp,
        Scheme::Sm | Scheme::Trad => l_amp,
    }
}

/// Passes one transmit vector through `h_true` and adds circular complex
/// Gaussian noise of total variance `n0` per receive antenna.
#[allow(clippy::too_many_arguments)]
pub fn transmit<R: Rng + ?Sized>(
    h_true: &ChannelMatrix,
    tv: &TransmitVector,
    scheme: Scheme,
    l_amp: f64,
    es_amp: f64,
    n0: f64,
    rng: &mut R,
) -> Result<ReceivedSignal> {
    if tv.antenna_index >= h_true.nt() {
        return usage(format!(
            "antenna {} does not exist in a channel with {} transmit antennas",
            tv.antenna_index,
            h_true.nt()
        ));
    }
    if n0.is_nan() || n0 < 0.0 || n0.is_infinite() {
        return domain(format!("noise variance must be non-negative, got {n0}"));
    }
    if l_amp.is_nan() || l_amp <= 0.0 {
        return domain(format!("path-loss amplitude must be positive, got {l_amp}"));
    }
    let amp = signal_amplitude(scheme, l_amp, es_amp);
    let sigma = (n0 / 2.0).sqrt();
    let y = h_true
        .column(tv.antenna_index)
        .iter()
        .map(|&h| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            (h * tv.symbol) * amp + Complex64::new(re, im) * sigma
        })
        .collect();
    Ok(ReceivedSignal { y, n0, l_amp, es_amp })
}

fn check_dims(y: &ReceivedSignal, h_est: &ChannelMatrix, antennas: usize) -> Result<()> {
    if y.y.len() != h_est.nr() {
        return usage(format!(
            "received vector has {} entries but the channel has {} receive antennas",
            y.y.len(),
            h_est.nr()
        ));
    }
    if antennas == 0 || antennas > h_est.nt() {
        return usage(format!(
            "{antennas} antenna hypotheses requested from a channel with {} transmit antennas",
            h_est.nt()
        ));
    }
    Ok(())
}

fn squared_distance(y: &[Complex64], column: &[Complex64], x: Complex64, amp: f64) -> f64 {
    y.iter()
        .zip(column)
        .map(|(&yl, &h)| (yl - (h * x) * amp).norm_sqr())
        .sum()
}

/// Searches `antennas x points` hypotheses in lexicographic order; the first
/// minimum wins.
fn search(y: &[Complex64], h_est: &ChannelMatrix, antennas: usize, points: &[Complex64], amp: f64) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::INFINITY);
    for a in 0..antennas {
        let column = h_est.column(a);
        for (s, &x) in points.iter().enumerate() {
            let d = squared_distance(y, column, x, amp);
            if d < best.2 {
                best = (a, s, d);
            }
        }
    }
    best
}

/// ML detection over `nt` antennas and every constellation point.
pub fn ml_detect_sm(y: &ReceivedSignal, h_est: &ChannelMatrix, con: &Constellation, nt: usize) -> Result<DetectionResult> {
    check_dims(y, h_est, nt)?;
    let (a, s, d) = search(&y.y, h_est, nt, con.points(), y.l_amp);
    Ok(DetectionResult {
        antenna_index: a,
        symbol_index: Some(s),
        metric: d.sqrt(),
    })
}

/// ML detection of the active antenna for SSK.
pub fn ml_detect_ssk(y: &ReceivedSignal, h_est: &ChannelMatrix, nt: usize) -> Result<DetectionResult> {
    check_dims(y, h_est, nt)?;
    let one = [Complex64::new(1.0, 0.0)];
    let (a, _, d) = search(&y.y, h_est, nt, &one, y.es_amp * y.l_amp);
    Ok(DetectionResult {
        antenna_index: a,
        symbol_index: None,
        metric: d.sqrt(),
    })
}

/// Dispatches to the detector matching `cfg.scheme`. The benchmark is SM
/// restricted to antenna 0.
pub fn detect(y: &ReceivedSignal, h_est: &ChannelMatrix, cfg: &SchemeConfig, con: &Constellation) -> Result<DetectionResult> {
    match cfg.scheme {
        Scheme::Sm | Scheme::Trad => ml_detect_sm(y, h_est, con, cfg.antenna_hypotheses()),
        Scheme::Ssk => ml_detect_ssk(y, h_est, cfg.antenna_hypotheses()),
    }
}

/// Complex arithmetic that tallies every multiplication and addition.
#[derive(Debug, Default)]
struct Counter {
    ops: OpCount,
}

impl Counter {
    fn mul(&mut self, a: Complex64, b: Complex64) -> Complex64 {
        self.ops.cm += 1;
        a * b
    }

    /// Complex-by-real scaling counts as one complex multiplication.
    fn scale(&mut self, a: Complex64, k: f64) -> Complex64 {
        self.ops.cm += 1;
        a * k
    }

    fn add(&mut self, a: Complex64, b: Complex64) -> Complex64 {
        self.ops.ca += 1;
        a + b
    }

    fn sub(&mut self, a: Complex64, b: Complex64) -> Complex64 {
        self.ops.ca += 1;
        a - b
    }

    fn norm_sqr(&mut self, a: Complex64) -> f64 {
        self.ops.cm += 1;
        a.norm_sqr()
    }

    fn add_real(&mut self, a: f64, b: f64) -> f64 {
        self.ops.ca += 1;
        a + b
    }

    /// Full matrix-vector product over the first `x.len()` columns.
    fn mat_vec(&mut self, h: &ChannelMatrix, x: &[Complex64]) -> Vec<Complex64> {
        (0..h.nr())
            .map(|row| {
                let mut acc = self.mul(h.get(row, 0), x[0]);
                for (col, &xc) in x.iter().enumerate().skip(1) {
                    let term = self.mul(h.get(row, col), xc);
                    acc = self.add(acc, term);
                }
                acc
            })
            .collect()
    }

    fn squared_norm(&mut self, v: &[Complex64]) -> f64 {
        let mut acc = self.norm_sqr(v[0]);
        for &e in &v[1..] {
            let p = self.norm_sqr(e);
            acc = self.add_real(acc, p);
        }
        acc
    }
}

/// ML detection with literal per-hypothesis arithmetic and operation
/// counting. For each hypothesis:
///
/// 1. `H (v s)` as a full matrix-vector product: `Nr*Nt` CM, `Nr*(Nt-1)` CA;
/// 2. scaling by `sqrt(L)` (SM and benchmark only): `Nr` CM;
/// 3. subtraction from `y`: `Nr` CA;
/// 4. squared norm: `Nr` CM and `Nr - 1` CA.
///
/// For SSK the amplitude `sqrt(Es L)` is folded into the selection vector,
/// so step 2 is absent. Decisions are identical to [`detect`].
pub fn instrumented_detect(
    y: &ReceivedSignal,
    h_est: &ChannelMatrix,
    cfg: &SchemeConfig,
    con: &Constellation,
) -> Result<(DetectionResult, OpCount)> {
    let antennas = cfg.antenna_hypotheses();
    check_dims(y, h_est, antennas)?;
    if con.order() != cfg.symbol_hypotheses() {
        return usage(format!(
            "constellation has {} points but the scheme expects {}",
            con.order(),
            cfg.symbol_hypotheses()
        ));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut counter = Counter::default();
    let mut best = (0, 0, f64::INFINITY);
    let mut x = vec![zero; antennas];
    for a in 0..antennas {
        for (s, &point) in con.points().iter().enumerate() {
            x.iter_mut().for_each(|e| *e = zero);
            let hx = match cfg.scheme {
                Scheme::Sm | Scheme::Trad => {
                    x[a] = point;
                    let hx = counter.mat_vec(h_est, &x);
                    hx.into_iter().map(|e| counter.scale(e, y.l_amp)).collect::<Vec<_>>()
                }
                Scheme::Ssk => {
                    x[a] = Complex64::new(y.es_amp * y.l_amp, 0.0);
                    counter.mat_vec(h_est, &x)
                }
            };
            let residual: Vec<Complex64> = y.y.iter().zip(&hx).map(|(&yl, &sl)| counter.sub(yl, sl)).collect();
            let d = counter.squared_norm(&residual);
            if d < best.2 {
                best = (a, s, d);
            }
        }
    }
    let result = DetectionResult {
        antenna_index: best.0,
        symbol_index: (cfg.scheme != Scheme::Ssk).then_some(best.1),
        metric: best.2.sqrt(),
    };
    Ok((result, counter.ops))
}

/// Detector cost for SM: `[Nr (2 Nt + 3) - 1] Nt M` operations.
pub fn complexity_sm(nt: u64, nr: u64, m_order: u64) -> OpCount {
    let hypotheses = nt * m_order;
    OpCount {
        cm: nr * (nt + 2) * hypotheses,
        ca: (nr * (nt + 1) - 1) * hypotheses,
    }
}

/// Detector cost for SSK: `[Nr (2 Nt + 2) - 1] Nt` operations.
pub fn complexity_ssk(nt: u64, nr: u64) -> OpCount {
    OpCount {
        cm: nr * (nt + 1) * nt,
        ca: (nr * (nt + 1) - 1) * nt,
    }
}

/// Closed-form detector cost for a scheme; the benchmark is SM with one
/// antenna hypothesis.
pub fn complexity_for(cfg: &SchemeConfig) -> OpCount {
    let (nt, nr, m) = (cfg.nt as u64, cfg.nr as u64, cfg.m_order as u64);
    match cfg.scheme {
        Scheme::Sm => complexity_sm(nt, nr, m),
        Scheme::Ssk => complexity_ssk(nt, nr),
        Scheme::Trad => complexity_sm(1, nr, m),
    }
}

/// Instantaneous-SNR diagnostic between two hypotheses:
/// `sum_i sum_l l_amp * |h_{l,i} (x_a,i - x_b,i)| / n0`.
///
/// Not used by the detector. For SSK pass `sqrt(Es) * sqrt(L)` as `l_amp`.
pub fn pairwise_snr_metric(
    h_true: &ChannelMatrix,
    tv_a: &TransmitVector,
    tv_b: &TransmitVector,
    l_amp: f64,
    n0: f64,
) -> Result<f64> {
    if n0.is_nan() || n0 <= 0.0 {
        return domain(format!("noise variance must be positive, got {n0}"));
    }
    if tv_a.nt != h_true.nt() || tv_b.nt != h_true.nt() {
        return usage("transmit vectors and channel disagree on the antenna count");
    }
    let xa = tv_a.as_vector();
    let xb = tv_b.as_vector();
    let mut sum = 0.0;
    for i in 0..h_true.nt() {
        let diff = xa[i] - xb[i];
        for l in 0..h_true.nr() {
            sum += l_amp * (h_true.get(l, i) * diff).norm() / n0;
        }
    }
    Ok(sum)
}
