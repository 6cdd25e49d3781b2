//! Bit mapping for spatial modulation, space shift keying and the
//! single-antenna M-ary benchmark.
//!
//! An SM channel use carries `log2(M)` symbol bits followed by `log2(Nt)`
//! antenna bits. SSK carries antenna bits only and the active antenna
//! radiates an unmodulated unit amplitude. The benchmark carries symbol
//! bits only, always from antenna 0. All indices are MSB-first natural
//! binary; constellation points are Gray labelled.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{config, usage, Error, Result};

/// Transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Spatial modulation: antenna index plus constellation symbol.
    Sm,
    /// Space shift keying: antenna index only.
    Ssk,
    /// Conventional single-antenna M-ary PSK/QAM.
    Trad,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Sm => "SM",
            Scheme::Ssk => "SSK",
            Scheme::Trad => "TRAD",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SM" => Ok(Scheme::Sm),
            "SSK" => Ok(Scheme::Ssk),
            "TRAD" => Ok(Scheme::Trad),
            _ => config(format!("unknown scheme '{s}' (expected SM, SSK or TRAD)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Psk,
    Qam,
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstellationKind::Psk => "PSK",
            ConstellationKind::Qam => "QAM",
        })
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PSK" => Ok(ConstellationKind::Psk),
            "QAM" => Ok(ConstellationKind::Qam),
            _ => config(format!("unknown constellation '{s}' (expected PSK or QAM)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Transmit antennas.
    pub nt: usize,
    /// Receive antennas.
    pub nr: usize,
    /// Constellation order. Ignored by SSK.
    pub m_order: usize,
    pub constellation: ConstellationKind,
}

impl SchemeConfig {
    pub fn sm(nt: usize, m_order: usize, nr: usize) -> Self {
        SchemeConfig {
            scheme: Scheme::Sm,
            nt,
            nr,
            m_order,
            constellation: ConstellationKind::Psk,
        }
    }

    pub fn ssk(nt: usize, nr: usize) -> Self {
        SchemeConfig {
            scheme: Scheme::Ssk,
            nt,
            nr,
            m_order: 1,
            constellation: ConstellationKind::Psk,
        }
    }

    pub fn trad(m_order: usize, nr: usize) -> Self {
        SchemeConfig {
            scheme: Scheme::Trad,
            nt: 1,
            nr,
            m_order,
            constellation: ConstellationKind::Psk,
        }
    }

    pub fn with_constellation(mut self, kind: ConstellationKind) -> Self {
        self.constellation = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || !self.nt.is_power_of_two() {
            return config(format!("nt must be a power of two, got {}", self.nt));
        }
        if self.nr == 0 {
            return config("nr must be at least 1");
        }
        match self.scheme {
            Scheme::Ssk => {
                if self.nt < 2 {
                    return config("SSK needs at least 2 transmit antennas");
                }
            }
            Scheme::Sm | Scheme::Trad => {
                if self.m_order < 2 || !self.m_order.is_power_of_two() {
                    return config(format!(
                        "m_order must be a power of two of at least 2, got {}",
                        self.m_order
                    ));
                }
                if self.constellation == ConstellationKind::Qam && !is_square_order(self.m_order) {
                    return config(format!("QAM needs a square order (4, 16, 64, ...), got {}", self.m_order));
                }
            }
        }
        Ok(())
    }

    /// Antenna hypotheses the detector searches over.
    pub fn antenna_hypotheses(&self) -> usize {
        match self.scheme {
            Scheme::Sm | Scheme::Ssk => self.nt,
            Scheme::Trad => 1,
        }
    }

    /// Symbol hypotheses per antenna.
    pub fn symbol_hypotheses(&self) -> usize {
        match self.scheme {
            Scheme::Sm | Scheme::Trad => self.m_order,
            Scheme::Ssk => 1,
        }
    }

    pub fn antenna_bits(&self) -> usize {
        log2(self.antenna_hypotheses())
    }

    pub fn symbol_bits(&self) -> usize {
        log2(self.symbol_hypotheses())
    }

    /// The constellation this scheme modulates; SSK uses the single point 1.
    pub fn constellation(&self) -> Result<Constellation> {
        self.validate()?;
        match self.scheme {
            Scheme::Ssk => Ok(Constellation::unmodulated()),
            Scheme::Sm | Scheme::Trad => build_constellation(self.m_order, self.constellation),
        }
    }
}

fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

fn is_square_order(m: usize) -> bool {
    m.is_power_of_two() && m.trailing_zeros().is_multiple_of(2) && m >= 4
}

fn gray(n: usize) -> usize {
    n ^ (n >> 1)
}

/// Spectral efficiency in bits per channel use.
pub fn bits_per_use(cfg: &SchemeConfig) -> usize {
    cfg.antenna_bits() + cfg.symbol_bits()
}

/// A unit-average-energy constellation indexed by bit label.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<Complex64>,
}

impl Constellation {
    /// The single point `1`, used for SSK and for degenerate one-symbol
    /// hypothesis sets.
    pub fn unmodulated() -> Self {
        Constellation {
            kind: ConstellationKind::Psk,
            points: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits(&self) -> usize {
        log2(self.points.len())
    }

    /// Point carrying bit label `label`.
    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Points in label order.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// `e^{j 2 pi k / m}`, exact on the axes.
fn unit_phasor(k: usize, m: usize) -> Complex64 {
    let k = k % m;
    if (4 * k).is_multiple_of(m) {
        return match 4 * k / m {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
}

/// Gray-labelled M-PSK (any power-of-two order) or square M-QAM with
/// per-axis Gray coding, normalized to unit average energy.
pub fn build_constellation(m_order: usize, kind: ConstellationKind) -> Result<Constellation> {
    if m_order < 2 || !m_order.is_power_of_two() {
        return config(format!("constellation order must be a power of two of at least 2, got {m_order}"));
    }
    let mut points = vec![Complex64::new(0.0, 0.0); m_order];
    match kind {
        ConstellationKind::Psk => {
            for k in 0..m_order {
                points[gray(k)] = unit_phasor(k, m_order);
            }
        }
        ConstellationKind::Qam => {
            if !is_square_order(m_order) {
                return config(format!("QAM needs a square order (4, 16, 64, ...), got {m_order}"));
            }
            let side = 1usize << (log2(m_order) / 2);
            let axis_bits = log2(side);
            let norm = (2.0 * (m_order as f64 - 1.0) / 3.0).sqrt();
            let level = |i: usize| (2 * i) as f64 - (side - 1) as f64;
            for i in 0..side {
                for q in 0..side {
                    let label = (gray(i) << axis_bits) | gray(q);
                    points[label] = Complex64::new(level(i), level(q)) / norm;
                }
            }
        }
    }
    Ok(Constellation { kind, points })
}

/// One channel use: a single active antenna carrying one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitVector {
    pub antenna_index: usize,
    pub symbol_index: usize,
    pub symbol: Complex64,
    pub nt: usize,
}

impl TransmitVector {
    /// Length-`nt` vector with `symbol` at `antenna_index` and zeros elsewhere.
    pub fn as_vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.nt];
        v[self.antenna_index] = self.symbol;
        v
    }
}

fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn push_index_bits(out: &mut Vec<bool>, index: usize, width: usize) {
    out.extend((0..width).rev().map(|i| (index >> i) & 1 == 1));
}

/// Maps one channel use worth of bits to a transmit vector.
pub fn encode(bits: &[bool], cfg: &SchemeConfig, con: &Constellation) -> Result<TransmitVector> {
    let expected = bits_per_use(cfg);
    if bits.len() != expected {
        return usage(format!(
            "{} with nt={} m={} carries {expected} bits per use, got {}",
            cfg.scheme,
            cfg.nt,
            cfg.m_order,
            bits.len()
        ));
    }
    if con.order() != cfg.symbol_hypotheses() {
        return usage(format!(
            "constellation has {} points but the scheme expects {}",
            con.order(),
            cfg.symbol_hypotheses()
        ));
    }
    let (symbol_bits, antenna_bits) = bits.split_at(cfg.symbol_bits());
    let symbol_index = bits_to_index(symbol_bits);
    Ok(TransmitVector {
        antenna_index: bits_to_index(antenna_bits),
        symbol_index,
        symbol: con.point(symbol_index),
        nt: cfg.nt,
    })
}

/// Inverse of [`encode`]: recovers the bits from detected indices.
pub fn demap(antenna_index: usize, symbol_index: usize, cfg: &SchemeConfig) -> Result<Vec<bool>> {
    if antenna_index >= cfg.antenna_hypotheses() {
        return usage(format!(
            "antenna index {antenna_index} out of range for {} antenna hypotheses",
            cfg.antenna_hypotheses()
        ));
    }
    if symbol_index >= cfg.symbol_hypotheses() {
        return usage(format!(
            "symbol index {symbol_index} out of range for {} symbols",
            cfg.symbol_hypotheses()
        ));
    }
    let mut bits = Vec::with_capacity(bits_per_use(cfg));
    push_index_bits(&mut bits, symbol_index, cfg.symbol_bits());
    push_index_bits(&mut bits, antenna_index, cfg.antenna_bits());
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn all_patterns(width: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1usize << width).map(move |v| (0..width).rev().map(|i| (v >> i) & 1 == 1).collect())
    }

    #[test]
    fn bpsk_points() {
        let c = build_constellation(2, ConstellationKind::Psk).unwrap();
        assert_eq!(c.points(), &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
    }

    #[test]
    fn qpsk_is_gray_and_unit_modulus() {
        let c = build_constellation(4, ConstellationKind::Psk).unwrap();
        for p in c.points() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
        assert_psk_gray(&c);
    }

    fn assert_psk_gray(c: &Constellation) {
        let m = c.order();
        let mut by_angle: Vec<(f64, usize)> = c
            .points()
            .iter()
            .enumerate()
            .map(|(label, p)| (p.arg().rem_euclid(2.0 * PI), label))
            .collect();
        by_angle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for k in 0..m {
            let a = by_angle[k].1;
            let b = by_angle[(k + 1) % m].1;
            assert_eq!((a ^ b).count_ones(), 1, "labels {a} and {b} are adjacent");
        }
    }

    #[test]
    fn qam16_grid() {
        let c = build_constellation(16, ConstellationKind::Qam).unwrap();
        let scale = 10f64.sqrt();
        for p in c.points() {
            for x in [p.re * scale, p.im * scale] {
                let r = x.round();
                assert!((x - r).abs() < 1e-12 && [1.0, 3.0].contains(&r.abs()));
            }
        }
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
        // Nearest neighbours on the grid differ in one bit.
        let d_min = 2.0 / scale;
        for (a, pa) in c.points().iter().enumerate() {
            for (b, pb) in c.points().iter().enumerate() {
                if ((pa - pb).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn unsupported_orders() {
        assert!(build_constellation(8, ConstellationKind::Qam).is_err());
        assert!(build_constellation(2, ConstellationKind::Qam).is_err());
        assert!(build_constellation(6, ConstellationKind::Psk).is_err());
        assert!(build_constellation(1, ConstellationKind::Psk).is_err());
    }

    #[test]
    fn energy_and_distinctness_for_all_supported() {
        let mut cases = vec![];
        for p in 1..=8 {
            cases.push((1usize << p, ConstellationKind::Psk));
        }
        for p in [2, 4, 6, 8] {
            cases.push((1usize << p, ConstellationKind::Qam));
        }
        for (m, kind) in cases {
            let c = build_constellation(m, kind).unwrap();
            assert_eq!(c.order(), m);
            assert!((c.average_energy() - 1.0).abs() < 1e-12, "{m}-{kind}");
            for i in 0..m {
                for j in i + 1..m {
                    assert!((c.point(i) - c.point(j)).norm() > 1e-6, "{m}-{kind}: {i} and {j} coincide");
                }
            }
            if kind == ConstellationKind::Psk {
                assert_psk_gray(&c);
            }
        }
    }

    #[test]
    fn sm_encode_splits_symbol_then_antenna() {
        let cfg = SchemeConfig::sm(4, 4, 2);
        let con = cfg.constellation().unwrap();
        let tv = encode(&bits("0010"), &cfg, &con).unwrap();
        assert_eq!(tv.symbol_index, 0);
        assert_eq!(tv.antenna_index, 2);
        assert_eq!(tv.symbol, con.point(0));
    }

    #[test]
    fn ssk_encode() {
        let cfg = SchemeConfig::ssk(4, 2);
        let con = cfg.constellation().unwrap();
        let tv = encode(&bits("00"), &cfg, &con).unwrap();
        assert_eq!(tv.antenna_index, 0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(tv.as_vector(), vec![one, zero, zero, zero]);
    }

    #[test]
    fn trad_bpsk_encode() {
        let cfg = SchemeConfig::trad(2, 1);
        let con = cfg.constellation().unwrap();
        let tv = encode(&bits("0"), &cfg, &con).unwrap();
        assert_eq!(tv.symbol, Complex64::new(1.0, 0.0));
        assert_eq!(tv.antenna_index, 0);
    }

    #[test]
    fn encode_rejects_wrong_length() {
        let cfg = SchemeConfig::sm(4, 4, 2);
        let con = cfg.constellation().unwrap();
        assert!(matches!(encode(&bits("001"), &cfg, &con), Err(Error::Usage(_))));
    }

    #[test]
    fn demap_examples() {
        assert_eq!(demap(2, 0, &SchemeConfig::sm(4, 4, 2)).unwrap(), bits("0010"));
        assert_eq!(demap(5, 0, &SchemeConfig::ssk(8, 2)).unwrap(), bits("101"));
        assert!(demap(4, 0, &SchemeConfig::sm(4, 4, 2)).is_err());
        assert!(demap(0, 4, &SchemeConfig::sm(4, 4, 2)).is_err());
    }

    #[test]
    fn exhaustive_round_trip_and_single_active_antenna() {
        let mut cfgs = vec![];
        for nt in [1, 2, 4, 8] {
            for m in [2, 4, 8, 16] {
                cfgs.push(SchemeConfig::sm(nt, m, 1));
                cfgs.push(SchemeConfig::trad(m, 1));
                cfgs.push(SchemeConfig::sm(nt, m, 1).with_constellation(ConstellationKind::Qam));
            }
            if nt >= 2 {
                cfgs.push(SchemeConfig::ssk(nt, 1));
            }
        }
        for cfg in cfgs.into_iter().filter(|c| c.validate().is_ok()) {
            let con = cfg.constellation().unwrap();
            for pattern in all_patterns(bits_per_use(&cfg)) {
                let tv = encode(&pattern, &cfg, &con).unwrap();
                let v = tv.as_vector();
                let nonzero: Vec<usize> = (0..v.len()).filter(|&i| v[i].norm() > 0.0).collect();
                assert_eq!(nonzero, vec![tv.antenna_index]);
                if cfg.scheme == Scheme::Ssk {
                    assert_eq!(tv.symbol, Complex64::new(1.0, 0.0));
                }
                assert_eq!(demap(tv.antenna_index, tv.symbol_index, &cfg).unwrap(), pattern);
            }
        }
    }

    #[test]
    fn spectral_efficiency() {
        assert_eq!(bits_per_use(&SchemeConfig::sm(4, 4, 2)), 4);
        assert_eq!(bits_per_use(&SchemeConfig::ssk(8, 2)), 3);
        assert_eq!(bits_per_use(&SchemeConfig::trad(16, 2)), 4);
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::sm(3, 4, 2).validate().is_err());
        assert!(SchemeConfig::sm(4, 3, 2).validate().is_err());
        assert!(SchemeConfig::sm(4, 4, 0).validate().is_err());
        assert!(SchemeConfig::ssk(1, 2).validate().is_err());
        assert!(SchemeConfig::sm(4, 8, 2).with_constellation(ConstellationKind::Qam).validate().is_err());
        assert!(SchemeConfig::ssk(4, 2).validate().is_ok());
    }

    proptest! {
        #[test]
        fn sm_se_decomposes(nt_log in 0usize..8, m_log in 1usize..8) {
            let (nt, m) = (1 << nt_log, 1 << m_log);
            let sm = bits_per_use(&SchemeConfig::sm(nt, m, 1));
            let ssk = SchemeConfig { nt, ..SchemeConfig::ssk(2, 1) }.antenna_bits();
            let trad = bits_per_use(&SchemeConfig::trad(m, 1));
            prop_assert_eq!(sm, ssk + trad);
        }
    }
}
