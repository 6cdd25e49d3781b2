//! CSV tables, run manifests and the built-in validation checks.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_channel_matrix, ChannelMatrix, FadingParams};
use crate::config::{render, RunSpec};
use crate::detection::{complexity_sm, complexity_ssk, detect, transmit, DetectionResult, ReceivedSignal};
use crate::error::Result;
use crate::modem::{bits_per_use, encode, Constellation, Scheme, SchemeConfig};
use crate::montecarlo::{awgn_bpsk_reference, LinkMode, Simulator, SweepConfig, SweepResult};
use crate::Complex64;

pub const CSV_HEADER: [&str; 12] = [
    "scheme",
    "nt",
    "nr",
    "m_order",
    "delta_e2_sq",
    "snr_db",
    "bits",
    "errors",
    "ber",
    "ci95",
    "se_bpcu",
    "complexity_total",
];

/// Writes one row per (sweep, SNR point) after a header row.
pub fn write_csv<W: io::Write>(results: &[SweepResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        let s = &r.config.scheme;
        for p in &r.points {
            w.write_record([
                s.scheme.to_string(),
                s.nt.to_string(),
                s.nr.to_string(),
                s.m_order.to_string(),
                r.config.delta_e2_sq.to_string(),
                p.snr_db.to_string(),
                p.bits_simulated.to_string(),
                p.bit_errors.to_string(),
                p.ber.to_string(),
                p.half_width95.to_string(),
                r.se_bpcu.to_string(),
                r.complexity.total().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(results: &[SweepResult], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(results, io::BufWriter::new(file))
}

fn describe(cfg: &SweepConfig) -> String {
    let s = &cfg.scheme;
    match s.scheme {
        Scheme::Sm => format!("SM(nt={}, M={} {})", s.nt, s.m_order, s.constellation),
        Scheme::Ssk => format!("SSK(nt={})", s.nt),
        Scheme::Trad => format!("TRAD(M={} {})", s.m_order, s.constellation),
    }
}

/// Self-contained manifest: metadata as comments followed by the fully
/// resolved configuration, so the manifest itself is a valid config file.
pub fn render_manifest(spec: &RunSpec, results: &[SweepResult]) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# leosm {} run manifest", env!("CARGO_PKG_VERSION"));
    let names: Vec<&str> = match spec {
        RunSpec::Sweep(s) => vec![s.name.as_str()],
        RunSpec::Suite(s) => s.members.iter().map(|m| m.name.as_str()).collect(),
    };
    for (name, r) in names.iter().zip(results) {
        let c = &r.config;
        let _ = writeln!(
            out,
            "# {name}: {} nr={} seed={} se_bpcu={} complexity_cm={} complexity_ca={} complexity_total={} wall_clock_s={:.3}",
            describe(c),
            c.scheme.nr,
            c.master_seed,
            r.se_bpcu,
            r.complexity.cm,
            r.complexity.ca,
            r.complexity.total(),
            r.wall_clock_s
        );
        if !c.fading_enabled {
            let _ = writeln!(out, "# {name}: fading disabled (H = 1), AWGN validation mode");
        }
        if c.link_mode == LinkMode::Absolute {
            let loss = c.mean_path_loss_db()?;
            let _ = writeln!(
                out,
                "# {name}: absolute link, mean path loss {loss} dB, receive SNR = configured SNR - {loss} dB"
            );
        }
    }
    if let RunSpec::Suite(s) = spec {
        if s.equal_se {
            let _ = writeln!(
                out,
                "# suite {}: equal-SE reconstruction, (nt, M) per member chosen so all carry the same bpcu",
                s.name
            );
        }
    }
    let _ = writeln!(out);
    out.push_str(&render(spec));
    Ok(out)
}

/// An `{Nt, M}` pair.
pub type QSet = (usize, usize);

/// The four `{Nt, M}` sets of the complexity/SE comparison.
pub const DEFAULT_Q_SETS: [QSet; 4] = [(8, 8), (16, 16), (32, 32), (64, 64)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub nt: usize,
    pub m_order: usize,
    pub sm: u64,
    pub ssk: u64,
    pub trad: u64,
}

/// Closed-form detector cost per Q-set; the benchmark searches one antenna.
pub fn complexity_table(nr: usize, sets: &[QSet]) -> Vec<TableRow> {
    let nr = nr as u64;
    sets.iter()
        .map(|&(nt, m)| TableRow {
            nt,
            m_order: m,
            sm: complexity_sm(nt as u64, nr, m as u64).total(),
            ssk: complexity_ssk(nt as u64, nr).total(),
            trad: complexity_sm(1, nr, m as u64).total(),
        })
        .collect()
}

/// Spectral efficiency in bpcu per Q-set.
pub fn se_table(sets: &[QSet]) -> Vec<TableRow> {
    sets.iter()
        .map(|&(nt, m)| TableRow {
            nt,
            m_order: m,
            sm: bits_per_use(&SchemeConfig::sm(nt, m, 1)) as u64,
            ssk: bits_per_use(&SchemeConfig { nt, ..SchemeConfig::ssk(2, 1) }) as u64,
            trad: bits_per_use(&SchemeConfig::trad(m, 1)) as u64,
        })
        .collect()
}

pub fn write_table<W: io::Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["nt", "m_order", "sm", "ssk", "trad"])?;
    for r in rows {
        w.write_record([r.nt, r.m_order, r.sm as usize, r.ssk as usize, r.trad as usize].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `8x8,16x16` (or `8:8`) into Q-sets.
pub fn parse_q_sets(text: &str) -> Result<Vec<QSet>> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (a, b) = item
                .split_once(['x', ':'])
                .ok_or_else(|| crate::Error::Config(format!("set '{item}' must look like NTxM")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|n| n.is_power_of_two())
                    .ok_or_else(|| crate::Error::Config(format!("set '{item}': values must be powers of two")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Exhaustive search that forms each full transmit vector `x`, computes
/// `y - a H x` with a generic product and takes the first minimum. Kept
/// separate from the detector's column-wise search.
pub fn reference_ml_search(
    y: &ReceivedSignal,
    h_est: &ChannelMatrix,
    cfg: &SchemeConfig,
    con: &Constellation,
) -> DetectionResult {
    let amp = match cfg.scheme {
        Scheme::Ssk => y.es_amp * y.l_amp,
        _ => y.l_amp,
    };
    let mut candidates = Vec::new();
    for a in 0..cfg.antenna_hypotheses() {
        for s in 0..con.order() {
            let mut x = vec![Complex64::new(0.0, 0.0); h_est.nt()];
            x[a] = con.point(s) * amp;
            let dist2: f64 = (0..h_est.nr())
                .map(|l| {
                    let hx: Complex64 = (0..h_est.nt()).map(|i| h_est.get(l, i) * x[i]).sum();
                    (y.y[l] - hx).norm_sqr()
                })
                .sum();
            candidates.push((dist2, a, s));
        }
    }
    let (d, a, s) = candidates
        .into_iter()
        .reduce(|best, c| if c.0 < best.0 { c } else { best })
        .expect("at least one hypothesis");
    DetectionResult {
        antenna_index: a,
        symbol_index: (cfg.scheme != Scheme::Ssk).then_some(s),
        metric: d.sqrt(),
    }
}

/// Compares the detector against [`reference_ml_search`] on random
/// instances; returns the number of disagreements.
pub fn detector_oracle_mismatches(cfg: &SchemeConfig, snr_db: f64, instances: usize, seed: u64) -> Result<usize> {
    let con = cfg.constellation()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n0 = 10f64.powf(-snr_db / 10.0);
    let mut mismatches = 0;
    for _ in 0..instances {
        let h = sample_channel_matrix(&FadingParams::default(), cfg.nt, cfg.nr, &mut rng)?;
        let bits: Vec<bool> = (0..bits_per_use(cfg)).map(|_| rng.random()).collect();
        let tv = encode(&bits, cfg, &con)?;
        let y = transmit(&h, &tv, cfg.scheme, 1.0, 1.0, n0, &mut rng)?;
        let got = detect(&y, &h, cfg, &con)?;
        let want = reference_ml_search(&y, &h, cfg, &con);
        if (got.antenna_index, got.symbol_index) != (want.antenna_index, want.symbol_index) {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

/// AWGN BPSK against `Q(sqrt(2 snr))` and detector against the exhaustive
/// reference.
pub fn run_validation(trials: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let grid = vec![0.0, 2.0, 4.0, 6.0, 8.0];
    let cfg = SweepConfig {
        fading_enabled: false,
        ..SweepConfig::new(SchemeConfig::trad(2, 1), grid.clone(), trials, seed)
    };
    let sim = Simulator::new(&cfg)?;
    for snr in grid {
        let p = sim.estimate_ber(snr)?;
        let expected = awgn_bpsk_reference(snr);
        let passed = (p.ber - expected).abs() <= 3.0 * p.half_width95;
        out.push(CheckOutcome {
            name: format!("awgn-bpsk {snr} dB"),
            passed,
            detail: format!("ber {:.6e} vs Q {:.6e} (ci95 {:.2e})", p.ber, expected, p.half_width95),
        });
    }
    for cfg in [SchemeConfig::sm(4, 4, 2), SchemeConfig::ssk(8, 2)] {
        let mismatches = detector_oracle_mismatches(&cfg, 10.0, 1000, seed)?;
        out.push(CheckOutcome {
            name: format!("ml-oracle {} nt={} m={} nr={}", cfg.scheme, cfg.nt, cfg.m_order, cfg.nr),
            passed: mismatches == 0,
            detail: format!("{mismatches} mismatches in 1000 instances"),
        });
    }
    Ok(out)
}
