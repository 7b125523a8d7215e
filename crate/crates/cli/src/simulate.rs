//! `nrpos simulate` and `nrpos dataset make`: simulated RTT records written
//! as dataset folders.

use std::fmt::Write as _;
use std::path::Path;

use nrpos::dataset::{folder_name, simulate_record, write_record, MAX_TX_GAIN_DB};
use nrpos::refsig::SrsConfig;
use nrpos::simchan::{derive_seed, RttScenario};

use crate::config::{take_device, take_numerology, KvConfig};
use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 1;

/// Distance by attenuation grid; SNR falls 1 dB per dB of attenuation
/// from `snr_at_max_gain_db`.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub distances_m: Vec<f64>,
    pub attenuations_db: Vec<f64>,
    pub snr_at_max_gain_db: f64,
    pub seed: u64,
    pub template: RttScenario,
}

/// One grid point.
#[derive(Debug, Clone)]
pub struct Point {
    pub scenario: RttScenario,
    pub tx_gain_db: f64,
    pub attenuation_db: f64,
}

impl Sweep {
    pub fn from_config(mut cfg: KvConfig, seed: Option<u64>) -> Result<Self> {
        let distances_m = cfg
            .take_list("distances_m")?
            .unwrap_or_else(|| vec![7.0, 8.0, 9.0, 10.0, 11.0]);
        let attenuations_db = cfg
            .take_list("attenuations_db")?
            .unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        let snr_at_max_gain_db = cfg.take_or("snr_at_max_gain_db", 25.0)?;
        let snapshots = cfg.take_or("snapshots", 10usize)?;
        let file_seed = cfg.take::<u64>("seed")?;
        let numerology = take_numerology(&mut cfg)?;
        let dev = take_device(&mut cfg)?;
        let comb = cfg.take_or("srs_comb_size", 2usize)?;
        let bw = cfg.take_or("srs_bandwidth_hz", SrsConfig::DEFAULT_BANDWIDTH_HZ)?;
        let bias_samples = cfg.take_or("bias_samples", 0.0)?;
        cfg.finish()?;
        let seed = seed.or(file_seed).unwrap_or(DEFAULT_SEED);
        let mut template = RttScenario::new(0.0, snr_at_max_gain_db, snapshots, seed);
        template.srs = SrsConfig::centered(&numerology, bw, comb);
        template.numerology = numerology;
        template.amp = dev.amp;
        template.bias_samples = bias_samples;
        Ok(Self {
            distances_m,
            attenuations_db,
            snr_at_max_gain_db,
            seed,
            template,
        })
    }

    /// Distance-major grid; point `i` gets seed `derive_seed(seed, i)`.
    pub fn points(&self) -> Result<Vec<Point>> {
        let mut out = Vec::new();
        for &d in &self.distances_m {
            for &att in &self.attenuations_db {
                if att < 0.0 {
                    return Err(CliError::Data(format!("attenuation {att} dB is negative")));
                }
                let mut scenario = self.template.clone();
                scenario.distance_m = d;
                scenario.snr_db = self.snr_at_max_gain_db - att;
                scenario.attenuation_db = att;
                scenario.seed = derive_seed(self.seed, out.len() as u64);
                scenario.validate()?;
                out.push(Point {
                    scenario,
                    tx_gain_db: MAX_TX_GAIN_DB - att,
                    attenuation_db: att,
                });
            }
        }
        Ok(out)
    }
}

fn write_point(p: &Point, output: &Path) -> Result<()> {
    let rec = simulate_record(&p.scenario, p.tx_gain_db, 1)?;
    write_record(&rec, output)?;
    Ok(())
}

/// Simulates every point into `output`, spreading points over `jobs`
/// threads. Output does not depend on `jobs`.
pub fn run_points(points: &[Point], output: &Path, jobs: usize) -> Result<()> {
    std::fs::create_dir_all(output)?;
    let jobs = jobs.clamp(1, points.len().max(1));
    if jobs == 1 {
        return points.iter().try_for_each(|p| write_point(p, output));
    }
    let chunk = points.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().try_for_each(|p| write_point(p, output))))
            .collect();
        handles.into_iter().try_for_each(|h| {
            h.join()
                .map_err(|_| CliError::Internal("simulation worker panicked".into()))?
        })
    })
}

pub fn summary(points: &[Point], seed: u64, header: &str) -> Result<String> {
    let mut out = format!("# {header} seed={seed}\nfolder,distance_m,attenuation_db,tx_gain_db,snr_db,rtt_samples,snapshots,record_seed\n");
    for p in points {
        let sc = &p.scenario;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{}",
            folder_name(sc.distance_m, p.tx_gain_db)?,
            sc.distance_m,
            p.attenuation_db,
            p.tx_gain_db,
            sc.snr_db,
            sc.round_trip_delay_samples(),
            sc.num_snapshots,
            sc.seed
        );
    }
    Ok(out)
}

/// `nrpos simulate`: the full sweep plus `sweep.csv` in `output`.
pub fn run(scenario: &Path, output: &Path, jobs: usize, seed: Option<u64>) -> Result<String> {
    let sweep = Sweep::from_config(KvConfig::load(scenario)?, seed)?;
    let points = sweep.points()?;
    run_points(&points, output, jobs)?;
    let text = summary(&points, sweep.seed, "nrpos simulate")?;
    std::fs::write(output.join("sweep.csv"), &text)?;
    Ok(text)
}

pub struct MakeArgs<'a> {
    pub distance_m: f64,
    pub attenuation_db: f64,
    pub snr_db: Option<f64>,
    pub snapshots: usize,
    pub output: &'a Path,
    pub seed: Option<u64>,
}

/// `nrpos dataset make`: a single record.
pub fn make(a: MakeArgs<'_>) -> Result<String> {
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let mut template = RttScenario::new(a.distance_m, 0.0, a.snapshots, seed);
    let snr_at_max = match a.snr_db {
        Some(s) => s + a.attenuation_db,
        None => 25.0,
    };
    template.snr_db = snr_at_max;
    let sweep = Sweep {
        distances_m: vec![a.distance_m],
        attenuations_db: vec![a.attenuation_db],
        snr_at_max_gain_db: snr_at_max,
        seed,
        template,
    };
    let points = sweep.points()?;
    run_points(&points, a.output, 1)?;
    summary(&points, seed, "nrpos dataset make")
}
