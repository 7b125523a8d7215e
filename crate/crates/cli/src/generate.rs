//! `nrpos generate`: one reference signal mapped onto a grid and modulated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nrpos::ofdm::{serialize_txdataf, Ofdm};
use nrpos::refsig::{
    generate_prach, generate_prs, generate_srs, PrachConfig, PrachFormat, PrsConfig, SrsConfig,
};
use nrpos::{ReferenceSignal, ResourceGrid};

use crate::config::{take_device, take_numerology, KvConfig};
use crate::error::Result;
use crate::Kind;

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<output>.txdataF`, `<output>.iq` and `<output>_re_map.csv` and
/// returns the summary printed on stdout.
pub fn run(kind: Kind, config: Option<&Path>, output: &Path, seed: u64) -> Result<String> {
    let mut cfg = KvConfig::load_opt(config)?;
    let num = take_numerology(&mut cfg)?;
    let dev = take_device(&mut cfg)?;
    let (sig, num_symbols): (ReferenceSignal, usize) = match kind {
        Kind::Srs => {
            let comb_size = cfg.take_or("comb_size", 2usize)?;
            let bw = cfg.take_or("bandwidth_hz", SrsConfig::DEFAULT_BANDWIDTH_HZ)?;
            let mut srs = SrsConfig::centered(&num, bw, comb_size);
            srs.num_subcarriers = cfg.take_or("num_subcarriers", srs.num_subcarriers)?;
            srs.start_re = cfg.take_or("start_re", srs.start_re)?;
            srs.zc_root = cfg.take_or("zc_root", srs.zc_root)?;
            srs.cyclic_shift = cfg.take_or("cyclic_shift", srs.cyclic_shift)?;
            srs.symbol = cfg.take_or("symbol", srs.symbol)?;
            cfg.finish()?;
            (generate_srs(&srs, &num)?, srs.symbol + 1)
        }
        Kind::Prs => {
            let num_symbols = cfg.take_or("num_symbols", 2usize)?;
            let comb_size = cfg.take_or("comb_size", 2usize)?;
            let gold_seed = cfg.take_or("gold_seed", 0u32)?;
            let mut prs = PrsConfig::full_band(&num, num_symbols, comb_size, gold_seed);
            prs.num_prb = cfg.take_or("num_prb", prs.num_prb)?;
            prs.re_offset = cfg.take_or("re_offset", prs.re_offset)?;
            prs.start_re = cfg.take_or("start_re", prs.start_re)?;
            prs.first_symbol = cfg.take_or("first_symbol", prs.first_symbol)?;
            cfg.finish()?;
            (generate_prs(&prs, &num)?, prs.first_symbol + prs.num_symbols)
        }
        Kind::Prach => {
            let format: PrachFormat = cfg.take_or("format", PrachFormat::F0)?;
            let root = cfg.take_or("zc_root", 1u32)?;
            let shift = cfg.take_or("cyclic_shift", 0u32)?;
            let mut prach = PrachConfig::centered(&num, format, root, shift);
            prach.start_re = cfg.take_or("start_re", prach.start_re)?;
            cfg.finish()?;
            (generate_prach(&prach, &num)?, 1)
        }
    };

    let mut grid = ResourceGrid::new(&num, num_symbols);
    grid.map_signal(&sig, dev.amp)?;
    let time = Ofdm::new(&num)?.modulate(&grid)?;

    let txdataf = with_suffix(output, ".txdataF");
    let iq = with_suffix(output, ".iq");
    let map = with_suffix(output, "_re_map.csv");
    std::fs::write(&txdataf, serialize_txdataf(&grid))?;
    std::fs::write(&iq, time.to_le_bytes())?;
    let mut csv = format!("# nrpos generate {kind} seed={seed}\nsymbol,subcarrier,i,q\n");
    for re in &sig.re_indices {
        let v = grid.get(*re);
        let _ = writeln!(csv, "{},{},{},{}", re.symbol, re.subcarrier, v.i, v.q);
    }
    std::fs::write(&map, csv)?;

    let mut out = format!("# nrpos generate {kind} seed={seed}\n");
    let _ = writeln!(out, "kind={kind}");
    let _ = writeln!(out, "device={}", dev.name);
    let _ = writeln!(out, "amplitude={}", dev.amp.value());
    let _ = writeln!(out, "sequence_length={}", sig.symbols.len());
    let _ = writeln!(out, "mapped_res={}", sig.re_indices.len());
    let _ = writeln!(out, "num_symbols={num_symbols}");
    let _ = writeln!(out, "fft_size={}", num.fft_size);
    let _ = writeln!(out, "time_samples={}", time.len());
    let _ = writeln!(out, "txdataf={}", txdataf.display());
    let _ = writeln!(out, "iq={}", iq.display());
    let _ = writeln!(out, "re_map={}", map.display());
    Ok(out)
}
