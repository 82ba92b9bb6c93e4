use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::CurveResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "curve,L_km,G,mu,rounds,sift_yield,ber_sift,dist_yield,ber_dist,eve_delta,eve_ber,secret_fraction,secret_yield,takeoka_bound";

/// Writes the CSV table to any sink. Floats use Rust's shortest round-trip
/// formatting.
pub fn write_csv<W: Write>(results: &[CurveResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for c in results {
        for p in &c.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.label,
                p.length_km,
                p.gain,
                p.mu,
                p.rounds,
                p.sift_yield,
                p.sifted_ber,
                p.distilled_yield,
                p.distilled_ber,
                p.eve_ambiguous,
                p.eve_ber,
                p.secret_fraction,
                p.secret_yield,
                p.takeoka_bound
            )?;
        }
    }
    w.flush()
}

pub fn emit_csv(results: &[CurveResult], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let f = std::fs::File::create(path).map_err(io)?;
    write_csv(results, std::io::BufWriter::new(f)).map_err(io)
}

/// A gnuplot script that plots secret yield and the capacity bound from a
/// CSV written by [`emit_csv`].
pub fn gnuplot_script(csv: &Path, labels: &[String]) -> String {
    let csv = csv.display();
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale y\nset format y '10^{%L}'\n");
    s.push_str("set xlabel 'Span length (km)'\nset ylabel 'Secret bits per pulse'\n");
    s.push_str("set yrange [1e-7:1]\nset key top right\n");
    s.push_str("plot \\\n");
    let mut terms: Vec<String> = labels
        .iter()
        .map(|l| {
            format!(
                "  '{csv}' using (strcol(1) eq '{l}' ? $2 : 1/0):($13 > 0 ? $13 : 1/0) with linespoints title '{l}'"
            )
        })
        .collect();
    if let Some(first) = labels.first() {
        terms.push(format!(
            "  '{csv}' using (strcol(1) eq '{first}' ? $2 : 1/0):14 with lines dashtype 2 title 'capacity bound'"
        ));
    }
    let _ = writeln!(s, "{}", terms.join(", \\\n"));
    s
}
