//! CSV persistence of sweep results.

use std::cmp::Ordering;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::PointResult;
use crate::error::{Error, Result};
use crate::exact::region_verdict;
use crate::model::RateTriple;

pub const HEADER: [&str; 16] = [
    "n",
    "beta1",
    "beta2",
    "verdict",
    "cond_prior",
    "cond_a",
    "cond_b",
    "cond_c",
    "comb_case",
    "transience_B",
    "returns",
    "last_return",
    "occupation",
    "alpha_hat",
    "speed_mean",
    "status",
];

/// Table order: by `n`, then `beta1`, then `beta2`.
pub fn key_order(a: &PointResult, b: &PointResult) -> Ordering {
    a.n.cmp(&b.n).then(a.beta1.total_cmp(&b.beta1)).then(a.beta2.total_cmp(&b.beta2))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record(p: &PointResult) -> Vec<String> {
    let v = &p.verdict;
    vec![
        p.n.to_string(),
        p.beta1.to_string(),
        p.beta2.to_string(),
        v.label.tag().to_string(),
        v.cond_prior.to_string(),
        v.cond_a.to_string(),
        v.cond_b.to_string(),
        v.cond_c.to_string(),
        v.comb_case.map(|c| c.tag().to_string()).unwrap_or_default(),
        opt(v.transience_b),
        opt(p.returns),
        opt(p.last_return),
        opt(p.occupation),
        opt(p.alpha_hat),
        opt(p.speed_mean),
        p.status.clone(),
    ]
}

/// Writes the rows in table order.
pub fn write_table<W: Write>(rows: &[PointResult], out: W) -> Result<()> {
    let mut sorted: Vec<&PointResult> = rows.iter().collect();
    sorted.sort_by(|a, b| key_order(a, b));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for p in sorted {
        w.write_record(record(p))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table back. Verdict columns are recomputed from the parameters;
/// wall times are not stored and come back as zero.
pub fn read_table<R: Read>(input: R) -> Result<Vec<PointResult>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(Error::Parse(format!("unexpected sweep table header: {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<Option<f64>> {
            let s = field(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("bad number '{s}' in column {}", HEADER[i])))
            }
        };
        let n: usize = field(0).parse().map_err(|_| Error::Parse(format!("bad n '{}'", field(0))))?;
        let beta1 = num(1)?.ok_or_else(|| Error::Parse("missing beta1".into()))?;
        let beta2 = num(2)?.ok_or_else(|| Error::Parse("missing beta2".into()))?;
        let beta = RateTriple::new(1.0, beta1, beta2)?;
        let verdict = region_verdict(n, &beta);
        if verdict.label.tag() != field(3) {
            return Err(Error::Parse(format!(
                "stored verdict '{}' disagrees with recomputed '{}' at n={n}, beta=({beta})",
                field(3),
                verdict.label
            )));
        }
        rows.push(PointResult {
            n,
            beta1,
            beta2,
            verdict,
            returns: num(10)?,
            last_return: num(11)?,
            occupation: num(12)?,
            alpha_hat: num(13)?,
            speed_mean: num(14)?,
            returns_stopped_fraction: None,
            status: field(15).to_string(),
            wall_time: 0.0,
        });
    }
    Ok(rows)
}

/// Writes `rows` to `path` through a temporary file, so an interrupted run
/// never leaves a truncated table behind.
pub fn save_table(rows: &[PointResult], path: &Path) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let f = fs::File::create(&tmp)?;
        write_table(rows, std::io::BufWriter::new(f))?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_table(path: &Path) -> Result<Vec<PointResult>> {
    read_table(fs::File::open(path)?)
}
