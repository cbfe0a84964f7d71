use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::output::{mean, sd, write_atomic};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub mechanism: String,
    pub seeds: usize,
    pub mean_welfare: f64,
    pub sd_welfare: f64,
    pub rank: usize,
    /// Whether the stored aggregate matches a recomputation from the seed rows.
    pub consistent: bool,
}

/// Reads `summary.csv` in `dir`, recomputes the aggregates from the per-seed
/// rows and writes `report.csv` (`mechanism,seeds,mean_welfare,sd_welfare,rank,consistent`),
/// ranked by mean welfare.
pub fn report(dir: &Path) -> Result<Vec<ReportRow>> {
    let path = dir.join("summary.csv");
    let mut reader =
        csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut seeds: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut stored: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let (Some(name), Some(seed), Some(w)) = (rec.get(0), rec.get(1), rec.get(2)) else {
            bail!("malformed row in {}", path.display());
        };
        let w: f64 = w.parse().with_context(|| format!("welfare {w:?}"))?;
        if seed == "aggregate" {
            let s: f64 = rec.get(3).unwrap_or("").parse().with_context(|| "aggregate sd")?;
            stored.insert(name.to_string(), (w, s));
        } else {
            seeds.entry(name.to_string()).or_default().push(w);
        }
    }
    let mut rows: Vec<ReportRow> = seeds
        .into_iter()
        .map(|(mechanism, v)| {
            let (m, s) = (mean(&v), sd(&v));
            let consistent = stored
                .get(&mechanism)
                .is_some_and(|(sm, ss)| (sm - m).abs() <= 1e-12 && (ss - s).abs() <= 1e-12);
            ReportRow { mechanism, seeds: v.len(), mean_welfare: m, sd_welfare: s, rank: 0, consistent }
        })
        .collect();
    rows.sort_by(|a, b| b.mean_welfare.total_cmp(&a.mean_welfare));
    for (k, r) in rows.iter_mut().enumerate() {
        r.rank = k + 1;
    }
    write_atomic(&dir.join("report.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["mechanism", "seeds", "mean_welfare", "sd_welfare", "rank", "consistent"])?;
        for r in &rows {
            w.write_record([
                r.mechanism.clone(),
                r.seeds.to_string(),
                r.mean_welfare.to_string(),
                r.sd_welfare.to_string(),
                r.rank.to_string(),
                r.consistent.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(rows)
}
