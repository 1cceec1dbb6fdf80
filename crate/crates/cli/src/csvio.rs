//! CSV point-cloud emission: one unit vector per row under the header
//! `x0,...,xn`, 17-significant-digit decimals (bit-exact round trips), plus
//! a stereographic companion file with suffix `.chart.csv`.

use std::path::Path;

use anyhow::{bail, Context};

use mobius_core::sphere::{chart, SampledSet, SpherePoint};

use crate::report::write_atomic;

fn format_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes `set` to `path` and its chart projection to `path.chart.csv`
/// (same row count; the chart columns of points at infinity are `inf`).
pub fn emit_plot_data(set: &SampledSet, path: &Path) -> anyhow::Result<()> {
    if set.is_empty() {
        bail!("refusing to write an empty point cloud");
    }
    let dim = set.points[0].xi().len();
    let mut text = String::new();
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    text.push_str(&header.join(","));
    text.push('\n');
    for p in &set.points {
        text.push_str(&format_row(p.xi()));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())?;

    let mut chart_text = String::new();
    let chart_header: Vec<String> = (0..dim - 1).map(|i| format!("x{i}")).collect();
    chart_text.push_str(&chart_header.join(","));
    chart_text.push('\n');
    for p in &set.points {
        match chart(p) {
            Ok(x) => chart_text.push_str(&format_row(&x)),
            Err(_) => {
                let infs: Vec<String> = (0..dim - 1).map(|_| "inf".to_string()).collect();
                chart_text.push_str(&infs.join(","));
            }
        }
        chart_text.push('\n');
    }
    let chart_path = chart_sibling(path);
    write_atomic(&chart_path, chart_text.as_bytes())?;
    Ok(())
}

pub fn chart_sibling(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".chart.csv");
    path.with_file_name(name)
}

/// Reads a point cloud written by [`emit_plot_data`]; bit-exact round trip.
pub fn read_point_cloud(path: &Path, resolution: f64) -> anyhow::Result<SampledSet> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow::anyhow!("empty csv"))?;
    let dim = header.split(',').count();
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("row {} of {}", i + 2, path.display()))?;
        if vals.len() != dim {
            bail!("row {} has {} fields, expected {dim}", i + 2, vals.len());
        }
        points.push(SpherePoint::new(vals)?);
    }
    Ok(SampledSet::new(points, resolution)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = mobius_core::rng::SplitMix64::new(12);
        let pts: Vec<SpherePoint> = (0..50)
            .map(|_| SpherePoint::new(rng.unit_vector(3)).unwrap())
            .collect();
        let set = SampledSet::new(pts, 0.05).unwrap();
        let dir = std::env::temp_dir().join("mobius_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cloud.csv");
        emit_plot_data(&set, &path).unwrap();
        let back = read_point_cloud(&path, 0.05).unwrap();
        assert_eq!(back.len(), set.len());
        for (a, b) in set.points.iter().zip(back.points.iter()) {
            for (x, y) in a.xi().iter().zip(b.xi().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // chart companion exists with equal row count
        let chart_path = chart_sibling(&path);
        let text = std::fs::read_to_string(chart_path).unwrap();
        assert_eq!(text.lines().count(), set.len() + 1);
    }
}
