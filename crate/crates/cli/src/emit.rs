//! File outputs: the JSON document, the trajectory table, and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// One period of a trajectory on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub dim: usize,
    pub times: Vec<f64>,
    /// `states[i * dim + d]`.
    pub states: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl TrajectoryTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.dim).map(|d| format!("x_{d}")));
        h.extend((1..=self.dim).map(|d| format!("v_{d}")));
        h
    }

    /// `max_i |x(t_i)|`.
    pub fn amplitude(&self) -> f64 {
        self.states
            .chunks(self.dim)
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Writes the table as CSV. Rust's float `Display` is the shortest string
/// that parses back to the same value.
pub fn write_trajectory(path: &Path, table: &TrajectoryTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(table.header())?;
    let n = table.dim;
    for (i, t) in table.times.iter().enumerate() {
        let mut row = Vec::with_capacity(1 + 2 * n);
        row.push(t.to_string());
        row.extend(table.states[i * n..(i + 1) * n].iter().map(f64::to_string));
        row.extend(table.velocities[i * n..(i + 1) * n].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Paths of the three output files for `stem` in `dir`.
pub fn output_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.svg")))
}

const W: f64 = 480.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

fn bounds(v: &[f64]) -> Option<(f64, f64)> {
    let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return None;
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let d = hi.abs().max(1.0) * 0.5;
        return Some((lo - d, hi + d));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

fn frame(title: &str, xlabel: &str, ylabel: &str, xr: (f64, f64), yr: (f64, f64)) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<rect x=\"{p}\" y=\"{p}\" width=\"{iw}\" height=\"{ih}\" fill=\"none\" stroke=\"black\"/>\n",
            "<text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
            "<text x=\"{cx}\" y=\"{by}\" text-anchor=\"middle\">{xl}</text>\n",
            "<text x=\"16\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">{yl}</text>\n",
            "<text x=\"{p}\" y=\"{ty}\" text-anchor=\"start\">{x0:.4}</text>\n",
            "<text x=\"{rx}\" y=\"{ty}\" text-anchor=\"end\">{x1:.4}</text>\n",
            "<text x=\"{lx}\" y=\"{ry}\" text-anchor=\"end\">{y0:.4}</text>\n",
            "<text x=\"{lx}\" y=\"{p4}\" text-anchor=\"end\">{y1:.4}</text>\n",
        ),
        w = W,
        h = H,
        p = PAD,
        iw = W - 2.0 * PAD,
        ih = H - 2.0 * PAD,
        cx = W / 2.0,
        cy = H / 2.0,
        by = H - 12.0,
        ty = H - PAD + 16.0,
        rx = W - PAD,
        lx = PAD - 4.0,
        ry = H - PAD,
        p4 = PAD + 4.0,
        title = title,
        xl = xlabel,
        yl = ylabel,
        x0 = xr.0,
        x1 = xr.1,
        y0 = yr.0,
        y1 = yr.1,
    );
    s
}

fn project(v: f64, r: (f64, f64), lo: f64, hi: f64) -> f64 {
    lo + (v - r.0) / (r.1 - r.0) * (hi - lo)
}

fn points(xs: &[f64], ys: &[f64], xr: (f64, f64), yr: (f64, f64)) -> Vec<(f64, f64)> {
    xs.iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (project(x, xr, PAD, W - PAD), project(y, yr, H - PAD, PAD)))
        .collect()
}

/// Closed curve through `(xs, ys)`; `None` when there is nothing to draw.
pub fn orbit_svg(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], ys: &[f64]) -> Option<String> {
    let (xr, yr) = (bounds(xs)?, bounds(ys)?);
    let mut s = frame(title, xlabel, ylabel, xr, yr);
    let pts = points(xs, ys, xr, yr);
    s.push_str("<polygon fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"");
    for (x, y) in &pts {
        let _ = write!(s, "{x:.2},{y:.2} ");
    }
    s.push_str("\"/>\n</svg>\n");
    Some(s)
}

/// Log–log plot of `c_T` against `T` with markers.
pub fn sweep_svg(periods: &[f64], values: &[Option<f64>]) -> Option<String> {
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (t, c) in periods.iter().zip(values) {
        if let Some(c) = c.filter(|c| *c > 0.0 && c.is_finite()) {
            lx.push(t.log10());
            ly.push(c.log10());
        }
    }
    let (xr, yr) = (bounds(&lx)?, bounds(&ly)?);
    let mut s = frame("action vs period", "log10 T", "log10 c_T", xr, yr);
    let pts = points(&lx, &ly, xr, yr);
    s.push_str("<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"");
    for (x, y) in &pts {
        let _ = write!(s, "{x:.2},{y:.2} ");
    }
    s.push_str("\"/>\n");
    for (x, y) in &pts {
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#c0392b\"/>");
    }
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_plot_is_well_formed() {
        let n = 32;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).cos()).collect();
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).sin()).collect();
        let s = orbit_svg("orbit", "x", "v", &xs, &ys).unwrap();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("<polygon"));
    }

    #[test]
    fn empty_sweep_draws_nothing() {
        assert!(sweep_svg(&[1.0], &[None]).is_none());
    }

    #[test]
    fn header_lists_states_then_velocities() {
        let t = TrajectoryTable { dim: 2, times: vec![], states: vec![], velocities: vec![] };
        assert_eq!(t.header(), ["t", "x_1", "x_2", "v_1", "v_2"]);
    }
}
