//! Spectral flow by partitioned counting, and eigenvalue traces along a parameter.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SpectralCount, SpectralError};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Initial number of uniform cells.
    pub cells: usize,
    /// Cells shorter than this fraction of the interval are not split further.
    pub min_cell: f64,
    /// Number of halvings tried for the margin `a`.
    pub margin_halvings: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { cells: 16, min_cell: 1e-9, margin_halvings: 24 }
    }
}

/// One partition cell `[s0, s1]` with its margin and contribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCell {
    pub s0: f64,
    pub s1: f64,
    pub margin: f64,
    pub contribution: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub value: i64,
    pub cells: Vec<FlowCell>,
}

struct Counts {
    lower: usize,
    zero: usize,
    upper: usize,
}

fn counts<T: SpectralCount>(op: &T, a: f64) -> Counts {
    Counts { lower: op.count_below(-a), zero: op.count_below(-op.kernel_tol()), upper: op.count_below(a) }
}

pub fn spectral_flow<T, F>(family: F, interval: (f64, f64), gap: f64) -> Result<SpectralFlow, SpectralError>
where
    T: SpectralCount + Send,
    F: Fn(f64) -> Result<T, SpectralError> + Sync,
{
    spectral_flow_with(family, interval, gap, &FlowOptions::default())
}

/// `Σ dim E_{[0,a]}(s₁) − dim E_{[0,a]}(s₀)` over cells on which `±a` stay off the spectrum.
///
/// A cell is accepted when the counts below `a` and below `−a` agree at both ends and the
/// midpoint; otherwise smaller margins are tried and then the cell is halved.
pub fn spectral_flow_with<T, F>(
    family: F,
    interval: (f64, f64),
    gap: f64,
    opts: &FlowOptions,
) -> Result<SpectralFlow, SpectralError>
where
    T: SpectralCount + Send,
    F: Fn(f64) -> Result<T, SpectralError> + Sync,
{
    let (s0, s1) = interval;
    let m = opts.cells.max(1);
    let edges: Vec<f64> = (0..=m).map(|k| s0 + (s1 - s0) * k as f64 / m as f64).collect();
    let min_len = opts.min_cell * (s1 - s0).abs();
    let cells: Vec<Vec<FlowCell>> =
        edges.par_windows(2).map(|w| refine(&family, w[0], w[1], gap, min_len, opts)).collect::<Result<_, _>>()?;
    let cells: Vec<FlowCell> = cells.into_iter().flatten().collect();
    Ok(SpectralFlow { value: cells.iter().map(|c| c.contribution).sum(), cells })
}

fn refine<T, F>(
    family: &F,
    s0: f64,
    s1: f64,
    gap: f64,
    min_len: f64,
    opts: &FlowOptions,
) -> Result<Vec<FlowCell>, SpectralError>
where
    T: SpectralCount,
    F: Fn(f64) -> Result<T, SpectralError>,
{
    let mut out = Vec::new();
    let mut stack = vec![(s0, s1)];
    while let Some((a0, a1)) = stack.pop() {
        let mid = 0.5 * (a0 + a1);
        let ops = [family(a0)?, family(mid)?, family(a1)?];
        let tiny = (a1 - a0).abs() <= min_len;
        let mut accepted = None;
        for j in 0..opts.margin_halvings {
            let a = gap * 0.5f64.powi(j as i32);
            let c: Vec<Counts> = ops.iter().map(|op| counts(op, a)).collect();
            let steady = |f: fn(&Counts) -> usize| f(&c[0]) == f(&c[1]) && f(&c[1]) == f(&c[2]);
            let inside = steady(|c| c.upper - c.lower);
            // on a cell too short to resolve, equal jumps of both edge counts are eigenvalues
            // entering from −∞, which carry no flow
            if (inside && steady(|c| c.lower)) || (inside && tiny) {
                let above = |c: &Counts| (c.upper - c.zero) as i64;
                accepted = Some(FlowCell { s0: a0, s1: a1, margin: a, contribution: above(&c[2]) - above(&c[0]) });
                break;
            }
        }
        match accepted {
            Some(cell) => out.push(cell),
            None if tiny => return Err(SpectralError::NoSpectralGap(mid)),
            None => {
                // right half first so cells come off the stack in order
                stack.push((mid, a1));
                stack.push((a0, mid));
            }
        }
    }
    Ok(out)
}

/// Lowest eigenvalues along a parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenTrace {
    pub s_grid: Vec<f64>,
    /// Sorted spectra, lowest first; rows may grow to keep `[−gap, gap]` inside the window.
    pub eigenvalues: Vec<Vec<f64>>,
    /// `pairings[k][i]` is the index at `s_{k+1}` matched with index `i` at `s_k`.
    pub pairings: Vec<Vec<usize>>,
}

/// Tracks at least `m` eigenvalues and every eigenvalue in `[−gap, gap]`.
pub fn eigen_trace<F>(family: F, s_grid: &[f64], m: usize, gap: f64) -> Result<EigenTrace, SpectralError>
where
    F: Fn(f64) -> Result<super::DiscreteOperator, SpectralError> + Sync,
{
    let eigenvalues: Vec<Vec<f64>> = s_grid
        .par_iter()
        .map(|&s| {
            let op = family(s)?;
            let want = m.max(op.count_below(gap));
            Ok(op.lowest_eigenvalues(want))
        })
        .collect::<Result<_, SpectralError>>()?;
    let pairings = eigenvalues.windows(2).map(|w| pair_sorted(&w[0], &w[1])).collect();
    Ok(EigenTrace { s_grid: s_grid.to_vec(), eigenvalues, pairings })
}

/// Order-preserving matching of two sorted lists over their common length.
fn pair_sorted(a: &[f64], b: &[f64]) -> Vec<usize> {
    (0..a.len().min(b.len())).collect()
}

impl EigenTrace {
    pub fn width(&self) -> usize {
        self.eigenvalues.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Columns `s, λ1, …, λm`; short rows leave trailing cells empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SpectralError> {
        let mut w = csv::Writer::from_writer(out);
        let m = self.width();
        let mut header = vec!["s".to_string()];
        header.extend((1..=m).map(|i| format!("lambda{i}")));
        w.write_record(&header).map_err(|e| SpectralError::Csv(e.to_string()))?;
        for (s, row) in self.s_grid.iter().zip(&self.eigenvalues) {
            let mut rec = vec![format!("{s:.12e}")];
            rec.extend((0..m).map(|i| row.get(i).map(|v| format!("{v:.12e}")).unwrap_or_default()));
            w.write_record(&rec).map_err(|e| SpectralError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| SpectralError::Csv(e.to_string()))
    }
}
