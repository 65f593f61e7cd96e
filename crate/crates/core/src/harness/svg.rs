//! Minimal SVG rendering of sweep results.

use std::fmt::Write;

use crate::harness::sweep::{CellVerdict, SweepMode, SweepResult};

const CELL: f64 = 12.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_BOTTOM: f64 = 50.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_RIGHT: f64 = 20.0;

/// Convergence speed on a common scale: larger is faster.
fn speed(mode: SweepMode, rate: f64) -> Option<f64> {
    if !rate.is_finite() && rate != f64::NEG_INFINITY {
        return None;
    }
    match mode {
        SweepMode::ContinuousSpectral | SweepMode::ContinuousSimulated => Some(-rate),
        _ if rate <= 0.0 => Some(f64::INFINITY),
        _ => Some(-rate.ln()),
    }
}

/// Cells as rectangles (x = axis value, y = h increasing upwards): black for
/// divergence, a grayscale ramp for converged cells where lighter means faster.
pub fn render_heatmap(result: &SweepResult) -> String {
    let nx = result.axis_values.len();
    let ny = result.h_values.len();
    let width = MARGIN_LEFT + CELL * nx as f64 + MARGIN_RIGHT;
    let height = MARGIN_TOP + CELL * ny as f64 + MARGIN_BOTTOM;

    let speeds: Vec<Option<f64>> = result
        .cells
        .iter()
        .map(|c| if c.verdict == CellVerdict::Converged { speed(result.mode, c.rate) } else { None })
        .collect();
    let max_speed = speeds.iter().flatten().filter(|s| s.is_finite()).fold(0.0f64, |a, b| a.max(*b));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (idx, cell) in result.cells.iter().enumerate() {
        let (i, j) = (idx / ny, idx % ny);
        let x = MARGIN_LEFT + CELL * i as f64;
        let y = MARGIN_TOP + CELL * (ny - 1 - j) as f64;
        let fill = match cell.verdict {
            CellVerdict::Diverged => "#000000".to_string(),
            CellVerdict::Undecided => "#808080".to_string(),
            CellVerdict::Failed => "#ff0000".to_string(),
            CellVerdict::Converged => {
                let s = speeds[idx].unwrap_or(0.0);
                let t = if max_speed > 0.0 { (s / max_speed).min(1.0) } else { 1.0 };
                let level = (60.0 + 195.0 * t).round() as u8;
                format!("#{level:02x}{level:02x}{level:02x}")
            }
        };
        let _ = writeln!(out, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#);
    }
    let axis_y = MARGIN_TOP + CELL * ny as f64;
    let mid_x = MARGIN_LEFT + CELL * nx as f64 / 2.0;
    let label = result.axis.label();
    let _ = writeln!(out, r#"<text x="{mid_x}" y="{}" font-size="14" text-anchor="middle">{label}</text>"#, axis_y + 40.0);
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">h</text>"#,
        MARGIN_TOP + CELL * ny as f64 / 2.0,
        MARGIN_TOP + CELL * ny as f64 / 2.0
    );
    let ticks = |n: usize| if n <= 1 { vec![0] } else { vec![0, n / 2, n - 1] };
    for i in ticks(nx) {
        let x = MARGIN_LEFT + CELL * (i as f64 + 0.5);
        let _ = writeln!(out, r#"<text x="{x}" y="{}" font-size="10" text-anchor="middle">{:.3}</text>"#, axis_y + 15.0, result.axis_values[i]);
    }
    for j in ticks(ny) {
        let y = MARGIN_TOP + CELL * (ny - j) as f64 - CELL / 2.0 + 3.0;
        let _ = writeln!(out, r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{:.4}</text>"#, MARGIN_LEFT - 4.0, result.h_values[j]);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::{Cell, SweepAxis};

    #[test]
    fn diverged_cells_are_black() {
        let cells = vec![
            Cell { axis_value: 0.0, h: 0.1, rate: 0.5, verdict: CellVerdict::Converged, note: None },
            Cell { axis_value: 0.0, h: 0.2, rate: 1.0, verdict: CellVerdict::Diverged, note: None },
        ];
        let r = SweepResult {
            axis: SweepAxis::Beta,
            axis_values: vec![0.0],
            h_values: vec![0.1, 0.2],
            mode: SweepMode::DiscreteSimulated,
            cells,
        };
        let svg = render_heatmap(&r);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("#000000").count(), 1);
        assert!(svg.contains("#ffffff"));
        assert!(svg.contains(">beta<"));
    }
}
