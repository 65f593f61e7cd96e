use crate::game::JointPoint;
use crate::report::{fmt_f64, CsvTable};

/// What the `times` column of a trajectory counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeAxis {
    /// Iteration index of a discrete algorithm.
    Step,
    /// Continuous time of an ODE solution.
    Time,
}

/// Per-sample diagnostics recorded alongside each point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostic {
    /// `‖∇ₓf‖₁ + ‖∇ᵧf‖₁` (plain ℓ1).
    pub grad_l1_sum: f64,
    pub dist_to_ref: Option<f64>,
}

/// Time-indexed sequence of joint points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub axis: TimeAxis,
    pub times: Vec<f64>,
    pub points: Vec<JointPoint>,
    pub diagnostics: Vec<Diagnostic>,
    /// Set when the run produced a non-finite state and was truncated.
    pub diverged: bool,
}

impl Trajectory {
    pub fn new(axis: TimeAxis) -> Self {
        Trajectory { axis, times: Vec::new(), points: Vec::new(), diagnostics: Vec::new(), diverged: false }
    }

    pub fn push(&mut self, time: f64, point: JointPoint, diagnostic: Diagnostic) {
        debug_assert!(self.times.last().is_none_or(|&t| time > t), "times must increase");
        self.times.push(time);
        self.points.push(point);
        self.diagnostics.push(diagnostic);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&JointPoint> {
        self.points.last()
    }

    /// Distances to `reference` for every sample.
    pub fn distances_to(&self, reference: &JointPoint) -> Vec<f64> {
        self.points.iter().map(|p| p.distance(reference)).collect()
    }

    /// CSV with columns `step|time, x_0.., y_0.., grad_l1_sum, dist_to_ref`.
    pub fn to_csv(&self) -> String {
        let (d1, d2) = self.points.first().map_or((0, 0), |p| p.dims());
        let mut header = vec![match self.axis {
            TimeAxis::Step => "step".to_string(),
            TimeAxis::Time => "time".to_string(),
        }];
        header.extend((0..d1).map(|i| format!("x_{i}")));
        header.extend((0..d2).map(|i| format!("y_{i}")));
        header.push("grad_l1_sum".into());
        header.push("dist_to_ref".into());
        let mut table = CsvTable::new(&header);
        for ((t, p), d) in self.times.iter().zip(&self.points).zip(&self.diagnostics) {
            let mut cells = Vec::with_capacity(d1 + d2 + 3);
            cells.push(match self.axis {
                TimeAxis::Step => format!("{}", *t as u64),
                TimeAxis::Time => fmt_f64(*t),
            });
            cells.extend(p.x.iter().chain(p.y.iter()).map(|v| fmt_f64(*v)));
            cells.push(fmt_f64(d.grad_l1_sum));
            cells.push(d.dist_to_ref.map(fmt_f64).unwrap_or_default());
            table.push_cells(cells);
        }
        table.into_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema() {
        let mut t = Trajectory::new(TimeAxis::Step);
        let p = JointPoint::from_slices(&[0.5], &[0.25, 1.0]).unwrap();
        t.push(0.0, p.clone(), Diagnostic { grad_l1_sum: 1.5, dist_to_ref: Some(2.0) });
        t.push(1.0, p, Diagnostic { grad_l1_sum: 1.0, dist_to_ref: None });
        assert_eq!(
            t.to_csv(),
            "step,x_0,y_0,y_1,grad_l1_sum,dist_to_ref\n0,0.5,0.25,1.0,1.5,2.0\n1,0.5,0.25,1.0,1.0,\n"
        );
    }
}
