use super::{CascadeError, CascadeOptions, CascadeStats, Rule, StagePredictions, ThresholdTable};

/// One confidence pair of the grid, calibrated and evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub rules: [Rule; 2],
    pub table: ThresholdTable,
    pub stats: CascadeStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    /// Index of the most accurate cell; the first one wins ties.
    pub best: usize,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }

    /// One column per confidence pair, one row per quantity.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, Vec<String>)> = vec![
            ("stage1_rule".into(), Vec::new()),
            ("stage2_rule".into(), Vec::new()),
        ];
        for s in 1..=3 {
            rows.push((format!("stage{s}_pass"), Vec::new()));
            rows.push((format!("stage{s}_correct"), Vec::new()));
        }
        rows.push(("accuracy".into(), Vec::new()));
        for c in &self.cells {
            let mut vals = vec![c.rules[0].to_string(), c.rules[1].to_string()];
            for s in 0..3 {
                vals.push(c.stats.exits[s].to_string());
                vals.push(c.stats.exit_correct[s].to_string());
            }
            vals.push(format!("{:.6}", c.stats.accuracy));
            for (row, v) in rows.iter_mut().zip(vals) {
                row.1.push(v);
            }
        }
        let mut out = String::from("metric");
        for i in 0..self.cells.len() {
            out.push_str(&format!(",pair{i}"));
        }
        out.push('\n');
        for (name, vals) in rows {
            out.push_str(&name);
            for v in vals {
                out.push(',');
                out.push_str(&v);
            }
            out.push('\n');
        }
        out
    }
}

/// Calibrates thresholds on `calibration` for every pair in `grid`,
/// replays them on `evaluation` and picks the most accurate pair.
pub fn confidence_grid_search(
    calibration: &StagePredictions,
    evaluation: &StagePredictions,
    grid: &[[Rule; 2]],
) -> Result<GridResult, CascadeError> {
    if grid.is_empty() {
        return Err(CascadeError::EmptyGrid);
    }
    let (r1, r2) = (calibration.records(1), calibration.records(2));
    let mut cells = Vec::with_capacity(grid.len());
    for rules in grid {
        let table = ThresholdTable::calibrate(&r1, &r2, evaluation.class_count, *rules)?;
        let stats = evaluation.replay(&table, CascadeOptions::default())?;
        cells.push(GridCell {
            rules: *rules,
            table,
            stats,
        });
    }
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.stats.accuracy > cells[best].stats.accuracy {
            best = i;
        }
    }
    Ok(GridResult { cells, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::StageVote;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(n: usize, classes: usize, seed: u64) -> StagePredictions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let mut stage = |skill: f64| -> Vec<StageVote> {
            labels
                .iter()
                .map(|&y| {
                    let right = rng.random_bool(skill);
                    let class = if right { y } else { (y + 1) % classes };
                    let eta = if right { rng.random_range(0.5..1.0) } else { rng.random_range(0.34..0.9) };
                    StageVote { class, eta }
                })
                .collect()
        };
        let stages = [stage(0.7), stage(0.85), stage(0.95)];
        StagePredictions {
            labels,
            stages,
            class_count: classes,
        }
    }

    #[test]
    fn single_pair_and_empty_grid() {
        let p = synthetic(200, 3, 1);
        let g = confidence_grid_search(&p, &p, &[[Rule::Incremental(0.8), Rule::Incremental(0.66)]]).unwrap();
        assert_eq!(g.best, 0);
        assert_eq!(g.cells.len(), 1);
        assert!(matches!(confidence_grid_search(&p, &p, &[]), Err(CascadeError::EmptyGrid)));
    }

    #[test]
    fn sentinel_column_equals_last_stage() {
        let (cal, ev) = (synthetic(300, 4, 2), synthetic(300, 4, 3));
        let g = confidence_grid_search(
            &cal,
            &ev,
            &[
                [Rule::Baseline(0.9), Rule::Baseline(0.9)],
                [Rule::Fixed(1.0), Rule::Fixed(1.0)],
                [Rule::Incremental(0.8), Rule::Incremental(0.66)],
            ],
        )
        .unwrap();
        assert_eq!(g.cells[1].stats.accuracy, ev.stage_accuracy(3));
        for c in &g.cells {
            for s in 0..3 {
                assert!(c.stats.exits[s] >= c.stats.exit_correct[s]);
            }
        }
        assert!(g.cells.iter().all(|c| c.stats.accuracy <= g.best_cell().stats.accuracy));
        let csv = g.to_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.lines().all(|l| l.split(',').count() == 4));
    }
}
