use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{FoldAssignment, Role, Rotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport<H> {
    pub rotation: u8,
    pub selected: usize,
    pub candidate: H,
    pub validation_mean: f64,
    pub test: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport<H> {
    pub folds: Vec<FoldReport<H>>,
    /// Test-fold values of every rotation together.
    pub pooled: BTreeMap<String, f64>,
    pub pooled_mean: f64,
}

pub fn mean(values: &BTreeMap<String, f64>) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.values().sum::<f64>() / values.len() as f64
    }
}

/// For each rotation, picks the grid entry with the best validation mean
/// (earliest entry on ties) and keeps its test-fold values.
/// `evaluate(rotation, candidate, role)` returns per-query values of the
/// primary metric for the topics holding `role`; training on the remaining
/// folds is up to the caller.
pub fn crossval_run<H: Clone>(
    folds: &FoldAssignment,
    grid: &[H],
    mut evaluate: impl FnMut(Rotation, &H, Role) -> Result<BTreeMap<String, f64>>,
) -> Result<CrossValReport<H>> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty hyperparameter grid".into()));
    }
    let mut reports = Vec::new();
    let mut pooled = BTreeMap::new();
    for rotation in Rotation::all() {
        for role in [Role::Validation, Role::Test] {
            if folds.topics_with_role(rotation, role).is_empty() {
                return Err(Error::Invalid(format!(
                    "rotation {} has an empty {role:?} fold",
                    rotation.index()
                )));
            }
        }
        let mut best: Option<(usize, f64)> = None;
        if grid.len() == 1 {
            best = Some((0, f64::NAN));
        } else {
            for (i, h) in grid.iter().enumerate() {
                let m = mean(&evaluate(rotation, h, Role::Validation)?);
                if best.is_none_or(|(_, b)| m > b) {
                    best = Some((i, m));
                }
            }
        }
        let (selected, validation_mean) = best.expect("grid is nonempty");
        let test = evaluate(rotation, &grid[selected], Role::Test)?;
        pooled.extend(test.iter().map(|(k, v)| (k.clone(), *v)));
        reports.push(FoldReport {
            rotation: rotation.index(),
            selected,
            candidate: grid[selected].clone(),
            validation_mean,
            test,
        });
    }
    Ok(CrossValReport {
        pooled_mean: mean(&pooled),
        folds: reports,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TopicId;

    fn values(folds: &FoldAssignment, r: Rotation, role: Role, v: f64) -> BTreeMap<String, f64> {
        folds
            .topics_with_role(r, role)
            .into_iter()
            .map(|t| (format!("{t}-0"), v))
            .collect()
    }

    #[test]
    fn single_test_topic_per_rotation() {
        let folds = FoldAssignment::from_topic_ids((0..5).map(TopicId));
        for r in Rotation::all() {
            assert_eq!(folds.topics_with_role(r, Role::Test).len(), 1);
        }
        let rep = crossval_run(&folds, &[()], |r, _, role| Ok(values(&folds, r, role, 0.5))).unwrap();
        assert_eq!(rep.pooled.len(), 5);
        assert_eq!(rep.pooled_mean, 0.5);
    }

    #[test]
    fn dominating_candidate_selected_everywhere() {
        let folds = FoldAssignment::from_topic_ids((0..12).map(TopicId));
        let grid = [0.2, 0.9, 0.5];
        let rep = crossval_run(&folds, &grid, |r, h, role| Ok(values(&folds, r, role, *h))).unwrap();
        assert!(rep.folds.iter().all(|f| f.selected == 1 && f.candidate == 0.9));
        assert_eq!(rep.pooled.len(), 12);
    }

    #[test]
    fn empty_fold_is_an_error() {
        let folds = FoldAssignment::from_topic_ids((0..3).map(TopicId));
        assert!(crossval_run(&folds, &[()], |_, _, _| Ok(BTreeMap::new())).is_err());
    }
}
