use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lr: f64,
    pub batch: usize,
    pub val_score: f64,
}

#[derive(Debug, Clone)]
pub struct GridOutcome<T> {
    pub best: GridCell,
    pub best_value: T,
    /// Every evaluated cell, in evaluation order (ascending LR, then batch).
    pub cells: Vec<GridCell>,
}

/// Trains every `(lr, batch)` cell and keeps the one with the highest
/// validation score. Ties go to the lower LR, then the smaller batch.
pub fn grid_search<T, F>(lrs: &[f64], batches: &[usize], mut train: F) -> Result<GridOutcome<T>>
where
    F: FnMut(f64, usize) -> Result<(f64, T)>,
{
    if lrs.is_empty() || batches.is_empty() {
        return Err(Error::Config("grid search needs at least one LR and one batch size".into()));
    }
    let mut lrs = lrs.to_vec();
    lrs.sort_by(f64::total_cmp);
    let mut batches = batches.to_vec();
    batches.sort_unstable();

    let mut cells = Vec::with_capacity(lrs.len() * batches.len());
    let mut best: Option<(GridCell, T)> = None;
    for &lr in &lrs {
        for &batch in &batches {
            let (val_score, value) = train(lr, batch)?;
            let cell = GridCell { lr, batch, val_score };
            log::debug!("grid cell lr={lr} batch={batch}: {val_score}");
            cells.push(cell);
            if best.as_ref().is_none_or(|(b, _)| val_score > b.val_score) {
                best = Some((cell, value));
            }
        }
    }
    let (best, best_value) = best.expect("grid is nonempty");
    Ok(GridOutcome {
        best,
        best_value,
        cells,
    })
}
