//! True path rule correction: a bottom-up pass that averages each node's flat
//! score with its "positive" children (or descendants), followed by the
//! top-down capping pass.
//!
//! The bottom-up pass walks levels from the deepest up to level 1, so every
//! child or descendant read is already final. The root is never updated
//! there, and the top-down pass starts from the root's flat score.

use crate::dag::Dag;
use crate::error::{HdeError, Result};
use crate::htd::{check_row, top_down};
use crate::levels::LevelMap;
use crate::thresholds::ThresholdVector;

#[derive(Debug, Clone, PartialEq)]
pub enum PositiveSelection {
    /// `j` is positive iff its bottom-up score is strictly above `t_j`.
    Threshold(ThresholdVector),
    /// `j` is positive for parent `i` iff its bottom-up score is strictly above `i`'s flat score.
    Adaptive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DescendantMode {
    #[default]
    Children,
    /// Every positive descendant contributes with weight 1.
    DescendantsConstant,
    /// Descendant `j` of `i` contributes with weight `(D - d + 1) / D`, where
    /// `d` is the longest distance from `i` to `j` and `D` the largest such
    /// distance below `i`.
    DescendantsLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TprConfig {
    pub selection: PositiveSelection,
    /// `None` is the plain average; `Some(w)` weights the node's own score by `w`.
    pub weight: Option<f64>,
    pub descendant_mode: DescendantMode,
    /// Literal top-down block: compare against and fall back to the flat
    /// score. This throws the bottom-up pass away and yields the HTD result.
    pub literal_topdown: bool,
}

impl TprConfig {
    pub fn thresholds(t: ThresholdVector) -> Self {
        TprConfig {
            selection: PositiveSelection::Threshold(t),
            weight: None,
            descendant_mode: DescendantMode::Children,
            literal_topdown: false,
        }
    }

    pub fn adaptive() -> Self {
        TprConfig {
            selection: PositiveSelection::Adaptive,
            weight: None,
            descendant_mode: DescendantMode::Children,
            literal_topdown: false,
        }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn with_mode(mut self, mode: DescendantMode) -> Self {
        self.descendant_mode = mode;
        self
    }

    pub fn with_literal_topdown(mut self, yes: bool) -> Self {
        self.literal_topdown = yes;
        self
    }

    pub fn validate(&self, dag: &Dag) -> Result<()> {
        if let Some(w) = self.weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(HdeError::WeightRange(w));
            }
        }
        if let PositiveSelection::Threshold(t) = &self.selection {
            if t.len() != dag.len() {
                return Err(HdeError::alignment("thresholds", dag.len(), t.len()));
            }
        }
        Ok(())
    }

    fn is_positive(&self, j: usize, current: &[f64], flat_i: f64) -> bool {
        match &self.selection {
            PositiveSelection::Threshold(t) => current[j] > t.get(j),
            PositiveSelection::Adaptive => current[j] > flat_i,
        }
    }
}

/// Children of `node` that count as positive given the current bottom-up scores.
pub fn positive_children(
    dag: &Dag,
    node: usize,
    current: &[f64],
    flat: &[f64],
    config: &TprConfig,
) -> Vec<usize> {
    dag.children(node)
        .iter()
        .copied()
        .filter(|&j| config.is_positive(j, current, flat[node]))
        .collect()
}

/// Combines a node's flat score with weighted contributions `(score, weight)`.
/// With no contributions the flat score is returned unchanged.
fn combine(flat_i: f64, contributions: impl Iterator<Item = (f64, f64)>, w: Option<f64>) -> f64 {
    let (mut sum, mut mass) = (0.0, 0.0);
    for (v, u) in contributions {
        sum += u * v;
        mass += u;
    }
    if mass == 0.0 {
        return flat_i;
    }
    match w {
        None => (flat_i + sum) / (1.0 + mass),
        Some(w) => w * flat_i + (1.0 - w) / mass * sum,
    }
}

pub(crate) fn bottom_up(dag: &Dag, levels: &[Vec<usize>], flat: &[f64], config: &TprConfig) -> Vec<f64> {
    let mut y = flat.to_vec();
    for level in levels.iter().skip(1).rev() {
        for &i in level {
            let fi = flat[i];
            y[i] = match config.descendant_mode {
                DescendantMode::Children => combine(
                    fi,
                    dag.children(i)
                        .iter()
                        .filter(|&&j| config.is_positive(j, &y, fi))
                        .map(|&j| (y[j], 1.0)),
                    config.weight,
                ),
                DescendantMode::DescendantsConstant => combine(
                    fi,
                    dag.descendant_distances(i)
                        .iter()
                        .filter(|&&(j, _)| config.is_positive(j, &y, fi))
                        .map(|&(j, _)| (y[j], 1.0)),
                    config.weight,
                ),
                DescendantMode::DescendantsLinear => {
                    let desc = dag.descendant_distances(i);
                    let depth = desc.iter().map(|&(_, d)| d).max().unwrap_or(0) as f64;
                    combine(
                        fi,
                        desc.iter()
                            .filter(|&&(j, _)| config.is_positive(j, &y, fi))
                            .map(|&(j, d)| (y[j], (depth - d as f64 + 1.0) / depth)),
                        config.weight,
                    )
                }
            };
        }
    }
    y
}

/// Bottom-up pass only; the result is generally not consistent.
pub fn tpr_bottom_up(dag: &Dag, levels: &LevelMap, flat: &[f64], config: &TprConfig) -> Result<Vec<f64>> {
    check_row(dag, levels, flat)?;
    config.validate(dag)?;
    Ok(bottom_up(dag, levels.levels(), flat, config))
}

/// Full TPR correction for any configuration (weighted, descendant modes included).
pub fn tpr_correct(dag: &Dag, levels: &LevelMap, flat: &[f64], config: &TprConfig) -> Result<Vec<f64>> {
    let up = tpr_bottom_up(dag, levels, flat, config)?;
    if config.literal_topdown {
        Ok(top_down(dag, levels.levels(), flat))
    } else {
        Ok(top_down(dag, levels.levels(), &up))
    }
}

/// Weighted variant; `config.weight` must be set.
pub fn tpr_w_correct(dag: &Dag, levels: &LevelMap, flat: &[f64], config: &TprConfig) -> Result<Vec<f64>> {
    if config.weight.is_none() {
        return Err(HdeError::Parameter("weighted TPR needs a weight".into()));
    }
    tpr_correct(dag, levels, flat, config)
}

/// Descendant variants; `config.descendant_mode` must not be `Children`.
pub fn tpr_desc_correct(dag: &Dag, levels: &LevelMap, flat: &[f64], config: &TprConfig) -> Result<Vec<f64>> {
    if config.descendant_mode == DescendantMode::Children {
        return Err(HdeError::Parameter(
            "descendant TPR needs a descendant mode".into(),
        ));
    }
    tpr_correct(dag, levels, flat, config)
}
