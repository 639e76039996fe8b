//! Method selection shared by the CLI and batch callers.

use std::fmt;
use std::str::FromStr;

use crate::dag::Dag;
use crate::error::{HdeError, Result};
use crate::htd::htd_correct;
use crate::iso::{iso_tpr_correct, IsoOptions, FEASIBILITY_EPS};
use crate::levels::LevelMap;
use crate::tpr::{tpr_correct, DescendantMode, PositiveSelection, TprConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Htd,
    Tpr,
    TprW,
    TprDescConst,
    TprDescLin,
    IsoTpr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Htd,
        Method::Tpr,
        Method::TprW,
        Method::TprDescConst,
        Method::TprDescLin,
        Method::IsoTpr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Htd => "htd",
            Method::Tpr => "tpr",
            Method::TprW => "tpr-w",
            Method::TprDescConst => "tpr-desc-const",
            Method::TprDescLin => "tpr-desc-lin",
            Method::IsoTpr => "iso-tpr",
        }
    }

    /// Tolerance for the edge-wise validity check of this method's output.
    pub fn validity_epsilon(self) -> f64 {
        match self {
            Method::IsoTpr => FEASIBILITY_EPS,
            _ => 0.0,
        }
    }

    pub fn uses_selection(self) -> bool {
        self != Method::Htd
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HdeError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HdeError::Parameter(format!("unknown method {s}")))
    }
}

/// A fully specified correction: method, bottom-up settings and projection options.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub tpr: TprConfig,
    pub iso: IsoOptions,
}

impl MethodConfig {
    pub fn new(
        method: Method,
        selection: PositiveSelection,
        weight: Option<f64>,
        literal_topdown: bool,
        iso: IsoOptions,
    ) -> Result<Self> {
        if method == Method::TprW && weight.is_none() {
            return Err(HdeError::Parameter("method tpr-w needs a weight".into()));
        }
        let descendant_mode = match method {
            Method::TprDescConst => DescendantMode::DescendantsConstant,
            Method::TprDescLin => DescendantMode::DescendantsLinear,
            _ => DescendantMode::Children,
        };
        Ok(MethodConfig {
            method,
            tpr: TprConfig {
                selection,
                weight,
                descendant_mode,
                literal_topdown,
            },
            iso,
        })
    }

    pub fn htd() -> Self {
        MethodConfig {
            method: Method::Htd,
            tpr: TprConfig::adaptive(),
            iso: IsoOptions::default(),
        }
    }

    pub fn validate(&self, dag: &Dag) -> Result<()> {
        if self.method.uses_selection() {
            self.tpr.validate(dag)?;
        }
        Ok(())
    }

    pub fn correct_row(&self, dag: &Dag, levels: &LevelMap, flat: &[f64]) -> Result<Vec<f64>> {
        match self.method {
            Method::Htd => htd_correct(dag, levels, flat),
            Method::IsoTpr => iso_tpr_correct(dag, levels, flat, &self.tpr, &self.iso),
            _ => tpr_correct(dag, levels, flat, &self.tpr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("nope".parse::<Method>(), Err(HdeError::Parameter(_))));
    }

    #[test]
    fn weighted_method_requires_weight() {
        let err = MethodConfig::new(
            Method::TprW,
            PositiveSelection::Adaptive,
            None,
            false,
            IsoOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, HdeError::Parameter(_)));
    }
}
