//! JSON file formats. Every probability is a rational string such as `"1/3"`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mhcoupling::decomposition::{AcceptanceCoupling, Outcome};
use mhcoupling::kernel::{barker_acceptance, mh_acceptance};
use mhcoupling::rational::{format_rational, parse_rational};
use mhcoupling::{AcceptanceMatrix, Dist, FiniteKernel, JointDist, MhProblem, Rational, StateSpace};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Mh,
    Barker,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcceptanceSpec {
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub states: Vec<String>,
    pub proposal: Vec<Vec<String>>,
    #[serde(default)]
    pub target: Option<Vec<String>>,
    pub acceptance: AcceptanceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    /// `matrix[i][j]` is the mass at `(x' = i, y' = j)`.
    #[default]
    #[serde(rename = "x-rows")]
    XRows,
    /// `matrix[j][i]` is the mass at `(x' = i, y' = j)`: rows index `y'`.
    #[serde(rename = "paper")]
    Paper,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingFile {
    pub pair: [String; 2],
    pub matrix: Vec<Vec<String>>,
    #[serde(default)]
    pub orientation: Orientation,
    /// Written for readability; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<BTreeMap<String, String>>,
}

fn parse_rows(rows: &[Vec<String>], what: &str) -> Result<Vec<Vec<Rational>>, CliError> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|s| parse_rational(s).map_err(|e| CliError::Parse(format!("{what}: {e}"))))
                .collect()
        })
        .collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn to_problem(&self) -> Result<MhProblem, CliError> {
        let space = StateSpace::new(self.states.iter().cloned()).map_err(parse_err)?;
        let q = FiniteKernel::new(space.clone(), parse_rows(&self.proposal, "proposal")?).map_err(parse_err)?;
        let target = self
            .target
            .as_ref()
            .map(|t| {
                let w = parse_rows(std::slice::from_ref(t), "target")?.remove(0);
                Dist::new(space.clone(), w).map_err(parse_err)
            })
            .transpose()?;
        let need_target = || target.clone().ok_or_else(|| CliError::Parse("this acceptance rule needs a target".into()));
        let a = match self.acceptance.rule {
            Rule::Mh => mh_acceptance(&need_target()?, &q).map_err(parse_err)?,
            Rule::Barker => barker_acceptance(&need_target()?, &q).map_err(parse_err)?,
            Rule::Explicit => {
                let m = self
                    .acceptance
                    .matrix
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("explicit acceptance needs a matrix".into()))?;
                AcceptanceMatrix::new(space, parse_rows(m, "acceptance")?).map_err(parse_err)?
            }
        };
        MhProblem::new(q, a).map_err(parse_err)
    }
}

fn parse_err(e: mhcoupling::CoreError) -> CliError {
    CliError::Parse(e.to_string())
}

pub fn pair_index(space: &StateSpace, pair: &[String; 2]) -> Result<(usize, usize), CliError> {
    let find = |s: &str| {
        space
            .index_of(s)
            .ok_or_else(|| CliError::Parse(format!("unknown state '{s}'")))
    };
    Ok((find(&pair[0])?, find(&pair[1])?))
}

impl CouplingFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn to_joint(&self, space: &std::sync::Arc<StateSpace>) -> Result<((usize, usize), JointDist), CliError> {
        let pair = pair_index(space, &self.pair)?;
        let rows = parse_rows(&self.matrix, "coupling")?;
        let joint = match self.orientation {
            Orientation::XRows => JointDist::from_rows(space.clone(), rows),
            Orientation::Paper => JointDist::from_y_rows(space.clone(), rows),
        }
        .map_err(parse_err)?;
        Ok((pair, joint))
    }

    pub fn from_joint(joint: &JointDist, pair: (usize, usize)) -> Self {
        let space = joint.space();
        CouplingFile {
            pair: [space.label(pair.0).to_string(), space.label(pair.1).to_string()],
            matrix: joint
                .rows()
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect(),
            orientation: Orientation::XRows,
            entries: Some(entries(joint)),
        }
    }
}

/// `"(x',y')" -> "p/q"` for every cell, labels taken from the state space.
pub fn entries(joint: &JointDist) -> BTreeMap<String, String> {
    let space = joint.space();
    let n = joint.n();
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            out.insert(
                format!("({},{})", space.label(i), space.label(j)),
                format_rational(joint.get(i, j)),
            );
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct JointOutput {
    pub pair: [String; 2],
    pub states: Vec<String>,
    pub entries: BTreeMap<String, String>,
}

impl JointOutput {
    pub fn new(joint: &JointDist, pair: (usize, usize)) -> Self {
        let space = joint.space();
        JointOutput {
            pair: [space.label(pair.0).to_string(), space.label(pair.1).to_string()],
            states: space.labels().to_vec(),
            entries: entries(joint),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AcceptanceOutput {
    pub pair: [String; 2],
    /// Outcome code (`"11"`, `"10"`, `"01"`, `"00"`) to per-cell probability.
    pub tables: BTreeMap<String, BTreeMap<String, String>>,
    /// Cells outside the proposal support, filled with `(1, 0, 0, 0)`.
    pub off_support: Vec<String>,
}

impl AcceptanceOutput {
    pub fn new(b: &AcceptanceCoupling) -> Self {
        let space = b.space();
        let pair = b.pair();
        let n = b.n();
        let tables = Outcome::ALL
            .iter()
            .map(|&o| (o.code().to_string(), entries(&b.table(o))))
            .collect();
        let off_support = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| b.is_off_support(i, j))
            .map(|(i, j)| format!("({},{})", space.label(i), space.label(j)))
            .collect();
        AcceptanceOutput {
            pair: [space.label(pair.0).to_string(), space.label(pair.1).to_string()],
            tables,
            off_support,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(orientation: &str) -> CouplingFile {
        serde_json::from_str(&format!(
            r#"{{"pair": ["1", "2"], "orientation": "{orientation}", "matrix": [["0", "1/4"], ["1/2", "1/4"]]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn paper_orientation_transposes() {
        let space = StateSpace::numbered(2);
        let (pair, rows) = file("x-rows").to_joint(&space).unwrap();
        let (_, paper) = file("paper").to_joint(&space).unwrap();
        assert_eq!(pair, (0, 1));
        assert_eq!(format_rational(rows.get(0, 1)), "1/4");
        assert_eq!(format_rational(paper.get(1, 0)), "1/4");
        assert_eq!(format_rational(paper.get(0, 1)), "1/2");
    }

    #[test]
    fn written_couplings_load_back_exactly() {
        let space = StateSpace::numbered(2);
        let (pair, joint) = file("paper").to_joint(&space).unwrap();
        let text = serde_json::to_string(&CouplingFile::from_joint(&joint, pair)).unwrap();
        let back: CouplingFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_joint(&space).unwrap(), (pair, joint));
    }
}
