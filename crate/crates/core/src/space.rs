use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{CoreError, Result};

/// Ordered, labelled finite state space.
#[derive(Debug, Clone)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for StateSpace {}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Arc<Self>> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(CoreError::InvalidDistribution(
                "state space needs at least one state".into(),
            ));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(CoreError::InvalidDistribution(format!(
                    "duplicate state label {label:?}"
                )));
            }
        }
        Ok(Arc::new(StateSpace { labels, index }))
    }

    /// States labelled `"1"`, ..., `"n"`.
    pub fn numbered(n: usize) -> Arc<Self> {
        Self::new((1..=n).map(|i| i.to_string())).expect("numbered labels are distinct")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Renders a subset of state indices as `{a,b}` using labels.
    pub fn format_subset(&self, members: &[usize]) -> String {
        let names: Vec<&str> = members.iter().map(|&i| self.label(i)).collect();
        format!("{{{}}}", names.join(","))
    }
}

pub(crate) fn ensure_same(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(CoreError::SpaceMismatch(format!(
            "{:?} vs {:?}",
            a.labels(),
            b.labels()
        )))
    }
}
