use crate::error::{PcsError, Result};

/// Sorted set of 0-based row indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HSubset {
    rows: Vec<usize>,
}

impl HSubset {
    pub fn new(mut rows: Vec<usize>) -> Result<Self> {
        rows.sort_unstable();
        let before = rows.len();
        rows.dedup();
        if rows.len() != before {
            return Err(PcsError::Validation("subset contains a repeated index".into()));
        }
        if rows.is_empty() {
            return Err(PcsError::Validation("empty subset".into()));
        }
        Ok(HSubset { rows })
    }

    /// Validates that every index is < n.
    pub fn new_checked(rows: Vec<usize>, n: usize) -> Result<Self> {
        let s = Self::new(rows)?;
        if let Some(&bad) = s.rows.iter().find(|&&i| i >= n) {
            return Err(PcsError::Validation(format!(
                "subset index {} out of range for n = {}",
                bad + 1,
                n
            )));
        }
        Ok(s)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.rows.binary_search(&i).is_ok()
    }

    /// 1-based indices for user-facing output.
    pub fn one_based(&self) -> Vec<usize> {
        self.rows.iter().map(|&i| i + 1).collect()
    }
}
