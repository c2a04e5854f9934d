//! Index-ordered map that runs on rayon when the `parallel` feature is on.

use serde::{Deserialize, Serialize};

/// Requested execution strategy. Results never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Serial,
    /// Falls back to [`Execution::Serial`] without the `parallel` feature.
    #[default]
    Parallel,
}

pub(crate) fn map_indices<T, F>(range: std::ops::Range<usize>, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            range.into_par_iter().map(f).collect()
        }
        _ => range.map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        let serial = map_indices(0..1000, Execution::Serial, |i| i * i);
        let parallel = map_indices(0..1000, Execution::Parallel, |i| i * i);
        assert_eq!(serial, parallel);
        assert_eq!(serial[31], 961);
    }
}
