//! Execution backends for per-rank local work.
//!
//! Ranks only interact through the simulated network, so everything between
//! two collectives is an independent map over ranks. The parallel backend
//! runs that map on the rayon pool; without the `parallel` feature it falls
//! back to the sequential loop. Results are always returned in rank order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Reference backend: ranks are stepped one after another.
    #[default]
    Sequential,
    /// Rank-parallel backend (rayon). Same results, same counters.
    Parallel,
}

impl Backend {
    /// Whether this build can actually run ranks concurrently.
    pub fn is_concurrent(self) -> bool {
        cfg!(feature = "parallel") && self == Backend::Parallel
    }

    pub fn map_mut<T, R, F>(self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Backend::Parallel {
            return items.par_iter_mut().enumerate().map(|(i, t)| f(i, t)).collect();
        }
        items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Backend::Parallel {
            return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
        }
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }

    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Backend::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Sequential => "seq",
            Backend::Parallel => "par",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seq" | "sequential" => Ok(Backend::Sequential),
            "par" | "parallel" => Ok(Backend::Parallel),
            other => Err(format!("unknown backend `{other}` (expected seq|par)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_backends_preserve_order() {
        let mut items: Vec<u64> = (0..1000).collect();
        for b in [Backend::Sequential, Backend::Parallel] {
            let out = b.map_mut(&mut items, |i, x| {
                *x += 1;
                i as u64 * 2
            });
            assert_eq!(out, (0..1000).map(|i| i * 2).collect::<Vec<_>>());
            assert_eq!(b.map_range(10, |i| i), (0..10).collect::<Vec<_>>());
        }
        assert_eq!(items[0], 2);
    }
}
