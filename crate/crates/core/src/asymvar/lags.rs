use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Lags entering the robust estimator: `1..=m` followed by the multiples
/// `k* kappa, ..., m kappa` that are not already present, where `k*` is the
/// smallest integer with `k* kappa > m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LagIndexSet {
    pub m: usize,
    pub kappa: usize,
    pub k_star: usize,
    pub members: Vec<usize>,
}

impl LagIndexSet {
    pub fn new(m: usize, kappa: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("bandwidth m = {m} must be at least 2")));
        }
        if kappa < 2 {
            return Err(invalid(format!("kappa = {kappa} must be at least 2")));
        }
        let k_star = m / kappa + 1;
        let members = (1..=m).chain((k_star..=m).map(|k| k * kappa)).collect();
        Ok(Self {
            m,
            kappa,
            k_star,
            members,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_lag(&self) -> usize {
        self.m * self.kappa
    }

    /// Zero-based position of `lag` in the set.
    pub fn position(&self, lag: usize) -> Option<usize> {
        self.members.binary_search(&lag).ok()
    }
}

pub fn lag_index_set(m: usize, kappa: usize) -> Result<LagIndexSet> {
    LagIndexSet::new(m, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let a = lag_index_set(2, 2).unwrap();
        assert_eq!((a.k_star, a.members.clone()), (2, vec![1, 2, 4]));
        let b = lag_index_set(5, 10).unwrap();
        assert_eq!(b.k_star, 1);
        assert_eq!(b.members, vec![1, 2, 3, 4, 5, 10, 20, 30, 40, 50]);
        let c = lag_index_set(3, 2).unwrap();
        assert_eq!((c.k_star, c.members.clone()), (2, vec![1, 2, 3, 4, 6]));
        assert!(lag_index_set(1, 2).is_err());
        assert!(lag_index_set(3, 1).is_err());
    }

    proptest! {
        #[test]
        fn structure(m in 2usize..40, kappa in 2usize..30) {
            let s = lag_index_set(m, kappa).unwrap();
            prop_assert!(s.k_star * kappa > m);
            prop_assert!((s.k_star - 1) * kappa <= m);
            prop_assert!(s.members.windows(2).all(|w| w[0] < w[1]));
            for k in 1..=m {
                prop_assert!(s.position(k).is_some());
                prop_assert!(s.position(k * kappa).is_some());
            }
        }
    }
}
