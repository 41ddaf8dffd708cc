use serde::Serialize;

use crate::error::{Error, Result};

/// Dyadic split of a budget `N`: `N_i = N - ceil(N / 2^i)` for `0 <= i <= l`,
/// `N_{l+1} = N`, where `l` is the first `i` with `N / 2^i <= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhasePlan {
    pub n: usize,
    pub l: usize,
    /// `[N_0, ..., N_{l+1}]`.
    pub boundaries: Vec<usize>,
}

pub fn phase_plan(n: usize) -> Result<PhasePlan> {
    if n == 0 {
        return Err(Error::invalid("N", "budget must be at least 1"));
    }
    // smallest l with N <= 2^l
    let l = n.next_power_of_two().trailing_zeros() as usize;
    let mut boundaries: Vec<usize> = (0..=l).map(|i| n - n.div_ceil(1 << i)).collect();
    boundaries.push(n);
    Ok(PhasePlan { n, l, boundaries })
}

impl PhasePlan {
    /// Number of phases, `l + 1`.
    pub fn phases(&self) -> usize {
        self.l + 1
    }

    /// Iterations in phase `i`.
    pub fn phase_len(&self, i: usize) -> usize {
        self.boundaries[i + 1] - self.boundaries[i]
    }

    /// The phase `i` with `N_i < k <= N_{i+1}`, for 1-based iteration `k`.
    pub fn phase_of(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.n {
            return Err(Error::OutOfRange { k, n: self.n });
        }
        Ok(self.boundaries.partition_point(|b| *b < k) - 1)
    }
}

pub fn phase_of(plan: &PhasePlan, k: usize) -> Result<usize> {
    plan.phase_of(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let p = phase_plan(16).unwrap();
        assert_eq!(
            (p.l, p.boundaries.as_slice()),
            (4, &[0, 8, 12, 14, 15, 16][..])
        );
        let p = phase_plan(1).unwrap();
        assert_eq!((p.l, p.boundaries.as_slice()), (0, &[0, 1][..]));
        let p = phase_plan(4).unwrap();
        assert_eq!((p.l, p.boundaries.as_slice()), (2, &[0, 2, 3, 4][..]));
        assert!(phase_plan(0).is_err());
    }

    #[test]
    fn phase_of_examples() {
        let p = phase_plan(16).unwrap();
        assert_eq!(p.phase_of(1).unwrap(), 0);
        assert_eq!(p.phase_of(9).unwrap(), 1);
        assert_eq!(p.phase_of(16).unwrap(), 4);
        assert!(matches!(
            p.phase_of(0),
            Err(Error::OutOfRange { k: 0, n: 16 })
        ));
        assert!(p.phase_of(17).is_err());
    }

    #[test]
    fn l_is_the_first_dyadic_level_at_or_below_one() {
        for n in 1..=5000usize {
            let p = phase_plan(n).unwrap();
            let ratio = |i: usize| n as f64 / 2f64.powi(i as i32);
            assert!(ratio(p.l) <= 1.0, "N={n}");
            assert!(p.l == 0 || ratio(p.l - 1) > 1.0, "N={n}");
        }
    }

    #[test]
    fn phase_of_inverts_the_partition() {
        for n in 1..=1024usize {
            let p = phase_plan(n).unwrap();
            let mut counts = vec![0; p.phases()];
            for k in 1..=n {
                let i = p.phase_of(k).unwrap();
                assert!(p.boundaries[i] < k && k <= p.boundaries[i + 1]);
                counts[i] += 1;
            }
            for (i, c) in counts.iter().enumerate() {
                assert_eq!(*c, p.phase_len(i));
            }
        }
    }
}
