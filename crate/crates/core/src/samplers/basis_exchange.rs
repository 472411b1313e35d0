//! Lazy Metropolis walk on the basis-exchange graph.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Basis, FeatureMatrix, ProjectionKernel};
use crate::scalar::Scalar;
use crate::trace::StepOutcome;

/// Log squared volume of an index set, up to a constant shared by all sets.
pub trait VolumeOracle {
    fn ground_set(&self) -> usize;
    /// `None` when the volume is zero.
    fn log_volume2(&self, p: &[usize]) -> Result<Option<f64>>;
}

impl<T: Scalar> VolumeOracle for FeatureMatrix<T> {
    fn ground_set(&self) -> usize {
        self.len()
    }

    fn log_volume2(&self, p: &[usize]) -> Result<Option<f64>> {
        Ok(self.log_abs_det(p)?.map(|v| 2.0 * v.to_f64_lossy()))
    }
}

impl<T: Scalar> VolumeOracle for ProjectionKernel<T> {
    fn ground_set(&self) -> usize {
        self.size()
    }

    fn log_volume2(&self, p: &[usize]) -> Result<Option<f64>> {
        let d = self.principal_minor(p)?.to_f64_lossy();
        // det K_P of a dependent set is roundoff-level
        Ok((d > 1e-12).then(|| d.ln()))
    }
}

/// Probability of accepting a move from volume `exp(cur)` to `exp(prop)`:
/// `Vol²(P) / (Vol²(B) + Vol²(P))`.
pub fn exchange_acceptance(cur: f64, prop: Option<f64>) -> f64 {
    match prop {
        None => 0.0,
        Some(p) => 1.0 / (1.0 + (cur - p).exp()),
    }
}

/// Basis-exchange chain with stationary law `∝ Vol²(B)`.
#[derive(Clone, Debug)]
pub struct BasisExchangeChain<V> {
    oracle: V,
    basis: Basis,
    log_vol2: f64,
    laziness: f64,
}

impl<V: VolumeOracle> BasisExchangeChain<V> {
    pub fn new(oracle: V, initial: Basis, laziness: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&laziness) {
            return Err(Error::Argument(format!(
                "laziness {laziness} not in [0, 1)"
            )));
        }
        if initial.is_empty() || initial.len() >= oracle.ground_set() {
            return Err(Error::Argument("initial basis size".into()));
        }
        let log_vol2 = oracle
            .log_volume2(initial.indices())?
            .ok_or_else(|| Error::Argument(format!("initial set {initial} is not a basis")))?;
        Ok(Self {
            oracle,
            basis: initial,
            log_vol2,
            laziness,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        if rng.random::<f64>() < self.laziness {
            return Ok(StepOutcome::Lazy);
        }
        let r = self.basis.len();
        let n = self.oracle.ground_set();
        let s = self.basis.indices()[rng.random_range(0..r)];
        // t is the k-th element of [n] \ B
        let mut k = rng.random_range(0..n - r);
        let mut t = 0;
        for j in 0..n {
            if self.basis.contains(j) {
                continue;
            }
            if k == 0 {
                t = j;
                break;
            }
            k -= 1;
        }
        let proposal = self.basis.exchange(s, t);
        let prop_vol = self.oracle.log_volume2(proposal.indices())?;
        let accept = exchange_acceptance(self.log_vol2, prop_vol);
        if rng.random::<f64>() < accept {
            self.basis = proposal;
            self.log_vol2 = prop_vol.expect("accepted proposals have volume");
            Ok(StepOutcome::Accepted)
        } else {
            Ok(StepOutcome::Rejected)
        }
    }
}
