//! Hit-and-run chains on the zonotope with tile extraction.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{Basis, FeatureMatrix};
use crate::scalar::Scalar;
use crate::trace::StepOutcome;
use crate::zonotope::{Tile, TileExtractor, TilingObjective, Zonotope};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZonotopeTarget {
    /// Uniform on `Z(A)`; bases come out `∝ |det A_{:B}|`.
    Uniform,
    /// Density `∝ |det A_{:B_x}|`; bases come out `∝ det² A_{:B}`.
    Volume,
}

/// Point `x`, its tile, and what is needed to move it.
#[derive(Clone, Debug)]
pub struct HitAndRunChain<T> {
    zonotope: Zonotope<T>,
    extractor: TileExtractor<T>,
    acceptance: FeatureMatrix<T>,
    target: ZonotopeTarget,
    x: Vec<T>,
    tile: Tile<T>,
    log_vol: f64,
    check_coherence: bool,
}

impl<T: Scalar> HitAndRunChain<T> {
    /// `zonotope` is the matrix the chain moves in; `acceptance` supplies
    /// the volumes in the Metropolis ratio (ignored for the uniform target).
    pub fn new(
        zonotope: FeatureMatrix<T>,
        acceptance: FeatureMatrix<T>,
        objective: TilingObjective<T>,
        target: ZonotopeTarget,
        x0: Vec<T>,
    ) -> Result<Self> {
        if acceptance.rank() != zonotope.rank() || acceptance.len() != zonotope.len() {
            return Err(Error::Dimension(
                "acceptance and zonotope matrices differ in shape".into(),
            ));
        }
        let mut extractor = TileExtractor::new(zonotope.clone(), objective)?;
        let tile = extractor.extract(&x0)?;
        let log_vol = log_volume(&acceptance, &tile.basis)?;
        Ok(Self {
            zonotope: Zonotope::new(zonotope),
            extractor,
            acceptance,
            target,
            x: x0,
            tile,
            log_vol,
            check_coherence: false,
        })
    }

    /// Starts from `A u`, `u` uniform on the hypercube.
    pub fn from_random_start<R: Rng + ?Sized>(
        zonotope: FeatureMatrix<T>,
        acceptance: FeatureMatrix<T>,
        objective: TilingObjective<T>,
        target: ZonotopeTarget,
        rng: &mut R,
    ) -> Result<Self> {
        let x0 = Zonotope::new(zonotope.clone()).hypercube_image(rng);
        Self::new(zonotope, acceptance, objective, target, x0)
    }

    /// Re-extract the basis of every accepted point from a cold LP and fail
    /// on disagreement.
    pub fn set_coherence_checks(&mut self, on: bool) {
        self.check_coherence = on;
    }

    pub fn basis(&self) -> &Basis {
        &self.tile.basis
    }

    pub fn tile(&self) -> &Tile<T> {
        &self.tile
    }

    pub fn point(&self) -> &[T] {
        &self.x
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        let d = random_direction::<T, R>(self.x.len(), rng);
        let chord = self
            .zonotope
            .chord(&self.x, &d, Some(&self.tile.lp_status))
            .map_err(|e| match e {
                Error::NotInZonotope => Error::Chord("chain state left the zonotope".into()),
                other => other,
            })?;
        let u = rng.random::<f64>();
        let alpha = chord.alpha_min + chord.length() * T::from_f64_lossy(u);
        let proposal = chord.point_at(alpha);
        let tile = self.extractor.extract(&proposal)?;
        let accept = match self.target {
            ZonotopeTarget::Uniform => true,
            ZonotopeTarget::Volume => {
                let u = rng.random::<f64>();
                let prop_log_vol = if tile.basis == self.tile.basis {
                    self.log_vol
                } else {
                    log_volume(&self.acceptance, &tile.basis)?
                };
                u < (prop_log_vol - self.log_vol).exp().min(1.0)
            }
        };
        if !accept {
            return Ok(StepOutcome::Rejected);
        }
        if tile.basis != self.tile.basis {
            self.log_vol = log_volume(&self.acceptance, &tile.basis)?;
        }
        if self.check_coherence {
            let mut cold = TileExtractor::new(
                self.zonotope.features().clone(),
                self.extractor.objective().clone(),
            )?;
            let again = cold.extract(&proposal)?;
            if again.basis != tile.basis {
                return Err(Error::Numerical(format!(
                    "incoherent chain state: warm extraction {} vs cold {}",
                    tile.basis, again.basis
                )));
            }
        }
        self.x = proposal;
        self.tile = tile;
        Ok(StepOutcome::Accepted)
    }
}

fn log_volume<T: Scalar>(a: &FeatureMatrix<T>, b: &Basis) -> Result<f64> {
    a.log_abs_det(b.indices())?
        .map(|v| v.to_f64_lossy())
        .ok_or_else(|| Error::Numerical(format!("extracted set {b} is not a basis")))
}

/// Uniform direction on the unit sphere from a normalized Gaussian vector.
pub fn random_direction<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| T::from_f64_lossy(v / norm)).collect();
        }
    }
}
