//! The zonotope `Z(A) = A [0,1]^n`: membership, chords and tile extraction.
//!
//! For a fixed generic objective `c`, the LP
//! `min cᵀy s.t. A y = x, 0 ≤ y ≤ 1` has a unique optimum `y*` for every `x`
//! in `Z(A)`. Its fractional coordinates index a basis `B`, the remaining
//! coordinates are 0/1 and form the offset `ξ`, and
//! `x = A ξ + A_{:B} y*_B`. The parallelotopes `A ξ + A_{:B}[0,1]^r` tile
//! `Z(A)`, one per basis.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Simplex, VarStatus};
use crate::numerics::{dot, numerical_rank, Basis, FeatureMatrix, Lu, Matrix};
use crate::scalar::Scalar;

/// Fixed linear objective defining the tiling.
#[derive(Clone, Debug, PartialEq)]
pub struct TilingObjective<T> {
    c: Vec<T>,
    seed: Option<u64>,
}

impl<T: Scalar> TilingObjective<T> {
    /// Standard Gaussian draw from a ChaCha8 stream seeded with `seed`.
    pub fn gaussian(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..n)
            .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Self {
            c,
            seed: Some(seed),
        }
    }

    pub fn from_vec(c: Vec<T>) -> Self {
        Self { c, seed: None }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.c
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn scale(&self) -> T {
        self.c.iter().fold(T::one(), |m, &v| m.max(v.abs()))
    }
}

/// Segment `{x + α d : α_min ≤ α ≤ α_max}` of a line through `x` inside `Z(A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chord<T> {
    pub base: Vec<T>,
    pub direction: Vec<T>,
    pub alpha_min: T,
    pub alpha_max: T,
}

impl<T: Scalar> Chord<T> {
    pub fn point_at(&self, alpha: T) -> Vec<T> {
        self.base
            .iter()
            .zip(&self.direction)
            .map(|(&x, &d)| x + alpha * d)
            .collect()
    }

    pub fn length(&self) -> T {
        self.alpha_max - self.alpha_min
    }
}

/// A point located in its tile.
#[derive(Clone, Debug, PartialEq)]
pub struct Tile<T> {
    pub basis: Basis,
    /// `ξ ∈ {0,1}^n`, zero on the basis.
    pub offset: Vec<u8>,
    /// Coordinates `y*_B ∈ [0,1]^r` of the point inside the parallelotope.
    pub coords: Vec<T>,
    /// Final simplex status of the tiling LP, reusable as a warm start.
    pub lp_status: Vec<VarStatus>,
}

/// Geometry queries on `Z(A)` for a fixed feature matrix.
#[derive(Clone, Debug)]
pub struct Zonotope<T> {
    a: FeatureMatrix<T>,
    solver: Simplex<T>,
}

impl<T: Scalar> Zonotope<T> {
    pub fn new(a: FeatureMatrix<T>) -> Self {
        Self {
            a,
            solver: Simplex::default(),
        }
    }

    pub fn with_solver(a: FeatureMatrix<T>, solver: Simplex<T>) -> Self {
        Self { a, solver }
    }

    pub fn features(&self) -> &FeatureMatrix<T> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.rank()
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point of dimension {} in a rank-{} zonotope",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Membership test by Phase I on `A y = x, 0 ≤ y ≤ 1`.
    pub fn contains(&self, x: &[T]) -> Result<bool> {
        self.check_point(x)?;
        let lp = LinearProgram::unit_box(
            vec![T::zero(); self.a.len()],
            self.a.matrix().clone(),
            x.to_vec(),
        )?;
        self.solver.feasibility(&lp)
    }

    /// Axis-aligned bounding box `[Σ min(0, A_ij), Σ max(0, A_ij)]` per row.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let m = self.a.matrix();
        (0..self.dim())
            .map(|i| {
                (0..self.a.len()).fold((T::zero(), T::zero()), |(lo, hi), j| {
                    let v = m[(i, j)];
                    (lo + v.min(T::zero()), hi + v.max(T::zero()))
                })
            })
            .unzip()
    }

    /// Endpoints of the chord through `x` along `d`, from two LPs over
    /// `(λ, α)`: `x + α d = A λ, 0 ≤ λ ≤ 1`, minimizing then maximizing `α`.
    ///
    /// `hint` is the tiling-LP status of `x`; with it both LPs start from the
    /// feasible point `λ = y*(x), α = 0`.
    pub fn chord(&self, x: &[T], d: &[T], hint: Option<&[VarStatus]>) -> Result<Chord<T>> {
        self.check_point(x)?;
        self.check_point(d)?;
        let (r, n) = (self.dim(), self.a.len());
        let mut data = self.a.matrix().as_col_major().to_vec();
        data.extend(d.iter().map(|&v| -v));
        let m = Matrix::from_col_major(r, n + 1, data)?;
        let mut lower = vec![T::zero(); n + 1];
        let mut upper = vec![T::one(); n + 1];
        lower[n] = T::neg_infinity();
        upper[n] = T::infinity();
        let mut obj = vec![T::zero(); n + 1];
        obj[n] = T::one();
        let mut lp = LinearProgram::new(obj, m, x.to_vec(), lower, upper)?;

        let chord_hint: Option<Vec<VarStatus>> = hint.map(|h| {
            let mut v = h.to_vec();
            v.push(VarStatus::Free);
            v
        });
        let mut ends = [T::zero(); 2];
        for (k, sign) in [T::one(), -T::one()].into_iter().enumerate() {
            let mut obj = vec![T::zero(); n + 1];
            obj[n] = sign;
            lp.set_objective(obj)?;
            let sol = self.solver.solve_with_hint(&lp, chord_hint.as_deref())?;
            match sol.status {
                LpStatus::Optimal => ends[k] = sol.values[n],
                LpStatus::Infeasible => return Err(Error::NotInZonotope),
                LpStatus::Unbounded => {
                    return Err(Error::Chord("unbounded chord; zero direction?".into()))
                }
            }
        }
        // the line may meet Z(A) away from x; then alpha = 0 is infeasible
        let tol = T::feas_tol();
        if ends[0] > tol || ends[1] < -tol {
            return Err(Error::NotInZonotope);
        }
        Ok(Chord {
            base: x.to_vec(),
            direction: d.to_vec(),
            alpha_min: ends[0].min(T::zero()),
            alpha_max: ends[1].max(T::zero()),
        })
    }

    /// `A u` with `u` uniform on the hypercube. Used to start chains; the
    /// law of this point is not uniform on `Z(A)`.
    pub fn hypercube_image<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let u: Vec<T> = (0..self.a.len())
            .map(|_| T::from_f64_lossy(rng.random::<f64>()))
            .collect();
        self.a.apply(&u).expect("length n")
    }

    /// Monte-Carlo volume by rejection from the bounding box: `(estimate, standard error)`.
    pub fn monte_carlo_volume<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        let (lo, hi) = self.bounding_box();
        let box_vol: f64 = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| (h - l).to_f64_lossy())
            .product();
        let mut hits = 0usize;
        let mut x = vec![T::zero(); self.dim()];
        for _ in 0..samples {
            for (xi, (&l, &h)) in x.iter_mut().zip(lo.iter().zip(&hi)) {
                *xi = l + (h - l) * T::from_f64_lossy(rng.random::<f64>());
            }
            if self.contains(&x)? {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        Ok((
            box_vol * p,
            box_vol * (p * (1.0 - p) / samples as f64).sqrt(),
        ))
    }
}

/// Locates points in the tiling induced by a fixed objective.
///
/// Keeps the previous LP status as a warm start: consecutive points of a
/// chain often share a tile, in which case the LP needs no pivots.
#[derive(Clone, Debug)]
pub struct TileExtractor<T> {
    a: FeatureMatrix<T>,
    objective: TilingObjective<T>,
    solver: Simplex<T>,
    lp: LinearProgram<T>,
    last: Option<Vec<VarStatus>>,
    tie_tol: T,
}

impl<T: Scalar> TileExtractor<T> {
    pub fn new(a: FeatureMatrix<T>, objective: TilingObjective<T>) -> Result<Self> {
        if objective.as_slice().len() != a.len() {
            return Err(Error::Dimension(format!(
                "tiling objective of length {} for {} columns",
                objective.as_slice().len(),
                a.len()
            )));
        }
        let lp = LinearProgram::unit_box(
            objective.as_slice().to_vec(),
            a.matrix().clone(),
            vec![T::zero(); a.rank()],
        )?;
        let tie_tol = T::opt_tol() * objective.scale();
        Ok(Self {
            a,
            objective,
            solver: Simplex::default(),
            lp,
            last: None,
            tie_tol,
        })
    }

    pub fn objective(&self) -> &TilingObjective<T> {
        &self.objective
    }

    pub fn features(&self) -> &FeatureMatrix<T> {
        &self.a
    }

    /// Forgets the warm start.
    pub fn reset(&mut self) {
        self.last = None;
    }

    /// Solves the tiling LP at `x` and returns the tile containing it.
    pub fn extract(&mut self, x: &[T]) -> Result<Tile<T>> {
        if x.len() != self.a.rank() {
            return Err(Error::Dimension(format!(
                "point of dimension {} for rank {}",
                x.len(),
                self.a.rank()
            )));
        }
        self.lp.set_rhs(x.to_vec())?;
        let sol = self
            .solver
            .solve_with_hint(&self.lp, self.last.as_deref())?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::NotInZonotope),
            LpStatus::Unbounded => return Err(Error::Numerical("tiling LP unbounded".into())),
        }
        for (j, (&s, &d)) in sol.var_status.iter().zip(&sol.reduced_costs).enumerate() {
            if s != VarStatus::Basic && d.abs() <= self.tie_tol {
                return Err(Error::TilingTie { variable: j });
            }
        }
        let tile = self.tile_from_solution(&sol.values, &sol.var_status)?;
        self.last = Some(sol.var_status);
        Ok(tile)
    }

    fn tile_from_solution(&self, y: &[T], status: &[VarStatus]) -> Result<Tile<T>> {
        let r = self.a.rank();
        let tol = T::bound_tol();
        let is_frac = |v: T| v > tol && v < T::one() - tol;
        let mut chosen: Vec<usize> = (0..y.len()).filter(|&j| is_frac(y[j])).collect();
        if chosen.len() > r {
            return Err(Error::Numerical(format!(
                "{} fractional coordinates for rank {r}",
                chosen.len()
            )));
        }
        if chosen.len() < r {
            // Point on a tile boundary: complete with basic variables at a
            // bound, then any remaining column, in increasing index order.
            let basic_at_bound =
                (0..y.len()).filter(|&j| !is_frac(y[j]) && status[j] == VarStatus::Basic);
            let others = (0..y.len()).filter(|&j| !is_frac(y[j]) && status[j] != VarStatus::Basic);
            let candidates: Vec<usize> = basic_at_bound.chain(others).collect();
            for j in candidates {
                if chosen.len() == r {
                    break;
                }
                chosen.push(j);
                if numerical_rank(&self.a.columns(&chosen), T::rank_rtol()) < chosen.len() {
                    chosen.pop();
                }
            }
            if chosen.len() < r {
                return Err(Error::Numerical(
                    "could not complete degenerate basis".into(),
                ));
            }
            chosen.sort_unstable();
        }
        let basis = Basis::from_indices(chosen);
        let half = T::from_f64_lossy(0.5);
        let offset = (0..y.len())
            .map(|j| u8::from(!basis.contains(j) && y[j] >= half))
            .collect();
        let coords = basis.indices().iter().map(|&j| y[j]).collect();
        Ok(Tile {
            basis,
            offset,
            coords,
            lp_status: status.to_vec(),
        })
    }
}

/// One-shot tile extraction without warm start.
pub fn extract_basis<T: Scalar>(
    a: &FeatureMatrix<T>,
    c: &TilingObjective<T>,
    x: &[T],
) -> Result<Tile<T>> {
    TileExtractor::new(a.clone(), c.clone())?.extract(x)
}

/// The offset `ξ` of the tile of basis `B`, from the signs of the reduced
/// costs `c_j − c_Bᵀ A_B⁻¹ a_j`: nonbasic columns with negative reduced cost
/// sit at 1, the others at 0.
pub fn tile_offset<T: Scalar>(
    a: &FeatureMatrix<T>,
    c: &TilingObjective<T>,
    basis: &Basis,
) -> Result<Vec<u8>> {
    let ab = a.columns(basis.indices());
    let lu = Lu::new(&ab.transpose())?;
    let cb: Vec<T> = basis.indices().iter().map(|&j| c.as_slice()[j]).collect();
    let w = lu.solve(&cb)?;
    let tol = T::opt_tol() * c.scale();
    (0..a.len())
        .map(|j| {
            if basis.contains(j) {
                return Ok(0);
            }
            let d = c.as_slice()[j] - dot(&w, a.column(j));
            if d.abs() <= tol {
                Err(Error::TilingTie { variable: j })
            } else {
                Ok(u8::from(d < T::zero()))
            }
        })
        .collect()
}

/// `A ξ + A_{:B} u`: the point with coordinates `u` in the tile of `B`.
pub fn tile_point<T: Scalar>(
    a: &FeatureMatrix<T>,
    basis: &Basis,
    offset: &[u8],
    u: &[T],
) -> Result<Vec<T>> {
    if u.len() != basis.len() || offset.len() != a.len() {
        return Err(Error::Dimension("tile coordinates".into()));
    }
    let mut y: Vec<T> = offset
        .iter()
        .map(|&b| if b == 1 { T::one() } else { T::zero() })
        .collect();
    for (&j, &uj) in basis.indices().iter().zip(u) {
        y[j] = uj;
    }
    a.apply(&y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> FeatureMatrix<f64> {
        FeatureMatrix::from_rows(&[[1.0, 2.0, 0.0, -1.0], [0.0, 1.0, 2.0, 1.0]]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let z = Zonotope::new(fig1());
        assert!(z.contains(&[0.0, 0.0]).unwrap());
        assert!(z.contains(&[2.0, 4.0]).unwrap());
        assert!(!z.contains(&[10.0, 0.0]).unwrap());
        assert!(z.contains(&[1.0]).is_err());
    }

    #[test]
    fn bounding_box_from_signed_column_sums() {
        let (lo, hi) = Zonotope::new(fig1()).bounding_box();
        assert_eq!(lo, vec![-1.0, 0.0]);
        assert_eq!(hi, vec![3.0, 4.0]);
    }

    #[test]
    fn outward_direction_at_vertex_has_zero_forward_length() {
        // the origin is a vertex; (0,-1) leaves Z(A) immediately
        let z = Zonotope::new(fig1());
        let ch = z.chord(&[0.0, 0.0], &[0.0, -1.0], None).unwrap();
        assert!(ch.alpha_max.abs() < 1e-9);
    }

    #[test]
    fn chord_outside_is_error() {
        let z = Zonotope::new(fig1());
        assert_eq!(
            z.chord(&[10.0, 0.0], &[1.0, 0.0], None),
            Err(Error::NotInZonotope)
        );
    }

    #[test]
    fn extraction_outside_is_error() {
        let c = TilingObjective::gaussian(4, 3);
        assert!(matches!(
            extract_basis(&fig1(), &c, &[10.0, 10.0]),
            Err(Error::NotInZonotope)
        ));
    }

    #[test]
    fn vertex_returns_full_basis() {
        let a = fig1();
        let c = TilingObjective::gaussian(4, 11);
        let t = extract_basis(&a, &c, &[0.0, 0.0]).unwrap();
        assert_eq!(t.basis.len(), 2);
        assert!(a.is_basis(t.basis.indices()));
    }

    #[test]
    fn tie_is_reported() {
        // equal costs on parallel unit columns give two optimal bases
        let a = FeatureMatrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let c = TilingObjective::from_vec(vec![1.0, 1.0, 0.5]);
        let err = extract_basis(&a, &c, &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::TilingTie { .. }));
    }
}
