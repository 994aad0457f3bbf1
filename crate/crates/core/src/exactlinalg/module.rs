//! Finitely generated modules presented as subquotients of a free ambient
//! module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::matrix::{convert, mat_mul, mat_vec, IntMatrix, Matrix};
use super::normal_form::{smith, LatticeBasis};
use super::ring::{valuation, EuclideanRing, Integers, PrimeField, RingSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Solver {
    Int(LatticeBasis<Integers>),
    Field(LatticeBasis<PrimeField>),
}

impl Solver {
    fn solve(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        match self {
            Solver::Int(l) => l.solve(v),
            Solver::Field(l) => {
                let f = PrimeField::new(field_char(l)).expect("valid prime");
                let w: Vec<u64> = v.iter().map(|x| f.from_int(x)).collect();
                l.solve(&w).map(|x| x.into_iter().map(BigInt::from).collect())
            }
        }
    }
}

fn field_char(l: &LatticeBasis<PrimeField>) -> u64 {
    l.ring().characteristic()
}

/// A finitely generated module `⊕ R/(d_i)` with an explicit embedding of
/// its generators in an ambient free module.
///
/// Invariant factors use `0` for a factor that is free over the ring. Over a
/// field or `Z/p^M` every generator still has a finite additive order, which
/// is available through [`FgModule::moduli`].
#[derive(Clone, Debug)]
pub struct FgModule {
    ring: RingSpec,
    ambient_rank: usize,
    invariant_factors: Vec<BigInt>,
    moduli: Vec<BigInt>,
    generators: IntMatrix,
    solver: Solver,
    transform: IntMatrix,
}

/// Summary used in reports.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ModuleSummary {
    pub ring: String,
    pub invariant_factors: Vec<String>,
    pub rank: usize,
}

/// Full integral presentation before any base change: `gens` has one column
/// per kernel basis vector and `diag` holds all Smith entries (units
/// included).
struct Presentation {
    solver: Solver,
    gens: IntMatrix,
    transform: IntMatrix,
    diag: Vec<BigInt>,
}

fn present<R: EuclideanRing>(
    ring: &R,
    kernel: &Matrix<R::Elem>,
    image: &Matrix<R::Elem>,
) -> Result<(LatticeBasis<R>, Matrix<R::Elem>, Matrix<R::Elem>, Vec<R::Elem>)> {
    let lattice = LatticeBasis::from_columns(ring, kernel);
    let r = lattice.rank();
    let mut rel = Vec::with_capacity(image.cols());
    for j in 0..image.cols() {
        rel.push(lattice.solve(&image.column(j)).ok_or(Error::ImageNotContained)?);
    }
    let rel = Matrix::from_columns(r, &rel, ring.zero());
    let s = smith(ring, &rel, false);
    let mut diag = s.diagonal;
    diag.truncate(r);
    while diag.len() < r {
        diag.push(ring.zero());
    }
    let gens = mat_mul(ring, &lattice.basis_columns(), &s.u);
    Ok((lattice, gens, s.u_inv, diag))
}

impl FgModule {
    /// The module spanned by the columns of `kernel` modulo the span of the
    /// columns of `image`, over `ring`.
    ///
    /// Rational and `Z/p^M` modules are obtained from the integral one by
    /// base change; `F_p` modules are computed with `F_p` arithmetic.
    pub fn subquotient(kernel: &IntMatrix, image: &IntMatrix, ring: RingSpec) -> Result<Self> {
        ring.validate()?;
        if kernel.rows() != image.rows() {
            return Err(Error::InvalidInput("kernel and image have different ambient ranks".into()));
        }
        match ring {
            RingSpec::PrimeField(p) => Self::subquotient_field(kernel, image, p),
            _ => Ok(Self::subquotient_integral(kernel, image)?.base_change(ring)),
        }
    }

    fn subquotient_integral(kernel: &IntMatrix, image: &IntMatrix) -> Result<Presentation> {
        let (lattice, gens, transform, diag) = present(&Integers, kernel, image)?;
        Ok(Presentation { solver: Solver::Int(lattice), gens, transform, diag })
    }

    fn subquotient_field(kernel: &IntMatrix, image: &IntMatrix, p: u64) -> Result<Self> {
        let f = PrimeField::new(p)?;
        let k = convert(&Integers, &f, kernel);
        let i = convert(&Integers, &f, image);
        let (lattice, gens, transform, diag) = present(&f, &k, &i)?;
        let keep: Vec<usize> = (0..diag.len()).filter(|&i| diag[i] == 0).collect();
        let n = keep.len();
        Ok(FgModule {
            ring: RingSpec::PrimeField(p),
            ambient_rank: kernel.rows(),
            invariant_factors: vec![BigInt::zero(); n],
            moduli: vec![BigInt::from(p); n],
            generators: select_columns(&convert(&f, &Integers, &gens), &keep),
            solver: Solver::Field(lattice),
            transform: select_rows(&convert(&f, &Integers, &transform), &keep),
        })
    }

    /// `H ⊗ R` for an integral module `H`.
    pub fn base_change_of(&self, ring: RingSpec) -> Result<Self> {
        ring.validate()?;
        if self.ring != RingSpec::Integers {
            return Err(Error::InvalidInput(format!("base change from {} is not supported", self.ring)));
        }
        if let RingSpec::PrimeField(p) = ring {
            // F_p = Z/p^1 as a ring; the module is H ⊗ F_p.
            let mut m = self.tensor_prime_power(p, 1);
            m.ring = ring;
            m.invariant_factors.iter_mut().for_each(|x| *x = BigInt::zero());
            return Ok(m);
        }
        let pres = Presentation {
            solver: self.solver.clone(),
            gens: self.generators.clone(),
            transform: self.transform.clone(),
            diag: self.invariant_factors.clone(),
        };
        let mut m = pres.base_change(ring);
        m.ambient_rank = self.ambient_rank;
        Ok(m)
    }

    /// `H ⊗ Z/p^M` for an integral module `H`.
    pub fn tensor_prime_power(&self, p: u64, m: u32) -> Self {
        assert_eq!(self.ring, RingSpec::Integers, "tensor of a non-integral module");
        let pres = Presentation {
            solver: self.solver.clone(),
            gens: self.generators.clone(),
            transform: self.transform.clone(),
            diag: self.invariant_factors.clone(),
        };
        let mut out = pres.base_change(RingSpec::PrimePowerRing(p, m));
        out.ambient_rank = self.ambient_rank;
        out
    }

    /// `H ⊗ Q` for an integral module `H`.
    pub fn tensor_rationals(&self) -> Self {
        self.base_change_of(RingSpec::Rationals).expect("integral module")
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.invariant_factors
    }

    /// Additive order of each generator (0 when infinite).
    pub fn moduli(&self) -> &[BigInt] {
        &self.moduli
    }

    /// Number of generators.
    pub fn num_generators(&self) -> usize {
        self.invariant_factors.len()
    }

    /// Number of factors that are free over the ring (the dimension over a
    /// field).
    pub fn free_rank(&self) -> usize {
        self.invariant_factors.iter().filter(|d| d.is_zero()).count()
    }

    /// Nonzero invariant factors.
    pub fn torsion_factors(&self) -> Vec<BigInt> {
        self.invariant_factors.iter().filter(|d| !d.is_zero()).cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.invariant_factors.is_empty()
    }

    /// Generator lifts, one column per generator.
    pub fn generator_lift(&self) -> &IntMatrix {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> Vec<BigInt> {
        self.generators.column(i)
    }

    /// Coordinates of an ambient vector, reduced modulo the generator orders.
    pub fn coordinates(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.ambient_rank {
            return Err(Error::InvalidInput(format!(
                "vector of length {} in ambient rank {}",
                v.len(),
                self.ambient_rank
            )));
        }
        let x = self.solver.solve(v).ok_or(Error::NotInModule)?;
        let y = mat_vec(&Integers, &self.transform, &x);
        Ok(y.into_iter().zip(&self.moduli).map(|(c, m)| reduce(c, m)).collect())
    }

    /// Ambient vector with the given coordinates.
    pub fn lift(&self, coords: &[BigInt]) -> Vec<BigInt> {
        let v = mat_vec(&Integers, &self.generators, coords);
        match self.ring {
            RingSpec::PrimeField(p) => v.into_iter().map(|x| x.mod_floor(&BigInt::from(p))).collect(),
            _ => v,
        }
    }

    /// Whether two coordinate vectors name the same element.
    pub fn coords_equal(&self, a: &[BigInt], b: &[BigInt]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).zip(&self.moduli).all(|((x, y), m)| reduce(x - y, m).is_zero())
    }

    pub fn summary(&self) -> ModuleSummary {
        ModuleSummary {
            ring: self.ring.to_string(),
            invariant_factors: self.invariant_factors.iter().map(|d| d.to_string()).collect(),
            rank: self.free_rank(),
        }
    }
}

impl Presentation {
    fn base_change(self, ring: RingSpec) -> FgModule {
        let mut keep = Vec::new();
        let mut factors = Vec::new();
        let mut moduli = Vec::new();
        for (i, d) in self.diag.iter().enumerate() {
            let d = d.abs();
            match ring {
                RingSpec::Integers => {
                    if !d.is_one() {
                        keep.push(i);
                        factors.push(d.clone());
                        moduli.push(d);
                    }
                }
                RingSpec::Rationals => {
                    if d.is_zero() {
                        keep.push(i);
                        factors.push(BigInt::zero());
                        moduli.push(BigInt::zero());
                    }
                }
                RingSpec::PrimePowerRing(p, m) => {
                    let e = if d.is_zero() { m } else { valuation(&d, p).min(m) };
                    if e > 0 {
                        keep.push(i);
                        let q = BigInt::from(p).pow(e);
                        factors.push(if e == m { BigInt::zero() } else { q.clone() });
                        moduli.push(q);
                    }
                }
                RingSpec::PrimeField(_) => unreachable!("field modules are computed directly"),
            }
        }
        FgModule {
            ring,
            ambient_rank: self.gens.rows(),
            invariant_factors: factors,
            moduli,
            generators: select_columns(&self.gens, &keep),
            solver: self.solver,
            transform: select_rows(&self.transform, &keep),
        }
    }
}

fn reduce(c: BigInt, m: &BigInt) -> BigInt {
    if m.is_zero() {
        c
    } else {
        c.mod_floor(m)
    }
}

fn select_columns(m: &IntMatrix, keep: &[usize]) -> IntMatrix {
    let cols: Vec<Vec<BigInt>> = keep.iter().map(|&j| m.column(j)).collect();
    Matrix::from_columns(m.rows(), &cols, BigInt::zero())
}

fn select_rows(m: &IntMatrix, keep: &[usize]) -> IntMatrix {
    let rows: Vec<Vec<BigInt>> = keep.iter().map(|&i| m.row(i).to_vec()).collect();
    if rows.is_empty() {
        return Matrix::filled(0, m.cols(), BigInt::zero());
    }
    Matrix::from_rows(rows)
}

/// Matrix of a map between modules, computed on generator lifts.
///
/// Fails with `NotStable` if a generator image is outside `target` or if the
/// result does not respect the relations of `source`.
pub fn induced_map<F>(source: &FgModule, target: &FgModule, f: F) -> Result<IntMatrix>
where
    F: Fn(&[BigInt]) -> Result<Vec<BigInt>>,
{
    let images = (0..source.num_generators()).map(|j| f(&source.generator(j))).collect::<Result<Vec<_>>>()?;
    induced_map_from_images(source, target, &images)
}

/// [`induced_map`] given the images of the generator lifts, in order.
pub fn induced_map_from_images(source: &FgModule, target: &FgModule, images: &[Vec<BigInt>]) -> Result<IntMatrix> {
    let n = source.num_generators();
    assert_eq!(images.len(), n, "one image per generator");
    let mut cols = Vec::with_capacity(n);
    for (j, image) in images.iter().enumerate() {
        let y = target.coordinates(image).map_err(|e| match e {
            Error::NotInModule => Error::NotStable(format!("image of generator {j} leaves the module")),
            other => other,
        })?;
        let d = &source.moduli[j];
        if !d.is_zero() {
            for (yi, m) in y.iter().zip(&target.moduli) {
                if !reduce(d * yi, m).is_zero() {
                    return Err(Error::NotStable(format!("relation of generator {j} is not respected")));
                }
            }
        }
        cols.push(y);
    }
    Ok(Matrix::from_columns(target.num_generators(), &cols, BigInt::zero()))
}

/// Matrix of an endomorphism on the generators of `m`.
pub fn induced_endomorphism<F>(f: F, m: &FgModule) -> Result<IntMatrix>
where
    F: Fn(&[BigInt]) -> Result<Vec<BigInt>>,
{
    induced_map(m, m, f)
}

/// Composition of endomorphism matrices, reduced modulo generator orders.
pub fn compose(m: &FgModule, a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    reduce_matrix(m, &mat_mul(&Integers, a, b))
}

/// Reduces row `i` modulo the order of generator `i`.
pub fn reduce_matrix(m: &FgModule, a: &IntMatrix) -> IntMatrix {
    let mut out = a.clone();
    for i in 0..out.rows() {
        let q = m.moduli[i].clone();
        for x in out.row_mut(i) {
            *x = reduce(x.clone(), &q);
        }
    }
    out
}
