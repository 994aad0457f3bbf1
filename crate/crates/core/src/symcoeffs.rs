//! Homogeneous forms of degree 2k with the action of integer matrices of
//! positive determinant, and induced modules over coset tables.
//!
//! A vector of the induced module `Z[G] ⊗_Γ̄ V` is stored as one block per
//! coset: block `j` holds `v_j`, standing for `t_j⁻¹ ⊗ v_j`. With this
//! convention `g` acts by `(g·x)_j = act(t_j g t_c⁻¹, x_c)` where
//! `Γ̄ t_c = Γ̄ t_j g`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{Signed, Zero};

use crate::cosets::CosetTable;
use crate::error::{Error, Result};
use crate::exactlinalg::matrix::{mat_vec, IntMatrix, Matrix};
use crate::exactlinalg::ring::Integers;
use crate::psl2words::{format_form, Letter, Mat2, ProjectiveMatrix, QuadForm};

/// A form of degree `2k`; slot `i` is the coefficient of `X1^{2k−i} X2^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly2k(Vec<BigInt>);

impl Poly2k {
    pub fn zero(k: usize) -> Self {
        Self(vec![BigInt::zero(); 2 * k + 1])
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidInput("a form of even degree has an odd number of slots".into()));
        }
        Ok(Self(coeffs))
    }

    /// `X1^{2k−i} X2^i`.
    pub fn monomial(k: usize, i: usize) -> Self {
        let mut p = Self::zero(k);
        p.0[i] = BigInt::from(1);
        p
    }

    /// The k-th power of a quadratic form.
    pub fn quad_power(q: &QuadForm, k: usize) -> Self {
        let base = q.coeffs().to_vec();
        let mut acc = vec![BigInt::from(1)];
        for _ in 0..k {
            acc = poly_mul(&acc, &base);
        }
        Self(acc)
    }

    pub fn k(&self) -> usize {
        self.0.len() / 2
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, o: &Poly2k) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for Poly2k {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_form(&self.0))
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

// (u·X1 + w·X2)^e as a coefficient vector in slots X1^{e−i} X2^i
fn linear_power(u: &BigInt, w: &BigInt, e: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(e + 1);
    for i in 0..=e {
        let c: BigInt = binomial(BigInt::from(e), BigInt::from(i));
        out.push(c * u.pow((e - i) as u32) * w.pow(i as u32));
    }
    out
}

/// Matrix of `P ↦ act(g, P)` on forms of degree `2k`, where
/// `act(g, P)(X1, X2) = P(d X1 − b X2, −c X1 + a X2)`.
pub fn act_matrix(g: &Mat2, k: usize) -> Result<IntMatrix> {
    if !g.det().is_positive() {
        return Err(Error::NonPositiveDeterminant);
    }
    Ok(act_matrix_unchecked(g, k))
}

fn act_matrix_unchecked(g: &Mat2, k: usize) -> IntMatrix {
    let n = 2 * k;
    let first = (g.d.clone(), -&g.b);
    let second = (-&g.c, g.a.clone());
    let mut m = Matrix::filled(n + 1, n + 1, BigInt::zero());
    for i in 0..=n {
        let col = poly_mul(&linear_power(&first.0, &first.1, n - i), &linear_power(&second.0, &second.1, i));
        for (r, c) in col.into_iter().enumerate() {
            m[(r, i)] = c;
        }
    }
    m
}

/// `act(g, P)`; a left action of matrices with positive determinant.
pub fn act(g: &Mat2, p: &Poly2k) -> Result<Poly2k> {
    Ok(Poly2k(mat_vec(&Integers, &act_matrix(g, p.k())?, &p.0)))
}

/// Vector of an induced module: blocks of `2k+1` coefficients, one block per
/// coset of the underlying table.
pub type IndVec = Vec<BigInt>;

/// The induced module `Z[G] ⊗_Γ̄ V_{2k}` over a coset table.
#[derive(Debug)]
pub struct IndModule {
    table: Arc<CosetTable>,
    k: usize,
    // action matrices of the Schreier twists, per letter and block
    letter: [Vec<IntMatrix>; 3],
}

fn li(x: Letter) -> usize {
    match x {
        Letter::S => 0,
        Letter::U => 1,
        Letter::U2 => 2,
    }
}

impl IndModule {
    pub fn new(table: Arc<CosetTable>, k: usize) -> Self {
        let mut letter: [Vec<IntMatrix>; 3] = Default::default();
        for x in [Letter::S, Letter::U, Letter::U2] {
            letter[li(x)] = (0..table.index()).map(|j| act_matrix_unchecked(table.twist(x, j).rep(), k)).collect();
        }
        Self { table, k, letter }
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        &self.table
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Size of a block.
    pub fn block_dim(&self) -> usize {
        2 * self.k + 1
    }

    pub fn index(&self) -> usize {
        self.table.index()
    }

    /// Rank of the module as a free abelian group.
    pub fn rank(&self) -> usize {
        self.index() * self.block_dim()
    }

    pub fn zero(&self) -> IndVec {
        vec![BigInt::zero(); self.rank()]
    }

    pub fn block<'a>(&self, v: &'a [BigInt], j: usize) -> &'a [BigInt] {
        let n = self.block_dim();
        &v[j * n..(j + 1) * n]
    }

    /// `v` placed in block `j`.
    pub fn embed(&self, j: usize, p: &[BigInt]) -> IndVec {
        let mut out = self.zero();
        let n = self.block_dim();
        out[j * n..(j + 1) * n].clone_from_slice(p);
        out
    }

    /// Action of a generator letter.
    pub fn act_letter(&self, x: Letter, v: &[BigInt]) -> IndVec {
        let n = self.block_dim();
        let mut out = Vec::with_capacity(v.len());
        for j in 0..self.index() {
            let c = self.table.perm(x, j);
            out.extend(mat_vec(&Integers, &self.letter[li(x)][j], &v[c * n..(c + 1) * n]));
        }
        out
    }

    /// Action of a generator on a vector supported in the single block `b`:
    /// returns the block of the result and its contents.
    pub fn act_letter_single(&self, x: Letter, b: usize, p: &[BigInt]) -> (usize, Vec<BigInt>) {
        let j = self.table.perm(x.inverse(), b);
        (j, mat_vec(&Integers, &self.letter[li(x)][j], p))
    }

    /// Action of an arbitrary element of G.
    pub fn act(&self, g: &ProjectiveMatrix, v: &[BigInt]) -> IndVec {
        let n = self.block_dim();
        let mut out = Vec::with_capacity(v.len());
        for j in 0..self.index() {
            let h = self.table.rep(j).mul(g);
            let (gamma, c) = self.table.schreier(&h);
            out.extend(mat_vec(&Integers, &act_matrix_unchecked(gamma.rep(), self.k), &v[c * n..(c + 1) * n]));
        }
        out
    }

    /// Augmentation to coinvariants of the trivial-coefficient case: the sum of
    /// all blocks.
    pub fn block_sum(&self, v: &[BigInt]) -> Vec<BigInt> {
        let n = self.block_dim();
        let mut out = vec![BigInt::zero(); n];
        for j in 0..self.index() {
            for (o, x) in out.iter_mut().zip(self.block(v, j)) {
                *o += x;
            }
        }
        out
    }
}

/// Coefficient maps between the induced modules of a subgroup `Γ₁ ≤ Γ`:
/// restriction `Ind_Γ → Ind_{Γ₁}` and corestriction `Ind_{Γ₁} → Ind_Γ`.
#[derive(Debug)]
pub struct InductionPair {
    sub: Arc<IndModule>,
    sup: Arc<IndModule>,
    projection: Vec<usize>,
    restrict: Vec<IntMatrix>,
    corestrict: Vec<IntMatrix>,
}

impl InductionPair {
    /// `sub` must be the table of a subgroup of the group of `sup`, with the
    /// same `k`.
    pub fn new(sub: Arc<IndModule>, sup: Arc<IndModule>) -> Result<Self> {
        if sub.k != sup.k {
            return Err(Error::InvalidInput("induced modules of different weights".into()));
        }
        let projection = sub.table.projection(&sup.table);
        let mut restrict = Vec::with_capacity(sub.index());
        let mut corestrict = Vec::with_capacity(sub.index());
        for (j, &i) in projection.iter().enumerate() {
            // t_j u_i⁻¹ ∈ Γ
            let g = sub.table.rep(j).mul(sup.table.rep_inverse(i));
            if !sup.table.contains(&g) {
                return Err(Error::InvalidInput("subgroup table is not contained in the supergroup".into()));
            }
            restrict.push(act_matrix_unchecked(g.rep(), sub.k));
            corestrict.push(act_matrix_unchecked(g.inverse().rep(), sub.k));
        }
        Ok(Self { sub, sup, projection, restrict, corestrict })
    }

    pub fn sub(&self) -> &Arc<IndModule> {
        &self.sub
    }

    pub fn sup(&self) -> &Arc<IndModule> {
        &self.sup
    }

    /// `[Γ : Γ₁]`.
    pub fn relative_index(&self) -> usize {
        self.sub.index() / self.sup.index()
    }

    /// Coset of the supergroup containing each subgroup coset.
    pub fn projection(&self) -> &[usize] {
        &self.projection
    }

    /// `ρ(v)_j = act(t_j u_{π(j)}⁻¹, v_{π(j)})`.
    pub fn restrict(&self, v: &[BigInt]) -> IndVec {
        let mut out = Vec::with_capacity(self.sub.rank());
        for (j, &i) in self.projection.iter().enumerate() {
            out.extend(mat_vec(&Integers, &self.restrict[j], self.sup.block(v, i)));
        }
        out
    }

    /// Block `π(j)` collects `act(u_{π(j)} t_j⁻¹, v_j)`.
    pub fn corestrict(&self, v: &[BigInt]) -> IndVec {
        let n = self.sub.block_dim();
        let mut out = self.sup.zero();
        for (j, &i) in self.projection.iter().enumerate() {
            let w = mat_vec(&Integers, &self.corestrict[j], self.sub.block(v, j));
            for (o, x) in out[i * n..(i + 1) * n].iter_mut().zip(w) {
                *o += x;
            }
        }
        out
    }

    /// Corestriction of a vector supported in block `j` only.
    pub fn corestrict_single(&self, j: usize, p: &[BigInt]) -> (usize, Vec<BigInt>) {
        (self.projection[j], mat_vec(&Integers, &self.corestrict[j], p))
    }
}

/// Free function forms of the coefficient maps.
pub fn restrict_coeff(v: &[BigInt], pair: &InductionPair) -> IndVec {
    pair.restrict(v)
}

pub fn corestrict_coeff(v: &[BigInt], pair: &InductionPair) -> IndVec {
    pair.corestrict(v)
}

pub fn ind_act(g: &ProjectiveMatrix, v: &[BigInt], m: &IndModule) -> IndVec {
    m.act(g, v)
}

/// Transports a vector between two induced modules of the same group built
/// on different transversals.
pub fn reindex(from: &IndModule, to: &IndModule, v: &[BigInt]) -> IndVec {
    let n = from.block_dim();
    let mut out = to.zero();
    for j in 0..from.index() {
        // t'_{j'} = γ t_j, and t_j⁻¹ ⊗ x = t'_{j'}⁻¹ ⊗ γ x
        let (gamma_inv, jp) = to.table.schreier(from.table.rep(j));
        let gamma = gamma_inv.inverse();
        let w = mat_vec(&Integers, &act_matrix_unchecked(gamma.rep(), from.k), from.block(v, j));
        out[jp * n..(jp + 1) * n].clone_from_slice(&w);
    }
    out
}
