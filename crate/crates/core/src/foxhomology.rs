//! First homology of Γ̄ with coefficients in V_{2k}, computed as the homology
//! of PSL₂(Z) = ⟨S, U | S², U³⟩ with induced coefficients.
//!
//! The complex is `C₂ = Ind² → C₁ = Ind² → C₀ = Ind` with
//! `∂₁(m_S, m_U) = (S−1)m_S + (U−1)m_U` and
//! `∂₂(n₁, n₂) = ((1+S)n₁, (1+U+U²)n₂)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::cosets::{CosetTable, SubgroupSpec};
use crate::error::{Error, Result};
use crate::exactlinalg::matrix::{convert, IntMatrix, Matrix};
use crate::exactlinalg::module::FgModule;
use crate::exactlinalg::normal_form::kernel_basis;
use crate::exactlinalg::ring::{Integers, PrimeField, RingSpec};
use crate::psl2words::{decompose_word, quadratic_form, Letter, ProjectiveMatrix, Word};
use crate::symcoeffs::{IndModule, IndVec, Poly2k};

/// A 1-chain `(S−1)⊗m_S + (U−1)⊗m_U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain1 {
    pub s: IndVec,
    pub u: IndVec,
}

impl Chain1 {
    pub fn zero(m: &IndModule) -> Self {
        Self { s: m.zero(), u: m.zero() }
    }

    /// Coordinates in `C₁ = Ind ⊕ Ind`.
    pub fn flatten(&self) -> Vec<BigInt> {
        self.s.iter().chain(&self.u).cloned().collect()
    }

    pub fn from_flat(v: &[BigInt]) -> Self {
        let n = v.len() / 2;
        Self { s: v[..n].to_vec(), u: v[n..].to_vec() }
    }

    pub fn add_assign(&mut self, o: &Chain1) {
        for (a, b) in self.s.iter_mut().zip(&o.s) {
            *a += b;
        }
        for (a, b) in self.u.iter_mut().zip(&o.u) {
            *a += b;
        }
    }

    pub fn scale(&self, c: &BigInt) -> Chain1 {
        Chain1 { s: self.s.iter().map(|x| x * c).collect(), u: self.u.iter().map(|x| x * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.s.iter().chain(&self.u).all(|x| x.is_zero())
    }
}

/// A formal sum `Σ (γ−1)⊗v_γ` over elements of a subgroup.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupChain {
    pub terms: Vec<(ProjectiveMatrix, Poly2k)>,
}

fn add_into(target: &mut [BigInt], block: usize, p: &[BigInt]) {
    let n = p.len();
    for (t, x) in target[block * n..(block + 1) * n].iter_mut().zip(p) {
        *t += x;
    }
}

fn sub_vec(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn boundary1(m: &IndModule, c: &Chain1) -> IndVec {
    let s = m.act_letter(Letter::S, &c.s);
    let u = m.act_letter(Letter::U, &c.u);
    s.iter().zip(&c.s).zip(u.iter().zip(&c.u)).map(|((a, b), (x, y))| a - b + x - y).collect()
}

pub fn boundary2(m: &IndModule, n1: &[BigInt], n2: &[BigInt]) -> Chain1 {
    let s = m.act_letter(Letter::S, n1);
    let u = m.act_letter(Letter::U, n2);
    let uu = m.act_letter(Letter::U, &u);
    Chain1 {
        s: n1.iter().zip(&s).map(|(a, b)| a + b).collect(),
        u: n2.iter().zip(&u).zip(&uu).map(|((a, b), c)| a + b + c).collect(),
    }
}

/// The chain representing `(w − 1)⊗v`, by the product rule
/// `(gh − 1)⊗v = (g − 1)⊗hv + (h − 1)⊗v`.
pub fn fox_expand(m: &IndModule, w: &Word, v: &[BigInt]) -> Chain1 {
    let mut out = Chain1::zero(m);
    let mut cur = v.to_vec();
    for &x in w.letters().iter().rev() {
        match x {
            Letter::S => add_assign(&mut out.s, &cur),
            Letter::U => add_assign(&mut out.u, &cur),
            Letter::U2 => {
                let ucur = m.act_letter(Letter::U, &cur);
                add_assign(&mut out.u, &ucur);
                add_assign(&mut out.u, &cur);
            }
        }
        cur = m.act_letter(x, &cur);
    }
    out
}

/// [`fox_expand`] for a vector supported in one block; the intermediate
/// vectors stay supported in one block.
pub fn fox_expand_single(m: &IndModule, w: &Word, block: usize, p: &[BigInt], out: &mut Chain1) {
    let mut cur = (block, p.to_vec());
    for &x in w.letters().iter().rev() {
        match x {
            Letter::S => add_into(&mut out.s, cur.0, &cur.1),
            Letter::U => add_into(&mut out.u, cur.0, &cur.1),
            Letter::U2 => {
                let (j, up) = m.act_letter_single(Letter::U, cur.0, &cur.1);
                add_into(&mut out.u, j, &up);
                add_into(&mut out.u, cur.0, &cur.1);
            }
        }
        cur = m.act_letter_single(x, cur.0, &cur.1);
    }
}

fn add_assign(a: &mut [BigInt], b: &[BigInt]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Matrix of `v ↦ x·v` on the induced module.
fn letter_matrix(m: &IndModule, x: Letter) -> IntMatrix {
    let n = m.block_dim();
    let r = m.rank();
    let mut out = Matrix::filled(r, r, BigInt::zero());
    for c in 0..m.index() {
        // image of a unit vector in block c lands in block j with perm_x(j) = c
        for i in 0..n {
            let mut e = vec![BigInt::zero(); n];
            e[i] = BigInt::from(1);
            let (j, w) = m.act_letter_single(x, c, &e);
            for (row, val) in w.into_iter().enumerate() {
                out[(j * n + row, c * n + i)] = val;
            }
        }
    }
    out
}

/// Matrices of `∂₁` (rank × 2·rank) and `∂₂` (2·rank × 2·rank).
pub fn boundary_matrices(m: &IndModule) -> (IntMatrix, IntMatrix) {
    let r = m.rank();
    let ms = letter_matrix(m, Letter::S);
    let mu = letter_matrix(m, Letter::U);
    let mut d1 = Matrix::filled(r, 2 * r, BigInt::zero());
    let mut d2 = Matrix::filled(2 * r, 2 * r, BigInt::zero());
    for i in 0..r {
        for j in 0..r {
            let delta = BigInt::from((i == j) as i64);
            d1[(i, j)] = &ms[(i, j)] - &delta;
            d1[(i, r + j)] = &mu[(i, j)] - &delta;
            d2[(i, j)] = &ms[(i, j)] + &delta;
            // (1 + U + U²)
            let mut u2 = BigInt::zero();
            for l in 0..r {
                if !mu[(i, l)].is_zero() && !mu[(l, j)].is_zero() {
                    u2 += &mu[(i, l)] * &mu[(l, j)];
                }
            }
            d2[(r + i, r + j)] = &delta + &mu[(i, j)] + u2;
        }
    }
    (d1, d2)
}

/// `H₁(Γ̄, V_{2k} ⊗ R)` with a coordinate map on 1-cycles.
#[derive(Clone, Debug)]
pub struct H1Presentation {
    spec: Option<SubgroupSpec>,
    ring: RingSpec,
    ind: Arc<IndModule>,
    module: FgModule,
}

impl H1Presentation {
    pub fn spec(&self) -> Option<&SubgroupSpec> {
        self.spec.as_ref()
    }

    pub fn k(&self) -> usize {
        self.ind.k()
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn ind(&self) -> &Arc<IndModule> {
        &self.ind
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        self.ind.table()
    }

    pub fn module(&self) -> &FgModule {
        &self.module
    }

    pub fn num_generators(&self) -> usize {
        self.module.num_generators()
    }

    /// The same homology with coefficients changed to `ring` (from an
    /// integral presentation; `F_p` is recomputed on the chain level).
    pub fn with_ring(&self, ring: RingSpec) -> Result<Self> {
        if ring == self.ring {
            return Ok(self.clone());
        }
        if let RingSpec::PrimeField(_) = ring {
            return compute_h1_on(self.ind.clone(), self.spec.clone(), ring);
        }
        Ok(Self { spec: self.spec.clone(), ring, ind: self.ind.clone(), module: self.module.base_change_of(ring)? })
    }

    /// Same homology with an already-computed module (used for base changes
    /// such as `H ⊗ Z/p^M`).
    pub fn with_module(&self, module: FgModule) -> Self {
        Self { spec: self.spec.clone(), ring: module.ring(), ind: self.ind.clone(), module }
    }

    /// The characteristic when chains are only cycles modulo `p`.
    pub fn chain_modulus(&self) -> Option<BigInt> {
        match self.ring {
            RingSpec::PrimeField(p) => Some(BigInt::from(p)),
            _ => None,
        }
    }

    /// Whether `∂₁ c = 0` (modulo `p` over `F_p`).
    pub fn is_cycle(&self, c: &Chain1) -> bool {
        let b = boundary1(&self.ind, c);
        match self.ring {
            RingSpec::PrimeField(p) => b.iter().all(|x| x.mod_floor(&BigInt::from(p)).is_zero()),
            _ => b.iter().all(|x| x.is_zero()),
        }
    }

    /// Homology coordinates of a cycle.
    pub fn coords(&self, c: &Chain1) -> Result<Vec<BigInt>> {
        if !self.is_cycle(c) {
            return Err(Error::NotACycle("nonzero boundary".into()));
        }
        self.module.coordinates(&c.flatten())
    }

    /// A cycle representing the given coordinates.
    pub fn cycle(&self, coords: &[BigInt]) -> Chain1 {
        Chain1::from_flat(&self.module.lift(coords))
    }

    pub fn generator_cycle(&self, i: usize) -> Chain1 {
        Chain1::from_flat(&self.module.generator(i))
    }

    /// `(γ − 1) ⊗ v` as a chain; `γ` must fix `v` in the induced module.
    pub fn cycle_of(&self, gamma: &ProjectiveMatrix, v: &Poly2k) -> Result<Chain1> {
        cycle_of(&self.ind, gamma, v)
    }

    /// The cycle `(γ − 1) ⊗ Q_γ^k` of a hyperbolic or parabolic `γ ∈ Γ̄`.
    pub fn z_cycle(&self, gamma: &ProjectiveMatrix) -> Result<Chain1> {
        z_cycle(&self.ind, gamma)
    }

    pub fn z_coords(&self, gamma: &ProjectiveMatrix) -> Result<Vec<BigInt>> {
        self.coords(&self.z_cycle(gamma)?)
    }

    pub fn coords_equal(&self, a: &[BigInt], b: &[BigInt]) -> bool {
        self.module.coords_equal(a, b)
    }
}

/// `H₁(Γ̄_H(N), V_{2k} ⊗ R)`.
pub fn compute_h1(spec: &SubgroupSpec, k: usize, ring: RingSpec) -> Result<H1Presentation> {
    let table = Arc::new(CosetTable::build(spec)?);
    compute_h1_on(Arc::new(IndModule::new(table, k)), Some(spec.clone()), ring)
}

/// `H₁` of the subgroup described by the table of `ind`.
pub fn compute_h1_on(ind: Arc<IndModule>, spec: Option<SubgroupSpec>, ring: RingSpec) -> Result<H1Presentation> {
    ring.validate()?;
    let (d1, d2) = boundary_matrices(&ind);
    let kernel = match ring {
        RingSpec::PrimeField(p) => {
            let f = PrimeField::new(p)?;
            let k = kernel_basis(&f, &convert(&Integers, &f, &d1));
            convert(&f, &Integers, &k)
        }
        _ => kernel_basis(&Integers, &d1),
    };
    let module = FgModule::subquotient(&kernel, &d2, ring)?;
    Ok(H1Presentation { spec, ring, ind, module })
}

pub fn cycle_of(ind: &IndModule, gamma: &ProjectiveMatrix, v: &Poly2k) -> Result<Chain1> {
    if v.k() != ind.k() {
        return Err(Error::InvalidInput("form of the wrong degree".into()));
    }
    let mut c = Chain1::zero(ind);
    fox_expand_single(ind, &decompose_word(gamma), 0, v.coeffs(), &mut c);
    if !boundary1(ind, &c).iter().all(|x| x.is_zero()) {
        return Err(Error::NotACycle(format!("{gamma} does not fix {v}")));
    }
    Ok(c)
}

pub fn z_cycle(ind: &IndModule, gamma: &ProjectiveMatrix) -> Result<Chain1> {
    let q = quadratic_form(gamma)?;
    cycle_of(ind, gamma, &Poly2k::quad_power(&q, ind.k()))
}

/// Rewrites a cycle of the G-model as `Σ (h − 1) ⊗ v` with `h` in the
/// subgroup of the table.
///
/// The term `(x − 1) ⊗ t_i⁻¹v` becomes `(h − 1) ⊗ v` with
/// `h = t_j x t_i⁻¹`, `Γ̄ t_j = Γ̄ t_i x⁻¹`; the leftover terms add up to
/// `∂₁ c` and must vanish.
pub fn to_group_chain(ind: &IndModule, c: &Chain1) -> Result<GroupChain> {
    to_group_chain_mod(ind, c, None)
}

/// [`to_group_chain`] for a cycle modulo `modulus`; the residue only has to
/// vanish modulo `modulus`.
pub fn to_group_chain_mod(ind: &IndModule, c: &Chain1, modulus: Option<&BigInt>) -> Result<GroupChain> {
    let table = ind.table();
    let mut residue = ind.zero();
    let mut terms = Vec::new();
    for (x, slot) in [(Letter::S, &c.s), (Letter::U, &c.u)] {
        for i in 0..ind.index() {
            let v = ind.block(slot, i);
            if v.iter().all(|e| e.is_zero()) {
                continue;
            }
            let j = table.perm(x.inverse(), i);
            // t_i x⁻¹ = h⁻¹ t_j, so h is the inverse of that twist
            let h = table.twist(x.inverse(), i).inverse();
            let hv = crate::symcoeffs::act(h.rep(), &Poly2k::from_coeffs(v.to_vec())?)?;
            add_into(&mut residue, j, hv.coeffs());
            let neg: Vec<BigInt> = v.iter().map(|e| -e).collect();
            add_into(&mut residue, i, &neg);
            if !h.is_identity() {
                terms.push((h, Poly2k::from_coeffs(v.to_vec())?));
            }
        }
    }
    let vanishes = |e: &BigInt| match modulus {
        Some(m) => e.mod_floor(m).is_zero(),
        None => e.is_zero(),
    };
    if !residue.iter().all(vanishes) {
        return Err(Error::NonCycle);
    }
    Ok(GroupChain { terms })
}

/// `Σ (h − 1) ⊗ v` expanded over the presentation, with each `v` in the
/// identity block of `ind`.
pub fn expand_group_chain(ind: &IndModule, g: &GroupChain) -> Chain1 {
    let mut c = Chain1::zero(ind);
    for (h, v) in &g.terms {
        fox_expand_single(ind, &decompose_word(h), 0, v.coeffs(), &mut c);
    }
    c
}

/// `Σ (h − 1) v` in V; zero for the image of a cycle.
pub fn group_chain_boundary(g: &GroupChain, k: usize) -> Result<Poly2k> {
    let mut acc = Poly2k::zero(k);
    for (h, v) in &g.terms {
        let hv = crate::symcoeffs::act(h.rep(), v)?;
        acc = acc.add(&Poly2k::from_coeffs(sub_vec(hv.coeffs(), v.coeffs()))?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlinalg::matrix::mat_mul;
    use crate::exactlinalg::normal_form::smith;
    use crate::psl2words::Class;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn ind(spec: &str, k: usize) -> Arc<IndModule> {
        let t = CosetTable::build(&spec.parse::<SubgroupSpec>().unwrap()).unwrap();
        Arc::new(IndModule::new(Arc::new(t), k))
    }

    fn vector(m: &IndModule, seed: i64) -> IndVec {
        (0..m.rank() as i64).map(|i| BigInt::from((i * 5 + seed * 17) % 13 - 6)).collect()
    }

    #[test]
    fn boundary_examples() {
        let m = ind("gamma0:3", 1);
        assert!(boundary1(&m, &Chain1::zero(&m)).iter().all(|x| x.is_zero()));
        let v = vector(&m, 1);
        let c = Chain1 { s: v.clone(), u: m.zero() };
        assert_eq!(boundary1(&m, &c), sub_vec(&m.act_letter(Letter::S, &v), &v));
        let b = boundary2(&m, &v, &m.zero());
        assert_eq!(b.s, m.act_letter(Letter::S, &v).iter().zip(&v).map(|(a, b)| a + b).collect::<Vec<_>>());
        assert!(b.u.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn fox_examples() {
        let m = ind("gamma0:2", 1);
        let v = vector(&m, 2);
        let s: Word = "S".parse().unwrap();
        assert_eq!(fox_expand(&m, &s, &v), Chain1 { s: v.clone(), u: m.zero() });
        let su: Word = "S U".parse().unwrap();
        assert_eq!(fox_expand(&m, &su, &v), Chain1 { s: m.act_letter(Letter::U, &v), u: v.clone() });
        let uu: Word = "U^2".parse().unwrap();
        let expected: Vec<BigInt> = m.act_letter(Letter::U, &v).iter().zip(&v).map(|(a, b)| a + b).collect();
        assert_eq!(fox_expand(&m, &uu, &v), Chain1 { s: m.zero(), u: expected });
        let t = ProjectiveMatrix::t();
        assert_eq!(boundary1(&m, &fox_expand(&m, &su, &v)), sub_vec(&m.act(&t, &v), &v));
    }

    #[test]
    fn complex_squares_to_zero() {
        for (spec, k) in [("gamma0:1", 3), ("gamma0:4", 1), ("gamma1:5", 0), ("gammaH:13:3", 1)] {
            let m = ind(spec, k);
            let (d1, d2) = boundary_matrices(&m);
            let prod = mat_mul(&Integers, &d1, &d2);
            assert!(prod.to_nested().iter().flatten().all(|x| x.is_zero()), "{spec}");
            let v = vector(&m, 3);
            let w = vector(&m, 4);
            assert!(boundary1(&m, &boundary2(&m, &v, &w)).iter().all(|x| x.is_zero()));
            let c = Chain1 { s: v, u: w };
            let flat = crate::exactlinalg::matrix::mat_vec(&Integers, &d1, &c.flatten());
            assert_eq!(flat, boundary1(&m, &c));
        }
    }

    #[test]
    fn level_one_weight_zero() {
        let h = compute_h1(&SubgroupSpec::gamma0(1).unwrap(), 0, RingSpec::Integers).unwrap();
        assert_eq!(h.module().invariant_factors(), &ints(&[6])[..]);
        // the class of (2,1;1,1) vanishes; T generates
        let g = ProjectiveMatrix::from_i64(2, 1, 1, 1).unwrap();
        let c = h.cycle_of(&g, &Poly2k::monomial(0, 0)).unwrap();
        assert!(h.coords_equal(&h.coords(&c).unwrap(), &ints(&[0])));
        let t = h.cycle_of(&ProjectiveMatrix::t(), &Poly2k::monomial(0, 0)).unwrap();
        let ct = h.coords(&t).unwrap();
        assert!(ct[0] == BigInt::from(1) || ct[0] == BigInt::from(5));
    }

    #[test]
    fn dimensions_over_rationals() {
        // Eichler–Shimura: dim M_{2k+2} + dim S_{2k+2}
        let level1 = SubgroupSpec::gamma0(1).unwrap();
        for (k, dim) in [(0usize, 0usize), (1, 1), (5, 3), (6, 1), (9, 3), (11, 5)] {
            assert_eq!(compute_h1(&level1, k, RingSpec::Rationals).unwrap().module().free_rank(), dim, "2k = {}", 2 * k);
        }
        let g11 = SubgroupSpec::gamma0(11).unwrap();
        assert_eq!(compute_h1(&g11, 0, RingSpec::Rationals).unwrap().module().free_rank(), 3);
    }

    #[test]
    fn abelianization_oracle() {
        // Independent oracle for k = 0: Γ̄^ab from Reidemeister–Schreier
        // relations of the coset table (S-cycles of length ≤ 2, U-cycles of
        // length ≤ 3 with their twists).
        for spec in ["gamma0:4", "gamma0:11", "gamma1:5", "gamma1:7"] {
            let t = CosetTable::build(&spec.parse::<SubgroupSpec>().unwrap()).unwrap();
            let h = compute_h1(&spec.parse().unwrap(), 0, RingSpec::Integers).unwrap();
            // generators: (letter, coset) pairs; relations: letter orbits and tree
            let n = t.index();
            let var = |li: usize, i: usize| li * n + i;
            let mut rels: Vec<Vec<i64>> = Vec::new();
            for (li, x, order) in [(0usize, Letter::S, 2usize), (1, Letter::U, 3)] {
                for i in 0..n {
                    let mut r = vec![0i64; 2 * n];
                    let mut j = i;
                    for _ in 0..order {
                        r[var(li, j)] += 1;
                        j = t.perm(x, j);
                    }
                    rels.push(r);
                }
            }
            // spanning tree: the BFS edges are trivial generators
            for i in 1..n {
                let w = decompose_word(t.rep(i));
                let mut r = vec![0i64; 2 * n];
                let mut j = 0;
                for &x in w.letters() {
                    match x {
                        Letter::S => r[var(0, j)] += 1,
                        Letter::U => r[var(1, j)] += 1,
                        Letter::U2 => {
                            r[var(1, j)] += 1;
                            r[var(1, t.perm(Letter::U, j))] += 1;
                        }
                    }
                    j = t.perm(x, j);
                }
                rels.push(r);
            }
            let rel = IntMatrix::from_rows(rels.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect());
            let s = smith(&Integers, &rel.transpose(), false);
            let mut factors: Vec<BigInt> = s.diagonal.iter().filter(|d| *d != &BigInt::from(1)).cloned().collect();
            factors.extend(std::iter::repeat_n(BigInt::zero(), 2 * n - s.diagonal.len()));
            let nonzero: Vec<BigInt> = factors.iter().filter(|d| !d.is_zero()).cloned().collect();
            let free = factors.len() - nonzero.len();
            assert_eq!(h.module().torsion_factors(), nonzero, "{spec}");
            assert_eq!(h.module().free_rank(), free, "{spec}");
        }
    }

    #[test]
    fn group_chain_round_trip() {
        for (spec, k) in [("gamma0:1", 2usize), ("gamma0:4", 1), ("gamma1:5", 1)] {
            let h = compute_h1(&spec.parse().unwrap(), k, RingSpec::Integers).unwrap();
            for i in 0..h.num_generators() {
                let c = h.generator_cycle(i);
                let g = to_group_chain(h.ind(), &c).unwrap();
                assert!(group_chain_boundary(&g, k).unwrap().is_zero());
                for (gamma, _) in &g.terms {
                    assert!(h.table().contains(gamma));
                }
                let back = expand_group_chain(h.ind(), &g);
                assert!(h.coords_equal(&h.coords(&back).unwrap(), &h.coords(&c).unwrap()), "{spec}");
            }
        }
        let m = ind("gamma0:3", 1);
        assert!(to_group_chain(&m, &Chain1::zero(&m)).unwrap().terms.is_empty());
        let bad = Chain1 { s: vector(&m, 1), u: m.zero() };
        assert_eq!(to_group_chain(&m, &bad).unwrap_err(), Error::NonCycle);
    }

    #[test]
    fn single_term_round_trip() {
        let h = compute_h1(&SubgroupSpec::gamma0(4).unwrap(), 1, RingSpec::Integers).unwrap();
        let gamma = ProjectiveMatrix::from_i64(5, 2, 12, 5).unwrap();
        assert_eq!(gamma.classify(), Class::Hyperbolic);
        let c = h.z_cycle(&gamma).unwrap();
        let g = to_group_chain(h.ind(), &c).unwrap();
        let single = GroupChain { terms: vec![(gamma.clone(), Poly2k::quad_power(&quadratic_form(&gamma).unwrap(), 1))] };
        let a = h.coords(&expand_group_chain(h.ind(), &g)).unwrap();
        let b = h.coords(&expand_group_chain(h.ind(), &single)).unwrap();
        assert!(h.coords_equal(&a, &b));
    }

    #[test]
    fn cycle_of_rejects_non_invariant() {
        let h = compute_h1(&SubgroupSpec::gamma0(1).unwrap(), 1, RingSpec::Integers).unwrap();
        let err = h.cycle_of(&ProjectiveMatrix::t(), &Poly2k::monomial(1, 0)).unwrap_err();
        assert!(matches!(err, Error::NotACycle(_)));
    }

    #[test]
    fn powers_multiply_classes() {
        let h = compute_h1(&SubgroupSpec::gamma0(1).unwrap(), 2, RingSpec::Integers).unwrap();
        let g = ProjectiveMatrix::from_i64(2, 1, 1, 1).unwrap();
        let base = h.z_coords(&g).unwrap();
        for d in 1..=4 {
            let gd = g.pow(d);
            let c = h.coords(&h.cycle_of(&gd, &Poly2k::quad_power(&quadratic_form(&g).unwrap(), 2)).unwrap()).unwrap();
            let expected: Vec<BigInt> = base.iter().map(|x| x * d).collect();
            assert!(h.coords_equal(&c, &expected));
        }
    }

    #[test]
    fn universal_coefficients() {
        // dim H₁(F_p) = dim H₁(Z)⊗F_p + dim Tor(H₀(Z), F_p), and the
        // natural map H₁(Z)⊗F_p → H₁(F_p) is injective.
        for (spec, k, p) in [("gamma0:1", 0usize, 2u64), ("gamma0:1", 0, 3), ("gamma0:1", 1, 2), ("gamma0:1", 1, 3), ("gamma0:4", 1, 2), ("gamma1:5", 1, 5), ("gamma0:3", 2, 3)] {
            let spec: SubgroupSpec = spec.parse().unwrap();
            let hz = compute_h1(&spec, k, RingSpec::Integers).unwrap();
            let hf = compute_h1(&spec, k, RingSpec::PrimeField(p)).unwrap();
            let tensor = hz.module().tensor_prime_power(p, 1);
            // H₀ = coker ∂₁
            let (d1, _) = boundary_matrices(hz.ind());
            let s = smith(&Integers, &d1, false);
            let mut tor = 0;
            for d in &s.diagonal {
                if !d.is_zero() && (d % BigInt::from(p)).is_zero() {
                    tor += 1;
                }
            }
            assert_eq!(hf.module().free_rank(), tensor.num_generators() + tor);
            // injectivity: images of the Z-generators with nonzero mod-p class stay independent
            let images: Vec<Vec<BigInt>> =
                (0..tensor.num_generators()).map(|i| hf.coords(&Chain1::from_flat(&tensor.generator(i))).unwrap()).collect();
            if !images.is_empty() {
                let f = PrimeField::new(p).unwrap();
                let m = Matrix::from_columns(hf.num_generators(), &images, BigInt::zero());
                assert_eq!(crate::exactlinalg::normal_form::rank(&f, &convert(&Integers, &f, &m)), images.len());
            }
            // Z/p^M: invariant factors agree with the reduction
            let zp = hz.with_ring(RingSpec::PrimePowerRing(p, 2)).unwrap();
            assert_eq!(zp.module().moduli(), hz.module().tensor_prime_power(p, 2).moduli());
        }
    }

    fn word() -> impl Strategy<Value = Word> {
        proptest::collection::vec(0u8..3, 0..40).prop_map(|v| {
            Word::from_letters(v.into_iter().map(|x| match x {
                0 => Letter::S,
                1 => Letter::U,
                _ => Letter::U2,
            }))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn telescoping(w in word(), seed in 0i64..100) {
            let m = ind("gamma0:6", 1);
            let v = vector(&m, seed);
            let c = fox_expand(&m, &w, &v);
            prop_assert_eq!(boundary1(&m, &c), sub_vec(&m.act(&w.eval(), &v), &v));
            let mut single = Chain1::zero(&m);
            let b = (seed as usize) % m.index();
            fox_expand_single(&m, &w, b, m.block(&v, b), &mut single);
            prop_assert_eq!(single, fox_expand(&m, &w, &m.embed(b, m.block(&v, b))));
        }
    }
}
