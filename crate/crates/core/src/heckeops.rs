//! Double coset operators `[Γ' α Γ] : H₁(Γ̄) → H₁(Γ̄')`, computed as
//! corestriction ∘ conjugation ∘ restriction on generator cycles.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::cosets::{conjugate_meet, CosetTable, SubgroupSpec, DEFAULT_COSET_BUDGET};
use crate::error::{Error, Result};
use crate::exactlinalg::matrix::{mat_mul, IntMatrix, Matrix};
use crate::exactlinalg::module::{compose, induced_map_from_images, reduce_matrix, FgModule};
use crate::exactlinalg::ring::{is_prime, Integers, RingSpec};
use crate::foxhomology::{
    compute_h1, fox_expand_single, to_group_chain_mod, Chain1, GroupChain, H1Presentation,
};
use crate::psl2words::{decompose_word, Mat2, ProjectiveMatrix};
use crate::symcoeffs::{act, IndModule, InductionPair};

/// The data `(Γ', α, Γ)` of `[Γ' α Γ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleCosetSpec {
    pub target: SubgroupSpec,
    pub alpha: Mat2,
    pub source: SubgroupSpec,
}

/// Matrix of an operator on homology coordinates: column `j` holds the
/// target coordinates of the image of source generator `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMatrix {
    pub matrix: IntMatrix,
    pub ring: RingSpec,
    /// `[Γ̄ : Γ̄₁]`, the number of single cosets in `Γ' α Γ`.
    pub cosets: usize,
}

impl OperatorMatrix {
    /// Characteristic polynomial, lowest degree first. Defined over `Q`,
    /// `F_p`, and over `Z` when the module is free.
    pub fn charpoly(&self, module: &FgModule) -> Result<Vec<BigInt>> {
        charpoly_on(&self.matrix, module)
    }
}

/// Restriction of a cycle of `Γ` to a cycle of `Γ₁`, slot by slot.
pub fn transfer_res(c: &Chain1, pair: &InductionPair) -> Chain1 {
    Chain1 { s: pair.restrict(&c.s), u: pair.restrict(&c.u) }
}

/// Corestriction of a cycle of `Γ₁` to a cycle of `Γ`.
pub fn transfer_cor(c: &Chain1, pair: &InductionPair) -> Chain1 {
    Chain1 { s: pair.corestrict(&c.s), u: pair.corestrict(&c.u) }
}

/// `(γ, v) ↦ (αγα⁻¹, α·v)`, checking that each conjugate lies in the group
/// of `target`.
pub fn conj_group_chain(g: &GroupChain, alpha: &Mat2, target: &CosetTable) -> Result<GroupChain> {
    let mut terms = Vec::with_capacity(g.terms.len());
    for (h, v) in &g.terms {
        let c = alpha
            .conjugate(h.rep())
            .ok_or_else(|| Error::ConjugateLeavesGroup(format!("conjugate of {h} by {alpha} is not integral")))?;
        let c = ProjectiveMatrix::new(c)?;
        if !target.contains(&c) {
            return Err(Error::ConjugateLeavesGroup(format!("{c} = {alpha}·{h}·{alpha}⁻¹ is not in the target group")));
        }
        terms.push((c, act(alpha, v)?));
    }
    Ok(GroupChain { terms })
}

/// `α_*` of a cycle of `Γ₁`, expanded over the induced module of `target`.
pub fn conj_star(c: &Chain1, source: &IndModule, alpha: &Mat2, target: &IndModule) -> Result<Chain1> {
    let g = to_group_chain_mod(source, c, None)?;
    expand_into(&conj_group_chain(&g, alpha, target.table())?, target)
}

fn expand_into(g: &GroupChain, target: &IndModule) -> Result<Chain1> {
    let mut out = Chain1::zero(target);
    for (h, v) in &g.terms {
        fox_expand_single(target, &decompose_word(h), 0, v.coeffs(), &mut out);
    }
    Ok(out)
}

fn reduce_chain(c: &mut Chain1, m: &BigInt) {
    for x in c.s.iter_mut().chain(c.u.iter_mut()) {
        *x = x.mod_floor(m);
    }
}

/// Chain-level realization of `[Γ' α Γ]` between two induced modules.
#[derive(Debug)]
pub struct DoubleCoset {
    alpha: Mat2,
    target: Arc<IndModule>,
    pair: InductionPair,
}

impl DoubleCoset {
    /// Builds `Γ₁ = Γ ∩ α⁻¹Γ'α` for `source = Ind_Γ` and `target = Ind_Γ'`.
    pub fn new(source: &Arc<IndModule>, target: &Arc<IndModule>, alpha: &Mat2) -> Result<Self> {
        if !alpha.det().is_positive() {
            return Err(Error::NonPositiveDeterminant);
        }
        if source.k() != target.k() {
            return Err(Error::InvalidInput("source and target weights differ".into()));
        }
        let pred = conjugate_meet(source.table().predicate(), alpha, target.table().predicate());
        let table = Arc::new(CosetTable::from_predicate(pred, DEFAULT_COSET_BUDGET)?);
        let sub = Arc::new(IndModule::new(table, source.k()));
        let pair = InductionPair::new(sub, source.clone())?;
        Ok(Self { alpha: alpha.clone(), target: target.clone(), pair })
    }

    pub fn alpha(&self) -> &Mat2 {
        &self.alpha
    }

    /// `[Γ̄ : Γ̄₁]`.
    pub fn coset_count(&self) -> usize {
        self.pair.relative_index()
    }

    /// The restricted group `Γ₁`.
    pub fn gamma1(&self) -> &Arc<IndModule> {
        self.pair.sub()
    }

    fn conjugated(&self, c: &Chain1, modulus: Option<&BigInt>) -> Result<GroupChain> {
        let mut r = transfer_res(c, &self.pair);
        if let Some(m) = modulus {
            reduce_chain(&mut r, m);
        }
        let g = to_group_chain_mod(self.pair.sub(), &r, modulus)?;
        conj_group_chain(&g, &self.alpha, self.target.table())
    }

    /// Image of a cycle (modulo `modulus` when given) over the target.
    ///
    /// Terms of `Γ₂ = αΓ₁α⁻¹ ⊆ Γ'` are expanded straight into `Ind_Γ'`,
    /// which is the corestriction from `Γ₂` in subgroup form.
    pub fn apply(&self, c: &Chain1, modulus: Option<&BigInt>) -> Result<Chain1> {
        let mut out = expand_into(&self.conjugated(c, modulus)?, &self.target)?;
        if let Some(m) = modulus {
            reduce_chain(&mut out, m);
        }
        Ok(out)
    }

    /// [`DoubleCoset::apply`] through an explicit table of `Γ₂` followed by
    /// chain-level corestriction.
    pub fn apply_via_gamma2(&self, c: &Chain1, modulus: Option<&BigInt>) -> Result<Chain1> {
        let g = self.conjugated(c, modulus)?;
        let pred = conjugate_meet(self.target.table().predicate(), &self.alpha.adjugate(), self.pair.sup().table().predicate());
        let table = Arc::new(CosetTable::from_predicate(pred, DEFAULT_COSET_BUDGET)?);
        let gamma2 = Arc::new(IndModule::new(table, self.target.k()));
        let pair2 = InductionPair::new(gamma2.clone(), self.target.clone())?;
        let mut out = transfer_cor(&expand_into(&g, &gamma2)?, &pair2);
        if let Some(m) = modulus {
            reduce_chain(&mut out, m);
        }
        Ok(out)
    }
}

/// Matrix of `[Γ' α Γ]` from `H₁(Γ̄)` (`source`) to `H₁(Γ̄')` (`target`).
pub fn double_coset(source: &H1Presentation, target: &H1Presentation, alpha: &Mat2) -> Result<OperatorMatrix> {
    if source.ring() != target.ring() {
        return Err(Error::InvalidInput("source and target rings differ".into()));
    }
    let dc = DoubleCoset::new(source.ind(), target.ind(), alpha)?;
    operator_from(&dc, source, target)
}

/// Matrix of an already-built [`DoubleCoset`].
pub fn operator_from(dc: &DoubleCoset, source: &H1Presentation, target: &H1Presentation) -> Result<OperatorMatrix> {
    let modulus = source.chain_modulus();
    let images = (0..source.num_generators())
        .into_par_iter()
        .map(|j| dc.apply(&source.generator_cycle(j), modulus.as_ref()).map(|c| c.flatten()))
        .collect::<Result<Vec<_>>>()?;
    let matrix = induced_map_from_images(source.module(), target.module(), &images)?;
    Ok(OperatorMatrix { matrix, ring: source.ring(), cosets: dc.coset_count() })
}

/// Matrix of `[Γ' α Γ]` given by its spec, on freshly computed homology.
pub fn double_coset_spec(spec: &DoubleCosetSpec, k: usize, ring: RingSpec) -> Result<OperatorMatrix> {
    let source = compute_h1(&spec.source, k, ring)?;
    let target = if spec.target == spec.source { source.clone() } else { compute_h1(&spec.target, k, ring)? };
    double_coset(&source, &target, &spec.alpha)
}

fn level_of(h: &H1Presentation) -> Result<u64> {
    h.spec()
        .map(|s| s.level())
        .ok_or_else(|| Error::InvalidInput("operator needs a congruence subgroup spec".into()))
}

fn check_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    Ok(())
}

/// `[Γ diag(1,p) Γ]` in either divisibility case (the operator defining `e_p`).
pub fn hecke_at(h: &H1Presentation, p: u64) -> Result<OperatorMatrix> {
    check_prime(p)?;
    double_coset(h, h, &Mat2::diag(1, p as i64))
}

/// `T_p` for `p ∤ N`.
pub fn hecke_t(h: &H1Presentation, p: u64) -> Result<OperatorMatrix> {
    let n = level_of(h)?;
    if n % p == 0 {
        return Err(Error::WrongDivisibility(format!("T_{p} needs {p} ∤ {n}")));
    }
    hecke_at(h, p)
}

/// `U_p` for `p | N`.
pub fn hecke_u(h: &H1Presentation, p: u64) -> Result<OperatorMatrix> {
    let n = level_of(h)?;
    if n % p != 0 {
        return Err(Error::WrongDivisibility(format!("U_{p} needs {p} | {n}")));
    }
    hecke_at(h, p)
}

/// `β = (m n; N d)` of determinant 1 with the least `m ≥ 0`.
pub fn beta_matrix(level: u64, d: u64) -> Result<Mat2> {
    if d.gcd(&level) != 1 {
        return Err(Error::WrongDivisibility(format!("gcd({d}, {level}) ≠ 1")));
    }
    let (nn, dd) = (BigInt::from(level), BigInt::from(d));
    let m = if level == 1 {
        BigInt::zero()
    } else {
        let e = dd.extended_gcd(&nn);
        e.x.mod_floor(&nn)
    };
    let n = (&m * &dd - BigInt::one()) / &nn;
    Ok(Mat2::new(m, n, nn, dd))
}

/// `⟨d⟩ = β_*` with `β` from [`beta_matrix`].
pub fn diamond(h: &H1Presentation, d: u64) -> Result<OperatorMatrix> {
    let beta = beta_matrix(level_of(h)?, d)?;
    double_coset(h, h, &beta)
}

/// `⟨d⟩` for an explicit `β ∈ Γ₀(N)` with lower-right entry `≡ d`.
pub fn diamond_with(h: &H1Presentation, beta: &Mat2) -> Result<OperatorMatrix> {
    let n = BigInt::from(level_of(h)?);
    if beta.det() != BigInt::one() || !(&beta.c % &n).is_zero() {
        return Err(Error::InvalidInput(format!("{beta} is not in Γ₀({n})")));
    }
    double_coset(h, h, beta)
}

/// The operators relating `Γ` and `Γ' = Γ ∩ Γ₀(p)` for `p ∤ N`.
#[derive(Clone, Debug)]
pub struct PiPhiV {
    /// Homology of `Γ'`.
    pub prime: H1Presentation,
    /// `[Γ 1 Γ'] : H₁(Γ̄') → H₁(Γ̄)`.
    pub pi: OperatorMatrix,
    /// `[Γ' diag(1,p) Γ] : H₁(Γ̄) → H₁(Γ̄')`.
    pub phi: OperatorMatrix,
    /// `[Γ' β diag(p,1) Γ']` on `H₁(Γ̄')`.
    pub v: OperatorMatrix,
    /// `U_p` on `H₁(Γ̄')`.
    pub u_p: OperatorMatrix,
    /// `T_p` on `H₁(Γ̄)`.
    pub t_p: OperatorMatrix,
}

pub fn pi_phi_v(h: &H1Presentation, p: u64) -> Result<PiPhiV> {
    check_prime(p)?;
    let spec = h.spec().ok_or_else(|| Error::InvalidInput("operator needs a congruence subgroup spec".into()))?;
    let n = spec.level();
    if n % p == 0 {
        return Err(Error::WrongDivisibility(format!("π, φ, V need {p} ∤ {n}")));
    }
    let prime = compute_h1(&spec.meet_gamma0(p)?, h.k(), h.ring())?;
    let pi = double_coset(&prime, h, &Mat2::identity())?;
    let phi = double_coset(h, &prime, &Mat2::diag(1, p as i64))?;
    let v = double_coset(&prime, &prime, &beta_matrix(n, p)?.mul(&Mat2::diag(p as i64, 1)))?;
    let u_p = hecke_at(&prime, p)?;
    let t_p = hecke_at(h, p)?;
    Ok(PiPhiV { prime, pi, phi, v, u_p, t_p })
}

/// `a·b` reduced modulo the generator orders of the target module of `a`.
pub fn compose_ops(target: &FgModule, a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    compose(target, a, b)
}

/// Whether two operator matrices into `target` agree.
pub fn same_operator(target: &FgModule, a: &IntMatrix, b: &IntMatrix) -> bool {
    reduce_matrix(target, a) == reduce_matrix(target, b)
}

/// `a + b` entrywise.
pub fn add_ops(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out[(i, j)] += &b[(i, j)];
        }
    }
    out
}

/// Characteristic polynomial `det(x − A)` by Faddeev–LeVerrier over `Z`,
/// lowest degree first.
pub fn charpoly(a: &IntMatrix) -> Vec<BigInt> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "square matrix");
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut m = Matrix::filled(n, n, BigInt::zero());
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1}·I
        let mut next = mat_mul(&Integers, a, &m);
        for i in 0..n {
            next[(i, i)] += &c[n - k + 1];
        }
        m = next;
        let am = mat_mul(&Integers, a, &m);
        let tr: BigInt = (0..n).map(|i| am[(i, i)].clone()).sum();
        c[n - k] = -(tr / BigInt::from(k));
    }
    c
}

/// Characteristic polynomial of an endomorphism matrix on `module`.
pub fn charpoly_on(a: &IntMatrix, module: &FgModule) -> Result<Vec<BigInt>> {
    match module.ring() {
        RingSpec::Rationals => Ok(charpoly(a)),
        RingSpec::Integers if module.torsion_factors().is_empty() => Ok(charpoly(a)),
        RingSpec::PrimeField(p) => {
            let p = BigInt::from(p);
            Ok(charpoly(a).into_iter().map(|x| x.mod_floor(&p)).collect())
        }
        r => Err(Error::InvalidInput(format!("characteristic polynomial over {r} with torsion is not defined"))),
    }
}

/// A monic polynomial split into linear factors with integer roots and a
/// remaining factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    /// `(root, multiplicity)`, roots increasing.
    pub roots: Vec<(BigInt, usize)>,
    /// Monic cofactor without roots in the ring, lowest degree first.
    pub rest: Vec<BigInt>,
    /// Characteristic for factorizations over `F_p`.
    pub modulus: Option<u64>,
}

fn divide_linear(f: &[BigInt], r: &BigInt) -> (Vec<BigInt>, BigInt) {
    // synthetic division by (x − r)
    let n = f.len() - 1;
    let mut q = vec![BigInt::zero(); n];
    let mut acc = BigInt::zero();
    for i in (0..=n).rev() {
        acc = &acc * r + &f[i];
        if i > 0 {
            q[i - 1] = acc.clone();
        }
    }
    (q, acc)
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut d = BigInt::from(2);
    let limit = BigInt::from(1_000_000u64);
    while &d * &d <= n && d <= limit {
        let mut e = 0;
        while (&n % &d).is_zero() {
            n /= &d;
            e += 1;
        }
        if e > 0 {
            primes.push((d.clone(), e));
        }
        d += 1;
    }
    if n > BigInt::one() {
        // a remaining cofactor is treated as prime; roots built from its
        // proper factors would be missed, leaving them in the cofactor
        primes.push((n, 1));
    }
    let mut out = vec![BigInt::one()];
    for (q, e) in primes {
        let mut next = Vec::new();
        for x in &out {
            let mut y = x.clone();
            for _ in 0..=e {
                next.push(y.clone());
                y *= &q;
            }
        }
        out = next;
    }
    out
}

/// Splits off the integer (or `F_p`) roots of a monic polynomial.
pub fn factor(f: &[BigInt], modulus: Option<u64>) -> Factorization {
    let mut f: Vec<BigInt> = f.to_vec();
    let mut roots: Vec<(BigInt, usize)> = Vec::new();
    let reduce = |v: &mut Vec<BigInt>| {
        if let Some(p) = modulus {
            let p = BigInt::from(p);
            v.iter_mut().for_each(|x| *x = x.mod_floor(&p));
        }
    };
    let candidates: Vec<BigInt> = match modulus {
        Some(p) => (0..p).map(BigInt::from).collect(),
        None => {
            let mut c = vec![BigInt::zero()];
            let mut f0 = f.clone();
            while f0.len() > 1 && f0[0].is_zero() {
                f0.remove(0);
            }
            for d in divisors(&f0[0]) {
                c.push(-d.clone());
                c.push(d);
            }
            c.sort();
            c.dedup();
            c
        }
    };
    for r in candidates {
        let mut mult = 0;
        while f.len() > 1 {
            let (q, mut rem) = divide_linear(&f, &r);
            if let Some(p) = modulus {
                rem = rem.mod_floor(&BigInt::from(p));
            }
            if !rem.is_zero() {
                break;
            }
            f = q;
            reduce(&mut f);
            mult += 1;
        }
        if mult > 0 {
            roots.push((r, mult));
        }
    }
    Factorization { roots, rest: f, modulus }
}

/// `c_n x^n + … + c_0` with `x` as the variable.
pub fn format_poly(f: &[BigInt]) -> String {
    let mut s = String::new();
    for (i, c) in f.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let a = c.abs();
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push(if neg { '-' } else { '+' });
        }
        if i == 0 || !a.is_one() {
            s.push_str(&a.to_string());
        }
        match i {
            0 => {}
            1 => s.push('x'),
            _ => s.push_str(&format!("x^{i}")),
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (r, m) in &self.roots {
            let lin = if r.is_zero() {
                "x".to_string()
            } else {
                format!("({})", format_poly(&[-r, BigInt::one()]))
            };
            parts.push(if *m > 1 { format!("{lin}^{m}") } else { lin });
        }
        if self.rest.len() > 1 {
            parts.push(format!("({})", format_poly(&self.rest)));
        }
        if parts.is_empty() {
            parts.push("1".into());
        }
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlinalg::matrix::identity;
    use crate::foxhomology::z_cycle;
    use crate::symcoeffs::Poly2k;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn h1(spec: &str, k: usize, ring: RingSpec) -> H1Presentation {
        compute_h1(&spec.parse().unwrap(), k, ring).unwrap()
    }

    fn factored(h: &H1Presentation, op: &OperatorMatrix) -> String {
        let modulus = match h.ring() {
            RingSpec::PrimeField(p) => Some(p),
            _ => None,
        };
        factor(&op.charpoly(h.module()).unwrap(), modulus).to_string()
    }

    #[test]
    fn identity_operator() {
        let h = h1("gamma0:4", 1, RingSpec::Integers);
        let op = double_coset(&h, &h, &Mat2::identity()).unwrap();
        assert_eq!(op.cosets, 1);
        assert!(same_operator(h.module(), &op.matrix, &identity(&Integers, h.num_generators())));
    }

    #[test]
    fn inner_conjugation_is_trivial() {
        let h = h1("gamma0:3", 2, RingSpec::Integers);
        let g = ProjectiveMatrix::from_i64(4, 1, 3, 1).unwrap();
        assert!(h.table().contains(&g));
        let op = double_coset(&h, &h, g.rep()).unwrap();
        assert!(same_operator(h.module(), &op.matrix, &identity(&Integers, h.num_generators())));
    }

    #[test]
    fn coset_counts() {
        for (spec, p, expected) in [("gamma0:1", 2u64, 3usize), ("gamma0:1", 5, 6), ("gamma0:4", 2, 2), ("gamma1:5", 3, 4), ("gamma0:9", 3, 3)] {
            let h = h1(spec, 0, RingSpec::Integers);
            let dc = DoubleCoset::new(h.ind(), h.ind(), &Mat2::diag(1, p as i64)).unwrap();
            assert_eq!(dc.coset_count(), expected, "{spec} p={p}");
        }
    }

    #[test]
    fn transfer_is_multiplication_by_index() {
        let h = h1("gamma0:1", 0, RingSpec::Integers);
        let sub = h1("gamma0:2", 0, RingSpec::Integers);
        let pair = InductionPair::new(sub.ind().clone(), h.ind().clone()).unwrap();
        assert_eq!(pair.relative_index(), 3);
        for i in 0..h.num_generators() {
            let c = h.generator_cycle(i);
            let back = transfer_cor(&transfer_res(&c, &pair), &pair);
            let three: Vec<BigInt> = h.coords(&c).unwrap().iter().map(|x| x * 3).collect();
            assert!(h.coords_equal(&h.coords(&back).unwrap(), &three));
        }
    }

    #[test]
    fn classical_eigenvalues() {
        let h = h1("gamma0:1", 5, RingSpec::Rationals);
        assert_eq!(factored(&h, &hecke_t(&h, 2).unwrap()), "(x+24)^2*(x-2049)");
        let h = h1("gamma0:11", 0, RingSpec::Rationals);
        assert_eq!(factored(&h, &hecke_t(&h, 2).unwrap()), "(x+2)^2*(x-3)");
        // a_3 = −1 for conductor 11, Eisenstein 1 + 3
        assert_eq!(factored(&h, &hecke_t(&h, 3).unwrap()), "(x+1)^2*(x-4)");
    }

    #[test]
    fn eisenstein_u_p() {
        // weight 4 on Γ₀(2): U₂ eigenvalues 1 and 2³; weight 2 on Γ₀(11): a₁₁ = 1
        let h = h1("gamma0:2", 1, RingSpec::Rationals);
        assert_eq!(factored(&h, &hecke_u(&h, 2).unwrap()), "(x-1)*(x-8)");
        let h = h1("gamma0:11", 0, RingSpec::Rationals);
        assert_eq!(factored(&h, &hecke_u(&h, 11).unwrap()), "(x-1)^3");
    }

    #[test]
    fn dual_routes_agree() {
        for (spec, k, p) in [("gamma0:1", 1usize, 2i64), ("gamma1:4", 1, 3), ("gamma0:3", 1, 3)] {
            let h = h1(spec, k, RingSpec::Integers);
            let dc = DoubleCoset::new(h.ind(), h.ind(), &Mat2::diag(1, p)).unwrap();
            for i in 0..h.num_generators() {
                let c = h.generator_cycle(i);
                let a = h.coords(&dc.apply(&c, None).unwrap()).unwrap();
                let b = h.coords(&dc.apply_via_gamma2(&c, None).unwrap()).unwrap();
                assert!(h.coords_equal(&a, &b), "{spec}");
            }
        }
    }

    #[test]
    fn wrong_divisibility() {
        let h = h1("gamma0:4", 0, RingSpec::Integers);
        assert!(matches!(hecke_t(&h, 2), Err(Error::WrongDivisibility(_))));
        assert!(matches!(hecke_u(&h, 3), Err(Error::WrongDivisibility(_))));
        assert!(matches!(diamond(&h, 2), Err(Error::WrongDivisibility(_))));
        assert!(matches!(pi_phi_v(&h, 2), Err(Error::WrongDivisibility(_))));
    }

    #[test]
    fn beta_choice() {
        assert_eq!(beta_matrix(1, 5).unwrap(), Mat2::from_i64(0, -1, 1, 5));
        let b = beta_matrix(7, 3).unwrap();
        assert_eq!(b, Mat2::from_i64(5, 2, 7, 3));
        assert_eq!(b.det(), BigInt::one());
    }

    #[test]
    fn diamonds() {
        let h = h1("gamma1:5", 1, RingSpec::Integers);
        let one = diamond(&h, 1).unwrap();
        let id = identity(&Integers, h.num_generators());
        assert!(same_operator(h.module(), &one.matrix, &id));
        // ⟨2⟩⁴ = ⟨16⟩ = ⟨1⟩
        let d2 = diamond(&h, 2).unwrap().matrix;
        let d4 = compose_ops(h.module(), &compose_ops(h.module(), &d2, &d2), &compose_ops(h.module(), &d2, &d2));
        assert!(same_operator(h.module(), &d4, &id));
        // independent of β: T·β also has lower-right entry 2
        let beta = beta_matrix(5, 2).unwrap();
        let other = Mat2::t().mul(&beta).mul(&Mat2::from_i64(1, 0, 5, 1));
        assert!(same_operator(h.module(), &diamond_with(&h, &other).unwrap().matrix, &d2));
        let g = h1("gamma0:5", 1, RingSpec::Integers);
        assert!(same_operator(g.module(), &diamond(&g, 2).unwrap().matrix, &identity(&Integers, g.num_generators())));
    }

    #[test]
    fn commutativity() {
        let h = h1("gamma0:11", 0, RingSpec::Rationals);
        let t2 = hecke_t(&h, 2).unwrap().matrix;
        let t3 = hecke_t(&h, 3).unwrap().matrix;
        assert_eq!(compose_ops(h.module(), &t2, &t3), compose_ops(h.module(), &t3, &t2));
        let h = h1("gamma1:5", 1, RingSpec::Integers);
        let t2 = hecke_t(&h, 2).unwrap().matrix;
        let d2 = diamond(&h, 2).unwrap().matrix;
        assert!(same_operator(h.module(), &compose_ops(h.module(), &t2, &d2), &compose_ops(h.module(), &d2, &t2)));
    }

    #[test]
    fn boundary_cycle_identity_at_level_four() {
        // T₃ 𝔷(T) = (1 + 3³⟨3⟩) 𝔷(T) on Γ₁(4), k = 1
        let h = h1("gamma1:4", 1, RingSpec::Integers);
        let t = ProjectiveMatrix::t();
        let z = h.coords(&z_cycle(h.ind(), &t).unwrap()).unwrap();
        let t3 = hecke_t(&h, 3).unwrap().matrix;
        let d3 = diamond(&h, 3).unwrap().matrix;
        let lhs = crate::exactlinalg::matrix::mat_vec(&Integers, &t3, &z);
        let dz = crate::exactlinalg::matrix::mat_vec(&Integers, &d3, &z);
        let rhs: Vec<BigInt> = z.iter().zip(&dz).map(|(a, b)| a + b * 27).collect();
        assert!(h.coords_equal(&lhs, &rhs));
    }

    #[test]
    fn conj_star_on_translation() {
        // α = diag(1,p) sends (T^p − 1)⊗X₂^{2k} to (T − 1)⊗X₂^{2k}
        let h = h1("gamma0:1", 1, RingSpec::Integers);
        let alpha = Mat2::diag(1, 3);
        let x2 = Poly2k::monomial(1, 2);
        let tp = ProjectiveMatrix::t().pow(3);
        let g = GroupChain { terms: vec![(tp, x2.clone())] };
        let img = conj_group_chain(&g, &alpha, h.table()).unwrap();
        assert_eq!(img.terms, vec![(ProjectiveMatrix::t(), act(&alpha, &x2).unwrap())]);
        let bad = GroupChain { terms: vec![(ProjectiveMatrix::t(), x2)] };
        assert!(matches!(conj_group_chain(&bad, &alpha, h.table()), Err(Error::ConjugateLeavesGroup(_))));
    }

    #[test]
    fn degeneracy_identities() {
        for p in [2u64, 3, 5] {
            let h = h1("gamma0:1", 1, RingSpec::PrimeField(p));
            let ops = pi_phi_v(&h, p).unwrap();
            let m = h.module();
            let mp = ops.prime.module();
            let zero = Matrix::filled(mp.num_generators(), mp.num_generators(), BigInt::zero());
            assert!(same_operator(m, &compose_ops(m, &ops.pi.matrix, &ops.phi.matrix), &ops.t_p.matrix));
            let phipi = compose_ops(mp, &ops.phi.matrix, &ops.pi.matrix);
            assert!(same_operator(mp, &phipi, &add_ops(&ops.u_p.matrix, &ops.v.matrix)));
            assert!(same_operator(mp, &compose_ops(mp, &ops.v.matrix, &ops.v.matrix), &zero));
            assert!(same_operator(mp, &compose_ops(mp, &ops.v.matrix, &ops.u_p.matrix), &zero));
            // U_p ∘ V does not vanish: diag(1,p)·β·diag(p,1) ∉ pM₂(Z)
            assert!(!same_operator(mp, &compose_ops(mp, &ops.u_p.matrix, &ops.v.matrix), &zero));
        }
    }

    #[test]
    fn factor_examples() {
        let f = ints(&[-2049 * 576, 576 - 48 * 2049, 48 - 2049, 1]);
        assert_eq!(factor(&f, None).to_string(), "(x+24)^2*(x-2049)");
        assert_eq!(factor(&ints(&[1, 0, 1]), None).to_string(), "(x^2+1)");
        assert_eq!(factor(&ints(&[0, 0, -3, 1]), None).to_string(), "x^2*(x-3)");
        assert_eq!(factor(&ints(&[1, 0, 1]), Some(2)).to_string(), "(x-1)^2");
        assert_eq!(format_poly(&ints(&[-1, 0, 2, -1])), "-x^3+2x^2-1");
    }

    fn det(a: &[Vec<i64>]) -> i64 {
        // Leibniz oracle
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = 0i64;
        loop {
            let mut sign = 1;
            for i in 0..n {
                for j in i + 1..n {
                    if perm[i] > perm[j] {
                        sign = -sign;
                    }
                }
            }
            total += sign * (0..n).map(|i| a[i][perm[i]]).product::<i64>();
            // next permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
            let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        total
    }

    proptest! {
        #[test]
        fn charpoly_matches_determinant(n in 1usize..5, entries in proptest::collection::vec(-5i64..6, 16), x in -4i64..5) {
            let rows: Vec<Vec<i64>> = (0..n).map(|i| entries[i * 4..i * 4 + n].to_vec()).collect();
            let a = IntMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&e| BigInt::from(e)).collect()).collect());
            let c = charpoly(&a);
            let value: BigInt = c.iter().rev().fold(BigInt::zero(), |acc, ci| acc * x + ci);
            let shifted: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if i == j { x - rows[i][j] } else { -rows[i][j] }).collect()).collect();
            prop_assert_eq!(value, BigInt::from(det(&shifted)));
        }

        #[test]
        fn factor_recovers_roots(roots in proptest::collection::vec(-30i64..30, 1..5)) {
            let mut f = vec![BigInt::one()];
            for r in &roots {
                let mut g = vec![BigInt::zero(); f.len() + 1];
                for (i, c) in f.iter().enumerate() {
                    g[i + 1] += c;
                    g[i] -= c * r;
                }
                f = g;
            }
            let fac = factor(&f, None);
            prop_assert_eq!(fac.rest.len(), 1);
            let mut got: Vec<i64> = fac.roots.iter().flat_map(|(r, m)| std::iter::repeat_n(i64::try_from(r).unwrap(), *m)).collect();
            let mut want = roots.clone();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }
    }
}
