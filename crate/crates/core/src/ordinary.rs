//! Ordinary projectors, spans of hyperbolic cycles and the checks built on
//! them: the main-theorem verifier, the `H₁/𝔷` quotient report and the
//! mod-p reduction bridge.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cosets::{CosetTable, SubgroupSpec};
use crate::error::{Error, Result};
use crate::exactlinalg::matrix::{identity, mat_mul, mat_vec, IntMatrix, Matrix};
use crate::exactlinalg::module::{induced_endomorphism, induced_map, FgModule};
use crate::exactlinalg::normal_form::LatticeBasis;
use crate::exactlinalg::ring::{is_prime, prime_divisors, valuation, Integers, RingSpec};
use crate::foxhomology::{compute_h1, Chain1, H1Presentation};
use crate::heckeops::{hecke_at, OperatorMatrix};
use crate::psl2words::{Class, ProjectiveMatrix};

/// Enumeration and saturation limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_word_len: usize,
    pub max_generators: usize,
    /// Stop after this many consecutive new cycle images leave the span unchanged.
    pub patience: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_word_len: 6, max_generators: 2000, patience: 25, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Verified,
    Falsified,
    Inconclusive,
}

impl Verdict {
    /// Process exit code for the verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Falsified => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

fn reduce(x: BigInt, m: &BigInt) -> BigInt {
    if m.is_zero() {
        x
    } else {
        x.mod_floor(m)
    }
}

fn reduce_rows(a: &mut IntMatrix, moduli: &[BigInt]) {
    for (i, m) in moduli.iter().enumerate() {
        for x in a.row_mut(i) {
            *x = reduce(std::mem::take(x), m);
        }
    }
}

fn mul_mod(a: &IntMatrix, b: &IntMatrix, moduli: &[BigInt]) -> IntMatrix {
    let mut c = mat_mul(&Integers, a, b);
    reduce_rows(&mut c, moduli);
    c
}

fn pow_mod(a: &IntMatrix, e: &BigInt, moduli: &[BigInt]) -> IntMatrix {
    let mut result = identity(&Integers, a.rows());
    reduce_rows(&mut result, moduli);
    let mut base = a.clone();
    reduce_rows(&mut base, moduli);
    let mut e = e.clone();
    let two = BigInt::from(2);
    while !e.is_zero() {
        if e.is_odd() {
            result = mul_mod(&result, &base, moduli);
        }
        e /= &two;
        if !e.is_zero() {
            base = mul_mod(&base, &base, moduli);
        }
    }
    result
}

fn vec_mod(v: Vec<BigInt>, moduli: &[BigInt]) -> Vec<BigInt> {
    v.into_iter().zip(moduli).map(|(x, m)| reduce(x, m)).collect()
}

/// A submodule of `⊕ Z/m_i` (with `m_i = 0` for free summands), kept as the
/// lattice `L ⊆ Z^r` of its lifts together with all relations.
#[derive(Clone, Debug)]
pub struct SpanLattice {
    moduli: Vec<BigInt>,
    lattice: LatticeBasis<Integers>,
}

impl SpanLattice {
    /// The zero submodule.
    pub fn new(moduli: &[BigInt]) -> Self {
        let r = moduli.len();
        let cols: Vec<Vec<BigInt>> = moduli
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(i, m)| {
                let mut v = vec![BigInt::zero(); r];
                v[i] = m.clone();
                v
            })
            .collect();
        Self { moduli: moduli.to_vec(), lattice: LatticeBasis::from_columns(&Integers, &Matrix::from_columns(r, &cols, BigInt::zero())) }
    }

    pub fn from_vectors(moduli: &[BigInt], vs: &[Vec<BigInt>]) -> Self {
        let mut s = Self::new(moduli);
        s.extend(vs);
        s
    }

    fn extend(&mut self, vs: &[Vec<BigInt>]) {
        let mut cols = self.lattice.basis_columns().columns();
        cols.extend(vs.iter().cloned());
        self.lattice = LatticeBasis::from_columns(&Integers, &Matrix::from_columns(self.moduli.len(), &cols, BigInt::zero()));
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.lattice.contains(v)
    }

    /// Adds `v`; returns whether the span grew.
    pub fn add(&mut self, v: &[BigInt]) -> bool {
        if self.contains(v) {
            return false;
        }
        self.extend(&[v.to_vec()]);
        true
    }

    pub fn same(&self, other: &SpanLattice) -> bool {
        self.lattice.same_lattice(&other.lattice)
    }

    pub fn contains_span(&self, other: &SpanLattice) -> bool {
        (0..other.lattice.rank()).all(|i| self.contains(&other.lattice.basis_vector(i)))
    }

    pub fn moduli(&self) -> &[BigInt] {
        &self.moduli
    }

    /// Lifts spanning the submodule (relations included).
    pub fn basis_columns(&self) -> IntMatrix {
        self.lattice.basis_columns()
    }

    /// Structure of the submodule itself.
    pub fn structure(&self) -> FgModule {
        let r = self.moduli.len();
        let rel = SpanLattice::new(&self.moduli).basis_columns();
        FgModule::subquotient(&self.basis_columns(), &pad(&rel, r), RingSpec::Integers).expect("relations lie in the span")
    }

    /// Invariant factors of the submodule (0 for a free factor).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.structure().invariant_factors().to_vec()
    }

    /// Minimal number of generators.
    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }

    /// Structure of the ambient module modulo the submodule.
    pub fn quotient(&self) -> FgModule {
        let r = self.moduli.len();
        FgModule::subquotient(&identity(&Integers, r), &pad(&self.basis_columns(), r), RingSpec::Integers).expect("identity spans everything")
    }
}

fn pad(m: &IntMatrix, rows: usize) -> IntMatrix {
    if m.cols() == 0 {
        Matrix::filled(rows, 0, BigInt::zero())
    } else {
        m.clone()
    }
}

/// `e = lim A^{m!}` on a finite module, with its image and the data of the
/// splitting `H = eH ⊕ (1−e)H`.
#[derive(Clone, Debug)]
pub struct OrdinaryDecomposition {
    pub idempotent: IntMatrix,
    /// The exponent `E` with `e = A^E`.
    pub exponent: BigInt,
    pub ordinary: SpanLattice,
    /// Minimal number of generators of `eH`.
    pub ordinary_rank: usize,
    /// Minimal number of generators of `(1−e)H`.
    pub nilpotent_rank: usize,
    /// Least `n` with `AⁿH = Aⁿ⁺¹H`.
    pub stabilization_exponent: usize,
}

/// The ordinary idempotent of `A` on `⊕ Z/m_i`, all `m_i` powers of the
/// prime `p`.
///
/// `e = A^E` with `E = lcm_{f ≤ r}(p^f − 1) · p^t`: on the part where `A`
/// is invertible its order divides `E`, and on the nilpotent part
/// `A^{rM} = 0 ≤ E`, where `r` is the number of generators and `p^M` the
/// exponent.
pub fn ordinary_idempotent(a: &IntMatrix, moduli: &[BigInt], p: u64) -> Result<OrdinaryDecomposition> {
    let r = moduli.len();
    let pb = BigInt::from(p);
    let mut m_exp = 0u32;
    for m in moduli {
        if m.is_zero() || m.is_one() {
            return Err(Error::InvalidInput("ordinary idempotent needs a finite module".into()));
        }
        let v = valuation(m, p);
        if pb.pow(v) != *m {
            return Err(Error::InvalidInput(format!("modulus {m} is not a power of {p}")));
        }
        m_exp = m_exp.max(v);
    }
    let mut lcm = BigInt::one();
    for f in 1..=r.max(1) as u32 {
        lcm = lcm.lcm(&(pb.pow(f) - 1u32));
    }
    let bound = (r.max(1) as u64) * m_exp.max(1) as u64;
    let mut t = m_exp;
    while BigInt::from(p).pow(t - m_exp) < BigInt::from(bound) {
        t += 1;
    }
    let exponent = lcm * pb.pow(t + 1);
    let e = pow_mod(a, &exponent, moduli);
    if mul_mod(&e, &e, moduli) != e || mul_mod(&e, a, moduli) != mul_mod(a, &e, moduli) {
        return Err(Error::NotStable("A^E is not an idempotent commuting with A".into()));
    }
    let ordinary = SpanLattice::from_vectors(moduli, &e.columns());
    let mut one_minus = identity(&Integers, r);
    for i in 0..r {
        for j in 0..r {
            one_minus[(i, j)] -= &e[(i, j)];
        }
    }
    reduce_rows(&mut one_minus, moduli);
    let nil = SpanLattice::from_vectors(moduli, &one_minus.columns());
    // stabilization of the images AⁿH
    let mut power = identity(&Integers, r);
    let mut image = SpanLattice::from_vectors(moduli, &power.columns());
    let mut n = 0;
    loop {
        power = mul_mod(a, &power, moduli);
        let next = SpanLattice::from_vectors(moduli, &power.columns());
        if next.same(&image) {
            break;
        }
        image = next;
        n += 1;
    }
    Ok(OrdinaryDecomposition {
        ordinary_rank: ordinary.rank(),
        nilpotent_rank: nil.rank(),
        idempotent: e,
        exponent,
        ordinary,
        stabilization_exponent: n,
    })
}

/// `H₁` over `Z/p^M` or `F_p` with the operator defining `e_p` and its
/// decomposition.
#[derive(Clone, Debug)]
pub struct OrdinaryPart {
    pub homology: H1Presentation,
    pub operator: OperatorMatrix,
    pub decomposition: OrdinaryDecomposition,
}

impl OrdinaryPart {
    pub fn rank(&self) -> usize {
        self.decomposition.ordinary_rank
    }

    /// `e · x` on homology coordinates.
    pub fn project(&self, coords: &[BigInt]) -> Vec<BigInt> {
        vec_mod(mat_vec(&Integers, &self.decomposition.idempotent, coords), self.homology.module().moduli())
    }
}

/// The ordinary part of a finite presentation (over `Z/p^M` or `F_p`).
pub fn ordinary_of(h: &H1Presentation) -> Result<OrdinaryPart> {
    let p = h.ring().prime().ok_or_else(|| Error::InvalidInput(format!("no ordinary part over {}", h.ring())))?;
    let operator = hecke_at(h, p)?;
    let decomposition = ordinary_idempotent(&operator.matrix, h.module().moduli(), p)?;
    Ok(OrdinaryPart { homology: h.clone(), operator, decomposition })
}

/// `H₁^ord` of `H₁(Γ̄, 𝒱_{2k}) ⊗ Z/p^M`.
pub fn ordinary_part(spec: &SubgroupSpec, k: usize, p: u64, m: u32) -> Result<OrdinaryPart> {
    if !is_prime(p) || m == 0 {
        return Err(Error::InvalidInput(format!("need a prime p and M ≥ 1, got p = {p}, M = {m}")));
    }
    let hz = compute_h1(spec, k, RingSpec::Integers)?;
    ordinary_of(&hz.with_ring(RingSpec::PrimePowerRing(p, m))?)
}

/// Alphabet for [`enumerate_hyperbolic`]: the Schreier generators and their
/// inverses, plus all two-letter products when there are at most 24 of
/// them.
fn alphabet(table: &CosetTable, rng: &mut ChaCha8Rng) -> Vec<ProjectiveMatrix> {
    let mut seen = HashSet::new();
    let mut base = Vec::new();
    for g in table.schreier_generators() {
        for x in [g.inverse(), g] {
            if seen.insert(x.clone()) {
                base.push(x);
            }
        }
    }
    let mut out = base.clone();
    if base.len() <= 24 {
        for x in &base {
            for y in &base {
                let xy = x.mul(y);
                if !xy.is_identity() && seen.insert(xy.clone()) {
                    out.push(xy);
                }
            }
        }
    }
    out.shuffle(rng);
    out
}

/// Distinct hyperbolic elements of the group of `table`, from words of
/// length `≤ max_word_len` over a seeded alphabet, shortest first.
///
/// With `avoid` set to `p`, elements of `Γ(p)` are skipped.
pub fn enumerate_hyperbolic(table: &CosetTable, budget: &Budget, avoid: Option<u64>) -> Vec<ProjectiveMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let letters = alphabet(table, &mut rng);
    let mut out = Vec::new();
    if letters.is_empty() || budget.max_generators == 0 {
        return out;
    }
    let cap = 50 * budget.max_generators.max(1);
    let mut seen: HashSet<ProjectiveMatrix> = HashSet::new();
    seen.insert(ProjectiveMatrix::identity());
    let mut frontier = vec![ProjectiveMatrix::identity()];
    let keep = |g: &ProjectiveMatrix| {
        g.classify() == Class::Hyperbolic && avoid.is_none_or(|p| !in_principal(g, p))
    };
    for _ in 0..budget.max_word_len {
        let offsets: Vec<usize> = frontier.iter().map(|_| rng.gen_range(0..letters.len())).collect();
        let mut next = Vec::new();
        // breadth across prefixes before depth along the alphabet
        'outer: for i in 0..letters.len() {
            for (w, off) in frontier.iter().zip(&offsets) {
                let g = w.mul(&letters[(i + off) % letters.len()]);
                if !seen.insert(g.clone()) {
                    continue;
                }
                if keep(&g) {
                    out.push(g.clone());
                    if out.len() >= budget.max_generators {
                        return out;
                    }
                }
                next.push(g);
                if seen.len() >= cap {
                    break 'outer;
                }
            }
        }
        next.shuffle(&mut rng);
        frontier = next;
        if seen.len() >= cap {
            break;
        }
    }
    out
}

fn in_principal(g: &ProjectiveMatrix, p: u64) -> bool {
    let m = g.rep();
    let p = BigInt::from(p);
    let zero = |x: &BigInt| x.mod_floor(&p).is_zero();
    zero(&m.b) && zero(&m.c) && ((&m.a - 1u32).mod_floor(&p).is_zero() || (&m.a + 1u32).mod_floor(&p).is_zero())
}

/// Outcome of [`verify_main_theorem`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanReport {
    pub verdict: Verdict,
    pub group: String,
    pub k: usize,
    pub p: u64,
    #[serde(rename = "M")]
    pub m: u32,
    pub seed: u64,
    pub budget: Budget,
    pub generators_tried: usize,
    pub ordinary_rank: usize,
    pub span_rank: usize,
    /// Invariant factors of the ordinary part (as a finite abelian group).
    pub invariant_factors: Vec<String>,
    /// Minimal generator count of the ordinary part over `Z/p^{M+1}`.
    pub ordinary_rank_next_m: usize,
    /// Cycles whose ordinary projection left the ordinary part.
    pub violations: usize,
}

const BATCH: usize = 32;

/// Saturates `{e·𝔷(γ)}` inside `eH` for hyperbolic `γ` and compares.
pub fn verify_main_theorem(spec: &SubgroupSpec, k: usize, p: u64, m: u32, budget: &Budget) -> Result<SpanReport> {
    let ord = ordinary_part(spec, k, p, m)?;
    let next = ordinary_part(spec, k, p, m + 1)?;
    let h = &ord.homology;
    let moduli = h.module().moduli().to_vec();
    let target = &ord.decomposition.ordinary;
    let mut span = SpanLattice::new(&moduli);
    let mut tried = 0;
    let mut idle = 0;
    let mut violations = 0;
    let mut seen = HashSet::new();
    let mut reached = span.same(target);
    if !reached {
        let gammas = enumerate_hyperbolic(h.table(), budget, None);
        'outer: for chunk in gammas.chunks(BATCH) {
            let images = chunk
                .par_iter()
                .map(|g| h.z_coords(g).map(|z| ord.project(&z)))
                .collect::<Result<Vec<_>>>()?;
            for v in images {
                tried += 1;
                if !target.contains(&v) {
                    violations += 1;
                }
                if span.add(&v) {
                    seen.insert(v);
                    idle = 0;
                    if span.same(target) {
                        reached = true;
                        break 'outer;
                    }
                } else if seen.insert(v) {
                    idle += 1;
                    if idle >= budget.patience {
                        break 'outer;
                    }
                }
            }
        }
    }
    let verdict = if violations > 0 {
        Verdict::Falsified
    } else if reached {
        Verdict::Verified
    } else {
        Verdict::Inconclusive
    };
    Ok(SpanReport {
        verdict,
        group: spec.to_string(),
        k,
        p,
        m,
        seed: budget.seed,
        budget: *budget,
        generators_tried: tried,
        ordinary_rank: ord.rank(),
        span_rank: span.rank(),
        invariant_factors: target.invariant_factors().iter().map(|d| d.to_string()).collect(),
        ordinary_rank_next_m: next.rank(),
        violations,
    })
}

/// Non-ordinarity of the quotient at one prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeCheck {
    pub q: u64,
    /// Minimal generator count of the ordinary part of the `q`-part.
    pub ordinary_rank: usize,
    pub verdict: Verdict,
    pub note: Option<String>,
}

/// Structure of `H₁/𝔷` over `Z` and its non-ordinarity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuotientReport {
    pub verdict: Verdict,
    pub group: String,
    pub k: usize,
    pub seed: u64,
    pub budget: Budget,
    pub generators_tried: usize,
    pub homology_invariant_factors: Vec<String>,
    pub span_invariant_factors: Vec<String>,
    pub invariant_factors: Vec<String>,
    pub free_rank: usize,
    pub order: Option<String>,
    pub primes: Vec<PrimeCheck>,
}

/// Saturates the integral span of hyperbolic cycles.
pub fn hyperbolic_span(h: &H1Presentation, budget: &Budget) -> Result<(SpanLattice, usize)> {
    let moduli = h.module().moduli().to_vec();
    let mut span = SpanLattice::new(&moduli);
    let mut tried = 0;
    let mut idle = 0;
    let mut seen = HashSet::new();
    let gammas = enumerate_hyperbolic(h.table(), budget, None);
    'outer: for chunk in gammas.chunks(BATCH) {
        let images = chunk.par_iter().map(|g| h.z_coords(g)).collect::<Result<Vec<_>>>()?;
        for v in images {
            tried += 1;
            if span.add(&v) {
                seen.insert(v);
                idle = 0;
            } else if seen.insert(v) {
                idle += 1;
                if idle >= budget.patience {
                    break 'outer;
                }
            }
        }
    }
    Ok((span, tried))
}

/// `q`-part of `H/S` as a module over `Z/q^v`, with `A` induced on it.
fn quotient_check(h: &H1Presentation, span: &SpanLattice, q: u64, v: u32) -> Result<PrimeCheck> {
    let a = hecke_at(h, q)?;
    let quotient = span.quotient().tensor_prime_power(q, v);
    let moduli = h.module().moduli().to_vec();
    let op = match induced_endomorphism(|x| Ok(vec_mod(mat_vec(&Integers, &a.matrix, x), &moduli)), &quotient) {
        Ok(op) => op,
        Err(Error::NotStable(why)) => {
            return Ok(PrimeCheck { q, ordinary_rank: 0, verdict: Verdict::Inconclusive, note: Some(why) });
        }
        Err(e) => return Err(e),
    };
    let d = ordinary_idempotent(&op, quotient.moduli(), q)?;
    let verdict = if d.ordinary_rank == 0 { Verdict::Verified } else { Verdict::Inconclusive };
    let note = (d.ordinary_rank > 0).then(|| "ordinary part of the computed quotient is nonzero; the span may be incomplete".to_string());
    Ok(PrimeCheck { q, ordinary_rank: d.ordinary_rank, verdict, note })
}

pub fn cycle_quotient_report(spec: &SubgroupSpec, k: usize, budget: &Budget) -> Result<QuotientReport> {
    let h = compute_h1(spec, k, RingSpec::Integers)?;
    let (span, tried) = hyperbolic_span(&h, budget)?;
    let quotient = span.quotient();
    let factors = quotient.invariant_factors().to_vec();
    let free_rank = quotient.free_rank();
    let strings = |v: &[BigInt]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>();
    let mut primes = Vec::new();
    let mut order = None;
    if free_rank == 0 {
        let n: BigInt = factors.iter().product();
        for q in prime_divisors(&n) {
            let q64 = q.to_u64().ok_or_else(|| Error::InvalidInput(format!("prime {q} too large")))?;
            primes.push(quotient_check(&h, &span, q64, valuation(&n, q64))?);
        }
        order = Some(n.to_string());
    }
    let verdict = if free_rank > 0 || primes.iter().any(|c| c.verdict != Verdict::Verified) {
        Verdict::Inconclusive
    } else {
        Verdict::Verified
    };
    Ok(QuotientReport {
        verdict,
        group: spec.to_string(),
        k,
        seed: budget.seed,
        budget: *budget,
        generators_tried: tried,
        homology_invariant_factors: strings(h.module().invariant_factors()),
        span_invariant_factors: strings(&span.invariant_factors()),
        invariant_factors: strings(&factors),
        free_rank,
        order,
        primes,
    })
}

/// The chain map induced by `j: b ↦ b·X₂^{2k}` from weight 0 to weight `2k`.
pub fn j_chain(c: &Chain1, k: usize) -> Chain1 {
    let lift = |v: &[BigInt]| {
        let mut out = Vec::with_capacity(v.len() * (2 * k + 1));
        for b in v {
            out.extend(std::iter::repeat_n(BigInt::zero(), 2 * k));
            out.push(b.clone());
        }
        out
    };
    Chain1 { s: lift(&c.s), u: lift(&c.u) }
}

/// Outcome of [`mod_p_bridge`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BridgeReport {
    pub verdict: Verdict,
    pub level: u64,
    pub p: u64,
    pub k: usize,
    pub ordinary_dim_weight0: usize,
    pub ordinary_dim_weight2k: usize,
    /// `j_*` commutes with `U_p`.
    pub equivariant: bool,
    /// `j_*(H₁^ord(F_p)) = H₁^ord(𝒱_{2k})`.
    pub image_is_ordinary: bool,
    /// Hyperbolic elements outside `Γ(p)` tested for the unit-scaling claim.
    pub cycles_tested: usize,
    pub cycles_failed: usize,
}

/// The reduction map `j_*` on `Γ₁(N)` over `F_p` for `p | N`.
pub fn mod_p_bridge(level: u64, p: u64, k: usize, budget: &Budget) -> Result<BridgeReport> {
    if !is_prime(p) || !level.is_multiple_of(p) {
        return Err(Error::WrongDivisibility(format!("the bridge needs a prime p | N, got p = {p}, N = {level}")));
    }
    let spec = SubgroupSpec::gamma1(level)?;
    let ring = RingSpec::PrimeField(p);
    let h0 = compute_h1(&spec, 0, ring)?;
    let hk = compute_h1(&spec, k, ring)?;
    let o0 = ordinary_of(&h0)?;
    let ok = ordinary_of(&hk)?;
    let j = induced_map(h0.module(), hk.module(), |v| Ok(j_chain(&Chain1::from_flat(v), k).flatten()))?;
    let moduli_k = hk.module().moduli().to_vec();
    let jm = |x: &[BigInt]| vec_mod(mat_vec(&Integers, &j, x), &moduli_k);
    let lhs = mul_mod(&j, &o0.operator.matrix, &moduli_k);
    let rhs = mul_mod(&ok.operator.matrix, &j, &moduli_k);
    let equivariant = lhs == rhs;
    let image: Vec<Vec<BigInt>> = o0.decomposition.idempotent.columns().iter().map(|c| jm(c)).collect();
    let image = SpanLattice::from_vectors(&moduli_k, &image);
    let image_is_ordinary = image.same(&ok.decomposition.ordinary);
    let pb = BigInt::from(p);
    let mut tested = 0;
    let mut failed = 0;
    for g in enumerate_hyperbolic(h0.table(), budget, Some(p)) {
        tested += 1;
        let z0 = h0.z_coords(&g)?;
        let zk = hk.z_coords(&g)?;
        // Q_γ ≡ q₀₂·X₂² mod p, so j(1) = q₀₂^{−k}·Q_γ^k
        let q02 = crate::psl2words::quadratic_form(&g)?.q02;
        let inv = q02.mod_floor(&pb).modpow(&(&pb - 2u32), &pb);
        let lambda = inv.modpow(&BigInt::from(k), &pb);
        let scaled = vec_mod(zk.iter().map(|x| x * &lambda).collect(), &moduli_k);
        let projected = |x: &[BigInt]| ok.project(x);
        if jm(&z0) != scaled || jm(&o0.project(&z0)) != projected(&scaled) {
            failed += 1;
        }
    }
    let dims_agree = o0.rank() == ok.rank();
    let verdict = if dims_agree && equivariant && image_is_ordinary && failed == 0 { Verdict::Verified } else { Verdict::Falsified };
    Ok(BridgeReport {
        verdict,
        level,
        p,
        k,
        ordinary_dim_weight0: o0.rank(),
        ordinary_dim_weight2k: ok.rank(),
        equivariant,
        image_is_ordinary,
        cycles_tested: tested,
        cycles_failed: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn mat(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64_rows(rows)
    }

    /// `lim A^{m!}` by literal iteration until the power stabilizes.
    fn factorial_limit(a: &IntMatrix, moduli: &[BigInt]) -> IntMatrix {
        let mut b = a.clone();
        reduce_rows(&mut b, moduli);
        let mut m = 1u32;
        loop {
            m += 1;
            let next = pow_mod(&b, &BigInt::from(m), moduli);
            if next == b && mul_mod(&b, &b, moduli) == b {
                return b;
            }
            b = next;
            assert!(m < 200, "no stabilization");
        }
    }

    #[test]
    fn idempotent_examples() {
        let moduli = ints(&[9, 9]);
        let inv = mat(&[&[2, 1], &[1, 1]]);
        assert_eq!(ordinary_idempotent(&inv, &moduli, 3).unwrap().idempotent, identity(&Integers, 2));
        let zero = mat(&[&[0, 0], &[0, 0]]);
        let d = ordinary_idempotent(&zero, &moduli, 3).unwrap();
        assert_eq!(d.idempotent, zero);
        assert_eq!(d.ordinary_rank, 0);
        assert_eq!(d.nilpotent_rank, 2);
        let a = mat(&[&[1, 0], &[0, 3]]);
        let d = ordinary_idempotent(&a, &moduli, 3).unwrap();
        assert_eq!(d.idempotent, mat(&[&[1, 0], &[0, 0]]));
        assert_eq!(d.idempotent, factorial_limit(&a, &moduli));
        assert_eq!(d.stabilization_exponent, 2);
        assert!(ordinary_idempotent(&a, &ints(&[9, 0]), 3).is_err());
    }

    fn endomorphism(p: u64) -> impl Strategy<Value = (Vec<BigInt>, IntMatrix)> {
        (1usize..5).prop_flat_map(move |r| {
            (proptest::collection::vec(1u32..4, r), proptest::collection::vec(0i64..1000, r * r)).prop_map(move |(es, raw)| {
                let moduli: Vec<BigInt> = es.iter().map(|&e| BigInt::from(p).pow(e)).collect();
                let mut a = Matrix::filled(r, r, BigInt::zero());
                for i in 0..r {
                    for j in 0..r {
                        // Z/p^{e_j} → Z/p^{e_i} needs p^{e_i − e_j} | a_ij
                        let shift = es[i].saturating_sub(es[j]);
                        a[(i, j)] = BigInt::from(raw[i * r + j]) * BigInt::from(p).pow(shift);
                    }
                }
                reduce_rows(&mut a, &moduli);
                (moduli, a)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn idempotent_properties((moduli, a) in endomorphism(2).boxed().prop_union(endomorphism(3).boxed())) {
            let p = if (&moduli[0] % 2u32).is_zero() { 2 } else { 3 };
            let d = ordinary_idempotent(&a, &moduli, p).unwrap();
            let e = &d.idempotent;
            prop_assert_eq!(&mul_mod(e, e, &moduli), e);
            prop_assert_eq!(mul_mod(e, &a, &moduli), mul_mod(&a, e, &moduli));
            prop_assert_eq!(e, &factorial_limit(&a, &moduli));
            // H = eH ⊕ (1−e)H: orders multiply to |H|
            let r = moduli.len();
            let mut f = identity(&Integers, r);
            for i in 0..r { for j in 0..r { f[(i, j)] -= &e[(i, j)]; } }
            reduce_rows(&mut f, &moduli);
            let order = |s: &SpanLattice| -> BigInt { s.invariant_factors().iter().product() };
            let eh = SpanLattice::from_vectors(&moduli, &e.columns());
            let nh = SpanLattice::from_vectors(&moduli, &f.columns());
            let total: BigInt = moduli.iter().product();
            prop_assert_eq!(order(&eh) * order(&nh), total);
            // image(e) is the stable image of A
            let stable = pow_mod(&a, &BigInt::from(d.stabilization_exponent), &moduli);
            prop_assert!(SpanLattice::from_vectors(&moduli, &stable.columns()).same(&eh));
        }
    }

    #[test]
    fn level_one_ordinary() {
        let level1 = SubgroupSpec::gamma0(1).unwrap();
        assert_eq!(ordinary_part(&level1, 5, 11, 1).unwrap().rank(), 3);
        for p in [5u64, 7, 11] {
            assert!(ordinary_part(&level1, 0, p, 2).unwrap().homology.module().is_zero());
        }
        // the mod-p rank does not depend on M
        for (k, p) in [(5usize, 11u64), (1, 2), (3, 3)] {
            let a = ordinary_part(&level1, k, p, 1).unwrap().rank();
            assert_eq!(a, ordinary_part(&level1, k, p, 2).unwrap().rank());
            assert_eq!(a, ordinary_part(&level1, k, p, 3).unwrap().rank());
        }
    }

    #[test]
    fn ordinary_rank_matches_power_oracle() {
        // over F_p the ordinary rank is the rank of T_p^r for r = dimension
        let level1 = SubgroupSpec::gamma0(1).unwrap();
        for (k, p) in [(5usize, 11u64), (5, 2), (3, 5), (2, 3)] {
            let o = ordinary_part(&level1, k, p, 1).unwrap();
            let moduli = o.homology.module().moduli().to_vec();
            let r = moduli.len();
            let power = pow_mod(&o.operator.matrix, &BigInt::from(r.max(1)), &moduli);
            let f = crate::exactlinalg::ring::PrimeField::new(p).unwrap();
            let rank = crate::exactlinalg::normal_form::rank(&f, &crate::exactlinalg::matrix::convert(&Integers, &f, &power));
            assert_eq!(o.rank(), rank, "k={k} p={p}");
        }
    }

    #[test]
    fn enumeration() {
        let t = CosetTable::build(&SubgroupSpec::gamma0(1).unwrap()).unwrap();
        let b = Budget { max_word_len: 2, max_generators: 10_000, ..Budget::default() };
        let found = enumerate_hyperbolic(&t, &b, None);
        assert!(found.contains(&ProjectiveMatrix::from_i64(2, 1, 1, 1).unwrap()));
        let t = CosetTable::build(&SubgroupSpec::gamma1(7).unwrap()).unwrap();
        let b = Budget { max_generators: 10_000, ..Budget::default() };
        let found = enumerate_hyperbolic(&t, &b, None);
        assert_eq!(found.len(), 10_000);
        let distinct: HashSet<_> = found.iter().collect();
        assert_eq!(distinct.len(), found.len());
        for g in &found {
            assert!(g.rep().trace().magnitude() > &2u32.into());
            assert!(t.contains(g));
        }
        assert_eq!(found, enumerate_hyperbolic(&t, &b, None));
        let avoided = enumerate_hyperbolic(&t, &Budget { max_generators: 200, ..b }, Some(7));
        assert!(avoided.iter().all(|g| !in_principal(g, 7)));
    }

    #[test]
    fn main_theorem_small() {
        let b = Budget::default();
        let r = verify_main_theorem(&SubgroupSpec::gamma0(1).unwrap(), 5, 11, 1, &b).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!(r.ordinary_rank, 3);
        assert_eq!(r.ordinary_rank_next_m, 3);
        let r = verify_main_theorem(&SubgroupSpec::gamma1(4).unwrap(), 1, 2, 1, &b).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        let r = verify_main_theorem(&SubgroupSpec::gamma0(11).unwrap(), 0, 5, 2, &b).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
    }

    #[test]
    fn quotient_level_one_weight_zero() {
        let r = cycle_quotient_report(&SubgroupSpec::gamma0(1).unwrap(), 0, &Budget::default()).unwrap();
        assert_eq!(r.invariant_factors, Vec::<String>::new());
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!(r.order.as_deref(), Some("1"));
    }

    #[test]
    fn span_lattice_basics() {
        let moduli = ints(&[4, 0]);
        let mut s = SpanLattice::new(&moduli);
        assert_eq!(s.rank(), 0);
        assert!(s.contains(&ints(&[4, 0])));
        assert!(s.add(&ints(&[2, 0])));
        assert!(!s.add(&ints(&[6, 0])));
        assert_eq!(s.invariant_factors(), ints(&[2]));
        assert_eq!(s.quotient().invariant_factors(), ints(&[2, 0]));
        s.add(&ints(&[0, 3]));
        assert_eq!(s.quotient().invariant_factors(), ints(&[6]));
    }

    #[test]
    fn bridge_small() {
        let r = mod_p_bridge(3, 3, 1, &Budget { max_generators: 40, ..Budget::default() }).unwrap();
        assert_eq!(r.verdict, Verdict::Verified, "{r:?}");
        assert!(r.cycles_tested > 0);
        assert!(matches!(mod_p_bridge(4, 3, 1, &Budget::default()), Err(Error::WrongDivisibility(_))));
    }

    #[test]
    fn quotient_shrinks_with_budget() {
        // level 1, 2k = 2: finite quotient, stable under a larger budget
        let level1 = SubgroupSpec::gamma0(1).unwrap();
        let small = cycle_quotient_report(&level1, 1, &Budget::default()).unwrap();
        let big = cycle_quotient_report(&level1, 1, &Budget { patience: 300, max_generators: 5000, ..Budget::default() }).unwrap();
        assert_eq!(small.free_rank, 0);
        assert_eq!(small.order, big.order);
        // an unsaturated span only enlarges the quotient
        let g = SubgroupSpec::gamma0(11).unwrap();
        let small = cycle_quotient_report(&g, 1, &Budget::default()).unwrap();
        let big = cycle_quotient_report(&g, 1, &Budget { patience: 300, max_generators: 5000, ..Budget::default() }).unwrap();
        let order = |r: &QuotientReport| r.order.as_ref().unwrap().parse::<BigInt>().unwrap();
        assert!((order(&small) % order(&big)).is_zero());
        assert_eq!(small.verdict, Verdict::Verified);
        assert_eq!(big.verdict, Verdict::Verified);
    }
}
