//! Cusps, parabolic cycles and the boundary subgroup `H₁^∂`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cosets::{CosetTable, SubgroupSpec};
use crate::error::{Error, Result};
use crate::exactlinalg::matrix::{mat_vec, IntMatrix};
use crate::exactlinalg::ring::{is_prime, prime_divisors, Integers, RingSpec};
use crate::foxhomology::{compute_h1, H1Presentation};
use crate::heckeops::{beta_matrix, diamond, double_coset, hecke_at, hecke_t};
use crate::ordinary::{hyperbolic_span, Budget, SpanLattice, Verdict};
use crate::psl2words::{Class, Letter, Mat2, ProjectiveMatrix};

/// A cusp `t·∞` of the group, its width and a generator of its stabilizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspDatum {
    /// Transversal element `t`.
    pub representative: ProjectiveMatrix,
    /// Index of `t` in the coset table.
    pub coset: usize,
    pub width: u64,
    /// `t·T^h·t⁻¹`.
    pub stabilizer_generator: ProjectiveMatrix,
}

fn t_perm(table: &CosetTable, i: usize) -> usize {
    table.perm(Letter::U, table.perm(Letter::S, i))
}

/// One datum per orbit of `T` on the right cosets `Γ̄\PSL₂(Z)`.
///
/// Orbits are the double cosets `Γ̄ t ⟨T⟩`, so two cosets in one orbit give
/// the same cusp and distinct orbits give inequivalent cusps.
pub fn cusp_data_of(table: &CosetTable) -> Vec<CuspDatum> {
    let n = table.index();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut width = 0u64;
        let mut i = start;
        loop {
            seen[i] = true;
            width += 1;
            i = t_perm(table, i);
            if i == start {
                break;
            }
        }
        let t = table.rep(start).clone();
        let gen = t.mul(&ProjectiveMatrix::t().pow(width as i64)).mul(&t.inverse());
        out.push(CuspDatum { representative: t, coset: start, width, stabilizer_generator: gen });
    }
    out
}

pub fn cusp_data(spec: &SubgroupSpec) -> Result<Vec<CuspDatum>> {
    Ok(cusp_data_of(&CosetTable::build(spec)?))
}

/// The submodule of `H₁` spanned by parabolic cycles.
#[derive(Clone, Debug)]
pub struct BoundarySubgroup {
    pub cusps: Vec<CuspDatum>,
    /// Coordinates of `𝔷(t T^h t⁻¹)` per cusp.
    pub generators: Vec<Vec<BigInt>>,
    pub span: SpanLattice,
}

impl BoundarySubgroup {
    /// Invariant factors as an abelian group (0 for a free factor).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.span.invariant_factors()
    }

    /// Minimal number of generators; the dimension over a field.
    pub fn rank(&self) -> usize {
        self.span.rank()
    }
}

/// `H₁^∂` inside a computed presentation.
pub fn boundary_of(h: &H1Presentation) -> Result<BoundarySubgroup> {
    let cusps = cusp_data_of(h.table());
    let generators = cusps.par_iter().map(|c| h.z_coords(&c.stabilizer_generator)).collect::<Result<Vec<_>>>()?;
    let span = SpanLattice::from_vectors(h.module().moduli(), &generators);
    Ok(BoundarySubgroup { cusps, generators, span })
}

pub fn boundary_subgroup(spec: &SubgroupSpec, k: usize, ring: RingSpec) -> Result<BoundarySubgroup> {
    boundary_of(&compute_h1(spec, k, ring)?)
}

/// Outcome of [`check_boundary_identity`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub verdict: Verdict,
    pub group: String,
    pub n: u64,
    pub p: u64,
    pub k: usize,
    pub ring: String,
    /// `𝔷(T)` in homology coordinates.
    pub z: Vec<String>,
    /// `T_p 𝔷(T)`.
    pub lhs: Vec<String>,
    /// `𝔷(T) + p^{2k+1}⟨p⟩𝔷(T)`.
    pub rhs: Vec<String>,
}

/// Checks `T_p 𝔷(T) = (1 + p^{2k+1}⟨p⟩) 𝔷(T)` on `Γ₁(N²)`.
pub fn check_boundary_identity(n: u64, p: u64, k: usize, ring: RingSpec) -> Result<IdentityReport> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    if n == 0 || n.is_multiple_of(p) {
        return Err(Error::WrongDivisibility(format!("the identity needs {p} ∤ N = {n}")));
    }
    let spec = SubgroupSpec::gamma1(n * n)?;
    let h = compute_h1(&spec, k, ring)?;
    let z = h.z_coords(&ProjectiveMatrix::t())?;
    let tp = hecke_t(&h, p)?;
    let dp = diamond(&h, p)?;
    let lhs = mat_vec(&Integers, &tp.matrix, &z);
    let scale = BigInt::from(p).pow(2 * k as u32 + 1);
    let dz = mat_vec(&Integers, &dp.matrix, &z);
    let rhs: Vec<BigInt> = z.iter().zip(&dz).map(|(a, b)| a + b * &scale).collect();
    let verdict = if h.coords_equal(&lhs, &rhs) { Verdict::Verified } else { Verdict::Falsified };
    let moduli = h.module().moduli();
    let strings = |v: &[BigInt]| -> Result<Vec<String>> {
        Ok(v.iter().zip(moduli).map(|(x, m)| if m.is_zero() { x.to_string() } else { x.mod_floor(m).to_string() }).collect())
    };
    Ok(IdentityReport {
        verdict,
        group: spec.to_string(),
        n,
        p,
        k,
        ring: ring.to_string(),
        z: strings(&z)?,
        lhs: strings(&lhs)?,
        rhs: strings(&rhs)?,
    })
}

/// Outcome of [`check_hecke_generation`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenerationReport {
    pub verdict: Verdict,
    pub group: String,
    pub k: usize,
    pub ring: String,
    /// Operators tried, e.g. `T2`, `U5`, `<3>`.
    pub operators: Vec<String>,
    pub rounds: usize,
    pub span_invariant_factors: Vec<String>,
    pub boundary_invariant_factors: Vec<String>,
    /// The Hecke span of `𝔷(T)` stayed inside the boundary subgroup.
    pub stable: bool,
}

fn primes_up_to(bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&q| is_prime(q)).collect()
}

/// Closes `{𝔷(T)}` under diamonds, `[Γ t Γ]` for the cusp representatives
/// `t ∉ Γ` and `[Γ diag(1,q) Γ]` for primes `q ≤ max(7, max_word_len + 1)`,
/// then compares with `H₁^∂`.
///
/// Rounds are capped by `budget.max_word_len`.
pub fn check_hecke_generation(spec: &SubgroupSpec, k: usize, ring: RingSpec, budget: &Budget) -> Result<GenerationReport> {
    if !spec.is_gamma1() {
        return Err(Error::InvalidInput(format!("generation check needs Γ₁(N), got {spec}")));
    }
    let h = compute_h1(spec, k, ring)?;
    let n = spec.level();
    let boundary = boundary_of(&h)?;
    let mut names = Vec::new();
    let mut alphas: Vec<Mat2> = Vec::new();
    for d in 2..n {
        if d.gcd(&n) == 1 {
            names.push(format!("<{d}>"));
            alphas.push(beta_matrix(n, d)?);
        }
    }
    for c in &boundary.cusps {
        if !h.table().contains(&c.representative) {
            names.push(format!("[{}]", c.representative));
            alphas.push(c.representative.rep().clone());
        }
    }
    for q in primes_up_to((budget.max_word_len as u64 + 1).max(7)) {
        names.push(format!("{}{q}", if n.is_multiple_of(q) { "U" } else { "T" }));
        alphas.push(Mat2::diag(1, q as i64));
    }
    let ops: Vec<IntMatrix> = alphas.par_iter().map(|a| double_coset(&h, &h, a).map(|o| o.matrix)).collect::<Result<_>>()?;
    let moduli = h.module().moduli().to_vec();
    let reduce = |v: Vec<BigInt>| -> Vec<BigInt> { v.into_iter().zip(&moduli).map(|(x, m)| if m.is_zero() { x } else { x.mod_floor(m) }).collect() };
    let z = h.z_coords(&ProjectiveMatrix::t())?;
    let mut span = SpanLattice::from_vectors(&moduli, std::slice::from_ref(&z));
    let mut frontier = vec![z];
    let mut rounds = 0;
    while !frontier.is_empty() && !span.contains_span(&boundary.span) && rounds < budget.max_word_len {
        rounds += 1;
        let mut next = Vec::new();
        for v in &frontier {
            for op in &ops {
                let w = reduce(mat_vec(&Integers, op, v));
                if span.add(&w) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    let stable = boundary.span.contains_span(&span);
    let reached = span.contains_span(&boundary.span);
    let verdict = match (stable, reached) {
        (false, _) => Verdict::Falsified,
        (true, true) => Verdict::Verified,
        (true, false) => Verdict::Inconclusive,
    };
    let strings = |v: Vec<BigInt>| v.iter().map(|d| d.to_string()).collect();
    Ok(GenerationReport {
        verdict,
        group: spec.to_string(),
        k,
        ring: ring.to_string(),
        operators: names,
        rounds,
        span_invariant_factors: strings(span.invariant_factors()),
        boundary_invariant_factors: strings(boundary.invariant_factors()),
        stable,
    })
}

/// Where `H₁^∂ ⊆ 𝔷`-span has been verified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalizationReport {
    pub verdict: Verdict,
    pub group: String,
    pub k: usize,
    pub seed: u64,
    pub budget: Budget,
    pub generators_tried: usize,
    pub contained_over_q: bool,
    /// Primes whose inversion makes the containment hold with the computed
    /// span; `None` when it fails over `Q`.
    pub inverted_primes: Option<Vec<u64>>,
    /// The strongest verified statement, e.g. `Z`, `Z[1/6]`, `Q` or `none`.
    pub strongest: String,
    /// Containment holds after inverting only primes dividing the level.
    pub away_from_level: bool,
}

/// Order of the class of `v` in `quotient` (0 when infinite).
fn class_order(quotient: &crate::exactlinalg::module::FgModule, v: &[BigInt]) -> Result<BigInt> {
    let c = quotient.coordinates(v)?;
    let mut order = BigInt::from(1);
    for (x, m) in c.iter().zip(quotient.moduli()) {
        if x.is_zero() {
            continue;
        }
        if m.is_zero() {
            return Ok(BigInt::zero());
        }
        order = order.lcm(&(m / m.gcd(x)));
    }
    Ok(order)
}

/// Compares `H₁^∂` with the budgeted integral span of hyperbolic cycles and
/// reports the smallest localization in which the containment holds.
pub fn boundary_localization(spec: &SubgroupSpec, k: usize, budget: &Budget) -> Result<LocalizationReport> {
    let h = compute_h1(spec, k, RingSpec::Integers)?;
    let boundary = boundary_of(&h)?;
    let (span, tried) = hyperbolic_span(&h, budget)?;
    let quotient = span.quotient();
    let mut order = BigInt::from(1);
    let mut over_q = true;
    for g in &boundary.generators {
        let o = class_order(&quotient, g)?;
        if o.is_zero() {
            over_q = false;
        } else {
            order = order.lcm(&o);
        }
    }
    let level = spec.level();
    let (inverted, strongest, away) = if over_q {
        let primes: Vec<u64> = prime_divisors(&order).iter().filter_map(|q| q.to_u64()).collect();
        let away = primes.iter().all(|q| level.is_multiple_of(*q));
        let s = if primes.is_empty() {
            "Z".to_string()
        } else {
            format!("Z[1/{}]", primes.iter().product::<u64>())
        };
        (Some(primes), s, away)
    } else {
        (None, "none".to_string(), false)
    };
    let verdict = if over_q { Verdict::Verified } else { Verdict::Inconclusive };
    Ok(LocalizationReport {
        verdict,
        group: spec.to_string(),
        k,
        seed: budget.seed,
        budget: *budget,
        generators_tried: tried,
        contained_over_q: over_q,
        inverted_primes: inverted,
        strongest: if over_q && strongest == "none" { "Q".into() } else { strongest },
        away_from_level: away,
    })
}

/// `Σ_{d | N} φ(gcd(d, N/d))`, the number of cusps of `Γ₀(N)`.
pub fn gamma0_cusp_count(n: u64) -> u64 {
    let phi = |m: u64| (1..=m).filter(|x| x.gcd(&m) == 1).count() as u64;
    (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| phi(d.gcd(&(n / d)))).sum()
}

/// True when `g` is parabolic.
pub fn is_parabolic(g: &ProjectiveMatrix) -> bool {
    g.classify() == Class::Parabolic
}

/// Applies `[Γ diag(1,q) Γ]` and checks that `H₁^∂` is mapped into itself.
pub fn boundary_stable_under(h: &H1Presentation, q: u64) -> Result<bool> {
    let b = boundary_of(h)?;
    let op = hecke_at(h, q)?;
    let moduli = h.module().moduli();
    Ok(b.generators.iter().all(|g| {
        let w: Vec<BigInt> = mat_vec(&Integers, &op.matrix, g).into_iter().zip(moduli).map(|(x, m)| if m.is_zero() { x } else { x.mod_floor(m) }).collect();
        b.span.contains(&w)
    }))
}
