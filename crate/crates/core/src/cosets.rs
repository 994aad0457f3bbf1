//! Congruence subgroups Γ_H(N), coset tables of right cosets Γ̄\PSL₂(Z) and
//! Schreier decompositions.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::psl2words::{decompose_word, Letter, Mat2, ProjectiveMatrix};

/// Default bound on the number of cosets a table may have.
pub const DEFAULT_COSET_BUDGET: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    Gamma0,
    Gamma1,
    GammaH,
}

/// The group Γ_H(N) of matrices `(a b; c d)` with `N | c` and `d mod N ∈ H`.
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    n: u64,
    h: BTreeSet<u64>,
    kind: Kind,
    gens: Vec<u64>,
}

impl PartialEq for SubgroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.h == other.h
    }
}

impl Eq for SubgroupSpec {}

fn units(n: u64) -> Vec<u64> {
    (0..n.max(1)).filter(|&a| a.gcd(&n) == 1 || n == 1).collect()
}

fn closure(n: u64, gens: &[u64]) -> BTreeSet<u64> {
    let one = 1 % n;
    let mut h = BTreeSet::from([one]);
    let mut frontier = vec![one];
    while let Some(x) = frontier.pop() {
        for &g in gens {
            let y = x * g % n;
            if h.insert(y) {
                frontier.push(y);
            }
        }
    }
    h
}

impl SubgroupSpec {
    pub fn gamma0(n: u64) -> Result<Self> {
        Self::check_level(n)?;
        let all = units(n);
        Ok(Self { n, h: all.iter().map(|&u| u % n).collect(), kind: Kind::Gamma0, gens: Vec::new() })
    }

    pub fn gamma1(n: u64) -> Result<Self> {
        Self::check_level(n)?;
        Ok(Self { n, h: closure(n, &[]), kind: Kind::Gamma1, gens: Vec::new() })
    }

    /// Γ_H(N) with `H` generated by `gens`.
    pub fn gamma_h(n: u64, gens: &[u64]) -> Result<Self> {
        Self::check_level(n)?;
        let mut reduced = Vec::new();
        for &g in gens {
            if g.gcd(&n) != 1 {
                return Err(Error::InvalidInput(format!("{g} is not a unit modulo {n}")));
            }
            reduced.push(g % n);
        }
        reduced.sort_unstable();
        reduced.dedup();
        Ok(Self { n, h: closure(n, &reduced), kind: Kind::GammaH, gens: reduced })
    }

    fn check_level(n: u64) -> Result<()> {
        if n == 0 || n > 1_000_000 {
            return Err(Error::InvalidInput(format!("level {n} out of range")));
        }
        Ok(())
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    /// Elements of `H`, sorted.
    pub fn h(&self) -> Vec<u64> {
        self.h.iter().copied().collect()
    }

    pub fn is_gamma0(&self) -> bool {
        self.h.len() == units(self.n).len()
    }

    pub fn is_gamma1(&self) -> bool {
        self.h.len() == 1
    }

    /// Membership of an integer matrix of determinant 1 (either sign lift).
    pub fn contains_mat(&self, m: &Mat2) -> bool {
        let n = BigInt::from(self.n);
        if !m.c.mod_floor(&n).is_zero() {
            return false;
        }
        let d = m.d.mod_floor(&n).to_u64().expect("reduced residue");
        let minus_d = (self.n - d) % self.n;
        self.h.contains(&d) || self.h.contains(&minus_d)
    }

    pub fn contains(&self, g: &ProjectiveMatrix) -> bool {
        self.contains_mat(g.rep())
    }

    /// `[PSL₂(Z) : Γ̄_H]` from the standard formula (cross-check only).
    pub fn index_formula(&self) -> u64 {
        let n = self.n;
        let mut psi = n;
        let mut m = n;
        let mut p = 2;
        while m > 1 {
            if m.is_multiple_of(p) {
                psi = psi / p * (p + 1);
                while m.is_multiple_of(p) {
                    m /= p;
                }
            }
            p += 1;
        }
        let phi = units(n).len() as u64;
        let plus_minus_h: BTreeSet<u64> = self.h.iter().flat_map(|&x| [x, (n - x) % n]).collect();
        psi * phi / plus_minus_h.len() as u64
    }

    /// Γ_H(N) ∩ Γ₀(p), realized as a Γ_{H'}(Np).
    pub fn meet_gamma0(&self, p: u64) -> Result<Self> {
        let m = self.n * p;
        let gens: Vec<u64> = units(m).into_iter().filter(|&u| self.h.contains(&(u % self.n))).collect();
        let h: BTreeSet<u64> = gens.iter().map(|&u| u % m).collect();
        Ok(Self { n: m, h, kind: Kind::GammaH, gens })
    }

    /// Membership predicate usable by coset tables.
    pub fn predicate(&self) -> Predicate {
        let me = self.clone();
        Arc::new(move |g: &ProjectiveMatrix| me.contains(g))
    }
}

impl fmt::Display for SubgroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Gamma0 => write!(f, "gamma0:{}", self.n),
            Kind::Gamma1 => write!(f, "gamma1:{}", self.n),
            Kind::GammaH => {
                let gens: Vec<String> = self.gens.iter().map(|g| g.to_string()).collect();
                write!(f, "gammaH:{}:{}", self.n, gens.join(","))
            }
        }
    }
}

impl FromStr for SubgroupSpec {
    type Err = Error;

    /// Parses `gamma0:N`, `gamma1:N` or `gammaH:N:h1,h2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognised group `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let level = |x: &str| x.trim().parse::<u64>().map_err(|_| bad());
        match parts.as_slice() {
            ["gamma0", n] => Self::gamma0(level(n)?),
            ["gamma1", n] => Self::gamma1(level(n)?),
            ["gammaH", n] => Self::gamma_h(level(n)?, &[]),
            ["gammaH", n, hs] => {
                let gens = hs
                    .split(',')
                    .filter(|x| !x.trim().is_empty())
                    .map(level)
                    .collect::<Result<Vec<_>>>()?;
                Self::gamma_h(level(n)?, &gens)
            }
            _ => Err(bad()),
        }
    }
}

/// Membership predicate of a finite-index subgroup of PSL₂(Z).
pub type Predicate = Arc<dyn Fn(&ProjectiveMatrix) -> bool + Send + Sync>;

const LETTERS: [Letter; 3] = [Letter::S, Letter::U, Letter::U2];

fn letter_index(l: Letter) -> usize {
    match l {
        Letter::S => 0,
        Letter::U => 1,
        Letter::U2 => 2,
    }
}

/// Right cosets `Γ̄ t_i` of a finite-index subgroup, with the right action of
/// the generators: `t_i · x = γ · t_{perm_x(i)}` with `γ ∈ Γ̄` the twist.
#[derive(Clone)]
pub struct CosetTable {
    reps: Vec<ProjectiveMatrix>,
    inverses: Vec<ProjectiveMatrix>,
    perm: [Vec<usize>; 3],
    twist: [Vec<ProjectiveMatrix>; 3],
    member: Predicate,
}

impl fmt::Debug for CosetTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CosetTable").field("index", &self.index()).field("reps", &self.reps).finish()
    }
}

impl CosetTable {
    /// Coset table of a congruence subgroup.
    pub fn build(spec: &SubgroupSpec) -> Result<Self> {
        Self::from_predicate(spec.predicate(), DEFAULT_COSET_BUDGET)
    }

    /// Breadth-first enumeration of the cosets of the subgroup defined by
    /// `member`, right-multiplying by `S` then `U`. Fails once more than
    /// `budget` cosets are found.
    pub fn from_predicate(member: Predicate, budget: usize) -> Result<Self> {
        let mut reps = vec![ProjectiveMatrix::identity()];
        let mut inverses = vec![ProjectiveMatrix::identity()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for x in [Letter::S, Letter::U] {
                let g = reps[i].mul(&x.matrix());
                if find_coset(&member, &inverses, &g).is_none() {
                    if reps.len() >= budget {
                        return Err(Error::BudgetExceeded(budget));
                    }
                    inverses.push(g.inverse());
                    reps.push(g);
                    queue.push_back(reps.len() - 1);
                }
            }
        }
        Self::with_reps(member, reps)
    }

    fn with_reps(member: Predicate, reps: Vec<ProjectiveMatrix>) -> Result<Self> {
        let inverses: Vec<ProjectiveMatrix> = reps.iter().map(|t| t.inverse()).collect();
        let mut perm: [Vec<usize>; 3] = Default::default();
        let mut twist: [Vec<ProjectiveMatrix>; 3] = Default::default();
        for (li, x) in LETTERS.iter().enumerate() {
            let xm = x.matrix();
            for t in &reps {
                let g = t.mul(&xm);
                let j = find_coset(&member, &inverses, &g)
                    .ok_or_else(|| Error::InvalidInput("coset table is not closed".into()))?;
                perm[li].push(j);
                twist[li].push(g.mul(&inverses[j]));
            }
        }
        Ok(Self { reps, inverses, perm, twist, member })
    }

    pub fn index(&self) -> usize {
        self.reps.len()
    }

    pub fn rep(&self, i: usize) -> &ProjectiveMatrix {
        &self.reps[i]
    }

    pub fn rep_inverse(&self, i: usize) -> &ProjectiveMatrix {
        &self.inverses[i]
    }

    pub fn reps(&self) -> &[ProjectiveMatrix] {
        &self.reps
    }

    pub fn contains(&self, g: &ProjectiveMatrix) -> bool {
        (self.member)(g)
    }

    pub fn predicate(&self) -> Predicate {
        self.member.clone()
    }

    /// Coset of `t_i · x`.
    pub fn perm(&self, x: Letter, i: usize) -> usize {
        self.perm[letter_index(x)][i]
    }

    /// The element `t_i · x · t_{perm_x(i)}⁻¹` of Γ̄.
    pub fn twist(&self, x: Letter, i: usize) -> &ProjectiveMatrix {
        &self.twist[letter_index(x)][i]
    }

    /// Index of the coset `Γ̄ g`, by walking a word for `g` through the table.
    pub fn coset_of(&self, g: &ProjectiveMatrix) -> usize {
        self.walk(0, g)
    }

    /// Coset of `t_i · g`.
    pub fn walk(&self, i: usize, g: &ProjectiveMatrix) -> usize {
        decompose_word(g).letters().iter().fold(i, |j, &x| self.perm(x, j))
    }

    /// `g = γ · t` with `γ ∈ Γ̄` and `t` a transversal element; returns `(γ, index of t)`.
    pub fn schreier(&self, g: &ProjectiveMatrix) -> (ProjectiveMatrix, usize) {
        let j = self.coset_of(g);
        (g.mul(&self.inverses[j]), j)
    }

    /// Distinct nontrivial Schreier generators `t_i x t_j⁻¹` for `x ∈ {S, U}`.
    pub fn schreier_generators(&self) -> Vec<ProjectiveMatrix> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for li in 0..2 {
            for g in &self.twist[li] {
                if !g.is_identity() && seen.insert(g.clone()) {
                    out.push(g.clone());
                }
            }
        }
        out
    }

    /// An equivalent table with randomly re-chosen representatives and a
    /// random ordering of the nontrivial cosets (index 0 stays the identity).
    pub fn shuffled(&self, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens = self.schreier_generators();
        let mut order: Vec<usize> = (1..self.index()).collect();
        order.shuffle(&mut rng);
        let mut reps = vec![ProjectiveMatrix::identity()];
        for i in order {
            let mut gamma = ProjectiveMatrix::identity();
            if !gens.is_empty() {
                for _ in 0..rng.gen_range(0..3) {
                    let g = &gens[rng.gen_range(0..gens.len())];
                    let g = if rng.gen_bool(0.5) { g.clone() } else { g.inverse() };
                    gamma = gamma.mul(&g);
                }
            }
            reps.push(gamma.mul(&self.reps[i]));
        }
        Self::with_reps(self.member.clone(), reps)
    }

    /// For a subgroup table `self` of a group with table `sup`, the coset of
    /// `sup` containing each representative of `self`.
    pub fn projection(&self, sup: &CosetTable) -> Vec<usize> {
        self.reps.iter().map(|t| sup.coset_of(t)).collect()
    }
}

fn find_coset(member: &Predicate, inverses: &[ProjectiveMatrix], g: &ProjectiveMatrix) -> Option<usize> {
    inverses.iter().position(|ti| member(&g.mul(ti)))
}

/// Coset table of the subgroup `{γ ∈ ambient : predicate(γ)}`.
pub fn subgroup_cosets(predicate: Predicate, ambient: Option<&CosetTable>, budget: usize) -> Result<CosetTable> {
    let member: Predicate = match ambient {
        Some(a) => {
            let outer = a.predicate();
            Arc::new(move |g: &ProjectiveMatrix| outer(g) && predicate(g))
        }
        None => predicate,
    };
    CosetTable::from_predicate(member, budget)
}

/// The subgroup `Γ ∩ α⁻¹ Γ' α`: elements of `Γ` whose conjugate by `α` is
/// integral and lies in `Γ'`.
pub fn conjugate_meet(gamma: Predicate, alpha: &Mat2, gamma_prime: Predicate) -> Predicate {
    let alpha = alpha.clone();
    Arc::new(move |g: &ProjectiveMatrix| {
        gamma(g)
            && alpha
                .conjugate(g.rep())
                .and_then(|c| ProjectiveMatrix::new(c).ok())
                .is_some_and(|c| gamma_prime(&c))
    })
}

/// Number of elements of P¹(Z/N) (cross-check for Γ₀(N)).
pub fn projective_line_size(n: u64) -> usize {
    let mut seen = BTreeSet::new();
    for c in 0..n {
        for d in 0..n {
            if c.gcd(&d).gcd(&n) != 1 && n > 1 {
                continue;
            }
            // normalize (c:d) by the smallest unit multiple
            let key = units(n).iter().map(|&u| ((u * c) % n, (u * d) % n)).min().unwrap_or((0, 0));
            seen.insert(key);
        }
    }
    seen.len()
}
