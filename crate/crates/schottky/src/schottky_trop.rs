//! The tropical Schottky decision and recovery algorithms, the tropical
//! Igusa locus, and the exhaustive verifier for the coset-projection lemma
//! behind the admissible families.

use crate::exact::{
    det_int, gl_equivalence, ExactError, IntMatrix, QuadForm, Rational, GL_CANDIDATE_CAP,
};
use crate::graphs::{
    entry_by_fvector, match_cographic_all, riemann_matrix, GraphError, MetricGraph,
};
use crate::polytope::{face_lattice_fvector, FVector, PolytopeError};
use crate::theta_classical::{is_azygetic, parity, Characteristic, Parity};
use crate::tropical::{theta_matroid, trop_theta_constant, voronoi_polytope, F2Vector};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::HashSet;

#[derive(Debug, thiserror::Error)]
pub enum TropSchottkyError {
    #[error("only genus 4 is supported, got dimension {0}")]
    Unsupported(usize),
    #[error("matrix is not a tropical Jacobian: {reason}")]
    NotAJacobian { reason: String },
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
    #[error("choice is not admissible: {0}")]
    NotAdmissible(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

// ---------------------------------------------------------------------------
// decision
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Jacobian,
    NotJacobian,
}

/// Outcome of the tropical Schottky decision.
#[derive(Clone, Debug)]
pub struct TropDecision {
    pub verdict: Verdict,
    pub f_vector: FVector,
    /// catalog index (1..16) when the f-vector matches
    pub matched_entry: Option<usize>,
    /// a label with strictly negative signed theta sum, when one exists
    pub vartheta_certificate: Option<(F2Vector, Rational)>,
}

impl TropDecision {
    /// The negative-certificate test is a necessary condition, so a matched
    /// f-vector together with a certificate indicates a bug (or broken input).
    pub fn consistent(&self) -> bool {
        !(self.verdict == Verdict::Jacobian && self.vartheta_certificate.is_some())
    }
}

/// Tropical Schottky decision: compute the Voronoi f-vector and look it up
/// in the catalog; the f-vectors of the 16 cographic types are distinct
/// from all other genus-4 types, so the test is sound and complete.
/// The nonnegativity pre-check runs alongside and records any certificate.
pub fn decide_tropical(q: &QuadForm) -> Result<TropDecision, TropSchottkyError> {
    if q.dim() != 4 {
        return Err(TropSchottkyError::Unsupported(q.dim()));
    }
    let polytope = voronoi_polytope(q)?;
    let f_vector = face_lattice_fvector(&polytope)?;
    let matched_entry = entry_by_fvector(&f_vector).map(|e| e.index);
    let matroid = theta_matroid(q)?;
    let vartheta_certificate = matroid.negatives.first().cloned();
    let verdict = if matched_entry.is_some() { Verdict::Jacobian } else { Verdict::NotJacobian };
    let decision = TropDecision { verdict, f_vector, matched_entry, vartheta_certificate };
    debug_assert!(decision.consistent(), "negative vartheta on a catalog f-vector");
    Ok(decision)
}

// ---------------------------------------------------------------------------
// recovery
// ---------------------------------------------------------------------------

/// Result of tropical Schottky recovery.
#[derive(Clone, Debug)]
pub struct TropicalRecovery {
    pub entry_index: usize,
    pub entry_name: &'static str,
    /// the catalog graph with recovered edge lengths
    pub graph: MetricGraph,
    /// matroid label assigned to each edge
    pub edge_labels: Vec<F2Vector>,
    pub lengths: Vec<Rational>,
    /// X with X^t Q X = B diag(lengths) B^t, when requested
    pub basis_witness: Option<IntMatrix>,
}

/// Recovers the metric graph of a tropical Jacobian from its theta matroid:
/// the matroid determines the graph, and half the signed theta sums are the
/// edge lengths. Every candidate labeling is verified by an exact
/// GL4(Z)-equivalence between Q and the reconstructed B D B^t.
pub fn recover_tropical(
    q: &QuadForm,
    want_basis: bool,
) -> Result<TropicalRecovery, TropSchottkyError> {
    if q.dim() != 4 {
        return Err(TropSchottkyError::Unsupported(q.dim()));
    }
    let matroid = theta_matroid(q)?;
    if let Some((label, value)) = matroid.negatives.first() {
        return Err(TropSchottkyError::NotAJacobian {
            reason: format!(
                "vartheta at {:?} is {} < 0",
                label,
                crate::exact::rational_to_string(value)
            ),
        });
    }
    let candidates = match_cographic_all(&matroid);
    if candidates.is_empty() {
        return Err(TropSchottkyError::Inconsistency(
            "theta matroid with positive weights matches no catalog entry".into(),
        ));
    }
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    for cand in &candidates {
        let entry = cand.entry;
        let lengths: Vec<Rational> = cand
            .edge_labels
            .iter()
            .map(|l| {
                matroid
                    .weight_of(l)
                    .map(|w| w * &half)
                    .ok_or_else(|| TropSchottkyError::Inconsistency("label without weight".into()))
            })
            .collect::<Result<_, _>>()?;
        if lengths.iter().any(|l| l <= &Rational::zero()) {
            continue;
        }
        let pairs: Vec<(usize, usize)> =
            entry.graph.edges().iter().map(|e| (e.tail, e.head)).collect();
        let graph = MetricGraph::with_lengths(entry.graph.vertex_count(), &pairs, &lengths)?;
        let rm = riemann_matrix(&graph, &entry.basis)?;
        let bdbt = match rm.quad_form() {
            Ok(f) => f,
            Err(_) => continue,
        };
        // the reconstruction must be integrally equivalent to the input
        let witness = gl_equivalence(q, &bdbt, GL_CANDIDATE_CAP)?;
        let Some(x) = witness else { continue };
        debug_assert!(det_int(&x).abs().is_one());
        verify_length_decomposition(q, &x, entry, &lengths)?;
        return Ok(TropicalRecovery {
            entry_index: entry.index,
            entry_name: entry.name,
            graph,
            edge_labels: cand.edge_labels.clone(),
            lengths,
            basis_witness: want_basis.then_some(x),
        });
    }
    Err(TropSchottkyError::Inconsistency(
        "no catalog labeling reproduces Q up to GL4(Z)".into(),
    ))
}

/// Solves X^t Q X = sum of l_i b_i b_i^t for the multipliers and checks they
/// equal the recovered lengths and are positive (the rank-one matrices are
/// linearly independent, so the solution is unique).
fn verify_length_decomposition(
    q: &QuadForm,
    x: &IntMatrix,
    entry: &crate::graphs::CatalogEntry,
    lengths: &[Rational],
) -> Result<(), TropSchottkyError> {
    let target = q.congruent(x)?;
    let m = entry.graph.edge_count();
    // 10 equations (upper triangle) in m unknowns
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(10);
    let mut rhs: Vec<Rational> = Vec::with_capacity(10);
    for i in 0..4 {
        for j in i..4 {
            let mut row = Vec::with_capacity(m);
            for e in 0..m {
                let col = entry.basis.column(e);
                row.push(Rational::from_integer(&col[i] * &col[j]));
            }
            rows.push(row);
            rhs.push(target.entry(i, j).clone());
        }
    }
    let solution = solve_overdetermined(&rows, &rhs).ok_or_else(|| {
        TropSchottkyError::Inconsistency("length system is singular or inconsistent".into())
    })?;
    if solution.len() != lengths.len() || solution.iter().zip(lengths).any(|(a, b)| a != b) {
        return Err(TropSchottkyError::Inconsistency(
            "length multipliers disagree with theta-matroid lengths".into(),
        ));
    }
    if solution.iter().any(|l| l <= &Rational::zero()) {
        return Err(TropSchottkyError::Inconsistency("nonpositive multiplier".into()));
    }
    Ok(())
}

/// Unique exact solution of a consistent overdetermined system, or None.
fn solve_overdetermined(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let nrows = a.len();
    let ncols = a.first()?.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..ncols {
        let Some(pr) = (pivot_row..nrows).find(|&r| !m[r][col].is_zero()) else {
            return None; // rank-deficient in the unknowns
        };
        m.swap(pivot_row, pr);
        for r in 0..nrows {
            if r != pivot_row && !m[r][col].is_zero() {
                let factor = &m[r][col] / &m[pivot_row][col];
                for c in col..=ncols {
                    let sub = &factor * &m[pivot_row][c];
                    m[r][c] -= sub;
                }
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    // consistency of the remaining rows
    for r in pivot_row..nrows {
        if !m[r][ncols].is_zero() {
            return None;
        }
    }
    Some(
        (0..ncols)
            .map(|c| &m[pivots[c]][ncols] / &m[pivots[c]][c])
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// the tropical Igusa locus
// ---------------------------------------------------------------------------

/// Membership in the tropical Igusa locus: all 15 signed theta sums are
/// nonnegative. Negative labels are returned as certificates.
pub fn igusa_locus_member(
    q: &QuadForm,
) -> Result<(bool, Vec<(F2Vector, Rational)>), TropSchottkyError> {
    if q.dim() != 4 {
        return Err(TropSchottkyError::Unsupported(q.dim()));
    }
    let matroid = theta_matroid(q)?;
    Ok((matroid.negatives.is_empty(), matroid.negatives))
}

/// An azygetic triple with a rank-3 subgroup, the data entering the
/// degree-16 modular form and its tropicalization.
#[derive(Clone, Debug)]
pub struct AdmissibleChoice {
    pub m: [Characteristic; 3],
    pub n: [Characteristic; 3],
}

impl AdmissibleChoice {
    /// The subgroup N as all eight sums of the generators.
    pub fn subgroup(&self) -> [Characteristic; 8] {
        std::array::from_fn(|a| {
            let mut x = Characteristic::zero();
            for (k, n) in self.n.iter().enumerate() {
                if (a >> k) & 1 == 1 {
                    x = x.add(n);
                }
            }
            x
        })
    }

    pub fn coset(&self, i: usize) -> [Characteristic; 8] {
        self.subgroup().map(|n| self.m[i].add(&n))
    }

    /// Checks the form-defining conditions: N has rank 3, the triple is
    /// azygetic, and every coset element is even.
    pub fn validate_form_conditions(&self) -> Result<(), TropSchottkyError> {
        let sub = self.subgroup();
        let distinct: HashSet<u8> = sub.iter().map(|c| c.bits()).collect();
        if distinct.len() != 8 {
            return Err(TropSchottkyError::NotAdmissible(format!(
                "generators span a subgroup of order {} instead of 8",
                distinct.len()
            )));
        }
        if !is_azygetic(&self.m[0], &self.m[1], &self.m[2]) {
            return Err(TropSchottkyError::NotAdmissible("triple is not azygetic".into()));
        }
        for i in 0..3 {
            for c in self.coset(i) {
                if parity(&c) != Parity::Even {
                    return Err(TropSchottkyError::NotAdmissible(format!(
                        "coset {} contains the odd characteristic {}",
                        i + 1,
                        c.label()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Full admissibility additionally requires the projected group N' to
    /// have rank 3.
    pub fn validate_admissible(&self) -> Result<(), TropSchottkyError> {
        self.validate_form_conditions()?;
        if self.n_prime_rank() != 3 {
            return Err(TropSchottkyError::NotAdmissible(format!(
                "N' has rank {} instead of 3",
                self.n_prime_rank()
            )));
        }
        Ok(())
    }

    fn n_prime_set(&self) -> HashSet<u8> {
        self.subgroup()
            .iter()
            .map(|c| c.upper.iter().fold(0u8, |acc, &b| (acc << 1) | b))
            .collect()
    }

    pub fn n_prime_rank(&self) -> usize {
        let size = self.n_prime_set().len();
        (usize::BITS - 1 - size.leading_zeros()) as usize
    }

    /// The unique nonzero vector orthogonal to N', when N' has rank 3.
    pub fn orthogonal_vector(&self) -> Option<F2Vector> {
        if self.n_prime_rank() != 3 {
            return None;
        }
        let nset = self.n_prime_set();
        (1u8..16).find_map(|v| {
            let orth = nset
                .iter()
                .all(|&u| (u & v).count_ones() % 2 == 0);
            orth.then(|| (0..4).map(|i| (v >> (3 - i)) & 1).collect())
        })
    }
}

/// Value and argmax structure of the tropicalized modular form
/// `max over pairs (i,j) of pi_i + pi_j`.
#[derive(Clone, Debug)]
pub struct TropicalFormValue {
    pub pi: [Rational; 3],
    pub value: Rational,
    /// unordered pairs (i, j), 0-based, attaining the maximum
    pub argmax_pairs: Vec<(usize, usize)>,
}

impl TropicalFormValue {
    /// The maximum is attained at least twice.
    pub fn breakpoint(&self) -> bool {
        self.argmax_pairs.len() >= 2
    }
}

/// Tropicalization of the coset products and their max-plus combination.
/// Requires only the form-defining conditions, not full admissibility
/// (used with the classical fixed choice, whose N' has rank 2).
pub fn tropical_form_value(
    q: &QuadForm,
    choice: &AdmissibleChoice,
) -> Result<TropicalFormValue, TropSchottkyError> {
    if q.dim() != 4 {
        return Err(TropSchottkyError::Unsupported(q.dim()));
    }
    choice.validate_form_conditions()?;
    let mut pi: [Rational; 3] = [Rational::zero(), Rational::zero(), Rational::zero()];
    for i in 0..3 {
        let mut acc = Rational::zero();
        for c in choice.coset(i) {
            let u: Vec<BigInt> = c.upper.iter().map(|&b| BigInt::from(b)).collect();
            acc += trop_theta_constant(q, &u)?;
        }
        pi[i] = acc;
    }
    let mut value: Option<Rational> = None;
    let mut argmax_pairs = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let s = &pi[i] + &pi[j];
            match &value {
                Some(v) if &s < v => {}
                Some(v) if &s == v => argmax_pairs.push((i, j)),
                _ => {
                    value = Some(s);
                    argmax_pairs = vec![(i, j)];
                }
            }
        }
    }
    Ok(TropicalFormValue { pi, value: value.unwrap(), argmax_pairs })
}

/// The tropical Schottky–Igusa form for an admissible choice: exact maximum
/// and the attaining pairs; a breakpoint means the maximum is attained twice.
pub fn tropical_igusa_form(
    q: &QuadForm,
    choice: &AdmissibleChoice,
) -> Result<TropicalFormValue, TropSchottkyError> {
    choice.validate_admissible()?;
    tropical_form_value(q, choice)
}

/// The four published admissible families, one per weight class of the
/// orthogonal vector v.
fn base_family(weight: usize) -> AdmissibleChoice {
    let c = Characteristic::new;
    match weight {
        1 => AdmissibleChoice {
            m: [
                c([0, 0, 0, 0], [1, 0, 0, 1]),
                c([1, 1, 1, 0], [1, 0, 1, 1]),
                c([0, 0, 1, 1], [1, 0, 0, 0]),
            ],
            n: [
                c([0, 1, 0, 0], [1, 0, 1, 1]),
                c([0, 0, 1, 1], [1, 0, 0, 1]),
                c([0, 0, 1, 0], [0, 1, 0, 0]),
            ],
        },
        2 => AdmissibleChoice {
            m: [
                c([0, 0, 0, 0], [1, 0, 0, 1]),
                c([1, 1, 1, 0], [1, 0, 1, 0]),
                c([1, 0, 0, 0], [0, 0, 0, 1]),
            ],
            n: [
                c([1, 1, 0, 1], [1, 1, 1, 0]),
                c([0, 0, 1, 0], [0, 1, 0, 0]),
                c([0, 0, 0, 1], [0, 1, 0, 1]),
            ],
        },
        3 => AdmissibleChoice {
            m: [
                c([1, 0, 0, 1], [0, 0, 0, 0]),
                c([0, 0, 0, 1], [1, 1, 1, 0]),
                c([0, 0, 0, 1], [0, 0, 0, 0]),
            ],
            n: [
                c([0, 0, 0, 1], [0, 0, 0, 1]),
                c([1, 0, 1, 1], [0, 0, 0, 1]),
                c([1, 1, 0, 0], [0, 0, 0, 0]),
            ],
        },
        _ => AdmissibleChoice {
            m: [
                c([1, 0, 0, 0], [0, 1, 1, 0]),
                c([0, 0, 1, 1], [1, 1, 0, 0]),
                c([0, 0, 0, 0], [1, 0, 1, 1]),
            ],
            n: [
                c([1, 1, 0, 0], [0, 1, 0, 1]),
                c([1, 0, 0, 1], [0, 1, 1, 0]),
                c([1, 0, 1, 0], [1, 1, 1, 0]),
            ],
        },
    }
}

fn permute_characteristic(c: &Characteristic, perm: &[usize; 4]) -> Characteristic {
    Characteristic {
        upper: std::array::from_fn(|i| c.upper[perm[i]]),
        lower: std::array::from_fn(|i| c.lower[perm[i]]),
    }
}

/// An admissible choice whose orthogonal vector is the given nonzero v,
/// produced by permuting the coordinates of the published family of the
/// same weight. The result is re-validated.
pub fn admissible_families_for(v: &[u8]) -> Result<AdmissibleChoice, TropSchottkyError> {
    assert_eq!(v.len(), 4);
    let weight = v.iter().filter(|&&b| b == 1).count();
    if weight == 0 {
        return Err(TropSchottkyError::NotAdmissible("v must be nonzero".into()));
    }
    let base = base_family(weight);
    let base_v: Vec<u8> = {
        let mut rep = vec![1u8; weight];
        rep.resize(4, 0);
        rep
    };
    // perm[i] = index of base coordinate placed at position i
    let mut perm = [0usize; 4];
    let mut src_ones: Vec<usize> =
        base_v.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
    let mut src_zeros: Vec<usize> =
        base_v.iter().enumerate().filter(|(_, &b)| b == 0).map(|(i, _)| i).collect();
    for (i, &b) in v.iter().enumerate() {
        perm[i] = if b == 1 { src_ones.remove(0) } else { src_zeros.remove(0) };
    }
    let choice = AdmissibleChoice {
        m: std::array::from_fn(|i| permute_characteristic(&base.m[i], &perm)),
        n: std::array::from_fn(|i| permute_characteristic(&base.n[i], &perm)),
    };
    choice.validate_admissible()?;
    let orth = choice.orthogonal_vector().ok_or_else(|| {
        TropSchottkyError::Inconsistency("admissible choice lost its orthogonal vector".into())
    })?;
    if orth != v {
        return Err(TropSchottkyError::Inconsistency(format!(
            "permuted family is orthogonal to {:?}, expected {:?}",
            orth, v
        )));
    }
    Ok(choice)
}

// ---------------------------------------------------------------------------
// exhaustive verification of the coset-projection lemma
// ---------------------------------------------------------------------------

/// Progress report of the exhaustive rank-3 subgroup sweep.
#[derive(Clone, Debug, Default)]
pub struct AzygeticLemmaReport {
    pub subgroups_total: usize,
    pub subgroups_processed: usize,
    pub subgroups_with_even_triples: usize,
    pub triples_checked: u64,
    /// subgroups (as sorted element bit lists) violating property (1)
    pub property1_counterexamples: Vec<String>,
    /// violations of the rank-3 projection property (2)
    pub property2_counterexamples: Vec<String>,
    /// present when the budget ran out; pass back in to continue
    pub resume_token: Option<String>,
}

impl AzygeticLemmaReport {
    pub fn complete(&self) -> bool {
        self.resume_token.is_none()
    }

    pub fn counterexample_free(&self) -> bool {
        self.property1_counterexamples.is_empty() && self.property2_counterexamples.is_empty()
    }
}

fn parity_bits(x: u8) -> bool {
    // even characteristic: m' . m'' = 0
    ((x & 0x0f) & (x >> 4)).count_ones() % 2 == 0
}

/// All rank-3 subgroups of (Z/2Z)^8, each as its 8 sorted elements.
fn all_rank3_subgroups() -> Vec<[u8; 8]> {
    let mut seen: HashSet<[u8; 8]> = HashSet::new();
    let mut out = Vec::new();
    for a in 1u16..256 {
        for b in (a + 1)..256 {
            let ab = (a ^ b) as u16;
            if ab <= b {
                continue; // canonical: a < b < c with c not in span{a,b}
            }
            for c in (b + 1)..256 {
                if c == ab {
                    continue;
                }
                let mut elems = [
                    0u8,
                    a as u8,
                    b as u8,
                    c as u8,
                    (a ^ b) as u8,
                    (a ^ c) as u8,
                    (b ^ c) as u8,
                    (a ^ b ^ c) as u8,
                ];
                elems.sort_unstable();
                // rank 3 iff all 8 distinct
                if elems.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                if seen.insert(elems) {
                    out.push(elems);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Exhaustively checks, over every rank-3 subgroup N and every azygetic
/// triple of all-even cosets of N:
/// (1) some pair of cosets has equal first-half projections, and
/// (2) when N' has rank 3 and exactly one pair of projections agree, the
///     agreeing representatives project into N'.
///
/// `budget` caps the number of subgroups processed in this call; pass the
/// returned token to resume.
pub fn verify_azygetic_lemma(
    budget: Option<usize>,
    resume: Option<&str>,
) -> AzygeticLemmaReport {
    let subgroups = all_rank3_subgroups();
    let start: usize = resume.and_then(|t| t.parse().ok()).unwrap_or(0);
    let limit = budget.unwrap_or(usize::MAX);
    let mut report = AzygeticLemmaReport {
        subgroups_total: subgroups.len(),
        ..Default::default()
    };
    let mut index = start;
    while index < subgroups.len() && report.subgroups_processed < limit {
        let elems = &subgroups[index];
        index += 1;
        report.subgroups_processed += 1;

        // all-even cosets, by minimal representative
        let mut cosets: Vec<u8> = Vec::new();
        let mut visited = [false; 256];
        for rep in 0u16..256 {
            let rep = rep as u8;
            if visited[rep as usize] {
                continue;
            }
            let mut all_even = true;
            let mut min_rep = rep;
            for &n in elems.iter() {
                let x = rep ^ n;
                visited[x as usize] = true;
                if !parity_bits(x) {
                    all_even = false;
                }
                min_rep = min_rep.min(x);
            }
            if all_even {
                cosets.push(min_rep);
            }
        }
        if cosets.len() < 3 {
            continue;
        }
        report.subgroups_with_even_triples += 1;

        // N' data
        let mut nprime: HashSet<u8> = HashSet::new();
        for &n in elems.iter() {
            nprime.insert(n & 0x0f);
        }
        let nprime_rank = (usize::BITS - 1 - nprime.len().leading_zeros()) as usize;

        // primed projection of each all-even coset, as a 16-bit set
        let proj = |rep: u8| -> u16 {
            let mut s = 0u16;
            for &n in elems.iter() {
                s |= 1 << ((rep ^ n) & 0x0f);
            }
            s
        };
        let projections: Vec<u16> = cosets.iter().map(|&r| proj(r)).collect();

        for i in 0..cosets.len() {
            for j in (i + 1)..cosets.len() {
                for k in (j + 1)..cosets.len() {
                    let (m1, m2, m3) = (cosets[i], cosets[j], cosets[k]);
                    // azygetic is representative-independent on all-even cosets
                    let s = !parity_bits(m1) as u8
                        + !parity_bits(m2) as u8
                        + !parity_bits(m3) as u8
                        + !parity_bits(m1 ^ m2 ^ m3) as u8;
                    if s % 2 == 0 {
                        continue;
                    }
                    report.triples_checked += 1;
                    let (p1, p2, p3) = (projections[i], projections[j], projections[k]);
                    let eq12 = p1 == p2;
                    let eq13 = p1 == p3;
                    let eq23 = p2 == p3;
                    if !(eq12 || eq13 || eq23) {
                        report.property1_counterexamples.push(format!(
                            "N = {:?}, cosets ({m1:02x},{m2:02x},{m3:02x})",
                            elems
                        ));
                        continue;
                    }
                    if nprime_rank == 3 {
                        // when exactly one pair agrees, its members project into N'
                        let checks: [(bool, u8, u8, u8); 3] = [
                            (eq12 && !eq13 && !eq23, m1, m2, m3),
                            (eq13 && !eq12 && !eq23, m1, m3, m2),
                            (eq23 && !eq12 && !eq13, m2, m3, m1),
                        ];
                        for (cond, a, b, _) in checks {
                            if cond
                                && !(nprime.contains(&(a & 0x0f))
                                    && nprime.contains(&(b & 0x0f)))
                            {
                                report.property2_counterexamples.push(format!(
                                    "N = {:?}, cosets ({a:02x},{b:02x})",
                                    elems
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    if index < subgroups.len() {
        report.resume_token = Some(index.to_string());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int_mat, rat, ratio};
    use crate::graphs::catalog;
    use crate::tropical::vartheta;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn prism_q() -> QuadForm {
        QuadForm::from_int_rows(&[
            vec![17, 5, 3, 5],
            vec![5, 19, 7, 11],
            vec![3, 7, 23, 16],
            vec![5, 11, 16, 29],
        ])
        .unwrap()
    }

    pub(crate) fn non_jacobian_q() -> QuadForm {
        QuadForm::from_int_rows(&[
            vec![14, -9, 11, 0],
            vec![-9, 11, -2, 1],
            vec![11, -2, 21, 11],
            vec![0, 1, 11, 14],
        ])
        .unwrap()
    }

    #[test]
    fn decide_published_forms() {
        let d = decide_tropical(&non_jacobian_q()).unwrap();
        assert_eq!(d.verdict, Verdict::NotJacobian);
        assert_eq!(d.f_vector, FVector([62, 142, 104, 24]));
        assert!(d.matched_entry.is_none());
        assert!(d.vartheta_certificate.is_some());

        let d = decide_tropical(&prism_q()).unwrap();
        assert_eq!(d.verdict, Verdict::Jacobian);
        assert_eq!(d.matched_entry, Some(1));
        assert!(d.vartheta_certificate.is_none());

        let d = decide_tropical(&QuadForm::identity(4)).unwrap();
        assert_eq!(d.verdict, Verdict::Jacobian);
        assert_eq!(d.matched_entry, Some(16));
    }

    #[test]
    fn recover_prism_form() {
        let q = prism_q();
        let rec = recover_tropical(&q, true).unwrap();
        assert_eq!(rec.entry_index, 1);
        assert_eq!(rec.entry_name, "triangular prism");
        let mut lengths: Vec<Rational> = rec.lengths.clone();
        lengths.sort();
        let mut expect: Vec<Rational> =
            [7i64, 9, 9, 2, 3, 8, 2, 4, 12].iter().map(|&x| rat(x)).collect();
        expect.sort();
        assert_eq!(lengths, expect);
        // the witness transforms Q exactly onto B D B^t
        let x = rec.basis_witness.as_ref().unwrap();
        let bdbt = riemann_matrix(&rec.graph, &catalog()[0].basis).unwrap().quad_form().unwrap();
        assert_eq!(q.congruent(x).unwrap(), bdbt);
    }

    #[test]
    fn recover_identity_and_scaling() {
        let rec = recover_tropical(&QuadForm::identity(4), false).unwrap();
        assert_eq!(rec.entry_index, 16);
        assert!(rec.lengths.iter().all(|l| l == &rat(1)));
        assert!(rec.basis_witness.is_none());

        let scaled = QuadForm::identity(4).scale(&rat(3)).unwrap();
        let rec = recover_tropical(&scaled, false).unwrap();
        assert_eq!(rec.entry_index, 16);
        assert!(rec.lengths.iter().all(|l| l == &rat(3)));
    }

    #[test]
    fn recover_rejects_non_jacobian() {
        let err = recover_tropical(&non_jacobian_q(), false).unwrap_err();
        assert!(matches!(err, TropSchottkyError::NotAJacobian { .. }));
    }

    #[test]
    fn igusa_membership() {
        let (ok, certs) = igusa_locus_member(&prism_q()).unwrap();
        assert!(ok);
        assert!(certs.is_empty());
        let (ok, certs) = igusa_locus_member(&non_jacobian_q()).unwrap();
        assert!(!ok);
        assert!(certs.iter().any(|(l, w)| l == &vec![0, 0, 0, 1] && w == &rat(-1)));
        let (ok, _) = igusa_locus_member(&QuadForm::identity(4)).unwrap();
        assert!(ok);
    }

    #[test]
    fn published_families_are_admissible() {
        for (v, weight) in [
            (vec![1u8, 0, 0, 0], 1usize),
            (vec![1, 1, 0, 0], 2),
            (vec![1, 1, 1, 0], 3),
            (vec![1, 1, 1, 1], 4),
        ] {
            let fam = base_family(weight);
            fam.validate_admissible().unwrap_or_else(|e| panic!("weight {weight}: {e}"));
            assert_eq!(fam.orthogonal_vector().unwrap(), v, "weight {weight}");
        }
    }

    #[test]
    fn permuted_families_cover_all_labels() {
        for bits in 1u8..16 {
            let v: Vec<u8> = (0..4).map(|i| (bits >> (3 - i)) & 1).collect();
            let fam = admissible_families_for(&v).unwrap();
            assert_eq!(fam.orthogonal_vector().unwrap(), v, "label {v:?}");
        }
    }

    #[test]
    fn classical_fixed_choice_fails_admissibility() {
        let (m, n) = crate::theta_classical::igusa_characteristics();
        let choice = AdmissibleChoice { m, n };
        choice.validate_form_conditions().unwrap();
        assert_eq!(choice.n_prime_rank(), 2);
        assert!(matches!(
            choice.validate_admissible(),
            Err(TropSchottkyError::NotAdmissible(_))
        ));
    }

    #[test]
    fn breakpoint_matches_vartheta_sign() {
        let qs = [prism_q(), non_jacobian_q(), QuadForm::identity(4)];
        for q in &qs {
            for bits in 1u8..16 {
                let v: Vec<u8> = (0..4).map(|i| (bits >> (3 - i)) & 1).collect();
                let fam = admissible_families_for(&v).unwrap();
                let form = tropical_igusa_form(q, &fam).unwrap();
                let vi: Vec<BigInt> = v.iter().map(|&b| BigInt::from(b)).collect();
                let vt = vartheta(q, &vi).unwrap();
                assert_eq!(
                    form.breakpoint(),
                    vt >= Rational::zero(),
                    "label {v:?}, vartheta {vt}"
                );
            }
        }
    }

    #[test]
    fn decide_is_gl_invariant() {
        let q = prism_q();
        let s = int_mat(&[
            vec![1, 0, 1, 0],
            vec![0, 1, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, -1, 0, 1],
        ]);
        let conj = q.congruent(&s).unwrap();
        let d1 = decide_tropical(&q).unwrap();
        let d2 = decide_tropical(&conj).unwrap();
        assert_eq!(d1.verdict, d2.verdict);
        assert_eq!(d1.f_vector, d2.f_vector);
        assert_eq!(d1.matched_entry, d2.matched_entry);
    }

    #[test]
    fn roundtrip_all_catalog_entries_random_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for entry in catalog() {
            for _ in 0..3 {
                let lengths: Vec<Rational> = (0..entry.graph.edge_count())
                    .map(|_| ratio(rng.gen_range(1..=40), rng.gen_range(1..=6)))
                    .collect();
                let pairs: Vec<(usize, usize)> =
                    entry.graph.edges().iter().map(|e| (e.tail, e.head)).collect();
                let graph =
                    MetricGraph::with_lengths(entry.graph.vertex_count(), &pairs, &lengths)
                        .unwrap();
                let q = riemann_matrix(&graph, &entry.basis)
                    .unwrap()
                    .quad_form()
                    .unwrap();
                let rec = recover_tropical(&q, false)
                    .unwrap_or_else(|e| panic!("entry {}: {e}", entry.index));
                assert_eq!(rec.entry_index, entry.index, "entry {}", entry.index);
                let mut got = rec.lengths.clone();
                got.sort();
                let mut want = lengths.clone();
                want.sort();
                assert_eq!(got, want, "entry {}", entry.index);
            }
        }
    }

    #[test]
    fn lemma_verifier_smoke_with_budget() {
        let first = verify_azygetic_lemma(Some(500), None);
        assert!(!first.complete());
        assert!(first.counterexample_free());
        assert_eq!(first.subgroups_processed, 500);
        let token = first.resume_token.clone().unwrap();
        let second = verify_azygetic_lemma(Some(500), Some(&token));
        assert!(second.counterexample_free());
        assert_eq!(second.subgroups_processed, 500);
    }

    #[test]
    fn lemma_verifier_finds_structure_of_fixed_choice() {
        // the classical fixed choice has property (1) with i = 2, j = 3
        let (ms, ns) = crate::theta_classical::igusa_characteristics();
        let choice = AdmissibleChoice { m: ms, n: ns };
        let projections: Vec<std::collections::HashSet<u8>> = (0..3)
            .map(|i| {
                choice.coset(i)
                    .iter()
                    .map(|c| c.upper.iter().fold(0u8, |acc, &b| (acc << 1) | b))
                    .collect()
            })
            .collect();
        assert_ne!(projections[0], projections[1]);
        assert_eq!(projections[1], projections[2]);

        // swapping the two halves raises dim N' to 3 with m1', m3' in N'
        let swap = |c: &Characteristic| Characteristic::new(c.lower, c.upper);
        let swapped = AdmissibleChoice {
            m: [swap(&ms[0]), swap(&ms[1]), swap(&ms[2])],
            n: [swap(&ns[0]), swap(&ns[1]), swap(&ns[2])],
        };
        assert_eq!(swapped.n_prime_rank(), 3);
        let nset = swapped.n_prime_set();
        let pr = |c: &Characteristic| c.upper.iter().fold(0u8, |acc, &b| (acc << 1) | b);
        assert!(nset.contains(&pr(&swapped.m[0])));
        assert!(nset.contains(&pr(&swapped.m[2])));
        assert!(!nset.contains(&pr(&swapped.m[1])));
    }
}
