use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use super::{one, require_tag, ExperimentError, ExperimentReport, Relation, Rhs, Setting};
use crate::correlate::{orbit_average, Orbit};
use crate::seq::{Exponent, Rational, SeqSpec};
use crate::spectral::Tag;
use crate::torus::{has_root_of_unity_eigenvalue, AffineSystem, CharIndex, CharVector, Irrational, PrimeSet, TorusError};

/// Rank of a rational matrix given by rows.
fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c] / rows[r][c];
                for j in c..cols {
                    let v = factor * rows[r][j];
                    rows[i][j] -= v;
                }
            }
        }
        r += 1;
    }
    r
}

/// A rotation `x ↦ x + b` is totally ergodic when no nonzero `m` makes
/// `m·b` rational. With the declared symbols independent over the
/// rationals this is full row rank of the symbol-coefficient matrix.
pub fn is_totally_ergodic(s: &AffineSystem) -> bool {
    if !s.is_rotation() {
        return false;
    }
    let mut symbols: Vec<Irrational> = s
        .translation()
        .iter()
        .flat_map(|p| p.terms().iter().map(|(a, _)| a.clone()))
        .collect();
    symbols.sort();
    symbols.dedup();
    let rows: Vec<Vec<Rational>> = s
        .translation()
        .iter()
        .map(|p| symbols.iter().map(|a| Rational::from_integer(p.coefficient(a))).collect())
        .collect();
    !symbols.is_empty() && rank(rows) == s.dim()
}

/// Toral automorphisms without root-of-unity eigenvalues are weakly mixing,
/// with or without a translation.
pub fn is_weakly_mixing(s: &AffineSystem) -> bool {
    s.dim() > 0 && !has_root_of_unity_eigenvalue(s.matrix())
}

fn shifted(p: &[Rational], h: u64) -> Vec<Rational> {
    // p(n + h) = Σ_j c_j Σ_i C(j, i) h^{j−i} n^i
    let h = Rational::from_integer(h as i128);
    let mut out = vec![Rational::zero(); p.len()];
    for (j, c) in p.iter().enumerate() {
        let mut binom = Rational::one();
        for i in (0..=j).rev() {
            // coefficient of n^i in (n + h)^j is C(j, i) h^{j−i}
            let k = j - i;
            out[i] += c * binom * pow(h, k);
            binom = binom * Rational::from_integer(i as i128) / Rational::from_integer(k as i128 + 1);
        }
    }
    out
}

fn pow(x: Rational, k: usize) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * x)
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() - b.get(i).copied().unwrap_or_default())
        .collect()
}

fn coeffs(p: &SeqSpec) -> Result<Vec<Rational>, ExperimentError> {
    p.power_coeffs()
        .ok_or_else(|| ExperimentError::Invalid(format!("{p:?} is not a polynomial")))
}

/// A dependency `Σ λ_j q_j = const` among the family
/// `{p_1(n+h) − p_1(n), p_i(n+h) − p_1(n), p_i(n) − p_1(n) : i ≥ 2}` for
/// some `h ≤ lags`, as `(h, λ)`.
pub fn independence_violation(polys: &[SeqSpec], lags: u64) -> Result<Option<(u64, Vec<Rational>)>, ExperimentError> {
    let ps: Vec<Vec<Rational>> = polys.iter().map(coeffs).collect::<Result<_, _>>()?;
    let Some(p1) = ps.first() else {
        return Ok(None);
    };
    for h in 1..=lags {
        let mut family: Vec<Vec<Rational>> = ps.iter().map(|p| sub(&shifted(p, h), p1)).collect();
        family.extend(ps.iter().skip(1).map(|p| sub(p, p1)));
        if let Some(lambda) = kernel_vector(&family) {
            return Ok(Some((h, lambda)));
        }
    }
    Ok(None)
}

/// A nonzero `λ` with `Σ λ_j (q_j − q_j(0)) = 0`, if any.
fn kernel_vector(family: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    let m = family.len();
    let deg = family.iter().map(Vec::len).max().unwrap_or(1);
    // rows: degrees 1..deg, columns: family members
    let mut a: Vec<Vec<Rational>> = (1..deg)
        .map(|i| family.iter().map(|q| q.get(i).copied().unwrap_or_default()).collect())
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..m {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let lead = a[r][c];
        for x in a[r].iter_mut() {
            *x /= lead;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c];
                for j in 0..m {
                    let v = factor * a[r][j];
                    a[i][j] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..m).find(|c| !pivots.contains(c))?;
    let mut lambda = vec![Rational::zero(); m];
    lambda[free] = Rational::one();
    for (row, &c) in pivots.iter().enumerate() {
        lambda[c] = -a[row][free];
    }
    Some(lambda)
}

/// Degree at least 2 and pairwise differences non-constant; the first
/// violation found.
pub fn essentially_distinct(polys: &[SeqSpec]) -> Result<Option<String>, ExperimentError> {
    let ps: Vec<Vec<Rational>> = polys.iter().map(coeffs).collect::<Result<_, _>>()?;
    for (i, p) in ps.iter().enumerate() {
        if p.iter().skip(2).all(Zero::is_zero) {
            return Ok(Some(format!("polynomial {} has degree below 2", i + 1)));
        }
        for (j, q) in ps.iter().enumerate().skip(i + 1) {
            if sub(p, q).iter().skip(1).all(Zero::is_zero) {
                return Ok(Some(format!("polynomials {} and {} differ by a constant", i + 1, j + 1)));
            }
        }
    }
    Ok(None)
}

/// Growth hypotheses for `⌊n^{c_i}⌋`: every `c_i > 1` non-integral, and
/// consecutive exponents more than 1 apart. The first violation found.
pub fn growth_condition(exponents: &[Exponent]) -> Option<String> {
    let mut cs: Vec<Exponent> = exponents.to_vec();
    cs.sort_by_key(|c| (c.int_part(), c.frac_part()));
    for c in &cs {
        if c.is_integer() || c.int_part() < 1 {
            return Some(format!("exponent {c:?} must exceed 1 and not be an integer"));
        }
    }
    for w in cs.windows(2) {
        // c_{i+1} − c_i > 1 exactly in the fixed-point representation
        let gap_int = w[1].int_part() - w[0].int_part();
        let ok = gap_int > 1 || (gap_int == 1 && w[1].frac_part() > w[0].frac_part());
        if !ok {
            return Some(format!("exponents {:?} and {:?} are not more than 1 apart", w[0], w[1]));
        }
    }
    None
}

enum Family {
    Polynomial,
    Hardy(Vec<Exponent>),
}

fn family_of(seqs: &[SeqSpec]) -> Option<Family> {
    if seqs.iter().all(|s| s.power_coeffs().is_some()) {
        return Some(Family::Polynomial);
    }
    seqs.iter()
        .map(|s| match s {
            SeqSpec::FloorPower { exponent } => Some(*exponent),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()
        .map(Family::Hardy)
}

fn share_torus(d: usize, systems: &[&AffineSystem], vectors: &[&CharVector]) -> Result<(), ExperimentError> {
    if systems.iter().any(|s| s.dim() != d) || vectors.iter().any(|v| v.dim() != d) {
        return Err(ExperimentError::Invalid("systems and observables must share one torus".into()));
    }
    Ok(())
}

/// Norm below which a projected component counts as equal to the mean.
const SPECTRAL_GAP: f64 = 1e-12;

/// `max_i ‖part(g_i) − ∫g_i‖`.
fn mean_gap(
    gs: &[CharVector],
    part: impl Fn(&CharVector) -> Result<CharVector, TorusError>,
) -> Result<f64, ExperimentError> {
    let mut worst = 0.0f64;
    for g in gs {
        let p = part(g)?;
        worst = worst.max(p.sub(&CharVector::constant(g.dim(), g.mean())).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct SingleTInput {
    pub t: AffineSystem,
    pub s: AffineSystem,
    pub polys: Vec<SeqSpec>,
    pub f: CharVector,
    pub gs: Vec<CharVector>,
}

/// `‖(1/N) Σ T^n f · Π S^{p_i(n)} g_i − P_T f · Π ∫g_i‖`.
pub fn run_single_t(
    input: &SingleTInput,
    setting: &Setting,
    tolerance: f64,
    lags: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let d = input.t.dim();
    let mut vectors = vec![&input.f];
    vectors.extend(&input.gs);
    share_torus(d, &[&input.s], &vectors)?;
    if input.polys.is_empty() || input.polys.len() != input.gs.len() {
        return Err(ExperimentError::Invalid("one observable per sequence is required".into()));
    }
    let mut report = ExperimentReport::new("single_t", "projection_distance");
    let tol = report.tolerance("conclusion", tolerance);
    report.parameters = json!({
        "sequences": input.polys.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>(),
        "lags": lags,
    });
    match family_of(&input.polys) {
        Some(Family::Polynomial) => {
            let violation = independence_violation(&input.polys, lags)?;
            let detail = match &violation {
                None => format!("independent for h = 1..={lags}"),
                Some((h, lambda)) => format!(
                    "dependent at h = {h} with coefficients {:?}",
                    lambda.iter().map(ToString::to_string).collect::<Vec<_>>()
                ),
            };
            report.require("difference family independent", violation.is_none(), detail);
            let gap = mean_gap(&input.gs, |g| input.s.rational_spectrum_part(g))?;
            report.require(
                "rational-spectrum part of each g_i is its mean",
                gap < SPECTRAL_GAP,
                format!("largest deviation {gap:.3e}; S totally ergodic: {}", is_totally_ergodic(&input.s)),
            );
        }
        Some(Family::Hardy(cs)) => {
            let v = growth_condition(&cs);
            report.require("growth condition", v.is_none(), v.unwrap_or_else(|| "exponents non-integral, gaps above 1".into()));
            let gap = mean_gap(&input.gs, |g| input.s.invariant_projection(g))?;
            report.require(
                "S-invariant part of each g_i is its mean",
                gap < SPECTRAL_GAP,
                format!("largest deviation {gap:.3e}"),
            );
        }
        None => report.abstain("sequences mix polynomial and other kinds"),
    }
    require_tag(&mut report, "T-orbit of f", &Orbit::system(input.t.clone(), input.f.clone()), setting, Tag::Singular)?;
    let mut parts = vec![Orbit::system(input.t.clone(), input.f.clone())];
    parts.extend(
        input
            .polys
            .iter()
            .zip(&input.gs)
            .map(|(p, g)| Orbit::iterate(input.s.clone(), p.clone(), g.clone())),
    );
    let means = input.gs.iter().fold(one(), |acc, g| acc * g.mean());
    let target = input.t.invariant_projection(&input.f)?.scale(means);
    let averages = orbit_average(&Orbit::Product(parts), None, &setting.schedule)?;
    let mut last = None;
    for (&n, a) in setting.schedule.cutoffs().iter().zip(&averages) {
        last = Some(report.row("projection_distance", n, None, a.sub(&target).norm(), 0.0));
    }
    report.assert("distance to the predicted limit vanishes", last.expect("schedule"), Relation::Lt, Rhs::Value(tol));
    Ok(report.finish())
}

#[derive(Clone, Debug)]
pub struct T1T2Input {
    pub t: AffineSystem,
    pub rs: Vec<AffineSystem>,
    pub s: AffineSystem,
    pub w: AffineSystem,
    pub polys: Vec<SeqSpec>,
    pub f: CharVector,
    pub hs: Vec<CharVector>,
    pub gs: Vec<CharVector>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct T1T2Options {
    pub tolerance: f64,
    /// Cutoff for the exhaustive big-integer comparison.
    pub exact_n: u64,
    /// Largest estimated index size, in bits, for the big-integer comparison.
    pub bit_budget: f64,
}

impl Default for T1T2Options {
    fn default() -> Self {
        T1T2Options {
            tolerance: 0.05,
            exact_n: 200,
            bit_budget: 4.0e6,
        }
    }
}

/// A factor `U_1^{s_1(n)} ⋯ U_k^{s_k(n)} v` of the product sequence.
struct Factor {
    steps: Vec<(AffineSystem, SeqSpec)>,
    base: CharVector,
}

impl T1T2Input {
    fn factors(&self) -> Vec<Factor> {
        let linear = SeqSpec::monomial(1);
        let mut out = vec![Factor {
            steps: vec![(self.t.clone(), linear.clone())],
            base: self.f.clone(),
        }];
        out.extend(self.rs.iter().zip(&self.hs).map(|(r, h)| Factor {
            steps: vec![(r.clone(), linear.clone())],
            base: h.clone(),
        }));
        out.extend(self.polys.iter().zip(&self.gs).map(|(p, g)| Factor {
            steps: vec![(self.s.clone(), p.clone()), (self.w.clone(), linear.clone())],
            base: g.clone(),
        }));
        out
    }

    fn orbit(&self) -> Orbit {
        Orbit::Product(
            self.factors()
                .into_iter()
                .map(|f| Orbit::Chain {
                    steps: f.steps,
                    f: f.base,
                })
                .collect(),
        )
    }
}

/// Agreement of index equality between fingerprint sets, over every term of
/// every product `n ≤ N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FingerprintAudit {
    pub n_max: u64,
    pub slots: u64,
    pub distinct: u64,
    /// Slots grouped differently by the two sides.
    pub disagreements: u64,
    /// Slots whose fingerprint differs from the residues of the exact index.
    pub residue_mismatches: u64,
}

fn step_exponent(seq: &SeqSpec, n: u64) -> Result<i64, ExperimentError> {
    let k = seq.eval(n as i128)?;
    i64::try_from(k).map_err(|_| ExperimentError::Invalid(format!("iterate {k} at n = {n} exceeds 64 bits")))
}

/// Indices of the product's terms at `n`, one per choice of a term from
/// each factor, in a fixed order.
fn slot_indices(factors: &[Factor], n: u64, set: PrimeSet) -> Result<Vec<CharIndex>, ExperimentError> {
    let mut slots = vec![CharIndex::zero(factors.first().map_or(0, |f| f.base.dim())).rebased(set).expect("small")];
    for factor in factors {
        let mut terms = Vec::with_capacity(factor.base.len());
        for (m, _) in factor.base.iter() {
            let mut idx = m.rebased(set).ok_or_else(|| ExperimentError::Invalid("observable index not exact".into()))?;
            for (system, seq) in factor.steps.iter().rev() {
                idx = system.pushforward_char(&idx, step_exponent(seq, n)?)?.0;
            }
            terms.push(idx);
        }
        slots = slots.iter().flat_map(|a| terms.iter().map(move |b| a.add(b))).collect();
    }
    Ok(slots)
}

fn exact_slot_indices(factors: &[Factor], n: u64) -> Result<Vec<Vec<BigInt>>, ExperimentError> {
    let d = factors.first().map_or(0, |f| f.base.dim());
    let mut slots = vec![vec![BigInt::zero(); d]];
    for factor in factors {
        let mut terms = Vec::with_capacity(factor.base.len());
        for (m, _) in factor.base.iter() {
            let mut idx = m.clone();
            for (system, seq) in factor.steps.iter().rev() {
                if system.is_rotation() {
                    continue;
                }
                let k = step_exponent(seq, n)?;
                let k = u64::try_from(k).map_err(|_| ExperimentError::Invalid("negative iterate in exact audit".into()))?;
                idx = system.exact_orbit_index(&idx, k);
            }
            terms.push(idx.exact().expect("exact path"));
        }
        slots = slots
            .iter()
            .flat_map(|a| terms.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x + y).collect()))
            .collect();
    }
    Ok(slots)
}

/// Number of slots whose group under `a` differs from their group under `b`.
fn partition_disagreements<A: Ord, B: Ord>(a: &[A], b: &[B]) -> u64 {
    let mut first_a: BTreeMap<&A, usize> = BTreeMap::new();
    let mut first_b: BTreeMap<&B, usize> = BTreeMap::new();
    let mut bad = 0;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let la = *first_a.entry(x).or_insert(i);
        let lb = *first_b.entry(y).or_insert(i);
        if la != lb {
            bad += 1;
        }
    }
    bad
}

fn all_slots(factors: &[Factor], n_max: u64, set: PrimeSet) -> Result<Vec<CharIndex>, ExperimentError> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        out.extend(slot_indices(factors, n, set)?);
    }
    Ok(out)
}

fn distinct<T: Ord>(v: &[T]) -> u64 {
    v.iter().collect::<std::collections::BTreeSet<_>>().len() as u64
}

/// Compares index equality under the primary and audit prime sets.
pub fn fingerprint_audit(input: &T1T2Input, n_max: u64) -> Result<FingerprintAudit, ExperimentError> {
    let factors = input.factors();
    let primary = all_slots(&factors, n_max, PrimeSet::Primary)?;
    let audit = all_slots(&factors, n_max, PrimeSet::Audit)?;
    Ok(FingerprintAudit {
        n_max,
        slots: primary.len() as u64,
        distinct: distinct(&primary),
        disagreements: partition_disagreements(&primary, &audit),
        residue_mismatches: 0,
    })
}

/// Compares fingerprint equality with exact big-integer equality.
pub fn exact_audit(input: &T1T2Input, n_max: u64) -> Result<FingerprintAudit, ExperimentError> {
    let factors = input.factors();
    let primary = all_slots(&factors, n_max, PrimeSet::Primary)?;
    let mut exact = Vec::with_capacity(primary.len());
    for n in 1..=n_max {
        exact.extend(exact_slot_indices(&factors, n)?);
    }
    let residue_mismatches = primary
        .iter()
        .zip(&exact)
        .filter(|(p, e)| **p != CharIndex::from_big((*e).clone(), PrimeSet::Primary))
        .count() as u64;
    Ok(FingerprintAudit {
        n_max,
        slots: primary.len() as u64,
        distinct: distinct(&exact),
        disagreements: partition_disagreements(&primary, &exact),
        residue_mismatches,
    })
}

/// Rough size in bits of the largest exact index up to `n_max`.
fn exact_bits_estimate(factors: &[Factor], n_max: u64) -> Result<f64, ExperimentError> {
    let mut total: f64 = 0.0;
    for factor in factors {
        let mut bits = 64.0;
        for (system, seq) in &factor.steps {
            if system.is_rotation() {
                continue;
            }
            let norm = system
                .matrix()
                .iter()
                .map(|r| r.iter().map(|x| x.unsigned_abs() as f64).sum::<f64>())
                .fold(2.0, f64::max);
            bits += step_exponent(seq, n_max)?.unsigned_abs() as f64 * norm.log2();
        }
        total = total.max(bits);
    }
    Ok(total)
}

/// `‖(1/N) Σ T^n f · Π R_i^n h_i · Π S^{p_j(n)} W^n g_j‖` for weakly mixing
/// `S`, with index equality audited across fingerprint sets and against
/// exact integers.
pub fn run_t1t2(input: &T1T2Input, setting: &Setting, opts: T1T2Options) -> Result<ExperimentReport, ExperimentError> {
    let d = input.t.dim();
    let mut systems: Vec<&AffineSystem> = vec![&input.s, &input.w];
    systems.extend(&input.rs);
    let mut vectors = vec![&input.f];
    vectors.extend(&input.hs);
    vectors.extend(&input.gs);
    share_torus(d, &systems, &vectors)?;
    if input.polys.is_empty() || input.polys.len() != input.gs.len() || input.rs.len() != input.hs.len() {
        return Err(ExperimentError::Invalid("one observable per system and per sequence is required".into()));
    }
    let mut report = ExperimentReport::new("t1t2", "product_norm");
    let tol = report.tolerance("conclusion", opts.tolerance);
    report.parameters = json!({
        "sequences": input.polys.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>(),
        "r_systems": input.rs.len(),
        "exact_n": opts.exact_n,
    });

    let mut group: Vec<&AffineSystem> = input.rs.iter().collect();
    group.push(&input.s);
    group.push(&input.w);
    let mut commute = true;
    for (i, a) in group.iter().enumerate() {
        for b in &group[i + 1..] {
            commute &= a.commutes_with(b)?;
        }
    }
    report.require("R_i, S, W commute", commute, "pairwise composition checked exactly");
    report.require("S weakly mixing", is_weakly_mixing(&input.s), "no eigenvalue of S is a root of unity");
    match family_of(&input.polys) {
        Some(Family::Polynomial) => {
            let v = essentially_distinct(&input.polys)?;
            report.require("sequences essentially distinct", v.is_none(), v.unwrap_or_else(|| "degree at least 2, differences non-constant".into()));
        }
        Some(Family::Hardy(cs)) => {
            let v = growth_condition(&cs);
            report.require("growth condition", v.is_none(), v.unwrap_or_else(|| "exponents non-integral, gaps above 1".into()));
        }
        None => report.abstain("sequences mix polynomial and other kinds"),
    }
    let centered = input.gs.iter().any(|g| g.mean().norm() == 0.0);
    report.require("some g_j has zero mean", centered, "mean of each g_j is its zero-index coefficient");
    require_tag(&mut report, "T-orbit of f", &Orbit::system(input.t.clone(), input.f.clone()), setting, Tag::Singular)?;

    let averages = orbit_average(&input.orbit(), None, &setting.schedule)?;
    let mut last = None;
    for (&n, a) in setting.schedule.cutoffs().iter().zip(&averages) {
        last = Some(report.row("product_norm", n, None, a.norm(), 0.0));
    }
    report.assert("product average vanishes", last.expect("schedule"), Relation::Lt, Rhs::Value(tol));

    let top = setting.schedule.top();
    let audit = fingerprint_audit(input, top)?;
    report.row("slots", top, None, audit.slots as f64, 0.0);
    report.row("distinct_fraction", top, None, audit.distinct as f64 / audit.slots.max(1) as f64, 0.0);
    let dis = report.row("fingerprint_disagreements", top, None, audit.disagreements as f64, 0.0);
    report.assert("primary and audit fingerprints group indices alike", dis, Relation::Le, Rhs::Value(0.0));

    let exact_n = opts.exact_n.min(top);
    let factors = input.factors();
    let bits = exact_bits_estimate(&factors, exact_n)?;
    if bits <= opts.bit_budget {
        let exact = exact_audit(input, exact_n)?;
        report.row("exact_distinct", exact_n, None, exact.distinct as f64, 0.0);
        let m = report.row("exact_disagreements", exact_n, None, exact.disagreements as f64, 0.0);
        report.assert("fingerprints group indices like exact integers", m, Relation::Le, Rhs::Value(0.0));
        let r = report.row("exact_residue_mismatches", exact_n, None, exact.residue_mismatches as f64, 0.0);
        report.assert("fingerprints are the residues of the exact indices", r, Relation::Le, Rhs::Value(0.0));
    } else {
        report.note(format!("exact comparison skipped: indices reach about {bits:.0} bits at n = {exact_n}"));
    }
    Ok(report.finish())
}
