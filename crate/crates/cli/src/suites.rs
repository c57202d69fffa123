//! Suite orchestration: every suite maps the shared windows to one
//! [`CheckResult`]. Suites run concurrently; the report sorts them by name.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use readchain_core::commutant::{
    series_apply, shift_commutant_extract, solve_commutant, toeplitz_from_series,
};
use readchain_core::operators::NormVerdict;
use readchain_core::{
    norm_scan, BasisTag, EntryWitness, Evaluator, ExactScalar, GrowthSequence, NonScalarWitness,
    ReadBasis, ReadWindows, SeriesWindow, Window,
};

use crate::config::{ConfigError, RunConfig, Suite};
use crate::report::{CheckResult, Report, Status};

/// Precision of the exact/numeric cross-check.
pub const CONSISTENCY_BITS: u32 = 256;
/// Zero scalars must evaluate to intervals narrower than `2^-200`.
pub const ZERO_WIDTH_LOG2: i64 = -200;
/// Largest degree of the random series.
pub const MAX_SERIES_DEGREE: usize = 10;

/// Runs the configured suites. Fails only on an invalid configuration.
pub fn run_suite(config: &RunConfig) -> Result<Report, ConfigError> {
    config.check()?;
    let basis = ReadBasis::new(config.growth_sequence()).map_err(|e| ConfigError::BadValue {
        key: "sequence".into(),
        reason: e.to_string(),
    })?;
    let windows = ReadWindows::new(&basis, config.n).map_err(|e| ConfigError::BadValue {
        key: "N".into(),
        reason: e.to_string(),
    })?;
    let ctx = Context {
        config,
        seq: basis.sequence(),
        windows: &windows,
    };
    let digest = config.digest();
    let checks = config
        .suites
        .par_iter()
        .map(|&suite| {
            let start = Instant::now();
            let (status, witness) = ctx.run(suite);
            let duration_ms = if config.timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            CheckResult {
                check: suite.name().to_string(),
                status,
                witness,
                duration_ms,
                config_digest: digest.clone(),
            }
        })
        .collect();
    Ok(Report::new(config.clone(), checks))
}

struct Context<'a> {
    config: &'a RunConfig,
    seq: &'a GrowthSequence,
    windows: &'a ReadWindows<'a>,
}

type Outcome = (Status, Value);

fn pass(witness: Value) -> Outcome {
    (Status::Pass, witness)
}

fn fail(witness: Value) -> Outcome {
    (Status::Fail, witness)
}

fn internal(e: impl ToString) -> Outcome {
    fail(json!({ "error": e.to_string() }))
}

pub fn entry_json(w: &EntryWitness) -> Value {
    json!({ "row": w.row, "col": w.col, "scalar_text": w.value.to_string() })
}

fn non_scalar_json(w: &NonScalarWitness) -> Value {
    match *w {
        NonScalarWitness::OffDiagonal { row, col } => {
            json!({ "kind": "off_diagonal", "row": row, "col": col })
        }
        NonScalarWitness::DiagonalsDiffer { first, second } => {
            json!({ "kind": "diagonals_differ", "first": first, "second": second })
        }
    }
}

impl Context<'_> {
    fn run(&self, suite: Suite) -> Outcome {
        match suite {
            Suite::ClassifyPartition => self.classify_partition(),
            Suite::BasisInverse => self.basis_inverse(),
            Suite::S2ClosedForm => self.s2_closed_form(),
            Suite::ChainCommutators => self.chain_commutators(),
            Suite::NonScalarity => self.non_scalarity(),
            Suite::TtildeShift => self.ttilde_shift(),
            Suite::ToeplitzLemma => self.toeplitz_lemma(),
            Suite::CommutantRoundtrip => self.commutant_roundtrip(),
            Suite::NormScan => self.norm_scan(),
            Suite::NumericConsistency => self.numeric_consistency(),
        }
    }

    fn n(&self) -> usize {
        self.windows.size()
    }

    /// `None` when `m` divides every term.
    fn refusal(&self) -> Option<Outcome> {
        let m = self.config.m;
        let term = self.seq.interleaved().into_iter().find(|t| t % m != 0)?;
        Some((
            Status::Refused,
            json!({ "reason": format!("m={m} does not divide term {term}") }),
        ))
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }

    fn classify_partition(&self) -> Outcome {
        match partition_mismatch(self.seq) {
            None => pass(json!({ "indices": self.seq.max_index() + 1 })),
            Some(m) => {
                fail(json!({ "index": m.index, "oracle": m.oracle, "classified": m.classified }))
            }
        }
    }

    fn basis_inverse(&self) -> Outcome {
        let (q, qinv) = (self.windows.q(), self.windows.qinv());
        let id = self.windows.identity();
        for (label, prod) in [("Q*Qinv", q.product(qinv)), ("Qinv*Q", qinv.product(q))] {
            let diff = match prod.and_then(|p| p.sub(&id)) {
                Ok(d) => d,
                Err(e) => return internal(e),
            };
            if let Some(w) = diff.first_nonzero() {
                let mut v = entry_json(&w);
                v["product"] = json!(label);
                return fail(v);
            }
        }
        for (label, w) in [("Q", q), ("Qinv", qinv)] {
            if !(w.is_upper_triangular() && w.has_full_diagonal()) {
                return fail(
                    json!({ "window": label, "reason": "not triangular with full diagonal" }),
                );
            }
        }
        pass(json!({
            "N": self.n(),
            "triangularity": "upper",
            "q_nnz": q.nnz(),
            "qinv_nnz": qinv.nnz(),
        }))
    }

    fn s2_closed_form(&self) -> Outcome {
        if let Some(r) = self.refusal() {
            return r;
        }
        match self.windows.s2_closed_form_check(self.config.m) {
            Ok(c) if c.holds => pass(json!({ "N": self.n(), "m": self.config.m })),
            Ok(c) => fail(json!({ "index": c.counterexample })),
            Err(e) => internal(e),
        }
    }

    /// `T`, `S1 = T^m`, `S2`, `K`.
    fn chain(&self) -> Result<[(&'static str, Window); 4], readchain_core::Error> {
        let t = self.windows.t().clone();
        let s1 = t.pow(self.config.m as u32);
        let s2 = self.windows.s2(self.config.m)?;
        Ok([("T", t), ("S1", s1), ("S2", s2), ("K", self.windows.k())])
    }

    fn chain_commutators(&self) -> Outcome {
        if let Some(r) = self.refusal() {
            return r;
        }
        let chain = match self.chain() {
            Ok(c) => c,
            Err(e) => return internal(e),
        };
        let mut pairs = Vec::new();
        for w in chain.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let label = format!("[{},{}]", a.0, b.0);
            match a.1.commutator(&b.1) {
                Ok(c) => {
                    if let Some(w) = c.first_nonzero() {
                        let mut v = entry_json(&w);
                        v["pair"] = json!(label);
                        return fail(v);
                    }
                }
                Err(e) => return internal(e),
            }
            pairs.push(label);
        }
        pass(json!({ "zero_commutators": pairs, "m": self.config.m }))
    }

    fn non_scalarity(&self) -> Outcome {
        if let Some(r) = self.refusal() {
            return r;
        }
        let chain = match self.chain() {
            Ok(c) => c,
            Err(e) => return internal(e),
        };
        let mut witnesses = serde_json::Map::new();
        for (label, w) in chain.iter().skip(1) {
            match w.non_scalar_witness() {
                Some(nsw) => {
                    witnesses.insert(label.to_string(), non_scalar_json(&nsw));
                }
                None => return fail(json!({ "scalar": label })),
            }
        }
        let k_rank_one = chain[3].1.is_rank_one();
        let witness = json!({ "witnesses": witnesses, "k_rank_one": k_rank_one });
        if k_rank_one {
            pass(witness)
        } else {
            fail(witness)
        }
    }

    fn ttilde_shift(&self) -> Outcome {
        let shift = self.windows.shift().with_basis(BasisTag::E);
        match self
            .windows
            .conjugate_to_e(self.windows.t())
            .and_then(|c| c.sub(&shift))
        {
            Ok(d) => match d.first_nonzero() {
                None => pass(json!({ "N": self.n() })),
                Some(w) => fail(entry_json(&w)),
            },
            Err(e) => internal(e),
        }
    }

    fn toeplitz_lemma(&self) -> Outcome {
        let n = self.n();
        let s = self.windows.shift();
        let mut rng = self.rng(1);
        let mut perturbed = 0usize;
        for case in 0..self.config.cases {
            let p = random_series(&mut rng, n);
            let a = toeplitz_from_series(&p, n, BasisTag::F);
            match a.commutator(&s) {
                Ok(c) if c.is_zero() => {}
                Ok(c) => {
                    let mut v = entry_json(&c.first_nonzero().expect("nonzero"));
                    v["case"] = json!(case);
                    return fail(v);
                }
                Err(e) => return internal(e),
            }
            let sol = shift_commutant_extract(&a);
            if !sol.residual_zero || !sol.series.same_series(&p) {
                return fail(json!({ "case": case, "reason": "series not recovered" }));
            }
            if n < 2 {
                continue;
            }
            let (i, j) = loop {
                let ij = (rng.gen_range(0..n), rng.gen_range(0..n));
                if ij != (n - 1, 0) {
                    break ij;
                }
            };
            let mut b = a;
            let old = b.entry(i, j).cloned().unwrap_or_default();
            let delta = random_nonzero_rational(&mut rng);
            if let Err(e) = b.set(i, j, &old + &delta) {
                return internal(e);
            }
            let breaks = b.commutator(&s).map(|c| !c.is_zero());
            if breaks.as_ref().ok() != Some(&true) || shift_commutant_extract(&b).residual_zero {
                return fail(
                    json!({ "case": case, "perturbation": [i, j], "reason": "still commutes" }),
                );
            }
            perturbed += 1;
        }
        pass(json!({ "N": n, "windows": self.config.cases, "perturbations": perturbed }))
    }

    fn commutant_roundtrip(&self) -> Outcome {
        let n = self.n();
        let mut rng = self.rng(2);
        let series: Vec<SeriesWindow> = (0..self.config.cases)
            .map(|_| random_series(&mut rng, n.min(MAX_SERIES_DEGREE + 1)))
            .collect();
        let t = self.windows.t();
        let first_failure = series.par_iter().enumerate().find_map_first(|(case, p)| {
            let r = series_apply(p, self.windows);
            let witness = |v: Value| Some(json!({ "case": case, "detail": v }));
            match t.commutator(&r) {
                Ok(c) => {
                    if let Some(w) = c.first_nonzero() {
                        return witness(entry_json(&w));
                    }
                }
                Err(e) => return witness(json!(e.to_string())),
            }
            match solve_commutant(&r, self.windows) {
                Ok(sol) if sol.residual_zero && sol.series.same_series(p) => None,
                Ok(sol) => witness(json!({
                    "recovered": sol.series.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "expected": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                })),
                Err(e) => witness(json!(e.to_string())),
            }
        });
        if let Some(w) = first_failure {
            return fail(w);
        }
        let k_witness = match solve_commutant(&self.windows.k(), self.windows) {
            Ok(sol) => match (sol.residual_zero, sol.failure_witness) {
                (false, Some(w)) => entry_json(&w),
                _ => return fail(json!({ "reason": "K solved as a series in T" })),
            },
            Err(e) => return internal(e),
        };
        pass(json!({ "N": n, "series": self.config.cases, "k_failure": k_witness }))
    }

    fn norm_scan(&self) -> Outcome {
        let n = self.n().min(self.seq.max_index());
        let report = match norm_scan(
            self.windows.basis(),
            n,
            self.config.precision_bits,
            self.config.precision_cap,
        ) {
            Ok(r) => r,
            Err(e) => return (Status::Exploratory, json!({ "error": e.to_string() })),
        };
        let columns: Vec<Value> = report
            .columns
            .iter()
            .map(|c| {
                let exact = exact_l1_norm(self.windows.basis(), c.column);
                json!({
                    "column": c.column,
                    "block": c.block,
                    "norm": c.norm.midpoint_f64(),
                    "exact": exact,
                    "verdict": verdict_name(c.verdict),
                    "bits": c.bits,
                })
            })
            .collect();
        let block_maxima: Vec<Value> = report
            .block_maxima
            .iter()
            .map(|(b, e)| json!({ "block": b, "max": e.midpoint_f64() }))
            .collect();
        (
            Status::Exploratory,
            json!({
                "columns": columns,
                "block_maxima": block_maxima,
                "overall_max": report.overall_max.midpoint_f64(),
                "precision_bits": report.precision_bits,
                "max_bits_used": report.max_bits_used,
            }),
        )
    }

    /// Every scalar produced by the exact suites, checked against a
    /// 256-bit enclosure: zero scalars pin to zero, nonzero ones exclude it.
    fn numeric_consistency(&self) -> Outcome {
        let mut checker = Consistency::new();
        let w = self.windows;
        let id = w.identity();
        checker.window("Q", w.q());
        checker.window("Qinv", w.qinv());
        checker.window("T", w.t());
        match w.q().product(w.qinv()) {
            Ok(p) => checker.differences("Q*Qinv-I", &p, &id),
            Err(e) => return internal(e),
        }
        match w.conjugate_to_e(w.t()) {
            Ok(c) => checker.differences("Ttilde-S", &c, &w.shift().with_basis(BasisTag::E)),
            Err(e) => return internal(e),
        }
        if self.refusal().is_none() {
            let chain = match self.chain() {
                Ok(c) => c,
                Err(e) => return internal(e),
            };
            for (label, win) in &chain {
                checker.window(label, win);
            }
            for pair in chain.windows(2) {
                let (a, b) = (&pair[0].1, &pair[1].1);
                match (a.product(b), b.product(a)) {
                    (Ok(ab), Ok(ba)) => {
                        checker.differences(&format!("[{},{}]", pair[0].0, pair[1].0), &ab, &ba)
                    }
                    (Err(e), _) | (_, Err(e)) => return internal(e),
                }
            }
        }
        let mut rng = self.rng(2);
        for _ in 0..self.config.cases.min(5) {
            let p = random_series(&mut rng, self.n().min(MAX_SERIES_DEGREE + 1));
            let r = series_apply(&p, w);
            checker.window("p(T)", &r);
            match (w.t().product(&r), r.product(w.t())) {
                (Ok(tr), Ok(rt)) => checker.differences("[T,p(T)]", &tr, &rt),
                (Err(e), _) | (_, Err(e)) => return internal(e),
            }
        }
        match checker.failure {
            Some(v) => fail(v),
            None => pass(json!({
                "bits": CONSISTENCY_BITS,
                "zero": checker.zero,
                "nonzero": checker.nonzero,
            })),
        }
    }
}

/// Lazily-failing exact/numeric comparison.
struct Consistency {
    eval: Evaluator,
    zero: usize,
    nonzero: usize,
    failure: Option<Value>,
}

impl Consistency {
    fn new() -> Self {
        Consistency {
            eval: Evaluator::new(CONSISTENCY_BITS),
            zero: 0,
            nonzero: 0,
            failure: None,
        }
    }

    fn scalar(&mut self, source: &str, x: &ExactScalar) {
        if self.failure.is_some() {
            return;
        }
        let e = self.eval.evaluate(x);
        let ok = if x.is_zero() {
            self.zero += 1;
            e.contains_zero() && e.width_log2().is_none_or(|w| w < ZERO_WIDTH_LOG2)
        } else {
            self.nonzero += 1;
            e.excludes_zero()
        };
        if !ok {
            self.failure = Some(json!({
                "source": source,
                "scalar_text": x.to_string(),
                "enclosure": e.to_string(),
            }));
        }
    }

    fn window(&mut self, source: &str, w: &Window) {
        for (_, _, x) in w.entries() {
            self.scalar(source, x);
        }
    }

    /// `a_ij - b_ij` over the union of both supports.
    fn differences(&mut self, source: &str, a: &Window, b: &Window) {
        let support: BTreeSet<(usize, usize)> = a
            .entries()
            .into_iter()
            .chain(b.entries())
            .map(|(i, j, _)| (i, j))
            .collect();
        let zero = ExactScalar::zero();
        for (i, j) in support {
            let d = a.entry(i, j).unwrap_or(&zero) - b.entry(i, j).unwrap_or(&zero);
            self.scalar(source, &d);
        }
    }
}

fn verdict_name(v: NormVerdict) -> &'static str {
    match v {
        NormVerdict::AtMostOne => "at_most_one",
        NormVerdict::AboveOne => "above_one",
        NormVerdict::Straddles => "undecided",
    }
}

/// `||T f_j||_1` as exact text when every entry is rational.
pub fn exact_l1_norm(basis: &ReadBasis, j: usize) -> Option<String> {
    let col = readchain_core::operators::t_column(basis, j).ok()?;
    let mut total = num_rational::BigRational::from_integer(0.into());
    for (_, x) in col.iter() {
        total += num_traits::Signed::abs(&x.as_rational()?);
    }
    Some(total.to_string())
}

fn random_nonzero_rational(rng: &mut ChaCha8Rng) -> ExactScalar {
    let mut num = rng.gen_range(-9..=8);
    if num >= 0 {
        num += 1;
    }
    ExactScalar::ratio(num, rng.gen_range(1..=6))
}

/// Degree at most `min(len, 11) - 1`, rational coefficients.
pub fn random_series(rng: &mut ChaCha8Rng, len: usize) -> SeriesWindow {
    let degree = rng.gen_range(0..len.clamp(1, MAX_SERIES_DEGREE + 1));
    SeriesWindow::new(
        (0..=degree)
            .map(|_| ExactScalar::ratio(rng.gen_range(-9..=9), rng.gen_range(1..=6)))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMismatch {
    pub index: u64,
    pub oracle: Vec<String>,
    pub classified: String,
}

/// Labels of every case range containing `i`, enumerated range by range.
pub fn partition_oracle(seq: &GrowthSequence, i: u64) -> Vec<String> {
    let v = |n: usize| seq.v_of(n).expect("n <= M");
    let mut hits = Vec::new();
    if i == 0 {
        hits.push("0".to_string());
    }
    for n in 1..=seq.blocks() {
        let (an, bn, nn) = (seq.a(n), seq.b(n), n as u64);
        let mut hit = |label: &str, r: usize, lo: u64, hi: u64| {
            if lo <= i && i <= hi {
                hits.push(format!("{label}{{n={n}, r={r}}}"));
            }
        };
        hit("B", 0, v(n - 1) + 1, an - 1);
        for r in 1..=n {
            let ru = r as u64;
            hit("A", r, ru * an, ru * an + v(n - r));
            if r < n {
                hit("B", r, ru * an + v(n - r) + 1, (ru + 1) * an - 1);
            }
            hit("C", r, ru * (an + bn), nn * an + ru * bn);
        }
        for r in 0..n {
            let ru = r as u64;
            hit("D", r, nn * an + ru * bn + 1, (ru + 1) * (an + bn) - 1);
        }
    }
    hits
}

/// First index in `[0, v_M]` not covered by exactly one range, or whose
/// classification disagrees with the range covering it.
pub fn partition_mismatch(seq: &GrowthSequence) -> Option<PartitionMismatch> {
    (0..=seq.max_index() as u64).find_map(|i| {
        let oracle = partition_oracle(seq, i);
        let classified = match seq.classify(i as usize) {
            Ok(c) => format!("{}{{n={}, r={}}}", c.label(), c.block(), case_r(&c)),
            Err(e) => e.to_string(),
        };
        let classified = if classified.starts_with("0{") {
            "0".to_string()
        } else {
            classified
        };
        (oracle.len() != 1 || oracle[0] != classified).then_some(PartitionMismatch {
            index: i,
            oracle,
            classified,
        })
    })
}

fn case_r(c: &readchain_core::IndexCase) -> usize {
    use readchain_core::IndexCase::*;
    match *c {
        Zero => 0,
        A { r, .. } | B { r, .. } | C { r, .. } | D { r, .. } => r,
    }
}
