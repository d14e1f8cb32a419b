//! Checker suites over a scenario, shared by the CLI and the acceptance test.
//!
//! Entry names are `suite/check[context]`; entries produced under an
//! injected fault are `fault/<fault>/check[context]`.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::faults::Fault;
use crate::functor_a::{self, apply_a, canonical_pm, pm_family};
use crate::functor_f::{self, apply_f, GeneratorParity, InvolutiveAqft, Intertwiner, Involution};
use crate::invariants::{self, CausalRelations, OrderTable};
use crate::klein_gordon::{check_propagators, check_to_formula, KgConfig, KgModel, KgTheory, KgTimeOrdered, Propagators};
use crate::lattice::{is_cauchy_subregion, path_budget, LatticeSpacetime, PathOracle, Point, PointSet, Region};
use crate::poly::SampleConfig;
use crate::scenario::Scenario;
use crate::theory::{self, Aqft, CheckEntry, CheckReport, FaultSummary, TheoryError, TheoryRef, Topfa};
use crate::time_order::{all_time_orderings, DisjointTuple, Perm, TimeOrderError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Spacetime,
    TimeOrder,
    Theory,
    FunctorA,
    FunctorF,
    RoundTrip,
    Involution,
    KgFormulas,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Spacetime,
        Suite::TimeOrder,
        Suite::Theory,
        Suite::FunctorA,
        Suite::FunctorF,
        Suite::RoundTrip,
        Suite::Involution,
        Suite::KgFormulas,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }

    pub fn parse(s: &str) -> Option<Suite> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

pub type Relation = fn(&LatticeSpacetime, Point, Point) -> bool;
pub type CauchyRule = fn(&PointSet, &PointSet, &LatticeSpacetime) -> bool;
pub type SearchRule = fn(&DisjointTuple) -> Option<Perm>;
pub type TransferRule = fn(&Perm, &Perm) -> Perm;
pub type BlockRule = fn(&Perm, &[usize]) -> Result<Perm, TimeOrderError>;
pub type FactorRule = fn(&DisjointTuple, &Perm, &Perm) -> Result<Vec<usize>, TimeOrderError>;
pub type FunctorF = fn(Arc<dyn Aqft>) -> Arc<dyn Topfa>;

fn library_functor_f(a: Arc<dyn Aqft>) -> Arc<dyn Topfa> {
    Arc::new(apply_f(a))
}

/// Every component a suite exercises. The library set is the clean one;
/// faults replace entries.
#[derive(Clone)]
pub struct Implementations {
    pub causal: Relation,
    pub chrono: Relation,
    pub cauchy: CauchyRule,
    pub search: SearchRule,
    pub transfer: TransferRule,
    pub block: BlockRule,
    pub factor: FactorRule,
    /// The field theory as an AQFT.
    pub aqft: Arc<dyn Aqft>,
    /// The field theory as a time-orderable prefactorization algebra.
    pub topfa: Arc<dyn Topfa>,
    pub functor_f: FunctorF,
    pub star: Arc<dyn Involution>,
    pub intertwiner: Arc<dyn Intertwiner>,
    pub model: Arc<KgModel>,
    pub kg: KgConfig,
    pub propagators: Arc<Propagators>,
}

impl Implementations {
    pub fn library(sc: &Scenario) -> Result<Self, TheoryError> {
        let th = &sc.theory;
        let kg = KgConfig::new(&sc.ambient, th.mass_squared, th.margin)?;
        let model = KgModel::new(kg.clone());
        let (aqft, topfa): (Arc<dyn Aqft>, Arc<dyn Topfa>) = if th.toy_commutative {
            let a: Arc<dyn Aqft> = Arc::new(KgTheory::classical(&model));
            (a.clone(), library_functor_f(a))
        } else {
            (Arc::new(KgTheory::quantum(&model)), Arc::new(KgTimeOrdered::new(&model)))
        };
        Ok(Implementations {
            causal: invariants::library_causal,
            chrono: invariants::library_chrono,
            cauchy: invariants::library_cauchy,
            search: crate::time_order::find_time_ordering,
            transfer: invariants::library_transfer,
            block: invariants::library_block,
            factor: crate::time_order::factor_into_causal_transpositions,
            aqft,
            topfa,
            functor_f: library_functor_f,
            star: Arc::new(functor_f::CoefficientConjugation),
            intertwiner: Arc::new(GeneratorParity),
            propagators: Arc::new(model.propagators().clone()),
            model,
            kg,
        })
    }
}

/// Sampling configurations derived from the scenario's theory settings.
#[derive(Clone, Copy, Debug)]
pub struct Sampling {
    /// Axioms of the field theory itself.
    pub theory: SampleConfig,
    /// Checks that go through inverse restriction maps.
    pub built: SampleConfig,
    /// Three-argument checks through inverse restriction maps.
    pub built_triples: SampleConfig,
    /// Exhaustive over generators and the unit.
    pub linear: SampleConfig,
}

impl Sampling {
    pub fn of(sc: &Scenario) -> Self {
        let cap = sc.theory.degree_cap;
        let budget = sc.theory.samples;
        let theory = SampleConfig { max_degree: cap, max_total_degree: 2 * cap, budget, seed: sc.seed };
        let built = SampleConfig { max_degree: cap.min(2), max_total_degree: 2 * cap.min(2), ..theory };
        Sampling {
            theory,
            built,
            built_triples: SampleConfig { max_total_degree: 3.min(built.max_total_degree), ..built },
            linear: SampleConfig { max_degree: 1, max_total_degree: 2, budget: 10_000, seed: sc.seed },
        }
    }
}

struct Out {
    prefix: String,
    entries: Vec<CheckEntry>,
}

impl Out {
    fn push(&mut self, ctx: &str, e: CheckEntry) {
        let name = format!("{}/{}[{ctx}]", self.prefix, e.name);
        self.entries.push(e.named(name));
    }

    fn one(&mut self, base: &str, ctx: &str, r: Result<CheckEntry, TheoryError>) {
        match r {
            Ok(e) => self.push(ctx, e),
            Err(err) => self.push(ctx, CheckEntry::errored(base, &err)),
        }
    }

    fn many(&mut self, base: &str, ctx: &str, r: Result<Vec<CheckEntry>, TheoryError>) {
        match r {
            Ok(es) => es.into_iter().for_each(|e| self.push(ctx, e)),
            Err(err) => self.push(ctx, CheckEntry::errored(base, &err)),
        }
    }
}

/// Named regions, named tuples and derived relations between them.
struct View<'a> {
    sc: &'a Scenario,
    names: Vec<(&'a str, &'a Region)>,
}

impl<'a> View<'a> {
    fn new(sc: &'a Scenario) -> Self {
        View { sc, names: sc.regions.iter().map(|(k, v)| (k.as_str(), v)).collect() }
    }

    /// `(U, M)` with `U ⊊ M`.
    fn inclusions(&self) -> Vec<(&'a str, &'a Region, &'a str, &'a Region)> {
        let mut out = Vec::new();
        for &(un, u) in &self.names {
            for &(mn, m) in &self.names {
                if u != m && u.is_subregion_of(m) {
                    out.push((un, u, mn, m));
                }
            }
        }
        out
    }

    /// Causally disjoint named pairs with the smallest admissible named
    /// region holding both.
    fn disjoint_pairs(&self, host_ok: impl Fn(&Region) -> bool) -> Vec<(String, &'a Region, &'a Region, &'a Region)> {
        let mut out = Vec::new();
        for (i, &(an, a)) in self.names.iter().enumerate() {
            for &(bn, b) in &self.names[i + 1..] {
                if !a.set().is_disjoint(b.set()) || !self.sc.ambient.are_causally_disjoint(a.set(), b.set()) {
                    continue;
                }
                let host = self
                    .names
                    .iter()
                    .filter(|(_, n)| a.is_subregion_of(n) && b.is_subregion_of(n) && host_ok(n))
                    .min_by_key(|(_, n)| n.len());
                if let Some(&(nn, n)) = host {
                    out.push((format!("{an},{bn}⊆{nn}"), a, b, n));
                }
            }
        }
        out
    }

    /// Regions with a canonical split into future and past parts.
    fn splittable(&self) -> Vec<(&'a str, &'a Region)> {
        self.names.iter().copied().filter(|(_, r)| canonical_pm(r).is_ok()).collect()
    }

    fn is_splittable(&self, r: &Region) -> bool {
        canonical_pm(r).is_ok()
    }

    fn tuples(&self) -> impl Iterator<Item = (&'a str, &'a DisjointTuple)> {
        self.sc.tuples.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Every non-identity permutation up to three parts. From four on, the
/// adjacent transpositions, the long cycle and the reversal: they generate
/// the group and the full 23 cost more than the rest of the suite.
fn equivariance_perms(n: usize) -> Vec<Perm> {
    if n <= 3 {
        return Perm::all(n).into_iter().filter(|p| !p.is_identity()).collect();
    }
    let mut out: Vec<Perm> = (0..n - 1).map(|i| Perm::adjacent_transposition(n, i)).collect();
    out.push(Perm::new(&(2..=n).chain([1]).collect::<Vec<_>>()).expect("cycle"));
    out.push(Perm::new(&(1..=n).rev().collect::<Vec<_>>()).expect("reversal"));
    out
}

/// Runs one suite on one implementation set.
pub fn run_suite(sc: &Scenario, im: &Implementations, suite: Suite, prefix: &str) -> Vec<CheckEntry> {
    let mut out = Out { prefix: prefix.to_string(), entries: Vec::new() };
    let view = View::new(sc);
    let s = Sampling::of(sc);
    match suite {
        Suite::Spacetime => spacetime(&view, im, &mut out),
        Suite::TimeOrder => time_order(&view, im, &mut out),
        Suite::Theory => theory_axioms(&view, im, &s, &mut out),
        Suite::FunctorA => functor_a_suite(&view, im, &s, &mut out),
        Suite::FunctorF => functor_f_suite(&view, im, &s, &mut out),
        Suite::RoundTrip => round_trip(&view, im, &s, &mut out),
        Suite::Involution => involution(&view, im, &s, &mut out),
        Suite::KgFormulas => kg_formulas(&view, im, &s, &mut out),
    }
    out.entries
}

fn spacetime(v: &View<'_>, im: &Implementations, out: &mut Out) {
    let rel = CausalRelations { causal: &im.causal, chrono: &im.chrono };
    for e in invariants::check_causal_structure_on(std::slice::from_ref(&v.sc.ambient), &rel) {
        out.push("ambient", e);
    }
    let budget = path_budget();
    let amb = &v.sc.ambient;
    for &(mn, m) in &v.names {
        let oracle = PathOracle::new(m, budget);
        for &(un, u) in &v.names {
            if u == m || !u.is_subregion_of(m) {
                continue;
            }
            let ctx = format!("{un}⊆{mn}");
            let e = match &oracle {
                Ok(o) => {
                    let (rule, paths) = ((im.cauchy)(u.set(), m.set(), amb), o.verdict(u.set()));
                    let e = CheckEntry::measured("cauchy_dp_vs_paths", (rule != paths) as u8 as f64, 0.0)
                        .with_note(format!("dependence: {rule}, paths: {paths}, {} maximal paths", o.len()));
                    if rule != paths {
                        e.with_witness(ctx.clone())
                    } else {
                        e
                    }
                }
                Err(err) => CheckEntry::errored("cauchy_dp_vs_paths", &TheoryError::from(err.clone())),
            };
            out.push(&ctx, e);
        }
    }
}

fn time_order(v: &View<'_>, im: &Implementations, out: &mut Out) {
    let pool: Vec<Region> = v.names.iter().map(|(_, r)| (*r).clone()).collect();
    let table = OrderTable::new(pool);
    let whole = Region::whole(&v.sc.ambient);
    out.push("scenario regions", invariants::check_ordering_search(&table, &whole, &im.search));
    out.push("scenario regions", invariants::check_ordering_transfer(&table, &im.transfer));
    out.push("scenario regions", invariants::check_transposition_factorization(&table, &whole, &im.factor));
    out.push("nested pool", invariants::check_block_composite(&im.block));
}

fn theory_axioms(v: &View<'_>, im: &Implementations, s: &Sampling, out: &mut Out) {
    let a = im.aqft.as_ref();
    let cfg = &s.theory;
    for (ctx, u1, u2, n) in v.disjoint_pairs(|_| true) {
        out.one("einstein_causality", &ctx, theory::check_einstein_causality(a, u1, u2, n, cfg));
    }
    for &(mn, m) in &v.names {
        out.many("associativity", mn, theory::check_assoc_unital(a, m, cfg));
    }
    let incl = v.inclusions();
    for &(un, u, mn, m) in &incl {
        if is_cauchy_subregion(u, m).unwrap_or(false) {
            out.one("cauchy_constancy", &format!("{un}→{mn}"), theory::check_cauchy_constancy(TheoryRef::Aqft(a), u, m, cfg.max_degree));
        }
    }
    for &(un, u, vn, vr) in &incl {
        for &(_, u2, mn, m) in &incl {
            if u2 == vr {
                let ctx = format!("{un}→{vn}→{mn}");
                out.many("functoriality", &ctx, theory::check_functoriality(a, u, vr, m, cfg));
            }
        }
    }
    for &(mn, m) in &v.names {
        let proper: Vec<Region> = incl
            .iter()
            .filter(|(_, u, _, mm)| *mm == m && is_cauchy_subregion(u, m).unwrap_or(false))
            .map(|(_, u, _, _)| (*u).clone())
            .collect();
        if !proper.is_empty() {
            out.many("additivity", mn, theory::check_additivity(TheoryRef::Aqft(a), m, &proper, 1));
        }
    }
    let f = im.topfa.as_ref();
    for c in &v.sc.compositions {
        out.one("composition", &c.name, theory::check_composition(f, &c.outer, &c.inners, cfg));
    }
    for (tn, t) in v.tuples() {
        if t.len() < 2 {
            continue;
        }
        for sigma in equivariance_perms(t.len()) {
            let ctx = format!("{tn}·{:?}", sigma.one_line());
            out.one("equivariance", &ctx, theory::check_equivariance(f, t, &sigma, cfg));
        }
    }
}

fn functor_a_suite(v: &View<'_>, im: &Implementations, s: &Sampling, out: &mut Out) {
    let a = apply_a(im.topfa.clone());
    let cfg = &s.built;
    let split = v.splittable();
    for &(mn, m) in &split {
        let fam = pm_family(m);
        for (k, pm) in fam.iter().enumerate().skip(1) {
            out.one("a_independence", &format!("{mn} split 0 vs {k}"), functor_a::check_independence(&a, &fam[0], pm, cfg));
        }
        // Associativity stacks splits one row above and below the middle.
        let stacked = [-1, 1]
            .iter()
            .all(|&d| functor_a::mid_surface(m, d).and_then(|s| functor_a::PmObject::from_surface(m, s)).is_ok());
        if stacked {
            out.many("a_associativity", mn, functor_a::check_assoc_unital(&a, m, &s.built_triples));
        }
    }
    for (un, u, mn, m) in v.inclusions() {
        let ctx = format!("{un}→{mn}");
        if v.is_splittable(u) && v.is_splittable(m) {
            out.one("a_naturality", &ctx, functor_a::check_naturality(&a, u, m, cfg));
        }
        out.one("a_unit_maps", &ctx, functor_a::check_unit_maps(&a, u, m));
    }
    for (ctx, u1, u2, n) in v.disjoint_pairs(|r| v.is_splittable(r)) {
        out.one("einstein_causality", &format!("built:{ctx}"), theory::check_einstein_causality(&a, u1, u2, n, cfg));
    }
    out.push("model", functor_a::naturality_pathology_entry());
}

fn functor_f_suite(v: &View<'_>, im: &Implementations, s: &Sampling, out: &mut Out) {
    let a = im.aqft.as_ref();
    let f = (im.functor_f)(im.aqft.clone());
    let cfg = &s.theory;
    for (tn, t) in v.tuples() {
        if t.len() < 2 {
            continue;
        }
        let orders = all_time_orderings(t);
        for rho in orders.iter().skip(1) {
            let ctx = format!("{tn} {:?} vs {:?}", orders[0].one_line(), rho.one_line());
            out.one("f_rho_independence", &ctx, functor_f::check_rho_independence(a, t, &orders[0], rho, cfg));
        }
        if t.len() >= 3 {
            out.one("f_fold_independence", tn, functor_f::check_fold_independence(a, t, cfg));
        }
        for sigma in equivariance_perms(t.len()) {
            let ctx = format!("F(A):{tn}·{:?}", sigma.one_line());
            out.one("equivariance", &ctx, theory::check_equivariance(f.as_ref(), t, &sigma, cfg));
        }
        out.one(
            "morphism_factorization",
            tn,
            functor_f::check_topfa_morphism(f.as_ref(), f.as_ref(), im.intertwiner.as_ref(), t, &s.linear),
        );
    }
    for c in &v.sc.compositions {
        out.one("composition", &format!("F(A):{}", c.name), theory::check_composition(f.as_ref(), &c.outer, &c.inners, cfg));
    }
    let mut seen = BTreeSet::new();
    for (_, t) in v.tuples() {
        let n = t.target();
        for u in t.parts() {
            if u == n || !seen.insert((u.set().clone(), n.set().clone())) {
                continue;
            }
            let ctx = format!("{}→{}", name_of(v, u), name_of(v, n));
            out.many(
                "morphism_multiplicative",
                &ctx,
                functor_f::check_aqft_morphism(a, a, im.intertwiner.as_ref(), u, n, &s.linear),
            );
        }
    }
}

fn name_of(v: &View<'_>, r: &Region) -> String {
    v.sc.region_name(r).map_or_else(|| format!("{} points", r.len()), str::to_owned)
}

fn round_trip(v: &View<'_>, im: &Implementations, s: &Sampling, out: &mut Out) {
    let cfg = &s.built;
    let af = apply_a((im.functor_f)(im.aqft.clone()));
    for (mn, m) in v.splittable() {
        out.one("round_trip_af", mn, functor_f::check_multiplications_agree("round_trip_af", &af, im.aqft.as_ref(), m, cfg));
    }
    let fa = (im.functor_f)(Arc::new(apply_a(im.topfa.clone())));
    let split = v.splittable();
    for (tn, t) in v.tuples() {
        if split.iter().any(|(_, r)| *r == t.target()) {
            out.one("round_trip_fa", tn, functor_f::check_products_agree("round_trip_fa", fa.as_ref(), im.topfa.as_ref(), t, cfg));
        }
    }
}

fn involution(v: &View<'_>, im: &Implementations, s: &Sampling, out: &mut Out) {
    let inv = InvolutiveAqft { base: im.aqft.clone(), star: im.star.clone() };
    let incl = v.inclusions();
    for (mn, m) in v.splittable() {
        let subs: Vec<(Region, Region)> =
            incl.iter().filter(|(_, _, _, mm)| *mm == m).map(|(_, u, _, _)| ((*u).clone(), m.clone())).collect();
        out.many("involution_twice", mn, functor_f::check_involution(&inv, m, &subs, &s.theory));
        if let Ok(pm) = canonical_pm(m) {
            let vals = pm.surface().values();
            if vals.iter().all(|&t| t == vals[0]) {
                out.one(
                    "involution_diagram",
                    mn,
                    functor_f::check_transferred_involution_diagram(im.topfa.clone(), &pm, &s.built),
                );
            }
        }
    }
    for (tn, t) in v.tuples() {
        out.one("involution_transferred", tn, functor_f::check_transferred_involution(&inv, t, &s.theory));
    }
}

fn kg_formulas(v: &View<'_>, im: &Implementations, s: &Sampling, out: &mut Out) {
    for e in check_propagators(&im.kg, &im.propagators, 8, v.sc.seed) {
        out.push("ambient", e);
    }
    if v.sc.theory.toy_commutative {
        return;
    }
    let f = (im.functor_f)(im.aqft.clone());
    for (tn, t) in v.tuples() {
        if t.len() != 2 {
            continue;
        }
        out.many("to_formula", &format!("F(A):{tn}"), check_to_formula(&im.model, f.as_ref(), t, &s.theory));
        out.many("to_formula", &format!("direct:{tn}"), check_to_formula(&im.model, im.topfa.as_ref(), t, &s.theory));
    }
}

/// Base check name of an entry: `suite/check[ctx]` or `fault/<f>/check[ctx]`.
pub fn base_name(entry_name: &str) -> &str {
    let head = entry_name.split('[').next().unwrap_or(entry_name);
    head.rsplit('/').next().unwrap_or(head)
}

/// Clean suites selected by the scenario, then every listed fault on the
/// suites it touches.
pub fn run_scenario(sc: &Scenario, suites: &[Suite]) -> Result<CheckReport, TheoryError> {
    let clean = Implementations::library(sc)?;
    let mut checks = Vec::new();
    for &suite in suites {
        checks.extend(run_suite(sc, &clean, suite, &suite.name()));
    }
    let mut faults = Vec::new();
    for &fault in &sc.faults {
        let (entries, summary) = run_fault(sc, &clean, fault);
        checks.extend(entries);
        faults.push(summary);
    }
    let mut report = CheckReport::new(sc.name.clone(), sc.seed, checks);
    report.faults = faults;
    Ok(report)
}

pub fn run_fault(sc: &Scenario, clean: &Implementations, fault: Fault) -> (Vec<CheckEntry>, FaultSummary) {
    let im = fault.corrupt(clean);
    let prefix = format!("fault/{}", fault.name());
    let entries: Vec<CheckEntry> = fault.suites().iter().flat_map(|&s| run_suite(sc, &im, s, &prefix)).collect();
    let failing: BTreeSet<String> =
        entries.iter().filter(|e| !e.pass && !e.degenerate).map(|e| base_name(&e.name).to_string()).collect();
    let summary = FaultSummary {
        fault: fault.name(),
        caught: !failing.is_empty(),
        checks_run: entries.len(),
        failing_checks: failing.into_iter().collect(),
    };
    (entries, summary)
}
