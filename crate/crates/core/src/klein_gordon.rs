//! Free Klein–Gordon field on a cylinder lattice.
//!
//! `P = ∂t² − ∂x² + m²` with unit spacings and the leapfrog stencil:
//!
//! `(Pφ)(t,x) = φ(t+1,x) − 2φ(t,x) + φ(t−1,x) − [φ(t,x+1) − 2φ(t,x) + φ(t,x−1)] + m²φ(t,x)`.
//!
//! Retarded and advanced Green's operators are explicit time-stepping
//! recursions. Linear observables are classes of smearings modulo the image
//! of `P`; a class is identified by `Gφ` on two fixed reference rows, where
//! `G = G⁺ − G⁻`. Two rows determine a solution of `Pu = 0`, and `Gφ = 0`
//! forces `χ = G⁺φ = G⁻φ` to be supported in `J⁺(supp φ) ∩ J⁻(supp φ)`, so
//! these normal forms are faithful on every causally convex region.
//!
//! Polynomial observables on a region `M` are written in a generator basis
//! `B(M)`: lattice points of `M` whose normal forms are linearly independent
//! and span those of all of `M`, picked greedily from the middle row outward.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::lattice::{LatticeSpacetime, Point, PointSet, Region, Topology};
use crate::linalg::{real_pseudo_inverse, RMat};
use crate::poly::{contraction_product, FinVec, Monomial, Gen, Poly, SampleConfig, C64};
use crate::theory::{sample_deviation, Aqft, CheckEntry, Memo, TheoryError, Topfa};
use crate::time_order::{find_time_ordering, is_time_ordered, DisjointTuple, Perm};

#[derive(Clone, Debug)]
pub struct KgConfig {
    ambient: Arc<LatticeSpacetime>,
    mass_squared: f64,
    margin: usize,
    recursion_shift: f64,
}

impl KgConfig {
    pub fn new(ambient: &Arc<LatticeSpacetime>, mass_squared: f64, margin: usize) -> Result<Self, TheoryError> {
        if ambient.topology() != Topology::Cylinder {
            return Err(TheoryError::Precondition("the field lives on a cylinder lattice".into()));
        }
        if !(mass_squared.is_finite() && mass_squared >= 0.0) {
            return Err(TheoryError::Precondition(format!("mass squared must be nonnegative, got {mass_squared}")));
        }
        if margin < 2 {
            return Err(TheoryError::Precondition(format!("margin must be at least 2, got {margin}")));
        }
        if ambient.time_extent() < 2 * margin + 6 {
            return Err(TheoryError::Precondition(format!(
                "time extent {} is below 2·margin + 6",
                ambient.time_extent()
            )));
        }
        Ok(KgConfig { ambient: ambient.clone(), mass_squared, margin, recursion_shift: 0.0 })
    }

    /// Time-stepping uses `m² + shift` while `P` keeps `m²`. Only useful
    /// for exercising the propagator checks.
    pub fn with_recursion_shift(mut self, shift: f64) -> Self {
        self.recursion_shift = shift;
        self
    }

    pub fn ambient(&self) -> &Arc<LatticeSpacetime> {
        &self.ambient
    }

    pub fn mass_squared(&self) -> f64 {
        self.mass_squared
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Rows in which sources and region points may lie.
    pub fn safe_rows(&self) -> (i32, i32) {
        let t = self.ambient.time_extent() as i32;
        (self.margin as i32, t - 1 - self.margin as i32)
    }

    pub fn reference_rows(&self) -> (i32, i32) {
        let r0 = self.ambient.time_extent() as i32 / 2 - 1;
        (r0, r0 + 1)
    }

    fn in_safe_rows(&self, p: Point) -> bool {
        let (lo, hi) = self.safe_rows();
        p.t >= lo && p.t <= hi
    }
}

/// Complex function on the ambient lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    values: Vec<C64>,
}

impl LatticeField {
    pub fn zeros(amb: &LatticeSpacetime) -> Self {
        LatticeField { values: vec![C64::new(0.0, 0.0); amb.capacity()] }
    }

    pub fn delta(amb: &LatticeSpacetime, p: Point) -> Self {
        let mut f = Self::zeros(amb);
        f.values[amb.index(p)] = C64::new(1.0, 0.0);
        f
    }

    pub fn get(&self, amb: &LatticeSpacetime, p: Point) -> C64 {
        self.values[amb.index(p)]
    }

    pub fn set(&mut self, amb: &LatticeSpacetime, p: Point, v: C64) {
        self.values[amb.index(p)] = v;
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn support(&self, amb: &LatticeSpacetime) -> Vec<Point> {
        (0..self.values.len()).filter(|&i| self.values[i] != C64::new(0.0, 0.0)).map(|i| amb.point(i)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        LatticeField { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        LatticeField { values: self.values.iter().map(|a| a * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// A smearing of the field, identified with its class modulo `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearObservable {
    pub smearing: LatticeField,
}

fn stencil_value(cfg: &KgConfig, u: &LatticeField, t: i32, x: i32) -> C64 {
    let amb = &cfg.ambient;
    let t_ext = amb.time_extent() as i32;
    let x_ext = amb.space_extent() as i32;
    let at = |t: i32, x: i32| -> C64 {
        if t < 0 || t >= t_ext {
            C64::new(0.0, 0.0)
        } else {
            u.values[(t * x_ext + x.rem_euclid(x_ext)) as usize]
        }
    };
    let c = at(t, x);
    (at(t + 1, x) - c * 2.0 + at(t - 1, x)) - (at(t, x + 1) - c * 2.0 + at(t, x - 1)) + c * cfg.mass_squared
}

/// `Pu` with `u` extended by zero outside the window. Exact for fields that
/// vanish on the first and last rows; for truncated solutions only the
/// interior rows are meaningful.
pub fn kg_apply_extended(cfg: &KgConfig, u: &LatticeField) -> LatticeField {
    let amb = &cfg.ambient;
    let mut out = LatticeField::zeros(amb);
    for p in amb.points() {
        out.set(amb, p, stencil_value(cfg, u, p.t, p.x));
    }
    out
}

pub fn kg_apply(cfg: &KgConfig, phi: &LatticeField) -> Result<LatticeField, TheoryError> {
    let last = cfg.ambient.time_extent() as i32 - 1;
    if let Some(p) = phi.support(&cfg.ambient).into_iter().find(|p| p.t == 0 || p.t == last) {
        return Err(TheoryError::OutsideWindow(p));
    }
    Ok(kg_apply_extended(cfg, phi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenKind {
    Retarded,
    Advanced,
}

fn recurse(cfg: &KgConfig, f: &[C64], kind: GreenKind) -> Vec<C64> {
    let x_ext = cfg.ambient.space_extent();
    let t_ext = cfg.ambient.time_extent();
    let m2 = cfg.mass_squared + cfg.recursion_shift;
    let mut u = vec![C64::new(0.0, 0.0); f.len()];
    let idx = |t: usize, x: usize| t * x_ext + x;
    let step = |u: &mut Vec<C64>, t: usize, next: usize, prev: Option<usize>| {
        for x in 0..x_ext {
            let c = u[idx(t, x)];
            let lap = u[idx(t, (x + 1) % x_ext)] - c * 2.0 + u[idx(t, (x + x_ext - 1) % x_ext)];
            let back = prev.map(|p| u[idx(p, x)]).unwrap_or_default();
            u[idx(next, x)] = f[idx(t, x)] + c * 2.0 - back + lap - c * m2;
        }
    };
    match kind {
        GreenKind::Retarded => {
            for t in 0..t_ext - 1 {
                step(&mut u, t, t + 1, t.checked_sub(1));
            }
        }
        GreenKind::Advanced => {
            for t in (1..t_ext).rev() {
                step(&mut u, t, t - 1, (t + 1 < t_ext).then_some(t + 1));
            }
        }
    }
    u
}

/// `G⁺φ` or `G⁻φ` by time-stepping. Sources must lie in the safe rows.
pub fn green(cfg: &KgConfig, phi: &LatticeField, kind: GreenKind) -> Result<LatticeField, TheoryError> {
    if let Some(p) = phi.support(&cfg.ambient).into_iter().find(|&p| !cfg.in_safe_rows(p)) {
        return Err(TheoryError::OutsideWindow(p));
    }
    Ok(LatticeField { values: recurse(cfg, &phi.values, kind) })
}

/// Kernel choices for the contraction product `· ∘ exp(c⟨K, d⊗d⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// `c = i/2`, `K = G`: the star product.
    Causal,
    /// `c = i`, `K = G_D`: the time-ordered product.
    Dirac,
    /// `c = i/2`, `K = G⁺`.
    Retarded,
    /// `c = i/2`, `K = G⁻`.
    Advanced,
}

impl KernelKind {
    pub fn coefficient(self) -> C64 {
        match self {
            KernelKind::Dirac => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.5),
        }
    }
}

/// Dense kernels `G±(p, q) = (G±δ_q)(p)` over the whole window.
#[derive(Clone, Debug)]
pub struct Propagators {
    ambient: Arc<LatticeSpacetime>,
    n: usize,
    g_plus: Vec<f64>,
    g_minus: Vec<f64>,
}

impl Propagators {
    pub fn compute(cfg: &KgConfig) -> Self {
        let amb = cfg.ambient.clone();
        let n = amb.capacity();
        let mut g_plus = vec![0.0; n * n];
        let mut g_minus = vec![0.0; n * n];
        let mut src = vec![C64::new(0.0, 0.0); n];
        for q in 0..n {
            src[q] = C64::new(1.0, 0.0);
            let up = recurse(cfg, &src, GreenKind::Retarded);
            let down = recurse(cfg, &src, GreenKind::Advanced);
            for p in 0..n {
                g_plus[p * n + q] = up[p].re;
                g_minus[p * n + q] = down[p].re;
            }
            src[q] = C64::new(0.0, 0.0);
        }
        Propagators { ambient: amb, n, g_plus, g_minus }
    }

    pub fn ambient(&self) -> &Arc<LatticeSpacetime> {
        &self.ambient
    }

    pub fn retarded(&self, p: usize, q: usize) -> f64 {
        self.g_plus[p * self.n + q]
    }

    pub fn advanced(&self, p: usize, q: usize) -> f64 {
        self.g_minus[p * self.n + q]
    }

    /// `G = G⁺ − G⁻`.
    pub fn causal(&self, p: usize, q: usize) -> f64 {
        self.retarded(p, q) - self.advanced(p, q)
    }

    /// `G_D = ½(G⁺ + G⁻)`.
    pub fn dirac(&self, p: usize, q: usize) -> f64 {
        0.5 * (self.retarded(p, q) + self.advanced(p, q))
    }

    pub fn kernel(&self, kind: KernelKind, p: usize, q: usize) -> f64 {
        match kind {
            KernelKind::Causal => self.causal(p, q),
            KernelKind::Dirac => self.dirac(p, q),
            KernelKind::Retarded => self.retarded(p, q),
            KernelKind::Advanced => self.advanced(p, q),
        }
    }

    /// Overwrites one retarded entry.
    pub fn set_retarded(&mut self, p: usize, q: usize, v: f64) {
        self.g_plus[p * self.n + q] = v;
    }
}

/// Propagator identities, each as one entry: `P∘G± = id` on all point
/// sources in the safe rows (columns of the kernels) and on random
/// smearings, exact support in `J±`, antisymmetry of `G`, and vanishing of
/// `G` and `G_D` at spacelike pairs.
pub fn check_propagators(cfg: &KgConfig, props: &Propagators, random_sources: usize, seed: u64) -> Vec<CheckEntry> {
    let amb = cfg.ambient.clone();
    let n = amb.capacity();
    let last = amb.time_extent() as i32 - 1;
    let interior = |p: Point| p.t < last;
    let safe: Vec<usize> = (0..n).filter(|&q| cfg.in_safe_rows(amb.point(q))).collect();

    let mut residual: f64 = 0.0;
    for &q in &safe {
        for kind in [GreenKind::Retarded, GreenKind::Advanced] {
            let col = LatticeField {
                values: (0..n)
                    .map(|p| {
                        let v = if kind == GreenKind::Retarded { props.retarded(p, q) } else { props.advanced(p, q) };
                        C64::new(v, 0.0)
                    })
                    .collect(),
            };
            let pu = kg_apply_extended(cfg, &col);
            for p in 0..n {
                let pt = amb.point(p);
                let keep = if kind == GreenKind::Retarded { interior(pt) } else { pt.t > 0 };
                if keep {
                    let want = if p == q { 1.0 } else { 0.0 };
                    residual = residual.max((pu.values[p] - want).norm());
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_residual: f64 = 0.0;
    let mut gp_residual: f64 = 0.0;
    for _ in 0..random_sources {
        let mut f = LatticeField::zeros(&amb);
        for _ in 0..5 {
            let q = safe[rng.random_range(0..safe.len())];
            f.values[q] += C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        for kind in [GreenKind::Retarded, GreenKind::Advanced] {
            let u = LatticeField { values: recurse(cfg, &f.values, kind) };
            let pu = kg_apply_extended(cfg, &u);
            for p in 0..n {
                let pt = amb.point(p);
                let keep = if kind == GreenKind::Retarded { interior(pt) } else { pt.t > 0 };
                if keep {
                    random_residual = random_residual.max((pu.values[p] - f.values[p]).norm());
                }
            }
        }
        // G∘P = 0 on smearings P χ with χ away from the boundary rows.
        let pchi = kg_apply_extended(cfg, &f);
        let up = recurse(cfg, &pchi.values, GreenKind::Retarded);
        let down = recurse(cfg, &pchi.values, GreenKind::Advanced);
        for p in 0..n {
            gp_residual = gp_residual.max((up[p] - down[p]).norm());
        }
    }

    let mut support: f64 = 0.0;
    let mut antisym: f64 = 0.0;
    let mut spacelike: f64 = 0.0;
    let mut support_witness = None;
    let mut spacelike_witness = None;
    for p in 0..n {
        let pp = amb.point(p);
        for q in 0..n {
            let qq = amb.point(q);
            if !amb.causal_le(qq, pp) && props.retarded(p, q).abs() > support {
                support = props.retarded(p, q).abs();
                support_witness = Some(format!("G+ at {pp} from {qq}"));
            }
            if !amb.causal_le(pp, qq) && props.advanced(p, q).abs() > support {
                support = props.advanced(p, q).abs();
                support_witness = Some(format!("G- at {pp} from {qq}"));
            }
            antisym = antisym.max((props.causal(p, q) + props.causal(q, p)).abs());
            if !amb.causal_le(pp, qq) && !amb.causal_le(qq, pp) {
                let v = props.causal(p, q).abs().max(props.dirac(p, q).abs());
                if v > spacelike {
                    spacelike = v;
                    spacelike_witness = Some(format!("{pp}, {qq}"));
                }
            }
        }
    }
    let witness = |e: CheckEntry, w: Option<String>| match w {
        Some(w) if !e.pass => e.with_witness(w),
        _ => e,
    };
    vec![
        CheckEntry::measured("propagator_residual_point_sources", residual, 1e-10),
        CheckEntry::measured("propagator_residual_random_sources", random_residual, 1e-10),
        CheckEntry::measured("propagator_annihilates_image", gp_residual, 1e-10),
        witness(CheckEntry::measured("propagator_support", support, 0.0), support_witness),
        CheckEntry::measured("propagator_antisymmetry", antisym, 1e-12),
        witness(CheckEntry::measured("propagator_spacelike_zero", spacelike, 0.0), spacelike_witness),
    ]
}

/// Generator basis of one region and the expansion of every region point in it.
#[derive(Debug)]
pub struct RegionBasis {
    basis: Vec<Gen>,
    coeffs: FxHashMap<Gen, Vec<(Gen, f64)>>,
}

impl RegionBasis {
    pub fn basis(&self) -> &[Gen] {
        &self.basis
    }

    /// The class of `δ_p` as a combination of basis classes.
    pub fn expansion(&self, p: Gen) -> Option<&[(Gen, f64)]> {
        self.coeffs.get(&p).map(Vec::as_slice)
    }
}

/// Kernels plus per-region bases, shared by every theory built on one field.
pub struct KgModel {
    cfg: KgConfig,
    props: Propagators,
    bases: Memo<PointSet, Arc<RegionBasis>>,
}

impl KgModel {
    pub fn new(cfg: KgConfig) -> Arc<Self> {
        let props = Propagators::compute(&cfg);
        Arc::new(KgModel { cfg, props, bases: Memo::default() })
    }

    pub fn config(&self) -> &KgConfig {
        &self.cfg
    }

    pub fn propagators(&self) -> &Propagators {
        &self.props
    }

    /// `Gδ_p` on the two reference rows.
    pub fn point_normal_form(&self, p: usize) -> Vec<f64> {
        let amb = &self.cfg.ambient;
        let (r0, r1) = self.cfg.reference_rows();
        let x_ext = amb.space_extent() as i32;
        [r0, r1]
            .into_iter()
            .flat_map(|t| (0..x_ext).map(move |x| Point::new(t, x)))
            .map(|r| self.props.causal(amb.index(r), p))
            .collect()
    }

    /// Normal form of a smearing supported in `M` and the safe rows.
    pub fn normal_form(&self, m: &Region, phi: &LinearObservable) -> Result<Vec<C64>, TheoryError> {
        let amb = &self.cfg.ambient;
        for p in phi.smearing.support(amb) {
            if !m.contains(p) {
                return Err(TheoryError::Precondition(format!("smearing support {p} leaves the region")));
            }
            if !self.cfg.in_safe_rows(p) {
                return Err(TheoryError::OutsideWindow(p));
            }
        }
        let up = recurse(&self.cfg, &phi.smearing.values, GreenKind::Retarded);
        let down = recurse(&self.cfg, &phi.smearing.values, GreenKind::Advanced);
        let (r0, r1) = self.cfg.reference_rows();
        let x_ext = amb.space_extent() as i32;
        Ok([r0, r1]
            .into_iter()
            .flat_map(|t| (0..x_ext).map(move |x| Point::new(t, x)))
            .map(|r| {
                let i = amb.index(r);
                up[i] - down[i]
            })
            .collect())
    }

    pub fn region_basis(&self, m: &Region) -> Result<Arc<RegionBasis>, TheoryError> {
        self.bases.get_or_try_init(m.set(), || self.build_basis(m).map(Arc::new))
    }

    fn build_basis(&self, m: &Region) -> Result<RegionBasis, TheoryError> {
        let amb = &self.cfg.ambient;
        let pts = m.points();
        if let Some(&p) = pts.iter().find(|&&p| !self.cfg.in_safe_rows(p)) {
            return Err(TheoryError::OutsideWindow(p));
        }
        let Some((lo, hi)) = m.time_window() else {
            return Ok(RegionBasis { basis: Vec::new(), coeffs: FxHashMap::default() });
        };
        let mut order = pts.clone();
        order.sort_by_key(|p| ((2 * p.t - lo - hi).abs(), p.t, p.x));

        let dim = 2 * amb.space_extent();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let mut basis: Vec<Gen> = Vec::new();
        for p in &order {
            if ortho.len() == dim {
                break;
            }
            let v = self.point_normal_form(amb.index(*p));
            let scale = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
            let mut r = v.clone();
            for _ in 0..2 {
                for q in &ortho {
                    let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                    r.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                }
            }
            let norm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-8 * scale {
                ortho.push(r.into_iter().map(|a| a / norm).collect());
                basis.push(amb.index(*p) as Gen);
            }
        }

        let nb = RMat::from_fn(dim, basis.len(), |i, j| self.point_normal_form(basis[j] as usize)[i]);
        let pinv = real_pseudo_inverse(&nb);
        let mut coeffs = FxHashMap::default();
        for p in &pts {
            let g = amb.index(*p) as Gen;
            if basis.contains(&g) {
                coeffs.insert(g, vec![(g, 1.0)]);
                continue;
            }
            let v = RMat::from_vec(dim, 1, self.point_normal_form(g as usize));
            let c = &pinv * v;
            let top = c.iter().map(|a| a.abs()).fold(0.0, f64::max).max(1.0);
            let exp: Vec<(Gen, f64)> =
                basis.iter().zip(c.iter()).filter(|(_, a)| a.abs() > 1e-13 * top).map(|(&b, &a)| (b, a)).collect();
            coeffs.insert(g, exp);
        }
        Ok(RegionBasis { basis, coeffs })
    }

    /// Rewrites a polynomial in arbitrary points of `M` in the basis `B(M)`.
    pub fn express(&self, m: &Region, a: &Poly) -> Result<Poly, TheoryError> {
        let rb = self.region_basis(m)?;
        let amb = &self.cfg.ambient;
        for g in a.generators() {
            if rb.expansion(g).is_none() {
                return Err(TheoryError::Precondition(format!(
                    "generator {} is not a point of the region",
                    amb.point(g as usize)
                )));
            }
        }
        Ok(a.substitute(&|g| rb.expansion(g).expect("checked above")))
    }

    /// Contraction product on point generators with one of the four kernels.
    pub fn star_product(&self, a: &Poly, b: &Poly, kind: KernelKind) -> Result<Poly, TheoryError> {
        let k = |v: Gen, w: Gen| self.props.kernel(kind, v as usize, w as usize);
        Ok(contraction_product(a, b, kind.coefficient(), &k)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deformation {
    /// Star product with the causal propagator.
    Quantum,
    /// Commutative product (kernel switched off).
    Classical,
}

/// Klein–Gordon observables as an AQFT.
#[derive(Clone)]
pub struct KgTheory {
    model: Arc<KgModel>,
    deformation: Deformation,
    spacelike_offset: f64,
}

impl KgTheory {
    pub fn quantum(model: &Arc<KgModel>) -> Self {
        KgTheory { model: model.clone(), deformation: Deformation::Quantum, spacelike_offset: 0.0 }
    }

    pub fn classical(model: &Arc<KgModel>) -> Self {
        KgTheory { model: model.clone(), deformation: Deformation::Classical, spacelike_offset: 0.0 }
    }

    /// Adds `±offset` to the commutator kernel at every spacelike pair
    /// (sign by point index), keeping it antisymmetric.
    pub fn with_spacelike_offset(mut self, offset: f64) -> Self {
        self.spacelike_offset = offset;
        self
    }

    pub fn model(&self) -> &Arc<KgModel> {
        &self.model
    }

    pub fn commutator_kernel(&self, v: Gen, w: Gen) -> f64 {
        if self.deformation == Deformation::Classical {
            return 0.0;
        }
        let g = self.model.props.causal(v as usize, w as usize);
        if self.spacelike_offset == 0.0 || v == w {
            return g;
        }
        let amb = &self.model.cfg.ambient;
        let (p, q) = (amb.point(v as usize), amb.point(w as usize));
        if amb.causal_le(p, q) || amb.causal_le(q, p) {
            return g;
        }
        if v < w {
            g + self.spacelike_offset
        } else {
            g - self.spacelike_offset
        }
    }
}

impl Aqft for KgTheory {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        Ok(self.model.region_basis(m)?.basis().to_vec())
    }

    fn multiply(&self, _m: &Region, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
        let k = |v: Gen, w: Gen| self.commutator_kernel(v, w);
        Ok(contraction_product(a, b, C64::new(0.0, 0.5), &k)?)
    }

    fn unit(&self, _m: &Region) -> Result<Poly, TheoryError> {
        Ok(Poly::one())
    }

    fn push_forward(&self, from: &Region, to: &Region, a: &Poly) -> Result<Poly, TheoryError> {
        if !from.is_subregion_of(to) {
            return Err(TheoryError::Precondition("push-forward needs an inclusion".into()));
        }
        if from == to {
            return Ok(a.clone());
        }
        self.model.express(to, a)
    }
}

/// Time-ordered products written directly with the Dirac propagator: the
/// inputs are contracted pairwise with `i G_D` on their own point
/// generators and the result is expressed on the target.
#[derive(Clone)]
pub struct KgTimeOrdered {
    model: Arc<KgModel>,
}

impl KgTimeOrdered {
    pub fn new(model: &Arc<KgModel>) -> Self {
        KgTimeOrdered { model: model.clone() }
    }
}

impl Topfa for KgTimeOrdered {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        Ok(self.model.region_basis(m)?.basis().to_vec())
    }

    fn product(&self, tuple: &DisjointTuple, inputs: &[Poly]) -> Result<Poly, TheoryError> {
        if inputs.len() != tuple.len() {
            return Err(TheoryError::Precondition("one input per part is required".into()));
        }
        if find_time_ordering(tuple).is_none() {
            return Err(TheoryError::NotTimeOrderable);
        }
        let mut acc = Poly::one();
        for x in inputs {
            acc = self.model.star_product(&acc, x, KernelKind::Dirac)?;
        }
        self.model.express(tuple.target(), &acc)
    }
}

/// Compares the time-ordered product of a pair with the closed formulas:
/// the Dirac form for every orderable pair, the retarded form when the pair
/// is time-ordered and the advanced form when it is anti-time-ordered.
pub fn check_to_formula(
    model: &KgModel,
    f: &dyn Topfa,
    tuple: &DisjointTuple,
    cfg: &SampleConfig,
) -> Result<Vec<CheckEntry>, TheoryError> {
    if tuple.len() != 2 {
        return Err(TheoryError::Precondition("a pair is required".into()));
    }
    let ordered = is_time_ordered(tuple);
    let anti = is_time_ordered(&tuple.permuted(&Perm::new(&[2, 1])?)?);
    if !ordered && !anti {
        return Err(TheoryError::Precondition("pair is neither time-ordered nor anti-time-ordered".into()));
    }
    let n = tuple.target();
    let spaces: Vec<_> =
        tuple.parts().iter().map(|p| Ok(FinVec::new(f.generators(p)?, cfg.max_degree).basis())).collect::<Result<_, TheoryError>>()?;
    let mut forms = vec![("to_formula_dirac", KernelKind::Dirac)];
    if ordered {
        forms.push(("to_formula_retarded", KernelKind::Retarded));
    }
    if anti {
        forms.push(("to_formula_advanced", KernelKind::Advanced));
    }
    let mut out = Vec::new();
    for (name, kind) in forms {
        let s = sample_deviation(&spaces, cfg, |x| {
            let lhs = f.product(tuple, x)?;
            let rhs = model.express(n, &model.star_product(&x[0], &x[1], kind)?)?;
            Ok((lhs, rhs))
        })?;
        out.push(s.into_entry(name, n.ambient()));
    }
    Ok(out)
}

/// `φ_p ⋆ φ_q − φ_q ⋆ φ_p = i G(p, q)` on listed point pairs.
pub fn commutator_table(model: &KgModel, pairs: &[(Point, Point)]) -> Result<Vec<(Point, Point, C64)>, TheoryError> {
    let amb = &model.cfg.ambient;
    pairs
        .iter()
        .map(|&(p, q)| {
            let (a, b) = (Poly::generator(amb.index(p) as Gen), Poly::generator(amb.index(q) as Gen));
            let ab = model.star_product(&a, &b, KernelKind::Causal)?;
            let ba = model.star_product(&b, &a, KernelKind::Causal)?;
            Ok((p, q, ab.sub(&ba).coefficient(&Monomial::one())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::deviation;

    fn cfg(x: usize, t: usize, m2: f64) -> KgConfig {
        KgConfig::new(&LatticeSpacetime::cylinder(t, x), m2, 2).unwrap()
    }

    /// Independent dense assembly of `P` with zero extension.
    fn dense_p(cfg: &KgConfig) -> Vec<Vec<f64>> {
        let amb = cfg.ambient();
        let n = amb.capacity();
        let mut m = vec![vec![0.0; n]; n];
        for p in amb.points() {
            let i = amb.index(p);
            m[i][i] += -2.0 + 2.0 + cfg.mass_squared();
            for (dt, dx, w) in [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, -1.0), (0, -1, -1.0)] {
                let q = Point::new(p.t + dt, p.x + dx);
                if q.t >= 0 && q.t < amb.time_extent() as i32 {
                    let q = Point::new(q.t, q.x.rem_euclid(amb.space_extent() as i32));
                    m[i][amb.index(q)] += w;
                }
            }
        }
        m
    }

    #[test]
    fn config_preconditions() {
        assert!(KgConfig::new(&LatticeSpacetime::cylinder(9, 4), 0.0, 2).is_err());
        assert!(KgConfig::new(&LatticeSpacetime::cylinder(10, 4), 0.0, 1).is_err());
        assert!(KgConfig::new(&LatticeSpacetime::cylinder(10, 4), -1.0, 2).is_err());
        assert!(KgConfig::new(&LatticeSpacetime::strip(10, 4), 0.0, 2).is_err());
        assert!(KgConfig::new(&LatticeSpacetime::cylinder(10, 4), 0.0, 2).is_ok());
    }

    #[test]
    fn delta_stencil_is_integer_and_matches_dense_assembly() {
        let c = cfg(8, 16, 0.0);
        let amb = c.ambient().clone();
        let d = LatticeField::delta(&amb, Point::new(5, 0));
        let pd = kg_apply(&c, &d).unwrap();
        assert_eq!(pd.get(&amb, Point::new(5, 0)), C64::new(0.0, 0.0));
        assert_eq!(pd.get(&amb, Point::new(4, 0)), C64::new(1.0, 0.0));
        assert_eq!(pd.get(&amb, Point::new(6, 0)), C64::new(1.0, 0.0));
        assert_eq!(pd.get(&amb, Point::new(5, 1)), C64::new(-1.0, 0.0));
        assert_eq!(pd.get(&amb, Point::new(5, 7)), C64::new(-1.0, 0.0));
        let dense = dense_p(&c);
        let j = amb.index(Point::new(5, 0));
        for i in 0..amb.capacity() {
            assert_eq!(pd.values()[i].re, dense[i][j]);
        }
        assert!(kg_apply(&c, &LatticeField::delta(&amb, Point::new(0, 3))).is_err());
        assert_eq!(kg_apply(&c, &LatticeField::zeros(&amb)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn green_inverts_dense_operator() {
        let c = cfg(6, 14, 0.25);
        let amb = c.ambient().clone();
        let dense = dense_p(&c);
        let mut f = LatticeField::zeros(&amb);
        f.set(&amb, Point::new(5, 2), C64::new(0.5, -1.0));
        f.set(&amb, Point::new(7, 4), C64::new(2.0, 0.25));
        let u = green(&c, &f, GreenKind::Retarded).unwrap();
        let n = amb.capacity();
        for i in 0..n {
            if amb.point(i).t < amb.time_extent() as i32 - 1 {
                let s: C64 = (0..n).map(|j| u.values()[j] * dense[i][j]).sum();
                assert!((s - f.values()[i]).norm() < 1e-10);
            }
        }
        assert!(green(&c, &LatticeField::delta(&amb, Point::new(1, 0)), GreenKind::Advanced).is_err());
        assert_eq!(green(&c, &LatticeField::zeros(&amb), GreenKind::Advanced).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn propagator_suite_passes_for_both_masses() {
        for m2 in [0.0, 0.25] {
            let c = cfg(8, 24, m2);
            let props = Propagators::compute(&c);
            for e in check_propagators(&c, &props, 20, 3) {
                assert!(e.pass, "m2={m2}: {e:?}");
            }
        }
    }

    #[test]
    fn dirac_is_half_causal_in_strict_future() {
        let c = cfg(8, 24, 0.25);
        let props = Propagators::compute(&c);
        let amb = c.ambient();
        let (p, q) = (amb.index(Point::new(8, 3)), amb.index(Point::new(12, 4)));
        assert_eq!(props.advanced(q, p), 0.0);
        assert_eq!(props.dirac(q, p), 0.5 * props.causal(q, p));
    }

    #[test]
    fn normal_forms_of_image_vanish_and_propagation_preserves_class() {
        let c = cfg(6, 16, 0.25);
        let model = KgModel::new(c.clone());
        let amb = c.ambient().clone();
        let m = Region::slab(&amb, 3, 12).unwrap();
        let mut chi = LatticeField::zeros(&amb);
        chi.set(&amb, Point::new(7, 1), C64::new(1.0, 2.0));
        chi.set(&amb, Point::new(8, 3), C64::new(-0.5, 0.0));
        let pchi = LinearObservable { smearing: kg_apply(&c, &chi).unwrap() };
        let nf = model.normal_form(&m, &pchi).unwrap();
        assert!(nf.iter().all(|v| v.norm() < 1e-10));

        let p = Point::new(6, 2);
        let moved = LatticeField::delta(&amb, p).sub(&kg_apply(&c, &LatticeField::delta(&amb, Point::new(7, 2))).unwrap());
        assert!(moved.support(&amb).iter().all(|q| q.t >= 7));
        let a = model.normal_form(&m, &LinearObservable { smearing: LatticeField::delta(&amb, p) }).unwrap();
        let b = model.normal_form(&m, &LinearObservable { smearing: moved }).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn reference_rows_give_full_rank_basis() {
        let c = cfg(6, 16, 0.25);
        let model = KgModel::new(c.clone());
        let amb = c.ambient().clone();
        let (r0, r1) = c.reference_rows();
        let slab = Region::slab(&amb, r0, r1).unwrap();
        let rb = model.region_basis(&slab).unwrap();
        assert_eq!(rb.basis().len(), 12);
        let thin = Region::slab(&amb, 9, 9).unwrap();
        assert_eq!(model.region_basis(&thin).unwrap().basis().len(), 6);
        let wide = Region::slab(&amb, 3, 12).unwrap();
        let rb = model.region_basis(&wide).unwrap();
        assert_eq!(rb.basis().len(), 12);
        // Every point's expansion reproduces its normal form.
        for p in wide.points() {
            let g = amb.index(p);
            let target = model.point_normal_form(g);
            let mut acc = vec![0.0; target.len()];
            for &(b, w) in rb.expansion(g as Gen).unwrap() {
                for (a, v) in acc.iter_mut().zip(model.point_normal_form(b as usize)) {
                    *a += w * v;
                }
            }
            let scale = target.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, t) in acc.iter().zip(&target) {
                assert!((a - t).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn single_contraction_and_commutator() {
        let c = cfg(8, 24, 0.0);
        let model = KgModel::new(c.clone());
        let amb = c.ambient().clone();
        let (p, q) = (Point::new(12, 3), Point::new(9, 3));
        let (gp, gq) = (amb.index(p) as Gen, amb.index(q) as Gen);
        let prod = model.star_product(&Poly::generator(gp), &Poly::generator(gq), KernelKind::Causal).unwrap();
        let g = model.propagators().causal(gp as usize, gq as usize);
        assert!(g != 0.0);
        assert_eq!(prod.coefficient(&Monomial::one()), C64::new(0.0, 0.5 * g));
        let table = commutator_table(&model, &[(p, q), (Point::new(10, 0), Point::new(10, 4))]).unwrap();
        assert_eq!(table[0].2, C64::new(0.0, g));
        assert_eq!(table[1].2, C64::new(0.0, 0.0));
        let one = model.star_product(&Poly::one(), &prod, KernelKind::Causal).unwrap();
        assert_eq!(deviation(&one, &prod), 0.0);
    }
}
