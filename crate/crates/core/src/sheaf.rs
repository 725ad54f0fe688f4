//! Cellular sheaves on the face poset of a simplicial complex, and the
//! relative-cohomology sheaves of simplicial pairs over a base.
//!
//! A sheaf assigns a finitely presented module to every face and a
//! restriction map to every codimension-one incidence, commuting around
//! incidence squares.  Sheaves and their natural maps form an abelian
//! category, computed stalkwise.

use crate::category::AbelianCategory;
use crate::module::{FpModule, ModuleMap};
use crate::simplicial::{
    cochain_pullback_matrix, fibre_product, induced_between_slots, relative_cochain_complex,
    sd_map, CochainComplexData, CohomologySlot, FaceSet, Filtration, ModuleComplex,
    SimplicialComplex, SimplicialMap, Subdivision,
};
use crate::{Error, Matrix, Result, Ring, Scalar};
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Debug)]
pub struct CellularSheaf {
    pub base: SimplicialComplex,
    pub ring: Ring,
    /// One stalk per face of the base.
    pub stalks: Vec<FpModule>,
    /// Restriction along each codimension-one incidence (small, large).
    pub restrictions: BTreeMap<(usize, usize), ModuleMap>,
}

/// All codimension-one incidences (σ, τ) of the complex, σ ⊂ τ.
pub fn incidences(c: &SimplicialComplex) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for tau in 0..c.n_faces() {
        if c.dim_of(tau) == 0 {
            continue;
        }
        for (sigma, _) in c.boundary_with_signs(tau) {
            out.push((sigma, tau));
        }
    }
    out
}

impl CellularSheaf {
    pub fn new(
        base: SimplicialComplex,
        ring: Ring,
        stalks: Vec<FpModule>,
        restrictions: BTreeMap<(usize, usize), ModuleMap>,
    ) -> Result<Self> {
        if stalks.len() != base.n_faces() {
            return Err(Error::Invalid("one stalk per face required".into()));
        }
        for s in &stalks {
            if s.ring != ring {
                return Err(Error::Ring("stalk ring differs from the sheaf ring".into()));
            }
        }
        for (sigma, tau) in incidences(&base) {
            let rho = restrictions
                .get(&(sigma, tau))
                .ok_or_else(|| Error::Invalid(format!("missing restriction {sigma} -> {tau}")))?;
            if rho.src != stalks[sigma] || rho.dst != stalks[tau] {
                return Err(Error::Invalid(format!("restriction {sigma} -> {tau} endpoint mismatch")));
            }
        }
        let sheaf = CellularSheaf { base, ring, stalks, restrictions };
        // Poset-functor condition: both paths through any codimension-two
        // incidence agree.
        for omega in 0..sheaf.base.n_faces() {
            if sheaf.base.dim_of(omega) < 2 {
                continue;
            }
            let mut paths: BTreeMap<usize, Vec<ModuleMap>> = BTreeMap::new();
            for (tau, _) in sheaf.base.boundary_with_signs(omega) {
                let up = &sheaf.restrictions[&(tau, omega)];
                for (sigma, _) in sheaf.base.boundary_with_signs(tau) {
                    let lo = &sheaf.restrictions[&(sigma, tau)];
                    paths.entry(sigma).or_default().push(lo.then(up));
                }
            }
            for (sigma, ps) in paths {
                for p in &ps[1..] {
                    if !p.equal_to(&ps[0]) {
                        return Err(Error::Invalid(format!(
                            "restrictions around {sigma} -> {omega} do not commute"
                        )));
                    }
                }
            }
        }
        Ok(sheaf)
    }

    pub fn constant(base: &SimplicialComplex, stalk: &FpModule) -> Self {
        let stalks = vec![stalk.clone(); base.n_faces()];
        let restrictions = incidences(base)
            .into_iter()
            .map(|inc| (inc, ModuleMap::identity(stalk)))
            .collect();
        CellularSheaf { base: base.clone(), ring: stalk.ring, stalks, restrictions }
    }

    /// Restriction along any containment σ ⊆ τ, composed one vertex at a
    /// time.  Well-defined by the commutation invariant.
    pub fn composite_restriction(&self, sigma: usize, tau: usize) -> ModuleMap {
        let mut cur = sigma;
        let mut map = ModuleMap::identity(&self.stalks[sigma]);
        let target = &self.base.faces[tau];
        while cur != tau {
            let have = self.base.faces[cur].clone();
            let next_v = target
                .iter()
                .find(|v| have.binary_search(v).is_err())
                .expect("sigma is contained in tau");
            let mut bigger = have;
            bigger.push(*next_v);
            bigger.sort_unstable();
            let next = self.base.face_id(&bigger).expect("subsets of a face are faces");
            map = map.then(&self.restrictions[&(cur, next)]);
            cur = next;
        }
        map
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct CellSheafMorphism {
    pub src: CellularSheaf,
    pub dst: CellularSheaf,
    pub components: Vec<ModuleMap>,
}

impl CellSheafMorphism {
    pub fn new(src: CellularSheaf, dst: CellularSheaf, components: Vec<ModuleMap>) -> Result<Self> {
        if src.base != dst.base || src.ring != dst.ring {
            return Err(Error::Invalid("sheaf morphism needs a shared base".into()));
        }
        if components.len() != src.base.n_faces() {
            return Err(Error::Invalid("one component per face required".into()));
        }
        for (f, c) in components.iter().enumerate() {
            if c.src != src.stalks[f] || c.dst != dst.stalks[f] {
                return Err(Error::Invalid(format!("component at face {f} endpoint mismatch")));
            }
        }
        for (sigma, tau) in incidences(&src.base) {
            let a = components[sigma].then(&dst.restrictions[&(sigma, tau)]);
            let b = src.restrictions[&(sigma, tau)].then(&components[tau]);
            if !a.equal_to(&b) {
                return Err(Error::Invalid(format!(
                    "naturality fails at incidence {sigma} -> {tau}"
                )));
            }
        }
        Ok(CellSheafMorphism { src, dst, components })
    }

    fn new_unchecked(src: CellularSheaf, dst: CellularSheaf, components: Vec<ModuleMap>) -> Self {
        CellSheafMorphism { src, dst, components }
    }
}

/// Cellular sheaves over a fixed base as an abelian category.
#[derive(Clone, Debug)]
pub struct CellSheafCategory {
    pub base: SimplicialComplex,
    pub ring: Ring,
}

impl CellSheafCategory {
    pub fn new(base: SimplicialComplex, ring: Ring) -> Self {
        CellSheafCategory { base, ring }
    }

    fn stalkwise(&self, f: &CellSheafMorphism, g: &CellSheafMorphism, op: impl Fn(&ModuleMap, &ModuleMap) -> ModuleMap) -> Vec<ModuleMap> {
        f.components.iter().zip(&g.components).map(|(a, b)| op(a, b)).collect()
    }
}

impl AbelianCategory for CellSheafCategory {
    type Obj = CellularSheaf;
    type Mor = CellSheafMorphism;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn src(&self, f: &CellSheafMorphism) -> CellularSheaf {
        f.src.clone()
    }

    fn dst(&self, f: &CellSheafMorphism) -> CellularSheaf {
        f.dst.clone()
    }

    fn identity(&self, x: &CellularSheaf) -> CellSheafMorphism {
        let comps = x.stalks.iter().map(ModuleMap::identity).collect();
        CellSheafMorphism::new_unchecked(x.clone(), x.clone(), comps)
    }

    fn zero_object(&self) -> CellularSheaf {
        CellularSheaf::constant(&self.base, &FpModule::zero_module(self.ring))
    }

    fn zero_mor(&self, x: &CellularSheaf, y: &CellularSheaf) -> CellSheafMorphism {
        let comps = x
            .stalks
            .iter()
            .zip(&y.stalks)
            .map(|(a, b)| ModuleMap::zero_map(a, b))
            .collect();
        CellSheafMorphism::new_unchecked(x.clone(), y.clone(), comps)
    }

    fn is_zero_object(&self, x: &CellularSheaf) -> bool {
        x.stalks.iter().all(|s| s.is_zero_module())
    }

    fn is_zero_mor(&self, f: &CellSheafMorphism) -> bool {
        f.components.iter().all(|c| c.is_zero_map())
    }

    fn compose(&self, f: &CellSheafMorphism, g: &CellSheafMorphism) -> CellSheafMorphism {
        let comps = self.stalkwise(f, g, |a, b| a.then(b));
        CellSheafMorphism::new_unchecked(f.src.clone(), g.dst.clone(), comps)
    }

    fn add(&self, f: &CellSheafMorphism, g: &CellSheafMorphism) -> CellSheafMorphism {
        let comps = self.stalkwise(f, g, |a, b| a.add(b));
        CellSheafMorphism::new_unchecked(f.src.clone(), f.dst.clone(), comps)
    }

    fn neg(&self, f: &CellSheafMorphism) -> CellSheafMorphism {
        let comps = f.components.iter().map(|c| c.neg()).collect();
        CellSheafMorphism::new_unchecked(f.src.clone(), f.dst.clone(), comps)
    }

    fn scale(&self, c: &Scalar, f: &CellSheafMorphism) -> CellSheafMorphism {
        let comps = f.components.iter().map(|m| m.scale(c)).collect();
        CellSheafMorphism::new_unchecked(f.src.clone(), f.dst.clone(), comps)
    }

    fn equal(&self, f: &CellSheafMorphism, g: &CellSheafMorphism) -> bool {
        f.components.len() == g.components.len()
            && f.components.iter().zip(&g.components).all(|(a, b)| a.equal_to(b))
    }

    fn sum_object(&self, parts: &[CellularSheaf]) -> CellularSheaf {
        if parts.is_empty() {
            return self.zero_object();
        }
        let mut acc = parts[0].clone();
        for p in &parts[1..] {
            let stalks: Vec<FpModule> =
                acc.stalks.iter().zip(&p.stalks).map(|(a, b)| a.direct_sum(b)).collect();
            let restrictions = acc
                .restrictions
                .iter()
                .map(|(k, v)| (*k, v.direct_sum(&p.restrictions[k])))
                .collect();
            acc = CellularSheaf { base: acc.base, ring: acc.ring, stalks, restrictions };
        }
        acc
    }

    fn injection(&self, parts: &[CellularSheaf], k: usize) -> CellSheafMorphism {
        let sum = self.sum_object(parts);
        let mc = crate::category::ModuleCategory::new(self.ring);
        let comps = (0..self.base.n_faces())
            .map(|f| {
                let slots: Vec<FpModule> = parts.iter().map(|p| p.stalks[f].clone()).collect();
                mc.injection(&slots, k)
            })
            .collect();
        CellSheafMorphism::new_unchecked(parts[k].clone(), sum, comps)
    }

    fn projection(&self, parts: &[CellularSheaf], k: usize) -> CellSheafMorphism {
        let sum = self.sum_object(parts);
        let mc = crate::category::ModuleCategory::new(self.ring);
        let comps = (0..self.base.n_faces())
            .map(|f| {
                let slots: Vec<FpModule> = parts.iter().map(|p| p.stalks[f].clone()).collect();
                mc.projection(&slots, k)
            })
            .collect();
        CellSheafMorphism::new_unchecked(sum, parts[k].clone(), comps)
    }

    fn kernel(&self, f: &CellSheafMorphism) -> (CellularSheaf, CellSheafMorphism) {
        let pieces: Vec<(FpModule, ModuleMap)> = f.components.iter().map(|c| c.kernel()).collect();
        let mut restrictions = BTreeMap::new();
        for (sigma, tau) in incidences(&self.base) {
            let through = pieces[sigma].1.then(&f.src.restrictions[&(sigma, tau)]);
            let rho = f.components[tau]
                .kernel_lift(&pieces[tau].0, &pieces[tau].1, &through)
                .expect("kernel stalks map into kernel stalks");
            restrictions.insert((sigma, tau), rho);
        }
        let obj = CellularSheaf {
            base: self.base.clone(),
            ring: self.ring,
            stalks: pieces.iter().map(|p| p.0.clone()).collect(),
            restrictions,
        };
        let emb = CellSheafMorphism::new_unchecked(
            obj.clone(),
            f.src.clone(),
            pieces.into_iter().map(|p| p.1).collect(),
        );
        (obj, emb)
    }

    fn cokernel(&self, f: &CellSheafMorphism) -> (CellularSheaf, CellSheafMorphism) {
        let pieces: Vec<(FpModule, ModuleMap)> = f.components.iter().map(|c| c.cokernel()).collect();
        let mut restrictions = BTreeMap::new();
        for (sigma, tau) in incidences(&self.base) {
            let through = f.dst.restrictions[&(sigma, tau)].then(&pieces[tau].1);
            let rho = f.components[sigma]
                .cokernel_descend(&pieces[sigma].0, &through)
                .expect("cokernel stalks receive induced restrictions");
            restrictions.insert((sigma, tau), rho);
        }
        let obj = CellularSheaf {
            base: self.base.clone(),
            ring: self.ring,
            stalks: pieces.iter().map(|p| p.0.clone()).collect(),
            restrictions,
        };
        let proj = CellSheafMorphism::new_unchecked(
            f.dst.clone(),
            obj.clone(),
            pieces.into_iter().map(|p| p.1).collect(),
        );
        (obj, proj)
    }

    fn kernel_lift(
        &self,
        f: &CellSheafMorphism,
        emb: &CellSheafMorphism,
        u: &CellSheafMorphism,
    ) -> Result<CellSheafMorphism> {
        let mut comps = Vec::with_capacity(f.components.len());
        for ((c, e), w) in f.components.iter().zip(&emb.components).zip(&u.components) {
            comps.push(c.kernel_lift(&e.src, e, w)?);
        }
        Ok(CellSheafMorphism::new_unchecked(u.src.clone(), emb.src.clone(), comps))
    }

    fn cokernel_descend(
        &self,
        f: &CellSheafMorphism,
        proj: &CellSheafMorphism,
        u: &CellSheafMorphism,
    ) -> Result<CellSheafMorphism> {
        let mut comps = Vec::with_capacity(f.components.len());
        for ((c, p), w) in f.components.iter().zip(&proj.components).zip(&u.components) {
            comps.push(c.cokernel_descend(&p.dst, w)?);
        }
        Ok(CellSheafMorphism::new_unchecked(proj.dst.clone(), u.dst.clone(), comps))
    }

    fn is_iso(&self, f: &CellSheafMorphism) -> bool {
        f.components.iter().all(|c| c.is_iso())
    }

    fn inverse(&self, f: &CellSheafMorphism) -> Result<CellSheafMorphism> {
        let comps: Result<Vec<ModuleMap>> = f.components.iter().map(|c| c.inverse()).collect();
        Ok(CellSheafMorphism::new_unchecked(f.dst.clone(), f.src.clone(), comps?))
    }
}

/// How the stalk neighbourhood of a base face is modeled.  `Subdivided`
/// uses the closed cells of the barycentric subdivision and is the sound
/// default; `ClosedStar` uses unsubdivided closed stars, whose overlap
/// into neighbouring cells breaks base change for non-surjective
/// inclusions.  It is kept as the documented counterexample channel.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StalkModel {
    Subdivided,
    ClosedStar,
}

/// A map of complexes over a base, a closed subcomplex of the total
/// space, and a cohomological degree.
#[derive(Clone, PartialEq, Debug)]
pub struct SimplicialPair {
    pub total: SimplicialComplex,
    pub sub: FaceSet,
    pub map: SimplicialMap,
    pub degree: usize,
    pub model: StalkModel,
}

impl SimplicialPair {
    pub fn new(
        total: SimplicialComplex,
        sub: FaceSet,
        map: SimplicialMap,
        degree: usize,
    ) -> Result<Self> {
        if map.src != total {
            return Err(Error::Invalid("structure map must start at the total complex".into()));
        }
        if sub.iter().any(|&f| f >= total.n_faces()) || !total.is_closed(&sub) {
            return Err(Error::Invalid("subcomplex must be a closed face set".into()));
        }
        Ok(SimplicialPair { total, sub, map, degree, model: StalkModel::Subdivided })
    }

    pub fn with_model(mut self, model: StalkModel) -> Self {
        self.model = model;
        self
    }

    pub fn base(&self) -> &SimplicialComplex {
        &self.map.dst
    }
}

/// One stalk of a relative sheaf: the cochain complex of the local pair
/// and, when the degree is in range, its cohomology presentation.
#[derive(Clone, Debug)]
pub struct StalkData {
    pub dom: FaceSet,
    pub rel: FaceSet,
    pub cx: CochainComplexData,
    pub slot: Option<CohomologySlot>,
    pub stalk: FpModule,
}

fn stalk_at(
    ambient: &SimplicialComplex,
    dom: FaceSet,
    rel: FaceSet,
    degree: usize,
    ring: Ring,
) -> Result<StalkData> {
    let cx = relative_cochain_complex(ambient, &dom, &rel, ring)?;
    let slot = if degree < cx.complex.len() { Some(cx.complex.slot(degree)) } else { None };
    let stalk = slot.as_ref().map_or_else(|| FpModule::zero_module(ring), |s| s.module.clone());
    Ok(StalkData { dom, rel, cx, slot, stalk })
}

/// Map on stalk cohomology induced by a cochain-level matrix, or the zero
/// map when a degree is out of range.
fn stalk_component(
    src: &StalkData,
    k_src: usize,
    dst: &StalkData,
    k_dst: usize,
    mat: Matrix,
) -> Result<ModuleMap> {
    match (&src.slot, &dst.slot) {
        (Some(s), Some(t)) => {
            let phi = ModuleMap::new_unchecked(
                src.cx.complex.terms[k_src].clone(),
                dst.cx.complex.terms[k_dst].clone(),
                mat,
            );
            induced_between_slots(s, t, &dst.cx.complex.d_out(k_dst), &phi)
        }
        _ => Ok(ModuleMap::zero_map(&src.stalk, &dst.stalk)),
    }
}

/// Identity-block matrix restricting cochains from a larger basis to a
/// contained one.
fn basis_projection(src: &[usize], dst: &[usize], ring: Ring) -> Matrix {
    let mut mat = Matrix::zero(dst.len(), src.len(), ring);
    for (row, f) in dst.iter().enumerate() {
        let col = src.binary_search(f).expect("projection needs a contained basis");
        mat.set(row, col, Scalar::from_integer(1.into()));
    }
    mat
}

/// A relative sheaf together with the per-face cochain presentations the
/// sheaf-level operations are built from.
#[derive(Clone, Debug)]
pub struct RelativeSheafData {
    pub pair: SimplicialPair,
    pub ring: Ring,
    /// Complex the local cochains live in: the subdivided total complex
    /// for `Subdivided`, the total complex itself for `ClosedStar`.
    pub ambient: SimplicialComplex,
    /// Subdivision of the total complex, for the `Subdivided` model.
    pub sd: Option<Subdivision>,
    /// The subcomplex at ambient level.
    pub level_sub: FaceSet,
    pub stalks: Vec<StalkData>,
    pub sheaf: CellularSheaf,
}

pub fn relative_sheaf_data(p: &SimplicialPair, ring: Ring) -> Result<RelativeSheafData> {
    let base = p.base().clone();
    let (ambient, sd, level_sub, doms): (SimplicialComplex, Option<Subdivision>, FaceSet, Vec<FaceSet>) =
        match p.model {
            StalkModel::Subdivided => {
                let sd_total = p.total.sd();
                let sd_base = base.sd();
                let sdf = sd_map(&p.map, &sd_total, &sd_base)?;
                let level_sub = sd_total.faces_inside(&p.sub);
                let doms = (0..base.n_faces())
                    .map(|q| sdf.preimage(&sd_base.upward_set(q)))
                    .collect();
                (sd_total.complex.clone(), Some(sd_total), level_sub, doms)
            }
            StalkModel::ClosedStar => {
                let doms = (0..base.n_faces())
                    .map(|q| p.map.preimage(&base.closed_star(q)))
                    .collect();
                (p.total.clone(), None, p.sub.clone(), doms)
            }
        };
    let mut stalks = Vec::with_capacity(base.n_faces());
    for dom in doms {
        let rel: FaceSet = dom.intersection(&level_sub).copied().collect();
        stalks.push(stalk_at(&ambient, dom, rel, p.degree, ring)?);
    }
    let mut restrictions = BTreeMap::new();
    for (sigma, tau) in incidences(&base) {
        let (s, t) = (&stalks[sigma], &stalks[tau]);
        assert!(t.dom.is_subset(&s.dom), "local domains shrink along incidences");
        let mat = basis_projection(
            &s.cx.bases[p.degree.min(s.cx.bases.len() - 1)],
            &t.cx.bases[p.degree.min(t.cx.bases.len() - 1)],
            ring,
        );
        let rho = stalk_component(s, p.degree, t, p.degree, mat)?;
        restrictions.insert((sigma, tau), rho);
    }
    let sheaf = CellularSheaf::new(
        base,
        ring,
        stalks.iter().map(|s| s.stalk.clone()).collect(),
        restrictions,
    )?;
    Ok(RelativeSheafData { pair: p.clone(), ring, ambient, sd, level_sub, stalks, sheaf })
}

/// The sheaf of local relative cohomology of the pair, one stalk per base
/// face, restrictions induced by shrinking local neighbourhoods.
pub fn relative_sheaf(p: &SimplicialPair, ring: Ring) -> Result<CellularSheaf> {
    Ok(relative_sheaf_data(p, ring)?.sheaf)
}

/// Contravariant map of relative sheaves induced by a map of pairs over
/// the same base: `g: (X, Y) -> (X', Y')` yields the pullback morphism
/// from the sheaf of the primed pair to the sheaf of the unprimed one.
pub fn type1_restriction(
    g: &SimplicialMap,
    src_pair: &SimplicialPair,
    dst_pair: &SimplicialPair,
    ring: Ring,
) -> Result<CellSheafMorphism> {
    if g.src != src_pair.total || g.dst != dst_pair.total {
        return Err(Error::Invalid("map endpoints do not match the pairs".into()));
    }
    if g.then(&dst_pair.map)? != src_pair.map {
        return Err(Error::NotOverBase("map does not commute with the structure maps".into()));
    }
    if src_pair.degree != dst_pair.degree || src_pair.model != dst_pair.model {
        return Err(Error::Invalid("pairs must share degree and stalk model".into()));
    }
    if src_pair.sub.iter().any(|&f| !dst_pair.sub.contains(&g.map_face(f))) {
        return Err(Error::Invalid("map must carry the subcomplex into the target one".into()));
    }
    let from = relative_sheaf_data(dst_pair, ring)?;
    let to = relative_sheaf_data(src_pair, ring)?;
    let level_g = match src_pair.model {
        StalkModel::Subdivided => sd_map(
            g,
            to.sd.as_ref().expect("subdivided model carries its subdivision"),
            from.sd.as_ref().expect("subdivided model carries its subdivision"),
        )?,
        StalkModel::ClosedStar => g.clone(),
    };
    let i = src_pair.degree;
    let mut comps = Vec::with_capacity(to.stalks.len());
    for q in 0..to.stalks.len() {
        let (s, t) = (&from.stalks[q], &to.stalks[q]);
        let mat = cochain_pullback_matrix(
            &level_g,
            &s.cx.bases[i.min(s.cx.bases.len() - 1)],
            &t.cx.bases[i.min(t.cx.bases.len() - 1)],
            ring,
        );
        comps.push(stalk_component(s, i, t, i, mat)?);
    }
    CellSheafMorphism::new(from.sheaf, to.sheaf, comps)
}

/// The connecting morphism of a nested chain `Z ⊆ Y ⊆ X` over the base:
/// from the degree-`i` sheaf of `(Y, Z)` to the degree-`i+1` sheaf of
/// `(X, Y)`, computed by the snake construction on local cochains.
pub struct Type2Connecting {
    pub low_pair: SimplicialPair,
    pub top_pair: SimplicialPair,
    pub delta: CellSheafMorphism,
}

pub fn type2_connecting(
    total: &SimplicialComplex,
    y: &FaceSet,
    z: &FaceSet,
    f: &SimplicialMap,
    i: usize,
    model: StalkModel,
    ring: Ring,
) -> Result<Type2Connecting> {
    if !z.is_subset(y) {
        return Err(Error::ChainNotNested("Z is not contained in Y".into()));
    }
    if !total.is_closed(y) || !total.is_closed(z) {
        return Err(Error::ChainNotNested("subcomplexes must be closed".into()));
    }
    let top_pair = SimplicialPair::new(total.clone(), y.clone(), f.clone(), i + 1)?.with_model(model);
    let ext = total.extract(y)?;
    let ambient_to_low: BTreeMap<usize, usize> =
        ext.face_to_ambient.iter().enumerate().map(|(lo, &am)| (am, lo)).collect();
    let z_low: FaceSet = z.iter().map(|a| ambient_to_low[a]).collect();
    let low_map = ext.inclusion.then(f)?;
    let low_pair = SimplicialPair::new(ext.complex.clone(), z_low, low_map, i)?.with_model(model);

    let top = relative_sheaf_data(&top_pair, ring)?;
    let low = relative_sheaf_data(&low_pair, ring)?;
    // The inclusion of Y into X at ambient level, which identifies the
    // low pair's local cochains with the (B, C) part of the triple.
    let level_incl = match model {
        StalkModel::Subdivided => sd_map(
            &ext.inclusion,
            low.sd.as_ref().expect("subdivided model carries its subdivision"),
            top.sd.as_ref().expect("subdivided model carries its subdivision"),
        )?,
        StalkModel::ClosedStar => ext.inclusion.clone(),
    };
    let level_z: FaceSet = match model {
        StalkModel::Subdivided => top.sd.as_ref().unwrap().faces_inside(z),
        StalkModel::ClosedStar => z.clone(),
    };

    let mut comps = Vec::with_capacity(low.stalks.len());
    for q in 0..low.stalks.len() {
        let s = &low.stalks[q];
        let t = &top.stalks[q];
        // Local triple: A ⊇ B ⊇ C in the ambient complex of X.
        let a = &t.dom;
        let c: FaceSet = a.intersection(&level_z).copied().collect();
        let middle = relative_cochain_complex(&top.ambient, a, &c, ring)?;
        if s.slot.is_none() || t.slot.is_none() || i + 1 >= middle.complex.len() {
            comps.push(ModuleMap::zero_map(&s.stalk, &t.stalk));
            continue;
        }
        // B \ C basis in ambient coordinates, image of the low basis.
        let low_basis = &s.cx.bases[i];
        let b_basis: Vec<usize> = low_basis.iter().map(|&lf| level_incl.map_face(lf)).collect();
        let mid_basis_i = &middle.bases[i];
        let mid_basis_i1 = &middle.bases[i + 1];
        let top_basis_i1 = &t.cx.bases[i + 1];
        // Extension by zero of the (B, C) part into the middle complex.
        let mut ext0 = Matrix::zero(mid_basis_i.len(), b_basis.len(), ring);
        for (col, bf) in b_basis.iter().enumerate() {
            let row = mid_basis_i.binary_search(bf).expect("B-cochains sit inside the middle complex");
            ext0.set(row, col, Scalar::from_integer(1.into()));
        }
        let proj = basis_projection(mid_basis_i1, top_basis_i1, ring);
        let d_mid = middle.complex.maps[i].mat.clone();
        let mat = proj.mul(&d_mid).mul(&ext0);
        comps.push(stalk_component(s, i, t, i + 1, mat)?);
    }
    let delta = CellSheafMorphism::new(low.sheaf, top.sheaf, comps)?;
    Ok(Type2Connecting { low_pair, top_pair, delta })
}

/// The pair pulled back along `g: T -> S`, with the projection to the
/// original total complex.
pub struct PullbackPair {
    pub pair: SimplicialPair,
    pub to_total: SimplicialMap,
}

pub fn pullback_pair(g: &SimplicialMap, p: &SimplicialPair) -> Result<PullbackPair> {
    if g.dst != *p.base() {
        return Err(Error::Invalid("pullback map must land in the base".into()));
    }
    let (total, pi_x, pi_t) = fibre_product(&p.map, g)?;
    let sub = pi_x.preimage(&p.sub);
    let pair = SimplicialPair::new(total, sub, pi_t, p.degree)?.with_model(p.model);
    Ok(PullbackPair { pair, to_total: pi_x })
}

/// Outcome of comparing the pullback of the relative sheaf with the
/// relative sheaf of the pullback.
pub struct BaseChangeReport {
    pub holds: bool,
    /// Face of the new base where the comparison first fails.
    pub witness: Option<usize>,
    pub pulled: SimplicialPair,
}

pub fn base_change_report(g: &SimplicialMap, p: &SimplicialPair, ring: Ring) -> Result<BaseChangeReport> {
    let pb = pullback_pair(g, p)?;
    let downstairs = relative_sheaf_data(p, ring)?;
    let upstairs = relative_sheaf_data(&pb.pair, ring)?;
    // The pullback sheaf g*F: stalks copied along g, restrictions by
    // composite restriction of F.
    let t_base = g.src.clone();
    let stalks: Vec<FpModule> = (0..t_base.n_faces())
        .map(|tau| downstairs.sheaf.stalks[g.map_face(tau)].clone())
        .collect();
    let restrictions: BTreeMap<(usize, usize), ModuleMap> = incidences(&t_base)
        .into_iter()
        .map(|(sigma, tau)| {
            let rho = downstairs.sheaf.composite_restriction(g.map_face(sigma), g.map_face(tau));
            ((sigma, tau), rho)
        })
        .collect();
    let pulled_sheaf = CellularSheaf::new(t_base.clone(), ring, stalks, restrictions)?;

    let level_pi = match p.model {
        StalkModel::Subdivided => sd_map(
            &pb.to_total,
            upstairs.sd.as_ref().expect("subdivided model carries its subdivision"),
            downstairs.sd.as_ref().expect("subdivided model carries its subdivision"),
        )?,
        StalkModel::ClosedStar => pb.to_total.clone(),
    };
    let i = p.degree;
    let mut comps = Vec::with_capacity(t_base.n_faces());
    for tau in 0..t_base.n_faces() {
        let s = &downstairs.stalks[g.map_face(tau)];
        let t = &upstairs.stalks[tau];
        let mat = cochain_pullback_matrix(
            &level_pi,
            &s.cx.bases[i.min(s.cx.bases.len() - 1)],
            &t.cx.bases[i.min(t.cx.bases.len() - 1)],
            ring,
        );
        comps.push(stalk_component(s, i, t, i, mat)?);
    }
    // Stalkwise isomorphism plus commuting restriction squares.
    let mut witness = None;
    for tau in 0..t_base.n_faces() {
        if !comps[tau].is_iso() {
            witness = Some(tau);
            break;
        }
    }
    if witness.is_none() {
        for (sigma, tau) in incidences(&t_base) {
            let a = comps[sigma].then(&upstairs.sheaf.restrictions[&(sigma, tau)]);
            let b = pulled_sheaf.restrictions[&(sigma, tau)].then(&comps[tau]);
            if !a.equal_to(&b) {
                witness = Some(sigma);
                break;
            }
        }
    }
    Ok(BaseChangeReport { holds: witness.is_none(), witness, pulled: pb.pair })
}

pub fn base_change_check(g: &SimplicialMap, p: &SimplicialPair, ring: Ring) -> Result<bool> {
    Ok(base_change_report(g, p, ring)?.holds)
}

/// Product of two pairs over the same base: fibre product of the totals,
/// union subcomplex, added degrees.  Over the integers the left factor's
/// stalks must be torsion-free, the Künneth flatness hypothesis.
pub struct ProductPair {
    pub pair: SimplicialPair,
    pub to_left: SimplicialMap,
    pub to_right: SimplicialMap,
}

pub fn product_pair(p: &SimplicialPair, q: &SimplicialPair, ring: Ring) -> Result<ProductPair> {
    if p.base() != q.base() {
        return Err(Error::NotOverBase("product needs pairs over the same base".into()));
    }
    if p.model != q.model {
        return Err(Error::Invalid("pairs must share a stalk model".into()));
    }
    if ring == Ring::Int {
        let left = relative_sheaf(p, ring)?;
        for stalk in &left.stalks {
            if !stalk.invariants().torsion.is_empty() {
                return Err(Error::FlatnessRequired(format!("torsion stalk in degree {}", p.degree)));
            }
        }
    }
    let (total, pi_l, pi_r) = fibre_product(&p.map, &q.map)?;
    let mut sub = pi_l.preimage(&p.sub);
    sub.extend(pi_r.preimage(&q.sub));
    let map = pi_l.then(&p.map)?;
    let pair = SimplicialPair::new(total, sub, map, p.degree + q.degree)?.with_model(p.model);
    Ok(ProductPair { pair, to_left: pi_l, to_right: pi_r })
}

/// Cochain complex of a sheaf over a relative face set: degree-k term is
/// the direct sum of stalks over the k-faces of `dom` outside `rel`, with
/// signed restriction differentials.
#[derive(Clone, Debug)]
pub struct SheafCochainData {
    /// Faces contributing to each degree, ascending.
    pub blocks: Vec<Vec<usize>>,
    /// Generator offset of each block within its degree.
    pub offsets: Vec<Vec<usize>>,
    pub complex: ModuleComplex,
}

pub fn sheaf_cochain_data(f: &CellularSheaf, dom: &FaceSet, rel: &FaceSet) -> Result<SheafCochainData> {
    if !rel.is_subset(dom) {
        return Err(Error::Invalid("relative set not inside the domain".into()));
    }
    if !f.base.is_closed(dom) || !f.base.is_closed(rel) {
        return Err(Error::Invalid("sheaf cochains need closed face sets".into()));
    }
    let top = f.base.top_dim();
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for &face in dom {
        if !rel.contains(&face) {
            blocks[f.base.dim_of(face)].push(face);
        }
    }
    let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(top + 1);
    let mut terms: Vec<FpModule> = Vec::with_capacity(top + 1);
    for degree in &blocks {
        let mut offs = Vec::with_capacity(degree.len());
        let mut acc = FpModule::zero_module(f.ring);
        for &face in degree {
            offs.push(acc.generators());
            acc = acc.direct_sum(&f.stalks[face]);
        }
        offsets.push(offs);
        terms.push(acc);
    }
    let mut maps = Vec::with_capacity(top);
    for k in 0..top {
        let mut mat = Matrix::zero(terms[k + 1].generators(), terms[k].generators(), f.ring);
        for (tpos, &tau) in blocks[k + 1].iter().enumerate() {
            for (sigma, sign) in f.base.boundary_with_signs(tau) {
                if let Ok(spos) = blocks[k].binary_search(&sigma) {
                    let rho = &f.restrictions[&(sigma, tau)];
                    for r in 0..rho.mat.rows {
                        for c in 0..rho.mat.cols {
                            let v = rho.mat.at(r, c).clone() * Scalar::from_integer(sign.into());
                            mat.set(offsets[k + 1][tpos] + r, offsets[k][spos] + c, v);
                        }
                    }
                }
            }
        }
        maps.push(ModuleMap::new_unchecked(terms[k].clone(), terms[k + 1].clone(), mat));
    }
    let complex = ModuleComplex::new(terms, maps)?;
    Ok(SheafCochainData { blocks, offsets, complex })
}

/// Global cohomology of the sheaf over its whole base.
pub fn sheaf_cohomology(f: &CellularSheaf) -> Result<Vec<FpModule>> {
    Ok(sheaf_cochain_data(f, &f.base.full_set(), &FaceSet::new())?.complex.all_cohomology())
}

/// The sheaf transported to the barycentric subdivision: the stalk at a
/// chain is the stalk at its largest member.
pub fn sd_sheaf(f: &CellularSheaf, sd: &Subdivision) -> Result<CellularSheaf> {
    if sd.base != f.base {
        return Err(Error::Invalid("subdivision of a different base".into()));
    }
    let stalks: Vec<FpModule> = (0..sd.complex.n_faces())
        .map(|c| f.stalks[sd.top_of(c)].clone())
        .collect();
    let restrictions: BTreeMap<(usize, usize), ModuleMap> = incidences(&sd.complex)
        .into_iter()
        .map(|(c, d)| ((c, d), f.composite_restriction(sd.top_of(c), sd.top_of(d))))
        .collect();
    CellularSheaf::new(sd.complex.clone(), f.ring, stalks, restrictions)
}

/// Derived pushforward oracle: the degree-`j` pushforward sheaf of `f`
/// along `g`, each stalk the `j`-th cohomology of the sheaf cochains over
/// the local preimage in the subdivided total complex.
pub fn pushforward_oracle(g: &SimplicialMap, f: &CellularSheaf, j: usize) -> Result<CellularSheaf> {
    if f.base != g.src {
        return Err(Error::Invalid("sheaf must live on the source of the map".into()));
    }
    let sd_total = g.src.sd();
    let sd_base = g.dst.sd();
    let sdg = sd_map(g, &sd_total, &sd_base)?;
    let f_sd = sd_sheaf(f, &sd_total)?;
    let empty = FaceSet::new();
    let mut datas = Vec::with_capacity(g.dst.n_faces());
    for q in 0..g.dst.n_faces() {
        let dom = sdg.preimage(&sd_base.upward_set(q));
        datas.push(sheaf_cochain_data(&f_sd, &dom, &empty)?);
    }
    let slots: Vec<Option<CohomologySlot>> = datas
        .iter()
        .map(|d| if j < d.complex.len() { Some(d.complex.slot(j)) } else { None })
        .collect();
    let stalks: Vec<FpModule> = slots
        .iter()
        .map(|s| s.as_ref().map_or_else(|| FpModule::zero_module(f.ring), |s| s.module.clone()))
        .collect();
    let mut restrictions = BTreeMap::new();
    for (sigma, tau) in incidences(&g.dst) {
        let rho = match (&slots[sigma], &slots[tau]) {
            (Some(s), Some(t)) => {
                let mat = sheaf_block_projection(&datas[sigma], &datas[tau], j, f.ring);
                let phi = ModuleMap::new_unchecked(
                    datas[sigma].complex.terms[j].clone(),
                    datas[tau].complex.terms[j].clone(),
                    mat,
                );
                induced_between_slots(s, t, &datas[tau].complex.d_out(j), &phi)?
            }
            _ => ModuleMap::zero_map(&stalks[sigma], &stalks[tau]),
        };
        restrictions.insert((sigma, tau), rho);
    }
    CellularSheaf::new(g.dst.clone(), f.ring, stalks, restrictions)
}

/// Projection of sheaf cochains onto a smaller domain, block by block.
fn sheaf_block_projection(src: &SheafCochainData, dst: &SheafCochainData, k: usize, ring: Ring) -> Matrix {
    let mut mat = Matrix::zero(
        dst.complex.terms[k].generators(),
        src.complex.terms[k].generators(),
        ring,
    );
    for (dpos, face) in dst.blocks[k].iter().enumerate() {
        let spos = src.blocks[k]
            .binary_search(face)
            .expect("projection needs a contained block basis");
        let width = {
            // Width of this block: generators of the shared stalk.
            let next = dpos + 1;
            if next < dst.blocks[k].len() {
                dst.offsets[k][next] - dst.offsets[k][dpos]
            } else {
                dst.complex.terms[k].generators() - dst.offsets[k][dpos]
            }
        };
        for w in 0..width {
            mat.set(
                dst.offsets[k][dpos] + w,
                src.offsets[k][spos] + w,
                Scalar::from_integer(1.into()),
            );
        }
    }
    mat
}

/// Concentration test: with coefficients in the relative sheaf of `p`,
/// each filtration step's relative cohomology must sit in the degree
/// matching its stage index.
pub fn adapted_check(p: &SimplicialPair, filt: &Filtration, ring: Ring) -> Result<bool> {
    let f = relative_sheaf(p, ring)?;
    adapted_check_sheaf(&f, filt)
}

pub fn adapted_check_sheaf(f: &CellularSheaf, filt: &Filtration) -> Result<bool> {
    for a in 0..filt.len() {
        let dom = filt.stage(a as isize);
        let rel = filt.stage(a as isize - 1);
        let data = sheaf_cochain_data(f, &dom, &rel)?;
        for k in 0..data.complex.len() {
            if k != a && !data.complex.cohomology(k).is_zero_module() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::module::invariant_list;

    fn pair(
        total: &SimplicialComplex,
        sub: FaceSet,
        map: &SimplicialMap,
        degree: usize,
    ) -> SimplicialPair {
        SimplicialPair::new(total.clone(), sub, map.clone(), degree).unwrap()
    }

    fn over_point(total: &SimplicialComplex, sub: FaceSet, degree: usize) -> SimplicialPair {
        pair(total, sub, &fixtures::to_point(total), degree)
    }

    fn twisted_circle_sheaf(ring: Ring) -> CellularSheaf {
        let circ = fixtures::circle();
        let stalk = FpModule::free(1, ring);
        let mut restrictions = BTreeMap::new();
        for (sigma, tau) in incidences(&circ) {
            let flip = sigma == circ.face_id(&[0]).unwrap() && tau == circ.face_id(&[0, 2]).unwrap();
            let entry = if flip { -1 } else { 1 };
            let mat = Matrix::from_i64(ring, &[&[entry]]);
            restrictions.insert((sigma, tau), ModuleMap::new_unchecked(stalk.clone(), stalk.clone(), mat));
        }
        CellularSheaf::new(circ, ring, vec![stalk; 6], restrictions).unwrap()
    }

    #[test]
    fn constant_sheaf_cohomology() {
        let z = FpModule::free(1, Ring::Int);
        let on_pt = CellularSheaf::constant(&fixtures::point(), &z);
        assert_eq!(invariant_list(&sheaf_cohomology(&on_pt).unwrap()), vec!["R^1"]);
        let on_circ = CellularSheaf::constant(&fixtures::circle(), &z);
        assert_eq!(invariant_list(&sheaf_cohomology(&on_circ).unwrap()), vec!["R^1", "R^1"]);
    }

    #[test]
    fn twisted_coefficients_on_the_circle() {
        let tw = twisted_circle_sheaf(Ring::Int);
        assert_eq!(invariant_list(&sheaf_cohomology(&tw).unwrap()), vec!["0", "R/2"]);
        let tw_q = twisted_circle_sheaf(Ring::Rat);
        assert_eq!(invariant_list(&sheaf_cohomology(&tw_q).unwrap()), vec!["0", "0"]);
    }

    #[test]
    fn subdivision_keeps_twisted_cohomology() {
        let tw = twisted_circle_sheaf(Ring::Int);
        let sd = tw.base.sd();
        let tw_sd = sd_sheaf(&tw, &sd).unwrap();
        assert_eq!(invariant_list(&sheaf_cohomology(&tw_sd).unwrap()), vec!["0", "R/2"]);
    }

    #[test]
    fn identity_pair_gives_constant_sheaf() {
        let circ = fixtures::circle();
        let p = pair(&circ, FaceSet::new(), &SimplicialMap::identity(&circ), 0);
        let f = relative_sheaf(&p, Ring::Int).unwrap();
        for s in &f.stalks {
            assert_eq!(s.invariants().to_string(), "R^1");
        }
        for rho in f.restrictions.values() {
            assert!(rho.is_iso());
        }
        assert_eq!(invariant_list(&sheaf_cohomology(&f).unwrap()), vec!["R^1", "R^1"]);
    }

    #[test]
    fn relative_pairs_over_the_point() {
        let circ = fixtures::circle();
        let v: FaceSet = [circ.face_id(&[0]).unwrap()].into_iter().collect();
        let p = over_point(&circ, v, 1);
        let f = relative_sheaf(&p, Ring::Int).unwrap();
        assert_eq!(f.stalks[0].invariants().to_string(), "R^1");

        let disk = fixtures::disk();
        let p = over_point(&disk, disk.skeleton(1), 2);
        let f = relative_sheaf(&p, Ring::Int).unwrap();
        assert_eq!(f.stalks[0].invariants().to_string(), "R^1");
    }

    #[test]
    fn type1_identity_and_vanishing() {
        let circ = fixtures::circle();
        let p = over_point(&circ, FaceSet::new(), 1);
        let id = type1_restriction(&SimplicialMap::identity(&circ), &p, &p, Ring::Int).unwrap();
        for (f, c) in id.components.iter().enumerate() {
            assert!(c.equal_to(&ModuleMap::identity(&id.src.stalks[f])));
        }

        let disk = fixtures::disk();
        let incl = SimplicialMap::new(circ.clone(), disk.clone(), vec![0, 1, 2]).unwrap();
        let p_circ = over_point(&circ, FaceSet::new(), 1);
        let p_disk = over_point(&disk, FaceSet::new(), 1);
        let m = type1_restriction(&incl, &p_circ, &p_disk, Ring::Int).unwrap();
        assert!(m.src.stalks[0].is_zero_module());
        assert!(m.components[0].is_zero_map());
    }

    #[test]
    fn type1_double_cover_is_multiplication_by_two() {
        let cover = fixtures::double_cover();
        let p6 = over_point(&cover.src, FaceSet::new(), 1);
        let p3 = over_point(&cover.dst, FaceSet::new(), 1);
        let m = type1_restriction(&cover, &p6, &p3, Ring::Int).unwrap();
        let c = &m.components[0];
        assert!(c.kernel().0.is_zero_module());
        assert_eq!(c.cokernel().0.invariants().to_string(), "R/2");
    }

    #[test]
    fn type1_composes_along_towers_of_covers() {
        let c12 = fixtures::circle_n(12);
        let c6 = fixtures::circle_n(6);
        let c3 = fixtures::circle_n(3);
        let g = SimplicialMap::new(c12.clone(), c6.clone(), (0..12).map(|i| i % 6).collect()).unwrap();
        let h = SimplicialMap::new(c6.clone(), c3.clone(), (0..6).map(|i| i % 3).collect()).unwrap();
        let p12 = over_point(&c12, FaceSet::new(), 1);
        let p6 = over_point(&c6, FaceSet::new(), 1);
        let p3 = over_point(&c3, FaceSet::new(), 1);
        let tg = type1_restriction(&g, &p12, &p6, Ring::Int).unwrap();
        let th = type1_restriction(&h, &p6, &p3, Ring::Int).unwrap();
        let tgh = type1_restriction(&g.then(&h).unwrap(), &p12, &p3, Ring::Int).unwrap();
        let composite = th.components[0].then(&tg.components[0]);
        assert!(composite.equal_to(&tgh.components[0]));
        assert_eq!(tgh.components[0].cokernel().0.invariants().to_string(), "R/4");
    }

    #[test]
    fn type2_connecting_for_the_disk() {
        let disk = fixtures::disk();
        let f = fixtures::to_point(&disk);
        let t2 = type2_connecting(
            &disk,
            &disk.skeleton(1),
            &FaceSet::new(),
            &f,
            1,
            StalkModel::Subdivided,
            Ring::Int,
        )
        .unwrap();
        assert_eq!(t2.low_pair.total, fixtures::circle());
        let c = &t2.delta.components[0];
        assert!(c.is_iso());
        assert_eq!(c.src.invariants().to_string(), "R^1");
        assert_eq!(c.dst.invariants().to_string(), "R^1");
    }

    #[test]
    fn type2_degenerate_and_additive_cases() {
        let disk = fixtures::disk();
        let f = fixtures::to_point(&disk);
        let y = disk.skeleton(1);
        // Z = Y collapses the low pair.
        let t2 = type2_connecting(&disk, &y, &y, &f, 1, StalkModel::Subdivided, Ring::Int).unwrap();
        assert!(t2.delta.components.iter().all(|c| c.is_zero_map()));
        assert!(t2.delta.src.stalks.iter().all(|s| s.is_zero_module()));

        let (two_disks, _, _) = disk.disjoint_union(&disk);
        let g = fixtures::to_point(&two_disks);
        let y2 = two_disks.skeleton(1);
        let t2 = type2_connecting(&two_disks, &y2, &FaceSet::new(), &g, 1, StalkModel::Subdivided, Ring::Int)
            .unwrap();
        let c = &t2.delta.components[0];
        assert!(c.is_iso());
        assert_eq!(c.src.invariants().to_string(), "R^2");

        assert!(matches!(
            type2_connecting(&disk, &FaceSet::new(), &y, &f, 1, StalkModel::Subdivided, Ring::Int),
            Err(Error::ChainNotNested(_))
        ));
    }

    #[test]
    fn triple_sequence_is_exact_stalkwise() {
        let disk = fixtures::disk();
        let f = fixtures::to_point(&disk);
        let y = disk.skeleton(1);
        let z = FaceSet::new();
        let incl_y = disk.extract(&y).unwrap().inclusion;
        for i in 0..2usize {
            let top = over_point(&disk, y.clone(), i);
            let mid = over_point(&disk, z.clone(), i);
            let low_total = fixtures::circle();
            let low = over_point(&low_total, z.clone(), i);
            // (X,Y) -> (X,Z) along the identity, (X,Z) -> (Y,Z) along the
            // inclusion, then the connecting map.
            let a = type1_restriction(&SimplicialMap::identity(&disk), &mid, &top, Ring::Int).unwrap();
            let b = type1_restriction(&incl_y, &low, &mid, Ring::Int).unwrap();
            let t2 =
                type2_connecting(&disk, &y, &z, &f, i, StalkModel::Subdivided, Ring::Int).unwrap();
            assert!(a.components[0].exact_with(&b.components[0]));
            assert!(b.components[0].exact_with(&t2.delta.components[0]));
        }
    }

    #[test]
    fn base_change_for_identity_and_vertex_probe() {
        let circ = fixtures::circle();
        let p = over_point(&circ, FaceSet::new(), 1);
        assert!(base_change_check(&SimplicialMap::identity(&fixtures::point()), &p, Ring::Int).unwrap());

        // Product pair over the circle, probed at a vertex: fibre is a circle.
        let (t2, pi1, _) = fixtures::torus();
        let pp = pair(&t2, FaceSet::new(), &pi1, 1);
        let probe = SimplicialMap::new(fixtures::point(), circ.clone(), vec![0]).unwrap();
        let report = base_change_report(&probe, &pp, Ring::Int).unwrap();
        assert!(report.holds);
        assert_eq!(report.pulled.total.n_faces(), 6);
        assert_eq!(report.pulled.total.top_dim(), 1);
        let fibre_sheaf = relative_sheaf(&report.pulled, Ring::Int).unwrap();
        assert_eq!(fibre_sheaf.stalks[0].invariants().to_string(), "R^1");
    }

    #[test]
    fn base_change_for_the_double_cover() {
        let cover = fixtures::double_cover();
        let p = pair(&cover.src, FaceSet::new(), &cover, 0);
        let probe = SimplicialMap::new(fixtures::point(), cover.dst.clone(), vec![0]).unwrap();
        let report = base_change_report(&probe, &p, Ring::Int).unwrap();
        assert!(report.holds);
        let fibre_sheaf = relative_sheaf(&report.pulled, Ring::Int).unwrap();
        assert_eq!(fibre_sheaf.stalks[0].invariants().to_string(), "R^2");
    }

    #[test]
    fn closed_star_model_fails_base_change_with_witness() {
        // Path l - c - r - s; the total complex is the closed star of c,
        // included; the probe sits at the far vertex s.
        let s4 = fixtures::path(4);
        let star_c = s4.extract(&s4.closed_star(s4.face_id(&[1]).unwrap())).unwrap();
        let p = SimplicialPair::new(
            star_c.complex.clone(),
            FaceSet::new(),
            star_c.inclusion.clone(),
            0,
        )
        .unwrap();
        let probe = SimplicialMap::new(fixtures::point(), s4.clone(), vec![3]).unwrap();

        let bad = p.clone().with_model(StalkModel::ClosedStar);
        let report = base_change_report(&probe, &bad, Ring::Int).unwrap();
        assert!(!report.holds);
        assert_eq!(report.witness, Some(0));

        let good = base_change_report(&probe, &p, Ring::Int).unwrap();
        assert!(good.holds);
    }

    #[test]
    fn product_pair_unit_and_torus_ranks() {
        let circ = fixtures::circle();
        let p = over_point(&circ, FaceSet::new(), 1);
        let unit = over_point(&fixtures::point(), FaceSet::new(), 0);
        // The base here is the point, so the unit is the point pair.
        let prod = product_pair(&p, &unit, Ring::Int).unwrap();
        let f = relative_sheaf(&prod.pair, Ring::Int).unwrap();
        assert_eq!(f.stalks[0].invariants().to_string(), "R^1");

        let q = over_point(&circ, FaceSet::new(), 1);
        let prod = product_pair(&p, &q, Ring::Rat).unwrap();
        assert_eq!(prod.pair.degree, 2);
        let (t2, _, _) = fixtures::torus();
        assert_eq!(prod.pair.total, t2);
        for (k, want) in ["R^1", "R^2", "R^1"].iter().enumerate() {
            let pk = over_point(&t2, FaceSet::new(), k);
            let f = relative_sheaf(&pk, Ring::Rat).unwrap();
            assert_eq!(f.stalks[0].invariants().to_string(), *want);
        }
    }

    #[test]
    fn kunneth_product_of_pointed_circles() {
        let circ = fixtures::circle();
        let v: FaceSet = [circ.face_id(&[0]).unwrap()].into_iter().collect();
        let p = over_point(&circ, v.clone(), 1);
        let q = over_point(&circ, v, 1);
        let prod = product_pair(&p, &q, Ring::Int).unwrap();
        assert_eq!(prod.pair.degree, 2);
        let f = relative_sheaf(&prod.pair, Ring::Int).unwrap();
        assert_eq!(f.stalks[0].invariants().to_string(), "R^1");
    }

    #[test]
    fn flatness_obstruction_over_the_integers() {
        let rp2 = fixtures::projective_plane();
        let p = over_point(&rp2, FaceSet::new(), 2);
        let q = over_point(&fixtures::point(), FaceSet::new(), 0);
        assert!(matches!(product_pair(&p, &q, Ring::Int), Err(Error::FlatnessRequired(_))));
        assert!(product_pair(&p, &q, Ring::Rat).is_ok());
    }

    #[test]
    fn adapted_check_on_fixtures() {
        let circ = fixtures::circle();
        let p = pair(&circ, FaceSet::new(), &SimplicialMap::identity(&circ), 0);
        let skel = Filtration::skeletal(&circ);
        assert!(adapted_check(&p, &skel, Ring::Int).unwrap());
        let coarse = Filtration::new(&circ, vec![circ.full_set()]).unwrap();
        assert!(!adapted_check(&p, &coarse, Ring::Int).unwrap());

        let pt = fixtures::point();
        let pp = pair(&pt, FaceSet::new(), &SimplicialMap::identity(&pt), 0);
        assert!(adapted_check(&pp, &Filtration::skeletal(&pt), Ring::Int).unwrap());
    }

    #[test]
    fn pushforward_oracle_on_fibrations() {
        let circ = fixtures::circle();
        let z = FpModule::free(1, Ring::Int);
        let f = CellularSheaf::constant(&circ, &z);
        let down = fixtures::to_point(&circ);
        let r0 = pushforward_oracle(&down, &f, 0).unwrap();
        let r1 = pushforward_oracle(&down, &f, 1).unwrap();
        assert_eq!(r0.stalks[0].invariants().to_string(), "R^1");
        assert_eq!(r1.stalks[0].invariants().to_string(), "R^1");

        let (t2, pi1, _) = fixtures::torus();
        let g = CellularSheaf::constant(&t2, &z);
        let r1 = pushforward_oracle(&pi1, &g, 1).unwrap();
        for s in &r1.stalks {
            assert_eq!(s.invariants().to_string(), "R^1");
        }
        for rho in r1.restrictions.values() {
            assert!(rho.is_iso());
        }
    }

    #[test]
    fn sheaf_category_kernels_and_cokernels() {
        let circ = fixtures::circle();
        let cat = CellSheafCategory::new(circ.clone(), Ring::Int);
        let z = FpModule::free(1, Ring::Int);
        let f = CellularSheaf::constant(&circ, &z);
        let two = cat.scale(&Scalar::from_integer(2.into()), &cat.identity(&f));
        let (k, _) = cat.kernel(&two);
        assert!(cat.is_zero_object(&k));
        let (c, proj) = cat.cokernel(&two);
        assert_eq!(invariant_list(&sheaf_cohomology(&c).unwrap()), vec!["R/2", "R/2"]);
        let lifted = cat.cokernel_descend(&two, &proj, &cat.zero_mor(&f, &cat.zero_object())).unwrap();
        assert!(cat.is_zero_mor(&lifted));
        assert!(CellSheafMorphism::new(proj.src.clone(), proj.dst.clone(), proj.components.clone()).is_ok());
    }
}
