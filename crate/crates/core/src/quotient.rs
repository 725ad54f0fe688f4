//! The universal abelian category on a representation: the free abelian
//! category divided by the objects the representation kills.
//!
//! Morphisms are spans `(s: M' -> M, t: M' -> N)` whose left leg realizes to
//! an isomorphism; plain morphisms embed with `s = id`.  Equality, and every
//! precondition involving vanishing, is decided through the realization,
//! which is faithful and exact on this quotient.  Composition and the
//! universal maps are computed by pullback and pushout in the free abelian
//! category, which realize to pullbacks and pushouts because realization is
//! exact.

use crate::category::AbelianCategory;
use crate::freyd::{AdelmanCategory, AdelmanMorphism, AdelmanObject, Representation};
use crate::quiver::QuiverMorphism;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuotientObject {
    pub carrier: AdelmanObject,
}

impl QuotientObject {
    pub fn new(carrier: AdelmanObject) -> Self {
        QuotientObject { carrier }
    }

    pub fn canonical(v: usize) -> Self {
        QuotientObject { carrier: AdelmanObject::canonical(v) }
    }

    pub fn zero() -> Self {
        QuotientObject { carrier: AdelmanObject::zero() }
    }

    pub fn direct_sum(&self, other: &QuotientObject) -> QuotientObject {
        QuotientObject { carrier: self.carrier.direct_sum(&other.carrier) }
    }
}

/// Span morphism in the quotient; the left leg realizes invertibly.
#[derive(Clone, Debug)]
pub struct QuotientMorphism {
    pub src: QuotientObject,
    pub dst: QuotientObject,
    pub s: AdelmanMorphism,
    pub t: AdelmanMorphism,
}

/// The universal category bundles the syntactic engine with the
/// representation that defines the quotient.
pub struct UniversalCategory<C: AbelianCategory> {
    pub adelman: AdelmanCategory,
    pub rep: Representation<C>,
}

impl<C: AbelianCategory> UniversalCategory<C> {
    pub fn new(rep: Representation<C>) -> Result<Self> {
        let adelman = AdelmanCategory::new(rep.quiver.clone(), rep.cat.ring())?;
        Ok(UniversalCategory { adelman, rep })
    }

    pub fn realize_obj(&self, x: &QuotientObject) -> C::Obj {
        self.rep.realize_object(&x.carrier).h
    }

    pub fn is_zero_object(&self, x: &QuotientObject) -> bool {
        self.rep.cat.is_zero_object(&self.realize_obj(x))
    }

    /// Wrap a plain morphism of carriers as a quotient morphism.
    pub fn plain(&self, f: AdelmanMorphism) -> QuotientMorphism {
        QuotientMorphism {
            src: QuotientObject::new(f.src.clone()),
            dst: QuotientObject::new(f.dst.clone()),
            s: self.adelman.identity(&f.src),
            t: f,
        }
    }

    /// Construct a span, verifying the left leg realizes invertibly.
    pub fn span(&self, s: AdelmanMorphism, t: AdelmanMorphism) -> Result<QuotientMorphism> {
        if s.src != t.src {
            return Err(Error::Invalid("span legs must share a source".into()));
        }
        let rs = self.rep.realize_morphism(&s);
        if !self.rep.cat.is_iso(&rs) {
            return Err(Error::NotInvertible(
                "span leg does not realize to an isomorphism".into(),
            ));
        }
        Ok(QuotientMorphism {
            src: QuotientObject::new(s.dst.clone()),
            dst: QuotientObject::new(t.dst.clone()),
            s,
            t,
        })
    }

    /// Invert a morphism whose realization is an isomorphism.
    pub fn invert(&self, s: &AdelmanMorphism) -> Result<QuotientMorphism> {
        self.span(s.clone(), self.adelman.identity(&s.src))
    }

    pub fn realize_mor(&self, f: &QuotientMorphism) -> C::Mor {
        let rs = self.rep.realize_morphism(&f.s);
        let rt = self.rep.realize_morphism(&f.t);
        let rs_inv = self
            .rep
            .cat
            .inverse(&rs)
            .expect("span left leg realizes invertibly");
        self.rep.cat.compose(&rs_inv, &rt)
    }

    pub fn equal(&self, f: &QuotientMorphism, g: &QuotientMorphism) -> bool {
        assert_eq!(f.src, g.src, "equality needs equal sources");
        assert_eq!(f.dst, g.dst, "equality needs equal targets");
        self.rep.cat.equal(&self.realize_mor(f), &self.realize_mor(g))
    }

    pub fn is_zero_mor(&self, f: &QuotientMorphism) -> bool {
        self.rep.cat.is_zero_mor(&self.realize_mor(f))
    }

    pub fn identity(&self, x: &QuotientObject) -> QuotientMorphism {
        self.plain(self.adelman.identity(&x.carrier))
    }

    pub fn zero_mor(&self, x: &QuotientObject, y: &QuotientObject) -> QuotientMorphism {
        self.plain(self.adelman.zero_mor(&x.carrier, &y.carrier))
    }

    /// Composition in diagram order, by pullback of the middle cospan.
    pub fn compose(&self, f: &QuotientMorphism, g: &QuotientMorphism) -> QuotientMorphism {
        assert_eq!(f.dst, g.src, "composable pair required");
        // Fast path: plain second factor.
        if is_identity_shape(&g.s) {
            return QuotientMorphism {
                src: f.src.clone(),
                dst: g.dst.clone(),
                s: f.s.clone(),
                t: self.adelman.compose(&f.t, &g.t),
            };
        }
        let (_, p, r) = self
            .adelman
            .pullback(&f.t, &g.s)
            .expect("pullback exists over an acyclic quiver");
        let s = self.adelman.compose(&p, &f.s);
        let t = self.adelman.compose(&r, &g.t);
        let out = QuotientMorphism { src: f.src.clone(), dst: g.dst.clone(), s, t };
        debug_assert!(self.rep.cat.is_iso(&self.rep.realize_morphism(&out.s)));
        out
    }

    pub fn add(&self, f: &QuotientMorphism, g: &QuotientMorphism) -> QuotientMorphism {
        assert_eq!(f.src, g.src);
        assert_eq!(f.dst, g.dst);
        if is_identity_shape(&f.s) && is_identity_shape(&g.s) {
            return QuotientMorphism {
                src: f.src.clone(),
                dst: f.dst.clone(),
                s: f.s.clone(),
                t: self.adelman.add(&f.t, &g.t),
            };
        }
        let (_, p, r) = self
            .adelman
            .pullback(&f.s, &g.s)
            .expect("pullback exists over an acyclic quiver");
        let s = self.adelman.compose(&p, &f.s);
        let t = self.adelman.add(
            &self.adelman.compose(&p, &f.t),
            &self.adelman.compose(&r, &g.t),
        );
        QuotientMorphism { src: f.src.clone(), dst: f.dst.clone(), s, t }
    }

    pub fn neg(&self, f: &QuotientMorphism) -> QuotientMorphism {
        QuotientMorphism {
            src: f.src.clone(),
            dst: f.dst.clone(),
            s: f.s.clone(),
            t: self.adelman.neg(&f.t),
        }
    }

    pub fn scale(&self, c: &crate::matrix::Scalar, f: &QuotientMorphism) -> QuotientMorphism {
        QuotientMorphism {
            src: f.src.clone(),
            dst: f.dst.clone(),
            s: f.s.clone(),
            t: AdelmanMorphism {
                src: f.t.src.clone(),
                dst: f.t.dst.clone(),
                middle: f.t.middle.scale(c),
            },
        }
    }

    /// Kernel: computed on the right leg in the free abelian category and
    /// embedded through the left leg.
    pub fn kernel(&self, f: &QuotientMorphism) -> (QuotientObject, QuotientMorphism) {
        let (k, emb_t) = self
            .adelman
            .kernel(&f.t)
            .expect("kernel exists over an acyclic quiver");
        let emb = self.plain(self.adelman.compose(&emb_t, &f.s));
        (QuotientObject::new(k), emb)
    }

    /// Cokernel: the right leg's cokernel, projected from the target.
    pub fn cokernel(&self, f: &QuotientMorphism) -> (QuotientObject, QuotientMorphism) {
        let (c, proj_t) = self
            .adelman
            .cokernel(&f.t)
            .expect("cokernel exists over an acyclic quiver");
        (QuotientObject::new(c), self.plain(proj_t))
    }

    /// Factor `u: T -> src(f)` through the kernel of `f`; requires
    /// `u.then(f)` to vanish in the quotient.
    pub fn kernel_lift(
        &self,
        f: &QuotientMorphism,
        kobj: &QuotientObject,
        emb: &QuotientMorphism,
        u: &QuotientMorphism,
    ) -> Result<QuotientMorphism> {
        let comp = self.compose(u, f);
        if !self.is_zero_mor(&comp) {
            return Err(Error::NoSolution("morphism does not kill f in the quotient".into()));
        }
        // Pull the right leg of u back against the kernel embedding.
        let (_, a, b) = self.adelman.pullback(&u.t, &emb.t)?;
        let lift = self.span(self.adelman.compose(&a, &u.s), b)?;
        debug_assert!({
            let back = self.compose(&lift, emb);
            self.equal(&back, u)
        });
        let _ = kobj;
        Ok(lift)
    }

    /// Factor `u: dst(f) -> T` through the cokernel of `f`; requires
    /// `f.then(u)` to vanish in the quotient.
    pub fn cokernel_descend(
        &self,
        f: &QuotientMorphism,
        cobj: &QuotientObject,
        proj: &QuotientMorphism,
        u: &QuotientMorphism,
    ) -> Result<QuotientMorphism> {
        let comp = self.compose(f, u);
        if !self.is_zero_mor(&comp) {
            return Err(Error::NoSolution("morphism does not kill f in the quotient".into()));
        }
        // Push u's right leg out against the projected left leg, then turn
        // the resulting cospan into a span by pullback.
        let g = self.adelman.compose(&u.s, &proj.t);
        let (_, i_t, i_c) = self.adelman.pushout(&u.t, &g)?;
        let (_, a, b) = self.adelman.pullback(&i_c, &i_t)?;
        let desc = self.span(a, b)?;
        debug_assert!({
            let back = self.compose(proj, &desc);
            self.equal(&back, u)
        });
        let _ = cobj;
        Ok(desc)
    }

    pub fn is_iso(&self, f: &QuotientMorphism) -> bool {
        self.rep.cat.is_iso(&self.realize_mor(f))
    }

    /// Inverse of a quotient isomorphism: swap the span legs after
    /// composing out the existing left leg.
    pub fn inverse(&self, f: &QuotientMorphism) -> Result<QuotientMorphism> {
        if !self.is_iso(f) {
            return Err(Error::NotInvertible("not an isomorphism in the quotient".into()));
        }
        self.span(f.t.clone(), f.s.clone())
    }

    /// Homology at the middle of `prev.then(next) ~ 0`: kernel of `next`
    /// divided by the image of `prev`.
    pub fn homology_at(
        &self,
        prev: &QuotientMorphism,
        next: &QuotientMorphism,
    ) -> Result<(QuotientObject, QuotientMorphism)> {
        assert_eq!(prev.dst, next.src);
        let (k, emb) = self.kernel(next);
        let u = self.kernel_lift(next, &k, &emb, prev)?;
        let (h, hproj) = self.cokernel(&u);
        // Projection from the kernel object onto the homology.
        Ok((h, hproj))
    }

    /// Direct sum injection for quotient objects.
    pub fn injection(&self, parts: &[QuotientObject], k: usize) -> QuotientMorphism {
        let carriers: Vec<AdelmanObject> = parts.iter().map(|p| p.carrier.clone()).collect();
        self.plain(self.adelman.injection(&carriers, k))
    }

    pub fn projection(&self, parts: &[QuotientObject], k: usize) -> QuotientMorphism {
        let carriers: Vec<AdelmanObject> = parts.iter().map(|p| p.carrier.clone()).collect();
        self.plain(self.adelman.projection(&carriers, k))
    }

    pub fn sum_object(&self, parts: &[QuotientObject]) -> QuotientObject {
        parts
            .iter()
            .fold(QuotientObject::zero(), |acc, p| acc.direct_sum(p))
    }
}

fn is_identity_shape(f: &AdelmanMorphism) -> bool {
    f.src == f.dst && {
        let id = crate::quiver::AdditiveMorphism::identity(f.src.middle());
        f.middle == id
    }
}

/// Exact functor between universal categories induced by a quiver morphism
/// under which the representations agree.
pub struct InducedFunctor<'a, C: AbelianCategory> {
    pub g: QuiverMorphism,
    pub src: &'a UniversalCategory<C>,
    pub dst: &'a UniversalCategory<C>,
}

impl<'a, C: AbelianCategory> InducedFunctor<'a, C> {
    /// Checks 2-commutativity on vertices and edges by realization equality.
    pub fn new(
        g: QuiverMorphism,
        src: &'a UniversalCategory<C>,
        dst: &'a UniversalCategory<C>,
    ) -> Result<Self> {
        for (v, obj) in src.rep.objects.iter().enumerate() {
            if obj != &dst.rep.objects[g.vertex_map[v]] {
                return Err(Error::SquareDoesNotCommute(format!(
                    "vertex {} realizes differently through the quiver morphism",
                    src.rep.quiver.vertices[v]
                )));
            }
        }
        for (e, mor) in src.rep.edges.iter().enumerate() {
            if !src.rep.cat.equal(mor, &dst.rep.edges[g.edge_map[e]]) {
                return Err(Error::SquareDoesNotCommute(format!(
                    "edge {} realizes differently through the quiver morphism",
                    src.rep.quiver.edges[e].label
                )));
            }
        }
        Ok(InducedFunctor { g, src, dst })
    }

    pub fn object(&self, x: &QuotientObject) -> QuotientObject {
        QuotientObject::new(x.carrier.map_along(&self.g))
    }

    pub fn morphism(&self, f: &QuotientMorphism) -> Result<QuotientMorphism> {
        self.dst
            .span(f.s.map_along(&self.g), f.t.map_along(&self.g))
    }
}

/// A directed family of full subquivers, used to present the category as a
/// filtered union of stages.
#[derive(Clone, Debug)]
pub struct ColimitFamily {
    /// Each stage is a sorted vertex set of the ambient quiver.
    pub stages: Vec<Vec<usize>>,
}

impl ColimitFamily {
    pub fn new(mut stages: Vec<Vec<usize>>) -> Result<Self> {
        for s in &mut stages {
            s.sort_unstable();
            s.dedup();
        }
        let fam = ColimitFamily { stages };
        if !fam.is_directed() {
            return Err(Error::Invalid("stage family is not directed under inclusion".into()));
        }
        Ok(fam)
    }

    fn is_directed(&self) -> bool {
        let contains = |sup: &Vec<usize>, sub: &Vec<usize>| sub.iter().all(|v| sup.contains(v));
        self.stages.iter().enumerate().all(|(i, a)| {
            self.stages.iter().enumerate().all(|(j, b)| {
                i == j || self.stages.iter().any(|c| contains(c, a) && contains(c, b))
            })
        })
    }

    /// First stage containing every vertex in `support`.
    pub fn stage_for(&self, support: &[usize]) -> Result<usize> {
        self.stages
            .iter()
            .position(|s| support.iter().all(|v| s.contains(v)))
            .ok_or_else(|| {
                Error::NoCommonStage(format!("no stage contains the support {support:?}"))
            })
    }
}

/// Vertices an object mentions.
pub fn object_support(x: &AdelmanObject) -> Vec<usize> {
    let mut s: Vec<usize> = x
        .a1
        .src
        .0
        .iter()
        .chain(&x.a1.dst.0)
        .chain(&x.a0.dst.0)
        .copied()
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Restriction of a universal category to a full subquiver stage; returns
/// the restricted category and the inclusion back into the ambient quiver.
pub fn restrict_to_stage<C: AbelianCategory + Clone>(
    ambient: &UniversalCategory<C>,
    stage: &[usize],
) -> Result<(UniversalCategory<C>, QuiverMorphism)> {
    let q = &ambient.rep.quiver;
    let vertices: Vec<String> = stage.iter().map(|&v| q.vertices[v].clone()).collect();
    let mut edge_map = Vec::new();
    let mut edges = Vec::new();
    for (ei, e) in q.edges.iter().enumerate() {
        if let (Some(s), Some(d)) = (
            stage.iter().position(|&v| v == e.src),
            stage.iter().position(|&v| v == e.dst),
        ) {
            edges.push((e.label.clone(), s, d));
            edge_map.push(ei);
        }
    }
    let sub = crate::quiver::Quiver::new(vertices, edges)?;
    let objects: Vec<C::Obj> = stage.iter().map(|&v| ambient.rep.objects[v].clone()).collect();
    let mors: Vec<C::Mor> = edge_map.iter().map(|&e| ambient.rep.edges[e].clone()).collect();
    let rep = Representation::new(sub.clone(), ambient.rep.cat.clone(), objects, mors)?;
    let inclusion = QuiverMorphism::new(sub, q.clone(), stage.to_vec(), edge_map)?;
    Ok((UniversalCategory::new(rep)?, inclusion))
}
