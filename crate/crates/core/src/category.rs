//! Operation dictionary for a computable abelian category.
//!
//! The free-abelian-category engine and the quotient layer are generic over
//! this trait; the two implementations are finitely presented modules (here)
//! and cellular sheaves (in [`crate::sheaf`]).  Abelian axioms are tested,
//! not assumed.

use crate::matrix::{Matrix, Ring, Scalar};
use crate::module::{FpModule, ModuleMap};
use crate::Result;

pub trait AbelianCategory {
    type Obj: Clone + PartialEq + std::fmt::Debug;
    type Mor: Clone + std::fmt::Debug;

    fn ring(&self) -> Ring;
    fn src(&self, f: &Self::Mor) -> Self::Obj;
    fn dst(&self, f: &Self::Mor) -> Self::Obj;
    fn identity(&self, x: &Self::Obj) -> Self::Mor;
    fn zero_object(&self) -> Self::Obj;
    fn zero_mor(&self, x: &Self::Obj, y: &Self::Obj) -> Self::Mor;
    fn is_zero_object(&self, x: &Self::Obj) -> bool;
    fn is_zero_mor(&self, f: &Self::Mor) -> bool;
    /// Composition in diagram order: first `f`, then `g`.
    fn compose(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor;
    fn add(&self, f: &Self::Mor, g: &Self::Mor) -> Self::Mor;
    fn neg(&self, f: &Self::Mor) -> Self::Mor;
    fn scale(&self, c: &Scalar, f: &Self::Mor) -> Self::Mor;
    fn equal(&self, f: &Self::Mor, g: &Self::Mor) -> bool;

    fn sum_object(&self, parts: &[Self::Obj]) -> Self::Obj;
    /// Injection of `parts[k]` into the direct sum.
    fn injection(&self, parts: &[Self::Obj], k: usize) -> Self::Mor;
    /// Projection of the direct sum onto `parts[k]`.
    fn projection(&self, parts: &[Self::Obj], k: usize) -> Self::Mor;

    /// Kernel object plus embedding.
    fn kernel(&self, f: &Self::Mor) -> (Self::Obj, Self::Mor);
    /// Cokernel object plus projection.
    fn cokernel(&self, f: &Self::Mor) -> (Self::Obj, Self::Mor);
    /// Factor `u` through the kernel embedding `emb` of `f`; requires
    /// `u.then(f) = 0`.
    fn kernel_lift(&self, f: &Self::Mor, emb: &Self::Mor, u: &Self::Mor) -> Result<Self::Mor>;
    /// Factor `u` through the cokernel projection `proj` of `f`; requires
    /// `f.then(u) = 0`.
    fn cokernel_descend(&self, f: &Self::Mor, proj: &Self::Mor, u: &Self::Mor)
        -> Result<Self::Mor>;
    fn is_iso(&self, f: &Self::Mor) -> bool;
    fn inverse(&self, f: &Self::Mor) -> Result<Self::Mor>;

    /// Block matrix morphism `sum(srcs) -> sum(dsts)` with `entry(i, j):
    /// srcs[j] -> dsts[i]`.
    fn block(
        &self,
        srcs: &[Self::Obj],
        dsts: &[Self::Obj],
        entry: &mut dyn FnMut(usize, usize) -> Self::Mor,
    ) -> Self::Mor {
        let src_sum = self.sum_object(srcs);
        let dst_sum = self.sum_object(dsts);
        let mut acc = self.zero_mor(&src_sum, &dst_sum);
        for (j, _) in srcs.iter().enumerate() {
            let pj = self.projection(srcs, j);
            for (i, _) in dsts.iter().enumerate() {
                let ii = self.injection(dsts, i);
                let e = entry(i, j);
                let term = self.compose(&self.compose(&pj, &e), &ii);
                acc = self.add(&acc, &term);
            }
        }
        acc
    }
}

/// Finitely presented modules over Z or Q as a computable abelian category.
#[derive(Clone, Copy, Debug)]
pub struct ModuleCategory {
    pub ring: Ring,
}

impl ModuleCategory {
    pub fn new(ring: Ring) -> Self {
        ModuleCategory { ring }
    }
}

impl AbelianCategory for ModuleCategory {
    type Obj = FpModule;
    type Mor = ModuleMap;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn src(&self, f: &ModuleMap) -> FpModule {
        f.src.clone()
    }

    fn dst(&self, f: &ModuleMap) -> FpModule {
        f.dst.clone()
    }

    fn identity(&self, x: &FpModule) -> ModuleMap {
        ModuleMap::identity(x)
    }

    fn zero_object(&self) -> FpModule {
        FpModule::zero_module(self.ring)
    }

    fn zero_mor(&self, x: &FpModule, y: &FpModule) -> ModuleMap {
        ModuleMap::zero_map(x, y)
    }

    fn is_zero_object(&self, x: &FpModule) -> bool {
        x.is_zero_module()
    }

    fn is_zero_mor(&self, f: &ModuleMap) -> bool {
        f.is_zero_map()
    }

    fn compose(&self, f: &ModuleMap, g: &ModuleMap) -> ModuleMap {
        f.then(g)
    }

    fn add(&self, f: &ModuleMap, g: &ModuleMap) -> ModuleMap {
        f.add(g)
    }

    fn neg(&self, f: &ModuleMap) -> ModuleMap {
        f.neg()
    }

    fn scale(&self, c: &Scalar, f: &ModuleMap) -> ModuleMap {
        f.scale(c)
    }

    fn equal(&self, f: &ModuleMap, g: &ModuleMap) -> bool {
        f.equal_to(g)
    }

    fn sum_object(&self, parts: &[FpModule]) -> FpModule {
        parts
            .iter()
            .fold(FpModule::zero_module(self.ring), |acc, m| acc.direct_sum(m))
    }

    fn injection(&self, parts: &[FpModule], k: usize) -> ModuleMap {
        let sum = self.sum_object(parts);
        let offset: usize = parts[..k].iter().map(|m| m.generators()).sum();
        let mut mat = Matrix::zero(sum.generators(), parts[k].generators(), self.ring);
        for j in 0..parts[k].generators() {
            mat.set(offset + j, j, Scalar::from_integer(1.into()));
        }
        ModuleMap::new_unchecked(parts[k].clone(), sum, mat)
    }

    fn projection(&self, parts: &[FpModule], k: usize) -> ModuleMap {
        let sum = self.sum_object(parts);
        let offset: usize = parts[..k].iter().map(|m| m.generators()).sum();
        let mut mat = Matrix::zero(parts[k].generators(), sum.generators(), self.ring);
        for j in 0..parts[k].generators() {
            mat.set(j, offset + j, Scalar::from_integer(1.into()));
        }
        ModuleMap::new_unchecked(sum, parts[k].clone(), mat)
    }

    fn kernel(&self, f: &ModuleMap) -> (FpModule, ModuleMap) {
        f.kernel()
    }

    fn cokernel(&self, f: &ModuleMap) -> (FpModule, ModuleMap) {
        f.cokernel()
    }

    fn kernel_lift(&self, f: &ModuleMap, emb: &ModuleMap, u: &ModuleMap) -> Result<ModuleMap> {
        f.kernel_lift(&emb.src, emb, u)
    }

    fn cokernel_descend(&self, f: &ModuleMap, proj: &ModuleMap, u: &ModuleMap) -> Result<ModuleMap> {
        f.cokernel_descend(&proj.dst, u)
    }

    fn is_iso(&self, f: &ModuleMap) -> bool {
        f.is_iso()
    }

    fn inverse(&self, f: &ModuleMap) -> Result<ModuleMap> {
        f.inverse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_assembles_matrices() {
        let cat = ModuleCategory::new(Ring::Int);
        let z = FpModule::free(1, Ring::Int);
        let parts = vec![z.clone(), z.clone()];
        // Block [[1, 2], [3, 4]] from entries.
        let vals = [[1i64, 2], [3, 4]];
        let m = cat.block(&parts, &parts, &mut |i, j| {
            ModuleMap::new_unchecked(z.clone(), z.clone(), Matrix::from_i64(Ring::Int, &[&[vals[i][j]]]))
        });
        assert_eq!(m.mat, Matrix::from_i64(Ring::Int, &[&[1, 2], &[3, 4]]));
    }

    #[test]
    fn injections_projections_are_biproduct() {
        let cat = ModuleCategory::new(Ring::Int);
        let a = FpModule::cyclic(2, Ring::Int);
        let b = FpModule::free(2, Ring::Int);
        let parts = vec![a.clone(), b.clone()];
        let sum = cat.sum_object(&parts);
        // proj_k after inj_k is the identity; mixed pairs vanish.
        for k in 0..2 {
            let i = cat.injection(&parts, k);
            let p = cat.projection(&parts, k);
            assert!(cat.equal(&cat.compose(&i, &p), &cat.identity(&parts[k])));
        }
        let i0 = cat.injection(&parts, 0);
        let p1 = cat.projection(&parts, 1);
        assert!(cat.is_zero_mor(&cat.compose(&i0, &p1)));
        // Sum of inj_k . proj_k is the identity of the sum.
        let mut acc = cat.zero_mor(&sum, &sum);
        for k in 0..2 {
            let i = cat.injection(&parts, k);
            let p = cat.projection(&parts, k);
            acc = cat.add(&acc, &cat.compose(&p, &i));
        }
        assert!(cat.equal(&acc, &cat.identity(&sum)));
    }
}
