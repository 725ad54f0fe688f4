//! Finitely presented modules over Z or Q and the abelian-category
//! operations on them.
//!
//! A module is presented by a relations matrix whose rows are relations and
//! whose columns index generators.  Maps are generator-coordinate matrices in
//! column convention: `mat` has one column per source generator, one row per
//! target generator.  All kernels, cokernels, lifts, and descents are exact
//! over the tagged ring; over `Int` integer saturation of [`nullspace`] makes
//! the kernel presentations complete.

use num_bigint::BigInt;
use num_traits::One;

use crate::matrix::{nullspace, smith_normal_form, solve_right, Matrix, Ring, Scalar};
use crate::{Error, Result};

/// Finitely presented module: cokernel of `relations^T` acting on the free
/// module on `generators` generators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FpModule {
    pub ring: Ring,
    /// Rows are relations, columns index generators.
    pub relations: Matrix,
}

/// Isomorphism invariants: free rank plus the nontrivial torsion chain.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModuleInvariants {
    pub free_rank: usize,
    /// Invariant factors greater than one, each dividing the next.  Always
    /// empty over `Rat`.
    pub torsion: Vec<BigInt>,
}

/// Invariant strings of a graded list of modules, for frozen comparisons.
pub fn invariant_list(ms: &[FpModule]) -> Vec<String> {
    ms.iter().map(|m| m.invariants().to_string()).collect()
}

impl std::fmt::Display for ModuleInvariants {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.free_rank > 0 {
            parts.push(format!("R^{}", self.free_rank));
        }
        for t in &self.torsion {
            parts.push(format!("R/{}", t));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl FpModule {
    pub fn new(ring: Ring, relations: Matrix) -> Self {
        assert_eq!(relations.ring, ring);
        FpModule { ring, relations }
    }

    pub fn free(n: usize, ring: Ring) -> Self {
        FpModule { ring, relations: Matrix::zero(0, n, ring) }
    }

    pub fn zero_module(ring: Ring) -> Self {
        FpModule::free(0, ring)
    }

    /// Cyclic module R/(n).
    pub fn cyclic(n: i64, ring: Ring) -> Self {
        FpModule { ring, relations: Matrix::from_i64(ring, &[&[n]]) }
    }

    pub fn generators(&self) -> usize {
        self.relations.cols
    }

    /// True when every generator lies in the relation span.
    pub fn is_zero_module(&self) -> bool {
        if self.generators() == 0 {
            return true;
        }
        let id = Matrix::identity(self.generators(), self.ring);
        solve_right(&self.relations.transpose(), &id).is_ok()
    }

    pub fn invariants(&self) -> ModuleInvariants {
        let snf = smith_normal_form(&self.relations);
        let diag = snf.diagonal();
        let free_rank = self.generators() - diag.len();
        let torsion = diag
            .iter()
            .filter(|d| !d.numer().is_one())
            .map(|d| d.numer().clone())
            .collect();
        ModuleInvariants { free_rank, torsion }
    }

    pub fn direct_sum(&self, other: &FpModule) -> FpModule {
        assert_eq!(self.ring, other.ring);
        FpModule { ring: self.ring, relations: self.relations.block_diag(&other.relations) }
    }

    /// Extension of scalars to the rationals.
    pub fn to_rationals(&self) -> FpModule {
        FpModule { ring: Ring::Rat, relations: self.relations.with_ring(Ring::Rat) }
    }

    /// True when `v` (a generator-coordinate column) represents zero.
    pub fn element_is_zero(&self, v: &Matrix) -> bool {
        assert_eq!(v.cols, 1);
        assert_eq!(v.rows, self.generators());
        solve_right(&self.relations.transpose(), v).is_ok()
    }
}

/// Map of finitely presented modules in generator coordinates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModuleMap {
    pub src: FpModule,
    pub dst: FpModule,
    /// dst-generators x src-generators.
    pub mat: Matrix,
}

impl ModuleMap {
    /// Checked constructor: verifies shapes and that every source relation
    /// maps into the target relation span.
    pub fn new(src: FpModule, dst: FpModule, mat: Matrix) -> Result<Self> {
        if mat.rows != dst.generators() || mat.cols != src.generators() {
            return Err(Error::Dimension(format!(
                "map matrix {}x{} does not fit {} -> {} generators",
                mat.rows,
                mat.cols,
                src.generators(),
                dst.generators()
            )));
        }
        if mat.ring != src.ring || src.ring != dst.ring {
            return Err(Error::Ring("map and modules must share one ring".into()));
        }
        let m = ModuleMap { src, dst, mat };
        if !m.respects_relations() {
            return Err(Error::Invalid("relations are not preserved".into()));
        }
        Ok(m)
    }

    /// Constructor for internal call sites that guarantee well-definedness.
    pub fn new_unchecked(src: FpModule, dst: FpModule, mat: Matrix) -> Self {
        let m = ModuleMap { src, dst, mat };
        debug_assert!(m.respects_relations(), "map does not respect relations");
        m
    }

    fn respects_relations(&self) -> bool {
        if self.src.relations.rows == 0 {
            return true;
        }
        let image_of_relations = self.mat.mul(&self.src.relations.transpose());
        solve_right(&self.dst.relations.transpose(), &image_of_relations).is_ok()
    }

    pub fn identity(m: &FpModule) -> Self {
        let mat = Matrix::identity(m.generators(), m.ring);
        ModuleMap { src: m.clone(), dst: m.clone(), mat }
    }

    pub fn zero_map(src: &FpModule, dst: &FpModule) -> Self {
        assert_eq!(src.ring, dst.ring);
        let mat = Matrix::zero(dst.generators(), src.generators(), src.ring);
        ModuleMap { src: src.clone(), dst: dst.clone(), mat }
    }

    /// Composition in diagram order: first `self`, then `g`.
    pub fn then(&self, g: &ModuleMap) -> ModuleMap {
        assert_eq!(
            self.dst.relations, g.src.relations,
            "composition requires matching presentations"
        );
        ModuleMap {
            src: self.src.clone(),
            dst: g.dst.clone(),
            mat: g.mat.mul(&self.mat),
        }
    }

    pub fn add(&self, other: &ModuleMap) -> ModuleMap {
        assert_eq!(self.src.relations, other.src.relations);
        assert_eq!(self.dst.relations, other.dst.relations);
        ModuleMap { src: self.src.clone(), dst: self.dst.clone(), mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &ModuleMap) -> ModuleMap {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ModuleMap {
        ModuleMap { src: self.src.clone(), dst: self.dst.clone(), mat: self.mat.neg() }
    }

    pub fn scale(&self, c: &Scalar) -> ModuleMap {
        ModuleMap { src: self.src.clone(), dst: self.dst.clone(), mat: self.mat.scale(c) }
    }

    /// Equality as maps of modules, not of matrices.
    pub fn equal_to(&self, other: &ModuleMap) -> bool {
        assert_eq!(self.src.relations, other.src.relations);
        assert_eq!(self.dst.relations, other.dst.relations);
        let diff = self.mat.sub(&other.mat);
        if diff.is_zero() {
            return true;
        }
        solve_right(&self.dst.relations.transpose(), &diff).is_ok()
    }

    pub fn is_zero_map(&self) -> bool {
        if self.mat.is_zero() {
            return true;
        }
        solve_right(&self.dst.relations.transpose(), &self.mat).is_ok()
    }

    /// Exactness at the middle of `self; next`: composite zero and the
    /// kernel of `next` exhausted by the image of `self`.
    pub fn exact_with(&self, next: &ModuleMap) -> bool {
        if !self.then(next).is_zero_map() {
            return false;
        }
        let (k, emb) = next.kernel();
        match next.kernel_lift(&k, &emb, self) {
            Ok(w) => w.cokernel().0.is_zero_module(),
            Err(_) => false,
        }
    }

    /// Kernel object and its embedding.
    pub fn kernel(&self) -> (FpModule, ModuleMap) {
        let dst_rel_t = self.dst.relations.transpose();
        // Columns (x; y) with mat*x + rel^T*y = 0; x-parts generate the kernel.
        let stacked = self.mat.hstack(&dst_rel_t);
        let ns = nullspace(&stacked);
        let x_rows: Vec<usize> = (0..self.src.generators()).collect();
        let all_cols: Vec<usize> = (0..ns.cols).collect();
        let gens = ns.submatrix(&x_rows, &all_cols);
        // Relations among kernel generators: combinations landing in the
        // source relation span.
        let src_rel_t = self.src.relations.transpose();
        let rel_ns = nullspace(&gens.hstack(&src_rel_t));
        let c_rows: Vec<usize> = (0..gens.cols).collect();
        let rel_cols: Vec<usize> = (0..rel_ns.cols).collect();
        let relations = rel_ns.submatrix(&c_rows, &rel_cols).transpose();
        let kernel = FpModule { ring: self.src.ring, relations };
        let emb = ModuleMap::new_unchecked(kernel.clone(), self.src.clone(), gens);
        (kernel, emb)
    }

    /// Cokernel object and its projection.
    pub fn cokernel(&self) -> (FpModule, ModuleMap) {
        let relations = self.dst.relations.vstack(&self.mat.transpose());
        let coker = FpModule { ring: self.dst.ring, relations };
        let proj = ModuleMap::new_unchecked(
            self.dst.clone(),
            coker.clone(),
            Matrix::identity(self.dst.generators(), self.dst.ring),
        );
        (coker, proj)
    }

    /// Factor `u` through this map's kernel: for `u: T -> src` with
    /// `u.then(self)` zero, returns `lift: T -> ker` with
    /// `lift.then(emb) == u`.
    pub fn kernel_lift(&self, kernel: &FpModule, emb: &ModuleMap, u: &ModuleMap) -> Result<ModuleMap> {
        assert_eq!(u.dst.relations, self.src.relations);
        let src_rel_t = self.src.relations.transpose();
        let stacked = emb.mat.hstack(&src_rel_t);
        let sol = solve_right(&stacked, &u.mat).map_err(|_| {
            Error::NoSolution("map does not factor through the kernel".into())
        })?;
        let x_rows: Vec<usize> = (0..emb.mat.cols).collect();
        let cols: Vec<usize> = (0..sol.cols).collect();
        let lift_mat = sol.submatrix(&x_rows, &cols);
        ModuleMap::new(u.src.clone(), kernel.clone(), lift_mat)
    }

    /// Factor `u` through this map's cokernel: for `u: dst -> T` with
    /// `self.then(u)` zero, returns `descend: coker -> T` with
    /// `proj.then(descend) == u`.
    pub fn cokernel_descend(&self, coker: &FpModule, u: &ModuleMap) -> Result<ModuleMap> {
        assert_eq!(u.src.relations, self.dst.relations);
        ModuleMap::new(coker.clone(), u.dst.clone(), u.mat.clone())
    }

    pub fn is_iso(&self) -> bool {
        let (k, _) = self.kernel();
        if !k.is_zero_module() {
            return false;
        }
        let (c, _) = self.cokernel();
        c.is_zero_module()
    }

    /// Two-sided inverse of an isomorphism.
    pub fn inverse(&self) -> Result<ModuleMap> {
        let dst_rel_t = self.dst.relations.transpose();
        let stacked = self.mat.hstack(&dst_rel_t);
        let id = Matrix::identity(self.dst.generators(), self.dst.ring);
        let sol = solve_right(&stacked, &id)
            .map_err(|_| Error::NotInvertible("no section over the ring".into()))?;
        let x_rows: Vec<usize> = (0..self.src.generators()).collect();
        let cols: Vec<usize> = (0..sol.cols).collect();
        let inv_mat = sol.submatrix(&x_rows, &cols);
        let inv = ModuleMap::new(self.dst.clone(), self.src.clone(), inv_mat)
            .map_err(|_| Error::NotInvertible("section is not well-defined".into()))?;
        if !self.then(&inv).equal_to(&ModuleMap::identity(&self.src))
            || !inv.then(self).equal_to(&ModuleMap::identity(&self.dst))
        {
            return Err(Error::NotInvertible("section is not two-sided".into()));
        }
        Ok(inv)
    }

    /// Block-diagonal sum of maps.
    pub fn direct_sum(&self, other: &ModuleMap) -> ModuleMap {
        ModuleMap {
            src: self.src.direct_sum(&other.src),
            dst: self.dst.direct_sum(&other.dst),
            mat: self.mat.block_diag(&other.mat),
        }
    }

    pub fn to_rationals(&self) -> ModuleMap {
        ModuleMap {
            src: self.src.to_rationals(),
            dst: self.dst.to_rationals(),
            mat: self.mat.with_ring(Ring::Rat),
        }
    }
}
