//! Small standard geometries shared by tests, benchmarks, and the CLI.

use crate::simplicial::{fibre_product, SimplicialComplex, SimplicialMap};

pub fn point() -> SimplicialComplex {
    SimplicialComplex::point("pt")
}

pub fn interval() -> SimplicialComplex {
    SimplicialComplex::new(vec!["v0".into(), "v1".into()], vec![vec![0, 1]]).unwrap()
}

/// Path with `n` vertices and `n - 1` edges.
pub fn path(n: usize) -> SimplicialComplex {
    let labels = (0..n).map(|i| format!("u{i}")).collect();
    let facets = (0..n - 1).map(|i| vec![i, i + 1]).collect();
    SimplicialComplex::new(labels, facets).unwrap()
}

/// Cycle with `n` vertices.
pub fn circle_n(n: usize) -> SimplicialComplex {
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    let facets = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    SimplicialComplex::new(labels, facets).unwrap()
}

/// Boundary of the triangle.
pub fn circle() -> SimplicialComplex {
    circle_n(3)
}

/// Full triangle.
pub fn disk() -> SimplicialComplex {
    SimplicialComplex::new(
        vec!["v0".into(), "v1".into(), "v2".into()],
        vec![vec![0, 1, 2]],
    )
    .unwrap()
}

/// Minimal six-vertex closed non-orientable surface.
pub fn projective_plane() -> SimplicialComplex {
    let labels = (0..6).map(|i| format!("p{i}")).collect();
    let facets = vec![
        vec![0, 1, 2],
        vec![0, 1, 3],
        vec![0, 2, 4],
        vec![0, 3, 5],
        vec![0, 4, 5],
        vec![1, 2, 5],
        vec![1, 3, 4],
        vec![1, 4, 5],
        vec![2, 3, 4],
        vec![2, 3, 5],
    ];
    SimplicialComplex::new(labels, facets).unwrap()
}

pub fn to_point(c: &SimplicialComplex) -> SimplicialMap {
    SimplicialMap::new(c.clone(), point(), vec![0; c.n_vertices()]).unwrap()
}

/// Product of two circles with its projections, 54 faces.
pub fn torus() -> (SimplicialComplex, SimplicialMap, SimplicialMap) {
    let c = circle();
    fibre_product(&to_point(&c), &to_point(&c)).unwrap()
}

/// Hexagon winding twice around the triangle.
pub fn double_cover() -> SimplicialMap {
    let six = circle_n(6);
    let three = circle_n(3);
    SimplicialMap::new(six, three, vec![0, 1, 2, 0, 1, 2]).unwrap()
}
