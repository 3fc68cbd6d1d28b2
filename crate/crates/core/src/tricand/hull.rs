//! Lower convex hull of lifted points by incremental beneath-beyond insertion.
//!
//! Points `x` in `R^d` are lifted to `(x, |x|^2)` in `R^(d+1)`. An apex point
//! above the centroid closes the hull so that cospherical inputs (all lifted
//! points on one hyperplane) still give a full-dimensional polytope. Facets
//! not touching the apex with a downward normal project to Delaunay simplices.
//!
//! Coplanar visibility ties are broken as if every newly inserted point were
//! lifted by an infinitesimal that dominates all earlier ones: the point is
//! beyond a coplanar facet exactly when that facet's normal points up.

use std::collections::HashMap;

use crate::{Error, Result};

const PLANE_EPS: f64 = 1e-11;
const RANK_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
struct Facet {
    vertices: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
}

impl Facet {
    fn signed_distance(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }

    fn is_beyond(&self, p: &[f64]) -> bool {
        let dist = self.signed_distance(p);
        if dist.abs() > PLANE_EPS {
            return dist > 0.0;
        }
        self.normal[self.normal.len() - 1] > PLANE_EPS
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Determinant of a row-major `n x n` matrix by partial-pivot elimination.
pub(crate) fn determinant(mut m: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .expect("non-empty range");
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for r in col + 1..n {
            let factor = m[r * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    m[r * n + k] -= factor * m[col * n + k];
                }
            }
        }
    }
    det
}

/// Unnormalized normal of the hyperplane through `points` (`dim` points in
/// `R^dim`) via cofactor expansion.
pub(crate) fn hyperplane_normal(points: &[&[f64]]) -> Vec<f64> {
    let dim = points[0].len();
    let rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(points[0]).map(|(a, b)| a - b).collect())
        .collect();
    let m = dim - 1;
    (0..dim)
        .map(|j| {
            let minor: Vec<f64> = rows
                .iter()
                .flat_map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v))
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(minor, m)
        })
        .collect()
}

fn make_facet(vertices: Vec<usize>, pts: &[Vec<f64>], interior: &[f64]) -> Facet {
    let refs: Vec<&[f64]> = vertices.iter().map(|&v| pts[v].as_slice()).collect();
    let mut normal = hyperplane_normal(&refs);
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        normal.iter_mut().for_each(|v| *v /= norm);
    }
    let mut offset = dot(&normal, refs[0]);
    if dot(&normal, interior) - offset > 0.0 {
        normal.iter_mut().for_each(|v| *v = -*v);
        offset = -offset;
    }
    Facet {
        vertices,
        normal,
        offset,
    }
}

/// Picks the apex plus the earliest points that raise the affine rank to
/// `dim`. Returns indices into `pts`.
fn initial_simplex(pts: &[Vec<f64>], apex: usize) -> Option<Vec<usize>> {
    let dim = pts[apex].len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut chosen = vec![apex];
    for (i, p) in pts.iter().enumerate() {
        if i == apex {
            continue;
        }
        let mut v: Vec<f64> = p.iter().zip(&pts[apex]).map(|(a, b)| a - b).collect();
        // two Gram-Schmidt passes for stability
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > RANK_EPS {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            chosen.push(i);
            if basis.len() == dim {
                return Some(chosen);
            }
        }
    }
    None
}

/// Delaunay simplices of `points` (all in `R^d`, pairwise distinct, affinely
/// spanning) as sorted vertex-index lists.
pub(crate) fn delaunay_simplices(points: &[Vec<f64>]) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    let d = points[0].len();
    let mut lifted: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.push(dot(p, p));
            q
        })
        .collect();
    let max_height = lifted.iter().map(|q| q[d]).fold(f64::NEG_INFINITY, f64::max);
    let mut apex: Vec<f64> = (0..d).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / n as f64).collect();
    apex.push(max_height + 1.0);
    lifted.push(apex);
    let apex = n;

    let start = initial_simplex(&lifted, apex).ok_or(Error::DegenerateConfiguration)?;
    let interior: Vec<f64> = (0..=d)
        .map(|k| start.iter().map(|&v| lifted[v][k]).sum::<f64>() / start.len() as f64)
        .collect();

    let mut facets: Vec<Facet> = (0..start.len())
        .map(|skip| {
            let mut verts: Vec<usize> = start
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != skip)
                .map(|(_, &v)| v)
                .collect();
            verts.sort_unstable();
            make_facet(verts, &lifted, &interior)
        })
        .collect();

    let mut in_start = vec![false; n + 1];
    for &v in &start {
        in_start[v] = true;
    }
    let mut ridges: HashMap<Vec<usize>, u32> = HashMap::new();
    for p in 0..n {
        if in_start[p] {
            continue;
        }
        let point = &lifted[p];
        let visible: Vec<bool> = facets.iter().map(|f| f.is_beyond(point)).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        ridges.clear();
        for (f, _) in facets.iter().zip(&visible).filter(|(_, &v)| v) {
            for skip in 0..f.vertices.len() {
                let ridge: Vec<usize> = f
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        let mut horizon: Vec<Vec<usize>> = ridges
            .drain()
            .filter(|(_, count)| *count == 1)
            .map(|(ridge, _)| ridge)
            .collect();
        // HashMap order is random; keep facet order reproducible
        horizon.sort_unstable();
        let mut keep = visible.iter();
        facets.retain(|_| !*keep.next().expect("one flag per facet"));
        for mut ridge in horizon {
            ridge.push(p);
            ridge.sort_unstable();
            facets.push(make_facet(ridge, &lifted, &interior));
        }
    }

    Ok(facets
        .into_iter()
        .filter(|f| !f.vertices.contains(&apex) && f.normal[d] < -PLANE_EPS)
        .map(|f| f.vertices)
        .collect())
}
