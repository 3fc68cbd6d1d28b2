//! Delaunay triangulation of evaluated inputs and the candidate points built
//! from it.
//!
//! Everything is computed in the unit cube obtained by rescaling the domain
//! box; candidates are mapped back to input units on the way out.
//!
//! - *Interior* candidates are simplex barycenters.
//! - *Fringe* candidates sit outside the convex hull: for a hull facet with
//!   outward unit normal `n` and centroid `c`, the candidate is
//!   `c + n * t / 2`, where `t` is the distance from `c` to the domain
//!   boundary along `n`. Facets lying on the boundary yield nothing.

mod hull;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::problem::Bounds;
use crate::{Error, Result};

use hull::{determinant, hyperplane_normal};

/// Highest input dimension accepted by [`delaunay`].
pub const MAX_DIM: usize = 5;

const DUPLICATE_EPS: f64 = 1e-12;
const MIN_VOLUME: f64 = 1e-12;
const FLUSH_EPS: f64 = 1e-9;
const VERTEX_MATCH_EPS: f64 = 1e-9;

/// A boundary facet of the triangulation, in unit-cube coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HullFacet {
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    bounds: Bounds,
    vertices: Vec<Vec<f64>>,
    scaled: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    hull_facets: Vec<HullFacet>,
}

impl Triangulation {
    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Input points in the caller's order. Repeated points appear here but
    /// only their first copy is referenced by simplices.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Vertices rescaled to the unit cube.
    pub fn scaled_vertices(&self) -> &[Vec<f64>] {
        &self.scaled
    }

    /// Sorted vertex-index tuples of size `d + 1`, in sorted order.
    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn hull_facets(&self) -> &[HullFacet] {
        &self.hull_facets
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// First vertex within `1e-9` of `x` in every coordinate.
    pub fn find_vertex(&self, x: &[f64]) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| v.len() == x.len() && v.iter().zip(x).all(|(a, b)| (a - b).abs() <= VERTEX_MATCH_EPS))
    }

    /// One simplex per line as space-separated vertex indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.simplices {
            let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Volume of the simplex spanned by `pts` (`d + 1` points in `R^d`).
pub fn simplex_volume(pts: &[&[f64]]) -> f64 {
    let d = pts[0].len();
    let m: Vec<f64> = pts[1..]
        .iter()
        .flat_map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b))
        .collect();
    let factorial: f64 = (1..=d).map(|k| k as f64).product();
    determinant(m, d).abs() / factorial
}

fn affine_rank_full(points: &[&Vec<f64>], d: usize) -> bool {
    let base = points[0];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &points[1..] {
        let mut v: Vec<f64> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            if basis.len() == d {
                return true;
            }
        }
    }
    false
}

/// Delaunay triangulation of `points` inside `bounds` via the lifting map.
pub fn delaunay(points: &[Vec<f64>], bounds: &Bounds) -> Result<Triangulation> {
    let d = bounds.dim();
    if d > MAX_DIM {
        return Err(Error::DimensionTooHigh(d));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    if points.len() < d + 1 {
        return Err(Error::TooFewPoints {
            needed: d + 1,
            got: points.len(),
        });
    }
    let scaled: Vec<Vec<f64>> = points.iter().map(|p| bounds.to_unit(p)).collect();

    // first copy of each point
    let mut unique: Vec<usize> = Vec::new();
    for (i, p) in scaled.iter().enumerate() {
        let dup = unique
            .iter()
            .any(|&u| scaled[u].iter().zip(p).all(|(a, b)| (a - b).abs() <= DUPLICATE_EPS));
        if !dup {
            unique.push(i);
        }
    }
    if unique.len() < d + 1 {
        return Err(Error::TooFewPoints {
            needed: d + 1,
            got: unique.len(),
        });
    }
    let unique_pts: Vec<&Vec<f64>> = unique.iter().map(|&i| &scaled[i]).collect();
    if !affine_rank_full(&unique_pts, d) {
        return Err(Error::DegenerateConfiguration);
    }

    let local: Vec<Vec<f64>> = unique_pts.iter().map(|p| (*p).clone()).collect();
    let mut simplices: Vec<Vec<usize>> = hull::delaunay_simplices(&local)?
        .into_iter()
        .map(|s| {
            let mut s: Vec<usize> = s.into_iter().map(|k| unique[k]).collect();
            s.sort_unstable();
            s
        })
        .filter(|s| {
            let refs: Vec<&[f64]> = s.iter().map(|&v| scaled[v].as_slice()).collect();
            simplex_volume(&refs) > MIN_VOLUME
        })
        .collect();
    simplices.sort();
    if simplices.is_empty() {
        return Err(Error::DegenerateConfiguration);
    }

    let hull_facets = boundary_facets(&simplices, &scaled);
    Ok(Triangulation {
        bounds: bounds.clone(),
        vertices: points.to_vec(),
        scaled,
        simplices,
        hull_facets,
    })
}

/// Faces owned by exactly one simplex, with normals pointing away from that
/// simplex's opposite vertex.
fn boundary_facets(simplices: &[Vec<usize>], scaled: &[Vec<f64>]) -> Vec<HullFacet> {
    let mut faces: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    for s in simplices {
        for skip in 0..s.len() {
            let face: Vec<usize> = s.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
            faces.entry(face).and_modify(|e| e.1 += 1).or_insert((s[skip], 1));
        }
    }
    faces
        .into_iter()
        .filter(|(_, (_, count))| *count == 1)
        .map(|(face, (opposite, _))| {
            let d = scaled[0].len();
            let refs: Vec<&[f64]> = face.iter().map(|&v| scaled[v].as_slice()).collect();
            let centroid: Vec<f64> = (0..d)
                .map(|k| refs.iter().map(|p| p[k]).sum::<f64>() / refs.len() as f64)
                .collect();
            let mut normal = if d == 1 { vec![1.0] } else { hyperplane_normal(&refs) };
            let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            normal.iter_mut().for_each(|v| *v /= norm);
            let towards_opposite: f64 = normal
                .iter()
                .zip(scaled[opposite].iter().zip(&centroid))
                .map(|(n, (o, c))| n * (o - c))
                .sum();
            if towards_opposite > 0.0 {
                normal.iter_mut().for_each(|v| *v = -*v);
            }
            HullFacet {
                vertices: face,
                normal,
                centroid,
            }
        })
        .collect()
}

/// Candidates with the simplex or hull facet each one came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub interior: Vec<Vec<f64>>,
    pub fringe: Vec<Vec<f64>>,
    /// Index into [`Triangulation::simplices`] for each interior candidate.
    pub interior_simplex: Vec<usize>,
    /// Index into [`Triangulation::hull_facets`] for each fringe candidate.
    pub fringe_facet: Vec<usize>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.interior.len() + self.fringe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Barycenter of every simplex, in input units.
pub fn interior_candidates(tri: &Triangulation) -> Vec<Vec<f64>> {
    tri.simplices
        .iter()
        .map(|s| {
            (0..tri.dim())
                .map(|k| s.iter().map(|&v| tri.vertices[v][k]).sum::<f64>() / s.len() as f64)
                .collect()
        })
        .collect()
}

fn fringe_point(facet: &HullFacet) -> Option<Vec<f64>> {
    let t_max = facet
        .normal
        .iter()
        .zip(&facet.centroid)
        .filter_map(|(&n, &c)| {
            if n > 0.0 {
                Some((1.0 - c) / n)
            } else if n < 0.0 {
                Some(-c / n)
            } else {
                None
            }
        })
        .fold(f64::INFINITY, f64::min);
    if !(t_max >= FLUSH_EPS) {
        return None;
    }
    Some(
        facet
            .centroid
            .iter()
            .zip(&facet.normal)
            .map(|(c, n)| (c + 0.5 * t_max * n).clamp(0.0, 1.0))
            .collect(),
    )
}

/// Fringe candidates, in input units, paired with their hull facet index.
fn fringe_with_sources(tri: &Triangulation) -> (Vec<Vec<f64>>, Vec<usize>) {
    tri.hull_facets
        .iter()
        .enumerate()
        .filter_map(|(i, f)| fringe_point(f).map(|u| (tri.bounds.from_unit(&u), i)))
        .unzip()
}

pub fn fringe_candidates(tri: &Triangulation) -> Vec<Vec<f64>> {
    fringe_with_sources(tri).0
}

pub fn candidates(tri: &Triangulation) -> CandidateSet {
    let interior = interior_candidates(tri);
    let interior_simplex = (0..interior.len()).collect();
    let (fringe, fringe_facet) = fringe_with_sources(tri);
    CandidateSet {
        interior,
        fringe,
        interior_simplex,
        fringe_facet,
    }
}

/// Candidates from simplices incident to `x_p` and from hull facets
/// containing it.
pub fn neighbors_of_preferred(tri: &Triangulation, cands: &CandidateSet, x_p: &[f64]) -> Result<CandidateSet> {
    let v = tri.find_vertex(x_p).ok_or(Error::VertexNotFound)?;
    let mut out = CandidateSet::default();
    for (x, &s) in cands.interior.iter().zip(&cands.interior_simplex) {
        if tri.simplices[s].contains(&v) {
            out.interior.push(x.clone());
            out.interior_simplex.push(s);
        }
    }
    for (x, &f) in cands.fringe.iter().zip(&cands.fringe_facet) {
        if tri.hull_facets[f].vertices.contains(&v) {
            out.fringe.push(x.clone());
            out.fringe_facet.push(f);
        }
    }
    Ok(out)
}
