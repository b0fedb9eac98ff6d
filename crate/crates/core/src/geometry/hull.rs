//! Convex hulls with exact extreme points in d ≤ 3, and an LP-backed body in
//! higher dimension.

use super::lp::in_hull_lp;
use crate::error::{Result, ShapeError};
use crate::points::{dot, PointSet};
use rand::rngs::StdRng;
use rand::RngExt;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Outward facet `normalᵀx ≤ offset`, with vertex indices into the body's
/// vertex list (two for an edge in 2-D, three for a triangle in 3-D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

/// A convex polytope given by its extreme points. In 2-D the vertices are in
/// counter-clockwise order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    dimension: usize,
    vertices: PointSet,
    cached_volume: Option<f64>,
    #[serde(default)]
    facets: Vec<Facet>,
}

impl ConvexBody {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &PointSet {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Exact volume (length, area) for d ≤ 3; `None` in higher dimension.
    pub fn volume(&self) -> Option<f64> {
        self.cached_volume
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        const EPS: f64 = 1e-12;
        match self.dimension {
            1 => {
                let v = self.vertices.scalars();
                x[0] >= v[0] - EPS && x[0] <= v[v.len() - 1] + EPS
            }
            2 => contains_2d(&self.vertices, x, EPS),
            3 => self.facets.iter().all(|f| dot(&f.normal, x) <= f.offset + EPS),
            _ => in_hull_lp(&self.vertices, x, 1e-9),
        }
    }

    /// Monte-Carlo volume from uniform draws in the bounding box.
    pub fn mc_volume(&self, draws: usize, rng: &mut StdRng) -> (f64, f64) {
        let d = self.dimension;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in self.vertices.iter() {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let mut x = vec![0.0; d];
        let mut hits = 0usize;
        for _ in 0..draws {
            for k in 0..d {
                x[k] = rng.random_range(lo[k]..=hi[k]);
            }
            if self.contains(&x) {
                hits += 1;
            }
        }
        let p = hits as f64 / draws as f64;
        (box_vol * p, box_vol * (p * (1.0 - p) / draws as f64).sqrt())
    }
}

/// Affine rank of a point set (0 for a single point).
pub fn affine_rank(points: &PointSet) -> usize {
    let n = points.len();
    if n <= 1 {
        return 0;
    }
    let d = points.dim();
    let p0 = points.point(0);
    let scale = points
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-10 * scale;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..d {
        // farthest residual from the current span
        let mut best: Option<(f64, Vec<f64>)> = None;
        for p in points.iter() {
            let mut r: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
            }
            let nr = dot(&r, &r).sqrt();
            if best.as_ref().is_none_or(|(bn, _)| nr > *bn) {
                best = Some((nr, r));
            }
        }
        match best {
            Some((nr, r)) if nr > tol => basis.push(r.iter().map(|v| v / nr).collect()),
            _ => break,
        }
    }
    basis.len()
}

/// Convex hull of at least d+1 affinely independent points in dimension
/// d ≤ 3; higher dimensions get an LP-backed body without a volume.
pub fn convex_hull(points: &PointSet) -> Result<ConvexBody> {
    let d = points.dim();
    if points.len() < d + 1 {
        return Err(ShapeError::FlatHull {
            rank: affine_rank(points),
            dim: d,
        });
    }
    let rank = affine_rank(points);
    if rank < d {
        return Err(ShapeError::FlatHull { rank, dim: d });
    }
    match d {
        1 => {
            let xs = points.scalars();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(ConvexBody {
                dimension: 1,
                vertices: PointSet::from_scalars(&[lo, hi]),
                cached_volume: Some(hi - lo),
                facets: vec![
                    Facet {
                        normal: vec![-1.0],
                        offset: -lo,
                        vertices: vec![0],
                    },
                    Facet {
                        normal: vec![1.0],
                        offset: hi,
                        vertices: vec![1],
                    },
                ],
            })
        }
        2 => Ok(hull_2d(points)),
        3 => hull_3d(points),
        _ => Ok(hull_lp(points)),
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn hull_2d(points: &PointSet) -> ConvexBody {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (points.point(i), points.point(j));
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
    });
    idx.dedup_by(|i, j| points.point(*i) == points.point(*j));
    let mut chain: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = chain.len();
        let order: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in order {
            while chain.len() >= start + 2
                && cross2(points.point(chain[chain.len() - 2]), points.point(chain[chain.len() - 1]), points.point(i)) <= 0.0
            {
                chain.pop();
            }
            chain.push(i);
        }
        chain.pop();
    }
    let vertices = PointSet::from_rows(2, &chain.iter().map(|&i| points.point(i)).collect::<Vec<_>>());
    let h = vertices.len();
    let mut area = 0.0;
    let mut facets = Vec::with_capacity(h);
    for k in 0..h {
        let (a, b) = (vertices.point(k), vertices.point((k + 1) % h));
        area += a[0] * b[1] - a[1] * b[0];
        let normal = vec![b[1] - a[1], a[0] - b[0]];
        let len = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
        let normal: Vec<f64> = normal.iter().map(|v| v / len).collect();
        facets.push(Facet {
            offset: dot(&normal, a),
            normal,
            vertices: vec![k, (k + 1) % h],
        });
    }
    ConvexBody {
        dimension: 2,
        vertices,
        cached_volume: Some(0.5 * area),
        facets,
    }
}

/// O(log h) point location in a counter-clockwise convex polygon by a fan
/// around vertex 0.
fn contains_2d(v: &PointSet, x: &[f64], eps: f64) -> bool {
    let h = v.len();
    let p0 = v.point(0);
    if cross2(p0, v.point(1), x) < -eps || cross2(p0, v.point(h - 1), x) > eps {
        return false;
    }
    let (mut lo, mut hi) = (1usize, h - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if cross2(p0, v.point(mid), x) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    cross2(v.point(lo), v.point(hi), x) >= -eps
}

#[derive(Clone)]
struct Tri {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    alive: bool,
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn make_tri(points: &PointSet, v: [usize; 3], inside: &[f64; 3]) -> Tri {
    let (a, b, c) = (points.point(v[0]), points.point(v[1]), points.point(v[2]));
    let mut n = cross3(sub3(b, a), sub3(c, a));
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    n.iter_mut().for_each(|x| *x /= len.max(f64::MIN_POSITIVE));
    let mut tri = Tri {
        v,
        normal: n,
        offset: dot(&n, a),
        alive: true,
    };
    if dot(&tri.normal, inside) > tri.offset {
        tri.v.swap(1, 2);
        tri.normal.iter_mut().for_each(|x| *x = -*x);
        tri.offset = -tri.offset;
    }
    tri
}

fn hull_3d(points: &PointSet) -> Result<ConvexBody> {
    let n = points.len();
    let far = |from: &dyn Fn(&[f64]) -> f64| (0..n).max_by(|&i, &j| from(points.point(i)).total_cmp(&from(points.point(j)))).unwrap();
    let p0 = 0usize;
    let a0 = points.point(p0).to_vec();
    let p1 = far(&|p| crate::points::dist(p, &a0));
    let a1 = points.point(p1).to_vec();
    let dir = sub3(&a1, &a0);
    let p2 = far(&|p| {
        let c = cross3(dir, sub3(p, &a0));
        c.iter().map(|v| v * v).sum::<f64>()
    });
    let nrm = cross3(dir, sub3(points.point(p2), &a0));
    let p3 = far(&|p| dot(&nrm, &sub3(p, &a0)).abs());
    let scale = crate::points::dist(&a0, &a1);
    let height = dot(&nrm, &sub3(points.point(p3), &a0)).abs() / crate::points::norm(&nrm).max(f64::MIN_POSITIVE);
    if height <= 1e-10 * scale {
        return Err(ShapeError::FlatHull { rank: 2, dim: 3 });
    }
    let inside: [f64; 3] = std::array::from_fn(|k| {
        (points.point(p0)[k] + points.point(p1)[k] + points.point(p2)[k] + points.point(p3)[k]) / 4.0
    });
    let eps = 1e-12 * scale.max(1e-300);
    let mut tris: Vec<Tri> = [[p0, p1, p2], [p0, p1, p3], [p0, p2, p3], [p1, p2, p3]]
        .iter()
        .map(|&v| make_tri(points, v, &inside))
        .collect();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (f, t) in tris.iter().enumerate() {
        for k in 0..3 {
            edges.insert((t.v[k], t.v[(k + 1) % 3]), f);
        }
    }
    let seeds = [p0, p1, p2, p3];
    let mut visible: Vec<usize> = Vec::new();
    for i in 0..n {
        if seeds.contains(&i) {
            continue;
        }
        let x = points.point(i);
        visible.clear();
        visible.extend(
            tris.iter()
                .enumerate()
                .filter(|(_, t)| t.alive && dot(&t.normal, x) - t.offset > eps)
                .map(|(f, _)| f),
        );
        if visible.is_empty() {
            continue;
        }
        let mut horizon = Vec::new();
        for &f in &visible {
            let v = tris[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let twin = edges.get(&(b, a)).copied();
                if twin.is_none_or(|g| !visible.contains(&g)) {
                    horizon.push((a, b));
                }
            }
        }
        for &f in &visible {
            tris[f].alive = false;
            let v = tris[f].v;
            for k in 0..3 {
                let key = (v[k], v[(k + 1) % 3]);
                if edges.get(&key) == Some(&f) {
                    edges.remove(&key);
                }
            }
        }
        for (a, b) in horizon {
            let mut t = make_tri(points, [a, b, i], &inside);
            // keep the orientation inherited from the horizon edge
            if t.v != [a, b, i] {
                t.v = [a, b, i];
                t.normal.iter_mut().for_each(|x| *x = -*x);
                t.offset = -t.offset;
            }
            let f = tris.len();
            for k in 0..3 {
                edges.insert((t.v[k], t.v[(k + 1) % 3]), f);
            }
            tris.push(t);
        }
        if tris.len() > 64 && tris.iter().filter(|t| t.alive).count() * 2 < tris.len() {
            compact(&mut tris, &mut edges);
        }
    }
    let alive: Vec<&Tri> = tris.iter().filter(|t| t.alive).collect();
    let mut volume = 0.0;
    for t in &alive {
        let (a, b, c) = (points.point(t.v[0]), points.point(t.v[1]), points.point(t.v[2]));
        let det = dot(&cross3(sub3(b, &inside), sub3(c, &inside)), &sub3(a, &inside));
        volume += det.abs() / 6.0;
    }
    let mut used: Vec<usize> = alive.iter().flat_map(|t| t.v).collect();
    used.sort_unstable();
    used.dedup();
    // drop boundary points that are not extreme (on an edge or inside a facet)
    let candidate = PointSet::from_rows(3, &used.iter().map(|&i| points.point(i)).collect::<Vec<_>>());
    let mut keep = Vec::with_capacity(used.len());
    for (k, &i) in used.iter().enumerate() {
        let others: Vec<&[f64]> = (0..used.len()).filter(|&j| j != k).map(|j| candidate.point(j)).collect();
        let rest = PointSet::from_rows(3, &others);
        if !in_hull_lp(&rest, points.point(i), 1e-10 * scale.max(1.0)) {
            keep.push(i);
        }
    }
    let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let facets = alive
        .iter()
        .map(|t| Facet {
            normal: t.normal.to_vec(),
            offset: t.offset,
            vertices: t.v.iter().filter_map(|i| remap.get(i).copied()).collect(),
        })
        .collect();
    Ok(ConvexBody {
        dimension: 3,
        vertices: PointSet::from_rows(3, &keep.iter().map(|&i| points.point(i)).collect::<Vec<_>>()),
        cached_volume: Some(volume),
        facets,
    })
}

fn compact(tris: &mut Vec<Tri>, edges: &mut HashMap<(usize, usize), usize>) {
    tris.retain(|t| t.alive);
    edges.clear();
    for (f, t) in tris.iter().enumerate() {
        for k in 0..3 {
            edges.insert((t.v[k], t.v[(k + 1) % 3]), f);
        }
    }
}

fn hull_lp(points: &PointSet) -> ConvexBody {
    let n = points.len();
    let mut keep = Vec::new();
    for i in 0..n {
        let others: Vec<&[f64]> = (0..n).filter(|&j| j != i).map(|j| points.point(j)).collect();
        let rest = PointSet::from_rows(points.dim(), &others);
        if !in_hull_lp(&rest, points.point(i), 1e-10) {
            keep.push(points.point(i));
        }
    }
    ConvexBody {
        dimension: points.dim(),
        vertices: PointSet::from_rows(points.dim(), &keep),
        cached_volume: None,
        facets: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::StandardNormal;

    fn uniform_ball(d: usize, n: usize, seed: u64) -> PointSet {
        let mut rng = stream(seed, &[]);
        let mut ps = PointSet::with_capacity(d, n);
        for _ in 0..n {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r = rng.random::<f64>().powf(1.0 / d as f64) / crate::points::norm(&g);
            ps.push(&g.iter().map(|v| v * r).collect::<Vec<_>>());
        }
        ps
    }

    #[test]
    fn triangle() {
        let pts = PointSet::from_rows(2, &[[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 3);
        assert!((h.volume().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_drops_interior_point() {
        let pts = PointSet::from_rows(2, &[[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0]]);
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 4);
        assert!((h.volume().unwrap() - 1.0).abs() < 1e-15);
        assert!(h.contains(&[0.5, 0.5]));
        assert!(h.contains(&[1.0, 1.0]));
        assert!(!h.contains(&[1.0001, 0.5]));
    }

    #[test]
    fn collinear_points_are_flat() {
        let pts = PointSet::from_rows(2, &[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert!(matches!(convex_hull(&pts), Err(ShapeError::FlatHull { rank: 1, dim: 2 })));
        let pts = PointSet::from_rows(3, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        assert!(matches!(convex_hull(&pts), Err(ShapeError::FlatHull { rank: 2, dim: 3 })));
    }

    #[test]
    fn cube_with_interior_and_face_points() {
        let mut rows = Vec::new();
        for i in 0..8 {
            rows.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        rows.push([0.5, 0.5, 0.5]);
        rows.push([0.5, 0.5, 1.0]);
        rows.push([1.0, 0.5, 0.0]);
        let h = convex_hull(&PointSet::from_rows(3, &rows)).unwrap();
        assert_eq!(h.vertices().len(), 8);
        assert!((h.volume().unwrap() - 1.0).abs() < 1e-12);
        assert!(h.contains(&[0.2, 0.9, 0.4]));
        assert!(!h.contains(&[0.2, 1.1, 0.4]));
    }

    #[test]
    fn disk_hull_area_agrees_with_membership_estimate() {
        let pts = uniform_ball(2, 1000, 17);
        let h = convex_hull(&pts).unwrap();
        let mut rng = stream(18, &[]);
        let (mc, se) = h.mc_volume(1_000_000, &mut rng);
        let area = h.volume().unwrap();
        assert!((mc - area).abs() <= 3.0 * se, "{mc} ± {se} vs {area}");
        for v in h.vertices().iter() {
            assert!(h.contains(v));
        }
    }

    #[test]
    fn ball_hull_3d_volume_agrees_with_membership_estimate() {
        let pts = uniform_ball(3, 2000, 5);
        let h = convex_hull(&pts).unwrap();
        let mut rng = stream(6, &[]);
        let (mc, se) = h.mc_volume(400_000, &mut rng);
        let vol = h.volume().unwrap();
        assert!((mc - vol).abs() <= 4.0 * se, "{mc} ± {se} vs {vol}");
        for p in pts.iter() {
            assert!(h.contains(p));
        }
    }

    #[test]
    fn lp_body_in_four_dimensions() {
        let pts = uniform_ball(4, 60, 8);
        let h = convex_hull(&pts).unwrap();
        assert!(h.volume().is_none());
        assert!(h.vertices().len() <= 60);
        for p in pts.iter() {
            assert!(h.contains(p));
        }
        assert!(!h.contains(&[1.5, 0.0, 0.0, 0.0]));
    }
}
