//! Red-green local refinement.
//!
//! Red subdivision splits a triangle into four congruent children; green
//! bisection closes a neighbor with exactly one hanging midpoint. Green
//! pairs are transient: before a sweep they are merged back into their
//! parent (the hanging midpoint is remembered as an already-split edge) so
//! repeated local refinement cannot grind angles down. Consequently the
//! minimum angle of any mesh descended from a diagonal-split grid stays at
//! or above half of 45 degrees.

use super::{fresh_mesh_id, Error, Result, TriMesh, Triangle};
use std::collections::HashMap;

/// Edge key independent of traversal direction.
fn ekey(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// A triangle of the effective (green-merged) mesh.
struct EffTri {
    v: [usize; 3],
    generation: u32,
    /// Triangle indices of the input mesh this one stands for: one index
    /// for a regular triangle, the two pair members for a merged green pair.
    stands_for: Vec<usize>,
    /// For a merged pair: (split edge on the parent, midpoint vertex).
    presplit: Option<((usize, usize), usize)>,
}

impl TriMesh {
    /// Returns a new conforming mesh in which every triangle of `marked`
    /// has been red-refined (marks on green closure triangles transfer to
    /// the merged parent). An empty mark set reproduces the input geometry
    /// exactly.
    pub fn refine(&self, marked: &[usize]) -> Result<TriMesh> {
        for &t in marked {
            if t >= self.triangles.len() {
                return Err(Error::InvalidArgument(format!(
                    "marked triangle {t} out of range ({} triangles)",
                    self.triangles.len()
                )));
            }
        }

        let (eff, input_to_eff) = self.effective_mesh()?;

        let mut is_red = vec![false; eff.len()];
        for &t in marked {
            is_red[input_to_eff[t]] = true;
        }

        // Already-split edges from rolled-back green pairs participate in
        // the closure count exactly like freshly split ones.
        let mut split: HashMap<(usize, usize), Option<usize>> = HashMap::new();
        for t in &eff {
            if let Some((edge, mid)) = t.presplit {
                split.insert(edge, Some(mid));
            }
        }

        // Fixpoint: a red triangle splits its three edges; a triangle with
        // two or more split edges becomes red in turn. A rolled-back pair
        // whose remembered midpoint gains further splits on either half
        // (the neighbor's red children refined again) cannot re-form as a
        // green pair and goes red as well.
        loop {
            for (i, t) in eff.iter().enumerate() {
                if is_red[i] {
                    for k in 0..3 {
                        split.entry(ekey(t.v[k], t.v[(k + 1) % 3])).or_insert(None);
                    }
                }
            }
            let mut changed = false;
            for (i, t) in eff.iter().enumerate() {
                if is_red[i] {
                    continue;
                }
                let n = (0..3)
                    .filter(|&k| split.contains_key(&ekey(t.v[k], t.v[(k + 1) % 3])))
                    .count();
                let half_split = t.presplit.is_some_and(|((p, q), m)| {
                    split.contains_key(&ekey(p, m)) || split.contains_key(&ekey(m, q))
                });
                if n >= 2 || half_split {
                    is_red[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut vertices = self.vertices.clone();
        // Deterministic midpoint creation order: scan red triangles by
        // effective index, edges in traversal order.
        for (i, t) in eff.iter().enumerate() {
            if !is_red[i] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (t.v[k], t.v[(k + 1) % 3]);
                let slot = split.get_mut(&ekey(a, b)).unwrap();
                if slot.is_none() {
                    let (p, q) = (vertices[a], vertices[b]);
                    vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    *slot = Some(vertices.len() - 1);
                }
            }
        }

        let mut triangles = Vec::new();
        for (i, t) in eff.iter().enumerate() {
            let [a, b, c] = t.v;
            let rep = t.stands_for[0];
            if is_red[i] {
                let m01 = split[&ekey(a, b)].unwrap();
                let m12 = split[&ekey(b, c)].unwrap();
                let m20 = split[&ekey(c, a)].unwrap();
                let g = t.generation + 1;
                for v in [[a, m01, m20], [m01, b, m12], [m20, m12, c], [m01, m12, m20]] {
                    triangles.push(Triangle { v, generation: g, parent: Some(rep), green: false });
                }
                continue;
            }
            let split_edges: Vec<usize> = (0..3)
                .filter(|&k| split.contains_key(&ekey(t.v[k], t.v[(k + 1) % 3])))
                .collect();
            match split_edges.len() {
                0 => {
                    // untouched regular triangle: copy verbatim
                    let src = self.triangles[rep];
                    triangles.push(src);
                }
                1 => {
                    let k = split_edges[0];
                    let (p, q) = (t.v[k], t.v[(k + 1) % 3]);
                    let apex = t.v[(k + 2) % 3];
                    let mid = split[&ekey(p, q)].unwrap();
                    if let Some(((pp, pq), pmid)) = t.presplit {
                        if (pp, pq) == ekey(p, q) && pmid == mid {
                            // the pair re-forms exactly: restore the input
                            // triangles verbatim
                            for &j in &t.stands_for {
                                triangles.push(self.triangles[j]);
                            }
                            continue;
                        }
                    }
                    let g = t.generation + 1;
                    triangles.push(Triangle { v: [p, mid, apex], generation: g, parent: Some(rep), green: true });
                    triangles.push(Triangle { v: [mid, q, apex], generation: g, parent: Some(rep), green: true });
                }
                _ => unreachable!("fixpoint left a triangle with 2+ split edges"),
            }
        }

        // A promoted pair's red children reuse the remembered midpoint, so
        // the two children along that edge may still face the neighbor's
        // finer split of a half-edge. Close them with one more bisection.
        let mut closed = Vec::with_capacity(triangles.len());
        for tri in triangles {
            let hits: Vec<(usize, usize)> = (0..3)
                .filter_map(|k| {
                    let e = ekey(tri.v[k], tri.v[(k + 1) % 3]);
                    split.get(&e).copied().flatten().map(|mid| (k, mid))
                })
                .collect();
            match hits[..] {
                [] => closed.push(tri),
                [(k, mid)] => {
                    let (p, q) = (tri.v[k], tri.v[(k + 1) % 3]);
                    let apex = tri.v[(k + 2) % 3];
                    let g = tri.generation + 1;
                    let parent = tri.parent;
                    closed.push(Triangle { v: [p, mid, apex], generation: g, parent, green: true });
                    closed.push(Triangle { v: [mid, q, apex], generation: g, parent, green: true });
                }
                _ => unreachable!("child faces two split half-edges"),
            }
        }
        let triangles = closed;

        let mut out = TriMesh {
            id: fresh_mesh_id(),
            rect: self.rect,
            vertices,
            triangles,
            boundary: Vec::new(),
        };
        out.boundary = out.classify_boundary()?;
        Ok(out)
    }

    /// Rolls green pairs back into their parents. Returns the effective
    /// triangle list plus, for every input triangle, the index of the
    /// effective triangle covering it.
    fn effective_mesh(&self) -> Result<(Vec<EffTri>, Vec<usize>)> {
        let n = self.triangles.len();
        // Pair up green triangles: members are pushed adjacently and share
        // their parent reference.
        let mut mate: Vec<Option<usize>> = vec![None; n];
        let mut i = 0;
        while i < n {
            let t = &self.triangles[i];
            if t.green {
                let j = i + 1;
                let ok = j < n
                    && self.triangles[j].green
                    && self.triangles[j].parent == t.parent
                    && self.triangles[j].generation == t.generation;
                if !ok {
                    return Err(Error::MeshFormat(format!(
                        "green triangle {i} has no adjacent pair member"
                    )));
                }
                mate[i] = Some(j);
                mate[j] = Some(i);
                i += 2;
            } else {
                i += 1;
            }
        }

        let mut eff = Vec::new();
        let mut input_to_eff = vec![usize::MAX; n];
        let mut i = 0;
        while i < n {
            let t = self.triangles[i];
            if let Some(j) = mate[i] {
                let merged = self.merge_green_pair(i, j)?;
                input_to_eff[i] = eff.len();
                input_to_eff[j] = eff.len();
                eff.push(merged);
                i += 2;
            } else {
                input_to_eff[i] = eff.len();
                eff.push(EffTri {
                    v: t.v,
                    generation: t.generation,
                    stands_for: vec![i],
                    presplit: None,
                });
                i += 1;
            }
        }
        Ok((eff, input_to_eff))
    }

    /// Reconstructs the parent of the green pair (i, j) = ((p, m, apex),
    /// (m, q, apex)): vertices p, q with midpoint m between them.
    fn merge_green_pair(&self, i: usize, j: usize) -> Result<EffTri> {
        let (a, b) = (self.triangles[i].v, self.triangles[j].v);
        let shared: Vec<usize> = a.iter().copied().filter(|v| b.contains(v)).collect();
        let lone_a: Vec<usize> = a.iter().copied().filter(|v| !b.contains(v)).collect();
        let lone_b: Vec<usize> = b.iter().copied().filter(|v| !a.contains(v)).collect();
        if shared.len() != 2 || lone_a.len() != 1 || lone_b.len() != 1 {
            return Err(Error::MeshFormat(format!(
                "green pair ({i}, {j}) does not share an edge"
            )));
        }
        let (p, q) = (lone_a[0], lone_b[0]);
        let is_midpoint = |m: usize| {
            let (vp, vq, vm) = (self.vertices[p], self.vertices[q], self.vertices[m]);
            let scale = self.rect.width().max(self.rect.height());
            (vm[0] - 0.5 * (vp[0] + vq[0])).abs() <= 1e-12 * scale
                && (vm[1] - 0.5 * (vp[1] + vq[1])).abs() <= 1e-12 * scale
        };
        let (mid, apex) = if is_midpoint(shared[0]) {
            (shared[0], shared[1])
        } else if is_midpoint(shared[1]) {
            (shared[1], shared[0])
        } else {
            return Err(Error::MeshFormat(format!(
                "green pair ({i}, {j}): no shared vertex bisects the outer edge"
            )));
        };
        // Parent (p, q, apex), oriented CCW like its children were.
        let (vp, vq, va) = (self.vertices[p], self.vertices[q], self.vertices[apex]);
        let signed =
            (vq[0] - vp[0]) * (va[1] - vp[1]) - (va[0] - vp[0]) * (vq[1] - vp[1]);
        let v = if signed > 0.0 { [p, q, apex] } else { [q, p, apex] };
        Ok(EffTri {
            v,
            generation: self.triangles[i].generation.saturating_sub(1),
            stands_for: vec![i, j],
            presplit: Some((ekey(p, q), mid)),
        })
    }
}
