//! Point location via a uniform bin grid over triangle bounding boxes,
//! plus P1 evaluation of nodal fields. Queries are clamped to the domain
//! rectangle first, so semi-Lagrangian feet that leave the domain read the
//! boundary value (constant extension in y).

use super::{Error, Result, TriMesh};

/// Barycentric slack: a point this far outside a triangle still counts as
/// inside, which absorbs roundoff on shared edges.
const BARY_TOL: f64 = -1e-12;

pub struct Locator<'m> {
    mesh: &'m TriMesh,
    nby: usize,
    nbe: usize,
    /// Triangle indices per bin, ascending (bins filled in triangle order).
    bins: Vec<Vec<usize>>,
}

impl<'m> Locator<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        let n = ((mesh.num_triangles() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 512);
        let (nby, nbe) = (n, n);
        let mut bins = vec![Vec::new(); nby * nbe];
        for t in 0..mesh.num_triangles() {
            let c = mesh.triangle_coords(t);
            let (mut y0, mut y1) = (c[0][0], c[0][0]);
            let (mut e0, mut e1) = (c[0][1], c[0][1]);
            for p in &c[1..] {
                y0 = y0.min(p[0]);
                y1 = y1.max(p[0]);
                e0 = e0.min(p[1]);
                e1 = e1.max(p[1]);
            }
            let (iy0, ie0) = bin_of(mesh, nby, nbe, y0, e0);
            let (iy1, ie1) = bin_of(mesh, nby, nbe, y1, e1);
            for ie in ie0..=ie1 {
                for iy in iy0..=iy1 {
                    bins[ie * nby + iy].push(t);
                }
            }
        }
        Locator { mesh, nby, nbe, bins }
    }

    /// Containing triangle and barycentric coordinates of (y, eta), after
    /// clamping into the domain rectangle. Tie on shared edges resolves to
    /// the lowest triangle index.
    pub fn locate(&self, y: f64, eta: f64) -> Result<(usize, [f64; 3])> {
        let r = &self.mesh.rect;
        let y = y.clamp(r.y_min, r.y_max);
        let eta = eta.clamp(r.eta_min, r.eta_max);
        let (iy, ie) = bin_of(self.mesh, self.nby, self.nbe, y, eta);
        if let Some(hit) = self.scan(&self.bins[ie * self.nby + iy], y, eta) {
            return Ok(hit);
        }
        // roundoff near a bin border: widen to the 3x3 neighborhood
        let mut nearby: Vec<usize> = Vec::new();
        for de in -1i64..=1 {
            for dy in -1i64..=1 {
                let (jy, je) = (iy as i64 + dy, ie as i64 + de);
                if jy < 0 || je < 0 || jy >= self.nby as i64 || je >= self.nbe as i64 {
                    continue;
                }
                nearby.extend_from_slice(&self.bins[je as usize * self.nby + jy as usize]);
            }
        }
        nearby.sort_unstable();
        nearby.dedup();
        if let Some(hit) = self.scan(&nearby, y, eta) {
            return Ok(hit);
        }
        let all: Vec<usize> = (0..self.mesh.num_triangles()).collect();
        self.scan(&all, y, eta).ok_or(Error::PointLocation { y, eta })
    }

    fn scan(&self, candidates: &[usize], y: f64, eta: f64) -> Option<(usize, [f64; 3])> {
        for &t in candidates {
            if let Some(l) = barycentric(self.mesh.triangle_coords(t), y, eta) {
                return Some((t, l));
            }
        }
        None
    }

    /// P1 interpolation of nodal `values` at (y, eta).
    pub fn eval(&self, values: &[f64], y: f64, eta: f64) -> Result<f64> {
        let (t, l) = self.locate(y, eta)?;
        let v = self.mesh.triangles[t].v;
        Ok(l[0] * values[v[0]] + l[1] * values[v[1]] + l[2] * values[v[2]])
    }
}

fn bin_of(mesh: &TriMesh, nby: usize, nbe: usize, y: f64, eta: f64) -> (usize, usize) {
    let r = &mesh.rect;
    let fy = (y - r.y_min) / r.width();
    let fe = (eta - r.eta_min) / r.height();
    let iy = ((fy * nby as f64) as usize).min(nby - 1);
    let ie = ((fe * nbe as f64) as usize).min(nbe - 1);
    (iy, ie)
}

fn barycentric(c: [[f64; 2]; 3], y: f64, eta: f64) -> Option<[f64; 3]> {
    let [a, b, d] = c;
    let det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((y - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (eta - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (eta - a[1]) - (y - a[0]) * (b[1] - a[1])) / det;
    let l0 = 1.0 - l1 - l2;
    if l0 >= BARY_TOL && l1 >= BARY_TOL && l2 >= BARY_TOL {
        Some([l0, l1, l2])
    } else {
        None
    }
}
