//! Quadrature rules: symmetric triangle rules (degree 2 and 4), a
//! collapsed-square Gauss rule of degree 8 for quadrature-sensitivity
//! audits, Gauss rules on edges, and a 1D adaptive Simpson integrator with
//! user-supplied breakpoints for sharply peaked integrands.

use std::sync::OnceLock;

/// Barycentric points and weights; weights sum to 1 and scale by the
/// triangle area.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Midpoint rule, exact through degree 2.
pub fn tri_degree_2() -> &'static TriRule {
    static RULE: OnceLock<TriRule> = OnceLock::new();
    RULE.get_or_init(|| TriRule {
        points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
        weights: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    })
}

/// Six-point symmetric rule, exact through degree 4. Used for all form
/// assembly.
pub fn tri_degree_4() -> &'static TriRule {
    static RULE: OnceLock<TriRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let a = 0.445948490915964886318329253883254;
        let wa = 0.223381589678011465695007008433123;
        let b = 0.091576213509770743459571463402202;
        let wb = 0.109951743655321867638326324900211;
        TriRule {
            points: vec![
                [1.0 - 2.0 * a, a, a],
                [a, 1.0 - 2.0 * a, a],
                [a, a, 1.0 - 2.0 * a],
                [1.0 - 2.0 * b, b, b],
                [b, 1.0 - 2.0 * b, b],
                [b, b, 1.0 - 2.0 * b],
            ],
            weights: vec![wa, wa, wa, wb, wb, wb],
        }
    })
}

/// Collapsed-square Gauss rule (5x5 points), exact through degree 8. Used
/// to audit the quadrature sensitivity of reported errors.
pub fn tri_degree_8() -> &'static TriRule {
    static RULE: OnceLock<TriRule> = OnceLock::new();
    RULE.get_or_init(|| collapsed_rule(5))
}

/// Gauss-Legendre nodes/weights on [0, 1], exact through degree 2n-1.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Newton iteration from the Chebyshev estimate
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[k] = 0.5 * (x + 1.0);
        weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Maps the tensor Gauss rule on the unit square onto the reference
/// triangle via (u, v) -> (u(1-v), v); exact through degree 2n-2.
fn collapsed_rule(n: usize) -> TriRule {
    let (u, wu) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let y = u[i] * (1.0 - u[j]);
            let eta = u[j];
            points.push([1.0 - y - eta, y, eta]);
            weights.push(2.0 * wu[i] * wu[j] * (1.0 - u[j]));
        }
    }
    TriRule { points, weights }
}

/// Integrates `f(y, eta, lambda)` over the triangle with the given
/// vertices; `lambda` are the barycentric coordinates of the quadrature
/// point, which double as the P1 shape function values there.
pub fn integrate_triangle(
    rule: &TriRule,
    v: [[f64; 2]; 3],
    mut f: impl FnMut(f64, f64, [f64; 3]) -> f64,
) -> f64 {
    let area = 0.5
        * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
            .abs();
    let mut acc = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let y = p[0] * v[0][0] + p[1] * v[1][0] + p[2] * v[2][0];
        let eta = p[0] * v[0][1] + p[1] * v[1][1] + p[2] * v[2][1];
        acc += w * f(y, eta, *p);
    }
    area * acc
}

/// Two-point Gauss rule on the segment [a, b]; exact through degree 3,
/// enough for the boundary terms (linear test x linear trial x linear
/// coefficient).
pub fn integrate_edge(a: [f64; 2], b: [f64; 2], mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    const X: f64 = 0.577350269189625764509148780502; // 1/sqrt(3)
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mid = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
    let half = [(b[0] - a[0]) * 0.5, (b[1] - a[1]) * 0.5];
    let p1 = [mid[0] - X * half[0], mid[1] - X * half[1]];
    let p2 = [mid[0] + X * half[0], mid[1] + X * half[1]];
    0.5 * len * (f(p1[0], p1[1]) + f(p2[0], p2[1]))
}

fn simpson(f: &mut impl FnMut(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, fa, m, fm, left, lm, flm, tol * 0.5, depth - 1)
            + adaptive_step(f, m, fm, b, fb, right, rm, frm, tol * 0.5, depth - 1)
    }
}

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(&mut f, a, fa, b, fb);
    adaptive_step(&mut f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Adaptive Simpson with interior breakpoints; the integrand is integrated
/// on each sub-interval separately. Breakpoints outside (a, b) are dropped.
pub fn adaptive_simpson_split(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let n = (edges.len() - 1) as f64;
    edges
        .windows(2)
        .map(|w| adaptive_simpson(&mut f, w[0], w[1], tol / n))
        .sum()
}
