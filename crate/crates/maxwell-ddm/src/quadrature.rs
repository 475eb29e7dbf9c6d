//! Quadrature rules on segments, triangles and tetrahedra.
//!
//! All rules return barycentric (or parametric) points with weights that sum
//! to one, so an integral over an entity of measure `m` is approximated by
//! `m * sum(w_q * f(x_q))`.

/// Gauss-Legendre nodes and weights on `[0, 1]`, weights summing to one.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration from the Chebyshev initial guess on [-1, 1].
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Three-point Gauss rule on a segment, exact for degree 5.
pub fn segment_gauss3() -> Vec<(f64, f64)> {
    gauss_legendre_unit(3)
}

/// Symmetric 3-point rule on the triangle, exact for degree 2.
pub fn triangle_deg2() -> Vec<([f64; 3], f64)> {
    let a = 2.0 / 3.0;
    let b = 1.0 / 6.0;
    let w = 1.0 / 3.0;
    vec![([a, b, b], w), ([b, a, b], w), ([b, b, a], w)]
}

/// Dunavant 6-point rule on the triangle, exact for degree 4.
pub fn triangle_deg4() -> Vec<([f64; 3], f64)> {
    let orbits = [
        (0.816_847_572_980_459, 0.091_576_213_509_771, 0.109_951_743_655_322),
        (0.108_103_018_168_070, 0.445_948_490_915_965, 0.223_381_589_678_011),
    ];
    let mut pts = Vec::with_capacity(6);
    for &(a, b, w) in &orbits {
        pts.push(([a, b, b], w));
        pts.push(([b, a, b], w));
        pts.push(([b, b, a], w));
    }
    pts
}

/// Triangle rule exact at least for the given polynomial degree.
pub fn triangle_rule(degree: usize) -> Vec<([f64; 3], f64)> {
    if degree <= 2 {
        triangle_deg2()
    } else if degree <= 4 {
        triangle_deg4()
    } else {
        collapsed_triangle(degree)
    }
}

fn collapsed_triangle(degree: usize) -> Vec<([f64; 3], f64)> {
    let n = (degree + 2).div_ceil(2);
    let g = gauss_legendre_unit(n);
    let mut pts = Vec::with_capacity(n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let l1 = u;
            let l2 = v * (1.0 - u);
            let l3 = 1.0 - l1 - l2;
            // Jacobian (1 - u) of the collapsed map, reference area 1/2.
            pts.push(([l1, l2, l3], 2.0 * wu * wv * (1.0 - u)));
        }
    }
    pts
}

/// Symmetric 4-point rule on the tetrahedron, exact for degree 2.
pub fn tet_deg2() -> Vec<([f64; 4], f64)> {
    let a = 0.585_410_196_624_968_5;
    let b = 0.138_196_601_125_010_5;
    let w = 0.25;
    vec![
        ([a, b, b, b], w),
        ([b, a, b, b], w),
        ([b, b, a, b], w),
        ([b, b, b, a], w),
    ]
}

/// Collapsed Gauss rule on the tetrahedron, exact at least for the given
/// total polynomial degree in the barycentric coordinates.
pub fn tet_rule(degree: usize) -> Vec<([f64; 4], f64)> {
    if degree <= 2 {
        return tet_deg2();
    }
    // A monomial of total degree p has u-degree at most p + 2 once the
    // Jacobian (1-u)^2 (1-v) is absorbed, so n = ceil((p+3)/2) Gauss points
    // per direction integrate it exactly.
    let n = (degree + 3).div_ceil(2);
    let g = gauss_legendre_unit(n);
    let mut pts = Vec::with_capacity(n * n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            for &(w, ww) in &g {
                let l1 = u;
                let l2 = v * (1.0 - u);
                let l3 = w * (1.0 - u) * (1.0 - v);
                let l4 = 1.0 - l1 - l2 - l3;
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                pts.push(([l1, l2, l3, l4], 6.0 * wu * wv * ww * jac));
            }
        }
    }
    pts
}

/// Exact integral of a barycentric monomial over a tetrahedron of volume `v`:
/// `integral(l0^a l1^b l2^c l3^d) = a! b! c! d! 6 v / (a+b+c+d+3)!`.
pub fn tet_monomial_integral(exponents: [usize; 4], volume: f64) -> f64 {
    let s: usize = exponents.iter().sum();
    let num: f64 = exponents.iter().map(|&e| factorial(e)).product();
    num * 6.0 * volume / factorial(s + 3)
}

/// Exact integral of a barycentric monomial over a triangle of area `a`:
/// `integral(l0^i l1^j l2^k) = i! j! k! 2 a / (i+j+k+2)!`.
pub fn triangle_monomial_integral(exponents: [usize; 3], area: f64) -> f64 {
    let s: usize = exponents.iter().sum();
    let num: f64 = exponents.iter().map(|&e| factorial(e)).product();
    num * 2.0 * area / factorial(s + 2)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
