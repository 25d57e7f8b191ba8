//! Lagrange P_k finite elements for the 1D Poisson–Dirichlet problem
//! `-u'' = f` on `(0, 1)`, with the Runge-type manufactured solution
//! `u(x) = 1 / (1 + alpha (x - center)^2)`.
//!
//! The load vector uses a plain `k + 2` point Gauss rule per element, as a
//! production code would, so a sharp Runge peak on a coarse mesh is sampled
//! rather than resolved. Error norms use composite rules with sub-cells no
//! longer than [`Quadrature::max_subcell`] so that the measured error is
//! accurate at every mesh size. The stiffness matrix is assembled exactly,
//! boundary values are lifted from the exact solution, and the banded SPD
//! system is factored by Cholesky.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::quad::GaussLegendre;

/// Pointwise data of a manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pointwise {
    pub value: f64,
    pub derivative: f64,
    /// `f = -u''`
    pub source: f64,
}

/// A manufactured solution with its derivative and source term.
pub trait ExactSolution {
    fn pointwise(&self, x: f64) -> Pointwise;
}

/// Runge-type solution together with the element degree used to approximate it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RungeProblem {
    alpha: f64,
    center: f64,
    degree: usize,
}

pub const MAX_DEGREE: usize = 4;

impl RungeProblem {
    pub fn new(alpha: f64, center: f64, degree: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(domain(format!("Runge parameter alpha must be positive, got {alpha}")));
        }
        if !(center > 0.0 && center < 1.0) {
            return Err(domain(format!("Runge center must lie in (0, 1), got {center}")));
        }
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(domain(format!("element degree must be in 1..={MAX_DEGREE}, got {degree}")));
        }
        Ok(Self { alpha, center, degree })
    }

    /// Peak at the middle of the domain.
    pub fn centered(alpha: f64, degree: usize) -> Result<Self> {
        Self::new(alpha, 0.5, degree)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::new(self.alpha, self.center, degree)
    }
}

impl ExactSolution for RungeProblem {
    fn pointwise(&self, x: f64) -> Pointwise {
        exact_solution(self, x)
    }
}

/// `u`, `u'` and `-u''` of the Runge solution at `x`.
pub fn exact_solution(problem: &RungeProblem, x: f64) -> Pointwise {
    let a = problem.alpha;
    let d = x - problem.center;
    let s = 1.0 + a * d * d;
    Pointwise {
        value: 1.0 / s,
        derivative: -2.0 * a * d / (s * s),
        source: (2.0 * a - 6.0 * a * a * d * d) / (s * s * s),
    }
}

/// Polynomial manufactured solution `u(x) = sum_i c_i x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSolution {
    coeffs: Vec<f64>,
}

impl PolynomialSolution {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

impl ExactSolution for PolynomialSolution {
    fn pointwise(&self, x: f64) -> Pointwise {
        let (mut value, mut derivative, mut second) = (0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            second = second * x + derivative * 2.0;
            derivative = derivative * x + value;
            value = value * x + c;
        }
        Pointwise { value, derivative, source: -second }
    }
}

/// A partition of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    h_max: f64,
}

impl Mesh1D {
    /// Validates strict ordering and exact endpoints.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(domain("mesh nodes must start at 0 and end at 1"));
        }
        let mut h_max: f64 = 0.0;
        for w in nodes.windows(2) {
            let len = w[1] - w[0];
            if !(len > 0.0) {
                return Err(domain(format!("mesh nodes must be strictly increasing ({} then {})", w[0], w[1])));
            }
            h_max = h_max.max(len);
        }
        Ok(Self { nodes, h_max })
    }

    pub fn uniform(elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(domain("a mesh needs at least one element"));
        }
        let n = elements as f64;
        let mut nodes: Vec<f64> = (0..=elements).map(|i| i as f64 / n).collect();
        nodes[elements] = 1.0;
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Largest element length.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Number of elements used for a target mesh size: `ceil(1/h)`, with
/// reciprocals of integers mapped exactly.
pub fn element_count(h_target: f64) -> usize {
    let inv = 1.0 / h_target;
    let nearest = inv.round();
    if (inv - nearest).abs() <= 1e-9 * nearest {
        nearest as usize
    } else {
        inv.ceil() as usize
    }
}

pub const MAX_JITTER: f64 = 0.49;

/// Randomized mesh: `N = ceil(1/h_target)` cells, interior node `i` at
/// `i/N + eta_i` with `eta_i ~ U(-jitter/N, jitter/N)`.
pub fn random_mesh<R: Rng + ?Sized>(h_target: f64, jitter: f64, rng: &mut R) -> Result<Mesh1D> {
    if !(h_target > 0.0 && h_target < 1.0) {
        return Err(domain(format!("target mesh size must lie in (0, 1), got {h_target}")));
    }
    if !(0.0..=MAX_JITTER).contains(&jitter) {
        return Err(domain(format!("jitter must lie in [0, {MAX_JITTER}], got {jitter}")));
    }
    let n = element_count(h_target);
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    for i in 1..n {
        let eta = if jitter > 0.0 { (2.0 * rng.random::<f64>() - 1.0) * jitter / nf } else { 0.0 };
        nodes.push(i as f64 / nf + eta);
    }
    nodes.push(1.0);
    Mesh1D::from_nodes(nodes)
}

/// Lagrange basis of degree `k` on `[0, 1]` with equispaced nodes.
#[derive(Debug, Clone)]
struct LagrangeBasis {
    nodes: Vec<f64>,
}

impl LagrangeBasis {
    fn new(degree: usize) -> Self {
        Self { nodes: (0..=degree).map(|i| i as f64 / degree as f64).collect() }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Values and derivatives of every basis function at `xi`.
    fn eval(&self, xi: f64, values: &mut [f64], derivs: &mut [f64]) {
        let n = self.nodes.len();
        for i in 0..n {
            let mut v = 1.0;
            let mut d = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let denom = self.nodes[i] - self.nodes[j];
                let factor = (xi - self.nodes[j]) / denom;
                d = d * factor + v / denom;
                v *= factor;
            }
            values[i] = v;
            derivs[i] = d;
        }
    }
}

/// Composite Gauss rule applied on every element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Gauss points per sub-cell.
    pub points: usize,
    /// Longest allowed sub-cell.
    pub max_subcell: f64,
}

impl Quadrature {
    /// Rule for the load vector: degree `2k + 3` on each whole element.
    pub fn load(degree: usize) -> Self {
        Self { points: degree + 2, max_subcell: f64::INFINITY }
    }

    /// Rule for error norms: degree `2k + 7` per sub-cell.
    pub fn error(degree: usize) -> Self {
        Self { points: degree + 4, max_subcell: 1.0 / 256.0 }
    }

    /// Twice the number of Gauss points.
    pub fn doubled(self) -> Self {
        Self { points: 2 * self.points, ..self }
    }

    fn for_each_point(&self, rule: &GaussLegendre, a: f64, b: f64, mut f: impl FnMut(f64, f64)) {
        let subcells = ((b - a) / self.max_subcell).ceil().max(1.0) as usize;
        let width = (b - a) / subcells as f64;
        for s in 0..subcells {
            let lo = a + s as f64 * width;
            let hi = if s + 1 == subcells { b } else { lo + width };
            for (x, w) in rule.mapped(lo, hi) {
                f(x, w);
            }
        }
    }
}

/// Galerkin solution: global Lagrange coefficients, numbered element by
/// element (`e * k + local`).
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    mesh: Mesh1D,
    degree: usize,
    coefficients: Vec<f64>,
}

impl FemSolution {
    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coordinates of the global Lagrange nodes.
    pub fn dof_coordinates(&self) -> Vec<f64> {
        dof_coordinates(&self.mesh, self.degree)
    }

    /// `u_h(x)` and `u_h'(x)`.
    pub fn evaluate(&self, x: f64) -> (f64, f64) {
        let nodes = self.mesh.nodes();
        let e = match nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(i) => i.min(self.mesh.elements() - 1),
            Err(i) => i.saturating_sub(1).min(self.mesh.elements() - 1),
        };
        let (a, b) = (nodes[e], nodes[e + 1]);
        let basis = LagrangeBasis::new(self.degree);
        let mut vals = vec![0.0; basis.len()];
        let mut ders = vec![0.0; basis.len()];
        basis.eval((x - a) / (b - a), &mut vals, &mut ders);
        let local = &self.coefficients[e * self.degree..=(e + 1) * self.degree];
        let v = local.iter().zip(&vals).map(|(c, p)| c * p).sum();
        let d = local.iter().zip(&ders).map(|(c, p)| c * p).sum::<f64>() / (b - a);
        (v, d)
    }
}

fn dof_coordinates(mesh: &Mesh1D, degree: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(mesh.elements() * degree + 1);
    for (a, b) in mesh.cells() {
        for i in 0..degree {
            xs.push(a + (b - a) * i as f64 / degree as f64);
        }
    }
    xs.push(1.0);
    xs
}

/// Symmetric positive-definite band matrix stored by lower band rows.
#[derive(Debug, Clone)]
struct BandedSpd {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    /// Adds to entry `(i, j)` of the lower triangle.
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// In-place Cholesky factorization followed by the two triangular solves.
    fn solve(mut self, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
        let (n, w) = (self.n, self.bandwidth);
        for i in 0..n {
            let start = i.saturating_sub(w);
            for j in start..=i {
                let mut sum = self.data[self.idx(i, j)];
                for k in start.max(j.saturating_sub(w))..j {
                    sum -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::SingularSystem { row: i, pivot: sum });
                    }
                    let k = self.idx(i, i);
                    self.data[k] = sum.sqrt();
                } else {
                    let k = self.idx(i, j);
                    self.data[k] = sum / self.data[self.idx(j, j)];
                }
            }
        }
        for i in 0..n {
            let mut sum = rhs[i];
            for k in i.saturating_sub(w)..i {
                sum -= self.data[self.idx(i, k)] * rhs[k];
            }
            rhs[i] = sum / self.data[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = rhs[i];
            for k in (i + 1)..n.min(i + w + 1) {
                sum -= self.data[self.idx(k, i)] * rhs[k];
            }
            rhs[i] = sum / self.data[self.idx(i, i)];
        }
        Ok(rhs)
    }
}

/// Reference stiffness `∫_0^1 ψ_a' ψ_b' dξ`, exact.
fn reference_stiffness(basis: &LagrangeBasis) -> Vec<Vec<f64>> {
    let n = basis.len();
    let rule = GaussLegendre::new(n);
    let mut k = vec![vec![0.0; n]; n];
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    for (xi, w) in rule.mapped(0.0, 1.0) {
        basis.eval(xi, &mut vals, &mut ders);
        for a in 0..n {
            for b in 0..n {
                k[a][b] += w * ders[a] * ders[b];
            }
        }
    }
    k
}

/// Element load vectors `∫ f ψ_a dx`, one per element.
fn element_loads<S: ExactSolution + ?Sized>(exact: &S, mesh: &Mesh1D, degree: usize) -> Vec<Vec<f64>> {
    let basis = LagrangeBasis::new(degree);
    let quad = Quadrature::load(degree);
    let rule = GaussLegendre::new(quad.points);
    let n = basis.len();
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    mesh.cells()
        .map(|(a, b)| {
            let mut load = vec![0.0; n];
            quad.for_each_point(&rule, a, b, |x, w| {
                basis.eval((x - a) / (b - a), &mut vals, &mut ders);
                let f = exact.pointwise(x).source;
                for (l, v) in load.iter_mut().zip(&vals) {
                    *l += w * f * v;
                }
            });
            load
        })
        .collect()
}

/// Galerkin solve of `-u'' = f` with Dirichlet data taken from `exact`.
pub fn solve_galerkin<S: ExactSolution + ?Sized>(exact: &S, degree: usize, mesh: &Mesh1D) -> Result<FemSolution> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(domain(format!("element degree must be in 1..={MAX_DEGREE}, got {degree}")));
    }
    let basis = LagrangeBasis::new(degree);
    let k_ref = reference_stiffness(&basis);
    let loads = element_loads(exact, mesh, degree);
    let n_dof = mesh.elements() * degree + 1;
    let last = n_dof - 1;
    let left = exact.pointwise(0.0).value;
    let right = exact.pointwise(1.0).value;

    let mut coefficients = vec![0.0; n_dof];
    coefficients[0] = left;
    coefficients[last] = right;
    if n_dof == 2 {
        return Ok(FemSolution { mesh: mesh.clone(), degree, coefficients });
    }

    // unknowns are the interior dofs 1..last, shifted down by one
    let n = n_dof - 2;
    let mut matrix = BandedSpd::zeros(n, degree);
    let mut rhs = vec![0.0; n];
    for (e, (a, b)) in mesh.cells().enumerate() {
        let inv_len = 1.0 / (b - a);
        for la in 0..=degree {
            let ga = e * degree + la;
            if ga == 0 || ga == last {
                continue;
            }
            rhs[ga - 1] += loads[e][la];
            for lb in 0..=degree {
                let gb = e * degree + lb;
                let kab = k_ref[la][lb] * inv_len;
                if gb == 0 {
                    rhs[ga - 1] -= kab * left;
                } else if gb == last {
                    rhs[ga - 1] -= kab * right;
                } else if gb <= ga {
                    matrix.add(ga - 1, gb - 1, kab);
                }
            }
        }
    }
    let interior = matrix.solve(rhs)?;
    coefficients[1..last].copy_from_slice(&interior);
    Ok(FemSolution { mesh: mesh.clone(), degree, coefficients })
}

/// Galerkin solution of the Runge problem on `mesh` with the problem's degree.
pub fn assemble_and_solve(problem: &RungeProblem, mesh: &Mesh1D) -> Result<FemSolution> {
    solve_galerkin(problem, problem.degree, mesh)
}

/// Full H¹ norm of `u_h - u` with a chosen quadrature.
pub fn h1_error_with<S: ExactSolution + ?Sized>(exact: &S, sol: &FemSolution, quad: Quadrature) -> f64 {
    let basis = LagrangeBasis::new(sol.degree);
    let rule = GaussLegendre::new(quad.points);
    let n = basis.len();
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    let mut total = 0.0;
    for (e, (a, b)) in sol.mesh.cells().enumerate() {
        let local = &sol.coefficients[e * sol.degree..=(e + 1) * sol.degree];
        let inv_len = 1.0 / (b - a);
        quad.for_each_point(&rule, a, b, |x, w| {
            basis.eval((x - a) * inv_len, &mut vals, &mut ders);
            let uh: f64 = local.iter().zip(&vals).map(|(c, p)| c * p).sum();
            let duh: f64 = local.iter().zip(&ders).map(|(c, p)| c * p).sum::<f64>() * inv_len;
            let u = exact.pointwise(x);
            total += w * ((uh - u.value).powi(2) + (duh - u.derivative).powi(2));
        });
    }
    total.sqrt()
}

/// `‖u_h - u‖_{H¹(0,1)}` for the Runge solution.
pub fn h1_error(problem: &RungeProblem, sol: &FemSolution) -> f64 {
    h1_error_with(problem, sol, Quadrature::error(sol.degree))
}

/// Largest `|l(φ_i) - a(u_h, φ_i)|` over the interior basis functions.
pub fn galerkin_residual<S: ExactSolution + ?Sized>(exact: &S, sol: &FemSolution) -> f64 {
    let degree = sol.degree;
    let mesh = &sol.mesh;
    let basis = LagrangeBasis::new(degree);
    let k_ref = reference_stiffness(&basis);
    let loads = element_loads(exact, mesh, degree);
    let n_dof = sol.coefficients.len();
    let mut residual = vec![0.0; n_dof];
    for (e, (a, b)) in mesh.cells().enumerate() {
        let inv_len = 1.0 / (b - a);
        for la in 0..=degree {
            let ga = e * degree + la;
            residual[ga] += loads[e][la];
            for lb in 0..=degree {
                residual[ga] -= k_ref[la][lb] * inv_len * sol.coefficients[e * degree + lb];
            }
        }
    }
    residual[1..n_dof - 1].iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// Least-squares slope of `ln(error)` against `ln(h)` over uniform meshes
/// with `round(1/h)` elements.
pub fn convergence_rate(problem: &RungeProblem, mesh_sizes: &[f64]) -> Result<f64> {
    if mesh_sizes.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a convergence rate needs at least 3 mesh sizes, got {}",
            mesh_sizes.len()
        )));
    }
    let mut points = Vec::with_capacity(mesh_sizes.len());
    for &h in mesh_sizes {
        if !(h > 0.0 && h <= 1.0) {
            return Err(domain(format!("mesh size must lie in (0, 1], got {h}")));
        }
        let mesh = Mesh1D::uniform(element_count(h))?;
        let sol = assemble_and_solve(problem, &mesh)?;
        points.push((mesh.h_max().ln(), h1_error(problem, &sol).ln()));
    }
    Ok(least_squares_slope(&points))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::RngSeed;

    #[test]
    fn runge_pointwise_values() {
        let p = RungeProblem::new(1.0, 0.5, 1).unwrap();
        let at_peak = exact_solution(&p, 0.5);
        assert_eq!(at_peak.value, 1.0);
        assert_eq!(at_peak.derivative, 0.0);
        assert!((exact_solution(&p, 1.0).value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn runge_derivatives_match_finite_differences() {
        let p = RungeProblem::new(37.0, 0.4, 2).unwrap();
        let eps = 1e-5;
        for &x in &[0.05, 0.3, 0.4, 0.55, 0.9] {
            let u = |x| exact_solution(&p, x).value;
            let du = |x| exact_solution(&p, x).derivative;
            let fd1 = (u(x + eps) - u(x - eps)) / (2.0 * eps);
            let fd2 = (du(x + eps) - du(x - eps)) / (2.0 * eps);
            let pt = exact_solution(&p, x);
            assert!((pt.derivative - fd1).abs() < 1e-6 * (1.0 + fd1.abs()));
            assert!((pt.source + fd2).abs() < 1e-5 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn runge_problem_validation() {
        assert!(RungeProblem::new(0.0, 0.5, 1).is_err());
        assert!(RungeProblem::new(1.0, 1.0, 1).is_err());
        assert!(RungeProblem::new(1.0, 0.5, 0).is_err());
        assert!(RungeProblem::new(1.0, 0.5, 5).is_err());
    }

    #[test]
    fn polynomial_solution_derivatives() {
        // u = 1 + 2x + 3x^2 + 4x^3
        let u = PolynomialSolution::new(vec![1.0, 2.0, 3.0, 4.0]);
        let pt = u.pointwise(0.5);
        assert!((pt.value - (1.0 + 1.0 + 0.75 + 0.5)).abs() < 1e-15);
        assert!((pt.derivative - (2.0 + 3.0 + 3.0)).abs() < 1e-15);
        assert!((pt.source + (6.0 + 12.0)).abs() < 1e-15);
    }

    #[test]
    fn uniform_and_random_meshes() {
        let mut rng = RngSeed(1).substream(0);
        let m = random_mesh(0.25, 0.0, &mut rng).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.h_max(), 0.25);
        let m = random_mesh(0.25, 0.49, &mut rng).unwrap();
        assert!(m.h_max() <= 1.98 / 4.0);
        let a = random_mesh(0.1, 0.3, &mut RngSeed(5).substream(2)).unwrap();
        let b = random_mesh(0.1, 0.3, &mut RngSeed(5).substream(2)).unwrap();
        assert_eq!(a, b);
        assert!(random_mesh(1.0, 0.1, &mut rng).is_err());
        assert!(random_mesh(0.1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn element_counts() {
        assert_eq!(element_count(1.0 / 128.0), 128);
        assert_eq!(element_count(0.1), 10);
        assert_eq!(element_count(0.3), 4);
        assert_eq!(element_count(0.5), 2);
    }

    #[test]
    fn mesh_validation() {
        assert!(Mesh1D::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Mesh1D::from_nodes(vec![0.1, 1.0]).is_err());
        assert!(Mesh1D::from_nodes(vec![0.0, 0.6, 0.4, 1.0]).is_err());
        assert!(Mesh1D::uniform(0).is_err());
    }

    #[test]
    fn p1_reproduces_linear_solution() {
        let u = PolynomialSolution::new(vec![0.0, 1.0]);
        let mesh = Mesh1D::from_nodes(vec![0.0, 0.13, 0.5, 0.61, 1.0]).unwrap();
        let sol = solve_galerkin(&u, 1, &mesh).unwrap();
        for (x, c) in sol.dof_coordinates().iter().zip(sol.coefficients()) {
            assert!((x - c).abs() < 1e-12);
        }
        assert!(h1_error_with(&u, &sol, Quadrature::error(1)) < 1e-12);
    }

    #[test]
    fn p2_reproduces_quadratic_solution() {
        let u = PolynomialSolution::new(vec![0.0, 1.0, -1.0]);
        assert_eq!(u.pointwise(0.3).source, 2.0);
        let mesh = Mesh1D::uniform(3).unwrap();
        let sol = solve_galerkin(&u, 2, &mesh).unwrap();
        assert!(h1_error_with(&u, &sol, Quadrature::error(2)) < 1e-10);
    }

    #[test]
    fn degree_k_exactness_on_random_meshes() {
        for k in 1..=MAX_DEGREE {
            for seed in 0..5 {
                let coeffs: Vec<f64> = (0..=k).map(|i| 0.3 * i as f64 - 0.7 + seed as f64 * 0.1).collect();
                let u = PolynomialSolution::new(coeffs);
                let mesh = random_mesh(0.2, 0.45, &mut RngSeed(seed).substream(k as u64)).unwrap();
                let sol = solve_galerkin(&u, k, &mesh).unwrap();
                let err = h1_error_with(&u, &sol, Quadrature::error(k));
                assert!(err < 1e-9, "k = {k}, seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn galerkin_orthogonality() {
        for k in 1..=MAX_DEGREE {
            let p = RungeProblem::centered(100.0, k).unwrap();
            let mesh = random_mesh(1.0 / 12.0, 0.3, &mut RngSeed(3).substream(k as u64)).unwrap();
            let sol = assemble_and_solve(&p, &mesh).unwrap();
            let r = galerkin_residual(&p, &sol);
            assert!(r <= 1e-10, "k = {k}: residual {r}");
        }
    }

    #[test]
    fn runge_error_decreases_under_refinement() {
        let p = RungeProblem::centered(100.0, 1).unwrap();
        let err = |n| h1_error(&p, &assemble_and_solve(&p, &Mesh1D::uniform(n).unwrap()).unwrap());
        assert!(err(16) < err(8));
        assert!(err(32) < err(16));
    }

    #[test]
    fn error_quadrature_is_saturated() {
        let p = RungeProblem::centered(10.0, 2).unwrap();
        let sol = assemble_and_solve(&p, &Mesh1D::uniform(16).unwrap()).unwrap();
        let base = h1_error(&p, &sol);
        let fine = h1_error_with(&p, &sol, Quadrature::error(2).doubled());
        assert!(((base - fine) / base).abs() <= 1e-10, "{base} vs {fine}");
    }

    #[test]
    fn solution_evaluates_between_nodes() {
        let u = PolynomialSolution::new(vec![0.2, -1.0, 0.5, 0.25]);
        let mesh = Mesh1D::uniform(4).unwrap();
        let sol = solve_galerkin(&u, 3, &mesh).unwrap();
        for &x in &[0.0, 0.1, 0.25, 0.6, 1.0] {
            let (v, d) = sol.evaluate(x);
            let pt = u.pointwise(x);
            assert!((v - pt.value).abs() < 1e-12);
            assert!((d - pt.derivative).abs() < 1e-10);
        }
    }

    #[test]
    fn convergence_rate_needs_three_points() {
        let p = RungeProblem::centered(10.0, 1).unwrap();
        assert!(matches!(convergence_rate(&p, &[0.1, 0.05]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn banded_cholesky_matches_dense_solution() {
        // tridiagonal [-1, 2, -1] with known solution
        let n = 6;
        let mut m = BandedSpd::zeros(n, 1);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i > 0 { -x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { -x[i + 1] } else { 0.0 };
                2.0 * x[i] + left + right
            })
            .collect();
        let got = m.solve(b).unwrap();
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-13);
        }
        let mut singular = BandedSpd::zeros(2, 1);
        singular.add(0, 0, 1.0);
        singular.add(1, 0, 1.0);
        singular.add(1, 1, 1.0);
        assert!(matches!(singular.solve(vec![1.0, 1.0]), Err(Error::SingularSystem { .. })));
    }
}
