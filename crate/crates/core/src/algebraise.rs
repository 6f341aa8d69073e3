//! Collocation engine for gauged Schrödinger operators.
//!
//! For a candidate algebraisation `(H, f, u, V)` the engine samples nodes,
//! forms `g_j = f⁻¹ H (f · b_j∘u)` with order-2 jets, and least-squares fits
//! each `g_j` back into `V`. The fitted coefficients are the columns of the
//! operator matrix, and the worst relative misfit is the invariance residual:
//! small residual means `V` is (numerically) invariant.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{QesError, Result};
use crate::jets::Jet2;
use crate::linalg::{eig, Matrix, PivotedQr};
use crate::polybasis::{SymBasis, UniBasis};

pub const INVARIANCE_TOL: f64 = 1e-7;
pub const REALITY_TOL: f64 = 1e-7;
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Minimum distance in `x` between a node and any declared singular set.
pub const SINGULAR_CLEARANCE: f64 = 1e-3;
pub const MIN_NODES: usize = 8;
pub const SAMPLING_RETRIES: u64 = 8;

pub type PotentialFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;
pub type MatrixPotentialFn = Arc<dyn Fn(&[f64]) -> Result<[[f64; 2]; 2]> + Send + Sync>;
pub type ScalarGaugeFn = Arc<dyn Fn(&[Jet2]) -> Result<Jet2> + Send + Sync>;
pub type MatrixGaugeFn = Arc<dyn Fn(&[Jet2]) -> Result<[[Jet2; 2]; 2]> + Send + Sync>;
pub type VariableFn = Arc<dyn Fn(&[Jet2]) -> Result<Vec<Jet2>> + Send + Sync>;
pub type BasisFn = Arc<dyn Fn(&[Jet2]) -> Vec<Jet2> + Send + Sync>;
pub type DistanceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Potential {
    Scalar(PotentialFn),
    Matrix(MatrixPotentialFn),
}

/// `H = −Δ_d + V(x)` acting on one or two channels.
#[derive(Clone)]
pub struct HamiltonianSpec {
    pub coordinates: usize,
    pub potential: Potential,
}

impl HamiltonianSpec {
    pub fn scalar(coordinates: usize, v: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        HamiltonianSpec {
            coordinates,
            potential: Potential::Scalar(Arc::new(v)),
        }
    }

    pub fn two_channel(v: impl Fn(&[f64]) -> Result<[[f64; 2]; 2]> + Send + Sync + 'static) -> Self {
        HamiltonianSpec {
            coordinates: 1,
            potential: Potential::Matrix(Arc::new(v)),
        }
    }

    pub fn channels(&self) -> usize {
        match self.potential {
            Potential::Scalar(_) => 1,
            Potential::Matrix(_) => 2,
        }
    }
}

#[derive(Clone)]
pub enum Gauge {
    Scalar(ScalarGaugeFn),
    Matrix(MatrixGaugeFn),
}

/// A zero set of the gauge that nodes must keep clear of.
#[derive(Clone)]
pub struct SingularSet {
    pub label: String,
    /// Distance in `x` from a point to the set.
    pub distance: DistanceFn,
}

impl SingularSet {
    pub fn new(label: impl Into<String>, distance: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SingularSet {
            label: label.into(),
            distance: Arc::new(distance),
        }
    }

    /// Points where some coordinate is a multiple of `spacing` shifted by `offset`.
    pub fn lattice(label: impl Into<String>, offset: f64, spacing: f64) -> Self {
        SingularSet::new(label, move |x: &[f64]| {
            x.iter()
                .map(|&xi| {
                    let t = xi - offset;
                    (t - spacing * (t / spacing).round()).abs()
                })
                .fold(f64::INFINITY, f64::min)
        })
    }
}

#[derive(Clone)]
pub struct GaugeSpec {
    pub label: String,
    pub gauge: Gauge,
    pub singular: Vec<SingularSet>,
}

impl GaugeSpec {
    pub fn identity() -> Self {
        GaugeSpec::scalar("1", |_: &[Jet2]| Ok(Jet2::constant(1.0)), vec![])
    }

    pub fn scalar(
        label: impl Into<String>,
        f: impl Fn(&[Jet2]) -> Result<Jet2> + Send + Sync + 'static,
        singular: Vec<SingularSet>,
    ) -> Self {
        GaugeSpec {
            label: label.into(),
            gauge: Gauge::Scalar(Arc::new(f)),
            singular,
        }
    }

    pub fn matrix(
        label: impl Into<String>,
        f: impl Fn(&[Jet2]) -> Result<[[Jet2; 2]; 2]> + Send + Sync + 'static,
        singular: Vec<SingularSet>,
    ) -> Self {
        GaugeSpec {
            label: label.into(),
            gauge: Gauge::Matrix(Arc::new(f)),
            singular,
        }
    }
}

impl GaugeSpec {
    /// Value of a scalar gauge at a point.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let xj: Vec<Jet2> = x.iter().map(|&v| Jet2::constant(v)).collect();
        match &self.gauge {
            Gauge::Scalar(f) => Ok(f(&xj)?.v),
            Gauge::Matrix(_) => Err(QesError::Parameter("matrix gauge has no scalar value".into())),
        }
    }
}

/// The map `x ↦ u` into the polynomial variables.
#[derive(Clone)]
pub struct VariableMap {
    pub label: String,
    pub map: VariableFn,
}

impl VariableMap {
    pub fn new(label: impl Into<String>, map: impl Fn(&[Jet2]) -> Result<Vec<Jet2>> + Send + Sync + 'static) -> Self {
        VariableMap {
            label: label.into(),
            map: Arc::new(map),
        }
    }

    pub fn identity() -> Self {
        VariableMap::new("x", |x: &[Jet2]| Ok(x.to_vec()))
    }
}

#[derive(Clone)]
pub enum Basis {
    Uni(UniBasis),
    Sym(SymBasis),
    /// One univariate space per channel; elements are ordered channel by channel.
    Channels(Vec<UniBasis>),
    /// Explicit channel-vector functions of `x`, bypassing the variable map.
    Functions { channels: usize, elements: Vec<BasisFn> },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Uni(b) => b.dim(),
            Basis::Sym(b) => b.dim(),
            Basis::Channels(bs) => bs.iter().map(UniBasis::dim).sum(),
            Basis::Functions { elements, .. } => elements.len(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Basis::Uni(_) | Basis::Sym(_) => 1,
            Basis::Channels(bs) => bs.len(),
            Basis::Functions { channels, .. } => *channels,
        }
    }

    /// Element values `[element][channel]` at `(x, u)`.
    fn evaluate(&self, x: &[Jet2], u: &[Jet2]) -> Vec<Vec<Jet2>> {
        match self {
            Basis::Uni(b) => b.eval(u[0]).into_iter().map(|p| vec![p]).collect(),
            Basis::Sym(b) => b.eval(u).into_iter().map(|p| vec![p]).collect(),
            Basis::Channels(bs) => {
                let ch = bs.len();
                let mut out = Vec::with_capacity(self.dim());
                for (c, b) in bs.iter().enumerate() {
                    for p in b.eval(u[0]) {
                        let mut e = vec![Jet2::constant(0.0); ch];
                        e[c] = p;
                        out.push(e);
                    }
                }
                out
            }
            Basis::Functions { elements, .. } => elements.iter().map(|f| f(x)).collect(),
        }
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Uni(b) => write!(f, "P({})", b.degree()),
            Basis::Sym(b) => write!(f, "V_{}[N={}]", b.degree(), b.bodies()),
            Basis::Channels(bs) => {
                let parts: Vec<String> = bs.iter().map(|b| format!("P({})", b.degree())).collect();
                write!(f, "({})", parts.join(", "))
            }
            Basis::Functions { elements, channels } => write!(f, "span of {} functions in C^{channels}", elements.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SamplingDomain {
    /// Open interval in a single coordinate.
    Interval { lo: f64, hi: f64 },
    /// `lo + margin < x_1 < … < x_N < hi − margin` with adjacent gaps ≥ margin.
    Ordered { bodies: usize, lo: f64, hi: f64, margin: f64 },
}

impl SamplingDomain {
    pub fn coordinates(&self) -> usize {
        match self {
            SamplingDomain::Interval { .. } => 1,
            SamplingDomain::Ordered { bodies, .. } => *bodies,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match *self {
            SamplingDomain::Interval { lo, hi } => {
                let mut x = rng.gen_range(lo..hi);
                while x <= lo {
                    x = rng.gen_range(lo..hi);
                }
                Ok(vec![x])
            }
            SamplingDomain::Ordered { bodies, lo, hi, margin } => {
                let (a, b) = (lo + margin, hi - margin);
                if (b - a).partial_cmp(&(margin * (bodies as f64 - 1.0))) != Some(std::cmp::Ordering::Greater) {
                    return Err(QesError::Domain(format!(
                        "ordered domain ({lo}, {hi}) with margin {margin} cannot hold {bodies} points"
                    )));
                }
                for _ in 0..100_000 {
                    let mut x: Vec<f64> = (0..bodies).map(|_| rng.gen_range(a..b)).collect();
                    x.sort_by(f64::total_cmp);
                    if x.windows(2).all(|w| w[1] - w[0] >= margin) {
                        return Ok(x);
                    }
                }
                Err(QesError::Domain("could not place ordered sample points".into()))
            }
        }
    }
}

/// One candidate algebraisation: Hamiltonian, gauge, variable map, basis, domain.
#[derive(Clone)]
pub struct AlgebraisationProblem {
    pub label: String,
    pub hamiltonian: HamiltonianSpec,
    pub gauge: GaugeSpec,
    pub variables: VariableMap,
    pub basis: Basis,
    pub domain: SamplingDomain,
}

impl fmt::Debug for AlgebraisationProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgebraisationProblem")
            .field("label", &self.label)
            .field("gauge", &self.gauge.label)
            .field("variables", &self.variables.label)
            .field("basis", &self.basis)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Values of `ψ_j` and of `Hψ_j` at one point, indexed `[element][channel]`,
/// together with the gauge value there.
struct Action {
    basis: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
    h_psi: Vec<Vec<f64>>,
    gauge: GaugeValue,
}

enum GaugeValue {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl GaugeValue {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match *self {
            GaugeValue::Scalar(f) => {
                if f == 0.0 || !f.is_finite() {
                    return Err(QesError::Numerical("gauge factor vanishes at a node".into()));
                }
                Ok(rhs.iter().map(|v| v / f).collect())
            }
            GaugeValue::Matrix(m) => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det == 0.0 || !det.is_finite() {
                    return Err(QesError::Numerical("gauge matrix is singular at a node".into()));
                }
                Ok(vec![
                    (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
                    (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
                ])
            }
        }
    }
}

impl AlgebraisationProblem {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn channels(&self) -> usize {
        self.hamiltonian.channels()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(QesError::Parameter("empty basis".into()));
        }
        if self.basis.channels() != self.channels() {
            return Err(QesError::Parameter(format!(
                "basis has {} channels, Hamiltonian has {}",
                self.basis.channels(),
                self.channels()
            )));
        }
        if let Gauge::Matrix(_) = self.gauge.gauge {
            if self.channels() != 2 {
                return Err(QesError::Parameter("matrix gauge needs two channels".into()));
            }
        }
        if self.domain.coordinates() != self.hamiltonian.coordinates {
            return Err(QesError::Parameter("sampling domain dimension mismatch".into()));
        }
        Ok(())
    }

    fn clearance(&self, x: &[f64]) -> f64 {
        self.gauge
            .singular
            .iter()
            .map(|s| (s.distance)(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Evaluates every basis element through the gauge and the Hamiltonian.
    fn action(&self, x: &[f64], coeffs: Option<&[f64]>) -> Result<Action> {
        let d = x.len();
        let ch = self.channels();
        let mut basis_v = Vec::new();
        let mut psi_v: Vec<Vec<f64>> = Vec::new();
        let mut lap: Vec<Vec<f64>> = Vec::new();
        let mut gauge_v = GaugeValue::Scalar(1.0);

        for i in 0..d {
            let xj: Vec<Jet2> = x
                .iter()
                .enumerate()
                .map(|(k, &xk)| if k == i { Jet2::seed(xk) } else { Jet2::constant(xk) })
                .collect();
            let u = match self.basis {
                Basis::Functions { .. } => Vec::new(),
                _ => (self.variables.map)(&xj)?,
            };
            let mut elems = self.basis.evaluate(&xj, &u);
            if let Some(c) = coeffs {
                let mut combo = vec![Jet2::constant(0.0); ch];
                for (e, &cj) in elems.iter().zip(c) {
                    for (acc, &v) in combo.iter_mut().zip(e) {
                        *acc += cj * v;
                    }
                }
                elems = vec![combo];
            }
            let psi: Vec<Vec<Jet2>> = match &self.gauge.gauge {
                Gauge::Scalar(f) => {
                    let fx = f(&xj)?;
                    if i == 0 {
                        gauge_v = GaugeValue::Scalar(fx.v);
                    }
                    elems.iter().map(|e| e.iter().map(|&p| fx * p).collect()).collect()
                }
                Gauge::Matrix(f) => {
                    let m = f(&xj)?;
                    if i == 0 {
                        gauge_v = GaugeValue::Matrix([[m[0][0].v, m[0][1].v], [m[1][0].v, m[1][1].v]]);
                    }
                    elems
                        .iter()
                        .map(|e| {
                            vec![m[0][0] * e[0] + m[0][1] * e[1], m[1][0] * e[0] + m[1][1] * e[1]]
                        })
                        .collect()
                }
            };
            if i == 0 {
                basis_v = elems.iter().map(|e| e.iter().map(|p| p.v).collect()).collect();
                psi_v = psi.iter().map(|e| e.iter().map(|p| p.v).collect()).collect();
                lap = vec![vec![0.0; ch]; psi.len()];
            }
            for (acc, e) in lap.iter_mut().zip(&psi) {
                for (a, p) in acc.iter_mut().zip(e) {
                    *a += p.d2;
                }
            }
        }

        let h_psi: Vec<Vec<f64>> = match &self.hamiltonian.potential {
            Potential::Scalar(v) => {
                let vx = v(x)?;
                psi_v
                    .iter()
                    .zip(&lap)
                    .map(|(p, l)| p.iter().zip(l).map(|(pc, lc)| -lc + vx * pc).collect())
                    .collect()
            }
            Potential::Matrix(v) => {
                let vx = v(x)?;
                psi_v
                    .iter()
                    .zip(&lap)
                    .map(|(p, l)| {
                        vec![
                            -l[0] + vx[0][0] * p[0] + vx[0][1] * p[1],
                            -l[1] + vx[1][0] * p[0] + vx[1][1] * p[1],
                        ]
                    })
                    .collect()
            }
        };

        Ok(Action {
            basis: basis_v,
            psi: psi_v,
            h_psi,
            gauge: gauge_v,
        })
    }

    fn draw_points(&self, rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<Vec<f64>>> {
        let mut nodes = Vec::with_capacity(count);
        let mut rejected = 0usize;
        while nodes.len() < count {
            let x = self.domain.draw(rng)?;
            if self.clearance(&x) >= SINGULAR_CLEARANCE {
                nodes.push(x);
            } else {
                rejected += 1;
                if rejected > 100 * count + 1000 {
                    return Err(QesError::Domain(
                        "sampling domain is covered by the gauge singular locus".into(),
                    ));
                }
            }
        }
        Ok(nodes)
    }

    fn design_matrix(&self, nodes: &[Vec<f64>]) -> Result<Matrix> {
        let ch = self.channels();
        let dim = self.dim();
        let mut b = Matrix::zeros(nodes.len() * ch, dim);
        for (n, x) in nodes.iter().enumerate() {
            let xj: Vec<Jet2> = x.iter().map(|&v| Jet2::constant(v)).collect();
            let u = match self.basis {
                Basis::Functions { .. } => Vec::new(),
                _ => (self.variables.map)(&xj)?,
            };
            for (j, e) in self.basis.evaluate(&xj, &u).iter().enumerate() {
                for c in 0..ch {
                    b[(n * ch + c, j)] = e[c].v;
                }
            }
        }
        Ok(b)
    }
}

fn node_rng(seed: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    rng
}

fn describe_nodes(nodes: &[Vec<f64>]) -> String {
    let shown: Vec<String> = nodes
        .iter()
        .take(6)
        .map(|x| {
            let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
            format!("({})", parts.join(", "))
        })
        .collect();
    let more = if nodes.len() > 6 { format!(" … {} nodes", nodes.len()) } else { String::new() };
    format!("[{}{}]", shown.join(", "), more)
}

/// `g_j(x) = f⁻¹ H (f·b_j)` at one point, indexed `[element][channel]`.
pub fn gauged_action(problem: &AlgebraisationProblem, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let act = problem.action(x, None)?;
    act.h_psi.iter().map(|h| act.gauge.solve(h)).collect()
}

/// Deterministic collocation nodes whose basis-evaluation matrix has full
/// column rank, retrying with fresh sub-streams of `seed` when it does not.
pub fn sample_nodes(problem: &AlgebraisationProblem, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    problem.validate()?;
    let dim = problem.dim();
    if count < 2 * dim {
        return Err(QesError::Parameter(format!(
            "{count} nodes cannot oversample a {dim}-dimensional basis"
        )));
    }
    let mut last = Vec::new();
    let mut last_rank = 0;
    for attempt in 0..SAMPLING_RETRIES {
        let nodes = problem.draw_points(&mut node_rng(seed, attempt), count)?;
        let qr = PivotedQr::factor(&problem.design_matrix(&nodes)?);
        if qr.is_full_rank() {
            return Ok(nodes);
        }
        last_rank = qr.rank();
        last = nodes;
    }
    Err(QesError::Conditioning {
        rank: last_rank,
        cols: dim,
        nodes: describe_nodes(&last),
    })
}

/// Matrix of the gauged operator on the basis, with its invariance residual.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: Matrix,
    pub residual: f64,
    pub column_residuals: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
}

pub fn default_node_count(dim: usize) -> usize {
    (2 * dim).max(MIN_NODES)
}

pub fn build_matrix(problem: &AlgebraisationProblem, seed: u64) -> Result<OperatorMatrix> {
    let dim = problem.dim();
    let ch = problem.channels();
    let nodes = sample_nodes(problem, default_node_count(dim), seed)?;
    let rows = nodes.len() * ch;
    let mut b = Matrix::zeros(rows, dim);
    let mut g = Matrix::zeros(rows, dim);
    for (n, x) in nodes.iter().enumerate() {
        let act = problem.action(x, None)?;
        for j in 0..dim {
            let gj = act.gauge.solve(&act.h_psi[j])?;
            for c in 0..ch {
                b[(n * ch + c, j)] = act.basis[j][c];
                g[(n * ch + c, j)] = gj[c];
            }
        }
    }
    if !g.is_finite() {
        return Err(QesError::Numerical("non-finite operator action at a node".into()));
    }

    let qr = PivotedQr::factor(&b);
    if !qr.is_full_rank() {
        return Err(QesError::Conditioning {
            rank: qr.rank(),
            cols: dim,
            nodes: describe_nodes(&nodes),
        });
    }
    let mut matrix = Matrix::zeros(dim, dim);
    let mut column_residuals = Vec::with_capacity(dim);
    for j in 0..dim {
        let gj = g.column(j);
        let cj = qr.solve(&gj);
        let fit = b.mul_vec(&cj);
        let miss = fit.iter().zip(&gj).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let gnorm = gj.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bnorm = b.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = gnorm.max(bnorm).max(f64::MIN_POSITIVE);
        column_residuals.push(miss / scale);
        for (i, c) in cj.into_iter().enumerate() {
            matrix[(i, j)] = c;
        }
    }
    let residual = column_residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(OperatorMatrix {
        matrix,
        residual,
        column_residuals,
        nodes,
    })
}

/// Real eigenvalue with its coefficient vector in the basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub value: f64,
    pub coefficients: Vec<f64>,
}

fn certify(op: &OperatorMatrix, tol: f64) -> Result<()> {
    if op.residual > tol || op.residual.is_nan() {
        return Err(QesError::NotQes {
            residual: op.residual,
            tolerance: tol,
        });
    }
    Ok(())
}

/// Sorted real eigenvalues of a certified operator matrix.
pub fn spectrum(op: &OperatorMatrix, tol: f64) -> Result<Vec<f64>> {
    Ok(eigenpairs(op, tol)?.into_iter().map(|p| p.value).collect())
}

pub fn eigenpairs(op: &OperatorMatrix, tol: f64) -> Result<Vec<Eigenpair>> {
    certify(op, tol)?;
    let e = eig(&op.matrix)?;
    let max_re = e.values.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let worst = e.max_imag();
    if worst > REALITY_TOL * (1.0 + max_re) {
        let listing: Vec<String> = e.values.iter().map(|z| format!("{:.6}{:+.3e}i", z.re, z.im)).collect();
        return Err(QesError::Numerical(format!(
            "complex eigenvalues in a certified sector (max |Im| = {worst:.3e}): {}",
            listing.join(", ")
        )));
    }
    Ok(e
        .values
        .iter()
        .zip(&e.vectors)
        .map(|(z, v)| {
            // rotate so the largest component is real, then drop the (tiny) imaginary parts
            let pivot = v
                .iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or_default();
            let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { 1.0.into() };
            Eigenpair {
                value: z.re,
                coefficients: v.iter().map(|c| (c * phase).re).collect(),
            }
        })
        .collect())
}

/// `ψ(x) = f(x)·p(u(x))` for the basis combination `p = Σ c_j b_j`, per channel.
pub fn reconstruct(problem: &AlgebraisationProblem, coefficients: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_coefficients(problem, coefficients)?;
    Ok(problem.action(x, Some(coefficients))?.psi.remove(0))
}

fn check_coefficients(problem: &AlgebraisationProblem, coefficients: &[f64]) -> Result<()> {
    if coefficients.len() != problem.dim() {
        return Err(QesError::Parameter(format!(
            "{} coefficients for a {}-dimensional basis",
            coefficients.len(),
            problem.dim()
        )));
    }
    Ok(())
}

/// Points drawn from the sampling domain on a stream disjoint from the nodes.
pub fn fresh_points(problem: &AlgebraisationProblem, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    problem.draw_points(&mut node_rng(seed, 1 << 32), count)
}

/// `max |Hψ − Eψ| / ((1 + |E|)·max |ψ|)` over the given points.
pub fn schrodinger_residual(
    problem: &AlgebraisationProblem,
    coefficients: &[f64],
    energy: f64,
    points: &[Vec<f64>],
) -> Result<f64> {
    check_coefficients(problem, coefficients)?;
    let mut worst: f64 = 0.0;
    let mut psi_max: f64 = 0.0;
    for x in points {
        let act = problem.action(x, Some(coefficients))?;
        for (p, hp) in act.psi[0].iter().zip(&act.h_psi[0]) {
            worst = worst.max((hp - energy * p).abs());
            psi_max = psi_max.max(p.abs());
        }
    }
    if psi_max == 0.0 {
        return Ok(0.0);
    }
    Ok(worst / ((1.0 + energy.abs()) * psi_max))
}

/// A certified sector: dimension, invariance residual and sorted spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorResult {
    pub label: String,
    pub dim: usize,
    pub residual: f64,
    pub eigenvalues: Vec<f64>,
}

/// Builds, certifies and diagonalizes one problem.
pub fn solve_sector(problem: &AlgebraisationProblem, seed: u64, tol: f64) -> Result<SectorResult> {
    let op = build_matrix(problem, seed)?;
    Ok(SectorResult {
        label: problem.label.clone(),
        dim: problem.dim(),
        residual: op.residual,
        eigenvalues: spectrum(&op, tol)?,
    })
}
