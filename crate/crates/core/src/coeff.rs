//! Coefficient data `aᵢⱼ`, `bⱼ`, `c` of the operator
//! `𝓐u = Σ aᵢⱼ ∂ᵢⱼu + Σ bⱼ ∂ⱼu + c u`.
//!
//! Fields are sampled at every node of a grid (interior nodes first, then
//! boundary nodes, matching [`DomainGrid`] numbering). Symmetry of `a` is
//! structural: only `a11`, `a12`, `a22` are stored.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_coeff, CoeffExpr, ParseError};
use crate::grid::{enclosing_ball, BallGrid, DomainGrid, GridError, NodeRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoeffError {
    #[error("coefficient `{name}`: {source}")]
    Parse {
        name: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("coefficient `{name}` has {got} samples, grid has {expected} nodes")]
    Length {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("coefficient `{name}` is not finite at node {node}")]
    NonFinite { name: &'static str, node: usize },
    #[error("reaction coefficient c = {value} > 0 at node {node}")]
    PositiveReaction { node: usize, value: f64 },
    #[error("a12 and a21 differ at node {node}")]
    AsymmetricInput { node: usize },
    #[error("ellipticity constant must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("at least 8 sample directions are required, got {0}")]
    TooFewDirections(usize),
    #[error("blending collar {collar} is thinner than two mesh cells (h = {h})")]
    BlendFailure { collar: f64, h: f64 },
    #[error("mollifier support 1/{k} leaves the extended grid at node {node}")]
    SupportOverrun { k: u32, node: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Coefficients as expressions in `x`, `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientExprs {
    pub a11: CoeffExpr,
    pub a12: CoeffExpr,
    pub a22: CoeffExpr,
    pub b1: CoeffExpr,
    pub b2: CoeffExpr,
    pub c: CoeffExpr,
    pub lambda: f64,
}

/// Source text of every coefficient, as it appears in configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientSource {
    pub a11: String,
    pub a12: String,
    pub a22: String,
    pub b1: String,
    pub b2: String,
    pub c: String,
}

impl CoefficientExprs {
    pub fn parse(src: &CoefficientSource, lambda: f64) -> Result<Self, CoeffError> {
        let p = |name: &'static str, s: &str| {
            parse_coeff(s).map_err(|source| CoeffError::Parse { name, source })
        };
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CoeffError::InvalidLambda(lambda));
        }
        Ok(CoefficientExprs {
            a11: p("a11", &src.a11)?,
            a12: p("a12", &src.a12)?,
            a22: p("a22", &src.a22)?,
            b1: p("b1", &src.b1)?,
            b2: p("b2", &src.b2)?,
            c: p("c", &src.c)?,
            lambda,
        })
    }

    /// Samples every expression at the grid nodes.
    pub fn sample(&self, grid: &DomainGrid) -> Result<CoefficientField, CoeffError> {
        let s = |e: &CoeffExpr| grid.sample_nodes(|x, y| e.eval(x, y));
        let mut field = CoefficientField::from_samples(
            grid.n_nodes(),
            s(&self.a11),
            s(&self.a12),
            s(&self.a22),
            s(&self.b1),
            s(&self.b2),
            s(&self.c),
            self.lambda,
        )?;
        field.exprs = Some(Arc::new(self.clone()));
        Ok(field)
    }
}

/// Node-sampled coefficients with `c ≤ 0` everywhere.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    c: Vec<f64>,
    lambda: f64,
    exprs: Option<Arc<CoefficientExprs>>,
}

impl CoefficientField {
    #[allow(clippy::too_many_arguments)]
    pub fn from_samples(
        n_nodes: usize,
        a11: Vec<f64>,
        a12: Vec<f64>,
        a22: Vec<f64>,
        b1: Vec<f64>,
        b2: Vec<f64>,
        c: Vec<f64>,
        lambda: f64,
    ) -> Result<Self, CoeffError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CoeffError::InvalidLambda(lambda));
        }
        for (name, v) in [
            ("a11", &a11),
            ("a12", &a12),
            ("a22", &a22),
            ("b1", &b1),
            ("b2", &b2),
            ("c", &c),
        ] {
            if v.len() != n_nodes {
                return Err(CoeffError::Length {
                    name,
                    expected: n_nodes,
                    got: v.len(),
                });
            }
            if let Some(node) = v.iter().position(|x| !x.is_finite()) {
                return Err(CoeffError::NonFinite { name, node });
            }
        }
        if let Some(node) = c.iter().position(|&x| x > 0.0) {
            return Err(CoeffError::PositiveReaction {
                node,
                value: c[node],
            });
        }
        Ok(CoefficientField {
            a11,
            a12,
            a22,
            b1,
            b2,
            c,
            lambda,
            exprs: None,
        })
    }

    /// Accepts a full (possibly asymmetric) diffusion matrix and rejects it
    /// unless `a12 == a21` at every node.
    #[allow(clippy::too_many_arguments)]
    pub fn from_matrix_samples(
        n_nodes: usize,
        a11: Vec<f64>,
        a12: Vec<f64>,
        a21: Vec<f64>,
        a22: Vec<f64>,
        b1: Vec<f64>,
        b2: Vec<f64>,
        c: Vec<f64>,
        lambda: f64,
    ) -> Result<Self, CoeffError> {
        if a21.len() != a12.len() {
            return Err(CoeffError::Length {
                name: "a21",
                expected: a12.len(),
                got: a21.len(),
            });
        }
        if let Some(node) = a12.iter().zip(&a21).position(|(p, q)| p != q) {
            return Err(CoeffError::AsymmetricInput { node });
        }
        Self::from_samples(n_nodes, a11, a12, a22, b1, b2, c, lambda)
    }

    /// Constant coefficients on every node of `grid`.
    pub fn constant(
        grid: &DomainGrid,
        a: [[f64; 2]; 2],
        b: [f64; 2],
        c: f64,
        lambda: f64,
    ) -> Result<Self, CoeffError> {
        let n = grid.n_nodes();
        Self::from_matrix_samples(
            n,
            vec![a[0][0]; n],
            vec![a[0][1]; n],
            vec![a[1][0]; n],
            vec![a[1][1]; n],
            vec![b[0]; n],
            vec![b[1]; n],
            vec![c; n],
            lambda,
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.a11.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn exprs(&self) -> Option<&CoefficientExprs> {
        self.exprs.as_deref()
    }

    pub fn a11(&self) -> &[f64] {
        &self.a11
    }

    pub fn a12(&self) -> &[f64] {
        &self.a12
    }

    pub fn a22(&self) -> &[f64] {
        &self.a22
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `[[a11, a12], [a12, a22]]` at node `k`.
    pub fn matrix(&self, k: usize) -> [[f64; 2]; 2] {
        [[self.a11[k], self.a12[k]], [self.a12[k], self.a22[k]]]
    }

    pub fn max_drift(&self) -> f64 {
        self.b1
            .iter()
            .chain(&self.b2)
            .fold(0.0f64, |m, b| m.max(b.abs()))
    }

    /// Smallest eigenvalue of the diffusion matrix at node `k`.
    pub fn min_eigenvalue(&self, k: usize) -> f64 {
        sym2_min_eigenvalue(self.a11[k], self.a12[k], self.a22[k])
    }

    /// Copy restricted to the nodes listed in `nodes`, keeping `lambda`.
    pub fn restrict(&self, nodes: &[usize]) -> CoefficientField {
        let pick = |v: &[f64]| nodes.iter().map(|&k| v[k]).collect();
        CoefficientField {
            a11: pick(&self.a11),
            a12: pick(&self.a12),
            a22: pick(&self.a22),
            b1: pick(&self.b1),
            b2: pick(&self.b2),
            c: pick(&self.c),
            lambda: self.lambda,
            exprs: self.exprs.clone(),
        }
    }
}

/// Minimum eigenvalue of `[[p, q], [q, r]]`.
pub fn sym2_min_eigenvalue(p: f64, q: f64, r: f64) -> f64 {
    0.5 * (p + r) - (0.5 * (p - r)).hypot(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCertificate {
    /// Minimum of `Σ aᵢⱼ ξᵢ ξⱼ` over nodes and sampled unit directions.
    pub min_quadform: f64,
    /// Exact nodewise minimum eigenvalue; decides `pass`.
    pub min_eigenvalue: f64,
    pub worst_node: usize,
    pub lambda: f64,
    pub pass: bool,
}

pub fn check_ellipticity(
    field: &CoefficientField,
    grid: &DomainGrid,
    n_dirs: usize,
) -> Result<EllipticityCertificate, CoeffError> {
    if n_dirs < 8 {
        return Err(CoeffError::TooFewDirections(n_dirs));
    }
    if field.n_nodes() != grid.n_nodes() {
        return Err(CoeffError::Length {
            name: "a11",
            expected: grid.n_nodes(),
            got: field.n_nodes(),
        });
    }
    let dirs: Vec<(f64, f64)> = (0..n_dirs)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / n_dirs as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let mut min_quadform = f64::INFINITY;
    let mut min_eigenvalue = f64::INFINITY;
    let mut worst_node = 0;
    for k in 0..field.n_nodes() {
        let [[p, q], [_, r]] = field.matrix(k);
        for &(cx, cy) in &dirs {
            min_quadform = min_quadform.min(p * cx * cx + 2.0 * q * cx * cy + r * cy * cy);
        }
        let e = sym2_min_eigenvalue(p, q, r);
        if e < min_eigenvalue {
            min_eigenvalue = e;
            worst_node = k;
        }
    }
    Ok(EllipticityCertificate {
        min_quadform,
        min_eigenvalue,
        worst_node,
        lambda: field.lambda,
        pass: min_eigenvalue >= field.lambda,
    })
}

/// Partition of unity used to extend coefficients past the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionRecipe {
    /// Width of the band outside the domain over which the extension ramps
    /// from the clamped data to `(Λ/2)·I`.
    pub collar: f64,
}

impl ExtensionRecipe {
    /// Collar of half the ball margin.
    pub fn for_margin(margin: f64) -> Self {
        ExtensionRecipe {
            collar: 0.5 * margin,
        }
    }

    /// Weight `φ₁` of the clamped data at distance `d` from the domain;
    /// `φ₂ = 1 − φ₁`. C¹ in `d`.
    pub fn phi1(&self, d: f64) -> f64 {
        let t = d / self.collar;
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * (3.0 - 2.0 * t)
        }
    }
}

/// Coefficients extended to an enclosing ball.
#[derive(Debug, Clone)]
pub struct BallExtension {
    pub domain: DomainGrid,
    pub ball: BallGrid,
    /// Extended field on the ball nodes, with ellipticity constant `Λ/2`.
    pub field: CoefficientField,
    /// `φ₁` at every ball node.
    pub phi1: Vec<f64>,
    pub recipe: ExtensionRecipe,
}

/// Extends `field` from `grid` to `ball`: exact copy on the domain nodes,
/// nearest-node clamp blended toward `(Λ/2)·I` across the collar, drift and
/// reaction extended by zero.
pub fn extend_to_ball(
    field: &CoefficientField,
    grid: &DomainGrid,
    ball: &BallGrid,
    recipe: ExtensionRecipe,
) -> Result<BallExtension, CoeffError> {
    if field.n_nodes() != grid.n_nodes() {
        return Err(CoeffError::Length {
            name: "a11",
            expected: grid.n_nodes(),
            got: field.n_nodes(),
        });
    }
    if recipe.collar.is_nan() || recipe.collar < 2.0 * grid.h() {
        return Err(CoeffError::BlendFailure {
            collar: recipe.collar,
            h: grid.h(),
        });
    }
    let nb = ball.grid.n_nodes();
    let mut source: Vec<Option<usize>> = vec![None; nb];
    for (k, &b) in ball.injection.iter().enumerate() {
        source[b] = Some(k);
    }
    let half = 0.5 * field.lambda;
    let geom = grid.geometry();
    let bnodes: Vec<usize> = (grid.n_interior()..grid.n_nodes()).collect();

    let mut out = CoefficientField {
        a11: vec![0.0; nb],
        a12: vec![0.0; nb],
        a22: vec![0.0; nb],
        b1: vec![0.0; nb],
        b2: vec![0.0; nb],
        c: vec![0.0; nb],
        lambda: half,
        exprs: None,
    };
    let mut phi1 = vec![0.0; nb];
    for (kb, node) in ball.grid.nodes().iter().enumerate() {
        if let Some(k) = source[kb] {
            out.a11[kb] = field.a11[k];
            out.a12[kb] = field.a12[k];
            out.a22[kb] = field.a22[k];
            out.b1[kb] = field.b1[k];
            out.b2[kb] = field.b2[k];
            out.c[kb] = field.c[k];
            phi1[kb] = 1.0;
            continue;
        }
        let p = [node.x, node.y];
        let d = if geom.contains(p) {
            0.0
        } else {
            geom.distance_to_boundary(p)
        };
        let w = recipe.phi1(d);
        phi1[kb] = w;
        let near = nearest_node(grid, &bnodes, p);
        out.a11[kb] = w * field.a11[near] + (1.0 - w) * half;
        out.a12[kb] = w * field.a12[near];
        out.a22[kb] = w * field.a22[near] + (1.0 - w) * half;
    }
    Ok(BallExtension {
        domain: grid.clone(),
        ball: ball.clone(),
        field: out,
        phi1,
        recipe,
    })
}

fn nearest_node(grid: &DomainGrid, candidates: &[usize], p: [f64; 2]) -> usize {
    let mut best = (f64::INFINITY, candidates[0]);
    for &k in candidates {
        let n = grid.node(k);
        let d = (n.x - p[0]).powi(2) + (n.y - p[1]).powi(2);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Convenience: enclosing ball with `margin` plus extension with collar
/// `margin / 2`.
pub fn extend_with_margin(
    field: &CoefficientField,
    grid: &DomainGrid,
    margin: f64,
) -> Result<BallExtension, CoeffError> {
    let ball = enclosing_ball(grid, margin)?;
    extend_to_ball(field, grid, &ball, ExtensionRecipe::for_margin(margin))
}

/// Discrete bump mollifier with support radius `1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub k: u32,
}

impl MollifierSpec {
    /// Lattice offsets `(di, dj)` and weights of the kernel at mesh width
    /// `h`, renormalized to unit mass.
    pub fn weights(&self, h: f64) -> Vec<(i64, i64, f64)> {
        let radius = 1.0 / self.k as f64;
        let m = (radius / h).ceil() as i64;
        let mut w = Vec::new();
        for dj in -m..=m {
            for di in -m..=m {
                let r = h * ((di * di + dj * dj) as f64).sqrt();
                let s = r * self.k as f64;
                if s < 1.0 {
                    w.push((di, dj, (-1.0 / (1.0 - s * s)).exp()));
                }
            }
        }
        let total: f64 = w.iter().map(|e| e.2).sum();
        for e in &mut w {
            e.2 /= total;
        }
        w
    }
}

/// Convolves the extended diffusion coefficients with the mollifier and
/// returns the result on the nodes of the original domain grid. `b` and `c`
/// are carried over unchanged.
pub fn mollify(ext: &BallExtension, moll: MollifierSpec) -> Result<CoefficientField, CoeffError> {
    let weights = moll.weights(ext.ball.grid.h());
    let g = &ext.domain;
    let f = &ext.field;
    let n = g.n_nodes();
    let mut out = ext.field.restrict(&ext.ball.injection);
    out.exprs = None;
    for k in 0..n {
        let centre = ext.ball.grid.node(ext.ball.injection[k]);
        let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
        for &(di, dj, w) in &weights {
            let q = ext
                .ball
                .grid
                .index_of(centre.i - di, centre.j - dj)
                .ok_or(CoeffError::SupportOverrun { k: moll.k, node: k })?;
            s11 += w * f.a11[q];
            s12 += w * f.a12[q];
            s22 += w * f.a22[q];
        }
        out.a11[k] = s11;
        out.a12[k] = s12;
        out.a22[k] = s22;
    }
    Ok(out)
}

/// Sup-distance between two fields' diffusion coefficients.
pub fn diffusion_distance(a: &CoefficientField, b: &CoefficientField) -> f64 {
    let d = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    d(&a.a11, &b.a11)
        .max(d(&a.a12, &b.a12))
        .max(d(&a.a22, &b.a22))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonLipschitzWarning {
    pub node: usize,
    pub quotient: f64,
}

/// Drift of the divergence-form rewrite, at interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReduction {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub warnings: Vec<NonLipschitzWarning>,
}

/// `b̃ⱼ = bⱼ − Σᵢ Dᵢ aᵢⱼ` with difference-quotient derivatives.
///
/// Central differences where both neighbours are interior; second-order
/// one-sided differences over interior nodes on the layer next to the
/// boundary; central differences through boundary samples as a last resort.
/// Difference quotients larger than `lipschitz_bound` raise a non-fatal
/// warning.
pub fn divergence_reduction(
    field: &CoefficientField,
    grid: &DomainGrid,
    lipschitz_bound: f64,
) -> DivergenceReduction {
    let h = grid.h();
    let n = grid.n_interior();
    let mut b1 = Vec::with_capacity(n);
    let mut b2 = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for k in 0..n {
        let mut worst = 0.0f64;
        let mut d = |s: &[f64], di: i64, dj: i64| {
            let (v, q) = directional_derivative(grid, s, k, di, dj, h);
            worst = worst.max(q);
            v
        };
        let dx_a11 = d(field.a11(), 1, 0);
        let dy_a12 = d(field.a12(), 0, 1);
        let dx_a12 = d(field.a12(), 1, 0);
        let dy_a22 = d(field.a22(), 0, 1);
        b1.push(field.b1[k] - (dx_a11 + dy_a12));
        b2.push(field.b2[k] - (dx_a12 + dy_a22));
        if worst > lipschitz_bound {
            warnings.push(NonLipschitzWarning {
                node: k,
                quotient: worst,
            });
        }
    }
    DivergenceReduction { b1, b2, warnings }
}

/// Derivative of `s` at node `k` along `(di, dj)` and the largest one-sided
/// difference quotient seen.
fn directional_derivative(
    grid: &DomainGrid,
    s: &[f64],
    k: usize,
    di: i64,
    dj: i64,
    h: f64,
) -> (f64, f64) {
    let idx = |r: Option<NodeRef>| match r {
        Some(NodeRef::Interior(q)) => Some((q, true)),
        Some(NodeRef::Boundary(b)) => Some((grid.n_interior() + b, false)),
        None => None,
    };
    let fwd = idx(grid.neighbor(k, di, dj)).expect("interior node has all stencil neighbours");
    let bwd = idx(grid.neighbor(k, -di, -dj)).expect("interior node has all stencil neighbours");
    let quotient = ((s[fwd.0] - s[k]).abs() / h).max((s[k] - s[bwd.0]).abs() / h);
    let value = match (fwd.1, bwd.1) {
        (true, true) => (s[fwd.0] - s[bwd.0]) / (2.0 * h),
        (false, true) => match idx(grid.neighbor(k, -2 * di, -2 * dj)) {
            Some((bb, true)) => (3.0 * s[k] - 4.0 * s[bwd.0] + s[bb]) / (2.0 * h),
            _ => (s[fwd.0] - s[bwd.0]) / (2.0 * h),
        },
        (true, false) => match idx(grid.neighbor(k, 2 * di, 2 * dj)) {
            Some((ff, true)) => (-3.0 * s[k] + 4.0 * s[fwd.0] - s[ff]) / (2.0 * h),
            _ => (s[fwd.0] - s[bwd.0]) / (2.0 * h),
        },
        (false, false) => (s[fwd.0] - s[bwd.0]) / (2.0 * h),
    };
    (value, quotient)
}

/// Built-in coefficient sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Heat,
    Drift,
    Damped,
    Anisotropic,
    Variable,
    LipschitzRough,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Heat,
        Preset::Drift,
        Preset::Damped,
        Preset::Anisotropic,
        Preset::Variable,
        Preset::LipschitzRough,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Heat => "heat",
            Preset::Drift => "drift",
            Preset::Damped => "damped",
            Preset::Anisotropic => "anisotropic",
            Preset::Variable => "variable",
            Preset::LipschitzRough => "lipschitz-rough",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Heat => "Laplacian: a = I, b = 0, c = 0",
            Preset::Drift => "Laplacian with strong drift b1 = 50",
            Preset::Damped => "Laplacian with reaction c = -5",
            Preset::Anisotropic => "constant a = [[2, 0.5], [0.5, 1]]",
            Preset::Variable => "a11 = 1 + x^2/2, a12 = x y / 4, a22 = 1 + y^2/2",
            Preset::LipschitzRough => "a11 = 1 + |x - 1/2| (Lipschitz, not C^1)",
        }
    }

    /// `true` if every coefficient is constant in space.
    pub fn is_constant(self) -> bool {
        !matches!(self, Preset::Variable | Preset::LipschitzRough)
    }

    pub fn source(self) -> (CoefficientSource, f64) {
        let s = |a11: &str, a12: &str, a22: &str, b1: &str, c: &str| CoefficientSource {
            a11: a11.into(),
            a12: a12.into(),
            a22: a22.into(),
            b1: b1.into(),
            b2: "0".into(),
            c: c.into(),
        };
        match self {
            Preset::Heat => (s("1", "0", "1", "0", "0"), 1.0),
            Preset::Drift => (s("1", "0", "1", "50", "0"), 1.0),
            Preset::Damped => (s("1", "0", "1", "0", "-5"), 1.0),
            // eigenvalues (3 ± √2)/2, the smaller ≈ 0.793
            Preset::Anisotropic => (s("2", "0.5", "1", "0", "0"), 0.75),
            // a11, a22 ≥ 1 and |a12| ≤ 1/4 on the unit square
            Preset::Variable => (s("1 + x^2/2", "x*y/4", "1 + y^2/2", "0", "0"), 0.75),
            Preset::LipschitzRough => (s("1 + abs(x - 1/2)", "0", "1", "0", "0"), 1.0),
        }
    }

    pub fn exprs(self) -> CoefficientExprs {
        let (src, lambda) = self.source();
        CoefficientExprs::parse(&src, lambda).expect("preset expressions parse")
    }

    pub fn sample(self, grid: &DomainGrid) -> Result<CoefficientField, CoeffError> {
        self.exprs().sample(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, ShapeSpec};

    fn square(h: f64) -> DomainGrid {
        build_domain(&ShapeSpec::unit_square(), h).unwrap()
    }

    #[test]
    fn ellipticity_examples() {
        let g = square(0.25);
        let id =
            CoefficientField::constant(&g, [[1.0, 0.0], [0.0, 1.0]], [0.0; 2], 0.0, 1.0).unwrap();
        let c = check_ellipticity(&id, &g, 8).unwrap();
        assert_eq!(c.min_eigenvalue, 1.0);
        assert!((c.min_quadform - 1.0).abs() < 1e-15);
        assert!(c.pass);

        let f =
            CoefficientField::constant(&g, [[2.0, 1.0], [1.0, 2.0]], [0.0; 2], 0.0, 1.0).unwrap();
        let c = check_ellipticity(&f, &g, 360).unwrap();
        assert_eq!(c.min_eigenvalue, 1.0);
        assert!(c.pass);

        let f =
            CoefficientField::constant(&g, [[1.5, 0.3], [0.3, 1.0]], [0.0; 2], 0.0, 0.5).unwrap();
        let c = check_ellipticity(&f, &g, 360).unwrap();
        let closed = (2.5 - 0.61f64.sqrt()) / 2.0;
        assert!((c.min_eigenvalue - closed).abs() < 1e-15);
        assert!(c.min_quadform >= c.min_eigenvalue - 1e-12);

        assert_eq!(
            check_ellipticity(&f, &g, 4).unwrap_err(),
            CoeffError::TooFewDirections(4)
        );
    }

    #[test]
    fn asymmetric_and_positive_reaction_rejected() {
        let g = square(0.5);
        let err = CoefficientField::constant(&g, [[1.0, 0.2], [0.1, 1.0]], [0.0; 2], 0.0, 0.5);
        assert!(matches!(err, Err(CoeffError::AsymmetricInput { node: 0 })));
        let err = CoefficientField::constant(&g, [[1.0, 0.0], [0.0, 1.0]], [0.0; 2], 0.5, 0.5);
        assert!(matches!(err, Err(CoeffError::PositiveReaction { .. })));
    }

    #[test]
    fn parse_errors_name_the_coefficient() {
        let (mut src, l) = Preset::Heat.source();
        src.a22 = "1 + ".into();
        match CoefficientExprs::parse(&src, l) {
            Err(CoeffError::Parse { name, source }) => {
                assert_eq!(name, "a22");
                assert_eq!(source.column(), 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extension_is_identity_on_domain() {
        let g = build_domain(&ShapeSpec::l_shape(), 1.0 / 16.0).unwrap();
        for p in Preset::ALL {
            let f = p.sample(&g).unwrap();
            let ext = extend_with_margin(&f, &g, 0.5).unwrap();
            let back = ext.field.restrict(&ext.ball.injection);
            for k in 0..g.n_nodes() {
                assert_eq!(back.a11()[k].to_bits(), f.a11()[k].to_bits());
                assert_eq!(back.a12()[k].to_bits(), f.a12()[k].to_bits());
                assert_eq!(back.a22()[k].to_bits(), f.a22()[k].to_bits());
                assert_eq!(back.b1()[k].to_bits(), f.b1()[k].to_bits());
                assert_eq!(back.c()[k].to_bits(), f.c()[k].to_bits());
            }
        }
    }

    #[test]
    fn extension_keeps_half_ellipticity() {
        let g = square(1.0 / 16.0);
        let f = Preset::Heat.sample(&g).unwrap();
        let ext = extend_with_margin(&f, &g, 0.5).unwrap();
        let cert = check_ellipticity(&ext.field, &ext.ball.grid, 64).unwrap();
        assert!(cert.pass);
        assert!(cert.min_eigenvalue >= 0.5);
        // far from the square the extension is exactly (Λ/2)·I
        let far = ext
            .ball
            .grid
            .nodes()
            .iter()
            .position(|n| n.x < -0.35)
            .unwrap();
        assert_eq!(ext.field.a11()[far], 0.5);
        assert_eq!(ext.field.b1()[far], 0.0);
    }

    #[test]
    fn thin_collar_is_rejected() {
        let g = square(0.125);
        let f = Preset::Heat.sample(&g).unwrap();
        let ball = enclosing_ball(&g, 0.3).unwrap();
        let err = extend_to_ball(&f, &g, &ball, ExtensionRecipe { collar: 0.2 });
        assert!(matches!(err, Err(CoeffError::BlendFailure { .. })));
    }

    #[test]
    fn phi1_is_a_c1_ramp() {
        let r = ExtensionRecipe { collar: 0.5 };
        assert_eq!(r.phi1(0.0), 1.0);
        assert_eq!(r.phi1(0.5), 0.0);
        assert_eq!(r.phi1(0.25), 0.5);
        let eps = 1e-7;
        assert!((r.phi1(eps) - 1.0).abs() < 1e-12);
        assert!(r.phi1(0.5 - eps) < 1e-12);
    }

    #[test]
    fn mollifier_weights() {
        let w = MollifierSpec { k: 4 }.weights(1.0 / 32.0);
        let total: f64 = w.iter().map(|e| e.2).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|e| e.2 > 0.0));
        assert!(w
            .iter()
            .all(|e| ((e.0 * e.0 + e.1 * e.1) as f64).sqrt() / 32.0 < 0.25));
        // support smaller than one cell: only the centre survives
        let w = MollifierSpec { k: 16 }.weights(1.0 / 16.0);
        assert_eq!(w, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn mollify_constant_and_affine() {
        let g = square(1.0 / 16.0);
        let f = Preset::Anisotropic.sample(&g).unwrap();
        let ext = extend_with_margin(&f, &g, 1.0).unwrap();
        for k in [4, 8, 16] {
            let m = mollify(&ext, MollifierSpec { k }).unwrap();
            // nodes whose support stays inside the domain keep the constant
            let n = g.index_of(8, 8).unwrap();
            assert!((m.a11()[n] - 2.0).abs() < 1e-14);
            assert!((m.a12()[n] - 0.5).abs() < 1e-14);
        }
        let e = CoefficientExprs::parse(
            &CoefficientSource {
                a11: "1 + x".into(),
                a12: "0".into(),
                a22: "1".into(),
                b1: "0".into(),
                b2: "0".into(),
                c: "0".into(),
            },
            1.0,
        )
        .unwrap();
        let f = e.sample(&g).unwrap();
        let ext = extend_with_margin(&f, &g, 1.0).unwrap();
        let m = mollify(&ext, MollifierSpec { k: 8 }).unwrap();
        let n = g.index_of(8, 8).unwrap();
        assert!((m.a11()[n] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn mollify_support_overrun() {
        let g = square(1.0 / 16.0);
        let f = Preset::Heat.sample(&g).unwrap();
        let ext = extend_with_margin(&f, &g, 0.25).unwrap();
        assert!(matches!(
            mollify(&ext, MollifierSpec { k: 2 }),
            Err(CoeffError::SupportOverrun { k: 2, .. })
        ));
    }

    #[test]
    fn divergence_of_constant_and_affine() {
        let g = square(1.0 / 8.0);
        let f = Preset::Drift.sample(&g).unwrap();
        let d = divergence_reduction(&f, &g, 10.0);
        assert!(d.b1.iter().all(|&v| v == 50.0));
        assert!(d.b2.iter().all(|&v| v == 0.0));
        assert!(d.warnings.is_empty());

        let src = CoefficientSource {
            a11: "1 + x".into(),
            a12: "0".into(),
            a22: "1".into(),
            b1: "0".into(),
            b2: "0".into(),
            c: "0".into(),
        };
        let f = CoefficientExprs::parse(&src, 1.0)
            .unwrap()
            .sample(&g)
            .unwrap();
        let d = divergence_reduction(&f, &g, 10.0);
        for (&v1, &v2) in d.b1.iter().zip(&d.b2) {
            assert!((v1 + 1.0).abs() < 1e-12);
            assert_eq!(v2, 0.0);
        }
        let d = divergence_reduction(&f, &g, 0.5);
        assert_eq!(d.warnings.len(), g.n_interior());
    }

    #[test]
    fn presets_are_elliptic() {
        for shape in [ShapeSpec::unit_square(), ShapeSpec::l_shape()] {
            let g = build_domain(&shape, 1.0 / 16.0).unwrap();
            for p in Preset::ALL {
                let f = p.sample(&g).unwrap();
                let cert = check_ellipticity(&f, &g, 360).unwrap();
                assert!(cert.pass, "{} on {}", p.name(), shape.name());
            }
        }
        assert_eq!(
            Preset::from_name("lipschitz-rough"),
            Some(Preset::LipschitzRough)
        );
    }
}
