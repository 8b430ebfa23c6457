//! Uniform-lattice rasterization of planar domains.
//!
//! Every grid lives on the global lattice `(i·h, j·h)` anchored at the
//! origin, so two grids with the same mesh width share node coordinates bit
//! for bit. Nodes are split into an *interior* set (lattice points strictly
//! inside the domain) and a *boundary* set (lattice points outside or on the
//! boundary that are 9-point stencil neighbours of an interior node). Each
//! boundary node carries the nearest point of the true boundary, where
//! Dirichlet data is evaluated.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nodes closer than this multiple of `h` to the boundary count as boundary.
const BOUNDARY_TIE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("mesh width must be positive and finite, got {0}")]
    InvalidMesh(f64),
    #[error("no interior lattice node at h = {h}")]
    EmptyInterior { h: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("enclosing ball with margin {margin} does not contain every node of the domain grid")]
    BallTooSmall { margin: f64 },
}

/// Regularity flags attached to each catalog geometry.
///
/// These are fixed metadata, never computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeFlags {
    pub uniform_exterior_cone: bool,
    pub wiener_regular: bool,
}

/// A bounded planar domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// `(0,1)²`
    UnitSquare,
    /// `(0,1)² ∖ [1/2,1]²`
    LShape,
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Simple polygon, vertices listed counter-clockwise.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Disk with a closed disk of `puncture_radius` removed around the
    /// center. Radius zero removes the single center point.
    PuncturedDisk {
        center: [f64; 2],
        radius: f64,
        puncture_radius: f64,
    },
}

/// A shape together with the mesh width, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    pub h: f64,
}

const L_SHAPE: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [1.0, 0.5],
    [0.5, 0.5],
    [0.5, 1.0],
    [0.0, 1.0],
];

impl ShapeSpec {
    pub fn unit_square() -> Self {
        ShapeSpec::UnitSquare
    }

    pub fn l_shape() -> Self {
        ShapeSpec::LShape
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        ShapeSpec::Disk { center, radius }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        ShapeSpec::Polygon { vertices }
    }

    pub fn punctured_disk(center: [f64; 2], radius: f64, puncture_radius: f64) -> Self {
        ShapeSpec::PuncturedDisk {
            center,
            radius,
            puncture_radius,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShapeSpec::UnitSquare => "unit_square",
            ShapeSpec::LShape => "l_shape",
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Polygon { .. } => "polygon",
            ShapeSpec::PuncturedDisk { .. } => "punctured_disk",
        }
    }

    pub fn flags(&self) -> ShapeFlags {
        match self {
            ShapeSpec::PuncturedDisk { .. } => ShapeFlags {
                uniform_exterior_cone: false,
                wiener_regular: false,
            },
            _ => ShapeFlags {
                uniform_exterior_cone: true,
                wiener_regular: true,
            },
        }
    }

    /// Checks the shape invariants and returns the canonical form used for
    /// classification (polygons are made counter-clockwise, a repeated
    /// closing vertex is dropped).
    pub fn validate(&self) -> Result<Geometry, GridError> {
        match self {
            ShapeSpec::UnitSquare => Ok(Geometry::Square),
            ShapeSpec::LShape => Ok(Geometry::Polygon(L_SHAPE.to_vec())),
            ShapeSpec::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !finite2(center) {
                    return Err(GridError::InvalidShape(format!("disk radius {radius}")));
                }
                Ok(Geometry::Disk {
                    center: *center,
                    radius: *radius,
                    hole: None,
                })
            }
            ShapeSpec::PuncturedDisk {
                center,
                radius,
                puncture_radius,
            } => {
                if !(radius.is_finite() && *radius > 0.0) || !finite2(center) {
                    return Err(GridError::InvalidShape(format!("disk radius {radius}")));
                }
                if !(*puncture_radius >= 0.0 && puncture_radius < radius) {
                    return Err(GridError::InvalidShape(format!(
                        "puncture radius {puncture_radius} must lie in [0, {radius})"
                    )));
                }
                Ok(Geometry::Disk {
                    center: *center,
                    radius: *radius,
                    hole: Some(*puncture_radius),
                })
            }
            ShapeSpec::Polygon { vertices } => canonical_polygon(vertices).map(Geometry::Polygon),
        }
    }
}

fn finite2(p: &[f64; 2]) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

/// Validated geometry with point predicates.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Square,
    Disk {
        center: [f64; 2],
        radius: f64,
        hole: Option<f64>,
    },
    Polygon(Vec<[f64; 2]>),
}

impl Geometry {
    /// `true` if `p` lies in the open domain.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Geometry::Square => p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0,
            Geometry::Disk {
                center,
                radius,
                hole,
            } => {
                let r = dist(p, *center);
                r < *radius && hole.is_none_or(|rho| r > rho)
            }
            Geometry::Polygon(v) => {
                winding_number(v, p) != 0 && polygon_boundary_distance(v, p) > 0.0
            }
        }
    }

    /// Nearest point of the boundary to `p`.
    pub fn nearest_boundary_point(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Geometry::Square => {
                if self.contains(p) {
                    let cands = [
                        (p[0], [0.0, p[1]]),
                        (1.0 - p[0], [1.0, p[1]]),
                        (p[1], [p[0], 0.0]),
                        (1.0 - p[1], [p[0], 1.0]),
                    ];
                    cands
                        .iter()
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|c| c.1)
                        .unwrap()
                } else {
                    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]
                }
            }
            Geometry::Disk {
                center,
                radius,
                hole,
            } => {
                let r = dist(p, *center);
                let dir = if r > 0.0 {
                    [(p[0] - center[0]) / r, (p[1] - center[1]) / r]
                } else {
                    [1.0, 0.0]
                };
                let outer = [center[0] + radius * dir[0], center[1] + radius * dir[1]];
                match hole {
                    Some(rho) if (r - rho).abs() < (radius - r).abs() => {
                        [center[0] + rho * dir[0], center[1] + rho * dir[1]]
                    }
                    _ => outer,
                }
            }
            Geometry::Polygon(v) => {
                let mut best = (f64::INFINITY, p);
                for k in 0..v.len() {
                    let q = project_segment(p, v[k], v[(k + 1) % v.len()]);
                    let d = dist(p, q);
                    if d < best.0 {
                        best = (d, q);
                    }
                }
                best.1
            }
        }
    }

    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        dist(p, self.nearest_boundary_point(p))
    }

    /// Axis-aligned bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bbox(&self) -> [f64; 4] {
        match self {
            Geometry::Square => [0.0, 0.0, 1.0, 1.0],
            Geometry::Disk { center, radius, .. } => [
                center[0] - radius,
                center[1] - radius,
                center[0] + radius,
                center[1] + radius,
            ],
            Geometry::Polygon(v) => v.iter().fold(
                [
                    f64::INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::NEG_INFINITY,
                ],
                |b, p| {
                    [
                        b[0].min(p[0]),
                        b[1].min(p[1]),
                        b[2].max(p[0]),
                        b[3].max(p[1]),
                    ]
                },
            ),
        }
    }

    /// Radius of the smallest disk around `center` containing the closure.
    fn reach_from(&self, center: [f64; 2]) -> f64 {
        match self {
            Geometry::Square => [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
                .iter()
                .map(|q| dist(*q, center))
                .fold(0.0, f64::max),
            Geometry::Disk {
                center: c, radius, ..
            } => dist(*c, center) + radius,
            Geometry::Polygon(v) => v.iter().map(|q| dist(*q, center)).fold(0.0, f64::max),
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn project_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    [a[0] + t * d[0], a[1] + t * d[1]]
}

fn polygon_boundary_distance(v: &[[f64; 2]], p: [f64; 2]) -> f64 {
    (0..v.len())
        .map(|k| dist(p, project_segment(p, v[k], v[(k + 1) % v.len()])))
        .fold(f64::INFINITY, f64::min)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Winding number of the closed polygon `v` around `p`.
fn winding_number(v: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let mut wn = 0;
    for k in 0..v.len() {
        let a = v[k];
        let b = v[(k + 1) % v.len()];
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn canonical_polygon(vertices: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, GridError> {
    let mut v = vertices.to_vec();
    if v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    if v.len() < 3 {
        return Err(GridError::InvalidShape(
            "polygon needs at least three vertices".into(),
        ));
    }
    if v.iter().any(|p| !finite2(p)) {
        return Err(GridError::InvalidShape("non-finite polygon vertex".into()));
    }
    let n = v.len();
    for i in 0..n {
        if v[i] == v[(i + 1) % n] {
            return Err(GridError::InvalidShape(format!("repeated vertex {i}")));
        }
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(GridError::InvalidShape(format!(
                    "polygon edges {i} and {j} intersect"
                )));
            }
        }
    }
    let area2: f64 = (0..n)
        .map(|k| {
            let a = v[k];
            let b = v[(k + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    if area2 == 0.0 {
        return Err(GridError::InvalidShape("degenerate polygon".into()));
    }
    if area2 < 0.0 {
        v.reverse();
    }
    Ok(v)
}

/// A lattice node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub i: i64,
    pub j: i64,
    pub x: f64,
    pub y: f64,
}

/// Result of locating a lattice position in a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Interior(usize),
    Boundary(usize),
}

#[derive(Debug)]
struct GridData {
    shape: ShapeSpec,
    geometry: Geometry,
    h: f64,
    i0: i64,
    j0: i64,
    ni: usize,
    nj: usize,
    lookup: Vec<Option<usize>>,
    nodes: Vec<Node>,
    n_interior: usize,
    traces: Vec<[f64; 2]>,
}

/// Classified lattice rasterization of a domain. Cheap to clone.
///
/// Node numbering: interior nodes `0..n_interior()` in row-major order
/// (`j` outer), followed by boundary nodes in row-major order. Boundary
/// quantities are indexed locally, `0..n_boundary()`.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    data: Arc<GridData>,
}

/// Offsets of the 9-point stencil, center excluded.
pub const STENCIL: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
];

/// Rasterizes `spec` on the lattice of width `h`.
pub fn build_domain(spec: &ShapeSpec, h: f64) -> Result<DomainGrid, GridError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(GridError::InvalidMesh(h));
    }
    let geometry = spec.validate()?;
    let bb = geometry.bbox();
    let i0 = (bb[0] / h).floor() as i64 - 1;
    let j0 = (bb[1] / h).floor() as i64 - 1;
    let i1 = (bb[2] / h).ceil() as i64 + 1;
    let j1 = (bb[3] / h).ceil() as i64 + 1;
    let ni = (i1 - i0 + 1) as usize;
    let nj = (j1 - j0 + 1) as usize;

    let tie = BOUNDARY_TIE * h;
    let mut inside = vec![false; ni * nj];
    for jj in 0..nj {
        for ii in 0..ni {
            let p = [(i0 + ii as i64) as f64 * h, (j0 + jj as i64) as f64 * h];
            inside[jj * ni + ii] = geometry.contains(p) && geometry.distance_to_boundary(p) > tie;
        }
    }

    let mut lookup = vec![None; ni * nj];
    let mut nodes = Vec::new();
    for jj in 0..nj {
        for ii in 0..ni {
            if inside[jj * ni + ii] {
                lookup[jj * ni + ii] = Some(nodes.len());
                nodes.push(node_at(i0 + ii as i64, j0 + jj as i64, h));
            }
        }
    }
    let n_interior = nodes.len();
    if n_interior == 0 {
        return Err(GridError::EmptyInterior { h });
    }
    let mut traces = Vec::new();
    for jj in 0..nj {
        for ii in 0..ni {
            if inside[jj * ni + ii] {
                continue;
            }
            let touches = STENCIL.iter().any(|&(di, dj)| {
                let a = ii as i64 + di;
                let b = jj as i64 + dj;
                a >= 0
                    && b >= 0
                    && (a as usize) < ni
                    && (b as usize) < nj
                    && inside[b as usize * ni + a as usize]
            });
            if touches {
                let node = node_at(i0 + ii as i64, j0 + jj as i64, h);
                lookup[jj * ni + ii] = Some(nodes.len());
                traces.push(geometry.nearest_boundary_point([node.x, node.y]));
                nodes.push(node);
            }
        }
    }

    Ok(DomainGrid {
        data: Arc::new(GridData {
            shape: spec.clone(),
            geometry,
            h,
            i0,
            j0,
            ni,
            nj,
            lookup,
            nodes,
            n_interior,
            traces,
        }),
    })
}

fn node_at(i: i64, j: i64, h: f64) -> Node {
    Node {
        i,
        j,
        x: i as f64 * h,
        y: j as f64 * h,
    }
}

impl DomainGrid {
    pub fn h(&self) -> f64 {
        self.data.h
    }

    pub fn shape(&self) -> &ShapeSpec {
        &self.data.shape
    }

    pub fn geometry(&self) -> &Geometry {
        &self.data.geometry
    }

    pub fn n_interior(&self) -> usize {
        self.data.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.data.nodes.len() - self.data.n_interior
    }

    pub fn n_nodes(&self) -> usize {
        self.data.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.data.nodes
    }

    pub fn node(&self, k: usize) -> Node {
        self.data.nodes[k]
    }

    pub fn interior_nodes(&self) -> &[Node] {
        &self.data.nodes[..self.data.n_interior]
    }

    pub fn boundary_nodes(&self) -> &[Node] {
        &self.data.nodes[self.data.n_interior..]
    }

    /// Nearest boundary point of the `b`-th boundary node.
    pub fn trace_point(&self, b: usize) -> [f64; 2] {
        self.data.traces[b]
    }

    /// Global node index at lattice position `(i, j)`, if classified.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        let d = &self.data;
        let a = i - d.i0;
        let b = j - d.j0;
        if a < 0 || b < 0 || a as usize >= d.ni || b as usize >= d.nj {
            return None;
        }
        d.lookup[b as usize * d.ni + a as usize]
    }

    pub fn locate(&self, i: i64, j: i64) -> Option<NodeRef> {
        self.index_of(i, j).map(|k| self.classify(k))
    }

    pub fn classify(&self, k: usize) -> NodeRef {
        if k < self.data.n_interior {
            NodeRef::Interior(k)
        } else {
            NodeRef::Boundary(k - self.data.n_interior)
        }
    }

    /// Neighbor of node `k` at lattice offset `(di, dj)`.
    pub fn neighbor(&self, k: usize, di: i64, dj: i64) -> Option<NodeRef> {
        let n = self.data.nodes[k];
        self.locate(n.i + di, n.j + dj)
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        k >= self.data.n_interior
    }

    /// Samples `f` at every interior node.
    pub fn sample_interior(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.interior_nodes().iter().map(|n| f(n.x, n.y)).collect()
    }

    /// Samples `g` at the trace point of every boundary node.
    pub fn sample_boundary(&self, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.data.traces.iter().map(|p| g(p[0], p[1])).collect()
    }

    /// Samples `f` at every node position (interior then boundary).
    pub fn sample_nodes(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.data.nodes.iter().map(|n| f(n.x, n.y)).collect()
    }
}

/// Disk grid enclosing a domain grid on the same lattice.
#[derive(Debug, Clone)]
pub struct BallGrid {
    pub grid: DomainGrid,
    pub center: [f64; 2],
    pub radius: f64,
    /// `injection[k]` is the ball node index of domain node `k`. Every
    /// domain node (interior and boundary) lands on a ball interior node.
    pub injection: Vec<usize>,
}

/// Builds a disk grid at the same `h` whose interior strictly contains every
/// node of `grid`.
pub fn enclosing_ball(grid: &DomainGrid, margin: f64) -> Result<BallGrid, GridError> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(GridError::InvalidShape(format!(
            "ball margin must be positive, got {margin}"
        )));
    }
    let geom = grid.geometry();
    let center = match geom {
        Geometry::Disk { center, .. } => *center,
        _ => {
            let bb = geom.bbox();
            [0.5 * (bb[0] + bb[2]), 0.5 * (bb[1] + bb[3])]
        }
    };
    let radius = geom.reach_from(center) + margin;
    let ball = build_domain(&ShapeSpec::disk(center, radius), grid.h())?;
    let injection = grid
        .nodes()
        .iter()
        .map(|n| match ball.locate(n.i, n.j) {
            Some(NodeRef::Interior(k)) => Ok(k),
            _ => Err(GridError::BallTooSmall { margin }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BallGrid {
        grid: ball,
        center,
        radius,
        injection,
    })
}
