//! Spectral supports and their midpoint discretizations.
//!
//! A support is an ordered list of primitives in the closed upper half-plane:
//! line segments, circular arcs, rectangles and half-disks, plus real
//! intervals of the KdV spectral line. Curves are split into panels of equal
//! parameter length with one node at each panel midpoint; regions are tiled
//! by square cells whose centers pass the inside test. Every node carries
//! exactly one weight, the arclength or area of its cell.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NdrError, Result};

/// A point of the spectral plane.
pub type ComplexPoint = Complex64;

const GEOM_TOL: f64 = 1e-12;

/// Geometric primitive of a support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Segment {
        from: ComplexPoint,
        to: ComplexPoint,
    },
    /// Arc of the circle `|z - center| = radius`, angles in radians.
    Arc {
        center: ComplexPoint,
        radius: f64,
        angle_start: f64,
        angle_end: f64,
    },
    /// Interval `[from, to]` of the KdV spectral half-line `ζ ≥ 0`.
    RealInterval { from: f64, to: f64 },
    /// Axis-aligned rectangle with corners `min` and `max`.
    Rectangle { min: ComplexPoint, max: ComplexPoint },
    /// `{ |z - center| <= radius, Im z >= min_im }`.
    HalfDisk {
        center: ComplexPoint,
        radius: f64,
        min_im: f64,
    },
}

/// Whether a primitive is a curve or an area.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Curve,
    Area,
}

impl Primitive {
    pub fn dimension(&self) -> Dimension {
        match self {
            Primitive::Segment { .. } | Primitive::Arc { .. } | Primitive::RealInterval { .. } => {
                Dimension::Curve
            }
            Primitive::Rectangle { .. } | Primitive::HalfDisk { .. } => Dimension::Area,
        }
    }

    fn is_real_interval(&self) -> bool {
        matches!(self, Primitive::RealInterval { .. })
    }

    fn is_closed_curve(&self) -> bool {
        match self {
            Primitive::Arc {
                angle_start,
                angle_end,
                ..
            } => (angle_end - angle_start).abs() >= TAU - GEOM_TOL,
            _ => false,
        }
    }

    /// Arclength of a curve or area of a region.
    pub fn measure(&self) -> f64 {
        match *self {
            Primitive::Segment { from, to } => (to - from).norm(),
            Primitive::Arc {
                radius,
                angle_start,
                angle_end,
                ..
            } => radius * (angle_end - angle_start).abs(),
            Primitive::RealInterval { from, to } => to - from,
            Primitive::Rectangle { min, max } => (max.re - min.re) * (max.im - min.im),
            Primitive::HalfDisk {
                center,
                radius,
                min_im,
            } => {
                let d = (min_im - center.im).clamp(-radius, radius);
                radius * radius * (d / radius).acos() - d * (radius * radius - d * d).sqrt()
            }
        }
    }

    /// Point at curve parameter `t ∈ [0, 1]`.
    pub fn point_at(&self, t: f64) -> ComplexPoint {
        match *self {
            Primitive::Segment { from, to } => from + (to - from) * t,
            Primitive::Arc {
                center,
                radius,
                angle_start,
                angle_end,
            } => center + Complex64::from_polar(radius, angle_start + (angle_end - angle_start) * t),
            Primitive::RealInterval { from, to } => Complex64::new(from + (to - from) * t, 0.0),
            _ => panic!("point_at on an area primitive"),
        }
    }

    /// Inside test for area primitives.
    pub fn contains(&self, z: ComplexPoint) -> bool {
        match *self {
            Primitive::Rectangle { min, max } => {
                z.re >= min.re && z.re <= max.re && z.im >= min.im && z.im <= max.im
            }
            Primitive::HalfDisk {
                center,
                radius,
                min_im,
            } => (z - center).norm() <= radius && z.im >= min_im,
            _ => false,
        }
    }

    /// Bounding box as (lower-left, upper-right).
    pub fn bbox(&self) -> (ComplexPoint, ComplexPoint) {
        match *self {
            Primitive::Segment { from, to } => (
                Complex64::new(from.re.min(to.re), from.im.min(to.im)),
                Complex64::new(from.re.max(to.re), from.im.max(to.im)),
            ),
            Primitive::Arc { .. } => {
                let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for k in 0..=512 {
                    let p = self.point_at(k as f64 / 512.0);
                    lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
                    hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
                }
                (lo, hi)
            }
            Primitive::RealInterval { from, to } => {
                (Complex64::new(from, 0.0), Complex64::new(to, 0.0))
            }
            Primitive::Rectangle { min, max } => (min, max),
            Primitive::HalfDisk {
                center,
                radius,
                min_im,
            } => {
                let d = min_im - center.im;
                let half = (radius * radius - d * d).max(0.0).sqrt();
                let (x0, x1) = if d <= 0.0 {
                    (center.re - radius, center.re + radius)
                } else {
                    (center.re - half, center.re + half)
                };
                (
                    Complex64::new(x0, min_im.max(center.im - radius)),
                    Complex64::new(x1, center.im + radius),
                )
            }
        }
    }

    /// Endpoints of open curves and corners of regions: the points where the
    /// density may be singular.
    pub fn non_smooth_points(&self) -> Vec<ComplexPoint> {
        match *self {
            Primitive::Segment { from, to } => vec![from, to],
            Primitive::Arc { .. } if self.is_closed_curve() => vec![],
            Primitive::Arc { .. } | Primitive::RealInterval { .. } => {
                vec![self.point_at(0.0), self.point_at(1.0)]
            }
            Primitive::Rectangle { min, max } => vec![
                min,
                Complex64::new(max.re, min.im),
                max,
                Complex64::new(min.re, max.im),
            ],
            Primitive::HalfDisk {
                center,
                radius,
                min_im,
            } => {
                let d = min_im - center.im;
                if d.abs() >= radius {
                    return vec![];
                }
                let half = (radius * radius - d * d).sqrt();
                vec![
                    Complex64::new(center.re - half, min_im),
                    Complex64::new(center.re + half, min_im),
                ]
            }
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let invalid = |reason: &str| NdrError::InvalidPrimitive {
            index,
            reason: reason.to_string(),
        };
        match *self {
            Primitive::Segment { from, to } => {
                if (to - from).norm() <= GEOM_TOL {
                    return Err(invalid("zero-length segment"));
                }
                if from.im < -GEOM_TOL || to.im < -GEOM_TOL {
                    return Err(NdrError::NotInUpperHalfPlane { index });
                }
                if from.im.abs() <= GEOM_TOL && to.im.abs() <= GEOM_TOL {
                    return Err(NdrError::TangentialRealContact { index });
                }
            }
            Primitive::Arc {
                center,
                radius,
                angle_start,
                angle_end,
            } => {
                if !(radius > 0.0) || (angle_end - angle_start).abs() <= GEOM_TOL {
                    return Err(invalid("degenerate arc"));
                }
                if (angle_end - angle_start).abs() > TAU + GEOM_TOL {
                    return Err(invalid("arc longer than a full turn"));
                }
                // lowest point of the circle sits at angle 3π/2
                let (a0, a1) = if angle_start <= angle_end {
                    (angle_start, angle_end)
                } else {
                    (angle_end, angle_start)
                };
                let bottom = 1.5 * PI;
                let k = ((a0 - bottom) / TAU).ceil();
                let bottom_inside = bottom + k * TAU <= a1 + GEOM_TOL;
                let bottom_interior = bottom + k * TAU > a0 + 1e-9 && bottom + k * TAU < a1 - 1e-9;
                if bottom_inside {
                    let lowest = center.im - radius;
                    if lowest < -GEOM_TOL {
                        return Err(NdrError::NotInUpperHalfPlane { index });
                    }
                    if lowest.abs() <= GEOM_TOL && (bottom_interior || self.is_closed_curve()) {
                        return Err(NdrError::TangentialRealContact { index });
                    }
                }
                for angle in [angle_start, angle_end] {
                    let p = center + Complex64::from_polar(radius, angle);
                    if p.im < -GEOM_TOL {
                        return Err(NdrError::NotInUpperHalfPlane { index });
                    }
                    if p.im.abs() <= GEOM_TOL && angle.cos().abs() < 1e-9 {
                        return Err(NdrError::TangentialRealContact { index });
                    }
                }
            }
            Primitive::RealInterval { from, to } => {
                if !(from >= 0.0) || !(to > from) {
                    return Err(invalid("real interval must satisfy 0 <= from < to"));
                }
            }
            Primitive::Rectangle { min, max } => {
                if !(max.re > min.re && max.im > min.im) {
                    return Err(invalid("rectangle corners out of order"));
                }
                if min.im < 0.0 {
                    return Err(NdrError::NotInUpperHalfPlane { index });
                }
            }
            Primitive::HalfDisk {
                center,
                radius,
                min_im,
            } => {
                if !(radius > 0.0) || !(min_im < center.im + radius) {
                    return Err(invalid("empty half-disk"));
                }
                if min_im.max(center.im - radius) < 0.0 {
                    return Err(NdrError::NotInUpperHalfPlane { index });
                }
            }
        }
        Ok(())
    }
}

/// A primitive plus an optional label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPrimitive {
    #[serde(flatten)]
    pub shape: Primitive,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

/// Geometric description of the spectral support.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSpec {
    pub primitives: Vec<LabeledPrimitive>,
}

impl SupportSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, shape: Primitive) -> Self {
        self.primitives.push(LabeledPrimitive {
            shape,
            label: String::new(),
        });
        self
    }

    pub fn with_label(mut self, shape: Primitive, label: &str) -> Self {
        self.primitives.push(LabeledPrimitive {
            shape,
            label: label.to_string(),
        });
        self
    }

    pub fn segment(from: ComplexPoint, to: ComplexPoint) -> Self {
        Self::new().with(Primitive::Segment { from, to })
    }

    /// Upper semicircle `|z - center| = radius`, `Im z >= center.im`.
    pub fn semicircle(center: ComplexPoint, radius: f64) -> Self {
        Self::new().with(Primitive::Arc {
            center,
            radius,
            angle_start: 0.0,
            angle_end: PI,
        })
    }

    pub fn real_interval(from: f64, to: f64) -> Self {
        Self::new().with(Primitive::RealInterval { from, to })
    }

    pub fn shapes(&self) -> impl Iterator<Item = &Primitive> {
        self.primitives.iter().map(|p| &p.shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(NdrError::EmptySupport);
        }
        for (i, p) in self.shapes().enumerate() {
            p.validate(i)?;
        }
        let real = self.shapes().filter(|p| p.is_real_interval()).count();
        if real != 0 && real != self.primitives.len() {
            return Err(NdrError::WrongPrimitive {
                index: self.shapes().position(|p| !p.is_real_interval()).unwrap_or(0),
                reason: "KdV real intervals cannot be mixed with upper half-plane primitives",
            });
        }
        Ok(())
    }

    pub fn dimension(&self) -> Option<Dimension> {
        let mut dims = self.shapes().map(Primitive::dimension);
        let first = dims.next()?;
        dims.all(|d| d == first).then_some(first)
    }

    /// Total arclength (curves) or area (regions).
    pub fn total_measure(&self) -> f64 {
        self.shapes().map(Primitive::measure).sum()
    }

    pub fn bbox(&self) -> (ComplexPoint, ComplexPoint) {
        let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.shapes() {
            let (a, b) = p.bbox();
            lo = Complex64::new(lo.re.min(a.re), lo.im.min(a.im));
            hi = Complex64::new(hi.re.max(b.re), hi.im.max(b.im));
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    fn domain(&self) -> Domain {
        if self.shapes().all(Primitive::is_real_interval) {
            Domain::KdvLine
        } else {
            Domain::UpperHalfPlane
        }
    }
}

/// Shape of the cell represented by a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellShape {
    /// Straight panel of a curve; `weight` is its length.
    Panel,
    /// Square cell of a region; `weight` is its area.
    Square,
}

/// Which spectral variable the nodes live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// fNLS spectral variable `z` with `Im z > 0`.
    UpperHalfPlane,
    /// KdV spectral variable `ζ > 0` stored as `ζ + 0i`.
    KdvLine,
}

/// How to discretize a support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    NodesPerUnit(f64),
    CellSize(f64),
}

/// Midpoint discretization of the reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<ComplexPoint>,
    pub weights: Vec<f64>,
    pub panel_of: Vec<usize>,
    pub cell_size: Vec<f64>,
    pub endpoint_flags: Vec<bool>,
    pub real_axis_distance: Vec<f64>,
    pub cell_shape: Vec<CellShape>,
    pub domain: Domain,
    /// Arc endpoints, junctions and region corners.
    pub singular_points: Vec<ComplexPoint>,
    /// Diameter of the support's bounding box.
    pub diameter: f64,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Build a quadrature from explicit panel nodes, one primitive per node
    /// run. Used for hand-made test configurations.
    pub fn from_panels(nodes: Vec<ComplexPoint>, weights: Vec<f64>, domain: Domain) -> Result<Self> {
        if nodes.is_empty() {
            return Err(NdrError::EmptySupport);
        }
        if nodes.len() != weights.len() {
            return Err(NdrError::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        let n = nodes.len();
        let (lo, hi) = nodes.iter().fold(
            (
                Complex64::new(f64::INFINITY, f64::INFINITY),
                Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), p| {
                (
                    Complex64::new(lo.re.min(p.re), lo.im.min(p.im)),
                    Complex64::new(hi.re.max(p.re), hi.im.max(p.im)),
                )
            },
        );
        let real_axis_distance = nodes
            .iter()
            .map(|z| match domain {
                Domain::UpperHalfPlane => z.im,
                Domain::KdvLine => z.re,
            })
            .collect();
        Ok(Self {
            cell_size: weights.clone(),
            nodes,
            weights,
            panel_of: vec![0; n],
            endpoint_flags: vec![false; n],
            real_axis_distance,
            cell_shape: vec![CellShape::Panel; n],
            domain,
            singular_points: vec![],
            diameter: (hi - lo).norm(),
        })
    }

    /// Mask of nodes inside the exclusion zones: within `radius_cells` cell
    /// sizes of a singular point, or closer than `real_axis_fraction` times
    /// the support diameter to the real axis.
    pub fn exclusion_mask(&self, radius_cells: f64, real_axis_fraction: f64) -> Vec<bool> {
        let eps_real = real_axis_fraction * self.diameter;
        (0..self.len())
            .map(|i| {
                let z = self.nodes[i];
                let r = radius_cells * self.cell_size[i];
                self.real_axis_distance[i] < eps_real
                    || self.singular_points.iter().any(|p| (z - p).norm() < r)
            })
            .collect()
    }

    /// Same as [`exclusion_mask`](Self::exclusion_mask) with a fixed radius
    /// instead of a cell multiple.
    pub fn exclusion_mask_radius(&self, radius: f64, real_axis_fraction: f64) -> Vec<bool> {
        let eps_real = real_axis_fraction * self.diameter;
        (0..self.len())
            .map(|i| {
                let z = self.nodes[i];
                self.real_axis_distance[i] < eps_real
                    || self.singular_points.iter().any(|p| (z - p).norm() < radius)
            })
            .collect()
    }

    /// CSV dump with columns `re,im,weight,panel,endpoint_flag`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "re,im,weight,panel,endpoint_flag")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{},{}",
                self.nodes[i].re,
                self.nodes[i].im,
                self.weights[i],
                self.panel_of[i],
                u8::from(self.endpoint_flags[i])
            )?;
        }
        Ok(())
    }
}

/// Either discretization, chosen by the support's dimension.
pub fn discretize(spec: &SupportSpec, how: Discretization) -> Result<Quadrature> {
    match how {
        Discretization::NodesPerUnit(d) => discretize_contour(spec, d),
        Discretization::CellSize(h) => discretize_region(spec, h),
    }
}

/// Composite midpoint rule on every curve of `spec`.
pub fn discretize_contour(spec: &SupportSpec, nodes_per_unit_length: f64) -> Result<Quadrature> {
    spec.validate()?;
    if !(nodes_per_unit_length > 0.0) || !nodes_per_unit_length.is_finite() {
        return Err(NdrError::InvalidDiscretization(format!(
            "nodes per unit length must be positive, got {nodes_per_unit_length}"
        )));
    }
    if let Some(index) = spec.shapes().position(|p| p.dimension() != Dimension::Curve) {
        return Err(NdrError::WrongPrimitive {
            index,
            reason: "contour discretization needs curve primitives",
        });
    }
    let domain = spec.domain();
    let mut q = empty_quadrature(spec, domain);
    for (index, p) in spec.shapes().enumerate() {
        let length = p.measure();
        let n = ((length * nodes_per_unit_length).round() as usize).max(1);
        let h = length / n as f64;
        let open = !p.is_closed_curve();
        for k in 0..n {
            let z = p.point_at((k as f64 + 0.5) / n as f64);
            q.nodes.push(z);
            q.weights.push(h);
            q.panel_of.push(index);
            q.cell_size.push(h);
            q.endpoint_flags.push(open && (k == 0 || k + 1 == n));
            q.real_axis_distance.push(match domain {
                Domain::UpperHalfPlane => z.im,
                Domain::KdvLine => z.re,
            });
            q.cell_shape.push(CellShape::Panel);
        }
    }
    Ok(q)
}

/// Uniform square-cell tiling of every region of `spec`, keeping cells whose
/// center passes the inside test.
pub fn discretize_region(spec: &SupportSpec, cell_size: f64) -> Result<Quadrature> {
    spec.validate()?;
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(NdrError::InvalidDiscretization(format!(
            "cell size must be positive, got {cell_size}"
        )));
    }
    if let Some(index) = spec.shapes().position(|p| p.dimension() != Dimension::Area) {
        return Err(NdrError::WrongPrimitive {
            index,
            reason: "region discretization needs area primitives",
        });
    }
    let mut q = empty_quadrature(spec, Domain::UpperHalfPlane);
    for (index, p) in spec.shapes().enumerate() {
        let (lo, hi) = p.bbox();
        let diameter = (hi - lo).norm();
        if cell_size >= diameter {
            return Err(NdrError::CellTooCoarse {
                cell_size,
                diameter,
            });
        }
        let nx = ((hi.re - lo.re) / cell_size - 1e-9).ceil().max(1.0) as usize;
        let ny = ((hi.im - lo.im) / cell_size - 1e-9).ceil().max(1.0) as usize;
        let corners = p.non_smooth_points();
        for j in 0..ny {
            for i in 0..nx {
                let z = Complex64::new(
                    lo.re + (i as f64 + 0.5) * cell_size,
                    lo.im + (j as f64 + 0.5) * cell_size,
                );
                if !p.contains(z) {
                    continue;
                }
                q.nodes.push(z);
                q.weights.push(cell_size * cell_size);
                q.panel_of.push(index);
                q.cell_size.push(cell_size);
                q.endpoint_flags
                    .push(corners.iter().any(|c| (z - c).norm() <= cell_size));
                q.real_axis_distance.push(z.im);
                q.cell_shape.push(CellShape::Square);
            }
        }
    }
    if q.nodes.is_empty() {
        return Err(NdrError::EmptySupport);
    }
    Ok(q)
}

fn empty_quadrature(spec: &SupportSpec, domain: Domain) -> Quadrature {
    Quadrature {
        nodes: vec![],
        weights: vec![],
        panel_of: vec![],
        cell_size: vec![],
        endpoint_flags: vec![],
        real_axis_distance: vec![],
        cell_shape: vec![],
        domain,
        singular_points: spec.shapes().flat_map(Primitive::non_smooth_points).collect(),
        diameter: spec.diameter(),
    }
}

/// Background raster of the support used to find the unbounded component Ω
/// of `C+ \ Γ+` by flood fill.
struct Raster {
    origin: ComplexPoint,
    spacing: f64,
    nx: usize,
    ny: usize,
    blocked: Vec<bool>,
    outside: Vec<bool>,
}

impl Raster {
    fn cell_of(&self, z: ComplexPoint) -> Option<(usize, usize)> {
        let fx = ((z.re - self.origin.re) / self.spacing).floor();
        let fy = ((z.im - self.origin.im) / self.spacing).floor();
        (fx >= 0.0 && fy >= 0.0 && (fx as usize) < self.nx && (fy as usize) < self.ny)
            .then(|| (fx as usize, fy as usize))
    }

    fn center(&self, i: usize, j: usize) -> ComplexPoint {
        self.origin + Complex64::new((i as f64 + 0.5) * self.spacing, (j as f64 + 0.5) * self.spacing)
    }

    fn build(spec: &SupportSpec, q: &Quadrature) -> Self {
        let (lo, hi) = spec.bbox();
        let extent = (hi.re - lo.re).max(hi.im - lo.im).max(GEOM_TOL);
        let finest = q.cell_size.iter().cloned().fold(f64::INFINITY, f64::min);
        let spacing = (0.5 * finest).max(extent / 1500.0);
        let margin = 4.0 * spacing;
        let origin = Complex64::new(lo.re - margin, 0.0);
        let nx = ((hi.re - lo.re + 2.0 * margin) / spacing).ceil() as usize + 1;
        let ny = ((hi.im + margin) / spacing).ceil() as usize + 1;
        let mut r = Raster {
            origin,
            spacing,
            nx,
            ny,
            blocked: vec![false; nx * ny],
            outside: vec![false; nx * ny],
        };
        for p in spec.shapes() {
            match p.dimension() {
                Dimension::Curve => {
                    let samples = ((p.measure() / (0.25 * spacing)).ceil() as usize).max(2);
                    for k in 0..=samples {
                        if let Some((i, j)) = r.cell_of(p.point_at(k as f64 / samples as f64)) {
                            r.blocked[j * nx + i] = true;
                        }
                    }
                }
                Dimension::Area => {
                    for j in 0..ny {
                        for i in 0..nx {
                            if p.contains(r.center(i, j)) {
                                r.blocked[j * nx + i] = true;
                            }
                        }
                    }
                }
            }
        }
        r.flood();
        r
    }

    fn flood(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let mut stack = Vec::new();
        let mut seed = |i: usize, j: usize, stack: &mut Vec<usize>| {
            let k = j * nx + i;
            if !self.blocked[k] && !self.outside[k] {
                self.outside[k] = true;
                stack.push(k);
            }
        };
        // Ω is reached from infinity: left, right and top borders. The
        // bottom row lies along the real axis and is not a seed.
        for j in 0..ny {
            seed(0, j, &mut stack);
            seed(nx - 1, j, &mut stack);
        }
        for i in 0..nx {
            seed(i, ny - 1, &mut stack);
        }
        while let Some(k) = stack.pop() {
            let (i, j) = (k % nx, k / nx);
            let mut push = |ii: usize, jj: usize| {
                let kk = jj * nx + ii;
                if !self.blocked[kk] && !self.outside[kk] {
                    self.outside[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
    }

    fn outside_within(&self, z: ComplexPoint, radius: f64) -> bool {
        let reach = (radius / self.spacing).ceil() as isize + 1;
        let fx = ((z.re - self.origin.re) / self.spacing).floor() as isize;
        let fy = ((z.im - self.origin.im) / self.spacing).floor() as isize;
        for j in (fy - reach)..=(fy + reach) {
            for i in (fx - reach)..=(fx + reach) {
                if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
                    continue;
                }
                let (iu, ju) = (i as usize, j as usize);
                if self.outside[ju * self.nx + iu] && (self.center(iu, ju) - z).norm() <= radius {
                    return true;
                }
            }
        }
        false
    }
}

/// Nodes whose cell touches the boundary of the unbounded component of
/// `C+ \ Γ+`.
pub fn outer_boundary_nodes(q: &Quadrature, spec: &SupportSpec) -> Vec<bool> {
    if q.domain == Domain::KdvLine {
        // the complement of finitely many intervals of a half-line is connected
        return vec![true; q.len()];
    }
    let raster = Raster::build(spec, q);
    (0..q.len())
        .map(|i| {
            let radius = match q.cell_shape[i] {
                CellShape::Panel => q.cell_size[i].max(3.0 * raster.spacing),
                CellShape::Square => q.cell_size[i] + 2.0 * raster.spacing,
            };
            raster.outside_within(q.nodes[i], radius)
        })
        .collect()
}

/// Nodes of area cells lying within one cell of the region boundary.
pub fn region_boundary_band(q: &Quadrature, spec: &SupportSpec) -> Vec<bool> {
    (0..q.len())
        .map(|i| {
            if q.cell_shape[i] != CellShape::Square {
                return false;
            }
            let h = q.cell_size[i];
            let z = q.nodes[i];
            let shape = &spec.primitives[q.panel_of[i]].shape;
            (-1..=1).any(|dj: i32| {
                (-1..=1).any(|di: i32| !shape.contains(z + Complex64::new(di as f64 * h, dj as f64 * h)))
            })
        })
        .collect()
}
