//! Tensor quadrature grids in mapped cylindrical coordinates `(r, z₁, …, z_m)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::kv::KvDocument;
use super::params::{ParamWarning, Params};
use super::quadrature::{fornberg_weights, gauss_legendre, pairwise_sum};
use crate::error::{Error, Result};

/// Resolution and mapping lengths of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes_r: usize,
    pub nodes_z: usize,
    /// Radial mapping length `L_r` in `r = L_r·t/(1−t)`.
    pub scale_r: f64,
    /// Axial mapping length `L_z` in `z = L_z·s/(1−s²)`.
    pub scale_z: f64,
    /// Upper bound on the tensor node count (only binding when m ≥ 2).
    pub node_cap: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nodes_r: 48,
            nodes_z: 96,
            scale_r: 4.0,
            scale_z: 4.0,
            node_cap: 250_000,
        }
    }
}

impl GridSpec {
    pub fn new(nodes_r: usize, nodes_z: usize) -> Self {
        GridSpec {
            nodes_r,
            nodes_z,
            ..Default::default()
        }
    }

    pub fn with_scales(mut self, scale_r: f64, scale_z: f64) -> Self {
        self.scale_r = scale_r;
        self.scale_z = scale_z;
        self
    }

    /// Parses `"48x96"`-style resolutions.
    pub fn parse_resolution(text: &str) -> Result<(usize, usize)> {
        let (a, b) = text
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Parse(format!("resolution `{text}` is not of the form NRxNZ")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad node count `{s}`")))
        };
        Ok((parse(a)?, parse(b)?))
    }

    /// Reads `n, p, k, nodes_r, nodes_z, L_r, L_z` (and optionally
    /// `node_cap`) from a flat key-value document.
    pub fn from_kv(doc: &KvDocument, section: &str) -> Result<(Params, GridSpec)> {
        let params = Params::new(
            doc.require::<usize>(section, "n")?,
            doc.require::<f64>(section, "p")?,
            doc.require::<usize>(section, "k")?,
        )?;
        let d = GridSpec::default();
        let spec = GridSpec {
            nodes_r: doc.get_or(section, "nodes_r", d.nodes_r)?,
            nodes_z: doc.get_or(section, "nodes_z", d.nodes_z)?,
            scale_r: doc.get_or(section, "L_r", d.scale_r)?,
            scale_z: doc.get_or(section, "L_z", d.scale_z)?,
            node_cap: doc.get_or(section, "node_cap", d.node_cap)?,
        };
        Ok((params, spec))
    }

    /// Writes the keys read by [`GridSpec::from_kv`].
    pub fn write_kv(&self, params: &Params, doc: &mut KvDocument, section: &str) {
        doc.set(section, "n", params.n());
        doc.set(section, "p", params.p());
        doc.set(section, "k", params.k());
        doc.set(section, "nodes_r", self.nodes_r);
        doc.set(section, "nodes_z", self.nodes_z);
        doc.set(section, "L_r", self.scale_r);
        doc.set(section, "L_z", self.scale_z);
        doc.set(section, "node_cap", self.node_cap);
    }
}

/// A finite-difference stencil with ghost entries (known zero values) dropped.
#[derive(Debug, Clone, Default)]
pub(crate) struct Stencil {
    pub entries: Vec<(usize, f64)>,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64], base: usize, stride: usize) -> f64 {
        self.entries
            .iter()
            .map(|&(j, w)| w * values[base + j * stride])
            .sum()
    }
}

/// Stencil tables for one coordinate axis.
#[derive(Debug, Clone)]
pub(crate) struct AxisStencils {
    /// Parameter-space first derivative, zero beyond the mapped domain.
    pub decaying_first: Vec<Stencil>,
    /// Parameter-space second derivative, zero beyond the mapped domain.
    pub decaying_second: Vec<Stencil>,
    /// Parameter-space first derivative biased one node forward / backward.
    pub biased: [Vec<Stencil>; 2],
    /// Physical-space first and second derivatives (no far-field assumption).
    pub open_first: Vec<Stencil>,
    pub open_second: Vec<Stencil>,
}

/// One mapped Gauss–Legendre axis.
#[derive(Debug, Clone)]
pub struct Axis {
    /// Unit parameter (t ∈ (0,1) or s ∈ (−1,1)).
    pub param: Vec<f64>,
    /// Physical coordinate.
    pub nodes: Vec<f64>,
    /// Gauss weight times mapping Jacobian (and, on the radial axis, ω_{k−1} r^{k−1}).
    pub weights: Vec<f64>,
    /// First and second derivative of the parameter with respect to the coordinate.
    pub(crate) dparam: Vec<f64>,
    pub(crate) d2param: Vec<f64>,
    pub(crate) stencils: AxisStencils,
}

impl Axis {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn radial(count: usize, scale: f64, k: usize) -> Axis {
        let (x, w) = gauss_legendre(count);
        let omega = sphere_area(k);
        let mut axis = Axis {
            param: Vec::with_capacity(count),
            nodes: Vec::with_capacity(count),
            weights: Vec::with_capacity(count),
            dparam: Vec::with_capacity(count),
            d2param: Vec::with_capacity(count),
            stencils: AxisStencils::empty(),
        };
        for (&x, &w) in x.iter().zip(&w) {
            let t = 0.5 * (x + 1.0);
            let r = scale * t / (1.0 - t);
            let jac = scale / ((1.0 - t) * (1.0 - t));
            axis.param.push(t);
            axis.nodes.push(r);
            axis.weights.push(0.5 * w * jac * omega * r.powi(k as i32 - 1));
            axis.dparam.push((1.0 - t).powi(2) / scale);
            axis.d2param.push(-2.0 * (1.0 - t).powi(3) / (scale * scale));
        }
        axis.stencils = AxisStencils::build(&axis.param, &axis.nodes, None, Some(1.0));
        axis
    }

    fn axial(count: usize, scale: f64) -> Axis {
        let (x, w) = gauss_legendre(count);
        let mut axis = Axis {
            param: x.clone(),
            nodes: Vec::with_capacity(count),
            weights: Vec::with_capacity(count),
            dparam: Vec::with_capacity(count),
            d2param: Vec::with_capacity(count),
            stencils: AxisStencils::empty(),
        };
        for (&s, &w) in x.iter().zip(&w) {
            let q = 1.0 - s * s;
            let z = scale * s / q;
            let jac = scale * (1.0 + s * s) / (q * q);
            let ds = q * q / (scale * (1.0 + s * s));
            let dds = -2.0 * s * q * (3.0 + s * s) / (scale * (1.0 + s * s).powi(2));
            axis.nodes.push(z);
            axis.weights.push(w * jac);
            axis.dparam.push(ds);
            axis.d2param.push(dds * ds);
        }
        axis.stencils = AxisStencils::build(&axis.param, &axis.nodes, Some(-1.0), Some(1.0));
        axis
    }
}

impl AxisStencils {
    fn empty() -> Self {
        AxisStencils {
            decaying_first: Vec::new(),
            decaying_second: Vec::new(),
            biased: [Vec::new(), Vec::new()],
            open_first: Vec::new(),
            open_second: Vec::new(),
        }
    }

    fn build(param: &[f64], phys: &[f64], lo_ghost: Option<f64>, hi_ghost: Option<f64>) -> Self {
        let mut ext = Vec::with_capacity(param.len() + 2);
        let mut ids = Vec::with_capacity(param.len() + 2);
        if let Some(g) = lo_ghost {
            ext.push(g);
            ids.push(None);
        }
        let shift = ext.len();
        for (i, &t) in param.iter().enumerate() {
            ext.push(t);
            ids.push(Some(i));
        }
        if let Some(g) = hi_ghost {
            ext.push(g);
            ids.push(None);
        }
        let phys_ids: Vec<Option<usize>> = (0..phys.len()).map(Some).collect();
        let n = param.len();
        let mut out = AxisStencils::empty();
        for i in 0..n {
            let c = i + shift;
            out.decaying_first.push(first_stencil(&ext, &ids, c, 0));
            out.decaying_second.push(second_stencil(&ext, &ids, c));
            out.biased[0].push(first_stencil(&ext, &ids, c, 1));
            out.biased[1].push(first_stencil(&ext, &ids, c, -1));
            out.open_first.push(first_stencil(phys, &phys_ids, i, 0));
            out.open_second.push(second_stencil(phys, &phys_ids, i));
        }
        out
    }
}

fn clamp_start(c: isize, len: usize, total: usize) -> usize {
    c.clamp(0, (total - len) as isize) as usize
}

fn make_stencil(ext: &[f64], ids: &[Option<usize>], c: usize, start: usize, len: usize, order: usize) -> Stencil {
    let w = fornberg_weights(ext[c], &ext[start..start + len], order);
    let entries = (start..start + len)
        .zip(&w[order])
        .filter_map(|(q, &wq)| ids[q].map(|j| (j, wq)))
        .collect();
    Stencil { entries }
}

fn first_stencil(ext: &[f64], ids: &[Option<usize>], c: usize, offset: isize) -> Stencil {
    let start = clamp_start(c as isize - 2 + offset, 5, ext.len());
    make_stencil(ext, ids, c, start, 5, 1)
}

fn second_stencil(ext: &[f64], ids: &[Option<usize>], c: usize) -> Stencil {
    let central = c as isize - 2;
    if central >= 0 && central as usize + 5 <= ext.len() {
        make_stencil(ext, ids, c, central as usize, 5, 2)
    } else {
        // One-sided second derivatives need a sixth point for fourth order.
        let start = clamp_start(central, 6, ext.len());
        make_stencil(ext, ids, c, start, 6, 2)
    }
}

/// Surface area `ω_{k−1} = 2π^{k/2}/Γ(k/2)` of the unit sphere in ℝᵏ.
pub fn sphere_area(k: usize) -> f64 {
    2.0 * PI.powf(k as f64 / 2.0) / gamma(k as f64 / 2.0)
}

/// Integrability report for the singular weight `|y|⁻¹` on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularMassReport {
    /// Σ quad_weights / r over all nodes.
    pub discrete_mass: f64,
    /// Whether `r^{k−2}` is integrable at the origin with margin (k ≥ 3).
    pub standing_assumption: bool,
    pub warnings: Vec<ParamWarning>,
}

/// Tensor quadrature grid. Nodes are flattened with the radial index fastest:
/// `idx = i_r + N_r·(j₁ + N_z·(j₂ + …))`.
#[derive(Debug, Clone)]
pub struct Grid {
    params: Params,
    spec: GridSpec,
    radial: Axis,
    axial: Option<Axis>,
    quad_weights: Vec<f64>,
    node_r: Vec<f64>,
    node_z: Vec<Vec<f64>>,
}

impl Grid {
    /// Builds the mapped Gauss–Legendre tensor grid.
    pub fn new(params: Params, spec: GridSpec) -> Result<Grid> {
        if spec.nodes_r < 8 || (params.m() > 0 && spec.nodes_z < 8) {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 nodes per axis, got {}x{}",
                spec.nodes_r, spec.nodes_z
            )));
        }
        if !(spec.scale_r.is_finite() && spec.scale_r > 0.0 && spec.scale_z.is_finite() && spec.scale_z > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "mapping scales must be positive, got ({}, {})",
                spec.scale_r, spec.scale_z
            )));
        }
        let m = params.m();
        let total = (spec.nodes_z as u128).pow(m as u32) * spec.nodes_r as u128;
        if m >= 2 && total > spec.node_cap as u128 {
            return Err(Error::InvalidGrid(format!(
                "{total} tensor nodes exceed the cap of {} for m = {m}",
                spec.node_cap
            )));
        }
        let total = total as usize;
        let radial = Axis::radial(spec.nodes_r, spec.scale_r, params.k());
        let axial = (m > 0).then(|| Axis::axial(spec.nodes_z, spec.scale_z));

        let mut quad_weights = Vec::with_capacity(total);
        let mut node_r = Vec::with_capacity(total);
        let mut node_z = vec![Vec::with_capacity(total); m];
        let nr = spec.nodes_r;
        for idx in 0..total {
            let ir = idx % nr;
            let mut w = radial.weights[ir];
            let mut rest = idx / nr;
            for zs in node_z.iter_mut() {
                let ax = axial.as_ref().expect("m > 0 implies an axial axis");
                let j = rest % spec.nodes_z;
                rest /= spec.nodes_z;
                w *= ax.weights[j];
                zs.push(ax.nodes[j]);
            }
            quad_weights.push(w);
            node_r.push(radial.nodes[ir]);
        }
        Ok(Grid {
            params,
            spec,
            radial,
            axial,
            quad_weights,
            node_r,
            node_z,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Number of tensor nodes.
    pub fn len(&self) -> usize {
        self.quad_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quad_weights.is_empty()
    }

    /// Number of z-axes.
    pub fn m(&self) -> usize {
        self.node_z.len()
    }

    /// Node counts per axis, radial first.
    pub fn resolution(&self) -> Vec<usize> {
        let mut out = vec![self.spec.nodes_r];
        out.extend(std::iter::repeat(self.spec.nodes_z).take(self.m()));
        out
    }

    /// Human-readable resolution such as `48x96`.
    pub fn resolution_label(&self) -> String {
        self.resolution()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }

    pub fn map_scales(&self) -> (f64, f64) {
        (self.spec.scale_r, self.spec.scale_z)
    }

    pub fn radial_axis(&self) -> &Axis {
        &self.radial
    }

    pub fn axial_axis(&self) -> Option<&Axis> {
        self.axial.as_ref()
    }

    /// Radial node values (distinct, ascending).
    pub fn r_nodes(&self) -> &[f64] {
        &self.radial.nodes
    }

    /// Axial node values shared by all z-axes (empty when m = 0).
    pub fn z_nodes(&self) -> &[f64] {
        self.axial.as_ref().map_or(&[], |a| &a.nodes)
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Radial coordinate `|y|` of every tensor node.
    pub fn r(&self) -> &[f64] {
        &self.node_r
    }

    /// Coordinate `z_axis` of every tensor node.
    pub fn z(&self, axis: usize) -> &[f64] {
        &self.node_z[axis]
    }

    /// Copies the z-coordinates of node `idx` into `out`.
    #[inline]
    pub fn z_at(&self, idx: usize, out: &mut [f64]) {
        for (o, zs) in out.iter_mut().zip(&self.node_z) {
            *o = zs[idx];
        }
    }

    pub fn coords(&self, idx: usize) -> (f64, Vec<f64>) {
        let mut z = vec![0.0; self.m()];
        self.z_at(idx, &mut z);
        (self.node_r[idx], z)
    }

    /// Flattened stride of direction `dir` (0 = r, j ≥ 1 = z_j).
    pub(crate) fn stride(&self, dir: usize) -> usize {
        if dir == 0 {
            1
        } else {
            self.spec.nodes_r * self.spec.nodes_z.pow(dir as u32 - 1)
        }
    }

    pub(crate) fn axis(&self, dir: usize) -> &Axis {
        if dir == 0 {
            &self.radial
        } else {
            self.axial.as_ref().expect("axial direction requested on a grid with m = 0")
        }
    }

    /// Position of node `idx` along direction `dir`.
    #[inline]
    pub(crate) fn position(&self, idx: usize, dir: usize) -> usize {
        (idx / self.stride(dir)) % self.axis(dir).len()
    }

    /// Σ w/r and the standing-assumption flag for the singular weight.
    pub fn singular_mass(&self) -> SingularMassReport {
        let terms: Vec<f64> = self
            .quad_weights
            .iter()
            .zip(&self.node_r)
            .map(|(w, r)| w / r)
            .collect();
        SingularMassReport {
            discrete_mass: pairwise_sum(&terms),
            standing_assumption: self.params.k() >= 3,
            warnings: self.params.warnings(),
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.params == other.params && self.spec == other.spec)
    }
}
