use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coeff::Preset;
use crate::grid::{ShapeFlags, ShapeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEntry {
    pub name: String,
    pub spec: ShapeSpec,
    pub flags: ShapeFlags,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetEntry {
    pub name: String,
    pub description: String,
    pub lambda: f64,
    pub constant: bool,
    pub a11: String,
    pub a12: String,
    pub a22: String,
    pub b1: String,
    pub b2: String,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub domains: Vec<DomainEntry>,
    pub presets: Vec<PresetEntry>,
}

/// Built-in domains, all connected.
pub fn catalog_domains() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec::unit_square(),
        ShapeSpec::l_shape(),
        ShapeSpec::disk([0.5, 0.5], 0.5),
        ShapeSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.875]]),
        ShapeSpec::punctured_disk([0.5, 0.5], 0.5, 0.0),
    ]
}

pub fn catalog() -> Catalog {
    let domains = catalog_domains()
        .into_iter()
        .map(|spec| DomainEntry {
            name: spec.name().to_string(),
            flags: spec.flags(),
            connected: true,
            spec,
        })
        .collect();
    let presets = Preset::ALL
        .iter()
        .map(|&p| {
            let (src, lambda) = p.source();
            PresetEntry {
                name: p.name().to_string(),
                description: p.description().to_string(),
                lambda,
                constant: p.is_constant(),
                a11: src.a11,
                a12: src.a12,
                a22: src.a22,
                b1: src.b1,
                b2: src.b2,
                c: src.c,
            }
        })
        .collect();
    Catalog { domains, presets }
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domains:")?;
        for d in &self.domains {
            let spec = serde_json::to_string(&d.spec).map_err(|_| fmt::Error)?;
            writeln!(
                f,
                "  {:<15} cone={} wiener={}  {}",
                d.name, d.flags.uniform_exterior_cone, d.flags.wiener_regular, spec
            )?;
        }
        writeln!(f, "presets:")?;
        for p in &self.presets {
            writeln!(f, "  {:<15} Λ={:<5} {}", p.name, p.lambda, p.description)?;
        }
        Ok(())
    }
}
