//! JSON map specification records.
//!
//! A record is either a bare map, e.g.
//! `{"kind":"radial_power","C":[1,0],"n":1,"m":1,"R":1}`,
//! or a wrapper `{"map": {...}, "representative": {...}, "seed": 0}` where the
//! optional `representative` replaces the computed asymptotic representative
//! by an explicit radial power map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapKind, PlanarMap};
use crate::Complex;

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    RadialPower {
        #[serde(rename = "C")]
        c: [f64; 2],
        n: u32,
        m: f64,
        #[serde(rename = "R", default = "default_radius")]
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<u32>,
    },
    HolomorphicSeries {
        coeffs: Vec<[f64; 2]>,
        #[serde(rename = "R", default = "default_radius")]
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<u32>,
    },
    PerturbedRadial {
        #[serde(rename = "C")]
        c: [f64; 2],
        n: u32,
        m: f64,
        eps: f64,
        series: Vec<[f64; 2]>,
        #[serde(rename = "R", default = "default_radius")]
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<u32>,
    },
    Composition {
        maps: Vec<MapSpec>,
        #[serde(rename = "R", default = "default_radius")]
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<u32>,
    },
}

fn cx(p: [f64; 2]) -> Complex {
    Complex::new(p[0], p[1])
}

fn pair(z: Complex) -> [f64; 2] {
    [z.re, z.im]
}

impl MapSpec {
    pub fn build(&self) -> Result<PlanarMap> {
        let (map, index) = match self {
            MapSpec::RadialPower { c, n, m, r, index } => {
                (PlanarMap::radial_power(cx(*c), *n, *m, *r)?, *index)
            }
            MapSpec::HolomorphicSeries { coeffs, r, index } => {
                (PlanarMap::holomorphic(coeffs.iter().copied().map(cx).collect(), *r)?, *index)
            }
            MapSpec::PerturbedRadial { c, n, m, eps, series, r, index } => (
                PlanarMap::perturbed_radial(
                    cx(*c),
                    *n,
                    *m,
                    *eps,
                    series.iter().copied().map(cx).collect(),
                    *r,
                )?,
                *index,
            ),
            MapSpec::Composition { maps, r, index } => {
                let parts = maps.iter().map(MapSpec::build).collect::<Result<Vec<_>>>()?;
                (PlanarMap::composition(parts, *r)?, *index)
            }
        };
        Ok(match index {
            Some(d) => map.with_index(d),
            None => map,
        })
    }

    /// The record describing `map`; `None` for custom maps.
    pub fn from_map(map: &PlanarMap) -> Option<Self> {
        let r = map.domain_radius;
        let index = map.declared_index;
        Some(match &map.kind {
            MapKind::RadialPower { c, n, m } => {
                MapSpec::RadialPower { c: pair(*c), n: *n, m: *m, r, index }
            }
            MapKind::HolomorphicSeries { coeffs } => MapSpec::HolomorphicSeries {
                coeffs: coeffs.iter().copied().map(pair).collect(),
                r,
                index,
            },
            MapKind::PerturbedRadial { c, n, m, eps, series } => MapSpec::PerturbedRadial {
                c: pair(*c),
                n: *n,
                m: *m,
                eps: *eps,
                series: series.iter().copied().map(pair).collect(),
                r,
                index,
            },
            MapKind::Composition(maps) => MapSpec::Composition {
                maps: maps.iter().map(MapSpec::from_map).collect::<Option<Vec<_>>>()?,
                r,
                index,
            },
            MapKind::Custom(_) => return None,
        })
    }
}

/// A parsed specification file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representative: Option<MapSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let wrapped = value.as_object().is_some_and(|o| o.contains_key("map"));
        let spec = if wrapped {
            serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?
        } else {
            let map: MapSpec =
                serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
            SpecFile { map, representative: None, seed: 0 }
        };
        if let Some(rep) = &spec.representative {
            if !matches!(rep, MapSpec::RadialPower { .. }) {
                return Err(Error::Parse("representative override must be a radial_power record".into()));
            }
        }
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_record_parses() {
        let s = SpecFile::parse(r#"{"kind":"radial_power","C":[1,0],"n":1,"m":1,"R":1}"#).unwrap();
        let f = s.map.build().unwrap();
        assert!((f.eval(Complex::new(0.5, 0.0)).unwrap() - 0.25).norm() < 1e-15);
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn composition_applies_right_to_left() {
        let text = r#"{"kind":"composition","R":1,"maps":[
            {"kind":"holomorphic_series","coeffs":[[0,0],[1,0]]},
            {"kind":"holomorphic_series","coeffs":[[0.5,0],[0.1,0]]}]}"#;
        let f = SpecFile::parse(text).unwrap().map.build().unwrap();
        let z = Complex::new(0.2, 0.1);
        let inner = 0.5 * z + 0.1 * z * z;
        assert!((f.eval(z).unwrap() - inner * inner).norm() < 1e-15);
    }

    #[test]
    fn wrapped_record_round_trips() {
        let text = r#"{"map":{"kind":"perturbed_radial","C":[1,0],"n":1,"m":1,"eps":0.05,"series":[[1,0]]},
                       "representative":{"kind":"radial_power","C":[1,0],"n":1,"m":1},"seed":7}"#;
        let s = SpecFile::parse(text).unwrap();
        assert_eq!(s.seed, 7);
        let again = SpecFile::parse(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, again);
        let rebuilt = MapSpec::from_map(&s.map.build().unwrap()).unwrap();
        assert_eq!(rebuilt, s.map);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(SpecFile::parse("{not json"), Err(Error::Parse(_))));
        assert!(matches!(SpecFile::parse(r#"{"kind":"warp"}"#), Err(Error::Parse(_))));
        assert!(matches!(
            SpecFile::parse(r#"{"kind":"radial_power","C":[1,0],"n":1,"m":1,"extra":2}"#),
            Err(Error::Parse(_))
        ));
    }
}
