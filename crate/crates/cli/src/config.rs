//! Declarative run configuration: a catalog entry for the space, an optional
//! germ, and the scalar knobs of each command. Flags override scalars.

use std::path::Path;

use cmg_core::catalog::{self, Bump, Profile};
use cmg_core::germs::{model_germ, Model};
use cmg_core::{ChartPoint, GermSpec, MetricChart};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogEntry {
    Euclidean { n: usize },
    Sphere { n: usize, c: f64 },
    Hyperbolic { n: usize, c: f64 },
    Revolution { phi: Profile },
    Product { factors: [Box<CatalogEntry>; 2] },
    ConformalPerturbation { base: Box<CatalogEntry>, u: Bump, eps: f64 },
}

impl CatalogEntry {
    pub fn build(&self) -> cmg_core::Result<MetricChart> {
        match self {
            CatalogEntry::Euclidean { n } => catalog::euclidean(*n),
            CatalogEntry::Sphere { n, c } => catalog::sphere(*n, *c),
            CatalogEntry::Hyperbolic { n, c } => catalog::hyperbolic(*n, *c),
            CatalogEntry::Revolution { phi } => catalog::revolution(*phi),
            CatalogEntry::Product { factors } => MetricChart::product(&factors[0].build()?, &factors[1].build()?),
            CatalogEntry::ConformalPerturbation { base, u, eps } => {
                catalog::conformal_perturbation(&base.build()?, *u, *eps)
            }
        }
    }

    /// The germ that comes with the space, if there is one.
    pub fn canonical_germ(&self) -> cmg_core::Result<Option<GermSpec>> {
        Ok(match self {
            CatalogEntry::Euclidean { n } => Some(model_germ(Model::Euclidean, *n)?.1),
            CatalogEntry::Sphere { n, c } => Some(model_germ(Model::Sphere { c: *c }, *n)?.1),
            CatalogEntry::Hyperbolic { n, c } => Some(model_germ(Model::Hyperbolic { c: *c }, *n)?.1),
            CatalogEntry::Revolution { phi } => Some(catalog::revolution_germ(*phi)),
            CatalogEntry::Product { .. } => None,
            CatalogEntry::ConformalPerturbation { base, .. } => base.canonical_germ()?,
        })
    }

    fn set_scalars(&mut self, n: Option<usize>, c: Option<f64>, eps: Option<f64>) {
        match self {
            CatalogEntry::Euclidean { n: dim } => *dim = n.unwrap_or(*dim),
            CatalogEntry::Sphere { n: dim, c: curv } | CatalogEntry::Hyperbolic { n: dim, c: curv } => {
                *dim = n.unwrap_or(*dim);
                *curv = c.unwrap_or(*curv);
            }
            CatalogEntry::Revolution { .. } | CatalogEntry::Product { .. } => {}
            CatalogEntry::ConformalPerturbation { base, eps: e, .. } => {
                *e = eps.unwrap_or(*e);
                base.set_scalars(n, c, None);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GermEntry {
    /// the space's own germ
    Model,
    Saddle2d,
    /// Morse index `k` quadratic at the origin
    Quadratic { k: usize },
}

impl GermEntry {
    fn parse(s: &str) -> Result<Self, Failure> {
        match s {
            "model" => Ok(GermEntry::Model),
            "saddle2d" => Ok(GermEntry::Saddle2d),
            _ => match s.strip_prefix("quadratic:").map(str::parse) {
                Some(Ok(k)) => Ok(GermEntry::Quadratic { k }),
                _ => Err(Failure::Parse(format!("unknown germ `{s}` (model, saddle2d, quadratic:<k>)"))),
            },
        }
    }

    fn implied_dim(&self) -> Option<usize> {
        match self {
            GermEntry::Saddle2d => Some(2),
            _ => None,
        }
    }
}

/// Bump used by the perturbed spaces and the sweep; `none` makes the family constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BumpChoice {
    Gaussian,
    Saddle,
    None,
}

impl BumpChoice {
    pub fn bump(self) -> Option<Bump> {
        match self {
            BumpChoice::Gaussian => Some(Bump::Gaussian),
            BumpChoice::Saddle => Some(Bump::Saddle),
            BumpChoice::None => None,
        }
    }
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub space: Option<CatalogEntry>,
    pub germ: Option<GermEntry>,
    pub point: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub bump: Option<BumpChoice>,
    pub samples: Option<usize>,
    pub count: Option<usize>,
    pub tol_scale: Option<f64>,
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Constant,
    Nonconstant,
}

/// Flag values that feed into [`Resolved`].
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub space: Option<String>,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub germ: Option<String>,
    pub point: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub bump: Option<BumpChoice>,
    pub samples: Option<usize>,
    pub count: Option<usize>,
    pub tol_scale: Option<f64>,
    pub expect: Option<Expectation>,
}

/// Fully resolved inputs, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub space: Option<CatalogEntry>,
    pub germ: Option<GermEntry>,
    pub point: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub bump: BumpChoice,
    pub samples: Option<usize>,
    pub count: Option<usize>,
    pub tol_scale: f64,
    pub expect: Option<Expectation>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Parse(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Parse(format!("config {}: {e}", path.display())))
}

pub fn resolve(file: FileConfig, o: Overrides) -> Result<Resolved, Failure> {
    let germ = match &o.germ {
        Some(s) => Some(GermEntry::parse(s)?),
        None => file.germ,
    };
    let bump = o.bump.or(file.bump).unwrap_or(BumpChoice::Gaussian);
    let space = match &o.space {
        Some(s) => {
            let n = o.n.or_else(|| germ.as_ref().and_then(GermEntry::implied_dim)).unwrap_or(3);
            Some(parse_space(s, n, o.c.unwrap_or(1.0), o.eps.unwrap_or(0.1), bump)?)
        }
        None => file.space.map(|mut entry| {
            entry.set_scalars(o.n, o.c, o.eps);
            entry
        }),
    };
    let tol_scale = o.tol_scale.or(file.tol_scale).unwrap_or(1.0);
    if !(tol_scale >= 0.0 && tol_scale.is_finite()) {
        return Err(Failure::Parse(format!("tolerance scale must be >= 0, got {tol_scale}")));
    }
    Ok(Resolved {
        space,
        germ,
        point: o.point.or(file.point),
        radius: o.radius.or(file.radius),
        grid: o.grid.or(file.grid),
        bump,
        samples: o.samples.or(file.samples),
        count: o.count.or(file.count),
        tol_scale,
        expect: o.expect.or(file.expect),
    })
}

fn parse_profile(s: &str) -> Result<Profile, Failure> {
    match s {
        "sin" => Ok(Profile::Sin),
        "sinh" => Ok(Profile::Sinh),
        "id" => Ok(Profile::Id),
        _ => s
            .strip_prefix("cubic(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|a| a.parse().ok())
            .map(Profile::Cubic)
            .ok_or_else(|| Failure::Parse(format!("unknown profile `{s}` (sin, sinh, id, cubic(a))"))),
    }
}

fn parse_factor(s: &str, c: f64) -> Result<CatalogEntry, Failure> {
    let bad = || Failure::Parse(format!("unknown product factor `{s}` (s<k>, h<k>, e<k>, r)"));
    if s == "r" {
        return Ok(CatalogEntry::Euclidean { n: 1 });
    }
    let (head, dim) = s.split_at(1.min(s.len()));
    let n: usize = dim.parse().map_err(|_| bad())?;
    match head {
        "s" => Ok(CatalogEntry::Sphere { n, c }),
        "h" => Ok(CatalogEntry::Hyperbolic { n, c }),
        "e" => Ok(CatalogEntry::Euclidean { n }),
        _ => Err(bad()),
    }
}

/// `euclidean | sphere | hyperbolic | revolution:<phi> | product:<a>x<b> | perturbed:<model>`
pub fn parse_space(s: &str, n: usize, c: f64, eps: f64, bump: BumpChoice) -> Result<CatalogEntry, Failure> {
    let model = |name: &str| match name {
        "euclidean" => Ok(CatalogEntry::Euclidean { n }),
        "sphere" => Ok(CatalogEntry::Sphere { n, c }),
        "hyperbolic" => Ok(CatalogEntry::Hyperbolic { n, c }),
        _ => Err(Failure::Parse(format!("unknown space `{s}`"))),
    };
    if let Some(phi) = s.strip_prefix("revolution:") {
        return Ok(CatalogEntry::Revolution { phi: parse_profile(phi)? });
    }
    if let Some(spec) = s.strip_prefix("product:") {
        let parts: Vec<&str> = spec.split('x').collect();
        if parts.len() != 2 {
            return Err(Failure::Parse(format!("product needs two factors, got `{spec}`")));
        }
        return Ok(CatalogEntry::Product {
            factors: [Box::new(parse_factor(parts[0], c)?), Box::new(parse_factor(parts[1], c)?)],
        });
    }
    if let Some(base) = s.strip_prefix("perturbed:") {
        let u = bump
            .bump()
            .ok_or_else(|| Failure::Parse("a perturbed space needs a bump other than none".into()))?;
        return Ok(CatalogEntry::ConformalPerturbation { base: Box::new(model(base)?), u, eps });
    }
    model(s)
}

/// Metric, germ and point for a resolved configuration.
pub struct Instance {
    pub metric: MetricChart,
    pub germ: Option<GermSpec>,
}

impl Resolved {
    pub fn instance(&self) -> Result<Instance, Failure> {
        let entry = self
            .space
            .clone()
            .ok_or_else(|| Failure::Parse("no space given (use --space or a config file)".into()))?;
        let metric = entry.build()?;
        let germ = build_germ(&entry, metric.dim(), self.germ.as_ref())?;
        Ok(Instance { metric, germ })
    }

    pub fn point_or(&self, default: ChartPoint) -> Result<ChartPoint, Failure> {
        Ok(self.point.clone().map(ChartPoint::new).unwrap_or(default))
    }
}

/// The germ selected by `germ` (the space's own germ when `None`).
pub fn build_germ(entry: &CatalogEntry, dim: usize, germ: Option<&GermEntry>) -> Result<Option<GermSpec>, Failure> {
    Ok(match germ.unwrap_or(&GermEntry::Model) {
        GermEntry::Model => entry.canonical_germ()?,
        GermEntry::Saddle2d => {
            if dim != 2 {
                return Err(Failure::Domain(cmg_core::Error::DimensionMismatch { expected: 2, got: dim }));
            }
            Some(catalog::saddle_2d())
        }
        GermEntry::Quadratic { k } => Some(catalog::quadratic_germ(dim, *k)?),
    })
}

impl Instance {
    pub fn require_germ(&self) -> Result<&GermSpec, Failure> {
        self.germ
            .as_ref()
            .ok_or_else(|| Failure::Parse(format!("space `{}` has no canonical germ; pass --germ", self.metric.name())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_strings() {
        let b = BumpChoice::Gaussian;
        assert_eq!(parse_space("sphere", 3, 2.0, 0.1, b).unwrap(), CatalogEntry::Sphere { n: 3, c: 2.0 });
        assert_eq!(
            parse_space("revolution:cubic(1)", 2, 1.0, 0.1, b).unwrap(),
            CatalogEntry::Revolution { phi: Profile::Cubic(1.0) }
        );
        let p = parse_space("product:s2xr", 3, 1.0, 0.1, b).unwrap();
        assert_eq!(p.build().unwrap().dim(), 3);
        assert!(parse_space("product:s2", 3, 1.0, 0.1, b).is_err());
        assert!(parse_space("torus", 3, 1.0, 0.1, b).is_err());
        assert!(parse_space("perturbed:sphere", 3, 1.0, 0.1, BumpChoice::None).is_err());
    }

    #[test]
    fn config_file_round_trip_and_overrides() {
        let text = r#"
            space = { kind = "conformal_perturbation", u = "gaussian", eps = 0.2, base = { kind = "sphere", n = 3, c = 1.0 } }
            germ = { kind = "quadratic", k = 1 }
            grid = [0.0, 0.1]
        "#;
        let file: FileConfig = toml::from_str(text).unwrap();
        let r = resolve(file, Overrides { c: Some(2.0), eps: Some(0.05), ..Overrides::default() }).unwrap();
        match r.space.unwrap() {
            CatalogEntry::ConformalPerturbation { base, eps, .. } => {
                assert_eq!(eps, 0.05);
                assert_eq!(*base, CatalogEntry::Sphere { n: 3, c: 2.0 });
            }
            e => panic!("{e:?}"),
        }
        assert_eq!(r.germ, Some(GermEntry::Quadratic { k: 1 }));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn saddle_germ_implies_plane() {
        let r = resolve(
            FileConfig::default(),
            Overrides { space: Some("euclidean".into()), germ: Some("saddle2d".into()), ..Overrides::default() },
        )
        .unwrap();
        assert_eq!(r.instance().unwrap().metric.dim(), 2);
    }
}
