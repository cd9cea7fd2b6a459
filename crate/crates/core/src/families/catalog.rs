use super::{Base1d, CorrelationFamily, Family, FlowFamily, Gaussian2, LocationFamily, ParetoFamily, Potential, RegressionFamily, ScaleFamily};
use crate::error::{Error, Result};
use crate::sdot2d::build_planar_family;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Construction options for families that need more than an id.
#[derive(Clone, Debug)]
pub struct FamilyOptions {
    /// Design matrix of the regression model; a built-in `50 x 3` design when absent.
    pub design: Option<DMatrix<f64>>,
    /// Integrator step of flow families.
    pub flow_step: f64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self { design: None, flow_step: 1e-3 }
    }
}

fn parse_base(name: &str) -> Result<Base1d> {
    match name {
        "gaussian" => Ok(Base1d::STANDARD_GAUSSIAN),
        "laplace" => Ok(Base1d::STANDARD_LAPLACE),
        "uniform" => Ok(Base1d::Uniform { lo: -0.5, hi: 0.5 }),
        other => Err(Error::Config(format!("unknown base law `{other}`"))),
    }
}

fn parse_dim(part: Option<&str>) -> Result<usize> {
    match part {
        None => Ok(1),
        Some(s) => match s.parse::<usize>() {
            Ok(d) if d >= 1 => Ok(d),
            _ => Err(Error::Config(format!("invalid dimension `{s}`"))),
        },
    }
}

/// Resolves a family id such as `location:gaussian`, `location:laplace:3`,
/// `scale:uniform`, `uniform-scale`, `pareto`, `gauss2`, `corr2d`,
/// `regression`, `flow:quadratic` or `plane:tilt`.
pub fn build_family(id: &str, options: &FamilyOptions) -> Result<Arc<dyn Family>> {
    let parts: Vec<&str> = id.split(':').collect();
    let family: Arc<dyn Family> = match parts.as_slice() {
        ["location", base, rest @ ..] if rest.len() <= 1 => {
            Arc::new(LocationFamily::new(parse_base(base)?, parse_dim(rest.first().copied())?))
        }
        ["scale", base] => {
            let b = match *base {
                "uniform" => Base1d::Uniform { lo: 0.0, hi: 1.0 },
                other => parse_base(other)?,
            };
            Arc::new(ScaleFamily::normalized(b))
        }
        ["uniform-scale"] => Arc::new(ScaleFamily::uniform_zero_theta()),
        ["pareto"] => Arc::new(ParetoFamily::new()),
        ["gauss2"] => Arc::new(Gaussian2::new()),
        ["corr2d"] => Arc::new(CorrelationFamily::new()),
        ["regression"] => Arc::new(RegressionFamily::new(
            options.design.clone().unwrap_or_else(RegressionFamily::default_design),
        )?),
        ["flow", name, rest @ ..] if rest.len() <= 1 => {
            let d = parse_dim(rest.first().copied())?;
            let potential = match *name {
                "linear" => Potential::Linear { direction: vec![1.0; d] },
                "quadratic" => Potential::Quadratic { d },
                "zero" => Potential::Zero { d },
                "logcosh" => Potential::LogCosh { d },
                other => return Err(Error::Config(format!("unknown flow potential `{other}`"))),
            };
            Arc::new(FlowFamily::new(potential, Base1d::STANDARD_GAUSSIAN, options.flow_step)?)
        }
        ["plane", ..] => build_planar_family(id)?,
        _ => return Err(Error::Config(format!("unknown family id `{id}`"))),
    };
    Ok(family)
}

/// Immutable set of registered families, addressable by id.
#[derive(Clone, Debug, Default)]
pub struct FamilyCatalog {
    families: Vec<Arc<dyn Family>>,
}

impl FamilyCatalog {
    pub fn get(&self, id: &str) -> Option<Arc<dyn Family>> {
        self.families.iter().find(|f| f.id() == id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.families.iter().map(|f| f.id())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Family>> {
        self.families.iter()
    }

    pub fn register(&mut self, family: Arc<dyn Family>) {
        self.families.retain(|f| f.id() != family.id());
        self.families.push(family);
    }
}

/// Ids of every built-in family.
pub const BUILTIN_FAMILY_IDS: &[&str] = &[
    "location:gaussian",
    "location:laplace",
    "location:uniform",
    "location:gaussian:2",
    "scale:uniform",
    "scale:gaussian",
    "scale:laplace",
    "uniform-scale",
    "pareto",
    "gauss2",
    "corr2d",
    "regression",
    "flow:linear",
    "flow:quadratic",
    "flow:zero",
    "flow:logcosh",
    "plane:uniform",
    "plane:location:x",
    "plane:location:y",
    "plane:tilt",
    "plane:tgauss-scale",
];

pub fn register_builtin_families() -> FamilyCatalog {
    let options = FamilyOptions::default();
    let mut catalog = FamilyCatalog::default();
    for id in BUILTIN_FAMILY_IDS {
        catalog.register(build_family(id, &options).expect("built-in ids resolve"));
    }
    catalog
}
