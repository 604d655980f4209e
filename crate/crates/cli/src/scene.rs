use hb_core::convex::Polytope;
use hb_core::groups::{punctured_torus_rep, punctured_torus_wall};
use hb_core::{build_bent_domain, BendParams, BentBuild, ConvexDomain, QuadricDomain, Representation};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub schema: u32,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub probe: ProbeSettings,
    #[serde(default)]
    pub render: RenderSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `{x : xᵀQx < 0}`; an empty form means the Klein model.
    Ellipsoid {
        #[serde(default)]
        form: Vec<Vec<f64>>,
    },
    /// `{a : normal·a < offset}` in the standard chart.
    Polytope { faces: Vec<Face> },
    Bend {
        base: BaseRep,
        t: f64,
        #[serde(default = "default_depth")]
        depth: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Face {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseRep {
    PuncturedTorus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepName {
    PuncturedTorus,
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub rep: RepName,
    #[serde(default = "default_word_len")]
    pub word_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSettings {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub linalg_tol: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 1,
            tol: 1e-9,
            linalg_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSettings {
    /// `[xmin, ymin, xmax, ymax]` in chart coordinates.
    pub viewport: [f64; 4],
    pub boundary_points: usize,
    pub boundary_color: String,
    pub tile_color: String,
    pub wall_color: String,
    pub stroke_width: f64,
    /// Walls of the bent domain drawn up to this depth.
    pub wall_depth: usize,
    /// Bending parameters of the progression panels.
    pub t_steps: Vec<f64>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            viewport: [-1.1, -1.1, 1.1, 1.1],
            boundary_points: 720,
            boundary_color: "#111827".into(),
            tile_color: "#2563eb".into(),
            wall_color: "#dc2626".into(),
            stroke_width: 1.0,
            wall_depth: 3,
            t_steps: vec![0.0, 0.1, 0.2, 0.3],
        }
    }
}

fn default_dimension() -> usize {
    2
}

fn default_depth() -> usize {
    6
}

fn default_word_len() -> usize {
    4
}

/// Parse or validation failure, located by field path and, for syntax and
/// type errors, by line and column.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}{}", location(.line, .column))]
pub struct SchemaError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

fn location(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" (line {l}, column {c})"),
        _ => String::new(),
    }
}

impl SchemaError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("domain construction failed: {0}")]
    Domain(#[from] hb_core::DomainError),
    #[error("bending failed: {0}")]
    Bend(#[from] hb_core::BendError),
    #[error("group construction failed: {0}")]
    Group(#[from] hb_core::GroupError),
}

pub fn parse_scene(text: &str) -> Result<Scene, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut scene: Scene = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        SchemaError {
            path,
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }
    })?;
    scene.validate()?;
    Ok(scene)
}

/// Pretty JSON with every default spelled out.
pub fn serialize_scene(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(scene).expect("scene serializes");
    s.push('\n');
    s
}

pub(crate) fn klein_form(n: usize) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    if i != j {
                        0.0
                    } else if i == n {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect()
}

fn signature(q: &DMatrix<f64>) -> (usize, usize) {
    let eig = q.clone().symmetric_eigenvalues();
    let scale = eig.amax();
    let pos = eig.iter().filter(|e| **e > 1e-12 * scale).count();
    let neg = eig.iter().filter(|e| **e < -1e-12 * scale).count();
    (pos, neg)
}

impl Scene {
    /// The Klein-model scene with every setting at its default.
    pub fn klein(dimension: usize) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            dimension,
            domain: DomainSpec::Ellipsoid {
                form: klein_form(dimension),
            },
            group: None,
            probe: ProbeSettings::default(),
            render: RenderSettings::default(),
        }
    }

    /// Checks the schema version, arities and quadric signature, and fills
    /// the Klein form in for an empty one.
    pub fn validate(&mut self) -> Result<(), SchemaError> {
        if self.schema != SCHEMA_VERSION {
            return Err(SchemaError::at(
                "schema",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        let n = self.dimension;
        if n < 2 {
            return Err(SchemaError::at("dimension", "dimension must be at least 2"));
        }
        match &mut self.domain {
            DomainSpec::Ellipsoid { form } => {
                if form.is_empty() {
                    *form = klein_form(n);
                }
                if form.len() != n + 1 {
                    return Err(SchemaError::at(
                        "domain.form",
                        format!("expected {} rows, found {}", n + 1, form.len()),
                    ));
                }
                for (i, row) in form.iter().enumerate() {
                    if row.len() != n + 1 {
                        return Err(SchemaError::at(
                            format!("domain.form[{i}]"),
                            format!("expected {} entries, found {}", n + 1, row.len()),
                        ));
                    }
                }
                let q = DMatrix::from_fn(n + 1, n + 1, |i, j| form[i][j]);
                if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
                    return Err(SchemaError::at("domain.form", "form is not symmetric"));
                }
                let (pos, neg) = signature(&q);
                if (pos, neg) != (n, 1) {
                    return Err(SchemaError::at(
                        "domain.form",
                        format!("signature ({pos},{neg}), expected ({n},1)"),
                    ));
                }
            }
            DomainSpec::Polytope { faces } => {
                if faces.len() < n + 1 {
                    return Err(SchemaError::at(
                        "domain.faces",
                        format!("a bounded polytope needs at least {} faces", n + 1),
                    ));
                }
                for (i, f) in faces.iter().enumerate() {
                    if f.normal.len() != n {
                        return Err(SchemaError::at(
                            format!("domain.faces[{i}].normal"),
                            format!("expected {n} entries, found {}", f.normal.len()),
                        ));
                    }
                }
            }
            DomainSpec::Bend { t, depth, .. } => {
                if n != 2 {
                    return Err(SchemaError::at(
                        "dimension",
                        "the punctured torus recipe is two-dimensional",
                    ));
                }
                if !t.is_finite() {
                    return Err(SchemaError::at("domain.t", "bending parameter must be finite"));
                }
                if *depth == 0 {
                    return Err(SchemaError::at("domain.depth", "depth must be positive"));
                }
            }
        }
        if let Some(g) = &self.group {
            if n != 2 {
                return Err(SchemaError::at("group", "group recipes are two-dimensional"));
            }
            if g.word_len == 0 || g.word_len > 8 {
                return Err(SchemaError::at("group.word_len", "word length must lie in 1..=8"));
            }
        }
        let p = &self.probe;
        if !(p.tol > 0.0) || !(p.linalg_tol > 0.0) {
            return Err(SchemaError::at("probe", "tolerances must be positive"));
        }
        let v = &self.render.viewport;
        if !(v[2] > v[0] && v[3] > v[1]) {
            return Err(SchemaError::at("render.viewport", "viewport must have positive extent"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Built, SceneError> {
        let n = self.dimension;
        Ok(match &self.domain {
            DomainSpec::Ellipsoid { form } => {
                let form = if form.is_empty() { klein_form(n) } else { form.clone() };
                let q = DMatrix::from_fn(n + 1, n + 1, |i, j| form[i][j]);
                Built::Quadric(QuadricDomain::new(q)?.with_tol(self.probe.tol))
            }
            DomainSpec::Polytope { faces } => {
                let faces: Vec<(Vec<f64>, f64)> = faces.iter().map(|f| (f.normal.clone(), f.offset)).collect();
                Built::Polytope(Polytope::from_inequalities(&faces)?.with_tol(self.probe.tol))
            }
            DomainSpec::Bend { t, depth, .. } => Built::Bent(Box::new(self.bend_with(*t, *depth)?)),
        })
    }

    /// Bent domain of the scene's recipe at another parameter.
    pub fn bend_with(&self, t: f64, depth: usize) -> Result<BentBuild, SceneError> {
        let rho0 = punctured_torus_rep();
        let (base, wall) = punctured_torus_wall();
        let dec = rho0.decomposition().expect("torus carries its decomposition").clone();
        Ok(build_bent_domain(
            &rho0,
            &dec,
            &base,
            &wall,
            &BendParams::new(t, depth),
        )?)
    }

    /// Representation named by the scene: the group recipe, or the bent
    /// holonomy of a bend scene.
    pub fn representation(&self, built: &Built) -> Option<Representation> {
        if let Built::Bent(b) = built {
            return Some(b.rho_t.clone());
        }
        self.group.as_ref().map(|g| match g.rep {
            RepName::PuncturedTorus => punctured_torus_rep(),
            RepName::Trivial => Representation::trivial(&["a", "b"], self.dimension),
        })
    }

    pub fn word_len(&self) -> usize {
        self.group.as_ref().map_or(default_word_len(), |g| g.word_len)
    }
}

/// A scene's domain, constructed.
pub enum Built {
    Quadric(QuadricDomain),
    Polytope(Polytope),
    Bent(Box<BentBuild>),
}

impl Built {
    pub fn domain(&self) -> &dyn ConvexDomain {
        match self {
            Built::Quadric(d) => d,
            Built::Polytope(d) => d,
            Built::Bent(b) => &b.domain,
        }
    }
}
