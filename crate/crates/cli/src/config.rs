//! Versioned JSON config schema. Unknown fields are rejected; sequences and
//! generators are described symbolically so schedules can extend without
//! file bloat, with a raw-matrix escape hatch.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

use mobius_core::cones::{schedule_geometric, schedule_linear, ParabolicSequence, SequenceFactor};
use mobius_core::group::GroupElement;
use mobius_core::kleinian::{fixtures, GroupPresentation, OmegaFixture};
use mobius_core::mat::Mat;

/// Flags forwarded from the command line.
#[derive(Debug, Clone)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    /// Global multiplier applied to scenario tolerances.
    pub tolerance_scale: f64,
    /// Replaces the largest schedule exponent (default 12).
    pub schedule_max_exp: Option<u32>,
}

impl Default for CliOverrides {
    fn default() -> Self {
        CliOverrides { seed: None, tolerance_scale: 1.0, schedule_max_exp: None }
    }
}

/// A parsed, validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub schedule_max_exp: u32,
    pub out_prefix: String,
}

impl ScenarioConfig {
    pub fn scenario_name(&self) -> &'static str {
        match &self.scenario {
            Scenario::ConeDynamics { .. } => "cone-dynamics",
            Scenario::LimitSet { .. } => "limit-set",
            Scenario::Maximality { .. } => "maximality",
            Scenario::SimpleDivergence { .. } => "simple-divergence",
            Scenario::CauchyProbe { .. } => "cauchy-probe",
            Scenario::NormalDomain { .. } => "normal-domain",
            Scenario::JacobianCheck { .. } => "jacobian-check",
        }
    }

    pub fn report_name(&self) -> String {
        format!("{}.report.json", self.out_prefix)
    }
}

/// Scenario payloads after validation.
#[derive(Debug, Clone)]
pub enum Scenario {
    ConeDynamics {
        cone: mobius_core::cones::Cone,
        sequence: ParabolicSequence,
        resolution: f64,
        margin: f64,
    },
    LimitSet {
        group: GroupPresentation,
        depth: usize,
        method: mobius_core::kleinian::LimitSetMethod,
    },
    Maximality {
        group: GroupPresentation,
        fixture: OmegaFixture,
        eps: f64,
        depth: usize,
        expect_maximal: Option<bool>,
        /// Configured lower bound on the reported gap (hemisphere fixture).
        min_gap: Option<f64>,
    },
    SimpleDivergence {
        boost_rate: f64,
        rotation_angle: Option<f64>,
        count: usize,
    },
    CauchyProbe {
        two_points: bool,
        pairs: usize,
    },
    NormalDomain {
        domain: mobius_core::domains::Domain,
        h: f64,
        pairs: usize,
        pair_list: Vec<PairSpec>,
        fibered: bool,
        include_reference_pair: bool,
    },
    JacobianCheck {
        samples: usize,
        fd_step: f64,
        scale: f64,
    },
}

fn default_seed() -> u64 {
    0
}

fn default_out() -> String {
    "out".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeDynamicsRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    cone: ConeSpec,
    sequence: SequenceSpec,
    #[serde(default = "default_resolution")]
    resolution: f64,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_resolution() -> f64 {
    0.01
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeSpec {
    center: Vec<f64>,
    alpha: f64,
    lambda: f64,
}

/// Symbolic similarity sequence: a product of closed-form factors.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceSpec {
    factors: Vec<FactorSpec>,
    /// "geometric" (k = 2^0..2^max) or "linear" (k = 0..max).
    #[serde(default = "default_schedule_kind")]
    schedule: String,
    /// Caller-asserted limits, for sequences that stabilize only along a
    /// subsequence the caller has in mind.
    #[serde(default)]
    asserted: Option<AssertedSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssertedSpec {
    /// A number, "inf" or "zero".
    lambda: serde_json::Value,
    mu: serde_json::Value,
    #[serde(default)]
    ratio: Option<serde_json::Value>,
    /// Limit translation direction.
    #[serde(default)]
    u: Option<Vec<f64>>,
    /// Planar rotation-limit angle (n = 2); identity when omitted.
    #[serde(default)]
    rot_angle: Option<f64>,
}

fn parse_lim(v: &serde_json::Value, what: &str) -> anyhow::Result<mobius_core::cones::Lim> {
    use mobius_core::cones::Lim;
    if let Some(x) = v.as_f64() {
        if x == 0.0 {
            return Ok(Lim::Zero);
        }
        return Ok(Lim::Finite(x));
    }
    match v.as_str() {
        Some("inf") => Ok(Lim::Infinite),
        Some("zero") => Ok(Lim::Zero),
        _ => bail!("{what} must be a number, \"inf\" or \"zero\""),
    }
}

impl AssertedSpec {
    fn build(&self, n: usize) -> anyhow::Result<mobius_core::cones::AssertedLimits> {
        let rot = match self.rot_angle {
            None => None,
            Some(a) => {
                if n != 2 {
                    bail!("rot_angle assertions are wired for n = 2 charts");
                }
                let mut m = Mat::identity(2);
                m[(0, 0)] = a.cos();
                m[(0, 1)] = -a.sin();
                m[(1, 0)] = a.sin();
                m[(1, 1)] = a.cos();
                Some(m)
            }
        };
        Ok(mobius_core::cones::AssertedLimits {
            lambda: parse_lim(&self.lambda, "lambda")?,
            mu: parse_lim(&self.mu, "mu")?,
            ratio: match &self.ratio {
                Some(v) => parse_lim(v, "ratio")?,
                None => mobius_core::cones::Lim::Finite(0.0),
            },
            u: self.u.clone(),
            rot,
        })
    }
}

fn default_schedule_kind() -> String {
    "auto".into()
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum FactorSpec {
    /// `lambda_k = rate^k`; "boost" is an alias used by the chart reading.
    Homothety { rate: f64 },
    Boost { rate: f64 },
    Translation { dir: Vec<f64>, speed: f64 },
    TranslationPow { dir: Vec<f64>, rate: f64 },
    Rotation { angle: f64 },
    /// Rotation by `k * angle`; needs a stabilizing subsequence schedule.
    RotationPow { angle: f64 },
}

impl FactorSpec {
    fn build(&self, n: usize) -> anyhow::Result<(SequenceFactor, bool)> {
        Ok(match self {
            FactorSpec::Homothety { rate } | FactorSpec::Boost { rate } => {
                (SequenceFactor::HomothetyPow { rate: *rate }, true)
            }
            FactorSpec::Translation { dir, speed } => (
                SequenceFactor::TranslationLinear { dir: dir.clone(), speed: *speed },
                false,
            ),
            FactorSpec::TranslationPow { dir, rate } => {
                (SequenceFactor::TranslationPow { dir: dir.clone(), rate: *rate }, true)
            }
            FactorSpec::Rotation { angle } => {
                if n != 2 {
                    bail!("rotation factors are wired for n = 2 charts");
                }
                let mut rot = Mat::identity(2);
                rot[(0, 0)] = angle.cos();
                rot[(0, 1)] = -angle.sin();
                rot[(1, 0)] = angle.sin();
                rot[(1, 1)] = angle.cos();
                (SequenceFactor::RotationFixed { rot }, false)
            }
            FactorSpec::RotationPow { angle } => {
                if n < 2 {
                    bail!("rotating factors need at least a 2-dimensional chart");
                }
                (SequenceFactor::RotationPow { angle: *angle }, false)
            }
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitSetRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    group: GroupSpec,
    depth: usize,
    #[serde(default = "default_method")]
    method: String,
}

fn default_method() -> String {
    "orbit".into()
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum GroupSpec {
    Schottky { t: f64 },
    Loxodromic { attract: f64, repel: f64, t: f64 },
    Translation { v: Vec<f64> },
    BoundaryFixingRotation { m: usize, angle: f64 },
    Trivial,
    /// Raw row-major `(n+2)^2` matrices.
    Raw { matrices: Vec<Vec<f64>>, labels: Vec<String> },
}

impl GroupSpec {
    fn build(&self, n: usize) -> anyhow::Result<GroupPresentation> {
        Ok(match self {
            GroupSpec::Schottky { t } => fixtures::schottky_pair(n, *t)?,
            GroupSpec::Loxodromic { attract, repel, t } => GroupPresentation::new(
                vec![fixtures::loxodromic(n, *attract, *repel, *t)?],
                vec!["g".into()],
            )?,
            GroupSpec::Translation { v } => {
                if v.len() != n {
                    bail!("translation vector must have length n = {n}");
                }
                fixtures::translation_group(v)?
            }
            GroupSpec::BoundaryFixingRotation { m, angle } => {
                fixtures::boundary_fixing_rotation(n, *m, *angle)?
            }
            GroupSpec::Trivial => GroupPresentation::trivial(n),
            GroupSpec::Raw { matrices, labels } => {
                let d = n + 2;
                let gens = matrices
                    .iter()
                    .map(|row| {
                        if row.len() != d * d {
                            bail!("raw matrix must have {} entries", d * d);
                        }
                        let mat = Mat { rows: d, cols: d, data: row.clone() };
                        Ok(GroupElement::new(mat)?)
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                GroupPresentation::new(gens, labels.clone())?
            }
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaximalityRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    group: GroupSpec,
    fixture: FixtureSpec,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_depth")]
    depth: usize,
    #[serde(default)]
    expect_maximal: Option<bool>,
    #[serde(default)]
    min_gap: Option<f64>,
}

fn default_eps() -> f64 {
    0.1
}

fn default_depth() -> usize {
    8
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum FixtureSpec {
    Hemisphere,
    SphereMinusPoint,
    SphereMinusSphere { m: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimpleDivergenceRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    boost_rate: f64,
    #[serde(default)]
    rotation_angle: Option<f64>,
    #[serde(default = "default_count")]
    count: usize,
}

fn default_count() -> usize {
    8
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CauchyProbeRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    #[serde(default)]
    two_points: bool,
    #[serde(default = "default_pairs")]
    pairs: usize,
}

fn default_pairs() -> usize {
    10
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalDomainRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    domain: DomainSpec,
    #[serde(default = "default_h")]
    h: f64,
    #[serde(default = "default_pairs")]
    pairs: usize,
    /// Explicit pairs instead of seeded sampling.
    #[serde(default)]
    pair_list: Vec<PairSpec>,
    /// Also check the classical cone pair (-1, -0.99) / (1, -0.99).
    #[serde(default)]
    include_reference_pair: bool,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn default_h() -> f64 {
    0.01
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum DomainSpec {
    HalfSpace { dim: usize },
    ConeGraph { slope: f64, dim: usize },
    DeletedPointR3,
    FiberedCone { slope: f64, fiber_width: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JacobianCheckRaw {
    schema: u32,
    #[allow(dead_code)] // consumed by the dispatcher before deserialization
    scenario: String,
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out")]
    out: String,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_fd_step")]
    fd_step: f64,
    #[serde(default = "default_scale")]
    scale: f64,
}

fn default_samples() -> usize {
    100
}

fn default_fd_step() -> f64 {
    1e-5
}

fn default_scale() -> f64 {
    1.0
}

fn check_schema(schema: u32) -> anyhow::Result<()> {
    if schema != 1 {
        bail!("unsupported schema version {schema}; this tool reads schema 1");
    }
    Ok(())
}

/// Parses and validates a config file, applying CLI overrides.
pub fn load_config(path: &Path, overrides: &CliOverrides) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let scenario_name = value
        .get("scenario")
        .and_then(|v| v.as_str())
        .ok_or_else(|| anyhow!("config must name a scenario"))?
        .to_string();
    let max_exp = overrides.schedule_max_exp.unwrap_or(12);

    let (scenario, n, seed, out) = match scenario_name.as_str() {
        "cone-dynamics" => {
            let raw: ConeDynamicsRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            let cone =
                mobius_core::cones::Cone::new(raw.cone.center, raw.cone.alpha, raw.cone.lambda)?;
            let mut factors = Vec::new();
            let mut exponential = false;
            for f in &raw.sequence.factors {
                let (factor, is_exp) = f.build(raw.n)?;
                exponential |= is_exp;
                factors.push(factor);
            }
            let schedule = match raw.sequence.schedule.as_str() {
                "geometric" => schedule_geometric(),
                "linear" => schedule_linear(),
                // exponential factors overflow on the geometric schedule
                "auto" => {
                    if exponential {
                        schedule_linear()
                    } else {
                        schedule_geometric()
                    }
                }
                other => bail!("unknown schedule kind {other}"),
            };
            let schedule: Vec<f64> =
                schedule.into_iter().take(max_exp as usize + 1).collect();
            let asserted = match &raw.sequence.asserted {
                Some(a) => Some(a.build(raw.n)?),
                None => None,
            };
            let sequence = ParabolicSequence { n: raw.n, factors, schedule, asserted };
            (
                Scenario::ConeDynamics {
                    cone,
                    sequence,
                    resolution: raw.resolution,
                    margin: raw.margin,
                },
                raw.n,
                raw.seed,
                raw.out,
            )
        }
        "limit-set" => {
            let raw: LimitSetRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            let group = raw.group.build(raw.n)?;
            let method = match raw.method.as_str() {
                "orbit" => mobius_core::kleinian::LimitSetMethod::OrbitAccumulation,
                "loxodromic" => mobius_core::kleinian::LimitSetMethod::LoxodromicFixedPoints,
                other => bail!("unknown method {other}"),
            };
            (Scenario::LimitSet { group, depth: raw.depth, method }, raw.n, raw.seed, raw.out)
        }
        "maximality" => {
            let raw: MaximalityRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            let group = raw.group.build(raw.n)?;
            let fixture = match raw.fixture {
                FixtureSpec::Hemisphere => OmegaFixture::Hemisphere,
                FixtureSpec::SphereMinusPoint => OmegaFixture::SphereMinusPoint,
                FixtureSpec::SphereMinusSphere { m } => OmegaFixture::SphereMinusSphere { m },
            };
            (
                Scenario::Maximality {
                    group,
                    fixture,
                    eps: raw.eps,
                    depth: raw.depth,
                    expect_maximal: raw.expect_maximal,
                    min_gap: raw.min_gap,
                },
                raw.n,
                raw.seed,
                raw.out,
            )
        }
        "simple-divergence" => {
            let raw: SimpleDivergenceRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            (
                Scenario::SimpleDivergence {
                    boost_rate: raw.boost_rate,
                    rotation_angle: raw.rotation_angle,
                    count: raw.count,
                },
                raw.n,
                raw.seed,
                raw.out,
            )
        }
        "cauchy-probe" => {
            let raw: CauchyProbeRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            (
                Scenario::CauchyProbe { two_points: raw.two_points, pairs: raw.pairs },
                raw.n,
                raw.seed,
                raw.out,
            )
        }
        "normal-domain" => {
            let raw: NormalDomainRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            use mobius_core::domains::{Domain, GraphFn};
            let (domain, fibered) = match raw.domain {
                DomainSpec::HalfSpace { dim } => {
                    (Domain::LipschitzGraph { f: GraphFn::NegAbs { slope: 0.0 }, dim }, false)
                }
                DomainSpec::ConeGraph { slope, dim } => {
                    (Domain::LipschitzGraph { f: GraphFn::NegAbs { slope }, dim }, false)
                }
                DomainSpec::DeletedPointR3 => (
                    Domain::DeletedPoints { points: vec![vec![0.5, 0.5, 0.5]], dim: 3 },
                    false,
                ),
                DomainSpec::FiberedCone { slope, fiber_width } => (
                    Domain::Product {
                        base: Box::new(Domain::LipschitzGraph {
                            f: GraphFn::NegAbs { slope },
                            dim: 2,
                        }),
                        fiber_width,
                        fiber_dim: 1,
                    },
                    true,
                ),
            };
            (
                Scenario::NormalDomain {
                    domain,
                    h: raw.h,
                    pairs: raw.pairs,
                    pair_list: raw.pair_list,
                    fibered,
                    include_reference_pair: raw.include_reference_pair,
                },
                raw.n,
                raw.seed,
                raw.out,
            )
        }
        "jacobian-check" => {
            let raw: JacobianCheckRaw = serde_json::from_value(value)?;
            check_schema(raw.schema)?;
            (
                Scenario::JacobianCheck {
                    samples: raw.samples,
                    fd_step: raw.fd_step,
                    scale: raw.scale,
                },
                raw.n,
                raw.seed,
                raw.out,
            )
        }
        other => bail!("unknown scenario {other}"),
    };

    Ok(ScenarioConfig {
        scenario,
        n,
        seed: overrides.seed.unwrap_or(seed),
        tolerance_scale: overrides.tolerance_scale,
        schedule_max_exp: max_exp,
        out_prefix: out,
    })
}
