//! Declarative scenario files: schema, defaults, validation and the
//! normalised dump.

mod run;

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::gauge::GroupKind;
use crate::geom::Point;
use crate::grid::{GridSpec, C64};
use crate::transport::Curve;

pub use run::{run_scenario, RunSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub spacing: f64,
}

impl GridConfig {
    fn line(points: usize, spacing: f64) -> Self {
        Self { dim: 1, points, spacing }
    }

    fn plane(points: usize, spacing: f64) -> Self {
        Self { dim: 2, points, spacing }
    }

    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::centered(self.dim, self.points, self.spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub center: Point,
    pub width: f64,
    #[serde(default)]
    pub momentum: Point,
    #[serde(default)]
    pub phase: f64,
    /// Internal state as `[[re, im], [re, im]]` for SU(2) scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spinor: Option<[[f64; 2]; 2]>,
}

impl PacketConfig {
    fn at(center: Point, width: f64) -> Self {
        Self { center, width, momentum: [0.0, 0.0], phase: 0.0, spinor: None }
    }

    pub fn spinor(&self) -> Option<[C64; 2]> {
        self.spinor.map(|s| [C64::new(s[0][0], s[0][1]), C64::new(s[1][0], s[1][1])])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleGen {
    pub center: Point,
    pub radius: f64,
    #[serde(default = "one_i32")]
    pub winding: i32,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentGen {
    pub from: Point,
    pub to: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcGen {
    pub center: Point,
    pub radius: f64,
    pub start: f64,
    pub end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

/// A labelled curve: exactly one of `points`, `circle`, `segment`, `arc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point>>,
    #[serde(default)]
    pub closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle: Option<CircleGen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<SegmentGen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc: Option<ArcGen>,
}

impl CurveConfig {
    fn polyline(label: &str, points: Vec<Point>) -> Self {
        Self { label: label.into(), points: Some(points), closed: false, circle: None, segment: None, arc: None }
    }

    fn segment(label: &str, from: Point, to: Point) -> Self {
        Self {
            label: label.into(),
            points: None,
            closed: false,
            circle: None,
            segment: Some(SegmentGen { from, to }),
            arc: None,
        }
    }

    pub fn build(&self) -> Result<Curve> {
        let set = [self.points.is_some(), self.circle.is_some(), self.segment.is_some(), self.arc.is_some()];
        if set.iter().filter(|s| **s).count() != 1 {
            return Err(Error::Scenario(format!(
                "curve '{}' needs exactly one of points, circle, segment, arc",
                self.label
            )));
        }
        let curve = if let Some(p) = &self.points {
            Curve::new(p.clone(), self.closed)
        } else if let Some(c) = &self.circle {
            Curve::circle(c.center, c.radius, c.winding, c.samples)
        } else if let Some(s) = &self.segment {
            Curve::segment(s.from, s.to)
        } else {
            let a = self.arc.as_ref().unwrap();
            Curve::arc(a.center, a.radius, a.start, a.end, a.samples)
        };
        curve
            .map(|c| c.with_label(self.label.clone()))
            .map_err(|e| Error::Scenario(format!("curve '{}': {e}", self.label)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn one_i32() -> i32 {
    1
}
fn one() -> f64 {
    1.0
}
fn default_samples() -> usize {
    64
}
fn default_flux_center() -> Point {
    [0.05, 0.05]
}
fn plane_grid() -> GridConfig {
    GridConfig::plane(256, 0.1)
}

/// Two packets and the modular-momentum operator `exp(-i p l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleSlit {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "DoubleSlit::default_grid")]
    pub grid: GridConfig,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "DoubleSlit::default_separation")]
    pub separation: f64,
    /// Midpoint between the packets.
    #[serde(default)]
    pub center: f64,
    /// Relative phase carried by the left packet.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "DoubleSlit::default_sweep")]
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputConfig,
}

impl DoubleSlit {
    fn default_grid() -> GridConfig {
        GridConfig::line(1024, 0.05)
    }
    fn default_separation() -> f64 {
        8.0
    }
    fn default_sweep() -> Sweep {
        Sweep { param: "alpha".into(), values: vec![0.0, FRAC_PI_3, PI, 1.7] }
    }
}

/// Static two-packet AB configuration with several choices of `gamma`.
/// Also used for the Josephson-style two-path setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPath {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "plane_grid")]
    pub grid: GridConfig,
    #[serde(default = "one")]
    pub charge: f64,
    #[serde(default = "TwoPath::default_flux")]
    pub flux: f64,
    #[serde(default = "default_flux_center")]
    pub flux_center: Point,
    #[serde(default)]
    pub core_radius: f64,
    /// Defaults depend on the kind; filled by normalisation.
    #[serde(default)]
    pub packets: Vec<PacketConfig>,
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default = "TwoPath::default_sweep")]
    pub sweep: Sweep,
    /// Report the Abelian holonomy with the `exp(-i q oint A)` sign.
    #[serde(default = "yes")]
    pub eq1_sign: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

fn yes() -> bool {
    true
}

impl TwoPath {
    fn default_flux() -> f64 {
        FRAC_PI_2
    }
    fn default_sweep() -> Sweep {
        Sweep { param: "flux".into(), values: vec![FRAC_PI_2, PI, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbDynamic {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "plane_grid")]
    pub grid: GridConfig,
    #[serde(default = "one")]
    pub charge: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "TwoPath::default_flux")]
    pub flux: f64,
    #[serde(default = "default_flux_center")]
    pub flux_center: Point,
    #[serde(default = "AbDynamic::default_width")]
    pub width: f64,
    #[serde(default = "AbDynamic::default_speed")]
    pub packet_speed: f64,
    #[serde(default = "AbDynamic::default_offset")]
    pub impact_offset: f64,
    #[serde(default = "AbDynamic::default_start")]
    pub start_x: f64,
    #[serde(default = "AbDynamic::default_base")]
    pub base: Point,
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default = "AbDynamic::default_dt")]
    pub dt: f64,
    #[serde(default = "AbDynamic::default_steps")]
    pub steps: usize,
    #[serde(default = "AbDynamic::default_record")]
    pub record_every: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "AbDynamic::default_settle")]
    pub settle_widths: f64,
    #[serde(default = "TwoPath::default_sweep")]
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputConfig,
}

impl AbDynamic {
    fn default_width() -> f64 {
        0.5
    }
    fn default_speed() -> f64 {
        20.0
    }
    fn default_offset() -> f64 {
        4.0
    }
    fn default_start() -> f64 {
        -3.0
    }
    fn default_base() -> Point {
        [-12.0, 0.05]
    }
    fn default_dt() -> f64 {
        0.01
    }
    fn default_steps() -> usize {
        30
    }
    fn default_record() -> usize {
        1
    }
    fn default_settle() -> f64 {
        5.0
    }
}

/// Closed-loop reduction for an SU(2) flux tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbNonabelian {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "plane_grid")]
    pub grid: GridConfig,
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default = "AbNonabelian::default_magnitude")]
    pub flux_magnitude: f64,
    #[serde(default = "AbNonabelian::default_direction")]
    pub flux_direction: [f64; 3],
    #[serde(default = "AbNonabelian::default_center")]
    pub flux_center: Point,
    #[serde(default)]
    pub core_radius: f64,
    #[serde(default)]
    pub packets: Vec<PacketConfig>,
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default = "gamma1")]
    pub gamma1: String,
    #[serde(default = "gamma2")]
    pub gamma2: String,
    #[serde(default = "gamma")]
    pub gamma: String,
    #[serde(default = "AbNonabelian::default_sweep")]
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputConfig,
}

fn gamma1() -> String {
    "gamma1".into()
}
fn gamma2() -> String {
    "gamma2".into()
}
fn gamma() -> String {
    "gamma".into()
}

impl AbNonabelian {
    fn default_magnitude() -> f64 {
        PI
    }
    fn default_direction() -> [f64; 3] {
        [1.0, 1.0, 1.0]
    }
    fn default_center() -> Point {
        [-3.05, 0.05]
    }
    fn default_sweep() -> Sweep {
        Sweep { param: "flux_magnitude".into(), values: vec![FRAC_PI_2, PI, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosmicString {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "plane_grid")]
    pub grid: GridConfig,
    #[serde(default = "default_flux_center")]
    pub apex: Point,
    #[serde(default = "CosmicString::default_deficit")]
    pub deficit_angle: f64,
    #[serde(default)]
    pub core_radius: f64,
    #[serde(default)]
    pub seam_angle: f64,
    /// Horizontal shift applied to the interior points of `gamma`.
    #[serde(default = "CosmicString::default_shift")]
    pub gamma_shift: f64,
    #[serde(default)]
    pub packets: Vec<PacketConfig>,
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default = "gamma1")]
    pub gamma1: String,
    #[serde(default = "gamma2")]
    pub gamma2: String,
    #[serde(default = "gamma")]
    pub gamma: String,
    #[serde(default = "CosmicString::default_sweep")]
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputConfig,
}

impl CosmicString {
    fn default_deficit() -> f64 {
        0.3
    }
    fn default_shift() -> f64 {
        1.0
    }
    fn default_sweep() -> Sweep {
        Sweep { param: "deficit_angle".into(), values: vec![0.0, 0.1, 0.2, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeInvarianceSuite {
    #[serde(default = "GaugeInvarianceSuite::default_seed")]
    pub seed: u64,
    #[serde(default = "GaugeInvarianceSuite::default_grid")]
    pub grid: GridConfig,
    #[serde(default = "GaugeInvarianceSuite::default_group")]
    pub group: GroupKind,
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default = "GaugeInvarianceSuite::default_flux")]
    pub flux: f64,
    #[serde(default = "default_flux_center")]
    pub flux_center: Point,
    /// Amplitude of a smooth random background potential (SU(2) only).
    #[serde(default = "GaugeInvarianceSuite::default_background")]
    pub background_amplitude: f64,
    #[serde(default = "GaugeInvarianceSuite::default_band")]
    pub band_limit: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub packets: Vec<PacketConfig>,
    #[serde(default)]
    pub curves: Vec<CurveConfig>,
    #[serde(default = "GaugeInvarianceSuite::default_sweep")]
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputConfig,
}

impl GaugeInvarianceSuite {
    fn default_seed() -> u64 {
        7
    }
    fn default_grid() -> GridConfig {
        GridConfig::plane(64, 0.25)
    }
    fn default_group() -> GroupKind {
        GroupKind::U1
    }
    fn default_flux() -> f64 {
        1.3
    }
    fn default_background() -> f64 {
        0.3
    }
    fn default_band() -> usize {
        4
    }
    fn default_sweep() -> Sweep {
        Sweep { param: "trial".into(), values: (0..20).map(f64::from).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    DoubleSlit(DoubleSlit),
    AbStatic(TwoPath),
    AbDynamic(AbDynamic),
    AbNonabelian(AbNonabelian),
    JosephsonTwoPath(TwoPath),
    CosmicString(CosmicString),
    GaugeInvarianceSuite(GaugeInvarianceSuite),
}

pub const KINDS: [(&str, &str); 7] = [
    ("double_slit", "modular momentum <exp(-i p l)> of a two-packet state, with p^n moments and the mixture"),
    ("ab_static", "<g_gamma> for several curve choices around a static flux line"),
    ("ab_dynamic", "<g_gamma> time series while a packet pair moves past a flux line"),
    ("ab_nonabelian", "closed-loop reduction of the cross term for an SU(2) flux tube"),
    ("josephson_two_path", "two regions joined by paths on either side of a flux line"),
    ("cosmic_string", "gravitational analogue with a conical defect"),
    ("gauge_invariance_suite", "<g_gamma> before and after random smooth gauge transformations"),
];

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::DoubleSlit(_) => "double_slit",
            Scenario::AbStatic(_) => "ab_static",
            Scenario::AbDynamic(_) => "ab_dynamic",
            Scenario::AbNonabelian(_) => "ab_nonabelian",
            Scenario::JosephsonTwoPath(_) => "josephson_two_path",
            Scenario::CosmicString(_) => "cosmic_string",
            Scenario::GaugeInvarianceSuite(_) => "gauge_invariance_suite",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Scenario::DoubleSlit(s) => s.seed,
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) => s.seed,
            Scenario::AbDynamic(s) => s.seed,
            Scenario::AbNonabelian(s) => s.seed,
            Scenario::CosmicString(s) => s.seed,
            Scenario::GaugeInvarianceSuite(s) => s.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Scenario::DoubleSlit(s) => s.seed = seed,
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) => s.seed = seed,
            Scenario::AbDynamic(s) => s.seed = seed,
            Scenario::AbNonabelian(s) => s.seed = seed,
            Scenario::CosmicString(s) => s.seed = seed,
            Scenario::GaugeInvarianceSuite(s) => s.seed = seed,
        }
    }

    pub fn output_path(&self) -> Option<&str> {
        let o = match self {
            Scenario::DoubleSlit(s) => &s.output,
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) => &s.output,
            Scenario::AbDynamic(s) => &s.output,
            Scenario::AbNonabelian(s) => &s.output,
            Scenario::CosmicString(s) => &s.output,
            Scenario::GaugeInvarianceSuite(s) => &s.output,
        };
        o.path.as_deref()
    }

    fn sweep(&self) -> &Sweep {
        match self {
            Scenario::DoubleSlit(s) => &s.sweep,
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) => &s.sweep,
            Scenario::AbDynamic(s) => &s.sweep,
            Scenario::AbNonabelian(s) => &s.sweep,
            Scenario::CosmicString(s) => &s.sweep,
            Scenario::GaugeInvarianceSuite(s) => &s.sweep,
        }
    }

    fn sweep_params(&self) -> &'static [&'static str] {
        match self {
            Scenario::DoubleSlit(_) => &["alpha", "separation", "width"],
            Scenario::AbStatic(_) | Scenario::JosephsonTwoPath(_) => &["flux", "charge"],
            Scenario::AbDynamic(_) => &["flux", "charge", "packet_speed", "impact_offset"],
            Scenario::AbNonabelian(_) => &["flux_magnitude", "coupling"],
            Scenario::CosmicString(_) => &["deficit_angle", "gamma_shift"],
            Scenario::GaugeInvarianceSuite(_) => &["trial"],
        }
    }

    /// Fill kind-dependent defaults (packets, curves) left empty.
    fn normalize(&mut self) {
        match self {
            Scenario::DoubleSlit(_) => {}
            Scenario::AbStatic(s) => {
                if s.packets.is_empty() {
                    s.packets = vec![PacketConfig::at([0.0, 4.0], 0.5), PacketConfig::at([0.0, -4.0], 0.5)];
                }
                if s.curves.is_empty() {
                    s.curves = vec![
                        CurveConfig::polyline("left", vec![[0.0, 0.0], [-8.0, 0.0], [-8.0, 8.0], [0.0, 8.0]]),
                        CurveConfig::polyline("right", vec![[0.0, 0.0], [8.0, 0.0], [8.0, 8.0], [0.0, 8.0]]),
                    ];
                }
            }
            Scenario::JosephsonTwoPath(s) => {
                if s.packets.is_empty() {
                    s.packets = vec![PacketConfig::at([4.0, 0.0], 0.5), PacketConfig::at([-4.0, 0.0], 0.5)];
                }
                if s.curves.is_empty() {
                    s.curves = vec![
                        CurveConfig::polyline("upper", vec![[0.0, 0.0], [0.0, 8.0], [8.0, 8.0], [8.0, 0.0]]),
                        CurveConfig::polyline("lower", vec![[0.0, 0.0], [0.0, -8.0], [8.0, -8.0], [8.0, 0.0]]),
                    ];
                }
            }
            Scenario::AbDynamic(s) => {
                if s.curves.is_empty() {
                    s.curves = vec![CurveConfig::segment("gamma", [0.0, 0.0], [0.0, 2.0 * s.impact_offset])];
                }
            }
            Scenario::AbNonabelian(s) => {
                if s.packets.is_empty() {
                    let mut up = PacketConfig::at([0.0, 4.0], 0.5);
                    up.spinor = Some([[1.0, 0.0], [0.0, 0.0]]);
                    let mut down = PacketConfig::at([0.0, -4.0], 0.5);
                    down.spinor = Some([[0.6, 0.0], [0.0, 0.8]]);
                    s.packets = vec![up, down];
                }
                if s.curves.is_empty() {
                    s.curves = vec![
                        CurveConfig::segment("gamma1", [-9.0, 0.05], [0.0, 4.0]),
                        CurveConfig::segment("gamma2", [-9.0, 0.05], [0.0, -4.0]),
                        CurveConfig::segment("gamma", [0.0, 0.0], [0.0, 8.0]),
                    ];
                }
            }
            Scenario::CosmicString(s) => {
                if s.packets.is_empty() {
                    s.packets = vec![PacketConfig::at([0.0, 4.0], 0.5), PacketConfig::at([0.0, -4.0], 0.5)];
                }
                if s.curves.is_empty() {
                    s.curves = vec![
                        CurveConfig::segment("gamma1", [-9.0, 0.05], [0.0, 4.0]),
                        CurveConfig::segment("gamma2", [-9.0, 0.05], [0.0, -4.0]),
                        CurveConfig::polyline("gamma", vec![[0.0, 0.0], [0.0, 4.0], [0.0, 8.0]]),
                    ];
                }
            }
            Scenario::GaugeInvarianceSuite(s) => {
                if s.packets.is_empty() {
                    let spinor = (s.group == GroupKind::SU2).then_some([[0.6, 0.0], [0.0, 0.8]]);
                    s.packets = vec![
                        PacketConfig { spinor, ..PacketConfig::at([0.0, 2.5], 0.5) },
                        PacketConfig { spinor, ..PacketConfig::at([0.0, -2.5], 0.5) },
                    ];
                }
                if s.curves.is_empty() {
                    s.curves = vec![
                        CurveConfig::segment("straight", [0.0, 0.0], [0.0, 5.0]),
                        CurveConfig::polyline("bent", vec![[0.0, 0.0], [1.5, 0.0], [1.5, 5.0], [0.0, 5.0]]),
                        CurveConfig::polyline("around", vec![[0.0, 0.0], [-3.0, 0.0], [-3.0, 5.0], [0.0, 5.0]]),
                    ];
                }
            }
        }
    }

    fn curves(&self) -> &[CurveConfig] {
        match self {
            Scenario::DoubleSlit(_) => &[],
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) => &s.curves,
            Scenario::AbDynamic(s) => &s.curves,
            Scenario::AbNonabelian(s) => &s.curves,
            Scenario::CosmicString(s) => &s.curves,
            Scenario::GaugeInvarianceSuite(s) => &s.curves,
        }
    }

    fn referenced_labels(&self) -> Vec<&str> {
        match self {
            Scenario::AbNonabelian(s) => vec![&s.gamma1, &s.gamma2, &s.gamma],
            Scenario::CosmicString(s) => vec![&s.gamma1, &s.gamma2, &s.gamma],
            _ => Vec::new(),
        }
    }

    /// Structural checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let sweep = self.sweep();
        if !self.sweep_params().contains(&sweep.param.as_str()) {
            return Err(Error::Scenario(format!(
                "sweep parameter '{}' is not valid for {}; expected one of {:?}",
                sweep.param,
                self.kind(),
                self.sweep_params()
            )));
        }
        if sweep.values.is_empty() || sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Scenario("sweep values must be a non-empty list of finite numbers".into()));
        }
        let mut labels = BTreeSet::new();
        for c in self.curves() {
            if !labels.insert(c.label.as_str()) {
                return Err(Error::Scenario(format!("duplicate curve label '{}'", c.label)));
            }
            c.build()?;
        }
        for l in self.referenced_labels() {
            if !labels.contains(l) {
                return Err(Error::Scenario(format!("unresolved curve label '{l}'")));
            }
        }
        let grid = match self {
            Scenario::DoubleSlit(s) => &s.grid,
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) => &s.grid,
            Scenario::AbDynamic(s) => &s.grid,
            Scenario::AbNonabelian(s) => &s.grid,
            Scenario::CosmicString(s) => &s.grid,
            Scenario::GaugeInvarianceSuite(s) => &s.grid,
        };
        let spec = grid.build().map_err(|e| Error::Scenario(e.to_string()))?;
        let needs_plane = !matches!(self, Scenario::DoubleSlit(_));
        if needs_plane && spec.dim() != 2 {
            return Err(Error::Scenario(format!("{} needs a 2D grid", self.kind())));
        }
        match self {
            Scenario::AbStatic(s) | Scenario::JosephsonTwoPath(s) if s.packets.len() != 2 => {
                Err(Error::Scenario("exactly two packets are required".into()))
            }
            Scenario::AbNonabelian(s) if s.packets.len() != 2 || s.packets.iter().any(|p| p.spinor.is_none()) => {
                Err(Error::Scenario("exactly two packets with spinors are required".into()))
            }
            Scenario::CosmicString(s) => {
                if s.packets.len() != 2 {
                    return Err(Error::Scenario("exactly two packets are required".into()));
                }
                let cone = crate::gravity::ConeGeometry::new(s.apex, s.deficit_angle, s.core_radius)
                    .map_err(|e| Error::Scenario(e.to_string()))?
                    .with_seam_angle(s.seam_angle);
                for p in &s.packets {
                    if cone.seam_distance(p.center) < 5.0 * p.width {
                        return Err(Error::Scenario(format!(
                            "packet at {:?} is within 5 widths of the seam",
                            p.center
                        )));
                    }
                }
                Ok(())
            }
            Scenario::GaugeInvarianceSuite(s) if s.band_limit > spec.points_per_axis() / 4 => {
                Err(Error::Scenario("band_limit exceeds points/4".into()))
            }
            _ => Ok(()),
        }
    }

    /// Pretty JSON with every default filled in.
    pub fn normalized_dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }
}

/// Parse, fill defaults and validate a JSON scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            Error::Scenario(inner.to_string())
        } else {
            Error::Scenario(format!("at {path}: {inner}"))
        }
    })?;
    s.normalize();
    s.validate()?;
    Ok(s)
}
