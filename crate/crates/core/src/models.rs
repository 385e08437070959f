//! Parametric alternatives h_θ on [0,1]² with h_0 ≡ 1, used to study local
//! power along θₙ = t/√n.
//!
//! Each family carries its score ℓ̇₀ at θ = 0, the Fisher information τ₀² and
//! a score class. The class is computed by quadrature at construction, never
//! taken on trust.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::JointDensity;
use crate::quadrature::{CompositeRule, PANEL_NODES};
use crate::rng::StreamKey;
use crate::sample::PairedSample;

type UnitFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Ids of the built-in families.
pub const FAMILY_IDS: [&str; 4] = ["fgm", "coscos", "tilted", "additive-dep"];

/// Nodes per axis for the construction-time checks.
const CHECK_ORDER: usize = 256;

/// Tolerance for the mean-zero and conditional-mean checks.
const MEAN_TOLERANCE: f64 = 1e-8;

/// Consecutive rejections after which the sampler gives up.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

/// Mesh intervals per axis when bounding |g| for the additive family.
const SUP_MESH: usize = 512;

/// Relative padding of the sampled bound on |g|.
const SUP_PAD: f64 = 1.01;

/// Where the score ℓ̇₀ sits relative to the additive space Λ₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreClass {
    /// E(ℓ̇₀|U) = E(ℓ̇₀|V) = 0.
    Lambda1Perp,
    /// ℓ̇₀ = a(U) + b(V).
    Lambda1,
    Mixed,
}

impl fmt::Display for ScoreClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreClass::Lambda1Perp => "lambda1-perp",
            ScoreClass::Lambda1 => "lambda1",
            ScoreClass::Mixed => "mixed",
        })
    }
}

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaRange {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaRange {
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.lo, self.hi)
    }

    fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `k` equally spaced points including both ends.
    pub fn grid(&self, k: usize) -> Vec<f64> {
        (0..k)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (k - 1) as f64)
            .collect()
    }
}

/// Density values on an m×m mesh at each θ of a grid; nodes at
/// `(i/(m−1), j/(m−1))`.
#[derive(Debug, Clone)]
struct GridFamily {
    m: usize,
    thetas: Vec<f64>,
    /// normalized slices, `slices[t][i*m + j]`
    slices: Vec<Vec<f64>>,
    /// ℓ̇₀ on the mesh
    score: Vec<f64>,
}

fn bilinear(values: &[f64], m: usize, u: f64, v: f64) -> f64 {
    let h = (m - 1) as f64;
    let (x, y) = (u.clamp(0.0, 1.0) * h, v.clamp(0.0, 1.0) * h);
    let i = (x.floor() as usize).min(m - 2);
    let j = (y.floor() as usize).min(m - 2);
    let (fx, fy) = (x - i as f64, y - j as f64);
    let at = |a: usize, b: usize| values[a * m + b];
    (1.0 - fx) * (1.0 - fy) * at(i, j)
        + fx * (1.0 - fy) * at(i + 1, j)
        + (1.0 - fx) * fy * at(i, j + 1)
        + fx * fy * at(i + 1, j + 1)
}

impl GridFamily {
    fn bilinear(&self, values: &[f64], u: f64, v: f64) -> f64 {
        bilinear(values, self.m, u, v)
    }

    /// Bracketing slices and the weight on the upper one.
    fn bracket(&self, theta: f64) -> (usize, usize, f64) {
        let k = self.thetas.partition_point(|&t| t <= theta);
        if k == 0 {
            return (0, 0, 0.0);
        }
        if k >= self.thetas.len() {
            let last = self.thetas.len() - 1;
            return (last, last, 0.0);
        }
        let (t0, t1) = (self.thetas[k - 1], self.thetas[k]);
        (k - 1, k, (theta - t0) / (t1 - t0))
    }

    fn density(&self, u: f64, v: f64, theta: f64) -> f64 {
        let (a, b, w) = self.bracket(theta);
        let lo = self.bilinear(&self.slices[a], u, v);
        if w == 0.0 {
            return lo;
        }
        (1.0 - w) * lo + w * self.bilinear(&self.slices[b], u, v)
    }

    fn sup(&self, theta: f64) -> f64 {
        let (a, b, _) = self.bracket(theta);
        self.slices[a]
            .iter()
            .chain(&self.slices[b])
            .fold(0.0, |m: f64, &x| m.max(x))
    }
}

#[derive(Clone)]
enum Kind {
    Fgm,
    CosCos,
    Tilted { a: UnitFn, b: UnitFn },
    AdditiveDep { a: UnitFn, b: UnitFn, g: PairFn, sup_g: f64 },
    Grid(Arc<GridFamily>),
}

/// A one-parameter family of densities h_θ on [0,1]² with h_0 ≡ 1.
#[derive(Clone)]
pub struct AlternativeFamily {
    id: String,
    kind: Kind,
    fisher_info: f64,
    score_class: ScoreClass,
    theta_range: ThetaRange,
    envelope: f64,
    independent_for_all_theta: bool,
}

impl fmt::Debug for AlternativeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlternativeFamily")
            .field("id", &self.id)
            .field("fisher_info", &self.fisher_info)
            .field("score_class", &self.score_class)
            .field("theta_range", &self.theta_range)
            .field("envelope", &self.envelope)
            .field("independent_for_all_theta", &self.independent_for_all_theta)
            .finish()
    }
}

/// Quadrature nodes and weights on [0, 1].
struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn gauss() -> Rule {
        let r = CompositeRule::new(CHECK_ORDER).expect("valid order");
        Rule {
            nodes: r.nodes().to_vec(),
            weights: r.weights().to_vec(),
        }
    }

    /// Composite Gauss–Legendre with one panel per cell of the mesh
    /// `i/(m−1)`, exact for piecewise polynomial integrands of low degree.
    fn mesh_aligned(m: usize) -> Rule {
        let r = CompositeRule::new(PANEL_NODES * (m - 1)).expect("valid order");
        Rule {
            nodes: r.nodes().to_vec(),
            weights: r.weights().to_vec(),
        }
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    fn integrate2(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.integrate(|u| self.integrate(|v| f(u, v)))
    }
}

/// Fisher information and score class of a score function, by quadrature.
fn classify(score: &dyn Fn(f64, f64) -> f64, rule: &Rule) -> Result<(f64, ScoreClass)> {
    let mean = rule.integrate2(score);
    if mean.abs() > 1e-6 {
        return Err(Error::argument(format!("score has nonzero mean {mean}")));
    }
    let fisher = rule.integrate2(|u, v| score(u, v) * score(u, v));
    if !(fisher > 1e-12) {
        return Err(Error::argument("score has zero Fisher information"));
    }
    let cond_u: Vec<f64> = rule.nodes.iter().map(|&u| rule.integrate(|v| score(u, v))).collect();
    let cond_v: Vec<f64> = rule.nodes.iter().map(|&v| rule.integrate(|u| score(u, v))).collect();
    let sup = |x: &[f64]| x.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
    let scale = fisher.sqrt().max(1.0);
    if sup(&cond_u) < MEAN_TOLERANCE * scale && sup(&cond_v) < MEAN_TOLERANCE * scale {
        return Ok((fisher, ScoreClass::Lambda1Perp));
    }
    let mut residual: f64 = 0.0;
    for (a, &u) in rule.nodes.iter().enumerate() {
        for (b, &v) in rule.nodes.iter().enumerate() {
            residual = residual.max((score(u, v) - cond_u[a] - cond_v[b]).abs());
        }
    }
    let class = if residual < 1e-6 * scale {
        ScoreClass::Lambda1
    } else {
        ScoreClass::Mixed
    };
    Ok((fisher, class))
}

fn check_unit(name: &str, f: &dyn Fn(f64) -> f64, rule: &Rule) -> Result<f64> {
    let mean = rule.integrate(f);
    if mean.abs() > MEAN_TOLERANCE {
        return Err(Error::argument(format!("{name} is not mean zero: ∫{name} = {mean}")));
    }
    let sup = (0..=4096)
        .map(|k| f(k as f64 / 4096.0).abs())
        .fold(0.0, f64::max);
    if !sup.is_finite() || sup > 1.0 + 1e-12 {
        return Err(Error::argument(format!("sup|{name}| = {sup} exceeds 1")));
    }
    Ok(sup)
}

impl AlternativeFamily {
    /// `1 + θ(1−2u)(1−2v)`, θ ∈ [−1, 1].
    pub fn fgm() -> Self {
        Self::closed_form("fgm", Kind::Fgm)
    }

    /// `1 + θ·cos(2πu)cos(2πv)`, θ ∈ [−1, 1].
    pub fn coscos() -> Self {
        Self::closed_form("coscos", Kind::CosCos)
    }

    fn closed_form(id: &str, kind: Kind) -> Self {
        let mut fam = AlternativeFamily {
            id: id.into(),
            kind,
            fisher_info: 0.0,
            score_class: ScoreClass::Mixed,
            theta_range: ThetaRange { lo: -1.0, hi: 1.0 },
            envelope: 2.0,
            independent_for_all_theta: false,
        };
        let (fisher, class) =
            classify(&|u, v| fam.score(u, v), &Rule::gauss()).expect("built-in score is valid");
        fam.fisher_info = fisher;
        fam.score_class = class;
        fam
    }

    /// Default margins `a(u) = cos πu`, `b(v) = cos πv`.
    pub fn default_margins() -> (UnitFn, UnitFn) {
        (Arc::new(|u: f64| (PI * u).cos()), Arc::new(|v: f64| (PI * v).cos()))
    }

    /// `e^{θ(a(u)+b(v))}/Z(θ)`: X and Y stay independent for every θ while
    /// the score `a(u)+b(v)` is nonzero. θ ∈ [−1, 1].
    pub fn tilted(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let rule = Rule::gauss();
        check_unit("a", &a, &rule)?;
        check_unit("b", &b, &rule)?;
        let range = ThetaRange { lo: -1.0, hi: 1.0 };
        let mut fam = AlternativeFamily {
            id: "tilted".into(),
            kind: Kind::Tilted {
                a: Arc::new(a),
                b: Arc::new(b),
            },
            fisher_info: 0.0,
            score_class: ScoreClass::Mixed,
            theta_range: range,
            // Z(θ) >= 1 by Jensen since a, b are mean zero
            envelope: (2.0 * range.max_abs()).exp(),
            independent_for_all_theta: true,
        };
        let (fisher, class) = classify(&|u, v| fam.score(u, v), &rule)?;
        fam.fisher_info = fisher;
        fam.score_class = class;
        Ok(fam)
    }

    /// [`Self::tilted`] with the default margins.
    pub fn tilted_default() -> Self {
        let (a, b) = Self::default_margins();
        Self::tilted(move |u| a(u), move |v| b(v)).expect("default margins are valid")
    }

    /// `∝ (1+θa(u))(1+θb(v)) + θ²g(u,v)`: the score at 0 is `a(u)+b(v)` as
    /// for the tilted family, but X and Y are dependent for θ ≠ 0.
    /// θ ∈ [−0.3, 0.3].
    pub fn additive_dep(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let rule = Rule::gauss();
        check_unit("a", &a, &rule)?;
        check_unit("b", &b, &rule)?;
        for &x in &rule.nodes {
            let by_u = rule.integrate(|u| g(u, x));
            let by_v = rule.integrate(|v| g(x, v));
            if by_u.abs() > MEAN_TOLERANCE || by_v.abs() > MEAN_TOLERANCE {
                return Err(Error::argument(format!(
                    "g has a nonzero conditional mean near {x}"
                )));
            }
        }
        // grid estimate with endpoints, padded so the envelope stays an upper bound
        let mesh: Vec<f64> = (0..=SUP_MESH).map(|k| k as f64 / SUP_MESH as f64).collect();
        let sup_g = mesh
            .iter()
            .chain(&rule.nodes)
            .flat_map(|&u| mesh.iter().chain(&rule.nodes).map(move |&v| (u, v)))
            .map(|(u, v)| g(u, v).abs())
            .fold(0.0, f64::max)
            * SUP_PAD;
        let range = ThetaRange { lo: -0.3, hi: 0.3 };
        let t = range.max_abs();
        let mut fam = AlternativeFamily {
            id: "additive-dep".into(),
            kind: Kind::AdditiveDep {
                a: Arc::new(a),
                b: Arc::new(b),
                g: Arc::new(g),
                sup_g,
            },
            fisher_info: 0.0,
            score_class: ScoreClass::Mixed,
            theta_range: range,
            envelope: (1.0 + t) * (1.0 + t) + t * t * sup_g,
            independent_for_all_theta: false,
        };
        for theta in range.grid(11) {
            fam.check_nonnegative(theta, &rule)?;
        }
        let (fisher, class) = classify(&|u, v| fam.score(u, v), &rule)?;
        fam.fisher_info = fisher;
        fam.score_class = class;
        fam.envelope /= fam.normalizer(-t).min(fam.normalizer(t));
        Ok(fam)
    }

    /// [`Self::additive_dep`] with the default margins and
    /// `g = cos(2πu)cos(2πv)`.
    pub fn additive_dep_default() -> Self {
        let (a, b) = Self::default_margins();
        Self::additive_dep(
            move |u| a(u),
            move |v| b(v),
            |u, v| (2.0 * PI * u).cos() * (2.0 * PI * v).cos(),
        )
        .expect("default additive family is valid")
    }

    /// One of [`FAMILY_IDS`] with default parameters.
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "fgm" => Ok(Self::fgm()),
            "coscos" => Ok(Self::coscos()),
            "tilted" => Ok(Self::tilted_default()),
            "additive-dep" => Ok(Self::additive_dep_default()),
            _ => Err(Error::argument(format!(
                "unknown family '{id}'; valid ids: {}",
                FAMILY_IDS.join(", ")
            ))),
        }
    }

    /// A family given by density values on an m×m mesh at several θ,
    /// interpolated bilinearly in (u, v) and linearly in θ.
    ///
    /// Each slice is renormalized to unit mass. The θ grid must contain 0
    /// and the slice there must be uniform.
    pub fn from_grid(spec: GridSpec) -> Result<Self> {
        let GridSpec { id, theta, density } = spec;
        if theta.len() < 2 || theta.len() != density.len() {
            return Err(Error::argument(
                "grid family needs at least two θ values and one density slice per θ",
            ));
        }
        if theta.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::argument("grid θ values must be strictly increasing"));
        }
        let zero = theta
            .iter()
            .position(|&t| t == 0.0)
            .ok_or_else(|| Error::argument("grid θ values must include 0"))?;
        let m = density[0].len();
        if m < 2 {
            return Err(Error::argument("density mesh must be at least 2×2"));
        }
        let rule = Rule::mesh_aligned(m);
        let mut slices = Vec::with_capacity(theta.len());
        for (t, slice) in density.iter().enumerate() {
            if slice.len() != m || slice.iter().any(|row| row.len() != m) {
                return Err(Error::argument(format!("density slice {t} is not {m}×{m}")));
            }
            let flat: Vec<f64> = slice.iter().flatten().copied().collect();
            if flat.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(Error::argument(format!(
                    "density slice at θ = {} is negative or non-finite",
                    theta[t]
                )));
            }
            let mass = rule.integrate2(|u, v| bilinear(&flat, m, u, v));
            if !(mass > 0.0) {
                return Err(Error::argument(format!("density slice at θ = {} has no mass", theta[t])));
            }
            slices.push(flat.iter().map(|d| d / mass).collect::<Vec<f64>>());
        }
        if slices[zero].iter().any(|d| (d - 1.0).abs() > 1e-6) {
            return Err(Error::argument("density at θ = 0 must be uniform"));
        }
        // ℓ̇₀ = average of the one-sided slopes at 0 (h_0 = 1)
        let slope = |k: usize| -> Vec<f64> {
            let dt = theta[k] - theta[zero];
            slices[k].iter().map(|d| (d - 1.0) / dt).collect()
        };
        let score = match (zero > 0, zero + 1 < theta.len()) {
            (true, true) => {
                let (l, r) = (slope(zero - 1), slope(zero + 1));
                l.iter().zip(&r).map(|(a, b)| 0.5 * (a + b)).collect()
            }
            (true, false) => slope(zero - 1),
            _ => slope(zero + 1),
        };
        let grid = GridFamily {
            m,
            thetas: theta.clone(),
            slices,
            score,
        };
        let envelope = grid.slices.iter().flatten().fold(0.0, |a: f64, &b| a.max(b));
        let mut fam = AlternativeFamily {
            id: id.unwrap_or_else(|| "grid".into()),
            kind: Kind::Grid(Arc::new(grid)),
            fisher_info: 0.0,
            score_class: ScoreClass::Mixed,
            theta_range: ThetaRange {
                lo: theta[0],
                hi: theta[theta.len() - 1],
            },
            envelope,
            independent_for_all_theta: false,
        };
        let (fisher, class) = classify(&|u, v| fam.score(u, v), &rule)?;
        fam.fisher_info = fisher;
        fam.score_class = class;
        Ok(fam)
    }

    /// Reads a [`GridSpec`] from JSON.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec: GridSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        Self::from_grid(spec)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// τ₀² = E₀ ℓ̇₀².
    pub fn fisher_info(&self) -> f64 {
        self.fisher_info
    }

    pub fn score_class(&self) -> ScoreClass {
        self.score_class
    }

    pub fn theta_range(&self) -> ThetaRange {
        self.theta_range
    }

    /// Upper bound on h_θ over the whole θ range.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn independent_for_all_theta(&self) -> bool {
        self.independent_for_all_theta
    }

    /// ℓ̇₀(u, v).
    pub fn score(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            Kind::Fgm => (1.0 - 2.0 * u) * (1.0 - 2.0 * v),
            Kind::CosCos => (2.0 * PI * u).cos() * (2.0 * PI * v).cos(),
            Kind::Tilted { a, b } | Kind::AdditiveDep { a, b, .. } => a(u) + b(v),
            Kind::Grid(g) => g.bilinear(&g.score, u, v),
        }
    }

    /// Density before normalization.
    fn raw_density(&self, u: f64, v: f64, theta: f64) -> f64 {
        match &self.kind {
            Kind::Fgm => 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v),
            Kind::CosCos => 1.0 + theta * (2.0 * PI * u).cos() * (2.0 * PI * v).cos(),
            Kind::Tilted { a, b } => (theta * (a(u) + b(v))).exp(),
            Kind::AdditiveDep { a, b, g, .. } => {
                (1.0 + theta * a(u)) * (1.0 + theta * b(v)) + theta * theta * g(u, v)
            }
            Kind::Grid(g) => g.density(u, v, theta),
        }
    }

    /// Z(θ) = ∬ raw density.
    fn normalizer(&self, theta: f64) -> f64 {
        match &self.kind {
            Kind::Fgm | Kind::CosCos | Kind::Grid(_) => 1.0,
            Kind::Tilted { a, b } => {
                let rule = Rule::gauss();
                rule.integrate(|u| (theta * a(u)).exp()) * rule.integrate(|v| (theta * b(v)).exp())
            }
            Kind::AdditiveDep { .. } => Rule::gauss().integrate2(|u, v| self.raw_density(u, v, theta)),
        }
    }

    fn check_nonnegative(&self, theta: f64, rule: &Rule) -> Result<()> {
        for &u in &rule.nodes {
            for &v in &rule.nodes {
                let d = self.raw_density(u, v, theta);
                if !(d >= 0.0) {
                    return Err(Error::argument(format!(
                        "{} density is negative at (u, v, θ) = ({u}, {v}, {theta})",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// The member at `theta`, with its normalizer and a tight envelope.
    pub fn at(&self, theta: f64) -> Result<FamilyAt<'_>> {
        if !self.theta_range.contains(theta) {
            return Err(Error::argument(format!(
                "θ = {theta} outside [{}, {}] for family {}",
                self.theta_range.lo, self.theta_range.hi, self.id
            )));
        }
        let z = self.normalizer(theta);
        let t = theta.abs();
        let raw_sup = match &self.kind {
            Kind::Fgm | Kind::CosCos => 1.0 + t,
            // |a|, |b| <= 1
            Kind::Tilted { .. } => (2.0 * t).exp(),
            Kind::AdditiveDep { sup_g, .. } => (1.0 + t) * (1.0 + t) + t * t * sup_g,
            Kind::Grid(g) => g.sup(theta),
        };
        Ok(FamilyAt {
            family: self,
            theta,
            z,
            envelope: raw_sup / z,
        })
    }

    /// `t/√n` clamped to the θ range.
    pub fn local_theta(&self, t: f64, n: usize) -> LocalTheta {
        let raw = local_theta(t, n);
        let theta = self.theta_range.clamp(raw);
        LocalTheta {
            theta,
            clamped: theta != raw,
        }
    }
}

/// JSON form of a grid family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default)]
    pub id: Option<String>,
    pub theta: Vec<f64>,
    /// `density[t][i][j]` is h at `(i/(m−1), j/(m−1))` for `theta[t]`.
    pub density: Vec<Vec<Vec<f64>>>,
}

/// One member h_θ of a family.
#[derive(Clone, Copy)]
pub struct FamilyAt<'a> {
    family: &'a AlternativeFamily,
    theta: f64,
    z: f64,
    envelope: f64,
}

impl FamilyAt<'_> {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Z(θ).
    pub fn normalizer(&self) -> f64 {
        self.z
    }

    /// Upper bound on h_θ used by the rejection sampler.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.family.raw_density(u, v, self.theta) / self.z
    }
}

impl JointDensity for FamilyAt<'_> {
    fn density(&self, u: f64, v: f64) -> f64 {
        self.eval(u, v)
    }
}

/// `θₙ = t/√n`.
pub fn local_theta(t: f64, n: usize) -> f64 {
    t / (n as f64).sqrt()
}

/// A local parameter after clamping to the family's range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalTheta {
    pub theta: f64,
    pub clamped: bool,
}

/// n i.i.d. draws from h_θ by rejection from the uniform distribution.
pub fn sample_family(
    family: &AlternativeFamily,
    theta: f64,
    n: usize,
    key: StreamKey,
) -> Result<PairedSample> {
    let member = family.at(theta)?;
    let mut rng = key.rng();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut misses = 0u64;
    while xs.len() < n {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let w: f64 = rng.random::<f64>() * member.envelope;
        let d = member.eval(u, v);
        if d > member.envelope * (1.0 + 1e-12) {
            return Err(Error::numeric(format!(
                "{} density {d} exceeds its envelope {} at ({u}, {v})",
                family.id, member.envelope
            )));
        }
        if w < d {
            xs.push(u);
            ys.push(v);
            misses = 0;
        } else {
            misses += 1;
            if misses > MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::numeric(format!(
                    "{MAX_CONSECUTIVE_REJECTIONS} consecutive rejections sampling {}; \
                     the envelope is misconfigured",
                    family.id
                )));
            }
        }
    }
    PairedSample::new(xs, ys)
}

/// `Lₙ = Σ ℓ̇₀(Uᵢ, Vᵢ) / (τ₀√n)`, for a sample already on [0,1]².
pub fn optimal_statistic(family: &AlternativeFamily, sample: &PairedSample) -> Result<f64> {
    let in_unit = |x: &f64| (0.0..=1.0).contains(x);
    if !sample.xs().iter().all(in_unit) || !sample.ys().iter().all(in_unit) {
        return Err(Error::argument(
            "the optimal statistic needs probability-integral transformed data in [0, 1]",
        ));
    }
    let s: f64 = sample
        .xs()
        .iter()
        .zip(sample.ys())
        .map(|(&u, &v)| family.score(u, v))
        .sum();
    Ok(s / (family.fisher_info.sqrt() * (sample.n() as f64).sqrt()))
}

/// ℓ̇₀*(u,v) = ℓ̇₀(u,v) − E(ℓ̇₀|U=u) − E(ℓ̇₀|V=v), conditional means by
/// quadrature.
#[derive(Clone)]
pub struct EfficientScore {
    family: AlternativeFamily,
    rule: Arc<CompositeRule>,
}

impl EfficientScore {
    pub fn new(family: &AlternativeFamily) -> Self {
        EfficientScore {
            family: family.clone(),
            rule: Arc::new(CompositeRule::new(CHECK_ORDER).expect("valid order")),
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let f = &self.family;
        f.score(u, v) - self.rule.integrate(|y| f.score(u, y)) - self.rule.integrate(|x| f.score(x, v))
    }
}

pub fn efficient_score(family: &AlternativeFamily) -> EfficientScore {
    EfficientScore::new(family)
}
