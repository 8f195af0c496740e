//! Generic-point sampling with singularity rejection and the verification suite.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::detrep::{sixv_null_determinant, sixv_z_det, tau_special_ratios, z_det, OmegaVariant, SixVertexVariant};
use crate::error::{Error, Result};
use crate::funceq::{
    coeff_a, coeff_ad, coeff_ad_perm, coeff_d, cramer_ratios, cramer_shift_a, equation_terms, oracle, pair_index, pairs, system_dimension,
    unknown_sets, CoefficientBundle, PermLabel, SixVertexKind,
};
use crate::model::{dyb_residual, ModelParams, SpectralConfig};
use crate::monodromy::{
    highest_weight_residuals, identity_residual, partition_function, sixv_partition_function, tau_minus_gamma_reduced, AlgebraIdentity,
    AlgebraPoint,
};
use crate::numerics::Scalar;
use crate::report::{CheckRecord, ParamSnapshot, Report, ResidualReport};
use crate::theta::ThetaContext;

/// How generic points are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePolicy {
    pub seed: u64,
    pub nome: f64,
    /// Real parts are drawn from `[-re_box, re_box]`.
    pub re_box: f64,
    /// Imaginary parts are drawn from `[-im_box, im_box]`.
    pub im_box: f64,
    /// Minimum modulus of theta (and sinh) at every denominator argument.
    pub min_theta_floor: f64,
    /// Minimum distance from every denominator argument to the zero lattice of
    /// theta. Unlike the modulus floor this does not depend on where the argument sits.
    pub min_zero_distance: f64,
    pub max_redraws: usize,
}

impl SamplePolicy {
    pub fn new(seed: u64) -> Self {
        let nome = 0.2;
        Self { seed, nome, re_box: 1.0, im_box: 0.5, min_theta_floor: 1e-6 * nome.powf(0.25), min_zero_distance: 0.03, max_redraws: 1000 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_theta_floor.is_nan() || self.min_theta_floor <= 0.0 {
            return Err(Error::InvalidParameter(format!("theta floor must be positive, got {}", self.min_theta_floor)));
        }
        if !(self.min_zero_distance >= 0.0 && self.min_zero_distance < 0.5) {
            return Err(Error::InvalidParameter(format!("zero distance floor {} out of [0, 0.5)", self.min_zero_distance)));
        }
        if !(self.re_box > 0.0 && self.re_box <= 2.0 && self.im_box > 0.0 && self.im_box.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling box ({}, {}) out of range", self.re_box, self.im_box)));
        }
        if self.max_redraws == 0 {
            return Err(Error::InvalidParameter("max_redraws must be at least 1".into()));
        }
        ThetaContext::new(self.nome).map(|_| ())
    }
}

impl Default for SamplePolicy {
    fn default() -> Self {
        Self::new(0x5eed)
    }
}

/// Values to hold fixed while drawing; `None` fields are sampled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamsTemplate {
    pub sites: usize,
    pub gamma: Option<Scalar>,
    pub tau: Option<Scalar>,
    pub mu: Option<Vec<Scalar>>,
    pub x: Option<Vec<Scalar>>,
    pub x0: Option<Scalar>,
    pub x0bar: Option<Scalar>,
}

impl ParamsTemplate {
    pub fn sites(sites: usize) -> Self {
        Self { sites, ..Self::default() }
    }

    /// Keeps `gamma`, `tau` and `mu` of `params`.
    pub fn model_of(params: &ModelParams) -> Self {
        Self { sites: params.sites(), gamma: Some(params.gamma), tau: Some(params.tau), mu: Some(params.mu.clone()), ..Self::default() }
    }

    /// True when nothing is left to sample.
    pub fn is_fixed(&self) -> bool {
        self.gamma.is_some() && self.tau.is_some() && self.mu.is_some() && self.x.is_some() && self.x0.is_some() && self.x0bar.is_some()
    }

    /// Keeps everything except the auxiliary points.
    pub fn auxiliary_of(params: &ModelParams, cfg: &SpectralConfig) -> Self {
        Self { x: Some(cfg.x.clone()), ..Self::model_of(params) }
    }
}

/// Seeded source of generic points.
#[derive(Debug, Clone)]
pub struct Sampler {
    policy: SamplePolicy,
    theta: ThetaContext,
    rng: ChaCha8Rng,
}

/// Decorrelates per-check streams derived from one seed.
const STREAM_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

impl Sampler {
    pub fn new(policy: SamplePolicy) -> Result<Self> {
        Self::with_stream(policy, 0)
    }

    /// Independent stream `stream` of the policy's seed.
    pub fn with_stream(policy: SamplePolicy, stream: u64) -> Result<Self> {
        policy.validate()?;
        let theta = ThetaContext::new(policy.nome)?;
        let rng = ChaCha8Rng::seed_from_u64(policy.seed ^ stream.wrapping_mul(STREAM_MIX));
        Ok(Self { policy, theta, rng })
    }

    pub fn policy(&self) -> &SamplePolicy {
        &self.policy
    }

    fn point(&mut self) -> Scalar {
        let (a, b) = (self.policy.re_box, self.policy.im_box);
        Scalar::new(self.rng.gen_range(-a..a), self.rng.gen_range(-b..b))
    }

    fn candidate(&mut self, t: &ParamsTemplate) -> Result<(ModelParams, SpectralConfig)> {
        let pick = |fixed: Option<Scalar>, s: &mut Self| fixed.unwrap_or_else(|| s.point());
        let gamma = pick(t.gamma, self);
        let tau = pick(t.tau, self);
        let mu = match &t.mu {
            Some(m) => m.clone(),
            None => (0..t.sites).map(|_| self.point()).collect(),
        };
        let x = match &t.x {
            Some(x) => x.clone(),
            None => (0..t.sites).map(|_| self.point()).collect(),
        };
        let x0 = pick(t.x0, self);
        let x0bar = pick(t.x0bar, self);
        let params = ModelParams::new(gamma, tau, mu, self.theta)?;
        let cfg = SpectralConfig::new(x, x0, x0bar)?;
        Ok((params, cfg))
    }

    /// Draws until [`check_generic`] accepts.
    pub fn draw_generic(&mut self, template: &ParamsTemplate) -> Result<(ModelParams, SpectralConfig)> {
        self.draw_with(template, |_, _| true)
    }

    /// Draws until [`check_generic`] and `accept` both accept.
    pub fn draw_with(
        &mut self,
        template: &ParamsTemplate,
        accept: impl Fn(&ModelParams, &SpectralConfig) -> bool,
    ) -> Result<(ModelParams, SpectralConfig)> {
        if template.sites == 0 {
            return Err(Error::InvalidParameter("at least one site is required".into()));
        }
        if template.is_fixed() {
            // Nothing to redraw: screen only for near-poles and report why.
            let drawn = self.candidate(template)?;
            check_generic(&drawn.0, &drawn.1, self.policy.min_theta_floor, 0.0)?;
            return if accept(&drawn.0, &drawn.1) { Ok(drawn) } else { Err(Error::DegeneratePoint("fixed parameters rejected".into())) };
        }
        for _ in 0..self.policy.max_redraws {
            let drawn = match self.candidate(template) {
                Ok(d) => d,
                Err(Error::DegeneratePoint(_)) => continue,
                Err(e) => return Err(e),
            };
            if check_generic(&drawn.0, &drawn.1, self.policy.min_theta_floor, self.policy.min_zero_distance).is_ok()
                && accept(&drawn.0, &drawn.1)
            {
                return Ok(drawn);
            }
        }
        Err(Error::RedrawsExhausted(self.policy.max_redraws))
    }
}

/// Every argument that can end up in a denominator, with a label.
pub fn denominator_arguments(params: &ModelParams, cfg: &SpectralConfig) -> Vec<(String, Scalar)> {
    let l = params.sites();
    let g = params.gamma;
    let t = params.tau;
    let pts = cfg.all_points();
    let mut out = Vec::new();
    for (a, &u) in pts.iter().enumerate() {
        for &w in &pts[a + 1..] {
            out.push((format!("point difference {u} - {w}"), u - w));
        }
        for (j, &m) in params.mu.iter().enumerate() {
            out.push((format!("{u} - mu_{}", j + 1), u - m));
            out.push((format!("{u} - mu_{} + gamma", j + 1), u - m + g));
        }
    }
    let (lo, hi) = (-(l as i64) - 2, 2 * l as i64 + 3);
    for k in lo..=hi {
        out.push((format!("tau + {k} gamma"), t + (k as f64) * g));
    }
    for k in 1..=l + 2 {
        out.push((format!("{k} gamma"), (k as f64) * g));
    }
    let s: Scalar = cfg.x.iter().zip(&params.mu).map(|(x, m)| x - m).sum();
    out.push(("sum (x - mu) + tau + (L+2) gamma".into(), s + t + (l as f64 + 2.0) * g));
    out.push(("sum (x - mu) + (L+1) gamma".into(), s + (l as f64 + 1.0) * g));
    out
}

/// Rejects points where a denominator theta (or six-vertex sinh) is below `floor`.
pub fn check_generic(params: &ModelParams, cfg: &SpectralConfig, floor: f64, distance: f64) -> Result<()> {
    if cfg.sites() != params.sites() {
        return Err(Error::DimensionMismatch { expected: params.sites().to_string(), found: cfg.sites().to_string() });
    }
    for (label, arg) in denominator_arguments(params, cfg) {
        let th = params.theta.theta1(arg)?;
        if th.norm() < floor {
            return Err(Error::DegeneratePoint(format!("theta({label}) = {:.3e}", th.norm())));
        }
        if arg.sinh().norm() < floor {
            return Err(Error::DegeneratePoint(format!("sinh({label}) = {:.3e}", arg.sinh().norm())));
        }
        let d = params.theta.zero_distance(arg);
        if d < distance {
            return Err(Error::DegeneratePoint(format!("{label} lies {d:.3e} from a theta zero")));
        }
    }
    Ok(())
}

/// Suite size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteLevel {
    /// Every check at `L <= 2`.
    Quick,
    /// Every check at `L <= 3`, functional equations also at `L = 4`.
    Full,
}

impl std::str::FromStr for SuiteLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(SuiteLevel::Quick),
            "full" => Ok(SuiteLevel::Full),
            other => Err(Error::Parse(format!("unknown suite level {other:?}"))),
        }
    }
}

impl std::fmt::Display for SuiteLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SuiteLevel::Quick => "quick",
            SuiteLevel::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalEquation {
    A,
    D,
    Ad,
    AdPerm,
}

impl FunctionalEquation {
    fn anchor(&self) -> &'static str {
        match self {
            FunctionalEquation::A => "eqA",
            FunctionalEquation::D => "eqD",
            FunctionalEquation::Ad => "eqADneu",
            FunctionalEquation::AdPerm => "eqADper",
        }
    }

    fn bundles(&self, cfg: &SpectralConfig, p: &ModelParams) -> Result<Vec<CoefficientBundle>> {
        match self {
            FunctionalEquation::A => Ok(vec![coeff_a(cfg, p)?]),
            FunctionalEquation::D => Ok(vec![coeff_d(cfg, p)?]),
            FunctionalEquation::Ad => Ok(vec![coeff_ad(cfg, p)?]),
            FunctionalEquation::AdPerm => PermLabel::all(cfg.sites()).into_iter().map(|lab| coeff_ad_perm(lab, cfg, p)).collect(),
        }
    }
}

/// What a check measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckKind {
    ThetaLimit,
    Dyb,
    Algebra(AlgebraIdentity, usize),
    Annihilation(usize),
    Eigenvalues(usize),
    Symmetry(usize),
    PoleResidue(usize),
    Funceq(FunctionalEquation, usize),
    ShiftCramer(usize),
    RatioCramer(usize),
    DetBase(usize),
    DetFamilies(usize),
    DetInvariance(usize),
    DetSpecialization(usize),
    DetFamilyIndependence(usize),
    TauSpecial(usize),
    SixVertexConstant(SixVertexKind, usize),
    SixVertexUnity(SixVertexKind, usize),
    SixVertexNull(SixVertexKind, usize),
    PairIndex,
    OmegaSparsity,
    OmegaDimension,
}

/// One entry of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub anchors: Vec<String>,
    pub kind: CheckKind,
    pub tolerance: f64,
    pub draws: usize,
}

fn check(id: impl Into<String>, anchors: &[&str], kind: CheckKind, tolerance: f64, draws: usize) -> Check {
    Check { id: id.into(), anchors: anchors.iter().map(|s| s.to_string()).collect(), kind, tolerance, draws }
}

fn funceq_tolerance(l: usize) -> f64 {
    if l <= 2 {
        1e-9
    } else {
        1e-6
    }
}

fn det_tolerance(l: usize) -> f64 {
    if l <= 2 {
        1e-8
    } else {
        1e-6
    }
}

/// The ordered list of checks at `level`.
pub fn suite_checks(level: SuiteLevel) -> Vec<Check> {
    let max_l = match level {
        SuiteLevel::Quick => 2,
        SuiteLevel::Full => 3,
    };
    let mut out = vec![
        check("theta-limit", &["theta", "bw6v"], CheckKind::ThetaLimit, 1e-10, 1),
        check("dyb-residual", &["dyb", "rmat", "bw"], CheckKind::Dyb, 1e-12, 20),
        check("nrs-pair-index-bijective", &["eqADper"], CheckKind::PairIndex, 0.5, 1),
        check("omdef-dimension", &["omdef"], CheckKind::OmegaDimension, 0.5, 1),
        check("omdef-block-sparsity-L3", &["omdef", "FG", "IKJbij"], CheckKind::OmegaSparsity, 0.5, 1),
    ];
    for l in 2..=max_l {
        let tol = if l == 2 { 1e-10 } else { 1e-8 };
        for id in AlgebraIdentity::ALL {
            let anchor = id.name().split('-').next().unwrap_or("SAB");
            out.push(check(format!("{}-L{l}", id.name()), &[anchor], CheckKind::Algebra(id, l), tol, 10));
        }
    }
    for l in 1..=max_l {
        out.push(check(format!("zero-annihilation-L{l}"), &["zero", "abcd"], CheckKind::Annihilation(l), 1e-13, 10));
        out.push(check(format!("lambdas-eigenvalues-L{l}"), &["lambdas", "blambdas"], CheckKind::Eigenvalues(l), 1e-11, 10));
        out.push(check(format!("pf-symmetry-L{l}"), &["pf"], CheckKind::Symmetry(l), 1e-10, 10));
        out.push(check(format!("soltg-x-independence-L{l}"), &["soltg", "pf"], CheckKind::PoleResidue(l), 1e-6, 2));
    }
    let feq_max = match level {
        SuiteLevel::Quick => 2,
        SuiteLevel::Full => 4,
    };
    for l in 1..=feq_max {
        for eq in [FunctionalEquation::A, FunctionalEquation::D, FunctionalEquation::Ad, FunctionalEquation::AdPerm] {
            let anchors: &[&str] = match eq {
                FunctionalEquation::A => &["eqA", "coeffA"],
                FunctionalEquation::D => &["eqD", "coeffD"],
                FunctionalEquation::Ad => &["eqADneu", "coeffADneu"],
                FunctionalEquation::AdPerm => &["eqADper", "l0", "0m", "lm"],
            };
            out.push(check(format!("{}-residual-L{l}", eq.anchor()), anchors, CheckKind::Funceq(eq, l), funceq_tolerance(l), 20));
        }
    }
    for l in 1..=max_l {
        let t = det_tolerance(l);
        out.push(check(format!("ztau-cramer-L{l}"), &["ztau"], CheckKind::ShiftCramer(l), funceq_tolerance(l), 20));
        out.push(check(format!("ZZ-ZZZ-ratios-L{l}"), &["ZZ", "ZZZ"], CheckKind::RatioCramer(l), t, 20));
        out.push(check(format!("thmZ1-oracle-match-L{l}"), &["Z", "omdef"], CheckKind::DetBase(l), t, 20));
        out.push(check(format!("thmZ234-oracle-match-L{l}"), &["Z0I", "Zb0I", "Z0b0IJ"], CheckKind::DetFamilies(l), t, 20));
        out.push(check(format!("thmZ1-x0-invariance-L{l}"), &["Z"], CheckKind::DetInvariance(l), t, 3));
        out.push(check(format!("thmZ1-specialization-L{l}"), &["Z"], CheckKind::DetSpecialization(l), t, 5));
        out.push(check(format!("thmZ234-family-independence-L{l}"), &["Z0I", "Z"], CheckKind::DetFamilyIndependence(l), t, 10));
        out.push(check(format!("taugam-ratios-L{l}"), &["taugam"], CheckKind::TauSpecial(l), funceq_tolerance(l), 20));
    }
    for l in 1..=max_l {
        for (kind, det, red) in [(SixVertexKind::A, "det6vA", "redAsys"), (SixVertexKind::D, "det6vD", "redDsys")] {
            out.push(check(format!("{det}-ratio-constant-L{l}"), &[det, "bw6v"], CheckKind::SixVertexConstant(kind, l), 1e-9, 20));
            out.push(check(format!("{det}-ratio-unity-L{l}"), &[det, "bw6v"], CheckKind::SixVertexUnity(kind, l), 1e-9, 20));
            out.push(check(format!("{red}-null-determinant-L{l}"), &[red], CheckKind::SixVertexNull(kind, l), 1e-9, 20));
        }
    }
    out
}

/// Outcome of one check: the report line, the worst draw and the time spent.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub record: CheckRecord,
    pub worst: Option<ResidualReport>,
    pub error: Option<String>,
    pub seconds: f64,
}

/// Settings of one suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub level: SuiteLevel,
    pub policy: SamplePolicy,
    /// Worker threads; `0` lets the pool decide.
    pub workers: usize,
    /// Scales the first term of every equation in this functional-equation check by `1 + 1e-3`.
    pub inject_fault: Option<String>,
}

impl SuiteConfig {
    pub fn new(level: SuiteLevel, policy: SamplePolicy) -> Self {
        Self { level, policy, workers: 0, inject_fault: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
    pub seconds: f64,
    pub params: Map<String, Value>,
}

impl SuiteResult {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new(self.params.clone(), self.checks.iter().map(|c| c.record.clone()).collect(), self.seconds);
        r.summary.pass = self.pass;
        r
    }

    pub fn failing_ids(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.record.pass).map(|c| c.record.id.as_str()).collect()
    }
}

/// Runs the suite; checks run in parallel and are reported in suite order.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteResult> {
    config.policy.validate()?;
    let checks = suite_checks(config.level);
    if let Some(id) = &config.inject_fault {
        let ok = checks.iter().any(|c| &c.id == id && matches!(c.kind, CheckKind::Funceq(..)));
        if !ok {
            return Err(Error::InvalidParameter(format!("fault injection needs a functional-equation check id, got {id:?}")));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let outcomes: Vec<CheckOutcome> = pool.install(|| {
        checks
            .par_iter()
            .enumerate()
            .map(|(index, c)| {
                let fault = config.inject_fault.as_deref() == Some(c.id.as_str());
                run_check(c, &config.policy, index as u64 + 1, fault)
            })
            .collect()
    });
    let seconds = start.elapsed().as_secs_f64();
    let mut params = Map::new();
    params.insert("level".into(), Value::from(config.level.to_string()));
    params.insert("seed".into(), Value::from(config.policy.seed));
    params.insert("nome".into(), Value::from(config.policy.nome));
    params.insert("re_box".into(), Value::from(config.policy.re_box));
    params.insert("im_box".into(), Value::from(config.policy.im_box));
    params.insert("min_theta_floor".into(), Value::from(config.policy.min_theta_floor));
    params.insert("min_zero_distance".into(), Value::from(config.policy.min_zero_distance));
    params.insert("workers".into(), Value::from(pool.current_num_threads()));
    if let Some(id) = &config.inject_fault {
        params.insert("inject_fault".into(), Value::from(id.clone()));
    }
    let pass = outcomes.iter().all(|o| o.record.pass);
    Ok(SuiteResult { checks: outcomes, pass, seconds, params })
}

/// Runs one check on its own random stream.
pub fn run_check(c: &Check, policy: &SamplePolicy, stream: u64, fault: bool) -> CheckOutcome {
    let start = Instant::now();
    let measured = Sampler::with_stream(policy.clone(), stream).and_then(|mut s| measure(c, &mut s, fault));
    let (residual, worst, error) = match measured {
        Ok(m) => (m.residual, m.worst, None),
        Err(e) => (f64::MAX, None, Some(e.to_string())),
    };
    CheckOutcome {
        record: CheckRecord {
            id: c.id.clone(),
            residual,
            tolerance: c.tolerance,
            pass: residual < c.tolerance,
            anchors: c.anchors.clone(),
        },
        worst,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Largest residual of a check and the draw that produced it.
#[derive(Debug, Clone, Default)]
struct Measured {
    residual: f64,
    worst: Option<ResidualReport>,
}

impl Measured {
    fn push(&mut self, r: ResidualReport) {
        if r.residual.is_nan() || self.worst.is_none() || r.residual > self.residual {
            self.residual = if r.residual.is_nan() { f64::MAX } else { r.residual };
            self.worst = Some(r);
        }
    }

    fn value(residual: f64) -> Self {
        Self { residual, worst: None }
    }
}

fn rel(a: Scalar, b: Scalar) -> f64 {
    (a - b).norm() / b.norm()
}

/// `max_k |v_k - v_0| / |v_0|`.
fn spread(values: &[Scalar]) -> f64 {
    values.iter().map(|&v| rel(v, values[0])).fold(0.0, f64::max)
}

fn measure(c: &Check, s: &mut Sampler, fault: bool) -> Result<Measured> {
    let tol = c.tolerance;
    let mut m = Measured::default();
    let snap = ParamSnapshot::new;
    match c.kind {
        CheckKind::ThetaLimit => {
            let p = 1e-6;
            let ctx = ThetaContext::new(p)?;
            let mut worst = 0.0_f64;
            for k in 0..20 {
                let angle = std::f64::consts::TAU * k as f64 / 20.0;
                let x = Scalar::from_polar(0.05 + 0.95 * (k as f64 / 19.0), angle);
                let scaled = Scalar::new(0.0, -1.0) * p.powf(-0.25) * ctx.theta1(x)?;
                worst = worst.max((scaled - x.sinh()).norm());
            }
            return Ok(Measured::value(worst));
        }
        CheckKind::Dyb => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(1))?;
                let r = dyb_residual(cfg.x0, cfg.x0bar, cfg.x[0], p.tau, &p)?;
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), r, 1.0, tol));
            }
        }
        CheckKind::Algebra(id, l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let aux = s.draw_generic(&ParamsTemplate::auxiliary_of(&p, &cfg))?.1;
                let pt = AlgebraPoint { x1: aux.x0, x2: aux.x0bar, cfg };
                let r = identity_residual(id, &pt, &p)?;
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &pt.cfg), r, 1.0, tol));
            }
        }
        CheckKind::Annihilation(l) | CheckKind::Eigenvalues(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let h = highest_weight_residuals(cfg.x0, &p)?;
                let r = match c.kind {
                    CheckKind::Annihilation(_) => h.c_annihilation.max(h.dual_c_annihilation),
                    _ => h.eigenvalue_mismatch,
                };
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), r, 1.0, tol));
            }
        }
        CheckKind::Symmetry(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let z = partition_function(&cfg.x, &p)?;
                let rev: Vec<Scalar> = cfg.x.iter().rev().copied().collect();
                let r = rel(partition_function(&rev, &p)?, z);
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), r, z.norm(), tol));
            }
        }
        CheckKind::PoleResidue(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let mut vals = vec![tau_minus_gamma_reduced(&cfg.x, &p, 16)?];
                for _ in 1..5 {
                    let (_, other) = s.draw_generic(&ParamsTemplate::model_of(&p))?;
                    vals.push(tau_minus_gamma_reduced(&other.x, &p, 16)?);
                }
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), spread(&vals), vals[0].norm(), tol));
            }
        }
        CheckKind::Funceq(eq, l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let z = oracle(&p);
                for b in eq.bundles(&cfg, &p)? {
                    let mut terms = equation_terms(&b, &cfg, &p, &z)?;
                    if fault {
                        terms[0] *= 1.0 + 1e-3;
                    }
                    let tag = format!("{}:{}", c.id, b.tag);
                    m.push(ResidualReport::from_terms(tag, snap(&p, &cfg), &terms, tol)?);
                }
            }
        }
        CheckKind::ShiftCramer(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let z = oracle(&p);
                let direct = z(&cfg.x, p.tau + p.gamma)?;
                let r = rel(cramer_shift_a(&cfg, &p, &z)?, direct);
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), r, direct.norm(), tol));
            }
        }
        CheckKind::RatioCramer(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let zx = partition_function(&cfg.x, &p)?;
                let ratios = cramer_ratios(&cfg, &p)?;
                for (set, r) in unknown_sets(&cfg)?.iter().zip(ratios) {
                    let expected = partition_function(set, &p)? / zx;
                    m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), rel(r, expected), expected.norm(), tol));
                }
            }
        }
        CheckKind::DetBase(l) | CheckKind::DetFamilies(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let variants: Vec<OmegaVariant> = match c.kind {
                    CheckKind::DetBase(_) => vec![OmegaVariant::Base],
                    _ => OmegaVariant::all(l).into_iter().skip(1).collect(),
                };
                for v in variants {
                    let expected = partition_function(&v.spectral_set(&cfg)?, &p)?;
                    let r = rel(z_det(v, &cfg, &p)?, expected);
                    m.push(ResidualReport::from_residual(format!("{}:{v}", c.id), snap(&p, &cfg), r, expected.norm(), tol));
                }
            }
        }
        CheckKind::DetInvariance(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let fixed = ParamsTemplate::auxiliary_of(&p, &cfg);
                let mut vals = vec![z_det(OmegaVariant::Base, &cfg, &p)?];
                for _ in 0..10 {
                    let (_, moved) = s.draw_generic(&fixed)?;
                    vals.push(z_det(OmegaVariant::Base, &moved, &p)?);
                }
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), spread(&vals), vals[0].norm(), tol));
            }
        }
        CheckKind::DetSpecialization(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let generic = z_det(OmegaVariant::Base, &cfg, &p)?;
                let special = SpectralConfig::new(cfg.x.clone(), p.mu[0] - 2.0 * p.gamma, p.mu[0] - p.gamma)?;
                let r = rel(z_det(OmegaVariant::Base, &special, &p)?, generic);
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &special), r, generic.norm(), tol));
            }
        }
        CheckKind::DetFamilyIndependence(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                for i in 1..=l {
                    let family = z_det(OmegaVariant::Zero(i), &cfg, &p)?;
                    let mut x = cfg.x.clone();
                    let xi = std::mem::replace(&mut x[i - 1], cfg.x0);
                    let permuted = SpectralConfig::new(x, xi, cfg.x0bar)?;
                    let base = z_det(OmegaVariant::Base, &permuted, &p)?;
                    m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), rel(family, base), base.norm(), tol));
                }
            }
        }
        CheckKind::TauSpecial(l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                for r in tau_special_ratios(&cfg, &p, tol)? {
                    m.push(r);
                }
            }
        }
        CheckKind::SixVertexConstant(kind, l) | CheckKind::SixVertexUnity(kind, l) => {
            let (p0, _) = s.draw_generic(&ParamsTemplate::sites(l))?;
            let mut ratios = Vec::new();
            let mut worst_unity = Measured::default();
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::model_of(&p0))?;
                let mut variants = vec![(SixVertexVariant::Base, cfg.x.clone())];
                for i in 1..=l {
                    variants.push((SixVertexVariant::Column(i), cfg.with_x0_at(i)?));
                }
                for (v, set) in variants {
                    let r = sixv_z_det(kind, v, cfg.x0, &cfg.x, p.gamma, &p.mu)? / sixv_partition_function(&set, p.gamma, &p.mu)?;
                    ratios.push(r);
                    worst_unity.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), (r - 1.0).norm(), 1.0, tol));
                }
            }
            return Ok(match c.kind {
                CheckKind::SixVertexConstant(..) => Measured::value(spread(&ratios)),
                _ => worst_unity,
            });
        }
        CheckKind::SixVertexNull(kind, l) => {
            for _ in 0..c.draws {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let r = sixv_null_determinant(kind, cfg.x0, &cfg.x, p.gamma, &p.mu)?;
                m.push(ResidualReport::from_residual(c.id.clone(), snap(&p, &cfg), r, 1.0, tol));
            }
        }
        CheckKind::PairIndex => {
            let mut bad = 0usize;
            for l in 2..=6 {
                let mut seen: Vec<usize> = pairs(l).into_iter().map(|(r, s)| pair_index(r, s, l)).collect::<Result<_>>()?;
                seen.sort_unstable();
                if seen != (1..=l * (l - 1) / 2).collect::<Vec<_>>() {
                    bad += 1;
                }
            }
            return Ok(Measured::value(bad as f64));
        }
        CheckKind::OmegaDimension => {
            let mut bad = 0usize;
            for l in 1..=4 {
                let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(l))?;
                let a = crate::detrep::assemble_omega(OmegaVariant::Base, &cfg, &p)?;
                let d = system_dimension(l);
                if a.matrix.rows() != d || a.matrix.cols() != d || d != 2 * l + l * (l - 1) / 2 {
                    bad += 1;
                }
            }
            return Ok(Measured::value(bad as f64));
        }
        CheckKind::OmegaSparsity => {
            let (p, cfg) = s.draw_generic(&ParamsTemplate::sites(3))?;
            return Ok(Measured::value(sparsity_violations(&crate::detrep::assemble_omega(OmegaVariant::Base, &cfg, &p)?) as f64));
        }
    }
    Ok(m)
}

/// Entries whose exact zero / non-zero status disagrees with the block case tables.
pub fn sparsity_violations(a: &crate::detrep::OmegaAssembly) -> usize {
    let l = a.f.rows();
    let zero = Scalar::new(0.0, 0.0);
    let mut bad = 0;
    let mut expect = |value: Scalar, nonzero: bool| {
        if (value != zero) != nonzero {
            bad += 1;
        }
    };
    for (n, (r, s)) in pairs(l).into_iter().enumerate() {
        for a_ in 1..=l {
            let touches = a_ == r || a_ == s;
            expect(a.i[(a_ - 1, n)], touches);
            expect(a.jbar[(a_ - 1, n)], touches);
            expect(a.ibar[(n, a_ - 1)], touches);
            expect(a.j[(n, a_ - 1)], touches);
        }
        for (q, (r2, s2)) in pairs(l).into_iter().enumerate() {
            let shares = r == r2 || r == s2 || s == r2 || s == s2;
            expect(a.k[(n, q)], shares);
        }
    }
    for i in 0..l {
        for j in 0..l {
            if i != j {
                expect(a.fbar[(i, j)], false);
                expect(a.g[(i, j)], false);
            }
        }
    }
    bad
}
