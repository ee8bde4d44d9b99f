//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [domain]
//! shape = ball          # ball | ellipsoid
//! n = 1
//! radius = 1
//! h = 0.0625
//!
//! [problem]
//! F = linear alpha=1    # zero | linear alpha= offset= | arctan   (h0= adds a constant twist)
//! mu = constant value=1 # constant value= | radial power= scale= | vanishing-disc radius= ramp= center=
//! phi0 = quadratic a=1 c=-1
//! horizon = 8
//!
//! [run]
//! dt = cfl              # cfl | <number>
//! snapshots = 0:8:32    # start:end:intervals | comma list
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::HarnessError;
use crate::barriers::TimeGrid;
use crate::elliptic::{EllipticOptions, RateWindow, SweepMode};
use crate::exec::Execution;
use crate::flow::{Density, DtPolicy, Nonlinearity, ProblemSpec, RunOptions, Scheme, Twist};
use crate::geometry::{build_mesh, DomainSpec};
use crate::operators::MaOperator;
use crate::tolerances::{CERT_TOL, PSH_C, RATE_WINDOW_HIGH, RATE_WINDOW_LOW, STEADY_TOL};

/// Named configurations accepted by `--preset`.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "rate",
        "[domain]\nshape = ball\nn = 1\nradius = 1\nh = 0.0625\n\n[problem]\nF = linear alpha=1\nmu = constant value=1\nphi0 = quadratic a=1 c=-1\nhorizon = 6\n\n[run]\ndt = cfl\nc_cfl = 0.9\nsnapshots = 0:6:60\n",
    ),
    (
        "arctan",
        "[domain]\nshape = ball\nn = 1\nradius = 1\nh = 0.0625\n\n[problem]\nF = arctan\nmu = constant value=1\nphi0 = quadratic a=1 c=-1\nhorizon = 20\n\n[run]\ndt = cfl\nc_cfl = 0.9\nsnapshots = 0:20:40\n",
    ),
    (
        "steady",
        "[domain]\nshape = ball\nn = 1\nradius = 1\nh = 0.0625\n\n[problem]\nF = zero\nmu = constant value=1\nphi0 = quadratic a=1 c=0\nhorizon = 1\n\n[run]\ndt = cfl\nsnapshots = 0:1:10\nsteady_tol = none\n",
    ),
    (
        "small",
        "[domain]\nshape = ball\nn = 1\nradius = 1\nh = 0.125\n\n[problem]\nF = linear alpha=1\nmu = constant value=1\nphi0 = quadratic a=1 c=-1\nhorizon = 2\n\n[run]\ndt = cfl\nsnapshots = 0:2:8\n\n[barriers]\neps = 0.1\nt_end = 1\nsteps = 20\n",
    ),
];

/// Named tolerance budget; defaults are the crate constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub cert_tol: f64,
    pub psh_c: f64,
    pub steady_tol: f64,
    pub rate_window: RateWindow,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cert_tol: CERT_TOL,
            psh_c: PSH_C,
            steady_tol: STEADY_TOL,
            rate_window: RateWindow {
                low: RATE_WINDOW_LOW,
                high: RATE_WINDOW_HIGH,
            },
        }
    }
}

impl Tolerances {
    pub fn psh_tol(&self, h: f64) -> f64 {
        self.psh_c * h
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

/// `name k=v k=v` preset value.
struct Preset<'a> {
    name: &'a str,
    params: BTreeMap<&'a str, &'a str>,
    line: usize,
}

impl Preset<'_> {
    fn num(&self, key: &str, default: Option<f64>) -> Result<f64, HarnessError> {
        match self.params.get(key) {
            Some(v) => v.parse().map_err(|_| {
                cfg_err(
                    self.line,
                    format!("{}: bad number for {key}: {v}", self.name),
                )
            }),
            None => default.ok_or_else(|| {
                cfg_err(self.line, format!("{}: missing parameter {key}", self.name))
            }),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        self.params
            .get(key)
            .map(|v| parse_list(v, self.line))
            .transpose()
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), HarnessError> {
        for k in self.params.keys() {
            if !allowed.contains(k) {
                return Err(cfg_err(
                    self.line,
                    format!("{}: unknown parameter {k}", self.name),
                ));
            }
        }
        Ok(())
    }
}

fn cfg_err(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        line,
        msg: msg.into(),
    }
}

fn parse_list(v: &str, line: usize) -> Result<Vec<f64>, HarnessError> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| cfg_err(line, format!("bad number in list: {x}")))
        })
        .collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut sections: BTreeMap<String, BTreeMap<String, (usize, String)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                let name = name.trim().to_string();
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some(sec) = current.as_ref() else {
                return Err(cfg_err(line, "key outside of a section"));
            };
            let Some((k, v)) = body.split_once('=') else {
                return Err(cfg_err(line, format!("expected key = value, got `{body}`")));
            };
            let entry = sections.get_mut(sec).expect("section exists");
            if entry
                .insert(k.trim().to_string(), (line, v.trim().to_string()))
                .is_some()
            {
                return Err(cfg_err(line, format!("duplicate key {}", k.trim())));
            }
        }
        Ok(Self { sections })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text).expect("presets parse"))
    }

    /// Overrides one value, creating the section if needed.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), (0, value.to_string()));
    }

    /// Canonical text form (sections and keys sorted).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            let _ = writeln!(out, "[{name}]");
            for (k, (_, v)) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        }
        out
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.sections
            .get(section)?
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn num(&self, section: &str, key: &str, default: f64) -> Result<f64, HarnessError> {
        match self.raw(section, key) {
            Some((line, v)) => v
                .parse()
                .map_err(|_| cfg_err(line, format!("{section}.{key}: bad number {v}"))),
            None => Ok(default),
        }
    }

    fn uint(&self, section: &str, key: &str, default: usize) -> Result<usize, HarnessError> {
        match self.raw(section, key) {
            Some((line, v)) => v
                .parse()
                .map_err(|_| cfg_err(line, format!("{section}.{key}: bad integer {v}"))),
            None => Ok(default),
        }
    }

    fn preset_value(&self, section: &str, key: &str, default: &'static str) -> Preset<'_> {
        let (line, v) = self.raw(section, key).unwrap_or((0, default));
        let mut tokens = v.split_whitespace();
        let name = tokens.next().unwrap_or("");
        let params = tokens.filter_map(|t| t.split_once('=')).collect();
        Preset { name, params, line }
    }

    pub fn domain(&self) -> Result<DomainSpec, HarnessError> {
        let (line, shape) = self.raw("domain", "shape").unwrap_or((0, "ball"));
        let d = match shape {
            "ball" => DomainSpec::ball(
                self.uint("domain", "n", 1)?,
                self.num("domain", "radius", 1.0)?,
            )?,
            "ellipsoid" => {
                let (l, axes) = self
                    .raw("domain", "axes")
                    .ok_or_else(|| cfg_err(line, "ellipsoid needs axes"))?;
                DomainSpec::ellipsoid(parse_list(axes, l)?)?
            }
            other => return Err(cfg_err(line, format!("unknown shape {other}"))),
        };
        Ok(d)
    }

    pub fn operator(&self) -> Result<Arc<MaOperator>, HarnessError> {
        let domain = self.domain()?;
        let h = self.num("domain", "h", 0.0625)?;
        let width = self.uint("domain", "width", 1)?;
        let mesh = Arc::new(build_mesh(&domain, h, width)?);
        Ok(Arc::new(MaOperator::with_default_frames(mesh)?))
    }

    pub fn nonlinearity(&self) -> Result<(Nonlinearity, Option<Twist>), HarnessError> {
        let p = self.preset_value("problem", "F", "zero");
        let f = match p.name {
            "zero" => {
                p.check_keys(&["h0"])?;
                Nonlinearity::zero()
            }
            "linear" => {
                p.check_keys(&["alpha", "offset", "h0"])?;
                Nonlinearity::affine(p.num("alpha", None)?, p.num("offset", Some(0.0))?)
            }
            "arctan" => {
                p.check_keys(&["h0"])?;
                Nonlinearity::arctan()
            }
            other => return Err(cfg_err(p.line, format!("unknown F preset {other}"))),
        };
        let twist = match p.params.get("h0") {
            Some(_) => Some(Twist::constant(p.num("h0", None)?)),
            None => None,
        };
        Ok((f, twist))
    }

    pub fn density(&self) -> Result<Density, HarnessError> {
        let p = self.preset_value("problem", "mu", "constant value=1");
        Ok(match p.name {
            "constant" => {
                p.check_keys(&["value"])?;
                Density::constant(p.num("value", Some(1.0))?)
            }
            "radial" => {
                p.check_keys(&["power", "scale"])?;
                let (power, scale) = (p.num("power", None)?, p.num("scale", Some(1.0))?);
                Density::radial(format!("radial power={power} scale={scale}"), move |r| {
                    scale * r.powf(power)
                })
            }
            "vanishing-disc" => {
                p.check_keys(&["radius", "ramp", "center"])?;
                let d = self.domain()?.real_dim();
                let center = p.list("center")?.unwrap_or_else(|| vec![0.0; d]);
                if center.len() != d {
                    return Err(cfg_err(p.line, format!("center needs {d} coordinates")));
                }
                Density::vanishing_disc(center, p.num("radius", None)?, p.num("ramp", Some(0.0))?)
            }
            other => return Err(cfg_err(p.line, format!("unknown mu preset {other}"))),
        })
    }

    /// `φ₀` as a closure: `quadratic a= b= c=` is `a|z|² + b·Re z₁ + c`,
    /// `norm a= c=` is `a|z| + c`.
    pub fn initial(&self) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + 'static, HarnessError> {
        let p = self.preset_value("problem", "phi0", "quadratic a=1 c=-1");
        let kind = match p.name {
            "quadratic" => {
                p.check_keys(&["a", "b", "c"])?;
                0
            }
            "norm" => {
                p.check_keys(&["a", "c"])?;
                1
            }
            other => return Err(cfg_err(p.line, format!("unknown phi0 preset {other}"))),
        };
        let a = p.num("a", Some(1.0))?;
        let b = p.num("b", Some(0.0))?;
        let c = p.num("c", Some(0.0))?;
        Ok(move |z: &[f64]| {
            let r2: f64 = z.iter().map(|x| x * x).sum();
            if kind == 0 {
                a * r2 + b * z[0] + c
            } else {
                a * r2.sqrt() + c
            }
        })
    }

    pub fn problem(&self) -> Result<ProblemSpec, HarnessError> {
        let op = self.operator()?;
        let (f, twist) = self.nonlinearity()?;
        let mut p = ProblemSpec::from_fn(op, f, self.density()?, self.initial()?)?;
        if let Some((line, v)) = self.raw("problem", "horizon") {
            let t: f64 = v
                .parse()
                .map_err(|_| cfg_err(line, format!("bad horizon {v}")))?;
            p = p.with_horizon(t)?;
        }
        if let Some(tw) = twist {
            p = p.with_twist(tw);
        }
        Ok(p)
    }

    pub fn execution(&self) -> Result<Execution, HarnessError> {
        match self.raw("run", "execution") {
            None | Some((_, "auto")) => Ok(Execution::Auto),
            Some((_, "sequential")) => Ok(Execution::Sequential),
            Some((line, v)) => Err(cfg_err(line, format!("unknown execution {v}"))),
        }
    }

    pub fn run_options(&self) -> Result<RunOptions, HarnessError> {
        let mut o = RunOptions {
            exec: self.execution()?,
            ..RunOptions::default()
        };
        o.scheme = match self.raw("run", "scheme") {
            None | Some((_, "explicit")) => Scheme::Explicit,
            Some((_, "semi-implicit")) => Scheme::SemiImplicit,
            Some((line, v)) => return Err(cfg_err(line, format!("unknown scheme {v}"))),
        };
        o.dt = match self.raw("run", "dt") {
            None | Some((_, "cfl")) => DtPolicy::Cfl,
            Some((line, v)) => DtPolicy::Fixed(
                v.parse()
                    .map_err(|_| cfg_err(line, format!("bad dt {v}")))?,
            ),
        };
        o.c_cfl = self.num("run", "c_cfl", o.c_cfl)?;
        o.kappa = self.num("run", "kappa", o.kappa)?;
        o.max_steps = self.uint("run", "max_steps", o.max_steps)?;
        o.steady_tol = match self.raw("run", "steady_tol") {
            Some((_, "none")) => None,
            Some((line, v)) => Some(
                v.parse()
                    .map_err(|_| cfg_err(line, format!("bad steady_tol {v}")))?,
            ),
            None => Some(self.tolerances()?.steady_tol),
        };
        match self.raw("run", "enforce_cfl") {
            None | Some((_, "true")) => {}
            Some((_, "false")) => o.enforce_cfl = false,
            Some((line, v)) => return Err(cfg_err(line, format!("bad enforce_cfl {v}"))),
        }
        o.snapshot_times = match self.raw("run", "snapshots") {
            None => vec![0.0, 1.0],
            Some((line, v)) if v.contains(':') => {
                let parts: Vec<&str> = v.split(':').collect();
                if parts.len() != 3 {
                    return Err(cfg_err(line, "snapshots range is start:end:intervals"));
                }
                let bad = |x: &str| cfg_err(line, format!("bad snapshot range value {x}"));
                let s: f64 = parts[0].trim().parse().map_err(|_| bad(parts[0]))?;
                let e: f64 = parts[1].trim().parse().map_err(|_| bad(parts[1]))?;
                let k: usize = parts[2].trim().parse().map_err(|_| bad(parts[2]))?;
                if k == 0 {
                    return Err(bad(parts[2]));
                }
                (0..=k).map(|i| s + (e - s) * i as f64 / k as f64).collect()
            }
            Some((line, v)) => parse_list(v, line)?,
        };
        Ok(o)
    }

    pub fn elliptic_options(&self, op: &MaOperator) -> Result<EllipticOptions, HarnessError> {
        let mesh = op.mesh();
        let mut o = EllipticOptions {
            exec: self.execution()?,
            ..Default::default()
        };
        o.tol = self.num("elliptic", "tol", o.tol)?;
        o.max_sweeps = self.uint("elliptic", "max_sweeps", o.max_sweeps)?;
        o.omega = match self.raw("elliptic", "omega") {
            None | Some((_, "auto")) => EllipticOptions::auto_omega(mesh),
            Some((line, v)) => v
                .parse()
                .map_err(|_| cfg_err(line, format!("bad omega {v}")))?,
        };
        o.mode = match self.raw("elliptic", "mode") {
            None | Some((_, "gauss-seidel")) => SweepMode::GaussSeidel,
            Some((_, "jacobi")) => SweepMode::Jacobi,
            Some((line, v)) => return Err(cfg_err(line, format!("unknown sweep mode {v}"))),
        };
        Ok(o)
    }

    pub fn tolerances(&self) -> Result<Tolerances, HarnessError> {
        let d = Tolerances::default();
        Ok(Tolerances {
            cert_tol: self.num("tolerances", "cert_tol", d.cert_tol)?,
            psh_c: self.num("tolerances", "psh_c", d.psh_c)?,
            steady_tol: self.num("tolerances", "steady_tol", d.steady_tol)?,
            rate_window: RateWindow {
                low: self.num("tolerances", "rate_window_low", d.rate_window.low)?,
                high: self.num("tolerances", "rate_window_high", d.rate_window.high)?,
            },
        })
    }

    pub fn barrier_eps(&self) -> Result<f64, HarnessError> {
        self.num("barriers", "eps", 0.1)
    }

    pub fn barrier_grid(&self) -> Result<TimeGrid, HarnessError> {
        Ok(TimeGrid::new(
            self.num("barriers", "t_end", 1.0)?,
            self.uint("barriers", "steps", 20)?,
        )?)
    }

    pub fn seed(&self) -> Result<u64, HarnessError> {
        Ok(self.uint("verify", "seed", 0)? as u64)
    }

    pub fn cases(&self, default: usize) -> Result<usize, HarnessError> {
        self.uint("verify", "cases", default)
    }
}
