//! Plain-text run configuration: `[section]` headers, `key = value` lines and
//! `#` comments. Parsing collects every problem before failing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use crate::evolution::KernelConfig;
use crate::frac_ops::TimeGrid;
use crate::reaction::{Expr, NonlinearSystem, Regime, TruncationCutoff};
use crate::spectral::{DomainSpec, Field, ModeBasis};
use crate::system::SolverOptions;

const SECTIONS: &[(&str, &[&str])] = &[
    ("domain", &["dim", "lengths", "grid", "p0", "modes"]),
    ("time", &["T", "steps"]),
    ("fractional", &["alpha"]),
    ("system", &["preset", "k", "f", "g", "lambda", "d", "regime", "p", "C_p_lambda"]),
    ("initial", &["a", "b"]),
    ("linear", &["source", "coefficient"]),
    ("truncation", &["level"]),
    ("solver", &["tol", "max_iter", "window"]),
    ("blowup", &["threshold", "m"]),
    ("output", &["probe", "snapshots"]),
];

/// Every problem found in a configuration, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSection {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub grid: Vec<usize>,
    pub p0: f64,
    /// Number of retained eigenmodes.
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSection {
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reaction {
    Preset { name: String, k: Option<f64> },
    Expressions { f: String, g: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    Dissipative,
    Blowup,
}

impl RegimeKind {
    fn name(self) -> &'static str {
        match self {
            RegimeKind::Dissipative => "dissipative",
            RegimeKind::Blowup => "blowup",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSection {
    pub reaction: Reaction,
    pub lambda: f64,
    pub d: f64,
    pub regime: RegimeKind,
    pub p: Option<f64>,
    pub c_p_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupSection {
    /// Divergence threshold as a multiple of `m₀`.
    pub threshold: f64,
    pub m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSection {
    pub probe: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub time: TimeSection,
    pub alpha: f64,
    pub system: SystemSection,
    /// Initial data as expressions in `x` and `y`.
    pub initial: (String, String),
    /// Source and zeroth-order coefficient of the linear problem (in `x`, `y`).
    pub linear_source: Option<String>,
    pub linear_coefficient: Option<String>,
    pub truncation_level: Option<f64>,
    pub solver: SolverSection,
    pub blowup: BlowupSection,
    pub output: OutputSection,
}

struct Entry {
    value: String,
    line: usize,
}

struct Reader {
    entries: BTreeMap<(String, String), Entry>,
    violations: Vec<String>,
}

impl Reader {
    fn raw(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn text(&self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|e| e.value.clone())
    }

    fn parsed<V: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<V> {
        let entry = self.raw(section, key)?;
        match entry.value.parse::<V>() {
            Ok(v) => Some(v),
            Err(_) => {
                let msg = format!("line {}: {section}.{key} = '{}' is not {what}", entry.line, entry.value);
                self.violations.push(msg);
                None
            }
        }
    }

    fn real(&mut self, section: &str, key: &str) -> Option<f64> {
        let v: f64 = self.parsed(section, key, "a number")?;
        if v.is_finite() {
            Some(v)
        } else {
            let line = self.raw(section, key).map_or(0, |e| e.line);
            self.violations.push(format!("line {line}: {section}.{key} must be finite"));
            None
        }
    }

    fn list<V: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<Vec<V>> {
        let entry = self.raw(section, key)?;
        let parts: std::result::Result<Vec<V>, _> = entry.value.split(',').map(|s| s.trim().parse::<V>()).collect();
        match parts {
            Ok(v) => Some(v),
            Err(_) => {
                let msg = format!(
                    "line {}: {section}.{key} = '{}' is not a comma-separated list of {what}",
                    entry.line, entry.value
                );
                self.violations.push(msg);
                None
            }
        }
    }

    fn line_of(&self, section: &str, key: &str) -> String {
        self.raw(section, key).map_or_else(String::new, |e| format!("line {}: ", e.line))
    }

    fn range(&mut self, section: &str, key: &str, ok: bool, value: impl fmt::Display, admissible: &str) {
        if !ok {
            let at = self.line_of(section, key);
            self.violations.push(format!("{at}{section}.{key} = {value} outside the admissible range {admissible}"));
        }
    }
}

fn tokenize(text: &str) -> Reader {
    let mut reader = Reader { entries: BTreeMap::new(), violations: Vec::new() };
    let mut section: Option<String> = None;
    let mut skipping = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if SECTIONS.iter().any(|(s, _)| *s == name) {
                section = Some(name.to_string());
                skipping = false;
            } else {
                let known: Vec<&str> = SECTIONS.iter().map(|(s, _)| *s).collect();
                reader.violations.push(format!("line {line}: unknown section [{name}] (known: {})", known.join(", ")));
                section = None;
                skipping = true;
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            reader.violations.push(format!("line {line}: expected 'key = value' or '[section]', found '{content}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if skipping {
            continue;
        }
        let Some(sec) = section.as_deref() else {
            reader.violations.push(format!("line {line}: key '{key}' appears before any [section]"));
            continue;
        };
        let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            reader
                .violations
                .push(format!("line {line}: unknown key '{key}' in [{sec}] (allowed: {})", allowed.join(", ")));
            continue;
        }
        if value.is_empty() {
            reader.violations.push(format!("line {line}: {sec}.{key} has an empty value"));
            continue;
        }
        let slot = (sec.to_string(), key.to_string());
        if let Some(prev) = reader.entries.get(&slot) {
            reader.violations.push(format!("line {line}: {sec}.{key} already set on line {}", prev.line));
            continue;
        }
        reader.entries.insert(slot, Entry { value: value.to_string(), line });
    }
    reader
}

impl RunConfig {
    /// Parses and validates; on failure every violation is reported.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut r = tokenize(text);

        let dim = r.parsed::<usize>("domain", "dim", "an integer").unwrap_or(1);
        r.range("domain", "dim", dim == 1 || dim == 2, dim, "{1, 2}");
        let dim = dim.clamp(1, 2);
        let lengths = r.list::<f64>("domain", "lengths", "numbers").unwrap_or_else(|| vec![1.0; dim]);
        let default_grid = if dim == 1 { 257 } else { 65 };
        let grid = r.list::<usize>("domain", "grid", "integers").unwrap_or_else(|| vec![default_grid; dim]);
        for (key, len) in [("lengths", lengths.len()), ("grid", grid.len())] {
            if len != dim {
                let at = r.line_of("domain", key);
                r.violations.push(format!("{at}domain.{key} has {len} entries for dimension {dim}"));
            }
        }
        for l in &lengths {
            r.range("domain", "lengths", *l > 0.0 && l.is_finite(), l, "(0, inf)");
        }
        for g in &grid {
            r.range("domain", "grid", *g >= 8, g, "[8, inf)");
        }
        let p0 = r.real("domain", "p0").unwrap_or(1.0);
        r.range("domain", "p0", p0 > 0.0, p0, "(0, inf)");
        let modes = r.parsed::<usize>("domain", "modes", "an integer").unwrap_or(if dim == 1 { 64 } else { 256 });
        if grid.len() == dim && grid.iter().all(|g| *g >= 8) {
            let resolvable: usize = grid.iter().map(|g| g - 1).product();
            r.range("domain", "modes", modes >= 1 && modes <= resolvable, modes, &format!("[1, {resolvable}]"));
        }

        let t_final = r.real("time", "T").unwrap_or(1.0);
        r.range("time", "T", t_final > 0.0, t_final, "(0, inf)");
        let steps = r.parsed::<usize>("time", "steps", "an integer").unwrap_or(512);
        r.range("time", "steps", steps >= 2, steps, "[2, inf)");

        let alpha = match r.real("fractional", "alpha") {
            Some(a) => a,
            None => {
                if r.raw("fractional", "alpha").is_none() {
                    r.violations.push("fractional.alpha is required".into());
                }
                0.5
            }
        };
        r.range("fractional", "alpha", alpha > 0.0 && alpha < 1.0, alpha, "(0, 1)");

        let system = read_system(&mut r);

        let a = r.text("initial", "a").unwrap_or_else(|| "1".into());
        let b = r.text("initial", "b").unwrap_or_else(|| "1".into());
        for (key, e) in [("a", &a), ("b", &b)] {
            if let Err(err) = Expr::parse_in(e, ["x", "y"]) {
                let at = r.line_of("initial", key);
                r.violations.push(format!("{at}initial.{key}: {err}"));
            }
        }
        let linear_source = r.text("linear", "source");
        let linear_coefficient = r.text("linear", "coefficient");
        for (key, e) in [("source", &linear_source), ("coefficient", &linear_coefficient)] {
            if let Some(e) = e {
                if let Err(err) = Expr::parse_in(e, ["x", "y"]) {
                    let at = r.line_of("linear", key);
                    r.violations.push(format!("{at}linear.{key}: {err}"));
                }
            }
        }

        let truncation_level = r.real("truncation", "level");
        if let Some(l) = truncation_level {
            r.range("truncation", "level", l > 0.0, l, "(0, inf)");
        }

        let tol = r.real("solver", "tol").unwrap_or(crate::linear::DEFAULT_TOL);
        r.range("solver", "tol", tol > 0.0, tol, "(0, inf)");
        let max_iter = r.parsed::<usize>("solver", "max_iter", "an integer").unwrap_or(crate::linear::DEFAULT_MAX_ITER);
        r.range("solver", "max_iter", max_iter >= 1, max_iter, "[1, inf)");
        let window = r.parsed::<usize>("solver", "window", "an integer").unwrap_or(crate::system::DEFAULT_WINDOW);
        r.range("solver", "window", window >= 1, window, "[1, inf)");

        let threshold = r.real("blowup", "threshold").unwrap_or(crate::blowup::DEFAULT_THRESHOLD);
        r.range("blowup", "threshold", threshold > 1.0, threshold, "(1, inf)");
        let m = r.parsed::<u32>("blowup", "m", "a positive integer");
        if let (Some(m), Some(p)) = (m, system.as_ref().and_then(|s| s.p)) {
            if p > 1.0 {
                let min = crate::blowup::BlowupConfig::<f64>::min_exponent(p);
                r.range("blowup", "m", m >= min, m, &format!("[ceil(1/(p-1)) = {min}, inf)"));
            }
        }

        let output = OutputSection {
            probe: r.text("output", "probe").map(PathBuf::from),
            snapshots: r.text("output", "snapshots").map(PathBuf::from),
        };

        match system {
            Some(system) if r.violations.is_empty() => Ok(Self {
                domain: DomainSection { dim, lengths, grid, p0, modes },
                time: TimeSection { t_final, steps },
                alpha,
                system,
                initial: (a, b),
                linear_source,
                linear_coefficient,
                truncation_level,
                solver: SolverSection { tol, max_iter, window },
                blowup: BlowupSection { threshold, m },
                output,
            }),
            _ => {
                let mut violations = r.violations;
                // stable: unlocated problems keep their relative order at the end
                violations.sort_by_key(|v| line_of(v).unwrap_or(usize::MAX));
                Err(ConfigError { violations })
            }
        }
    }

    pub fn basis(&self) -> crate::error::Result<Arc<ModeBasis<f64>>> {
        let d = &self.domain;
        let spec = if d.dim == 1 {
            DomainSpec::interval(d.lengths[0], d.grid[0], d.p0)?
        } else {
            DomainSpec::rectangle([d.lengths[0], d.lengths[1]], [d.grid[0], d.grid[1]], d.p0)?
        };
        ModeBasis::build(spec, d.modes)
    }

    pub fn time_grid(&self) -> crate::error::Result<TimeGrid<f64>> {
        TimeGrid::new(self.time.t_final, self.time.steps)
    }

    pub fn kernel_config(&self, basis: Arc<ModeBasis<f64>>) -> crate::error::Result<KernelConfig<f64>> {
        KernelConfig::new(self.alpha, basis)
    }

    pub fn nonlinear_system(&self) -> crate::error::Result<NonlinearSystem> {
        build_system(&self.system)
    }

    /// Samples an `x`, `y` expression on the grid nodes.
    pub fn spatial_field(basis: &Arc<ModeBasis<f64>>, expr: &str) -> crate::error::Result<Field<f64>> {
        let e = Expr::parse_in(expr, ["x", "y"])?;
        Ok(Field::from_fn(basis.clone(), |x| e.eval(x[0], x.get(1).copied().unwrap_or(0.0))))
    }

    pub fn initial_fields(&self, basis: &Arc<ModeBasis<f64>>) -> crate::error::Result<(Field<f64>, Field<f64>)> {
        Ok((Self::spatial_field(basis, &self.initial.0)?, Self::spatial_field(basis, &self.initial.1)?))
    }

    /// Explicit level, else `10⁶` in the blow-up regime and `4‖a + λb‖_∞`
    /// otherwise.
    pub fn cutoff(&self, a: &Field<f64>, b: &Field<f64>) -> crate::error::Result<TruncationCutoff<f64>> {
        let level = match (self.truncation_level, self.system.regime) {
            (Some(l), _) => l,
            (None, RegimeKind::Blowup) => 1e6,
            (None, RegimeKind::Dissipative) => {
                let ag = a.to_grid();
                let bg = b.to_grid();
                let sup = ag
                    .grid_values()
                    .unwrap()
                    .iter()
                    .zip(bg.grid_values().unwrap())
                    .map(|(x, y)| (x + self.system.lambda * y).abs())
                    .fold(0.0, f64::max);
                4.0 * sup.max(1.0)
            }
        };
        TruncationCutoff::new(level)
    }

    pub fn solver_options(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            window: self.solver.window,
            stall_is_divergence: self.system.regime == RegimeKind::Blowup,
            ..SolverOptions::default()
        }
    }
}

fn line_of(violation: &str) -> Option<usize> {
    violation.strip_prefix("line ")?.split(':').next()?.parse().ok()
}

fn read_system(r: &mut Reader) -> Option<SystemSection> {
    let preset = r.text("system", "preset");
    let f = r.text("system", "f");
    let g = r.text("system", "g");
    let k = r.real("system", "k");
    let reaction = match (preset, f, g) {
        (Some(name), None, None) => Reaction::Preset { name, k },
        (None, Some(f), Some(g)) => {
            if k.is_some() {
                let at = r.line_of("system", "k");
                r.violations.push(format!("{at}system.k only applies to the gray-scott preset"));
            }
            Reaction::Expressions { f, g }
        }
        (Some(_), _, _) => {
            let at = r.line_of("system", "preset");
            r.violations.push(format!("{at}system.preset cannot be combined with f or g expressions"));
            return None;
        }
        (None, None, None) => {
            r.violations.push("[system] needs either preset or both f and g".into());
            return None;
        }
        (None, _, _) => {
            r.violations.push("[system] expressions need both f and g".into());
            return None;
        }
    };
    let preset_regime = match &reaction {
        Reaction::Preset { name, .. } if name == "power" || name == "quadratic" => RegimeKind::Blowup,
        _ => RegimeKind::Dissipative,
    };
    let regime = match r.text("system", "regime").as_deref() {
        None => preset_regime,
        Some("dissipative") => RegimeKind::Dissipative,
        Some("blowup") => RegimeKind::Blowup,
        Some(other) => {
            let at = r.line_of("system", "regime");
            r.violations.push(format!("{at}system.regime = '{other}' must be 'dissipative' or 'blowup'"));
            preset_regime
        }
    };
    let lambda = r.real("system", "lambda").unwrap_or(1.0);
    r.range("system", "lambda", lambda > 0.0, lambda, "(0, inf)");
    let d = r.real("system", "d").unwrap_or(1.0);
    r.range("system", "d", d > 0.0, d, "(0, inf)");
    let mut p = r.real("system", "p");
    if let Some(pv) = p {
        r.range("system", "p", pv > 1.0, pv, "(1, inf)");
    }
    if let Reaction::Preset { name, .. } = &reaction {
        if name == "quadratic" {
            match p {
                None => p = Some(2.0),
                Some(pv) if pv != 2.0 => {
                    let at = r.line_of("system", "p");
                    r.violations.push(format!("{at}system.p = {pv} conflicts with the quadratic preset (p = 2)"));
                }
                _ => {}
            }
        }
    }
    let c_p_lambda = r.real("system", "C_p_lambda");
    if let Some(c) = c_p_lambda {
        r.range("system", "C_p_lambda", c > 0.0, c, "(0, inf)");
    }
    let section = SystemSection { reaction, lambda, d, regime, p, c_p_lambda };
    if regime == RegimeKind::Blowup {
        if p.is_none() {
            r.violations.push("system.p is required in the blowup regime".into());
        }
        if c_p_lambda.is_none() {
            let mut hint = String::from(
                "system.C_p_lambda is required in the blowup regime; run the Assumption-2 validator \
                 (NonlinearSystem::largest_admissible_c) to find an admissible value",
            );
            if let (Some(pv), Ok(sys)) = (p, build_system(&SystemSection { c_p_lambda: Some(1.0), ..section.clone() }))
            {
                if pv > 1.0 {
                    let c = sys.largest_admissible_c(pv);
                    hint.push_str(&format!(" (it reports {c} on the sample lattice)"));
                }
            }
            r.violations.push(hint);
        }
    }
    if r.violations.is_empty() {
        match build_system(&section) {
            Ok(sys) => {
                if let Err(problems) = sys.validate() {
                    let what = match regime {
                        RegimeKind::Dissipative => "dissipative assumption",
                        RegimeKind::Blowup => "blow-up assumption",
                    };
                    for p in problems {
                        r.violations.push(format!("[system] violates the {what}: {p}"));
                    }
                }
            }
            Err(e) => r.violations.push(format!("[system]: {e}")),
        }
    }
    Some(section)
}

fn build_system(s: &SystemSection) -> crate::error::Result<NonlinearSystem> {
    let (f, g) = match &s.reaction {
        Reaction::Preset { name, k } => {
            let param = if name == "power" { s.p } else { *k };
            let base = NonlinearSystem::preset(name, param)?;
            (base.f, base.g)
        }
        Reaction::Expressions { f, g } => (Expr::parse(f)?, Expr::parse(g)?),
    };
    let regime = match s.regime {
        RegimeKind::Dissipative => Regime::Dissipative,
        RegimeKind::Blowup => Regime::Blowup { p: s.p.unwrap_or(f64::NAN), c: s.c_p_lambda.unwrap_or(f64::NAN) },
    };
    NonlinearSystem::new(f, g, s.lambda, s.d, regime)
}

fn join<T: fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.domain;
        writeln!(f, "[domain]")?;
        writeln!(f, "dim = {}", d.dim)?;
        writeln!(f, "lengths = {}", join(&d.lengths))?;
        writeln!(f, "grid = {}", join(&d.grid))?;
        writeln!(f, "p0 = {:?}", d.p0)?;
        writeln!(f, "modes = {}", d.modes)?;
        writeln!(f, "\n[time]\nT = {:?}\nsteps = {}", self.time.t_final, self.time.steps)?;
        writeln!(f, "\n[fractional]\nalpha = {:?}", self.alpha)?;
        let s = &self.system;
        writeln!(f, "\n[system]")?;
        match &s.reaction {
            Reaction::Preset { name, k } => {
                writeln!(f, "preset = {name}")?;
                if let Some(k) = k {
                    writeln!(f, "k = {k:?}")?;
                }
            }
            Reaction::Expressions { f: fe, g } => writeln!(f, "f = {fe}\ng = {g}")?,
        }
        writeln!(f, "lambda = {:?}\nd = {:?}\nregime = {}", s.lambda, s.d, s.regime.name())?;
        if let Some(p) = s.p {
            writeln!(f, "p = {p:?}")?;
        }
        if let Some(c) = s.c_p_lambda {
            writeln!(f, "C_p_lambda = {c:?}")?;
        }
        writeln!(f, "\n[initial]\na = {}\nb = {}", self.initial.0, self.initial.1)?;
        if self.linear_source.is_some() || self.linear_coefficient.is_some() {
            writeln!(f, "\n[linear]")?;
            if let Some(e) = &self.linear_source {
                writeln!(f, "source = {e}")?;
            }
            if let Some(e) = &self.linear_coefficient {
                writeln!(f, "coefficient = {e}")?;
            }
        }
        if let Some(l) = self.truncation_level {
            writeln!(f, "\n[truncation]\nlevel = {l:?}")?;
        }
        let sv = &self.solver;
        writeln!(f, "\n[solver]\ntol = {:?}\nmax_iter = {}\nwindow = {}", sv.tol, sv.max_iter, sv.window)?;
        writeln!(f, "\n[blowup]\nthreshold = {:?}", self.blowup.threshold)?;
        if let Some(m) = self.blowup.m {
            writeln!(f, "m = {m}")?;
        }
        if self.output.probe.is_some() || self.output.snapshots.is_some() {
            writeln!(f, "\n[output]")?;
            if let Some(p) = &self.output.probe {
                writeln!(f, "probe = {}", p.display())?;
            }
            if let Some(p) = &self.output.snapshots {
                writeln!(f, "snapshots = {}", p.display())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[fractional]\nalpha = 0.7\n[system]\npreset = gray-scott\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.domain.p0, 1.0);
        assert_eq!(c.solver.tol, 1e-10);
        assert_eq!(c.domain.modes, 64);
        assert_eq!(c.system.regime, RegimeKind::Dissipative);
    }

    #[test]
    fn alpha_out_of_range_names_the_range() {
        let err = RunConfig::parse("[fractional]\nalpha = 1.5\n[system]\npreset = zero\n").unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert!(err.violations[0].contains("(0, 1)"), "{err}");
        assert!(err.violations[0].starts_with("line 2"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let text =
            "[domain]\ngrid = 4\nbogus = 1\n[time]\nsteps = 1\n[fractional]\nalpha = 0\n[system]\npreset = zero\n";
        let err = RunConfig::parse(text).unwrap_err();
        assert_eq!(err.violations.len(), 4, "{err}");
        assert!(err.violations.iter().any(|v| v.contains("line 3") && v.contains("bogus")));
    }

    #[test]
    fn blowup_without_constant_points_to_validator() {
        let text = "[fractional]\nalpha = 0.5\n[system]\nf = u^2\ng = v^2\nregime = blowup\np = 2\n";
        let err = RunConfig::parse(text).unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert!(err.violations[0].contains("Assumption-2 validator"), "{err}");
        assert!(err.violations[0].contains("reports 1"), "{err}");
    }

    #[test]
    fn assumption_violations_rejected() {
        let text = "[fractional]\nalpha = 0.5\n[system]\nf = u*v\ng = 0\n";
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn round_trip() {
        let text = "[domain]\ndim = 2\nlengths = 1, 2.5\ngrid = 17, 33\nmodes = 40\n[time]\nT = 0.25\nsteps = 64\n\
                    [fractional]\nalpha = 0.3\n[system]\nf = -u*v^2 # comment\ng = u*v^2 - 0.1*v\nlambda = 1\n\
                    [initial]\na = 1 + 0.1*cos(pi*x)\n[linear]\ncoefficient = sin(pi*x)\n[truncation]\nlevel = 7\n\
                    [output]\nprobe = out/probe.csv\n";
        let c = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&c.to_string()).unwrap();
        assert_eq!(c, again);
        let blow = RunConfig::parse(
            "[fractional]\nalpha = 0.5\n[system]\npreset = quadratic\nC_p_lambda = 1\n[blowup]\nm = 2\n",
        )
        .unwrap();
        assert_eq!(blow, RunConfig::parse(&blow.to_string()).unwrap());
    }
}
