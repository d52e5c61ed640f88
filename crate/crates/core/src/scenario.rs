// SPDX-License-Identifier: Apache-2.0

//! Scenario files and the bundled presets.
//!
//! A scenario file is line-oriented key-value text. `#` starts a comment.
//! Bodies are numbered from 1.
//!
//! ```text
//! name = demo
//! n_bodies = 2
//! bath_temperature = 300
//! initial_temperatures = [400, 300]
//! capacities = [1, 1]
//! t_end = 10
//! dt = 0.0005                # optional
//! gauge = first-component    # optional, default unit-norm
//!
//! pair 1 2 { mean = 1, amplitude = 0.5, period = 10, phase = 0 }
//! pair 2 1 {
//!     mean = 0.8
//!     amplitude = 0.4
//!     period = 10
//!     phase = pi/2
//! }
//! bath 1 { mean = 0.5, amplitude = 0.1, period = 1 }
//! bath 2 { times = [0, 5, 10], values = [0.3, 0.4, 0.3] }
//! ```
//!
//! `pair i j` is the conductance through which body `i` receives heat from
//! body `j`. Numbers accept `pi` and the operators `+ - * /` with
//! parentheses.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use crate::integrator::{self, IntegrationError};
use crate::model::{Conductance, DrivingProtocol, ModelError, TabulatedSeries, ThermalNetwork, TwoBodyDriving, TwoBodyParams};
use crate::spectral::Gauge;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }

    fn global(key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key `{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// A network plus everything needed to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub network: ThermalNetwork,
    pub initial_temperatures: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    /// Fixed step; `None` selects [`integrator::default_time_step`].
    pub dt: Option<f64>,
    pub gauge: Gauge,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.network.n_bodies();
        if self.initial_temperatures.len() != n {
            return Err(ConfigError::global(
                Some("initial_temperatures"),
                format!("expected {n} values, got {}", self.initial_temperatures.len()),
            ));
        }
        if self.initial_temperatures.iter().any(|t| !t.is_finite()) {
            return Err(ConfigError::global(Some("initial_temperatures"), "values must be finite"));
        }
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(ConfigError::global(
                Some("t_end"),
                format!("window [{}, {}] is empty", self.t_start, self.t_end),
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(ConfigError::global(Some("dt"), format!("step {dt} must be positive")));
            }
        }
        self.network
            .validate_window(self.t_start, self.t_end, 1000)
            .map_err(|e| ConfigError::global(None, e.to_string()))
    }

    pub fn time_step(&self) -> f64 {
        self.dt
            .unwrap_or_else(|| integrator::default_time_step(&self.network, self.t_start, self.t_end))
    }

    /// Grid shared by the integrator and the phase computation.
    pub fn grid(&self) -> Result<Vec<f64>, IntegrationError> {
        integrator::uniform_grid(self.t_start, self.t_end, self.time_step())
    }

    /// The cosine laws when the network is a driven two-body system.
    pub fn two_body_driving(&self) -> Option<TwoBodyDriving> {
        TwoBodyDriving::from_network(&self.network)
    }

    /// Same scenario with a replacement network and a new name.
    pub fn with_network(&self, name: impl Into<String>, network: ThermalNetwork) -> Self {
        Self {
            name: name.into(),
            network,
            ..self.clone()
        }
    }
}

// ---------------------------------------------------------------- presets

/// Names accepted by [`preset`].
pub const PRESET_NAMES: &[&str] = &["fig1", "fig2a", "fig2b", "fig3", "reciprocal", "equilibrium"];

const FIG2_BATH_TEMPERATURE: f64 = 300.0;
const FIG2_INITIAL: [f64; 2] = [400.0, 300.0];
const TAU: f64 = 1.0;

/// Two-body laws with `G=1, H=0.8, g=0.5, h=0.3, dG=0.5, dH=0.4,
/// dg=dh=0.1, theta=pi/2, tau=1 s` and coupling period `coupling_period`.
pub fn fig2_params(coupling_period: f64) -> TwoBodyParams {
    TwoBodyParams {
        coupling_12: 1.0,
        coupling_21: 0.8,
        bath_1: 0.5,
        bath_2: 0.3,
        coupling_12_amplitude: 0.5,
        coupling_21_amplitude: 0.4,
        bath_1_amplitude: 0.1,
        bath_2_amplitude: 0.1,
        phase_shift: PI / 2.0,
        coupling_period,
        bath_period: TAU,
    }
}

/// Weak-coupling regime: `G=0.01, H=0.1, g=h=0.01, dG=0.005, dH=0.05,
/// dg=0.1 g, dh=0.1 h, theta=pi/2, Lambda=10 tau`.
pub fn fig3_params() -> TwoBodyParams {
    TwoBodyParams {
        coupling_12: 0.01,
        coupling_21: 0.1,
        bath_1: 0.01,
        bath_2: 0.01,
        coupling_12_amplitude: 0.005,
        coupling_21_amplitude: 0.05,
        bath_1_amplitude: 0.001,
        bath_2_amplitude: 0.001,
        phase_shift: PI / 2.0,
        coupling_period: 10.0 * TAU,
        bath_period: TAU,
    }
}

/// Scenario for a unit-capacity two-body system driven by `params`.
pub fn two_body_scenario(
    name: &str,
    params: &TwoBodyParams,
    initial: [f64; 2],
    t_end: f64,
    gauge: Gauge,
) -> Result<Scenario, ModelError> {
    let network = TwoBodyDriving::from_params(params)?.network(FIG2_BATH_TEMPERATURE)?;
    Ok(Scenario {
        name: name.to_owned(),
        network,
        initial_temperatures: initial.to_vec(),
        t_start: 0.0,
        t_end,
        dt: None,
        gauge,
    })
}

/// Bundled scenarios. `fig1` expands to its two coupling periods.
pub fn preset(name: &str) -> Result<Vec<Scenario>, ConfigError> {
    let fc = Gauge::FirstComponent;
    let build = |label: &str, p: TwoBodyParams, initial: [f64; 2], t_end: f64, gauge: Gauge| {
        two_body_scenario(label, &p, initial, t_end, gauge)
            .map_err(|e| ConfigError::global(None, format!("preset `{label}`: {e}")))
    };
    match name {
        "fig1" => Ok(vec![
            build("fig1-lambda-1tau", fig2_params(TAU), FIG2_INITIAL, 10.0, fc)?,
            build("fig1-lambda-10tau", fig2_params(10.0 * TAU), FIG2_INITIAL, 10.0, fc)?,
        ]),
        "fig2a" => Ok(vec![build("fig2a", fig2_params(10.0 * TAU), FIG2_INITIAL, 10.0, fc)?]),
        "fig2b" => Ok(vec![build("fig2b", fig2_params(TAU), FIG2_INITIAL, 10.0, fc)?]),
        "fig3" => Ok(vec![build("fig3", fig3_params(), FIG2_INITIAL, 20.0, fc)?]),
        "reciprocal" => {
            let mut p = fig2_params(10.0 * TAU);
            p.coupling_21 = p.coupling_12;
            p.coupling_21_amplitude = p.coupling_12_amplitude;
            p.phase_shift = 0.0;
            Ok(vec![build("reciprocal", p, FIG2_INITIAL, 10.0, Gauge::UnitNorm)?])
        }
        "equilibrium" => Ok(vec![build(
            "equilibrium",
            fig2_params(10.0 * TAU),
            [FIG2_BATH_TEMPERATURE; 2],
            10.0,
            Gauge::UnitNorm,
        )?]),
        other => Err(ConfigError::global(
            None,
            format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")),
        )),
    }
}

// ---------------------------------------------------------------- parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Str(String),
    Sym(char),
    Newline,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ConfigError> {
    let mut out = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("");
        let chars: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric()
                        || chars[i] == '_'
                        || (chars[i] == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic())))
                {
                    i += 1;
                }
                out.push((Tok::Word(chars[start..i].iter().collect()), line));
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| ConfigError::new(line, None, format!("bad number `{s}`")))?;
                out.push((Tok::Num(v), line));
            } else if c == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(ConfigError::new(line, None, "unterminated string"));
                }
                out.push((Tok::Str(chars[start..i].iter().collect()), line));
                i += 1;
            } else if "{}[](),=+-*/;".contains(c) {
                out.push((if c == ';' { Tok::Newline } else { Tok::Sym(c) }, line));
                i += 1;
            } else {
                return Err(ConfigError::new(line, None, format!("unexpected character `{c}`")));
            }
        }
        out.push((Tok::Newline, line));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(1, |(_, l)| *l)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline) | Some(Tok::Sym(','))) {
            self.pos += 1;
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char, key: Option<&str>) -> Result<(), ConfigError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Sym(s)) if s == c => Ok(()),
            other => Err(ConfigError::new(line, key, format!("expected `{c}`, found {}", describe(other.as_ref())))),
        }
    }

    fn value(&mut self, key: &str) -> Result<Value, ConfigError> {
        let line = self.line();
        match self.peek() {
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let mut items = Vec::new();
                self.skip_newlines();
                if self.peek() == Some(&Tok::Sym(']')) {
                    self.pos += 1;
                    return Ok(Value::List(items));
                }
                loop {
                    self.skip_newlines();
                    items.push(self.expr(key)?);
                    self.skip_newlines();
                    let line = self.line();
                    match self.next() {
                        Some(Tok::Sym(',')) => continue,
                        Some(Tok::Sym(']')) => break,
                        other => {
                            return Err(ConfigError::new(
                                line,
                                Some(key),
                                format!("expected `,` or `]`, found {}", describe(other.as_ref())),
                            ))
                        }
                    }
                }
                Ok(Value::List(items))
            }
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Value::Text(s))
            }
            Some(Tok::Word(w)) if w != "pi" => {
                let w = w.clone();
                self.pos += 1;
                Ok(Value::Text(w))
            }
            Some(_) => Ok(Value::Number(self.expr(key)?)),
            None => Err(ConfigError::new(line, Some(key), "missing value")),
        }
    }

    fn expr(&mut self, key: &str) -> Result<f64, ConfigError> {
        let mut acc = self.term(key)?;
        loop {
            match self.peek() {
                Some(Tok::Sym('+')) => {
                    self.pos += 1;
                    acc += self.term(key)?;
                }
                Some(Tok::Sym('-')) => {
                    self.pos += 1;
                    acc -= self.term(key)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self, key: &str) -> Result<f64, ConfigError> {
        let mut acc = self.unary(key)?;
        loop {
            match self.peek() {
                Some(Tok::Sym('*')) => {
                    self.pos += 1;
                    acc *= self.unary(key)?;
                }
                Some(Tok::Sym('/')) => {
                    self.pos += 1;
                    acc /= self.unary(key)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self, key: &str) -> Result<f64, ConfigError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Sym('-')) => Ok(-self.unary(key)?),
            Some(Tok::Sym('+')) => self.unary(key),
            Some(Tok::Num(v)) => Ok(v),
            Some(Tok::Word(w)) if w == "pi" => Ok(PI),
            Some(Tok::Sym('(')) => {
                let v = self.expr(key)?;
                self.expect(')', Some(key))?;
                Ok(v)
            }
            other => Err(ConfigError::new(
                line,
                Some(key),
                format!("expected a number, found {}", describe(other.as_ref())),
            )),
        }
    }

    fn index(&mut self, key: &str) -> Result<usize, ConfigError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Num(v)) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
            other => Err(ConfigError::new(
                line,
                Some(key),
                format!("expected a body number (1, 2, ...), found {}", describe(other.as_ref())),
            )),
        }
    }
}

fn describe(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of file".into(),
        Some(Tok::Word(w)) => format!("`{w}`"),
        Some(Tok::Num(v)) => format!("`{v}`"),
        Some(Tok::Str(s)) => format!("\"{s}\""),
        Some(Tok::Sym(c)) => format!("`{c}`"),
        Some(Tok::Newline) => "end of line".into(),
    }
}

struct Entry {
    value: Value,
    line: usize,
}

struct Block {
    kind: &'static str,
    target: (usize, usize),
    fields: HashMap<String, Entry>,
    line: usize,
}

impl Block {
    fn label(&self) -> String {
        match self.kind {
            "pair" => format!("pair {} {}", self.target.0, self.target.1),
            _ => format!("bath {}", self.target.0),
        }
    }

    fn number(&self, name: &str) -> Result<Option<f64>, ConfigError> {
        match self.fields.get(name) {
            None => Ok(None),
            Some(Entry { value: Value::Number(v), .. }) => Ok(Some(*v)),
            Some(Entry { line, .. }) => Err(ConfigError::new(
                *line,
                Some(&format!("{}.{name}", self.label())),
                "expected a number",
            )),
        }
    }

    fn list(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        match self.fields.get(name) {
            Some(Entry { value: Value::List(v), .. }) => Ok(v.clone()),
            Some(Entry { line, .. }) => Err(ConfigError::new(
                *line,
                Some(&format!("{}.{name}", self.label())),
                "expected a list",
            )),
            None => Err(ConfigError::new(
                self.line,
                Some(&format!("{}.{name}", self.label())),
                "missing",
            )),
        }
    }

    fn conductance(&self) -> Result<Conductance, ConfigError> {
        let label = self.label();
        if let Some((name, entry)) = self
            .fields
            .iter()
            .find(|(k, _)| !["mean", "amplitude", "period", "phase", "times", "values"].contains(&k.as_str()))
        {
            return Err(ConfigError::new(entry.line, Some(&format!("{label}.{name}")), "unknown field"));
        }
        let tabulated = self.fields.contains_key("times") || self.fields.contains_key("values");
        if tabulated {
            if let Some((name, entry)) = self.fields.iter().find(|(k, _)| k.as_str() != "times" && k.as_str() != "values") {
                return Err(ConfigError::new(
                    entry.line,
                    Some(&format!("{label}.{name}")),
                    "cannot be combined with `times`/`values`",
                ));
            }
            let series = TabulatedSeries::new(self.list("times")?, self.list("values")?)
                .map_err(|e| ConfigError::new(self.line, Some(&label), e.to_string()))?;
            return Ok(Conductance::Tabulated(series));
        }
        let mean = self
            .number("mean")?
            .ok_or_else(|| ConfigError::new(self.line, Some(&format!("{label}.mean")), "missing"))?;
        let amplitude = self.number("amplitude")?.unwrap_or(0.0);
        let phase = self.number("phase")?.unwrap_or(0.0);
        let period = match self.number("period")? {
            Some(p) => p,
            None if amplitude == 0.0 => 1.0,
            None => {
                return Err(ConfigError::new(
                    self.line,
                    Some(&format!("{label}.period")),
                    "required when amplitude is non-zero",
                ))
            }
        };
        let key_line = |name: &str| self.fields.get(name).map_or(self.line, |e| e.line);
        DrivingProtocol::new(mean, amplitude, period, phase)
            .map(Conductance::Driven)
            .map_err(|e| {
                let field = if !(period > 0.0 && period.is_finite()) {
                    "period"
                } else if amplitude < 0.0 || amplitude > mean {
                    "amplitude"
                } else {
                    "mean"
                };
                ConfigError::new(key_line(field), Some(&format!("{label}.{field}")), e.to_string())
            })
    }
}

/// Parses a scenario file and validates the resulting network.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut scalars: HashMap<String, Entry> = HashMap::new();
    let mut blocks: Vec<Block> = Vec::new();

    loop {
        parser.skip_newlines();
        let line = parser.line();
        let word = match parser.next() {
            None => break,
            Some(Tok::Word(w)) => w,
            other => {
                return Err(ConfigError::new(
                    line,
                    None,
                    format!("expected a key, found {}", describe(other.as_ref())),
                ))
            }
        };
        if word == "pair" || word == "bath" {
            let kind = if word == "pair" { "pair" } else { "bath" };
            let i = parser.index(kind)?;
            let j = if kind == "pair" { parser.index(kind)? } else { 0 };
            let mut block = Block {
                kind,
                target: (i, j),
                fields: HashMap::new(),
                line,
            };
            let label = block.label();
            parser.skip_newlines();
            parser.expect('{', Some(&label))?;
            loop {
                parser.skip_separators();
                let fline = parser.line();
                match parser.next() {
                    Some(Tok::Sym('}')) => break,
                    Some(Tok::Word(field)) => {
                        let key = format!("{label}.{field}");
                        parser.expect('=', Some(&key))?;
                        let value = parser.value(&key)?;
                        if block.fields.insert(field, Entry { value, line: fline }).is_some() {
                            return Err(ConfigError::new(fline, Some(&key), "given twice"));
                        }
                    }
                    other => {
                        return Err(ConfigError::new(
                            fline,
                            Some(&label),
                            format!("expected a field or `}}`, found {}", describe(other.as_ref())),
                        ))
                    }
                }
            }
            if blocks.iter().any(|b| b.kind == block.kind && b.target == block.target) {
                return Err(ConfigError::new(line, Some(&label), "defined twice"));
            }
            blocks.push(block);
        } else {
            parser.expect('=', Some(&word))?;
            let value = parser.value(&word)?;
            if !matches!(parser.peek(), None | Some(Tok::Newline)) {
                let l = parser.line();
                return Err(ConfigError::new(l, Some(&word), "trailing input after value"));
            }
            if scalars.insert(word.clone(), Entry { value, line }).is_some() {
                return Err(ConfigError::new(line, Some(&word), "given twice"));
            }
        }
    }

    build_scenario(scalars, blocks)
}

const SCALAR_KEYS: &[&str] = &[
    "name",
    "n_bodies",
    "bath_temperature",
    "initial_temperatures",
    "capacities",
    "t_start",
    "t_end",
    "dt",
    "gauge",
];

fn build_scenario(scalars: HashMap<String, Entry>, blocks: Vec<Block>) -> Result<Scenario, ConfigError> {
    let mut unknown: Vec<(&String, &Entry)> = scalars
        .iter()
        .filter(|(k, _)| !SCALAR_KEYS.contains(&k.as_str()))
        .collect();
    unknown.sort_by_key(|(_, e)| e.line);
    if let Some((k, e)) = unknown.first() {
        return Err(ConfigError::new(e.line, Some(k), "unknown key"));
    }

    let number = |key: &str| -> Result<Option<(f64, usize)>, ConfigError> {
        match scalars.get(key) {
            None => Ok(None),
            Some(Entry { value: Value::Number(v), line }) => Ok(Some((*v, *line))),
            Some(Entry { line, .. }) => Err(ConfigError::new(*line, Some(key), "expected a number")),
        }
    };
    let list = |key: &str| -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        match scalars.get(key) {
            None => Ok(None),
            Some(Entry { value: Value::List(v), line }) => Ok(Some((v.clone(), *line))),
            Some(Entry { line, .. }) => Err(ConfigError::new(*line, Some(key), "expected a list")),
        }
    };
    let text = |key: &str| -> Result<Option<(String, usize)>, ConfigError> {
        match scalars.get(key) {
            None => Ok(None),
            Some(Entry { value: Value::Text(v), line }) => Ok(Some((v.clone(), *line))),
            Some(Entry { line, .. }) => Err(ConfigError::new(*line, Some(key), "expected a word")),
        }
    };
    let required = |key: &str| ConfigError::global(Some(key), "missing");

    let (n, n_line) = number("n_bodies")?.ok_or_else(|| required("n_bodies"))?;
    if !(n >= 1.0) || n.fract() != 0.0 {
        return Err(ConfigError::new(n_line, Some("n_bodies"), format!("{n} is not a positive integer")));
    }
    let n = n as usize;
    let (bath_temperature, tb_line) = number("bath_temperature")?.ok_or_else(|| required("bath_temperature"))?;
    let mut network = ThermalNetwork::new(n, bath_temperature)
        .map_err(|e| ConfigError::new(tb_line, Some("bath_temperature"), e.to_string()))?;
    if let Some((caps, line)) = list("capacities")? {
        network = network
            .with_capacities(caps)
            .map_err(|e| ConfigError::new(line, Some("capacities"), e.to_string()))?;
    }
    let initial_temperatures = match list("initial_temperatures")? {
        Some((v, line)) if v.len() != n => {
            return Err(ConfigError::new(
                line,
                Some("initial_temperatures"),
                format!("expected {n} values, got {}", v.len()),
            ))
        }
        Some((v, _)) => v,
        None => vec![bath_temperature; n],
    };
    let t_start = number("t_start")?.map_or(0.0, |(v, _)| v);
    let (t_end, _) = number("t_end")?.ok_or_else(|| required("t_end"))?;
    let dt = number("dt")?.map(|(v, _)| v);
    let gauge = match text("gauge")? {
        None => Gauge::default(),
        Some((g, line)) => g.parse().map_err(|e: String| ConfigError::new(line, Some("gauge"), e))?,
    };
    let name = text("name")?.map_or_else(|| "scenario".to_owned(), |(v, _)| v);

    for block in &blocks {
        let label = block.label();
        let (i, j) = block.target;
        if i > n || j > n {
            return Err(ConfigError::new(block.line, Some(&label), format!("network has {n} bodies")));
        }
        let g = block.conductance()?;
        let result = match block.kind {
            "pair" => network.set_pair(i - 1, j - 1, g),
            _ => network.set_bath(i - 1, g),
        };
        result.map_err(|e| ConfigError::new(block.line, Some(&label), e.to_string()))?;
    }

    let scenario = Scenario {
        name,
        network,
        initial_temperatures,
        t_start,
        t_end,
        dt,
        gauge,
    };
    scenario.validate()?;
    Ok(scenario)
}
