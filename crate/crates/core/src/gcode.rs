//! Front end for the linear-motion subset of G-code.
//!
//! Text is lexed into [`RawCommand`]s and then resolved against the modal
//! machine state (positioning mode, extrusion mode, last seen coordinates)
//! into a [`Program`] of [`MotionCommand`]s carrying absolute targets and
//! per-move extrusion amounts.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vertex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed argument `{word}`")]
    MalformedArgument { line: usize, word: String },
    #[error("line {line}: unsupported motion command {code} (arc moves are not modelled)")]
    UnsupportedMotion { line: usize, code: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Command classes the front end distinguishes. Everything else is `Other`
/// and is dropped during resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    G0,
    G1,
    G90,
    G91,
    /// Set logical position (typically `G92 E0` to reset the extruder axis).
    G92,
    M82,
    M83,
    Other,
}

/// Explicit arguments of one command. Only X, Y, Z, E and F are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Args {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub e: Option<f64>,
    pub f: Option<f64>,
}

impl Args {
    pub fn get(&self, letter: char) -> Option<f64> {
        match letter.to_ascii_uppercase() {
            'X' => self.x,
            'Y' => self.y,
            'Z' => self.z,
            'E' => self.e,
            'F' => self.f,
            _ => None,
        }
    }

    fn slot(&mut self, letter: char) -> Option<&mut Option<f64>> {
        match letter {
            'X' => Some(&mut self.x),
            'Y' => Some(&mut self.y),
            'Z' => Some(&mut self.z),
            'E' => Some(&mut self.e),
            'F' => Some(&mut self.f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCommand {
    pub kind: CommandKind,
    pub args: Args,
    /// 1-based source line.
    pub line_no: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtrusionMode {
    Absolute,
    Relative,
}

impl fmt::Display for ExtrusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtrusionMode::Absolute => "absolute",
            ExtrusionMode::Relative => "relative",
        })
    }
}

/// Extrusion-mode handling requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtrusionModeOption {
    /// Follow M82/M83 as they appear; firmware default (absolute) before any.
    #[default]
    Auto,
    /// Force absolute E and ignore M82/M83.
    Absolute,
    /// Force relative E and ignore M82/M83.
    Relative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    pub extrusion_mode: ExtrusionModeOption,
}

/// One G0/G1 after modal resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCommand {
    /// Deposits material: a G1 with positive extrusion and planar displacement.
    pub extruding: bool,
    /// Absolute target, mm.
    pub target: Vertex,
    /// Filament pushed during the move, mm (negative for retractions).
    pub extrusion_amount: f64,
    /// mm/min
    pub feed_rate: f64,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub commands: Vec<MotionCommand>,
    pub source_path: String,
}

impl Program {
    pub fn extruding_moves(&self) -> usize {
        self.commands.iter().filter(|c| c.extruding).count()
    }
}

/// Parse G-code source into a resolved program.
pub fn parse_program(text: &str, options: ParseOptions) -> Result<Program, ParseError> {
    let raw = lex(text)?;
    Ok(Program { commands: resolve(&raw, options), source_path: String::new() })
}

/// Read and parse a `.gcode` file.
pub fn parse_file(path: &Path, options: ParseOptions) -> Result<Program, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut program = parse_program(&text, options)?;
    program.source_path = path.display().to_string();
    Ok(program)
}

/// Split source into commands, dropping comments and blank lines.
pub fn lex(text: &str) -> Result<Vec<RawCommand>, ParseError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let code = strip_comments(line);
        let mut words = code.split_whitespace().peekable();
        // Optional N-word line number.
        if let Some(w) = words.peek() {
            if w.len() > 1 && w.as_bytes()[0].eq_ignore_ascii_case(&b'N') && w[1..].parse::<u64>().is_ok() {
                words.next();
            }
        }
        let Some(head) = words.next() else { continue };
        let kind = classify(head, line_no)?;
        let mut args = Args::default();
        if matches!(kind, CommandKind::G0 | CommandKind::G1 | CommandKind::G92) {
            for word in words {
                let malformed = || ParseError::MalformedArgument { line: line_no, word: word.to_string() };
                let mut chars = word.chars();
                let letter = chars.next().map(|c| c.to_ascii_uppercase()).ok_or_else(malformed)?;
                let value: f64 = chars.as_str().parse().map_err(|_| malformed())?;
                if !value.is_finite() {
                    return Err(malformed());
                }
                *args.slot(letter).ok_or_else(malformed)? = Some(value);
            }
        }
        out.push(RawCommand { kind, args, line_no });
    }
    Ok(out)
}

fn strip_comments(line: &str) -> String {
    let line = line.split(';').next().unwrap_or("");
    let line = line.split('*').next().unwrap_or("");
    let mut out = String::with_capacity(line.len());
    let mut depth = 0usize;
    for c in line.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

fn classify(word: &str, line: usize) -> Result<CommandKind, ParseError> {
    let mut chars = word.chars();
    let letter = match chars.next() {
        Some(c) => c.to_ascii_uppercase(),
        None => return Ok(CommandKind::Other),
    };
    let Ok(number) = chars.as_str().parse::<f64>() else {
        return Ok(CommandKind::Other);
    };
    let kind = match (letter, number) {
        ('G', n) if n == 0.0 => CommandKind::G0,
        ('G', n) if n == 1.0 => CommandKind::G1,
        ('G', n) if n == 2.0 || n == 3.0 => {
            return Err(ParseError::UnsupportedMotion { line, code: word.to_ascii_uppercase() })
        }
        ('G', n) if n == 90.0 => CommandKind::G90,
        ('G', n) if n == 91.0 => CommandKind::G91,
        ('G', n) if n == 92.0 => CommandKind::G92,
        ('M', n) if n == 82.0 => CommandKind::M82,
        ('M', n) if n == 83.0 => CommandKind::M83,
        _ => CommandKind::Other,
    };
    Ok(kind)
}

fn is_first_extrusion(cmd: &RawCommand) -> bool {
    cmd.kind == CommandKind::G1 && cmd.args.e.is_some() && (cmd.args.x.is_some() || cmd.args.y.is_some())
}

/// Extrusion mode in force at the first extruding move: the last M82/M83
/// before it wins, absolute when neither appears.
pub fn detect_extrusion_mode(raw: &[RawCommand]) -> ExtrusionMode {
    let mut mode = ExtrusionMode::Absolute;
    for cmd in raw {
        match cmd.kind {
            CommandKind::M82 => mode = ExtrusionMode::Absolute,
            CommandKind::M83 => mode = ExtrusionMode::Relative,
            _ if is_first_extrusion(cmd) => break,
            _ => {}
        }
    }
    mode
}

/// Apply modal state to lexed commands.
pub fn resolve(raw: &[RawCommand], options: ParseOptions) -> Vec<MotionCommand> {
    let mut e_mode = match options.extrusion_mode {
        ExtrusionModeOption::Auto => ExtrusionMode::Absolute,
        ExtrusionModeOption::Absolute => ExtrusionMode::Absolute,
        ExtrusionModeOption::Relative => ExtrusionMode::Relative,
    };
    let follow_toggles = options.extrusion_mode == ExtrusionModeOption::Auto;
    let mut relative_xyz = false;
    let mut pos = Vertex::ORIGIN;
    let mut e_pos = 0.0;
    let mut feed = 0.0;
    let mut out = Vec::new();

    for cmd in raw {
        match cmd.kind {
            CommandKind::G90 => relative_xyz = false,
            CommandKind::G91 => relative_xyz = true,
            CommandKind::M82 if follow_toggles => e_mode = ExtrusionMode::Absolute,
            CommandKind::M83 if follow_toggles => e_mode = ExtrusionMode::Relative,
            CommandKind::G92 => {
                let a = &cmd.args;
                pos = Vertex::new(a.x.unwrap_or(pos.x), a.y.unwrap_or(pos.y), a.z.unwrap_or(pos.z));
                if let Some(e) = a.e {
                    e_pos = e;
                }
            }
            CommandKind::G0 | CommandKind::G1 => {
                let a = &cmd.args;
                let axis = |prev: f64, v: Option<f64>| match (relative_xyz, v) {
                    (false, v) => v.unwrap_or(prev),
                    (true, v) => prev + v.unwrap_or(0.0),
                };
                let target = Vertex::new(axis(pos.x, a.x), axis(pos.y, a.y), axis(pos.z, a.z));
                let extrusion_amount = match (e_mode, a.e) {
                    (_, None) => 0.0,
                    (ExtrusionMode::Absolute, Some(e)) => {
                        let delta = e - e_pos;
                        e_pos = e;
                        delta
                    }
                    (ExtrusionMode::Relative, Some(e)) => {
                        e_pos += e;
                        e
                    }
                };
                if let Some(f) = a.f {
                    feed = f;
                }
                let extruding = cmd.kind == CommandKind::G1
                    && extrusion_amount > 0.0
                    && pos.xy_distance(&target) > 0.0;
                out.push(MotionCommand {
                    extruding,
                    target,
                    extrusion_amount,
                    feed_rate: feed,
                    line_no: cmd.line_no,
                });
                pos = target;
            }
            _ => {}
        }
    }
    out
}
