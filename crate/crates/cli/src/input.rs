//! JSON input files. Each file holds one artifact; named examples written by
//! `examples emit --out` are unwrapped to their payload.

use serde::Deserialize;
use serde_json::Value;

use losr_core::catalog::{chsh_witness, ExamplePayload, NamedExample};
use losr_core::choi::{ChannelSpec, ChoiOperator, ChoiOrdering, SystemLayout};
use losr_core::games::Game;
use losr_core::losr::LosrForm;
use losr_core::sep::SeparableCertificate;
use losr_core::ComplexMatrix;

use crate::report::CliError;

pub struct Loaded {
    pub value: Value,
    pub bytes: Vec<u8>,
    pub path: String,
}

pub fn read(path: &str) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("{path}: {e}")))?;
    let value: Value = serde_json::from_slice(&bytes).map_err(|e| CliError {
        code: 2,
        kind: "malformed-input",
        message: format!("{path}: {e}"),
    })?;
    let value = if value.get("payload").is_some() && value.get("name").is_some() {
        let ex: NamedExample = parse(value, path)?;
        match ex.payload {
            ExamplePayload::Channel(c) => serde_json::to_value(c)?,
            ExamplePayload::Game(g) => serde_json::to_value(g)?,
            ExamplePayload::Certificate(c) => serde_json::to_value(c)?,
        }
    } else {
        value
    };
    Ok(Loaded {
        value,
        bytes,
        path: path.to_string(),
    })
}

fn parse<T: for<'de> Deserialize<'de>>(v: Value, path: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError {
        code: 2,
        kind: "malformed-input",
        message: format!("{path}: {e}"),
    })
}

pub fn channel(l: &Loaded) -> Result<ChoiOperator, CliError> {
    let spec: ChannelSpec = parse(l.value.clone(), &l.path)?;
    Ok(spec.to_choi()?)
}

pub fn game(l: &Loaded) -> Result<Game, CliError> {
    let g: Game = parse(l.value.clone(), &l.path)?;
    g.validate()?;
    Ok(g)
}

pub fn certificate(l: &Loaded) -> Result<SeparableCertificate, CliError> {
    parse(l.value.clone(), &l.path)
}

pub fn losr_form(l: &Loaded) -> Result<LosrForm, CliError> {
    parse(l.value.clone(), &l.path)
}

#[derive(Deserialize)]
struct OperatorFile {
    layout: Option<SystemLayout>,
    ordering: Option<ChoiOrdering>,
    matrix: ComplexMatrix,
}

/// A Hermitian operator with its layout, converted to the global ordering.
/// Accepts `{"layout", "ordering", "matrix"}`, a bare matrix (layout from
/// `--layout`), or a channel file (its Choi matrix).
pub fn operator(
    l: &Loaded,
    layout_flag: Option<&SystemLayout>,
    ordering_flag: ChoiOrdering,
) -> Result<ChoiOperator, CliError> {
    let v = &l.value;
    if v.get("form").is_some() {
        return channel(l)?.to_ordering(ChoiOrdering::Global).map_err(Into::into);
    }
    let (layout, ordering, matrix) = if v.get("matrix").is_some() {
        let f: OperatorFile = parse(v.clone(), &l.path)?;
        (f.layout, f.ordering.unwrap_or(ordering_flag), f.matrix)
    } else {
        (None, ordering_flag, parse(v.clone(), &l.path)?)
    };
    let layout = layout
        .or_else(|| layout_flag.cloned())
        .ok_or_else(|| CliError::usage(format!("{}: no layout in file; pass --layout", l.path)))?;
    let op = ChoiOperator::new(matrix, layout, ordering)?;
    Ok(op.to_ordering(ChoiOrdering::Global)?)
}

/// Functional `H`: `builtin:chsh`, a bare matrix, or `{"H": matrix}`.
pub fn functional(arg: &str) -> Result<(ComplexMatrix, Vec<u8>), CliError> {
    if arg == "builtin:chsh" {
        return Ok((chsh_witness()?, arg.as_bytes().to_vec()));
    }
    let l = read(arg)?;
    let v = l.value.get("H").cloned().unwrap_or(l.value.clone());
    Ok((parse(v, arg)?, l.bytes))
}

#[derive(Deserialize)]
pub struct ValidityInstance {
    #[serde(rename = "R")]
    pub r: ComplexMatrix,
    pub layout: SystemLayout,
    pub gamma: f64,
    pub s: u64,
}

pub fn validity_instance(l: &Loaded) -> Result<ValidityInstance, CliError> {
    parse(l.value.clone(), &l.path)
}
