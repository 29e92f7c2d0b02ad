//! Serves a seeded random Bochner matrix over the oracle protocol.
//!
//! Usage: bmx-loopback-oracle --m M --n N --dim D --seed S
//!        [--gram PATH] [--fault wrong-length|error-entry|garbage-hello|bad-gram]

use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use bmx_core::oracle::{inner_wire_for, loopback_fixture, serve, InnerWire, ServerFault, GRAM_LAYOUT};

struct Args {
    m: usize,
    n: usize,
    dim: usize,
    seed: u64,
    gram: Option<PathBuf>,
    fault: Option<String>,
}

fn parse_args() -> Result<Args, String> {
    let mut args = Args {
        m: 4,
        n: 3,
        dim: 2,
        seed: 0,
        gram: None,
        fault: None,
    };
    let mut it = std::env::args().skip(1);
    while let Some(flag) = it.next() {
        let mut value = || it.next().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--m" => args.m = value()?.parse().map_err(|e| format!("--m: {e}"))?,
            "--n" => args.n = value()?.parse().map_err(|e| format!("--n: {e}"))?,
            "--dim" => args.dim = value()?.parse().map_err(|e| format!("--dim: {e}"))?,
            "--seed" => args.seed = value()?.parse().map_err(|e| format!("--seed: {e}"))?,
            "--gram" => args.gram = Some(PathBuf::from(value()?)),
            "--fault" => args.fault = Some(value()?),
            other => return Err(format!("unknown argument {other}")),
        }
    }
    Ok(args)
}

fn run() -> Result<(), String> {
    let args = parse_args()?;
    let a = loopback_fixture(args.m, args.n, args.dim, args.seed, args.gram.is_some())
        .map_err(|e| e.to_string())?;
    let mut fault = ServerFault::None;
    let mut inner = inner_wire_for(a.spec(), args.gram.as_deref()).map_err(|e| e.to_string())?;
    match args.fault.as_deref() {
        None => {}
        Some("wrong-length") => fault = ServerFault::WrongLength,
        Some("error-entry") => fault = ServerFault::ErrorOnEntry,
        Some("garbage-hello") => fault = ServerFault::GarbageHello,
        Some("bad-gram") => {
            let path = args.gram.as_ref().ok_or("bad-gram needs --gram")?;
            std::fs::write(path, [0u8; 12]).map_err(|e| e.to_string())?;
            inner = InnerWire::GramFile {
                path: path.to_string_lossy().into_owned(),
                layout: GRAM_LAYOUT.to_string(),
            };
        }
        Some(other) => return Err(format!("unknown fault {other}")),
    }
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    serve(&a, &inner, fault, stdin, stdout).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bmx-loopback-oracle: {e}");
            ExitCode::from(2)
        }
    }
}
