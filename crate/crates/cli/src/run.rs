//! Command execution: input loading, per-mode evaluation, and repetition
//! handling.

use std::fs;
use std::path::{Path, PathBuf};

use cswap_core::analysis::{self, PowerTraceVector, SearchMode};
use cswap_core::channels::{self, KrausChannel};
use cswap_core::io::{
    channel_from_value, density_from_value, density_to_value, estimate_to_value,
    matrix_from_value, matrix_to_value, network_from_value,
};
use cswap_core::networks::{self, NetworkSpec};
use cswap_core::qmath::{ComplexMatrix, DensityOperator, C_I, C_ONE, C_ZERO};
use cswap_core::sampling::{derive_seed, estimate_visibility, EstimateResult, ShotPlan};
use cswap_core::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::output::{self, CsvBody, InputRecord};
use crate::{Cli, Command, Format, Method, Mode, SpectrumVia, Via};

/// Exact-mode searches draw their starting vectors from this fixed seed so
/// exact outputs are functions of the input files alone, never of --seed.
const SEARCH_SEED: u64 = 1_618_033_988;

struct Ctx {
    mode: Mode,
    shots: u64,
    seed: u64,
    confidence: f64,
    reps: u64,
    jobs: usize,
    out: Option<PathBuf>,
    format: Format,
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        mode: cli.mode,
        shots: cli.shots,
        seed: cli.seed,
        confidence: cli.confidence,
        reps: cli.reps,
        jobs: cli.jobs,
        out: cli.out,
        format: cli.format,
    };
    if ctx.reps < 1 {
        return Err(Error::ParamRange {
            name: "reps",
            value: ctx.reps as f64,
            range: "reps >= 1",
        });
    }
    if ctx.jobs < 1 {
        return Err(Error::ParamRange {
            name: "jobs",
            value: ctx.jobs as f64,
            range: "jobs >= 1",
        });
    }
    match cli.command {
        Command::Overlap { inputs, via } => overlap(&ctx, &inputs, via),
        Command::Purity { input, via } => purity(&ctx, &input, via),
        Command::Spectrum { input, via } => spectrum(&ctx, &input, via),
        Command::Eigmax {
            input,
            inits,
            tol,
            max_iter,
        } => eigsearch(&ctx, &input, SearchMode::Max, "eigmax", inits, tol, max_iter),
        Command::Eigmin {
            input,
            inits,
            tol,
            max_iter,
        } => eigsearch(&ctx, &input, SearchMode::Min, "eigmin", inits, tol, max_iter),
        Command::Expect {
            observable,
            input,
            delta,
        } => expect(&ctx, &observable, &input, delta),
        Command::Tomo { input, psd_tol } => tomo(&ctx, &input, psd_tol),
        Command::Choi {
            channel,
            input,
            dim,
        } => choi(&ctx, channel.as_deref(), input.as_deref(), dim),
        Command::Capacity {
            channel,
            input,
            dim,
            method,
            inits,
            tol,
            max_iter,
        } => capacity(
            &ctx,
            channel.as_deref(),
            input.as_deref(),
            dim,
            method,
            inits,
            tol,
            max_iter,
        ),
        Command::Interfere {
            unitary,
            input,
            phi,
            basis_scan,
        } => interfere(&ctx, unitary.as_deref(), &input, phi, basis_scan),
    }
}

fn mode_str(mode: Mode) -> &'static str {
    match mode {
        Mode::Exact => "exact",
        Mode::Sampled => "sampled",
    }
}

fn via_str(via: Via) -> &'static str {
    match via {
        Via::Analytic => "analytic",
        Via::Circuit => "circuit",
    }
}

fn load_value(path: &Path, records: &mut Vec<InputRecord>) -> Result<Value> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    records.push(InputRecord::file(path, &bytes));
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load_density(path: &Path, records: &mut Vec<InputRecord>) -> Result<DensityOperator> {
    let v = load_value(path, records)?;
    density_from_value(&v, &path.display().to_string())
}

fn load_matrix(path: &Path, records: &mut Vec<InputRecord>) -> Result<ComplexMatrix> {
    let v = load_value(path, records)?;
    matrix_from_value(&v, &path.display().to_string())
}

/// Reads a network file: either a full network object (with target
/// dimension, unitary, and description) or a bare matrix, which is wrapped
/// with the file stem as its description.
fn load_network(path: &Path, records: &mut Vec<InputRecord>) -> Result<NetworkSpec> {
    let v = load_value(path, records)?;
    let context = path.display().to_string();
    if v.get("unitary").is_some() {
        network_from_value(&v, &context)
    } else {
        let m = matrix_from_value(&v, &context)?;
        let d = m.rows();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "network".into());
        NetworkSpec::new(d, m, name)
    }
}

fn sampled_params(ctx: &Ctx, params: &mut Map<String, Value>) {
    params.insert("shots".into(), Value::from(ctx.shots));
    params.insert("seed".into(), Value::from(ctx.seed));
    params.insert("confidence".into(), Value::from(ctx.confidence));
    params.insert("reps".into(), Value::from(ctx.reps));
}

/// Runs the per-rep closure once per repetition with the rep's derived
/// seed, in parallel when --jobs exceeds one. Payload order always follows
/// rep index. A single rep stays unwrapped; more become {"reps": [...]}.
fn run_reps<F>(ctx: &Ctx, f: F) -> Result<(Value, Vec<EstimateResult>)>
where
    F: Fn(u64) -> Result<(Value, Option<EstimateResult>)> + Sync,
{
    let seeds: Vec<u64> = (0..ctx.reps).map(|i| derive_seed(ctx.seed, i)).collect();
    let outcomes: Vec<(Value, Option<EstimateResult>)> = if ctx.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.jobs)
            .build()
            .map_err(|e| Error::Parse {
                context: "--jobs".into(),
                message: e.to_string(),
            })?;
        pool.install(|| seeds.par_iter().map(|&s| f(s)).collect::<Result<Vec<_>>>())?
    } else {
        seeds.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?
    };
    let ests: Vec<EstimateResult> = outcomes.iter().filter_map(|(_, e)| e.clone()).collect();
    let payloads: Vec<Value> = outcomes.into_iter().map(|(v, _)| v).collect();
    let result = if payloads.len() == 1 {
        payloads.into_iter().next().expect("one payload")
    } else {
        json!({ "reps": payloads })
    };
    Ok((result, ests))
}

fn finish(
    ctx: &Ctx,
    command: &str,
    records: &[InputRecord],
    params: Map<String, Value>,
    result: Value,
    ests: Vec<EstimateResult>,
) -> Result<()> {
    let doc = output::document(command, mode_str(ctx.mode), records, params, result);
    let csv = match ctx.format {
        Format::Json => None,
        Format::Csv if ests.is_empty() => Some(CsvBody::Flatten),
        Format::Csv => Some(CsvBody::Estimates(ests)),
    };
    output::emit(&doc, csv.as_ref(), ctx.out.as_deref())
}

fn overlap(ctx: &Ctx, inputs: &[PathBuf], via: Via) -> Result<()> {
    if inputs.len() != 2 {
        return Err(Error::Parse {
            context: "--in".into(),
            message: format!("overlap needs exactly two state files, got {}", inputs.len()),
        });
    }
    let mut records = Vec::new();
    let a = load_density(&inputs[0], &mut records)?;
    let b = load_density(&inputs[1], &mut records)?;
    let mut params = Map::new();
    params.insert("via".into(), Value::from(via_str(via)));
    match ctx.mode {
        Mode::Exact => {
            let value = match via {
                Via::Analytic => networks::overlap(&a, &b)?,
                Via::Circuit => networks::overlap_via_circuit(&a, &b)?,
            };
            finish(ctx, "overlap", &records, params, json!({ "value": value }), vec![])
        }
        Mode::Sampled => {
            sampled_params(ctx, &mut params);
            let spec = NetworkSpec::swap(a.dim())?;
            let joint = DensityOperator::tensor(&a, &b)?;
            let (result, ests) = run_reps(ctx, |seed| {
                let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                let est = estimate_visibility(&spec, &joint, 0.0, &plan)?;
                Ok((estimate_to_value(&est), Some(est)))
            })?;
            finish(ctx, "overlap", &records, params, result, ests)
        }
    }
}

fn purity(ctx: &Ctx, input: &Path, via: Via) -> Result<()> {
    let mut records = Vec::new();
    let rho = load_density(input, &mut records)?;
    let mut params = Map::new();
    params.insert("via".into(), Value::from(via_str(via)));
    match ctx.mode {
        Mode::Exact => {
            let value = match via {
                Via::Analytic => networks::power_trace(&rho, 2)?,
                Via::Circuit => networks::power_trace_via_circuit(&rho, 2)?,
            };
            finish(ctx, "purity", &records, params, json!({ "value": value }), vec![])
        }
        Mode::Sampled => {
            sampled_params(ctx, &mut params);
            let spec = NetworkSpec::swap(rho.dim())?;
            let joint = DensityOperator::tensor(&rho, &rho)?;
            let (result, ests) = run_reps(ctx, |seed| {
                let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                let est = estimate_visibility(&spec, &joint, 0.0, &plan)?;
                Ok((estimate_to_value(&est), Some(est)))
            })?;
            finish(ctx, "purity", &records, params, result, ests)
        }
    }
}

fn spectrum_payload(pt: &PowerTraceVector) -> Result<Value> {
    let eigs = analysis::spectrum_from_power_traces(pt)?;
    Ok(json!({ "power_traces": pt.values(), "eigenvalues": eigs }))
}

fn spectrum(ctx: &Ctx, input: &Path, via: SpectrumVia) -> Result<()> {
    let mut records = Vec::new();
    let rho = load_density(input, &mut records)?;
    let mut params = Map::new();
    params.insert(
        "via".into(),
        Value::from(match via {
            SpectrumVia::Matpow => "matpow",
            SpectrumVia::Circuit => "circuit",
        }),
    );
    match ctx.mode {
        Mode::Exact => {
            let pt = match via {
                SpectrumVia::Matpow => PowerTraceVector::exact(&rho)?,
                SpectrumVia::Circuit => {
                    let d = rho.dim();
                    let mut values = Vec::with_capacity(d);
                    values.push(1.0);
                    for k in 2..=d {
                        values.push(networks::power_trace_via_circuit(&rho, k)?);
                    }
                    PowerTraceVector::new(values, 1e-9)?
                }
            };
            finish(ctx, "spectrum", &records, params, spectrum_payload(&pt)?, vec![])
        }
        Mode::Sampled => {
            sampled_params(ctx, &mut params);
            let (result, _) = run_reps(ctx, |seed| {
                let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                let pt = PowerTraceVector::sampled(&rho, &plan)?;
                Ok((spectrum_payload(&pt)?, None))
            })?;
            finish(ctx, "spectrum", &records, params, result, vec![])
        }
    }
}

fn eigsearch(
    ctx: &Ctx,
    input: &Path,
    mode: SearchMode,
    name: &str,
    inits: usize,
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let mut records = Vec::new();
    let rho = load_density(input, &mut records)?;
    let mut params = Map::new();
    params.insert("inits".into(), Value::from(inits));
    params.insert("tol".into(), Value::from(tol));
    params.insert("max_iter".into(), Value::from(max_iter));
    let runs = analysis::extremal_search_multistart(&rho, mode, inits, SEARCH_SEED, tol, max_iter)?;
    let best = &runs[0];
    match ctx.mode {
        Mode::Exact => {
            let basins: Vec<Value> = runs
                .iter()
                .map(|r| {
                    json!({
                        "eigenvalue": r.eigenvalue,
                        "iterations": r.iterations,
                        "converged": r.converged,
                    })
                })
                .collect();
            let result = json!({
                "eigenvalue": best.eigenvalue,
                "iterations": best.iterations,
                "converged": best.converged,
                "trajectory": best.trajectory,
                "basins": basins,
            });
            finish(ctx, name, &records, params, result, vec![])
        }
        Mode::Sampled => {
            sampled_params(ctx, &mut params);
            let spec = NetworkSpec::swap(rho.dim())?;
            let probe = best.state.projector();
            let joint = DensityOperator::tensor(&probe, &rho)?;
            let iterations = best.iterations;
            let converged = best.converged;
            let (result, _) = run_reps(ctx, |seed| {
                let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                let est = estimate_visibility(&spec, &joint, 0.0, &plan)?;
                Ok((
                    json!({
                        "eigenvalue_estimate": estimate_to_value(&est),
                        "iterations": iterations,
                        "converged": converged,
                    }),
                    None,
                ))
            })?;
            finish(ctx, name, &records, params, result, vec![])
        }
    }
}

fn expect(ctx: &Ctx, observable: &Path, input: &Path, delta: Option<f64>) -> Result<()> {
    let mut records = Vec::new();
    let a = load_matrix(observable, &mut records)?;
    let rho = load_density(input, &mut records)?;
    let mut params = Map::new();
    match ctx.mode {
        Mode::Exact => {
            let eff_delta = delta.unwrap_or_else(|| analysis::default_embedding_offset(&a));
            params.insert("delta".into(), Value::from(eff_delta));
            let value = analysis::expectation_via_network_with_offset(&a, &rho, eff_delta)?;
            finish(ctx, "expect", &records, params, json!({ "value": value }), vec![])
        }
        Mode::Sampled => {
            params.insert(
                "delta".into(),
                Value::from(analysis::default_embedding_offset(&a)),
            );
            sampled_params(ctx, &mut params);
            let (result, ests) = run_reps(ctx, |seed| {
                let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                let est = analysis::expectation_sampled(&a, &rho, &plan)?;
                Ok((estimate_to_value(&est), Some(est)))
            })?;
            finish(ctx, "expect", &records, params, result, ests)
        }
    }
}

fn tomo_payload(rec: &analysis::Reconstruction) -> Value {
    json!({
        "raw": matrix_to_value(&rec.raw),
        "state": density_to_value(&rec.state),
        "psd_defect": rec.psd_defect,
        "warned": rec.warned,
    })
}

fn tomo(ctx: &Ctx, input: &Path, psd_tol: f64) -> Result<()> {
    let mut records = Vec::new();
    let rho = load_density(input, &mut records)?;
    let d = rho.dim();
    let mut params = Map::new();
    params.insert("psd_tol".into(), Value::from(psd_tol));
    match ctx.mode {
        Mode::Exact => {
            let rec = analysis::reconstruct_state(|psi| Ok(rho.expectation(psi)), d, psd_tol)?;
            finish(ctx, "tomo", &records, params, tomo_payload(&rec), vec![])
        }
        Mode::Sampled => {
            let probes = (d * d) as u64;
            let shots_per_probe = ctx.shots / probes;
            if shots_per_probe == 0 {
                return Err(Error::InvalidShotPlan {
                    reason: format!(
                        "{} shots split across {} probes leaves none per probe",
                        ctx.shots, probes
                    ),
                });
            }
            sampled_params(ctx, &mut params);
            let spec = NetworkSpec::swap(d)?;
            let (result, _) = run_reps(ctx, |rep_seed| {
                let mut counter = 0u64;
                let rec = analysis::reconstruct_state(
                    |psi| {
                        let plan = ShotPlan::new(
                            shots_per_probe,
                            derive_seed(rep_seed, counter),
                            ctx.confidence,
                        )?;
                        counter += 1;
                        let joint = DensityOperator::tensor(&psi.projector(), &rho)?;
                        estimate_visibility(&spec, &joint, 0.0, &plan).map(|e| e.point)
                    },
                    d,
                    psd_tol,
                )?;
                let mut payload = tomo_payload(&rec);
                payload["shots_per_probe"] = Value::from(shots_per_probe);
                Ok((payload, None))
            })?;
            finish(ctx, "tomo", &records, params, result, vec![])
        }
    }
}

/// Resolves the channel argument pair: a catalog descriptor instantiated at
/// --dim, or a Kraus file carrying its own dimension.
fn resolve_channel(
    channel: Option<&str>,
    input: Option<&Path>,
    dim: usize,
    records: &mut Vec<InputRecord>,
) -> Result<KrausChannel> {
    match (channel, input) {
        (Some(spec), None) => {
            records.push(InputRecord::catalog(spec));
            KrausChannel::from_catalog(spec, dim)
        }
        (None, Some(path)) => {
            let v = load_value(path, records)?;
            channel_from_value(&v, &path.display().to_string())
        }
        _ => Err(Error::Parse {
            context: "channel".into(),
            message: "provide exactly one of --channel or --in".into(),
        }),
    }
}

fn choi(ctx: &Ctx, channel: Option<&str>, input: Option<&Path>, dim: usize) -> Result<()> {
    if ctx.mode == Mode::Sampled {
        return Err(Error::Parse {
            context: "choi".into(),
            message: "the dual state is an exact construction; sampled mode does not apply".into(),
        });
    }
    let mut records = Vec::new();
    let ch = resolve_channel(channel, input, dim, &mut records)?;
    let choi = channels::choi_state(&ch)?;
    let mut params = Map::new();
    params.insert("dim".into(), Value::from(ch.dim()));
    params.insert("label".into(), Value::from(ch.label()));
    let result = json!({ "dim": choi.dim(), "state": density_to_value(choi.state()) });
    finish(ctx, "choi", &records, params, result, vec![])
}

#[allow(clippy::too_many_arguments)]
fn capacity(
    ctx: &Ctx,
    channel: Option<&str>,
    input: Option<&Path>,
    dim: usize,
    method: Method,
    inits: usize,
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let mut records = Vec::new();
    let ch = resolve_channel(channel, input, dim, &mut records)?;
    let choi = channels::choi_state(&ch)?;
    let mut params = Map::new();
    params.insert("dim".into(), Value::from(ch.dim()));
    params.insert("label".into(), Value::from(ch.label()));
    match ctx.mode {
        Mode::Exact => {
            let lam_method = match method {
                Method::Eigh => {
                    params.insert("method".into(), Value::from("eigh"));
                    analysis::LambdaMaxMethod::Eigh
                }
                Method::Search => {
                    params.insert("method".into(), Value::from("search"));
                    params.insert("inits".into(), Value::from(inits));
                    params.insert("tol".into(), Value::from(tol));
                    params.insert("max_iter".into(), Value::from(max_iter));
                    analysis::LambdaMaxMethod::Search {
                        inits,
                        seed: SEARCH_SEED,
                        tol,
                        max_iter,
                    }
                }
            };
            let verdict = channels::two_way_capacity_positive(&choi, lam_method)?;
            let result = json!({
                "lambda_max": verdict.lambda_max,
                "positive": verdict.positive,
            });
            finish(ctx, "capacity", &records, params, result, vec![])
        }
        Mode::Sampled => {
            if choi.dim() != 2 {
                return Err(Error::CriterionScope { dim: choi.dim() });
            }
            params.insert("method".into(), Value::from("search"));
            params.insert("inits".into(), Value::from(inits));
            params.insert("tol".into(), Value::from(tol));
            params.insert("max_iter".into(), Value::from(max_iter));
            sampled_params(ctx, &mut params);
            let runs = analysis::extremal_search_multistart(
                choi.state(),
                SearchMode::Max,
                inits,
                SEARCH_SEED,
                tol,
                max_iter,
            )?;
            let best = &runs[0];
            let spec = NetworkSpec::swap(choi.state().dim())?;
            let probe = best.state.projector();
            let joint = DensityOperator::tensor(&probe, choi.state())?;
            let (result, _) = run_reps(ctx, |seed| {
                let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                let est = estimate_visibility(&spec, &joint, 0.0, &plan)?;
                Ok((
                    json!({
                        "lambda_max_estimate": estimate_to_value(&est),
                        "positive": est.point > 0.5,
                    }),
                    None,
                ))
            })?;
            finish(ctx, "capacity", &records, params, result, vec![])
        }
    }
}

fn pauli_specs() -> Result<[(&'static str, NetworkSpec); 3]> {
    let sx = ComplexMatrix::new(2, 2, vec![C_ZERO, C_ONE, C_ONE, C_ZERO])?;
    let sy = ComplexMatrix::new(2, 2, vec![C_ZERO, -C_I, C_I, C_ZERO])?;
    let sz = ComplexMatrix::new(2, 2, vec![C_ONE, C_ZERO, C_ZERO, -C_ONE])?;
    Ok([
        ("x", NetworkSpec::new(2, sx, "pauli-x")?),
        ("y", NetworkSpec::new(2, sy, "pauli-y")?),
        ("z", NetworkSpec::new(2, sz, "pauli-z")?),
    ])
}

fn interfere(
    ctx: &Ctx,
    unitary: Option<&Path>,
    input: &Path,
    phi: f64,
    basis_scan: bool,
) -> Result<()> {
    let mut records = Vec::new();
    let spec = match (unitary, basis_scan) {
        (Some(p), false) => Some(load_network(p, &mut records)?),
        (None, true) => None,
        (Some(_), true) => {
            return Err(Error::Parse {
                context: "interfere".into(),
                message: "--basis-scan replaces --unitary; give one or the other".into(),
            })
        }
        (None, false) => {
            return Err(Error::Parse {
                context: "interfere".into(),
                message: "--unitary is required unless --basis-scan is set".into(),
            })
        }
    };
    let rho = load_density(input, &mut records)?;
    let mut params = Map::new();
    params.insert("phi".into(), Value::from(phi));
    params.insert("basis_scan".into(), Value::from(basis_scan));
    if basis_scan {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: rho.dim(),
            });
        }
        let paulis = pauli_specs()?;
        match ctx.mode {
            Mode::Exact => {
                let mut m = Map::new();
                for (axis, spec) in &paulis {
                    let f = networks::interference_factor(spec, &rho)?;
                    m.insert((*axis).into(), Value::from(f.value.re));
                }
                finish(ctx, "interfere", &records, params, Value::Object(m), vec![])
            }
            Mode::Sampled => {
                sampled_params(ctx, &mut params);
                let (result, _) = run_reps(ctx, |rep_seed| {
                    let mut m = Map::new();
                    for (idx, (axis, spec)) in paulis.iter().enumerate() {
                        let plan = ShotPlan::new(
                            ctx.shots,
                            derive_seed(rep_seed, idx as u64),
                            ctx.confidence,
                        )?;
                        let est = estimate_visibility(spec, &rho, 0.0, &plan)?;
                        m.insert((*axis).into(), estimate_to_value(&est));
                    }
                    Ok((Value::Object(m), None))
                })?;
                finish(ctx, "interfere", &records, params, result, vec![])
            }
        }
    } else {
        let spec = spec.expect("network present when not scanning");
        match ctx.mode {
            Mode::Exact => {
                let p0 = networks::run_interferometer(&spec, &rho, phi)?;
                let f = networks::interference_factor(&spec, &rho)?;
                let result = json!({
                    "p0": p0,
                    "visibility": f.visibility,
                    "phase": f.phase,
                });
                finish(ctx, "interfere", &records, params, result, vec![])
            }
            Mode::Sampled => {
                sampled_params(ctx, &mut params);
                let (result, ests) = run_reps(ctx, |seed| {
                    let plan = ShotPlan::new(ctx.shots, seed, ctx.confidence)?;
                    let est = estimate_visibility(&spec, &rho, phi, &plan)?;
                    Ok((estimate_to_value(&est), Some(est)))
                })?;
                finish(ctx, "interfere", &records, params, result, ests)
            }
        }
    }
}
