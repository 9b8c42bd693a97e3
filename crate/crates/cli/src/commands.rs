use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use edpcgrl_core::session::{
    analyze_sessions, run_search, run_sessions_detailed, BlockStats, SessionProtocol, SessionReport,
};
use edpcgrl_core::signals::{
    eda_decompose, eda_preprocess, hrv_features, ppg_preprocess, ppg_windows, scl_normalize,
    scr_features, DecompositionMethod, EDA_LOWPASS_HZ, PPG_WINDOW_S,
};
use edpcgrl_core::state_space::{ATTRIBUTE_COLUMNS, NUM_ATTRIBUTES};
use edpcgrl_core::stats::{distinct_count, elbow_select, kmeans_best, Point};
use edpcgrl_core::subjects::{sample_population, VirtualSubject};
use serde::Serialize;

use crate::config::{seed_override, RunConfig};
use crate::io::{csv_bytes, read_signal_csv, read_trace, trace_bytes, OutputSet};
use crate::{Method, SimulationKind, UsageError};

/// Finite values as shortest round-trip decimals (scientific below 1e-4);
/// NaN and infinities empty.
fn num(v: f64) -> String {
    if !v.is_finite() {
        String::new()
    } else if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    seed: u64,
    config_sha256: String,
    files: Vec<ManifestFile>,
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

fn population_bytes(population: &[VirtualSubject]) -> Result<Vec<u8>> {
    let mut header = vec!["subject".to_string()];
    header.extend(ATTRIBUTE_COLUMNS.iter().map(|c| format!("w_{c}")));
    header.extend(["noise_sigma".to_string(), "seed".to_string()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_bytes(
        &header_refs,
        population.iter().map(|s| {
            let mut r = vec![s.id.to_string()];
            r.extend(s.weights.iter().map(|w| num(*w)));
            r.push(num(s.noise_sigma));
            r.push(s.seed.to_string());
            r
        }),
        None,
    )
}

pub fn simulate(
    kind: SimulationKind,
    config_path: &Path,
    out: Option<&Path>,
    export_qtables: bool,
) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());
    let population = sample_population(&cfg.population)?;
    let mut files = OutputSet::default();
    files.add("population.csv", population_bytes(&population)?);
    let command = match kind {
        SimulationKind::Search => {
            let results = run_search(&cfg.search, &population)?;
            files.add(
                "search_results.csv",
                csv_bytes(
                    &[
                        "agent",
                        "category",
                        "initial_state",
                        "spiders_presented",
                        "accuracy",
                        "reported",
                    ],
                    results.iter().map(|r| {
                        vec![
                            r.agent.label().to_string(),
                            r.category.clone(),
                            r.initial_state.to_string(),
                            opt_num(r.spiders_presented),
                            num(r.accuracy),
                            r.reported.to_string(),
                        ]
                    }),
                    None,
                )?,
            );
            "simulate search"
        }
        SimulationKind::Session | SimulationKind::Reversed => {
            let protocol = SessionProtocol {
                reversed_targets: kind == SimulationKind::Reversed,
                ..cfg.protocol.clone()
            };
            for run in run_sessions_detailed(&protocol, &population, cfg.seed)? {
                let id = run.trace.subject_id;
                files.add(
                    format!("traces/trace_subject_{id:03}.csv"),
                    trace_bytes(&run.trace)?,
                );
                if export_qtables {
                    files.add(
                        format!("qtables/qtable_subject_{id:03}.csv"),
                        csv_bytes(
                            &["state_index", "action_slot", "q_value"],
                            run.q_table
                                .snapshot()
                                .into_iter()
                                .map(|(s, a, q)| vec![s.to_string(), a.to_string(), opt_num(q)]),
                            None,
                        )?,
                    );
                }
            }
            if kind == SimulationKind::Reversed {
                "simulate reversed"
            } else {
                "simulate session"
            }
        }
    };
    let manifest = Manifest {
        command: command.to_string(),
        seed: cfg.seed,
        config_sha256: cfg.config_sha256.clone(),
        files: files
            .hashes()
            .into_iter()
            .map(|(path, sha256)| ManifestFile { path, sha256 })
            .collect(),
    };
    files.add("manifest.toml", toml::to_string(&manifest)?.into_bytes());
    let written = files.write(&dir)?;
    eprintln!(
        "{command}: wrote {} files to {}",
        written.len(),
        dir.display()
    );
    Ok(())
}

fn emit(out: Option<&Path>, bytes: Vec<u8>) -> Result<()> {
    match out {
        Some(path) => {
            let mut files = OutputSet::default();
            files.add(path.to_path_buf(), bytes);
            files.write(Path::new(""))?;
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(())
}

fn parse_window(spec: &str) -> Result<(f64, f64)> {
    let bad = || {
        anyhow::Error::from(UsageError(format!(
            "--relax-window `{spec}` must be `start:end` seconds"
        )))
    };
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

pub struct EdaArgs {
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub relax_window: Option<String>,
    pub method: Method,
    pub median_window_s: f64,
    pub min_amplitude: f64,
    pub assumed_max: f64,
    pub segment_s: f64,
    pub series_out: Option<PathBuf>,
}

pub fn process_eda(args: &EdaArgs) -> Result<()> {
    let window = args
        .relax_window
        .as_deref()
        .ok_or_else(|| UsageError("process eda requires --relax-window start:end".into()))?;
    let (relax_from, relax_to) = parse_window(window)?;
    if args.segment_s.is_nan() || args.segment_s < 1.0 {
        return Err(
            UsageError(format!("--segment-s {} must be at least 1", args.segment_s)).into(),
        );
    }
    let raw = read_signal_csv(&args.input)?;
    let conditioned = eda_preprocess(&raw)?;
    let method = match args.method {
        Method::Median => DecompositionMethod::Median,
        Method::Highpass => DecompositionMethod::HighPass,
    };
    let d = eda_decompose(&conditioned, method, args.median_window_s)?;
    let relax = d
        .scl
        .slice_time(relax_from, relax_to)
        .context("relax window lies outside the recording")?;
    let relax_min = relax.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = scl_normalize(&d.scl, relax_min, args.assumed_max)?;

    let seg_len = args.segment_s.round() as usize;
    let segments = conditioned.len() / seg_len;
    if segments == 0 {
        bail!(
            "recording of {} s is shorter than one {} s segment",
            conditioned.len(),
            args.segment_s
        );
    }
    let comment = format!(
        "process eda method={} median_window_s={} lowpass_hz={EDA_LOWPASS_HZ} min_amplitude_us={} relax_window={relax_from}:{relax_to} relax_min_us={} assumed_max_us={} segment_s={} input_rate_hz={}",
        match args.method {
            Method::Median => "median",
            Method::Highpass => "highpass",
        },
        args.median_window_s,
        args.min_amplitude,
        num(relax_min),
        args.assumed_max,
        seg_len,
        num(raw.sample_rate_hz),
    );
    let rows = (0..segments).map(|k| {
        let range = k * seg_len..(k + 1) * seg_len;
        let scr = d.scr.with_range(range.clone());
        let f = scr_features(&scr, args.min_amplitude);
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        vec![
            k.to_string(),
            num(conditioned.time_of(range.start)),
            num(conditioned.time_of(range.end)),
            num(mean(&d.scl.samples[range.clone()])),
            num(mean(&norm.samples[range.clone()])),
            f.n_peaks.to_string(),
            num(f.mean_amplitude),
            num(f.max_amplitude),
            num(f.sum_amplitude),
        ]
    });
    let bytes = csv_bytes(
        &[
            "segment",
            "start_s",
            "end_s",
            "scl_mean_us",
            "scl_norm_mean",
            "n_peaks",
            "mean_amplitude_us",
            "max_amplitude_us",
            "sum_amplitude_us",
        ],
        rows.collect::<Vec<_>>(),
        Some(&comment),
    )?;
    if let Some(series_path) = &args.series_out {
        let series = csv_bytes(
            &["t_s", "eda_us", "scl_us", "scr_us", "scl_norm"],
            (0..conditioned.len()).map(|i| {
                vec![
                    num(conditioned.time_of(i)),
                    num(conditioned.samples[i]),
                    num(d.scl.samples[i]),
                    num(d.scr.samples[i]),
                    num(norm.samples[i]),
                ]
            }),
            Some(&comment),
        )?;
        emit(Some(series_path), series)?;
    }
    emit(args.out.as_deref(), bytes)
}

pub fn process_ppg(input: &Path, out: Option<&Path>) -> Result<()> {
    let raw = read_signal_csv(input)?;
    let filtered = ppg_preprocess(&raw)?;
    let comment = format!(
        "process ppg band_hz=0.5-8 order=4 zero_phase=true window_s={PPG_WINDOW_S} input_rate_hz={}",
        num(raw.sample_rate_hz)
    );
    let rows: Vec<Vec<String>> = ppg_windows(&filtered)
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut row = vec![
                i.to_string(),
                num(w.start_time_s),
                num(w.start_time_s + w.duration_s()),
            ];
            match hrv_features(w) {
                Ok(f) => row.extend([
                    f.n_beats.to_string(),
                    num(f.mean_nn_ms),
                    num(f.sdnn_ms),
                    num(f.rmssd_ms),
                    num(f.pnn20),
                    num(f.pnn50),
                    num(f.lf_power),
                    num(f.hf_power),
                    num(f.lf_hf_ratio),
                    num(f.ln_hf),
                ]),
                Err(_) => row.extend(std::iter::repeat_n(String::new(), 10)),
            }
            row
        })
        .collect();
    let bytes = csv_bytes(
        &[
            "window",
            "start_s",
            "end_s",
            "n_beats",
            "mean_nn_ms",
            "sdnn_ms",
            "rmssd_ms",
            "pnn20",
            "pnn50",
            "lf_power_ms2",
            "hf_power_ms2",
            "lf_hf_ratio",
            "ln_hf",
        ],
        rows,
        Some(&comment),
    )?;
    emit(out, bytes)
}

fn block_fields(b: &BlockStats) -> Vec<String> {
    vec![
        num(b.low.mean_anxiety),
        num(b.high.mean_anxiety),
        num(b.low.mse),
        num(b.high.mse),
        opt_num(b.wilcoxon.map(|w| w.statistic)),
        opt_num(b.wilcoxon.map(|w| w.p_value)),
        opt_num(b.wilcoxon.map(|w| w.effect_r)),
    ]
}

fn report_bytes(report: &SessionReport) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut header = vec!["subject".to_string(), "order".to_string()];
    for agent in ["rl", "rules"] {
        for col in [
            "low_mean",
            "high_mean",
            "low_mse",
            "high_mse",
            "wilcoxon_w",
            "wilcoxon_p",
            "effect_r",
        ] {
            header.push(format!("{agent}_{col}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let per_subject = csv_bytes(
        &header_refs,
        report.subjects.iter().map(|s| {
            let mut r = vec![
                s.subject_id.to_string(),
                match s.order {
                    edpcgrl_core::session::AgentOrder::RlFirst => "rl_first".to_string(),
                    edpcgrl_core::session::AgentOrder::RulesFirst => "rules_first".to_string(),
                },
            ];
            r.extend(block_fields(&s.rl));
            r.extend(block_fields(&s.rules));
            r
        }),
        None,
    )?;
    let n = report.subjects.len().to_string();
    let mut rows = vec![{
        let w = report.rl_direction;
        vec![
            "rl_high_vs_low_wilcoxon".to_string(),
            n.clone(),
            opt_num(w.map(|w| w.statistic)),
            String::new(),
            opt_num(w.map(|w| w.p_value)),
            opt_num(w.map(|w| w.effect_r)),
            String::new(),
        ]
    }];
    for (name, t) in [
        ("mse_low_rules_minus_rl_ttest", report.mse_low),
        ("mse_high_rules_minus_rl_ttest", report.mse_high),
    ] {
        rows.push(vec![
            name.to_string(),
            n.clone(),
            opt_num(t.map(|t| t.t)),
            opt_num(t.map(|t| t.df)),
            opt_num(t.map(|t| t.p_value)),
            String::new(),
            opt_num(t.map(|t| t.mean_difference)),
        ]);
    }
    let tests = csv_bytes(
        &[
            "test",
            "n",
            "statistic",
            "df",
            "p_value",
            "effect_r",
            "mean_difference",
        ],
        rows,
        Some("one-sided alternatives: RL high > low; rules MSE > RL MSE"),
    )?;
    Ok((per_subject, tests))
}

pub fn analyze_session(traces_dir: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let protocol = match config {
        Some(p) => RunConfig::load(p)?.protocol,
        None => SessionProtocol::default(),
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(traces_dir)
        .with_context(|| format!("cannot list {}", traces_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no trace CSVs in {}", traces_dir.display());
    }
    let traces = paths
        .iter()
        .enumerate()
        .map(|(i, p)| read_trace(p, i))
        .collect::<Result<Vec<_>>>()?;
    let report = analyze_sessions(&traces, &protocol)?;
    let (per_subject, tests) = report_bytes(&report)?;
    let mut files = OutputSet::default();
    files.add("session_report.csv", per_subject);
    files.add("session_tests.csv", tests);
    files.write(out)?;
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = ATTRIBUTE_COLUMNS
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == *c)
                .ok_or_else(|| anyhow!("schema error: {} lacks column `{c}`", path.display()))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.with_context(|| format!("line {line}"))?;
        let mut p = [0.0; NUM_ATTRIBUTES];
        for (k, &col) in idx.iter().enumerate() {
            let field = rec.get(col).unwrap_or("").trim();
            p[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| anyhow!("line {line}: `{field}` is not a number"))?;
        }
        points.push(p);
    }
    if points.is_empty() {
        bail!("schema error: {} has no data rows", path.display());
    }
    Ok(points)
}

pub fn cluster_spiders(
    input: &Path,
    k: &str,
    k_max: usize,
    restarts: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let seed = seed_override()?.unwrap_or(seed);
    let points = read_points(input)?;
    let mut files = OutputSet::default();
    let (k, selection) = if k == "auto" {
        let upper = k_max.min(distinct_count(&points));
        if upper < 3 {
            bail!("--k auto needs at least 3 distinct spiders and --k-max >= 3");
        }
        let elbow = elbow_select(&points, 1, upper, restarts, seed)?;
        files.add(
            "elbow.csv",
            csv_bytes(
                &["k", "wcss"],
                elbow.wcss.iter().map(|(k, w)| vec![k.to_string(), num(*w)]),
                None,
            )?,
        );
        (elbow.chosen_k, "elbow")
    } else {
        let k: usize =
            k.parse().ok().filter(|k| *k >= 1).ok_or_else(|| {
                UsageError(format!("--k `{k}` must be `auto` or a positive integer"))
            })?;
        (k, "fixed")
    };
    let model = kmeans_best(&points, k, restarts, seed)?;
    let counts = model.member_counts();
    let mut header = vec!["cluster"];
    header.extend(ATTRIBUTE_COLUMNS);
    header.push("members");
    files.add(
        "centers.csv",
        csv_bytes(
            &header,
            model
                .discretized_centers()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mut r = vec![i.to_string()];
                    r.extend(c.values().iter().map(|v| v.to_string()));
                    r.push(counts[i].to_string());
                    r
                }),
            Some(&format!(
                "k={k} selection={selection} restarts={restarts} seed={seed} wcss={}",
                num(model.wcss)
            )),
        )?,
    );
    files.add(
        "assignments.csv",
        csv_bytes(
            &["row", "cluster"],
            model
                .assignments
                .iter()
                .enumerate()
                .map(|(i, a)| vec![i.to_string(), a.to_string()]),
            None,
        )?,
    );
    files.write(out)?;
    eprintln!("cluster spiders: k={k} ({selection})");
    Ok(())
}
