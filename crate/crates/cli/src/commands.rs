use gauss_subord::applications::{
    ir_clt_experiment, ir_statistic, locstat_clt_experiment, simulate_path, IrOptions, LocStatOptions, PathSpec,
    TAIL_ENERGY_TOLERANCE,
};
use gauss_subord::berry_esseen::{bound_report, distance_from_values, BEConfig, DistanceMode};
use gauss_subord::clt_harness::{mc_clt, sigma_limit, sigma_n_detailed, simulate_sums, FunctionFamily, SubordinatedSumSpec};
use gauss_subord::gaussian_model::check_conditions;
use gauss_subord::moment_bounds::{ratio_scan, BoundInstance};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Everything a command produces besides the JSON envelope.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub result: Value,
    /// `(file name, contents)` of CSV outputs.
    pub files: Vec<(String, String)>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Run(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Run(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::Bound => bound(cfg),
        Command::Clt => clt(cfg),
        Command::Be => be(cfg),
        Command::Ir => ir(cfg),
        Command::Locstat => locstat(cfg),
        Command::Conditions => conditions(cfg),
    }
}

fn bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.as_ref().unwrap();
    let functions = cfg.functions.as_ref().unwrap().iter().map(|f| f.build()).collect::<Result<Vec<_>, _>>()?;
    let inst = BoundInstance::new(model, functions, cfg.alpha.unwrap(), cfg.m.unwrap());
    let report = ratio_scan(&inst, cfg.n_list.as_ref().unwrap(), cfg.tolerances.trend_factor)?;
    let ratios: Vec<String> = report.rows.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    Ok(Outcome {
        checks: vec![check("no_upward_trend", report.bounded, format!("ratios [{}]", ratios.join(", ")))],
        files: vec![("bound.csv".into(), report.to_csv())],
        result: to_value(&report),
    })
}

fn clt(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.as_ref().unwrap();
    let f = cfg.function.as_ref().unwrap().build()?;
    let spec = SubordinatedSumSpec::new(model, FunctionFamily::fixed(f), cfg.m.unwrap())?;
    let n = cfg.n.unwrap();
    let lim = sigma_limit(&spec, cfg.tau_points.unwrap(), cfg.j_cut.unwrap(), 1e-8)?;
    let sn = sigma_n_detailed(&spec, n)?;
    let report = mc_clt(&spec, n, cfg.reps.unwrap(), cfg.seed.unwrap(), lim.value, Some(sn.value))?;
    let z = cfg.tolerances.z;
    let var_gap = (report.empirical_variance - sn.value).abs();
    let checks = vec![
        check(
            "variance",
            var_gap <= z * report.variance_se,
            format!(
                "empirical {:.5} vs sigma_n^2 {:.5} (se {:.5})",
                report.empirical_variance, sn.value, report.variance_se
            ),
        ),
        check(
            "normality",
            report.ks_pvalue >= cfg.tolerances.ks_pvalue_min,
            format!("KS {:.5}, p-value {:.4}", report.ks_distance, report.ks_pvalue),
        ),
    ];
    Ok(Outcome {
        checks,
        files: vec![("clt.csv".into(), report.to_csv()), ("clt_histogram.csv".into(), report.histogram_csv())],
        result: json!({ "sigma_limit": lim, "sigma_n": sn, "report": report }),
    })
}

#[derive(Serialize)]
struct DistanceRow {
    mode: DistanceMode,
    bound: f64,
    empirical: f64,
    se: f64,
    dominated: bool,
}

fn be(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.as_ref().unwrap();
    let f = cfg.function.as_ref().unwrap().build()?;
    let spec = SubordinatedSumSpec::new(model, FunctionFamily::fixed(f), cfg.m.unwrap())?;
    let n = cfg.n.unwrap();
    let be_cfg = BEConfig {
        n,
        n_max: cfg.n_max.unwrap(),
        lipschitz: cfg.lipschitz.unwrap(),
        sigma_lag_cut: cfg.j_cut.unwrap(),
        tau_points: cfg.tau_points.unwrap(),
        index_range: cfg.index_range.unwrap(),
    };
    let report = bound_report(&spec, &be_cfg)?;
    let mut files = vec![
        ("be_levels.csv".into(), csv_rows(&report.levels)?),
        ("be_lags.csv".into(), csv_rows(&report.lags)?),
    ];
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let reps = cfg.reps.unwrap();
    if reps > 0 {
        let values = simulate_sums(&spec, n, reps, cfg.seed.unwrap())?;
        let s2 = report.sigma_s * report.sigma_s;
        for (mode, b) in [
            (DistanceMode::Smooth, &report.smooth),
            (DistanceMode::Lipschitz, &report.lipschitz),
            (DistanceMode::Kolmogorov, &report.kolmogorov),
        ] {
            let (value, se) = distance_from_values(mode, &values, s2)?;
            let dominated = b.value >= value - cfg.tolerances.z * se;
            checks.push(check(
                &format!("{mode:?}").to_lowercase(),
                dominated,
                format!("bound {:.5} vs empirical {:.5} (se {:.5})", b.value, value, se),
            ));
            rows.push(DistanceRow {
                mode,
                bound: b.value,
                empirical: value,
                se,
                dominated,
            });
        }
        files.push(("be_distances.csv".into(), csv_rows(&rows)?));
    }
    Ok(Outcome {
        checks,
        files,
        result: json!({ "bounds": report, "distances": rows }),
    })
}

fn ir(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let path = PathSpec {
        hurst: cfg.hurst.clone().unwrap(),
        n: cfg.n.unwrap(),
    };
    let order = match cfg.function {
        Some(crate::config::FunctionSpec::IrPair { order, .. }) => order,
        _ => return Err(CliError::config("`ir` takes only an ir_pair function")),
    };
    let opts = IrOptions {
        expansion_order: order,
        j_cut: cfg.j_cut.unwrap(),
        with_sigma_limit: true,
    };
    let seed = cfg.seed.unwrap();
    let ex = ir_clt_experiment(&path, cfg.reps.unwrap(), seed, &opts)?;
    let first = ir_statistic(&simulate_path(&path, seed)?)?;
    let mut ratios = String::from("k,ratio\n");
    for (k, r) in first.ratios.iter().enumerate() {
        ratios.push_str(&format!("{k},{r}\n"));
    }
    let z = cfg.tolerances.z;
    let checks = vec![
        check(
            "mean",
            ex.standardized_deviation.abs() <= z,
            format!("mean R {:.6} vs target {:.6} ({:+.2} se)", ex.mean_r, ex.target, ex.standardized_deviation),
        ),
        check(
            "normality",
            ex.report.ks_fitted <= cfg.tolerances.ks_max,
            format!("KS to fitted normal {:.5}", ex.report.ks_fitted),
        ),
    ];
    Ok(Outcome {
        checks,
        files: vec![
            ("ir.csv".into(), ex.report.to_csv()),
            ("ir_histogram.csv".into(), ex.report.histogram_csv()),
            ("ir_ratios.csv".into(), ratios),
        ],
        result: to_value(&ex),
    })
}

fn locstat(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.locstat.as_ref().unwrap();
    let opts = LocStatOptions {
        tau_points: cfg.tau_points.unwrap(),
        tail_tolerance: TAIL_ENERGY_TOLERANCE,
    };
    let ex = locstat_clt_experiment(
        spec,
        cfg.window_function.unwrap(),
        cfg.m.unwrap(),
        cfg.n.unwrap(),
        cfg.reps.unwrap(),
        cfg.seed.unwrap(),
        &opts,
    )?;
    let checks = vec![
        check(
            "normality",
            ex.report.ks_distance <= cfg.tolerances.ks_max,
            format!("KS to N(0, {:.5}) is {:.5}", ex.sigma_limit.value, ex.report.ks_distance),
        ),
        check("spectral_floor", ex.g_min > 0.0, format!("min g_tau {:.5}", ex.g_min)),
    ];
    let mut gaps = String::from("tau,sigma_limit_integrand\n");
    for (t, v) in &ex.sigma_limit.integrand {
        gaps.push_str(&format!("{t},{v}\n"));
    }
    Ok(Outcome {
        checks,
        files: vec![
            ("locstat.csv".into(), ex.report.to_csv()),
            ("locstat_histogram.csv".into(), ex.report.histogram_csv()),
            ("locstat_integrand.csv".into(), gaps),
        ],
        result: to_value(&ex),
    })
}

fn conditions(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model.as_ref().unwrap();
    let report = check_conditions(model, cfg.m.unwrap() as u32, cfg.n_list.as_ref().unwrap(), cfg.k_list.as_ref().unwrap())?;
    let mut csv = String::from("n,s1,K,tail\n");
    for r in &report.rows {
        for (k, t) in &r.tails {
            csv.push_str(&format!("{},{},{},{}\n", r.n, r.s1, k, t));
        }
    }
    Ok(Outcome {
        checks: vec![
            check("s1_bounded", report.s1_bounded, "row sums of |r|^m over n".into()),
            check("tails_vanishing", report.tails_vanishing, "far-lag averages over n".into()),
        ],
        files: vec![("conditions.csv".into(), csv)],
        result: to_value(&report),
    })
}
