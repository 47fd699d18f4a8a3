use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{envelope_document, read_envelope, read_profile, CurveDocument, Summary};
use crate::svg::{Panel, Series};
use crate::{Sink, Units};
use serde_json::Value;
use sfslab_core::afc::{fid_time, sr_single_peak_time};
use sfslab_core::analysis::{
    cumulative_tail, decay_time, efficiency, fit_decay, sweep_theory, x_approx, FitMode, TRule, XRegime,
};
use sfslab_core::propagation::{default_grid, make_exp_reversed, phi0, propagate_convolution, propagate_exp_reversed};
use sfslab_core::slowlight::{
    build_pit, group_delay, kk_transfer, polarized_propagate_at, vg_analytic, MEASURED_DELAY, MEASURED_VG,
};
use sfslab_core::{
    AfcComb, ExpReversedSpec, FreqGrid, PitSpec, PulseEnvelope, ResonantMedium, SpectralProfile, TimeGrid,
};
use std::path::Path;

/// Constraints between keys that a per-key schema cannot express.
pub fn check_cross_keys(cfg: &RunConfig) -> CliResult<()> {
    match cfg.command {
        "simulate" => {
            let file = cfg.text("pulse_file").is_some();
            let dur = cfg.opt_real("pulse_t_s").is_some();
            if file == dur {
                return Err(CliError::key(
                    "pulse_t_s",
                    "set exactly one of `pulse_t_s` and `pulse_file`",
                ));
            }
            if file {
                if cfg.text("method") == Some("closed_form") {
                    return Err(CliError::key(
                        "method",
                        "`closed_form` needs the time-reversed exponential (`pulse_t_s`)",
                    ));
                }
                for k in ["dt_s", "t_start_s", "t_end_s"] {
                    if cfg.text(k).is_some() {
                        return Err(CliError::key(
                            k,
                            format!("`{k}` conflicts with `pulse_file`, whose grid is used as is"),
                        ));
                    }
                }
            }
            if let (Some(a), Some(b)) = (cfg.opt_real("t_start_s"), cfg.opt_real("t_end_s")) {
                if a >= b {
                    return Err(CliError::key("t_end_s", "`t_end_s` must exceed `t_start_s`"));
                }
            }
        }
        "sweep" => {
            sweep_values(
                cfg.real("alpha_l_start"),
                cfg.real("alpha_l_stop"),
                cfg.real("alpha_l_step"),
                "alpha_l",
            )?;
        }
        "afc" => {
            if cfg.text("sweep") != Some("none") {
                let keys = ["sweep_start", "sweep_stop", "sweep_step"];
                if let Some(k) = keys.iter().find(|k| cfg.text(k).is_none()) {
                    return Err(CliError::key(k, format!("`{k}` is required when `sweep` is set")));
                }
                sweep_values(
                    cfg.real("sweep_start"),
                    cfg.real("sweep_stop"),
                    cfg.real("sweep_step"),
                    "sweep",
                )?;
            }
        }
        "slowlight" => {
            if cfg.real("edge_softness_hz") > cfg.real("hole_fwhm_hz") {
                return Err(CliError::key(
                    "edge_softness_hz",
                    "`edge_softness_hz` must not exceed `hole_fwhm_hz`",
                ));
            }
            if cfg.real("freq_step_hz") >= cfg.real("freq_half_span_hz") {
                return Err(CliError::key(
                    "freq_step_hz",
                    "`freq_step_hz` must be smaller than `freq_half_span_hz`",
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

/// Inclusive arithmetic range; an empty range is a configuration error.
fn sweep_values(start: f64, stop: f64, step: f64, what: &str) -> CliResult<Vec<f64>> {
    if stop < start {
        return Err(CliError::key(
            &format!("{what}_stop"),
            format!("empty {what} sweep: stop {stop} < start {start}"),
        ));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 10_000 {
        return Err(CliError::key(
            &format!("{what}_step"),
            format!("{n} sweep points exceed the limit of 10000"),
        ));
    }
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

fn reject_t2_units(sink: &Sink, command: &str) -> CliResult<()> {
    if sink.units == Units::T2 {
        return Err(CliError::config(format!("--units t2 is not defined for {command}")));
    }
    Ok(())
}

fn times_us(grid: &TimeGrid) -> Vec<f64> {
    grid.times().map(|t| t * 1e6).collect()
}

pub fn simulate(cfg: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let medium = ResonantMedium::new(cfg.real("alpha_l"), cfg.real("t2_s"))?;
    let (input, spec) = match cfg.text("pulse_file") {
        Some(path) => (read_envelope(Path::new(path))?, None),
        None => {
            let spec = ExpReversedSpec::new(cfg.real("pulse_t_s"))?;
            let base = default_grid(&medium, &spec)?;
            let grid = TimeGrid::anchored(
                cfg.opt_real("t_start_s").unwrap_or(base.t_start()),
                cfg.opt_real("t_end_s").unwrap_or(base.t_end()),
                cfg.opt_real("dt_s").unwrap_or(base.dt()),
            )?;
            (make_exp_reversed(&spec, &grid)?, Some(spec))
        }
    };
    let grid = *input.grid();
    let output = match (cfg.text("method"), &spec) {
        (Some("closed_form"), Some(spec)) => propagate_exp_reversed(&medium, spec, &grid)?,
        _ => propagate_convolution(&medium, &input)?,
    };

    let e_in = input.energy();
    let eff = if (e_in - 1.0).abs() <= sfslab_core::analysis::UNIT_ENERGY_TOL && grid.t_end() > 0.0 {
        Some(efficiency(&output)?)
    } else {
        None
    };
    let warnings: Vec<Value> = output.meta.warnings.iter().map(|w| Value::from(w.as_str())).collect();
    let summary = Summary::new(cfg)
        .text("method", cfg.text("method").unwrap_or("convolution"))
        .num("alpha_l", medium.alpha_l())
        .num("t2_s", medium.t2())
        .num("b_per_s", medium.b())
        .num("t_r_s", medium.t_r())
        .opt_num("pulse_t_s", spec.map(|s| s.duration()))
        .opt_num("phi0", spec.map(|s| phi0(&medium, &s)))
        .num("dt_s", grid.dt())
        .value("samples", Value::from(grid.len()))
        .num("input_energy", e_in)
        .num("output_energy", output.energy())
        .opt_num("efficiency", eff)
        .value("warnings", Value::Array(warnings));
    sink.json("simulate_summary.json", &summary)?;

    let scale = (sink.units == Units::T2).then_some(medium.t2());
    sink.csv("simulate_input.csv", &envelope_document(&input, scale), cfg)?;
    sink.csv("simulate_output.csv", &envelope_document(&output, scale), cfg)?;

    let (ts, label): (Vec<f64>, &str) = match scale {
        Some(t2) => (grid.times().map(|t| t / t2).collect(), "t / T2"),
        None => (grid.times().collect(), "t (s)"),
    };
    let i_in: Vec<f64> = input.intensity().collect();
    let i_out: Vec<f64> = output.intensity().collect();
    sink.figure(
        "simulate.svg",
        &[Panel {
            title: format!("alpha L = {}", medium.alpha_l()),
            x_label: label.into(),
            y_label: "|F|^2".into(),
            series: vec![Series::new("input", &ts, &i_in), Series::new("output", &ts, &i_out)],
        }],
    )
}

pub fn fit(cfg: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let medium = ResonantMedium::new(cfg.real("alpha_l"), cfg.real("t2_s"))?;
    let spec = ExpReversedSpec::new(cfg.real("pulse_t_s"))?;
    let base = default_grid(&medium, &spec)?;
    let grid = match cfg.opt_real("dt_s") {
        Some(dt) => TimeGrid::anchored(base.t_start(), base.t_end(), dt)?,
        None => base,
    };
    let output = propagate_exp_reversed(&medium, &spec, &grid)?;
    let mode = match cfg.text("fit_mode") {
        Some("free") => FitMode::FreeFit,
        _ => FitMode::Phi0Pinned,
    };
    let fit = fit_decay(&output, &medium, &spec, mode)?;
    let approx = x_approx(medium.alpha_l(), XRegime::ExperimentFit)?;
    let t2 = medium.t2();

    let summary = Summary::new(cfg)
        .text("fit_mode", cfg.text("fit_mode").unwrap_or("pinned"))
        .num("t_dec_s", fit.t_dec)
        .num("t_dec_over_t2", fit.t_dec / t2)
        .num("i0", fit.i0_amp)
        .num("x", fit.x)
        .num("efficiency", fit.efficiency)
        .num("residual_rms", fit.residual)
        .num("x_linear_approx", approx.value)
        .flag("x_linear_approx_in_regime", approx.in_regime)
        .num("t_dec_x1_s", decay_time(&medium, 1.0));
    sink.json("fit_summary.json", &summary)?;

    let (t, c) = cumulative_tail(&output)?;
    let ts = if sink.units == Units::T2 { 1.0 / t2 } else { 1.0 };
    let unit = if sink.units == Units::T2 { "T2" } else { "s" };
    let mut doc = CurveDocument::new(&[("t", unit), ("cumulative_energy", "1"), ("model", "1")]);
    let model: Vec<f64> = t
        .iter()
        .map(|&tk| fit.efficiency * -(-tk / fit.t_dec).exp_m1())
        .collect();
    for ((tk, ck), mk) in t.iter().zip(&c).zip(&model) {
        doc.push(vec![tk * ts, *ck, *mk]);
    }
    sink.csv("fit_cumulative.csv", &doc, cfg)?;

    let tx: Vec<f64> = t.iter().map(|v| v * ts).collect();
    sink.figure(
        "fit.svg",
        &[Panel {
            title: format!("decay fit, alpha L = {}", medium.alpha_l()),
            x_label: format!("t ({unit})"),
            y_label: "cumulative energy".into(),
            series: vec![
                Series::new("propagated", &tx, &c),
                Series::new("exponential model", &tx, &model),
            ],
        }],
    )
}

pub fn sweep(cfg: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    let alphas = sweep_values(
        cfg.real("alpha_l_start"),
        cfg.real("alpha_l_stop"),
        cfg.real("alpha_l_step"),
        "alpha_l",
    )?;
    let t2 = cfg.real("t2_s");
    let rule = match cfg.opt_real("pulse_t_s") {
        Some(t) => TRule::Fixed(t),
        None => TRule::HalfT2,
    };
    let result = sweep_theory(&alphas, rule, t2)?;

    let si = sink.units == Units::Si;
    let mut cols = vec![("alpha_l", "1"), ("t_over_t2", "1"), ("t_dec_over_t2", "1")];
    if si {
        cols.push(("t_dec_s", "s"));
    }
    cols.extend([("x", "1"), ("x_linear_approx", "1"), ("efficiency", "1")]);
    let mut doc = CurveDocument::new(&cols);
    let mut worst_dev: f64 = 0.0;
    for r in &result.rows {
        let approx = 1.0 + 0.055 * r.alpha_l;
        worst_dev = worst_dev.max((r.x / approx - 1.0).abs());
        let mut row = vec![r.alpha_l, r.t_over_t2, r.t_dec_over_t2];
        if si {
            row.push(r.t_dec_over_t2 * t2);
        }
        row.extend([r.x, approx, r.efficiency]);
        doc.push(row);
    }
    sink.csv("sweep.csv", &doc, cfg)?;

    let eff: Vec<f64> = result.rows.iter().map(|r| r.efficiency).collect();
    let (best, best_alpha) = result
        .rows
        .iter()
        .map(|r| (r.efficiency, r.alpha_l))
        .fold((f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a });
    let summary = Summary::new(cfg)
        .value("points", Value::from(result.rows.len()))
        .num("max_efficiency", best)
        .num("max_efficiency_alpha_l", best_alpha)
        .num("max_relative_x_deviation", worst_dev);
    sink.json("sweep_summary.json", &summary)?;

    let a: Vec<f64> = result.rows.iter().map(|r| r.alpha_l).collect();
    let td: Vec<f64> = result.rows.iter().map(|r| r.t_dec_over_t2).collect();
    let x1: Vec<f64> = alphas.iter().map(|&al| 1.0 / (2.0 + al / 2.0)).collect();
    sink.figure(
        "sweep.svg",
        &[
            Panel {
                title: "decay time".into(),
                x_label: "alpha L".into(),
                y_label: "T_dec / T2".into(),
                series: vec![Series::new("propagated", &a, &td), Series::new("x = 1", &a, &x1)],
            },
            Panel {
                title: "forward-scattering efficiency".into(),
                x_label: "alpha L".into(),
                y_label: "efficiency".into(),
                series: vec![Series::new("propagated", &a, &eff)],
            },
        ],
    )
}

pub fn afc(cfg: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    reject_t2_units(sink, "afc")?;
    let delta = cfg.real("delta_hz");
    let comb = AfcComb::with_finesse(delta, cfg.real("finesse"), cfg.real("alpha_l"))?;
    let a = sr_single_peak_time(&comb);
    let summary = Summary::new(cfg)
        .num("finesse", comb.finesse())
        .num("gamma_peak_hz", comb.gamma_peak())
        .num("t_recall_s", comb.t_recall())
        .num("t_single_s", comb.t_single())
        .num("fid_time_s", fid_time(comb.gamma_peak())?)
        .num("t_single_sr_s", a.t_single_sr)
        .num("ratio_to_recall", a.ratio_to_recall)
        .flag("sr_loss_flagged", a.sr_loss_flagged)
        .flag("x_in_regime", a.x_in_regime);
    sink.json("afc_summary.json", &summary)?;

    let param = cfg.text("sweep").unwrap_or("none");
    if param == "none" {
        return Ok(());
    }
    let values = sweep_values(
        cfg.real("sweep_start"),
        cfg.real("sweep_stop"),
        cfg.real("sweep_step"),
        "sweep",
    )?;
    let mut doc = CurveDocument::new(&[
        (param, "1"),
        ("ratio_to_recall", "1"),
        ("t_single_sr_s", "s"),
        ("sr_loss_flagged", "bool"),
        ("x_in_regime", "bool"),
    ]);
    for &v in &values {
        let c = match param {
            "alpha_l" => AfcComb::with_finesse(delta, comb.finesse(), v)?,
            _ => AfcComb::with_finesse(delta, v, comb.alpha_l())?,
        };
        let r = sr_single_peak_time(&c);
        doc.push(vec![
            v,
            r.ratio_to_recall,
            r.t_single_sr,
            f64::from(u8::from(r.sr_loss_flagged)),
            f64::from(u8::from(r.x_in_regime)),
        ]);
    }
    sink.csv("afc_sweep.csv", &doc, cfg)?;
    let ratios = doc.column("ratio_to_recall").unwrap_or_default();
    sink.figure(
        "afc.svg",
        &[Panel {
            title: "single-peak superradiant decay".into(),
            x_label: param.replace('_', " "),
            y_label: "T_single,SR / T_recall".into(),
            series: vec![
                Series::new("ratio", &values, &ratios),
                Series::new("recall", &values, &vec![1.0; values.len()]),
            ],
        }],
    )
}

pub fn slowlight(cfg: &RunConfig, sink: &mut Sink) -> CliResult<()> {
    reject_t2_units(sink, "slowlight")?;
    let spec = PitSpec {
        background_alpha_l: cfg.real("background_alpha_l"),
        hole_fwhm: cfg.real("hole_fwhm_hz"),
        edge_softness: cfg.real("edge_softness_hz"),
        length_m: cfg.real("length_m"),
    };
    spec.validate()?;
    let profile = match cfg.text("profile_file") {
        Some(path) => {
            let (nu, alpha) = read_profile(Path::new(path))?;
            SpectralProfile::new(FreqGrid::from_samples(&nu)?, alpha)?
        }
        None => build_pit(
            &spec,
            &FreqGrid::centered(cfg.real("freq_half_span_hz"), cfg.real("freq_step_hz"))?,
        )?,
    };
    let tf = kk_transfer(&profile)?;
    let detuning = cfg.real("carrier_detuning_hz");
    let tau = group_delay(&tf, detuning, cfg.real("band_hz"))?;

    let fwhm = cfg.real("pulse_fwhm_s");
    let dt = cfg.opt_real("dt_s").unwrap_or(fwhm / 100.0);
    let grid = TimeGrid::anchored(-6.0 * fwhm, 8.0 * fwhm + 4.0 * tau.abs(), dt)?;
    let input = PulseEnvelope::gaussian(grid, 0.0, fwhm)?;
    let theta = cfg.real("theta_deg").to_radians();
    let res = polarized_propagate_at(&tf, &input, theta, detuning)?;

    let e_in = input.energy();
    let analytic_vg = vg_analytic(spec.hole_fwhm, spec.alpha_per_m());
    let full = polarized_propagate_at(&tf, &input, 0.0, detuning)?;
    let summary = Summary::new(cfg)
        .num("vg_analytic_m_per_s", analytic_vg)
        .num("delay_analytic_s", spec.analytic_delay())
        .num("group_delay_s", tau)
        .num("vg_numerical_m_per_s", spec.length_m / tau)
        .num("delay_ratio_numerical_to_analytic", tau / spec.analytic_delay())
        .num("peak_delay_s", peak_time(&full.parallel_out) - peak_time(&input))
        .num("vg_measured_reference_m_per_s", MEASURED_VG)
        .num("delay_measured_reference_s", MEASURED_DELAY)
        .num("theta_deg", cfg.real("theta_deg"))
        .num("input_energy", e_in)
        .num("energy_parallel_pre_loss", e_in * theta.cos().powi(2))
        .num("energy_perpendicular_pre_loss", e_in * theta.sin().powi(2))
        .num("energy_parallel", res.energy_parallel)
        .num("energy_perpendicular", res.energy_perpendicular);
    sink.json("slowlight_summary.json", &summary)?;

    sink.csv("slowlight_input.csv", &envelope_document(&input, None), cfg)?;
    sink.csv(
        "slowlight_parallel.csv",
        &envelope_document(&res.parallel_out, None),
        cfg,
    )?;
    sink.csv(
        "slowlight_perpendicular.csv",
        &envelope_document(&res.perpendicular_out, None),
        cfg,
    )?;
    let mut tdoc = CurveDocument::new(&[
        ("frequency_hz", "Hz"),
        ("alpha_l", "1"),
        ("log_amplitude", "1"),
        ("phase", "rad"),
    ]);
    for (i, nu) in tf.grid().frequencies().enumerate() {
        tdoc.push(vec![nu, profile.alpha_l()[i], tf.log_amplitude()[i], tf.phase()[i]]);
    }
    sink.csv("slowlight_transfer.csv", &tdoc, cfg)?;

    let ts = times_us(&grid);
    let inten = |p: &PulseEnvelope| p.intensity().collect::<Vec<f64>>();
    sink.figure(
        "slowlight.svg",
        &[Panel {
            title: format!("spectral pit, theta = {} deg", cfg.real("theta_deg")),
            x_label: "t (us)".into(),
            y_label: "|F|^2".into(),
            series: vec![
                Series::new("input", &ts, &inten(&input)),
                Series::new("parallel (delayed)", &ts, &inten(&res.parallel_out)),
                Series::new("perpendicular", &ts, &inten(&res.perpendicular_out)),
            ],
        }],
    )
}

/// Time of the intensity maximum, refined by a parabola through its neighbours.
fn peak_time(p: &PulseEnvelope) -> f64 {
    let y: Vec<f64> = p.intensity().collect();
    let k = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let grid = p.grid();
    if k == 0 || k + 1 >= y.len() {
        return grid.t(k);
    }
    let denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
    let shift = if denom != 0.0 {
        0.5 * (y[k - 1] - y[k + 1]) / denom
    } else {
        0.0
    };
    grid.t(k) + shift * grid.dt()
}
