//! Execution of a [`Task`] into an output table.

use std::io::Write;
use std::path::Path;

use hamming_boot::analytics::{
    epl_exponent_bounds, exponent_table, figure_data, good_probability_limit, good_terms, limit_2d,
    limit_3d_theta3, poisson_means,
};
use hamming_boot::detectors::{classify_good, count_configs, detect_f_line};
use hamming_boot::io::{
    fmt_decimal, read_config_file, result_table, Cell, DetectQuery, EmpiricsQuery, ExponentsMode, ExponentsQuery,
    Format, LimitMode, LimitsQuery, OracleQuery, ResultRow, SweepQuery, Table, Task,
};
use hamming_boot::montecarlo::{
    engine_battery, exact_probability, poisson_mean_empirics, run, sweep, EstimateReport, EventKind, ExperimentSpec,
    Scaling,
};
use hamming_boot::{evolve_fast, Automorphism, Error, Rational, Result, TorusShape};

/// Result of a task: a table plus messages for stderr.
#[derive(Debug)]
pub struct Output {
    pub table: Table,
    pub notes: Vec<String>,
    /// Set when a check inside the task did not pass.
    pub failure: Option<String>,
}

impl Output {
    fn table(table: Table) -> Self {
        Output { table, notes: Vec::new(), failure: None }
    }
}

/// Where a task's table goes.
pub struct Sink<'a> {
    pub path: Option<&'a Path>,
    pub format: Format,
}

pub fn execute(task: &Task, sink: &Sink<'_>, verbosity: u8) -> Result<Vec<String>> {
    let out = match task {
        Task::Sweep(q) => return sweep_streaming(q, sink, verbosity),
        Task::Simulate(spec) => simulate(spec, verbosity)?,
        Task::Limits(q) => limits(q)?,
        Task::Exponents(q) => exponents(q)?,
        Task::Detect(q) => detect(q)?,
        Task::Oracle(q) => oracle(q)?,
        Task::Empirics(q) => empirics(q)?,
    };
    hamming_boot::io::emit(&out.table.render(sink.format), sink.path)?;
    match out.failure {
        Some(reason) => Err(Error::Domain(reason)),
        None => Ok(out.notes),
    }
}

fn report_notes(report: &EstimateReport, verbosity: u8) -> Vec<String> {
    let mut notes: Vec<String> = report.warnings.iter().map(|w| format!("warning: {w}")).collect();
    if let Some(h) = &report.class_histogram {
        let parts: Vec<String> = hamming_boot::detectors::GoodClass::NAMES
            .iter()
            .zip(h.counts)
            .map(|(name, c)| format!("{name}={c}"))
            .collect();
        notes.push(format!("good classes (n={}): {}", report.shape.n(), parts.join(" ")));
        notes.push(format!(
            "askew class by axis: {:?}, max pairwise deviation {:.2} sigma",
            h.askew_by_axis,
            h.axis_asymmetry_sigma()
        ));
    }
    if let Some(m) = &report.config_means {
        notes.push(format!(
            "config means (n={}): basic={:.4}±{:.4} enhanced_basic={:.4}±{:.4} line={:.4}±{:.4} \
             line_empty={:.4}±{:.4} enhanced_line={:.4}±{:.4} non_enhanced_line={:.4}±{:.4} identity_violations={}",
            report.shape.n(),
            m.basic.mean,
            m.basic.std_error,
            m.enhanced_basic.mean,
            m.enhanced_basic.std_error,
            m.line.mean,
            m.line.std_error,
            m.line_empty.mean,
            m.line_empty.std_error,
            m.enhanced_line.mean,
            m.enhanced_line.std_error,
            m.non_enhanced_line.mean,
            m.non_enhanced_line.std_error,
            m.identity_violations
        ));
    }
    if verbosity > 0 {
        notes.push(format!("n={} p={} wall time {:.3} s", report.shape.n(), fmt_decimal(report.p), report.wall_time_secs));
    }
    notes
}

pub fn simulate(spec: &ExperimentSpec, verbosity: u8) -> Result<Output> {
    let report = run(spec)?;
    Ok(Output {
        table: result_table(&ResultRow::from_report(&report)),
        notes: report_notes(&report, verbosity),
        failure: None,
    })
}

/// Runs the grid, writing each point's rows as soon as it finishes when the
/// output is CSV.
fn sweep_streaming(q: &SweepQuery, sink: &Sink<'_>, verbosity: u8) -> Result<Vec<String>> {
    let header = result_table(&[]).to_csv();
    let mut file: Box<dyn Write> = match sink.path {
        Some(p) => Box::new(
            std::fs::File::create(p).map_err(|source| Error::Io { path: p.to_path_buf(), source })?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let io_err = |source| Error::Io { path: sink.path.map_or("<stdout>".into(), Path::to_path_buf), source };
    let streaming = sink.format == Format::Csv;
    if streaming {
        file.write_all(header.as_bytes()).map_err(io_err)?;
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    let mut write_error = None;
    sweep(&q.base, &q.grid, |point, result| match result {
        Ok(report) => {
            let these = ResultRow::from_report(report);
            if streaming && write_error.is_none() {
                let csv = result_table(&these).to_csv();
                let body = csv.split_once('\n').map_or("", |(_, b)| b);
                if let Err(e) = file.write_all(body.as_bytes()).and_then(|_| file.flush()) {
                    write_error = Some(e);
                }
            }
            rows.extend(these);
            notes.extend(report_notes(report, verbosity));
        }
        Err(e) => failures.push(format!("n={} {:?}: {e}", point.n, point.scaling)),
    })?;
    if let Some(e) = write_error {
        return Err(io_err(e));
    }
    if !streaming {
        file.write_all(result_table(&rows).render(sink.format).as_bytes()).map_err(io_err)?;
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("sweep point failed: {f}");
        }
        return Err(Error::Domain(format!("{} sweep point(s) failed", failures.len())));
    }
    Ok(notes)
}

pub fn limits(q: &LimitsQuery) -> Result<Output> {
    if q.a.is_empty() {
        return Err(Error::Domain("no values of a given".into()));
    }
    let table = match q.mode {
        LimitMode::TwoD => {
            let theta = q.theta.ok_or_else(|| Error::Domain("the 2d limit needs --theta".into()))?;
            let mut t = Table::new(&["theta", "a", "limit"]);
            for &a in &q.a {
                t.push(vec![theta.into(), a.into(), limit_2d(theta, a)?.into()]);
            }
            t
        }
        LimitMode::ThreeD => {
            let mut t = Table::new(&["a", "closed_form", "decomposition", "abs_difference"]);
            for &a in &q.a {
                let x = limit_3d_theta3(a)?;
                let y = good_probability_limit(a)?;
                t.push(vec![a.into(), x.into(), y.into(), (x - y).abs().into()]);
            }
            t
        }
        LimitMode::Good => {
            let mut header = vec!["a"];
            header.extend(&hamming_boot::detectors::GoodClass::NAMES[1..]);
            header.push("total");
            let mut t = Table::new(&header);
            for &a in &q.a {
                let terms = good_terms(&poisson_means(a)?);
                let mut row: Vec<Cell> = vec![a.into()];
                row.extend(terms.iter().map(|&x| Cell::from(x)));
                row.push(terms.iter().sum::<f64>().into());
                t.push(row);
            }
            t
        }
        LimitMode::Poisson => {
            let mut t = Table::new(&[
                "a",
                "lambda_basic",
                "lambda_enhanced_basic",
                "lambda_line",
                "lambda_line_empty_axis",
                "lambda_non_enhanced_line_axis",
                "lambda_enhanced_line",
            ]);
            for &a in &q.a {
                let m = poisson_means(a)?;
                t.push(vec![
                    a.into(),
                    m.lambda_basic.into(),
                    m.lambda_enhanced_basic.into(),
                    m.lambda_line.into(),
                    m.lambda_line_empty_axis.into(),
                    m.lambda_non_enhanced_line_axis.into(),
                    m.lambda_enhanced_line.into(),
                ]);
            }
            t
        }
    };
    Ok(Output::table(table))
}

/// Default β-curve abscissae: 1 to 3 in steps of 1/50.
pub fn default_alpha_grid() -> Vec<Rational> {
    (50..=150).map(|k| Rational::new(k, 50)).collect()
}

pub fn exponents(q: &ExponentsQuery) -> Result<Output> {
    let mut notes = Vec::new();
    let table = match q.mode {
        ExponentsMode::Table => {
            let mut t = Table::new(&["d", "theta", "lower", "upper", "upper_source"]);
            for b in exponent_table(q.d, q.theta.iter().copied())? {
                t.push(vec![b.d.into(), b.theta.into(), (&b.lower).into(), (&b.upper).into(), b.upper_source.as_str().into()]);
            }
            t
        }
        ExponentsMode::Epl => {
            let mut t = Table::new(&["d", "theta", "lower_exponent", "upper_exponent", "theta_sufficient"]);
            for &theta in &q.theta {
                let b = epl_exponent_bounds(q.d, theta)?;
                if !b.theta_sufficient {
                    notes.push(format!(
                        "warning: theta={theta} is below 650(d-2.1); the bounds are only asymptotic here"
                    ));
                }
                t.push(vec![q.d.into(), theta.into(), b.lower_exponent.into(), b.upper_exponent.into(), b.theta_sufficient.into()]);
            }
            t
        }
        ExponentsMode::Figure => {
            let alphas = if q.alpha.is_empty() { default_alpha_grid() } else { q.alpha.clone() };
            let mut t = Table::new(&["theta", "alpha", "bound_type", "value"]);
            for pt in figure_data(q.d, q.theta.iter().copied(), &alphas)? {
                t.push(vec![pt.theta.into(), pt.alpha.into(), pt.bound_type.as_str().into(), pt.value.into()]);
            }
            t
        }
    };
    Ok(Output { table, notes, failure: None })
}

pub fn detect(q: &DetectQuery) -> Result<Output> {
    let file = read_config_file(&q.input)?;
    let config = file.to_configuration()?;
    let shape = *config.shape();
    let mut t = Table::new(&["quantity", "value"]);
    let mut push = |name: &str, value: Cell| t.push(vec![name.into(), value]);
    push("open", config.count_open().into());
    if shape.d() == 3 {
        let c = count_configs(&config)?;
        push("basic", c.basic.into());
        push("enhanced_basic", c.enhanced_basic.into());
        for (name, arr) in [
            ("line", c.line),
            ("line_empty", c.line_empty),
            ("enhanced_line", c.enhanced_line),
            ("non_enhanced_line", c.non_enhanced_line),
        ] {
            for (i, v) in arr.iter().enumerate() {
                push(&format!("{name}_{}", i + 1), (*v).into());
            }
        }
        let class = classify_good(&config)?;
        push("good_class", hamming_boot::detectors::GoodClass::NAMES[class.ordinal()].into());
    }
    let mut f_lines = 0usize;
    for axis in 0..shape.d() {
        // move `axis` to the first position so every line is tested as an axis-1 line
        let rotated = Automorphism::swap_axes(&shape, 0, axis).apply(&config);
        for flat in 0..shape.lines_per_axis() {
            f_lines += detect_f_line(&rotated, &shape.line_id(flat))? as usize;
        }
    }
    push("f_lines", f_lines.into());
    let dynamics = evolve_fast(&config)?;
    push("above_threshold", dynamics.above_threshold_initial.into());
    push("rounds", dynamics.rounds.into());
    push("final_open", dynamics.final_config.count_open().into());
    push("open_line", dynamics.open_line_found.into());
    push("open_plane", dynamics.open_plane_found.into());
    push("spanned", dynamics.spanned.into());
    Ok(Output { table: t, notes: shape.warnings().into_iter().map(|w| format!("warning: {w}")).collect(), failure: None })
}

pub fn oracle(q: &OracleQuery) -> Result<Output> {
    let shape = TorusShape::new(q.d, q.n, q.theta)?;
    let exact = exact_probability(shape, q.p, q.event)?;
    let mut spec = ExperimentSpec::new(shape, Scaling::Raw { p: q.p }, vec![q.event], q.replicas, q.seed);
    spec.ci_level = q.ci_level;
    let report = run(&spec)?;
    let est = report.estimate(q.event).expect("requested").clone();
    let covered = est.ci_low <= exact && exact <= est.ci_high;
    let battery = engine_battery(q.engine_instances, q.seed)?;
    let mut t = Table::new(&[
        "d",
        "n",
        "theta",
        "p",
        "event",
        "exact",
        "replicas",
        "successes",
        "p_hat",
        "ci_low",
        "ci_high",
        "covered",
        "engine_instances",
        "engine_mismatches",
    ]);
    t.push(vec![
        q.d.into(),
        q.n.into(),
        q.theta.into(),
        q.p.into(),
        q.event.as_str().into(),
        exact.into(),
        est.replicas.into(),
        est.successes.into(),
        est.p_hat.into(),
        est.ci_low.into(),
        est.ci_high.into(),
        covered.into(),
        battery.instances.into(),
        battery.mismatches.into(),
    ]);
    let mut problems = Vec::new();
    if !covered {
        problems.push(format!("exact value {exact} outside the Monte Carlo interval [{}, {}]", est.ci_low, est.ci_high));
    }
    if let Some((d, n, theta, i)) = battery.first_mismatch {
        problems.push(format!(
            "{} engine mismatches; first at d={d} n={n} theta={theta} instance {i}",
            battery.mismatches
        ));
    }
    let verdict = if problems.is_empty() { "oracle: pass".to_string() } else { "oracle: FAIL".to_string() };
    Ok(Output { table: t, notes: vec![verdict], failure: (!problems.is_empty()).then(|| problems.join("; ")) })
}

pub fn empirics(q: &EmpiricsQuery) -> Result<Output> {
    let shape = TorusShape::new(3, q.n, 3)?;
    let e = poisson_mean_empirics(shape, q.a, q.replicas, q.seed)?;
    let mut t = Table::new(&["n", "a", "p", "quantity", "replicas", "mean", "std_error", "limit", "finite_n"]);
    for r in &e.rows {
        t.push(vec![
            e.n.into(),
            e.a.into(),
            e.p.into(),
            r.quantity.as_str().into(),
            e.replicas.into(),
            r.empirical.mean.into(),
            r.empirical.std_error.into(),
            r.limit.into(),
            r.finite_n.into(),
        ]);
    }
    let notes = vec![format!("identity violations (enhanced + non-enhanced != line): {}", e.identity_violations)];
    let failure = (e.identity_violations > 0).then(|| "line identity violated".to_string());
    Ok(Output { table: t, notes, failure })
}

/// Rows for a single simulate event, used by `oracle`-style checks in tests.
pub fn single_event(spec: &ExperimentSpec, event: EventKind) -> Result<ResultRow> {
    let report = run(spec)?;
    ResultRow::from_report(&report)
        .into_iter()
        .find(|r| r.event == event)
        .ok_or_else(|| Error::Domain(format!("{event} was not requested")))
}
