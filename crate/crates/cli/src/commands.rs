//! Subcommand bodies. Each returns the list of files it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sensory_core::association::{build_contingency, chi2_independence};
use sensory_core::correspondence::{bootstrap_ellipses, ca, CaResult, Resampling};
use sensory_core::data::{emit_csv, parse_csv, validate, AttributeList, CsvOptions, Method, ResponseDataset};
use sensory_core::hedonic::{anova, tukey_hsd, HedonicGroups};
use sensory_core::numerics::SeedSpec;
use sensory_core::power::{default_size_grid, power_curve, power_curve_model, PowerCurve, Summary};
use sensory_core::protocol::{generate_plan, render_questionnaire, PlanOptions, ServingDesign, SheetFormat};
use sensory_core::simulate::{load_model, preset, simulate_apt, simulate_cata, PerceptionModel};

use crate::format::{fmt6, parse_sizes};
use crate::{from_association, from_ca, from_hedonic, from_power, svg, CliError, Command, Common, InputArgs, ModelArgs, SummaryArg};

const DEFAULT_GRID_POINTS: usize = 12;

struct Out {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

pub(crate) fn dispatch(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Ingest { input, common } => ingest(input, common),
        Command::Ca { input, common, replicates, level, per_row } => {
            run_ca(input, common, *replicates, *level, *per_row)
        }
        Command::Power { input, hedonic_column, no_hedonic, model, common, sizes, draws, summary, threshold, panelists } => {
            let source = match input {
                Some(path) => {
                    if model.preset.is_some() || model.model.is_some() {
                        return Err(CliError::Input("give either --input or a model, not both".into()));
                    }
                    let args = InputArgs { input: path.clone(), hedonic_column: hedonic_column.clone(), no_hedonic: *no_hedonic };
                    PowerSource::Data(read_dataset(&args, common.separator)?)
                }
                None => PowerSource::Model(resolve_model(model, common.separator)?, model.method.into()),
            };
            let opts = PowerOpts { sizes: sizes.as_deref(), draws: *draws, summary: *summary, threshold: *threshold, panelists: *panelists };
            run_power(source, &opts, common)
        }
        Command::Hedonic { input, common, alpha } => run_hedonic(input, common, *alpha),
        Command::Questionnaire {
            common,
            method,
            products,
            attributes,
            panelists,
            orders,
            hidden_digit_pos,
            code_length,
            balanced,
            html,
        } => {
            let products: Vec<String> =
                products.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            let attrs = match attributes {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                    let names: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
                    AttributeList::new(names).map_err(|e| CliError::input(path.display(), e))?
                }
                None => AttributeList::wine(),
            };
            let options = PlanOptions {
                n_orders: *orders,
                hidden_digit_position: *hidden_digit_pos,
                code_length: *code_length,
                serving: if *balanced { ServingDesign::BalancedLatin } else { ServingDesign::Random },
            };
            let format = if *html { SheetFormat::Html } else { SheetFormat::Text };
            questionnaire((*method).into(), &attrs, &products, *panelists, &options, format, common)
        }
        Command::Simulate { model, common, panelists } => {
            let m = resolve_model(model, common.separator)?;
            simulate(&m, model.method.into(), *panelists, common)
        }
    }
}

fn master_seed(common: &Common) -> u64 {
    common.seed.unwrap_or_else(|| {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        now.as_secs() ^ (u64::from(now.subsec_nanos()) << 20)
    })
}

/// Records what is needed to rerun: the command and the master seed. The
/// thread count is left out on purpose since it does not change results.
fn run_record(command: &str, seed: Option<u64>, extra: &[(&str, String)]) -> String {
    let mut s = format!("command: {command}\nversion: {}\n", env!("CARGO_PKG_VERSION"));
    if let Some(seed) = seed {
        let _ = writeln!(s, "seed: {seed}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k}: {v}");
    }
    s
}

fn read_dataset(input: &InputArgs, separator: char) -> Result<ResponseDataset, CliError> {
    let bytes = fs::read(&input.input).map_err(|e| CliError::io(&input.input, e))?;
    let opts = CsvOptions {
        separator,
        hedonic_column: if input.no_hedonic { None } else { Some(input.hedonic_column.clone()) },
    };
    parse_csv(&bytes, &opts).map_err(|e| CliError::input(input.input.display(), e))
}

fn resolve_model(args: &ModelArgs, separator: char) -> Result<PerceptionModel, CliError> {
    match (&args.preset, &args.model) {
        (Some(name), None) => preset(name).map_err(|e| CliError::input("--preset", e)),
        (None, Some(dir)) => {
            let ipath = dir.join("intensity.csv");
            let ppath = dir.join("params.toml");
            let intensity = fs::read(&ipath).map_err(|e| CliError::io(&ipath, e))?;
            let params = fs::read_to_string(&ppath).map_err(|e| CliError::io(&ppath, e))?;
            load_model(&intensity, &params, separator).map_err(|e| CliError::input(dir.display(), e))
        }
        _ => Err(CliError::Input("give exactly one of --preset or --model".into())),
    }
}

fn ingest(input: &InputArgs, common: &Common) -> Result<Vec<PathBuf>, CliError> {
    let data = read_dataset(input, common.separator)?;
    let report = validate(&data);
    let table = build_contingency(&data, None).map_err(|e| from_association("contingency", e))?;
    let mut summary = format!(
        "rows: {}\nproducts: {}\npanelists: {}\nattributes: {}\nhedonic column: {}\n",
        data.len(),
        data.products().len(),
        data.panelists().len(),
        data.attributes().len(),
        data.hedonic_column().unwrap_or("none"),
    );
    summary.push_str(&report.to_string());
    eprint!("{report}");
    let mut out = Out::new(&common.output_dir)?;
    out.write("validation.txt", summary)?;
    out.write("contingency.csv", table.to_csv(common.separator))?;
    Ok(out.written)
}

fn run_ca(input: &InputArgs, common: &Common, replicates: usize, level: f64, per_row: bool) -> Result<Vec<PathBuf>, CliError> {
    let data = read_dataset(input, common.separator)?;
    let report = validate(&data);
    eprint!("{report}");
    let table = build_contingency(&data, None).map_err(|e| from_association("contingency", e))?;
    let chi = chi2_independence(&table).map_err(|e| from_association("chi-square", e))?;
    let result = ca(&table).map_err(|e| from_ca("correspondence analysis", e))?;
    let seed = master_seed(common);
    let scheme = if per_row { Resampling::PerRow } else { Resampling::WholeTable };
    let ellipses = if result.n_axes() >= 2 {
        bootstrap_ellipses(&table, &result, replicates, level, &SeedSpec::new(seed, "bootstrap"), scheme)
            .map_err(|e| from_ca("bootstrap", e))?
    } else {
        Vec::new()
    };
    let sep = common.separator;

    let mut text = String::new();
    let _ = writeln!(text, "chi-square: {}", fmt6(chi.statistic));
    let _ = writeln!(text, "df: {}", chi.df);
    let _ = writeln!(text, "p-value: {}", fmt6(chi.p_value));
    let _ = writeln!(text, "cells with expected < 5: {}%", fmt6(100.0 * chi.low_expected_fraction));
    let _ = writeln!(text, "total inertia: {}", fmt6(result.total_inertia));
    let _ = writeln!(text, "{} axes", result.n_axes());
    for k in 0..result.n_axes() {
        let _ = writeln!(text, "{}  inertia {}", svg::axis_label(&result, k), fmt6(result.inertias[k]));
    }
    for p in &result.excluded_rows {
        let _ = writeln!(text, "excluded product (zero mass): {p}");
    }
    for a in &result.excluded_cols {
        let _ = writeln!(text, "excluded attribute (zero mass): {a}");
    }
    if result.n_axes() < 2 {
        let _ = writeln!(text, "no confidence ellipses: fewer than 2 axes");
    }

    let mut out = Out::new(&common.output_dir)?;
    out.write("contingency.csv", table.to_csv(sep))?;
    out.write("coords.csv", coords_csv(&result, sep))?;
    out.write("ellipses.csv", ellipses_csv(&ellipses, sep))?;
    out.write("ca_map.svg", svg::ca_map(&result, &ellipses, 640.0))?;
    out.write("report.txt", text)?;
    let level_s = fmt6(level);
    out.write(
        "run.txt",
        run_record("ca", Some(seed), &[("replicates", replicates.to_string()), ("level", level_s)]),
    )?;
    Ok(out.written)
}

fn coords_csv(result: &CaResult, sep: char) -> String {
    let mut s = format!("Type{sep}Label{sep}Mass");
    for k in 0..result.n_axes() {
        let _ = write!(s, "{sep}Dim{}", k + 1);
    }
    s.push('\n');
    let mut emit = |kind: &str, labels: &[String], masses: &[f64], coords: &[Vec<f64>]| {
        for ((label, m), c) in labels.iter().zip(masses).zip(coords) {
            let _ = write!(s, "{kind}{sep}{}{sep}{}", quote(label, sep), fmt6(*m));
            for v in c {
                let _ = write!(s, "{sep}{}", fmt6(*v));
            }
            s.push('\n');
        }
    };
    emit("product", &result.row_labels, &result.row_masses, &result.row_coords);
    emit("attribute", &result.col_labels, &result.col_masses, &result.col_coords);
    s
}

fn ellipses_csv(ellipses: &[sensory_core::correspondence::ConfidenceEllipse], sep: char) -> String {
    let header = [
        "Product", "Center1", "Center2", "SemiMajor", "SemiMinor", "Angle", "Cov11", "Cov12", "Cov22", "Level",
        "Replicates", "Skipped",
    ];
    let mut s = header.join(&sep.to_string());
    s.push('\n');
    for e in ellipses {
        let nums = [
            e.center[0],
            e.center[1],
            e.semi_axes[0],
            e.semi_axes[1],
            e.angle,
            e.covariance[0][0],
            e.covariance[0][1],
            e.covariance[1][1],
            e.level,
        ];
        s.push_str(&quote(&e.product, sep));
        for v in nums {
            let _ = write!(s, "{sep}{}", fmt6(v));
        }
        let _ = writeln!(s, "{sep}{}{sep}{}", e.n_replicates, e.skipped);
    }
    s
}

fn quote(field: &str, sep: char) -> String {
    if field.contains(sep) || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

enum PowerSource {
    Data(ResponseDataset),
    Model(PerceptionModel, Method),
}

struct PowerOpts<'a> {
    sizes: Option<&'a str>,
    draws: usize,
    summary: SummaryArg,
    threshold: f64,
    panelists: usize,
}

fn run_power(source: PowerSource, opts: &PowerOpts<'_>, common: &Common) -> Result<Vec<PathBuf>, CliError> {
    let panel = match &source {
        PowerSource::Data(d) => d.panelists().len(),
        PowerSource::Model(..) => opts.panelists,
    };
    let sizes = match opts.sizes {
        Some(spec) => parse_sizes(spec).map_err(|e| CliError::input("--sizes", e))?,
        None => default_size_grid(panel, DEFAULT_GRID_POINTS).map_err(|e| from_power("size grid", e))?,
    };
    let summary = match opts.summary {
        SummaryArg::Mean => Summary::Mean,
        SummaryArg::Median => Summary::Median,
    };
    let seed = master_seed(common);
    let spec = SeedSpec::new(seed, "power");
    let (curve, what) = match &source {
        PowerSource::Data(d) => {
            (power_curve(d, &sizes, opts.draws, opts.threshold, summary, &spec), "dataset subsampling".to_string())
        }
        PowerSource::Model(m, method) => (
            power_curve_model(m, *method, &sizes, opts.draws, opts.threshold, summary, &spec),
            format!("model {} ({method})", m.name),
        ),
    };
    let curve = curve.map_err(|e| from_power("power curve", e))?;
    let mut out = Out::new(&common.output_dir)?;
    out.write("power.csv", power_csv(&curve, common.separator))?;
    out.write("power_curve.svg", svg::power_plot(&curve, 720.0, 440.0))?;
    let crossing = match curve.crossing_size {
        Some(c) => fmt6(c),
        None => "none".into(),
    };
    out.write(
        "run.txt",
        run_record(
            "power",
            Some(seed),
            &[
                ("source", what),
                ("draws", opts.draws.to_string()),
                ("summary", summary.to_string()),
                ("threshold", fmt6(opts.threshold)),
                ("crossing", crossing),
            ],
        ),
    )?;
    Ok(out.written)
}

fn power_csv(curve: &PowerCurve, sep: char) -> String {
    let mut s = ["size", "mean_p", "median_p", "q10", "q90", "degenerate_draws"].join(&sep.to_string());
    s.push('\n');
    for i in 0..curve.sizes.len() {
        let _ = writeln!(
            s,
            "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}",
            curve.sizes[i],
            fmt6(curve.mean_p[i]),
            fmt6(curve.median_p[i]),
            fmt6(curve.q10_p[i]),
            fmt6(curve.q90_p[i]),
            curve.degenerate_draws[i],
        );
    }
    s
}

fn run_hedonic(input: &InputArgs, common: &Common, alpha: f64) -> Result<Vec<PathBuf>, CliError> {
    let data = read_dataset(input, common.separator)?;
    let groups = HedonicGroups::from_dataset(&data).map_err(|e| from_hedonic("hedonic scores", e))?;
    let a = anova(&groups).map_err(|e| from_hedonic("anova", e))?;
    let t = tukey_hsd(&a, alpha).map_err(|e| from_hedonic("tukey", e))?;
    let sep = common.separator;

    let mut text = String::new();
    let _ = writeln!(text, "source{sep}df{sep}SS{sep}MS{sep}F{sep}p");
    let _ = writeln!(
        text,
        "between{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}",
        a.df_between,
        fmt6(a.ss_between),
        fmt6(a.ss_between / a.df_between as f64),
        fmt6(a.f_statistic),
        fmt6(a.p_value)
    );
    let _ = writeln!(text, "within{sep}{}{sep}{}{sep}{}", a.df_within, fmt6(a.ss_within), fmt6(a.ms_within()));
    let _ = writeln!(text, "total{sep}{}{sep}{}", a.df_between + a.df_within, fmt6(a.ss_total));
    if a.zero_within_variance {
        let _ = writeln!(text, "warning: zero within-group variance");
    }

    let mut pairs = ["GroupA", "GroupB", "MeanDiff", "q", "p_adj", "Significant"].join(&sep.to_string());
    pairs.push('\n');
    for p in &t.pairs {
        let _ = writeln!(
            pairs,
            "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}",
            quote(&p.group_a, sep),
            quote(&p.group_b, sep),
            fmt6(p.mean_diff),
            fmt6(p.q_statistic),
            fmt6(p.p_adjusted),
            p.significant
        );
    }

    let ses = a.standard_errors();
    let mut letters = ["Product", "N", "Mean", "SD", "SE", "Letters"].join(&sep.to_string());
    letters.push('\n');
    for i in 0..a.group_labels.len() {
        let _ = writeln!(
            letters,
            "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}",
            quote(&a.group_labels[i], sep),
            a.group_ns[i],
            fmt6(a.group_means[i]),
            fmt6(a.group_sds[i]),
            fmt6(ses[i]),
            t.letters[i]
        );
    }

    let mut out = Out::new(&common.output_dir)?;
    out.write("anova.txt", text)?;
    out.write("tukey.csv", pairs)?;
    out.write("letters.csv", letters)?;
    out.write("bars.svg", svg::hedonic_bars(&a, &t, 640.0, 420.0))?;
    Ok(out.written)
}

fn questionnaire(
    method: Method,
    attrs: &AttributeList,
    products: &[String],
    panelists: usize,
    options: &PlanOptions,
    format: SheetFormat,
    common: &Common,
) -> Result<Vec<PathBuf>, CliError> {
    let seed = master_seed(common);
    let plan = generate_plan(method, attrs, products, panelists, options, &SeedSpec::new(seed, "protocol"))
        .map_err(|e| CliError::input("questionnaire", e))?;
    let sep = common.separator;
    let ext = match format {
        SheetFormat::Text => "txt",
        SheetFormat::Html => "html",
    };
    let mut out = Out::new(&common.output_dir)?;
    out.write("plan.csv", plan.plan_csv(sep))?;
    out.write("key.csv", plan.key_csv(sep))?;
    out.write("orders.csv", plan.orders_csv(sep))?;
    for sheet in &plan.sheets {
        let body = render_questionnaire(&plan, sheet.panelist, format).map_err(|e| CliError::input("questionnaire", e))?;
        out.write(&format!("questionnaires/panelist_{:03}.{ext}", sheet.panelist), body)?;
    }
    out.write(
        "run.txt",
        run_record("questionnaire", Some(seed), &[("method", method.to_string()), ("panelists", panelists.to_string())]),
    )?;
    Ok(out.written)
}

fn simulate(model: &PerceptionModel, method: Method, panelists: usize, common: &Common) -> Result<Vec<PathBuf>, CliError> {
    let seed = master_seed(common);
    let spec = SeedSpec::new(seed, "simulate");
    let data = match method {
        Method::Apt => simulate_apt(model, panelists, &spec),
        _ => simulate_cata(model, panelists, &spec),
    }
    .map_err(|e| CliError::input("simulate", e))?;
    let mut out = Out::new(&common.output_dir)?;
    out.write("responses.csv", emit_csv(&data, common.separator))?;
    out.write(
        "run.txt",
        run_record(
            "simulate",
            Some(seed),
            &[("model", model.name.clone()), ("method", method.to_string()), ("panelists", panelists.to_string())],
        ),
    )?;
    Ok(out.written)
}
