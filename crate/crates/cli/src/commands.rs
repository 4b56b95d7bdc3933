use crate::config::ExperimentConfig;
use crate::error::{CliError, EXIT_CHECK_FAILED, EXIT_CONSTRAINT, EXIT_CONSTRUCTION};
use crate::output::write_all;
use viana_lab::constants::{
    derive_constants, derive_constants_unchecked, ConstantOverrides, ExpansionConstants,
};
use viana_lab::maps::{build_map, check_map, DegenerateMap, MapSpec};
use viana_lab::report::{CheckRow, CsvBlock, OutputHeader};
use viana_lab::skew::SkewProduct;
use viana_lab::stats::{exponent_census, situation_census, CensusSummary, ExponentEstimate};
use viana_lab::suite::{
    lemma21_suite, lemma22_suite, lemma24_suite, lemma25_suite, lemma26_suite, lemma27_suite,
    oscillation_suite, random_curve, SuiteOutcome, SuiteParams,
};

/// Outcome of a command: files to write and whether every check held.
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(files: Vec<(String, Vec<u8>)>) -> Self {
        Outcome { files, failure: None }
    }

    pub fn finish(self, cfg: &ExperimentConfig) -> Result<(), CliError> {
        write_all(&cfg.out, &self.files)?;
        match self.failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

struct System {
    map: DegenerateMap,
    sp: SkewProduct,
}

fn system(spec: &MapSpec, d: u64, alpha: f64) -> Result<System, CliError> {
    let map = build_map(spec)?;
    let sp = SkewProduct::new(map.clone(), d, alpha)?;
    Ok(System { map, sp })
}

fn constants(s: &System) -> Result<ExpansionConstants, CliError> {
    Ok(derive_constants(&s.map, s.sp.d, s.sp.alpha, &ConstantOverrides::default())?)
}

fn header(cfg: &ExperimentConfig, kind: &str) -> OutputHeader {
    OutputHeader::new(cfg.hash(), cfg.seed).with_meta("output", kind)
}

fn params(cfg: &ExperimentConfig) -> SuiteParams {
    SuiteParams {
        seed: cfg.seed,
        grid: cfg.grid_size,
        samples: cfg.sample_count,
        curves: cfg.curves,
        elements: cfg.elements,
    }
}

pub fn build_map_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = system(&cfg.map_spec(), cfg.d, cfg.alpha)?;
    let c = constants(&s)?;
    let hdr = header(cfg, "map").with_constants(&c).with_meta("a0", s.map.a0).with_meta("amplitude", s.map.amplitude);
    let mut b = CsvBlock::new(hdr.clone(), &["x", "h", "h1", "h2"]);
    for (x, j) in s.map.table(cfg.grid_size) {
        b.push(vec![x.into(), j.value.into(), j.d1.into(), j.d2.into()]);
    }
    let json = serde_json::to_string(&hdr.with_meta("output", "constants"))
        .map_err(|e| CliError::new(1, e.to_string()))?;
    Ok(Outcome::ok(vec![
        ("map.csv".into(), b.to_bytes()),
        ("constants.json".into(), format!("{json}\n").into_bytes()),
    ]))
}

fn checks_outcome(hdr: OutputHeader, name: &str, o: &SuiteOutcome) -> Outcome {
    let rows: Vec<CheckRow> = o.cases.iter().chain(&o.summary).cloned().collect();
    let bytes = CsvBlock::from_checks(hdr, &rows).to_bytes();
    let failed = o.failures();
    Outcome {
        files: vec![(name.into(), bytes)],
        failure: (!failed.is_empty()).then(|| {
            CliError::new(
                EXIT_CHECK_FAILED,
                format!(
                    "{} failing checks, first: {} = {:e} (bound {:e})",
                    failed.len(),
                    failed[0].check,
                    failed[0].value,
                    failed[0].bound
                ),
            )
        }),
    }
}

pub fn check_map_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let map = build_map(&cfg.map_spec())?;
    let check = check_map(&map, 1 << 16);
    let hdr = header(cfg, "check-map").with_meta("check", &check);
    let o = SuiteOutcome { cases: vec![], summary: check.rows() };
    Ok(checks_outcome(hdr, "check_map.csv", &o))
}

pub fn lemma_check_cmd(cfg: &ExperimentConfig, lemma: &str) -> Result<Outcome, CliError> {
    let s = system(&cfg.map_spec(), cfg.d, cfg.alpha)?;
    let p = params(cfg);
    let needs_constants = matches!(lemma, "2.4" | "2.5" | "2.6" | "osc");
    let c = if needs_constants {
        Some(constants(&s)?)
    } else {
        derive_constants_unchecked(&s.map, cfg.d, cfg.alpha, &ConstantOverrides::default()).ok()
    };
    let hdr = match &c {
        Some(c) => header(cfg, "lemma-check").with_constants(c),
        None => header(cfg, "lemma-check"),
    }
    .with_meta("lemma", lemma);
    let o = match (lemma, &c) {
        ("2.1", _) => lemma21_suite(&s.sp, &p),
        ("2.2", _) => lemma22_suite(&s.sp, &p),
        ("2.4", Some(c)) => lemma24_suite(&s.sp, c, &p)?,
        ("2.5", Some(c)) => lemma25_suite(&s.sp, c, &p)?,
        ("2.6", Some(c)) => {
            let r = if cfg.r_values.is_empty() {
                (0..=6).map(|i| c.r0 + i as f64).collect()
            } else {
                cfg.r_values.clone()
            };
            let q = SuiteParams { curves: cfg.ensemble, samples: 4, ..p };
            lemma26_suite(&s.sp, c, &r, cfg.scaling, &q)
        }
        ("2.7", _) => lemma27_suite(&s.sp, &random_curve(&s.sp, cfg.seed, 0), 1 << 12),
        ("osc", Some(c)) => oscillation_suite(&s.sp, c, &p),
        _ => {
            return Err(CliError::config(format!(
                "unknown lemma '{lemma}' (expected 2.1, 2.2, 2.4, 2.5, 2.6, 2.7 or osc)"
            )))
        }
    };
    Ok(checks_outcome(hdr, &format!("lemma_{lemma}.csv"), &o))
}

pub fn situations_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = system(&cfg.map_spec(), cfg.d, cfg.alpha)?;
    let c = constants(&s)?;
    let curve = random_curve(&s.sp, cfg.seed, 0);
    let rows = situation_census(&s.sp, &c, &curve, &cfg.n_values, cfg.sample_count, cfg.seed);
    let hdr = header(cfg, "situations")
        .with_constants(&c)
        .with_meta("sampling", "uniform grid jittered per seed")
        .with_meta("curve", &curve);
    let mut b = CsvBlock::new(
        hdr,
        &[
            "n", "m", "l", "samples", "b1", "b1_lo", "b1_hi", "b2", "b2_lo", "b2_hi",
            "b2_shape", "mean_i", "max_i", "spacing_holds", "count_bound_holds", "absorbed",
        ],
    );
    for r in &rows {
        b.push(vec![
            r.n.into(),
            r.m.into(),
            r.l.into(),
            r.samples.into(),
            r.b1.fraction.into(),
            r.b1.lo.into(),
            r.b1.hi.into(),
            r.b2.fraction.into(),
            r.b2.lo.into(),
            r.b2.hi.into(),
            r.b2_shape.into(),
            r.mean_i.into(),
            r.max_i.into(),
            r.spacing_holds.into(),
            r.count_bound_holds.into(),
            r.absorbed.into(),
        ]);
    }
    Ok(Outcome::ok(vec![("situations.csv".into(), b.to_bytes())]))
}

fn census_block(hdr: OutputHeader, est: &[ExponentEstimate], summary: &CensusSummary) -> Vec<u8> {
    let mut b = CsvBlock::new(
        hdr.with_meta("summary", summary),
        &["index", "theta", "x", "steps", "vertical", "horizontal", "hit_critical"],
    );
    for (i, e) in est.iter().enumerate() {
        b.push(vec![
            i.into(),
            e.theta.into(),
            e.x.into(),
            e.steps.into(),
            e.vertical.into(),
            e.horizontal.into(),
            e.hit_critical.into(),
        ]);
    }
    b.to_bytes()
}

pub fn exponents_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = system(&cfg.map_spec(), cfg.d, cfg.alpha)?;
    let c = constants(&s)?;
    let (est, summary) = exponent_census(&s.sp, cfg.steps, cfg.count, cfg.seed);
    let hdr = header(cfg, "exponents").with_constants(&c);
    Ok(Outcome::ok(vec![("exponents.csv".into(), census_block(hdr, &est, &summary))]))
}

pub fn sweep_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    let mut index = CsvBlock::new(
        header(cfg, "sweep-index"),
        &["order", "d", "alpha", "n", "status", "file", "fraction_positive", "median", "error"],
    );
    let mut worst: Option<CliError> = None;
    for &order in &cfg.sweep_orders {
        for &d in &cfg.sweep_d {
            for &alpha in &cfg.sweep_alpha {
                for &n in &cfg.sweep_n {
                    let point = system(&MapSpec::for_order(order), d, alpha)
                        .and_then(|s| constants(&s).map(|c| (s, c)));
                    match point {
                        Ok((s, c)) => {
                            let (est, summary) = exponent_census(&s.sp, n, cfg.count, cfg.seed);
                            let name = format!("census_D{order}_d{d}_a{alpha:e}_n{n}.csv");
                            let hdr = header(cfg, "exponents")
                                .with_constants(&c)
                                .with_meta("grid_point", (order, d, alpha, n));
                            files.push((format!("sweep/{name}"), census_block(hdr, &est, &summary)));
                            let median = summary.quantiles.iter().find(|q| q.0 == 0.5).map_or(f64::NAN, |q| q.1);
                            index.push(vec![
                                order.into(),
                                d.into(),
                                alpha.into(),
                                n.into(),
                                "ok".into(),
                                format!("sweep/{name}").into(),
                                summary.fraction_positive.into(),
                                median.into(),
                                "".into(),
                            ]);
                        }
                        Err(e) => {
                            index.push(vec![
                                order.into(),
                                d.into(),
                                alpha.into(),
                                n.into(),
                                if e.code == EXIT_CONSTRAINT { "constraint" } else { "construction" }.into(),
                                "".into(),
                                f64::NAN.into(),
                                f64::NAN.into(),
                                e.message.clone().into(),
                            ]);
                            if worst.as_ref().is_none_or(|w| w.code != EXIT_CONSTRUCTION) {
                                worst = Some(CliError::new(
                                    if e.code == EXIT_CONSTRAINT { EXIT_CONSTRAINT } else { EXIT_CONSTRUCTION },
                                    format!("grid point D={order} d={d} alpha={alpha:e} n={n}: {}", e.message),
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    files.push(("sweep_index.csv".into(), index.to_bytes()));
    Ok(Outcome { files, failure: worst })
}
