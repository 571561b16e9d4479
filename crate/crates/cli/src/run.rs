//! One analysis per invocation.

use gsa_core::ale::{ale_first_order, DEFAULT_BINS};
use gsa_core::curve::curves_table;
use gsa_core::delta::{conditional_density_curves, delta_given_data, DEFAULT_GRID};
use gsa_core::dgsm::{dgsm, DEFAULT_FD_STEP};
use gsa_core::doe::{dsd, dsd_fit_with, dsd_variance_explained, DsdFitOptions};
use gsa_core::io::Table;
use gsa_core::morris::{morris_analyze, morris_design};
use gsa_core::shapley::{shapley_effects, ShapleyMode, ShapleyOptions};
use gsa_core::variance::{fast_indices, main_effect_curves, pick_freeze_design, sobol_estimate_with, BootstrapOptions, FastOptions};
use gsa_core::{sample, Counted, DesignMatrix, Method, Model, Scheme};
use ndarray::s;

use crate::error::{CliError, CliResult};
use crate::settings::Settings;
use crate::source::{resolve, Source};

pub struct RunOutput {
    pub tables: Vec<(String, Table)>,
    pub eval_count: u64,
}

fn input_index(s: &Settings, p: usize) -> CliResult<Option<usize>> {
    match s.get::<usize>("input")? {
        None => Ok(None),
        Some(i) if i >= 1 && i <= p => Ok(Some(i - 1)),
        Some(i) => Err(CliError::usage(format!("--input {i} is outside 1..={p}"))),
    }
}

fn positive(s: &Settings, key: &str, default: usize) -> CliResult<usize> {
    let v = s.get_or(key, default)?;
    if v == 0 {
        return Err(CliError::usage(format!("`{key}` must be at least 1")));
    }
    Ok(v)
}

pub fn run(s: &Settings) -> CliResult<RunOutput> {
    let method: Method = s
        .str("method")?
        .ok_or_else(|| CliError::usage("--method is required"))?
        .parse()?;
    let seed: u64 = s.get_or("seed", 0)?;
    s.str("out")?;
    let src = resolve(s)?;
    let out = dispatch(method, s, &src, seed)?;
    s.finish(&format!("method {method}"))?;
    Ok(out)
}

fn dispatch(method: Method, s: &Settings, src: &Source, seed: u64) -> CliResult<RunOutput> {
    let mut tables = Vec::new();
    let name = method.as_str();
    // Given-data lookups are not model runs.
    let counted_model = src.model.as_ref().map(|m| m as &dyn Model);
    let evals = |c: &Counted<'_>| if src.is_given_data() { 0 } else { c.eval_count() };
    let eval_count = match method {
        Method::Sobol => {
            let n = s.get_or("n", 1024usize)?;
            let resamples = s.get_or("resamples", 500usize)?;
            let bins: Option<usize> = s.get("bins")?;
            let model = src.require_model(name)?;
            let space = src.require_space(name)?;
            if let Some(b) = bins {
                gsa_core::variance::check_bins(n, b)?;
            }
            let c = Counted::new(model);
            let design = pick_freeze_design(space, n, seed)?;
            let y = c.evaluate(&design.x)?;
            let res = sobol_estimate_with(&design, &y, BootstrapOptions { resamples, seed })?;
            tables.push(("indices".into(), res.to_table()));
            if let Some(b) = bins {
                let xa = design.x.slice(s![..n, ..]).to_owned();
                tables.push(("curves".into(), curves_table(&main_effect_curves(&xa, &y[..n], space, b)?)));
            }
            evals(&c)
        }
        Method::Fast => {
            let opts = FastOptions { n_per_input: s.get_or("n", 1000)?, m: positive(s, "m", 4)?, seed };
            let c = Counted::new(src.require_model(name)?);
            let res = fast_indices(&c, src.require_space(name)?, opts)?;
            tables.push(("indices".into(), res.to_table()));
            evals(&c)
        }
        Method::Morris => {
            let r = s.get_or("r", 10usize)?;
            let k = s.get_or("levels", 4usize)?;
            let steps = s.get_or("steps", (k / 2) as f64)?;
            let space = src.require_space(name)?;
            let design = morris_design(space.dim(), k, steps, r, seed)?;
            let model = src.require_model(name)?;
            let x = design.to_space(space)?;
            let c = Counted::new(model);
            let y = c.evaluate(&x)?;
            let res = morris_analyze(&design, &y)?;
            let natural = DesignMatrix { x, origin: design.design.origin.clone() };
            tables.push(("design".into(), natural.to_table()));
            tables.push(("indices".into(), res.to_table()));
            evals(&c)
        }
        Method::Shapley => {
            let d = ShapleyOptions::default();
            let mode = match s.str("shapley-mode")? {
                None | Some("auto") => ShapleyMode::Auto,
                Some("permutation") => ShapleyMode::Permutation,
                Some("exact") => ShapleyMode::Exact,
                Some(o) => return Err(CliError::usage(format!("unknown shapley mode `{o}` (auto | permutation | exact)"))),
            };
            let opts = ShapleyOptions {
                n_perm: positive(s, "n-perm", d.n_perm)?,
                n_outer: positive(s, "n-outer", d.n_outer)?,
                n_inner: positive(s, "n-inner", d.n_inner)?,
                n_var: positive(s, "n-var", d.n_var)?,
                normalized: s.get_or("normalized", true)?,
                mode,
                seed,
            };
            let c = Counted::new(src.require_model(name)?);
            let res = shapley_effects(&c, src.require_space(name)?, opts)?;
            tables.push(("indices".into(), res.to_table()));
            evals(&c)
        }
        Method::Delta => {
            let partitions: Option<usize> = s.get("partitions")?;
            let slices = positive(s, "slices", 4)?;
            let (x, y, count) = match &src.data {
                Some(d) => {
                    if s.get::<usize>("n")?.is_some() {
                        return Err(CliError::usage("--n does not apply to given data"));
                    }
                    (d.x.clone(), d.y.clone(), 0)
                }
                None => {
                    let n = s.get_or("n", 1000usize)?;
                    let space = src.require_space(name)?;
                    let c = Counted::new(src.require_model(name)?);
                    let x = sample(space, n, seed, Scheme::Iid)?;
                    let y = c.evaluate(&x)?;
                    (x, y, c.eval_count())
                }
            };
            let res = delta_given_data(&x, &y, partitions)?;
            tables.push(("indices".into(), res.to_table()));
            if let Some(i) = input_index(s, x.ncols())? {
                tables.push(("curves".into(), curves_table(&conditional_density_curves(&x, &y, i, slices, DEFAULT_GRID)?)));
            }
            count
        }
        Method::Ale => {
            let bins = positive(s, "bins", DEFAULT_BINS)?;
            let model = src.require_model(name)?;
            let x = match &src.data {
                Some(d) => {
                    s.get::<usize>("n")?;
                    d.x.clone()
                }
                None => sample(src.require_space(name)?, s.get_or("n", 1000)?, seed, Scheme::Iid)?,
            };
            let which: Vec<usize> = match input_index(s, x.ncols())? {
                Some(i) => vec![i],
                None => (0..x.ncols()).collect(),
            };
            let c = Counted::new(model);
            let curves = which.iter().map(|&i| ale_first_order(&c, &x, i, bins)).collect::<gsa_core::Result<Vec<_>>>()?;
            tables.push(("curves".into(), curves_table(&curves)));
            evals(&c)
        }
        Method::Dgsm => {
            let n = s.get_or("n", 200usize)?;
            let fd = s.get_or("fd-step", DEFAULT_FD_STEP)?;
            let c = Counted::new(src.require_model(name)?);
            let res = dgsm(&c, src.require_space(name)?, n, fd, seed)?;
            tables.push(("indices".into(), res.to_table()));
            evals(&c)
        }
        Method::Dsd => {
            let fake = s.get_or("fake", 2usize)?;
            let d = DsdFitOptions::default();
            let opts = DsdFitOptions { alpha: s.get_or("alpha", d.alpha)?, alpha_even: s.get_or("alpha-even", d.alpha_even)? };
            let p = src.arity().ok_or_else(|| CliError::usage("dsd needs --p, --space or a model"))?;
            let design = dsd(p, fake, seed)?;
            tables.push(("design".into(), design.to_table(src.space.as_ref())?));
            match counted_model {
                None => 0,
                Some(model) => {
                    let x = match &src.space {
                        Some(space) => design.to_space(space)?,
                        None => design.coded(),
                    };
                    let c = Counted::new(model);
                    let y = c.evaluate(&x)?;
                    let fit = dsd_fit_with(&design, &y, opts)?;
                    tables.push(("fit".into(), fit.to_table()));
                    tables.push(("variance".into(), dsd_variance_explained(&fit, &y)?));
                    evals(&c)
                }
            }
        }
    };
    Ok(RunOutput { tables, eval_count })
}
