//! The `converge` command.

use gsa_core::converge::{median_errors, rows_table, ConvergenceStudy, ErrorMetric, Reference};
use gsa_core::io::{Cell, Table};
use gsa_core::{builtin_truth, Method, ModelHandle};

use crate::error::{CliError, CliResult};
use crate::run::RunOutput;
use crate::settings::Settings;
use crate::source::resolve;

pub fn converge(s: &Settings) -> CliResult<RunOutput> {
    let methods: Vec<Method> = s.list("methods")?.unwrap_or_else(|| vec![Method::Sobol]);
    let n_grid: Vec<usize> = s.list("n-grid")?.ok_or_else(|| CliError::usage("--n-grid is required"))?;
    let replicates = s.get_or("replicates", 20usize)?;
    let metric: ErrorMetric = s.get_or("metric", ErrorMetric::SumAbsRounded)?;
    let seed = s.get_or("seed", 0u64)?;
    s.str("out")?;
    let src = resolve(s)?;
    if src.is_given_data() {
        return Err(CliError::usage("convergence studies need a model that accepts new points, not --data"));
    }
    let model = src.require_model("converge")?;
    let space = src.require_space("converge")?;
    let reference = match s.str("reference")? {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read reference {path}: {e}")))?;
            Reference::from_csv(&text)?
        }
        None => match model {
            ModelHandle::Builtin(b) => (&builtin_truth(b, space)?).into(),
            _ => return Err(CliError::usage("non-builtin models need --reference")),
        },
    };
    s.finish("converge")?;
    let study = ConvergenceStudy { methods, n_grid, replicates, metric, seed };
    let rows = study.run(model, space, &reference)?;
    let eval_count = rows
        .iter()
        .filter(|r| r.index != "total")
        .map(|r| r.eval_count)
        .sum();
    let mut summary = Table::new(["method", "index", "n", "median_error"]);
    for (m, index, n, e) in median_errors(&rows) {
        summary.push(vec![m.as_str().into(), index.into(), n.into(), Cell::Num(e)]);
    }
    Ok(RunOutput { tables: vec![("errors".into(), rows_table(&rows, metric)), ("summary".into(), summary)], eval_count })
}
