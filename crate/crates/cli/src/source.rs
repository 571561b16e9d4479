//! Resolve the model and input space from settings.

use std::collections::BTreeMap;
use std::path::Path;

use gsa_core::io::{read_given_data, GivenData};
use gsa_core::model::TableModel;
use gsa_core::{Builtin, ExternalModel, InputSpace, Model, ModelHandle};

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

pub struct Source {
    pub model: Option<ModelHandle>,
    pub space: Option<InputSpace>,
    /// Present in given-data mode.
    pub data: Option<GivenData>,
    /// Input files whose contents the run depends on.
    pub inputs: Vec<String>,
}

impl Source {
    pub fn arity(&self) -> Option<usize> {
        self.model.as_ref().map(|m| m.arity()).or(self.space.as_ref().map(|s| s.dim()))
    }

    pub fn require_model(&self, method: &str) -> CliResult<&ModelHandle> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::usage(format!("{method} needs a model: pass --model, --model-cmd or --data")))
    }

    pub fn require_space(&self, method: &str) -> CliResult<&InputSpace> {
        self.space
            .as_ref()
            .ok_or_else(|| CliError::usage(format!("{method} needs an input space: pass --space")))
    }

    pub fn is_given_data(&self) -> bool {
        self.data.is_some()
    }
}

fn parse_params(raw: &[String]) -> CliResult<BTreeMap<String, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("parameter `{item}` must look like name=v1,v2")))?;
        let vals = v
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("parameter `{k}`: `{s}` is not a number"))))
            .collect::<CliResult<Vec<f64>>>()?;
        if out.insert(k.trim().to_string(), vals).is_some() {
            return Err(CliError::usage(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

pub fn read_space(path: &Path) -> CliResult<InputSpace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read space {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid space {}: {e}", path.display())))
}

pub fn resolve(s: &Settings) -> CliResult<Source> {
    let builtin = s.str("model")?;
    let cmd = s.str("model-cmd")?;
    let data = s.str("data")?;
    let p: Option<usize> = s.get("p")?;
    let params = s.all("param");
    if [builtin.is_some(), cmd.is_some(), data.is_some()].iter().filter(|&&b| b).count() > 1 {
        return Err(CliError::usage("give at most one of --model, --model-cmd, --data"));
    }
    if !params.is_empty() && builtin.is_none() {
        return Err(CliError::usage("--param applies to builtin models only"));
    }
    let mut inputs = Vec::new();
    let space = match s.str("space")? {
        Some(path) => {
            inputs.push(path.to_string());
            Some(read_space(Path::new(path))?)
        }
        None => None,
    };
    let (model, data, default_space) = if let Some(name) = builtin {
        let b = Builtin::from_name(name, &parse_params(params)?)?;
        let sp = b.default_space();
        (Some(ModelHandle::Builtin(b)), None, Some(sp))
    } else if let Some(cmd) = cmd {
        let words = shlex::split(cmd).filter(|w| !w.is_empty()).ok_or_else(|| CliError::usage(format!("cannot split command `{cmd}`")))?;
        let p = p.or(space.as_ref().map(InputSpace::dim)).ok_or_else(|| CliError::usage("--model-cmd needs --p or --space"))?;
        let ext = ExternalModel::new(words[0].clone(), words[1..].to_vec(), p)?;
        (Some(ModelHandle::External(ext)), None, Some(InputSpace::uniform_cube(p)?))
    } else if let Some(path) = data {
        inputs.push(path.to_string());
        let d = read_given_data(Path::new(path))?;
        let t = TableModel::new(d.x.clone(), d.y.clone())?;
        (Some(ModelHandle::Table(t)), Some(d), None)
    } else {
        (None, None, p.map(InputSpace::uniform_cube).transpose()?)
    };
    let space = space.or(default_space);
    let src = Source { model, space, data, inputs };
    if let (Some(m), Some(sp)) = (&src.model, &src.space) {
        if m.arity() != sp.dim() {
            return Err(CliError::usage(format!("model takes {} inputs but the space has {}", m.arity(), sp.dim())));
        }
    }
    if let (Some(p), Some(a)) = (p, src.arity()) {
        if p != a {
            return Err(CliError::usage(format!("--p {p} disagrees with the model's {a} inputs")));
        }
    }
    Ok(src)
}
