//! Encoder weight directories: `manifest.txt` naming the architecture and one NDT file per
//! parameter tensor.
//!
//! ```text
//! arch=conv_small
//! activation=tanh
//! input=3x32x32
//! feature_dim=16
//! param=conv1_w 8x3x3x3
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::builtin::{Activation, BuiltinEncoder, ConvSmall, Identity, Mlp, RandomProjection};
use super::Encoder;
use crate::error::{Error, Result};
use crate::numcore::{ndt, Tensor};

fn dims_str(d: &[usize]) -> String {
    d.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

fn parse_dims(s: &str) -> Option<Vec<usize>> {
    s.split('x').map(|v| v.parse().ok()).collect()
}

pub fn save_encoder(enc: &BuiltinEncoder, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!(
        "arch={}\ninput={}\nfeature_dim={}\n",
        enc.arch(),
        dims_str(enc.input_dims()),
        enc.feature_dim()
    );
    let params: Vec<(&str, &Tensor)> = match enc {
        BuiltinEncoder::Identity(_) => vec![],
        BuiltinEncoder::RandomProjection(e) => vec![("matrix", e.matrix())],
        BuiltinEncoder::Mlp(e) => {
            manifest.push_str(&format!("activation={}\n", e.activation));
            vec![("w1", &e.w1), ("b1", &e.b1), ("w2", &e.w2), ("b2", &e.b2)]
        }
        BuiltinEncoder::ConvSmall(e) => {
            manifest.push_str(&format!("activation={}\n", e.activation));
            vec![
                ("conv1_w", &e.conv1_w),
                ("conv1_b", &e.conv1_b),
                ("conv2_w", &e.conv2_w),
                ("conv2_b", &e.conv2_b),
                ("fc_w", &e.fc_w),
                ("fc_b", &e.fc_b),
            ]
        }
    };
    for (name, t) in params {
        manifest.push_str(&format!("param={name} {}\n", dims_str(t.dims())));
        ndt::write_f64(dir.join(format!("{name}.ndt")), t)?;
    }
    let mpath = dir.join("manifest.txt");
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))
}

pub fn load_encoder(dir: &Path) -> Result<BuiltinEncoder> {
    let mpath = dir.join("manifest.txt");
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let bad = |msg: String| Error::format(&mpath, msg);
    let mut fields = BTreeMap::new();
    let mut declared = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
        if k == "param" {
            let (name, d) = v
                .split_once(' ')
                .ok_or_else(|| bad(format!("malformed param line `{line}`")))?;
            let d = parse_dims(d).ok_or_else(|| bad(format!("bad dims in `{line}`")))?;
            declared.insert(name.to_string(), d);
        } else {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let field = |k: &str| fields.get(k).ok_or_else(|| bad(format!("missing `{k}`")));
    let input = parse_dims(field("input")?).ok_or_else(|| bad("bad input dims".into()))?;
    let feature_dim: usize = field("feature_dim")?
        .parse()
        .map_err(|_| bad("bad feature_dim".into()))?;
    let param = |name: &str| -> Result<Tensor> {
        let path = dir.join(format!("{name}.ndt"));
        let t = ndt::read_f64(&path)?;
        match declared.get(name) {
            Some(d) if d.as_slice() == t.dims() => Ok(t),
            Some(d) => Err(Error::format(
                &path,
                format!("dims {:?} disagree with manifest {d:?}", t.dims()),
            )),
            None => Err(bad(format!("parameter `{name}` not declared"))),
        }
    };
    let activation = || -> Result<Activation> { field("activation")?.parse() };
    let enc = match field("arch")?.as_str() {
        "identity" => BuiltinEncoder::Identity(Identity::new(input.iter().product())),
        "random_projection" => BuiltinEncoder::RandomProjection(RandomProjection::from_matrix(
            &input,
            param("matrix")?,
        )?),
        "mlp" => BuiltinEncoder::Mlp(Mlp::from_parts(
            &input,
            param("w1")?,
            param("b1")?,
            param("w2")?,
            param("b2")?,
            activation()?,
        )?),
        "conv_small" => {
            let input: [usize; 3] = input
                .clone()
                .try_into()
                .map_err(|_| bad("conv_small input must be C x H x W".into()))?;
            BuiltinEncoder::ConvSmall(ConvSmall::from_parts(
                input,
                param("conv1_w")?,
                param("conv1_b")?,
                param("conv2_w")?,
                param("conv2_b")?,
                param("fc_w")?,
                param("fc_b")?,
                activation()?,
            )?)
        }
        other => return Err(bad(format!("unknown arch `{other}`"))),
    };
    if enc.feature_dim() != feature_dim {
        return Err(bad(format!(
            "feature_dim {feature_dim} disagrees with weights ({})",
            enc.feature_dim()
        )));
    }
    Ok(enc)
}
