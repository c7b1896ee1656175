//! Pyramid checkpoints: one NDT file per level per class plus a `manifest.txt`.
//!
//! ```text
//! ckpt/
//!   manifest.txt          resolutions=1,2,4  active_count=2  iteration=400  classes=3
//!   class_000/level_00.ndt
//!   class_000/level_01.ndt
//!   ...
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgparam::PyramidImage;
use crate::numcore::ndt;

pub fn save_pyramids(dir: &Path, pyramids: &[PyramidImage], iteration: usize) -> Result<()> {
    let first = pyramids
        .first()
        .ok_or_else(|| Error::invalid("no pyramids to checkpoint"))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let resolutions: Vec<String> = first.resolutions().iter().map(|r| r.to_string()).collect();
    let manifest = format!(
        "resolutions={}\nactive_count={}\niteration={}\nclasses={}\n",
        resolutions.join(","),
        first.active_count(),
        iteration,
        pyramids.len()
    );
    for (c, p) in pyramids.iter().enumerate() {
        let cdir = dir.join(format!("class_{c:03}"));
        fs::create_dir_all(&cdir).map_err(|e| Error::io(&cdir, e))?;
        for (i, level) in p.levels().iter().enumerate() {
            ndt::write_f64(cdir.join(format!("level_{i:02}.ndt")), level)?;
        }
    }
    let mpath = dir.join("manifest.txt");
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))
}

pub fn load_pyramids(dir: &Path) -> Result<(Vec<PyramidImage>, usize)> {
    let mpath = dir.join("manifest.txt");
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let field = |key: &str| -> Result<&str> {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::format(&mpath, format!("missing `{key}`")))
    };
    let parse = |key: &str| -> Result<usize> {
        field(key)?
            .trim()
            .parse()
            .map_err(|_| Error::format(&mpath, format!("bad `{key}`")))
    };
    let levels = field("resolutions")?.split(',').count();
    let active = parse("active_count")?;
    let iteration = parse("iteration")?;
    let classes = parse("classes")?;
    let pyramids = (0..classes)
        .map(|c| {
            let cdir = dir.join(format!("class_{c:03}"));
            let lv = (0..levels)
                .map(|i| ndt::read_f64(cdir.join(format!("level_{i:02}.ndt"))))
                .collect::<Result<Vec<_>>>()?;
            PyramidImage::from_levels(lv, active)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pyramids, iteration))
}
