use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Renders one row per frame: the frame index followed by measured, prior
/// and reconstructed values for each feature.
pub fn plot_data_text(measured: &Tensor, prior: &Tensor, reconstructed: &Tensor, names: &[String]) -> Result<String> {
    let f = names.len();
    for (what, t) in [("measured", measured), ("prior", prior), ("reconstructed", reconstructed)] {
        if t.cols() < f || t.rows() != measured.rows() {
            return Err(Error::shape(format!(
                "{what} is {:?}; expected {} rows and at least {f} columns",
                t.shape(),
                measured.rows()
            )));
        }
    }
    let mut s = String::from("frame");
    for n in names {
        let _ = write!(s, "\tmeasured_{n}\tprior_{n}\treconstructed_{n}");
    }
    s.push('\n');
    for t in 0..measured.rows() {
        let _ = write!(s, "{t}");
        for d in 0..f {
            let _ = write!(s, "\t{}\t{}\t{}", measured.get(t, d), prior.get(t, d), reconstructed.get(t, d));
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn emit_plot_data(
    measured: &Tensor,
    prior: &Tensor,
    reconstructed: &Tensor,
    names: &[String],
    path: &Path,
) -> Result<()> {
    let text = plot_data_text(measured, prior, reconstructed, names)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
