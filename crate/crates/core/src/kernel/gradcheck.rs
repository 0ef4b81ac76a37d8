//! Central finite-difference check of tape gradients.

use rayon::prelude::*;

use super::{ParamId, ParamStore, Tape, Var};

/// Denominator floor for the relative error; entries whose analytic and
/// numeric values are both below it are compared in absolute terms.
pub const REL_ERR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Compares the reverse-sweep gradient of `loss` against central differences
/// with step `h` for every scalar entry of every parameter in `store`.
pub fn check<E, F>(store: &ParamStore, h: f64, loss: F) -> Result<GradCheckReport, E>
where
    E: Send,
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, E> + Sync,
{
    let mut tape = Tape::new();
    let root = loss(&mut tape, store)?;
    let grads = tape.backward(root).expect("scalar loss");

    let entries: Vec<(ParamId, usize)> = store
        .iter()
        .flat_map(|(id, _, t)| (0..t.len()).map(move |i| (id, i)))
        .collect();

    let eval = |s: &ParamStore| -> Result<f64, E> {
        let mut tape = Tape::new();
        let r = loss(&mut tape, s)?;
        Ok(tape.value(r).item())
    };

    let results: Vec<Result<(ParamId, usize, f64, f64), E>> = entries
        .par_iter()
        .map(|&(id, i)| {
            let mut s = store.clone();
            let x0 = s.get(id).data()[i];
            s.get_mut(id).data_mut()[i] = x0 + h;
            let up = eval(&s)?;
            s.get_mut(id).data_mut()[i] = x0 - h;
            let down = eval(&s)?;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[i]);
            Ok((id, i, analytic, numeric))
        })
        .collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for r in results {
        let (id, i, a, n) = r?;
        report.checked += 1;
        let e = relative_error(a, n);
        if e > report.max_rel_err || report.worst.is_none() {
            report.max_rel_err = report.max_rel_err.max(e);
            if e >= report.max_rel_err {
                report.worst = Some((store.name(id).to_string(), i));
                report.analytic = a;
                report.numeric = n;
            }
        }
    }
    Ok(report)
}
