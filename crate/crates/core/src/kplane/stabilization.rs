use crate::error::{Error, Result};

/// Shortest post-disturbance series the detector accepts.
pub const MIN_SERIES: usize = 20;

const BAND: f64 = 0.10;
const WINDOW: usize = 3;
const HOLD: usize = 3;

/// Intervals until a per-interval distortion-gap series settles after a disturbance.
///
/// The steady level is the mean of the final quarter of `series[disturbance..]`. The
/// result is the first 1-based interval `k` after the disturbance whose trailing 3-interval
/// mean, and the next two, all lie within 10% of that level; `None` if that never happens.
/// Near the disturbance the trailing window is shortened to the intervals available.
pub fn stabilization_time(series: &[f64], disturbance: usize) -> Result<Option<usize>> {
    let post = series.get(disturbance..).unwrap_or(&[]);
    if post.len() < MIN_SERIES {
        return Err(Error::Measurement(format!(
            "{} intervals after the disturbance, need at least {MIN_SERIES}",
            post.len()
        )));
    }
    if post.iter().any(|v| !v.is_finite()) {
        return Err(Error::Measurement("distortion gap series contains non-finite values".into()));
    }
    let tail = post.len().div_ceil(4);
    let steady = post[post.len() - tail..].iter().sum::<f64>() / tail as f64;
    let band = (BAND * steady.abs()).max(1e-12);
    let inside: Vec<bool> = (0..post.len())
        .map(|k| {
            let w = &post[(k + 1).saturating_sub(WINDOW)..=k];
            let rolling = w.iter().sum::<f64>() / w.len() as f64;
            (rolling - steady).abs() <= band
        })
        .collect();
    Ok(inside.windows(HOLD).position(|w| w.iter().all(|&b| b)).map(|k| k + 1))
}
