use super::{LossKind, Network};
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

/// Largest relative disagreement between back-propagated gradients and
/// central finite differences over every parameter of `net`:
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn grad_check(
    net: &Network,
    loss: LossKind,
    input: &Tensor2D,
    target: &Tensor2D,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::validation("grad_check epsilon must be positive"));
    }
    let mut work = net.clone();
    work.zero_grad();
    work.forward(input)?;
    work.backward(loss, target)?;
    let analytic = work.gradients();

    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.parameter_mut(i).expect("index in range");
        *probe.parameter_mut(i).unwrap() = original + epsilon;
        let plus = loss.value(&probe.predict(input)?, target)?;
        *probe.parameter_mut(i).unwrap() = original - epsilon;
        let minus = loss.value(&probe.predict(input)?, target)?;
        *probe.parameter_mut(i).unwrap() = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let denom = a.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
