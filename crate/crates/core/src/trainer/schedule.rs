use crate::{Error, Result};

/// Adversarial weight schedule: zero through the warm-up epochs, then a
/// linear ramp reaching `final_value` at the last epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub warmup_epochs: usize,
    pub total_epochs: usize,
    pub final_value: f64,
}

impl LambdaSchedule {
    pub fn new(warmup_epochs: usize, total_epochs: usize, final_value: f64) -> Result<Self> {
        if warmup_epochs >= total_epochs {
            return Err(Error::InvalidArgument(format!(
                "warm-up ({warmup_epochs}) must be shorter than training ({total_epochs} epochs)"
            )));
        }
        if !(final_value >= 0.0 && final_value.is_finite()) {
            return Err(Error::InvalidArgument("final lambda must be finite and non-negative".into()));
        }
        Ok(LambdaSchedule {
            warmup_epochs,
            total_epochs,
            final_value,
        })
    }

    /// λ for a 1-based epoch.
    pub fn lambda_at(&self, epoch: usize) -> Result<f64> {
        if epoch == 0 || epoch > self.total_epochs {
            return Err(Error::InvalidArgument(format!(
                "epoch {epoch} outside 1..={}",
                self.total_epochs
            )));
        }
        if epoch <= self.warmup_epochs {
            return Ok(0.0);
        }
        let progress = (epoch - self.warmup_epochs) as f64 / (self.total_epochs - self.warmup_epochs) as f64;
        Ok(self.final_value * progress)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ramp_points() {
        let s = LambdaSchedule::new(10, 100, 1.0).unwrap();
        assert_eq!(s.lambda_at(5).unwrap(), 0.0);
        assert_eq!(s.lambda_at(10).unwrap(), 0.0);
        assert_eq!(s.lambda_at(55).unwrap(), 0.5);
        assert_eq!(s.lambda_at(100).unwrap(), 1.0);
        assert!(s.lambda_at(0).is_err());
        assert!(s.lambda_at(101).is_err());
    }

    #[test]
    fn nondecreasing() {
        let s = LambdaSchedule::new(3, 17, 0.8).unwrap();
        let values: Vec<f64> = (1..=17).map(|e| s.lambda_at(e).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*values.last().unwrap(), 0.8);
    }

    #[test]
    fn warmup_must_be_shorter() {
        assert!(LambdaSchedule::new(10, 10, 1.0).is_err());
    }
}
