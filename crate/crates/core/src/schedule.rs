//! Per-epoch step-decay schedules for the learning rate and for `p`.
//!
//! Epochs are 0-based and a decay takes effect *at* its milestone: with
//! milestones `[50, 100, 150]`, epoch 49 still sees the base value and epoch
//! 50 sees the first decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::check_p;

/// `base · factor^k`, where `k` counts milestones passed.
///
/// When `1/factor` is a whole number (0.1, 0.5, ...) the value is computed as
/// `base / (1/factor)^k`, which keeps decimal schedules like 0.1 → 0.01 → 1e-3
/// exact instead of drifting by an ulp per decay.
fn decayed(base: f64, factor: f64, k: usize) -> f64 {
    if k == 0 || factor == 1.0 {
        return base;
    }
    let k = k as i32;
    let inv = 1.0 / factor;
    if inv.fract() == 0.0 && inv.powi(k).is_finite() {
        base / inv.powi(k)
    } else {
        base * factor.powi(k)
    }
}

fn check_milestones(milestones: &[usize]) -> Result<()> {
    if milestones.contains(&0) {
        return Err(Error::config("milestones must be >= 1"));
    }
    if milestones.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!(
            "milestones must be strictly increasing, got {milestones:?}"
        )));
    }
    Ok(())
}

fn check_factor(factor: f64) -> Result<()> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::config(format!(
            "decay factor must be in (0, 1], got {factor}"
        )));
    }
    Ok(())
}

fn passed(milestones: &[usize], epoch: usize) -> usize {
    milestones.partition_point(|&m| m <= epoch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDecaySchedule {
    pub base: f64,
    pub factor: f64,
    pub milestones: Vec<usize>,
}

impl StepDecaySchedule {
    pub fn new(base: f64, factor: f64, milestones: Vec<usize>) -> Result<Self> {
        let s = Self {
            base,
            factor,
            milestones,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(base: f64) -> Self {
        Self {
            base,
            factor: 1.0,
            milestones: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 0.0 && self.base.is_finite()) {
            return Err(Error::config(format!(
                "schedule base must be > 0, got {}",
                self.base
            )));
        }
        check_factor(self.factor)?;
        check_milestones(&self.milestones)
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        decayed(self.base, self.factor, passed(&self.milestones, epoch))
    }
}

pub fn lr_at(s: &StepDecaySchedule, epoch: usize) -> f64 {
    s.lr_at(epoch)
}

/// Milestones at 1/4, 1/2 and 3/4 of the run, rounded; `[50, 100, 150]` for
/// 200 epochs and `[15, 30, 45]` for 60. Milestones that land on 0 or at/after
/// the last epoch are dropped.
pub fn scaled_milestones(epochs: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [0.25, 0.5, 0.75]
        .iter()
        .map(|f| (epochs as f64 * f).round() as usize)
        .filter(|&m| m >= 1 && m < epochs)
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PSchedule {
    Constant {
        p_start: f64,
    },
    /// `max(p_start · factor^k, p_end)`.
    StepDecay {
        p_start: f64,
        p_end: f64,
        factor: f64,
        milestones: Vec<usize>,
    },
    /// Straight line from `p_start` at epoch 0 to `p_end` at `total_epochs`, then flat.
    Linear {
        p_start: f64,
        p_end: f64,
        total_epochs: usize,
    },
}

impl PSchedule {
    pub fn constant(p: f64) -> Self {
        PSchedule::Constant { p_start: p }
    }

    pub fn p_start(&self) -> f64 {
        match *self {
            PSchedule::Constant { p_start }
            | PSchedule::StepDecay { p_start, .. }
            | PSchedule::Linear { p_start, .. } => p_start,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, PSchedule::Constant { .. })
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p_start())?;
        match self {
            PSchedule::Constant { .. } => Ok(()),
            PSchedule::StepDecay {
                p_start,
                p_end,
                factor,
                milestones,
            } => {
                check_p_end(*p_start, *p_end)?;
                check_factor(*factor)?;
                check_milestones(milestones)
            }
            PSchedule::Linear {
                p_start,
                p_end,
                total_epochs,
            } => {
                check_p_end(*p_start, *p_end)?;
                if *total_epochs == 0 {
                    return Err(Error::config("linear p schedule needs total_epochs >= 1"));
                }
                Ok(())
            }
        }
    }

    pub fn p_at(&self, epoch: usize) -> f64 {
        match self {
            PSchedule::Constant { p_start } => *p_start,
            PSchedule::StepDecay {
                p_start,
                p_end,
                factor,
                milestones,
            } => decayed(*p_start, *factor, passed(milestones, epoch)).max(*p_end),
            PSchedule::Linear {
                p_start,
                p_end,
                total_epochs,
            } => {
                if epoch >= *total_epochs {
                    *p_end
                } else {
                    let frac = epoch as f64 / *total_epochs as f64;
                    (p_start + (p_end - p_start) * frac).max(*p_end)
                }
            }
        }
    }
}

fn check_p_end(p_start: f64, p_end: f64) -> Result<()> {
    if !(p_end >= 0.0 && p_end <= p_start) {
        return Err(Error::config(format!(
            "p_end must be in [0, p_start = {p_start}], got {p_end}"
        )));
    }
    Ok(())
}

pub fn p_at(s: &PSchedule, epoch: usize) -> f64 {
    s.p_at(epoch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lr_decays_at_every_fiftieth_epoch() {
        let s = StepDecaySchedule::new(0.1, 0.1, vec![50, 100, 150]).unwrap();
        assert_eq!(lr_at(&s, 0), 0.1);
        assert_eq!(lr_at(&s, 49), 0.1);
        assert_eq!(lr_at(&s, 50), 0.01);
        assert_eq!(lr_at(&s, 99), 0.01);
        assert_eq!(lr_at(&s, 100), 1e-3);
        assert_eq!(lr_at(&s, 150), 1e-4);
        assert_eq!(lr_at(&s, 199), 1e-4);
    }

    #[test]
    fn lr_decays_per_thirty_epochs() {
        let s = StepDecaySchedule::new(0.1, 0.1, vec![30, 60, 90]).unwrap();
        assert_eq!(lr_at(&s, 29), 0.1);
        assert_eq!(lr_at(&s, 30), 0.01);
        assert_eq!(lr_at(&s, 60), 1e-3);
        assert_eq!(lr_at(&s, 90), 1e-4);
    }

    #[test]
    fn unit_factor_is_constant() {
        let s = StepDecaySchedule::new(0.3, 1.0, vec![1, 2, 3]).unwrap();
        assert!((0..10).all(|e| lr_at(&s, e) == 0.3));
    }

    #[test]
    fn non_decimal_factor_falls_back_to_multiplication() {
        let s = StepDecaySchedule::new(1.0, 0.3, vec![1, 2]).unwrap();
        assert_eq!(s.lr_at(2), 0.3f64.powi(2));
    }

    #[test]
    fn schedule_validation() {
        assert!(StepDecaySchedule::new(0.1, 0.1, vec![30, 30]).is_err());
        assert!(StepDecaySchedule::new(0.1, 0.1, vec![0]).is_err());
        assert!(StepDecaySchedule::new(0.1, 1.5, vec![]).is_err());
        assert!(StepDecaySchedule::new(0.0, 0.1, vec![]).is_err());
        assert!(PSchedule::constant(0.6).validate().is_err());
        assert!(PSchedule::Linear {
            p_start: 0.1,
            p_end: 0.2,
            total_epochs: 5
        }
        .validate()
        .is_err());
    }

    #[test]
    fn p_schedule_examples() {
        let c = PSchedule::constant(0.125);
        assert!((0..300).all(|e| p_at(&c, e) == 0.125));

        let lin = PSchedule::Linear {
            p_start: 0.5,
            p_end: 0.0,
            total_epochs: 100,
        };
        assert_eq!(p_at(&lin, 0), 0.5);
        assert_eq!(p_at(&lin, 50), 0.25);
        assert_eq!(p_at(&lin, 100), 0.0);
        assert_eq!(p_at(&lin, 150), 0.0);

        let step = PSchedule::StepDecay {
            p_start: 0.25,
            p_end: 0.0625,
            factor: 0.5,
            milestones: vec![30, 60],
        };
        assert_eq!(p_at(&step, 29), 0.25);
        assert_eq!(p_at(&step, 30), 0.125);
        assert_eq!(p_at(&step, 60), 0.0625);
        assert_eq!(p_at(&step, 500), 0.0625);
    }

    #[test]
    fn scaled_milestones_match_protocols() {
        assert_eq!(scaled_milestones(200), vec![50, 100, 150]);
        assert_eq!(scaled_milestones(60), vec![15, 30, 45]);
        assert_eq!(scaled_milestones(120), vec![30, 60, 90]);
        assert_eq!(scaled_milestones(1), Vec::<usize>::new());
    }

    fn milestones() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::btree_set(1usize..300, 0..6).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn lr_is_positive_and_non_increasing(
            base in 1e-6f64..10.0, factor in 0.01f64..=1.0, ms in milestones()
        ) {
            let s = StepDecaySchedule::new(base, factor, ms).unwrap();
            prop_assert_eq!(s.lr_at(0), base);
            let mut prev = f64::INFINITY;
            for e in 0..320 {
                let v = s.lr_at(e);
                prop_assert!(v > 0.0 && v <= prev);
                prev = v;
            }
        }

        #[test]
        fn p_stays_in_range_and_non_increasing(
            p_start in 0.0f64..=0.5, frac in 0.0f64..=1.0, factor in 0.05f64..=1.0,
            ms in milestones(), total in 1usize..200, mode in 0u8..3
        ) {
            let p_end = p_start * frac;
            let s = match mode {
                0 => PSchedule::constant(p_start),
                1 => PSchedule::StepDecay { p_start, p_end, factor, milestones: ms },
                _ => PSchedule::Linear { p_start, p_end, total_epochs: total },
            };
            s.validate().unwrap();
            let mut prev = f64::INFINITY;
            for e in 0..320 {
                let p = s.p_at(e);
                prop_assert!((0.0..=0.5).contains(&p));
                prop_assert!(p <= prev);
                prev = p;
            }
        }
    }
}
