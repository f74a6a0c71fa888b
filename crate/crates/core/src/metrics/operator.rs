//! Scripted stand-in for a human annotator.
//!
//! Each operator action (a click or a refresh) takes `action_interval_ms`;
//! navigation is instantaneous. Clicks land on the fixture's ground truth,
//! perturbed by seeded Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::metrics::{AnnotationStyle, ClickMode, Presentation, SyntheticFixture};
use crate::session::{JumpKind, ManualClock, Session};
use crate::store::SessionFile;

/// Which frames the operator annotates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Every frame, in the style's presentation order.
    EveryFrame,
    /// The listed frames, then a track refresh.
    Keyframes { frames: Vec<usize> },
    /// Every `every`-th frame plus the last one, then a track refresh.
    Stride { every: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorPolicy {
    pub schedule: Schedule,
    /// 4 for extreme clicking, 1 otherwise.
    pub clicks_per_frame: usize,
    pub action_interval_ms: u64,
    /// Standard deviation of click noise, normalized units.
    #[serde(default)]
    pub noise_sigma: f64,
}

impl OperatorPolicy {
    /// One action per second on every frame.
    pub fn every_frame(style: AnnotationStyle) -> Self {
        OperatorPolicy {
            schedule: Schedule::EveryFrame,
            clicks_per_frame: clicks_for(style),
            action_interval_ms: 1000,
            noise_sigma: 0.0,
        }
    }

    pub fn keyframes(frames: Vec<usize>) -> Self {
        OperatorPolicy {
            schedule: Schedule::Keyframes { frames },
            clicks_per_frame: 1,
            action_interval_ms: 1000,
            noise_sigma: 0.0,
        }
    }

    fn check(&self, style: AnnotationStyle, frame_count: usize) -> Result<()> {
        let needed = clicks_for(style);
        if self.clicks_per_frame != needed {
            return Err(Error::Policy(format!(
                "style '{style}' needs {needed} click(s) per frame, policy scripts {}",
                self.clicks_per_frame
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Policy(format!("noise sigma {} is invalid", self.noise_sigma)));
        }
        match &self.schedule {
            Schedule::EveryFrame => Ok(()),
            _ if !style.flags().autotrack => Err(Error::Policy(format!(
                "style '{style}' has no autotrack to label frames the schedule skips"
            ))),
            Schedule::Keyframes { frames } => {
                if frames.is_empty() {
                    return Err(Error::Policy("keyframe schedule is empty".into()));
                }
                if let Some(f) = frames.iter().find(|&&f| f >= frame_count) {
                    return Err(Error::Policy(format!("keyframe {f} beyond {frame_count} frames")));
                }
                Ok(())
            }
            Schedule::Stride { every } if *every == 0 => Err(Error::Policy("stride of 0".into())),
            Schedule::Stride { .. } => Ok(()),
        }
    }

    fn frames(&self, order: &[usize], frame_count: usize) -> Vec<usize> {
        match &self.schedule {
            Schedule::EveryFrame if !order.is_empty() => order.to_vec(),
            Schedule::EveryFrame => (0..frame_count).collect(),
            Schedule::Keyframes { frames } => {
                let mut f = frames.clone();
                f.sort_unstable();
                f.dedup();
                f
            }
            Schedule::Stride { every } => {
                let mut f: Vec<usize> = (0..frame_count).step_by(*every).collect();
                if f.last() != Some(&(frame_count - 1)) {
                    f.push(frame_count - 1);
                }
                f
            }
        }
    }
}

fn clicks_for(style: AnnotationStyle) -> usize {
    match style.click_mode() {
        ClickMode::XClick => 4,
        ClickMode::Point => 1,
    }
}

/// Runs the scripted operator against a live session on `fixture` and
/// returns the resulting session file.
pub fn simulate_operator(
    fixture: &SyntheticFixture,
    style: AnnotationStyle,
    policy: &OperatorPolicy,
    seed: u64,
    cache_ref: &str,
) -> Result<SessionFile> {
    let n = fixture.frame_count();
    policy.check(style, n)?;
    let mut session = Session::with_clock(style, fixture.cache.clone(), cache_ref, seed, ManualClock::default());
    let noise = Normal::new(0.0, policy.noise_sigma).map_err(|e| Error::Policy(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |p: Point<f64>| {
        if policy.noise_sigma == 0.0 {
            p
        } else {
            Point::clamped(p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng))
        }
    };

    let frames = policy.frames(&session.file().presentation_order, n);
    for (i, &frame) in frames.iter().enumerate() {
        if session.current_frame() != frame {
            let kind = match style.presentation() {
                Presentation::RandomOrder => JumpKind::Random,
                Presentation::Timeline => JumpKind::Seek { frame },
            };
            let landed = session.jump(kind)?;
            if landed != frame {
                return Err(Error::Policy(format!(
                    "step {i}: navigation reached frame {landed}, schedule wants {frame}"
                )));
            }
        }
        let truth = &fixture.ground_truth[frame];
        let clicks: Vec<Point<f64>> = match style.click_mode() {
            ClickMode::Point => vec![truth.point],
            ClickMode::XClick => {
                let b = truth.bbox.expect("fixture truth carries boxes");
                let c = b.center();
                vec![
                    Point { x: b.x_min, y: c.y },
                    Point { x: b.x_max, y: c.y },
                    Point { x: c.x, y: b.y_min },
                    Point { x: c.x, y: b.y_max },
                ]
            }
        };
        for q in clicks {
            session.clock_mut().advance(policy.action_interval_ms);
            session.click(frame, jitter(q))?;
        }
    }
    if style.flags().autotrack {
        session.clock_mut().advance(policy.action_interval_ms);
        session.refresh()?;
    }
    Ok(session.into_file())
}
