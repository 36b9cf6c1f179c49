use layoutminer_core::script::{Action, SessionScript};
use layoutminer_core::{CropRegion, Pose, Quaternion, ScenarioKey};
use rand::Rng;

/// Knobs for [`random_script`].
#[derive(Debug, Clone)]
pub struct ScriptShape {
    pub min_widgets: usize,
    pub max_widgets: usize,
    /// Chance of one or more `adjust_last` steps after a placement.
    pub adjust_prob: f64,
    /// Chance of re-selecting an earlier widget after a placement.
    pub reselect_prob: f64,
    pub pose_sample_prob: f64,
    /// Widgets share screenshots drawn from this many aliases.
    pub screenshots: usize,
}

impl Default for ScriptShape {
    fn default() -> Self {
        Self {
            min_widgets: 5,
            max_widgets: 40,
            adjust_prob: 0.4,
            reselect_prob: 0.3,
            pose_sample_prob: 0.3,
            screenshots: 6,
        }
    }
}

fn random_pose(rng: &mut impl Rng) -> Pose {
    let q = loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            break q.normalized();
        }
    };
    Pose::new(
        [
            rng.random_range(-3.0..3.0),
            rng.random_range(0.3..2.5),
            rng.random_range(-3.0..3.0),
        ],
        q,
    )
}

fn random_crop(rng: &mut impl Rng) -> CropRegion {
    if rng.random_bool(0.5) {
        return CropRegion::FULL;
    }
    let x0 = rng.random_range(0.0..0.8);
    let y0 = rng.random_range(0.0..0.8);
    let x1 = rng.random_range(x0 + 0.05..=1.0);
    let y1 = rng.random_range(y0 + 0.05..=1.0);
    CropRegion::new(x0, y0, x1, y1).expect("bounds chosen in range")
}

/// A valid placement session: every widget is created, then placed, with
/// adjustments, re-selections and pose samples interleaved at random.
pub fn random_script(
    rng: &mut impl Rng,
    scenario: ScenarioKey,
    shape: &ScriptShape,
) -> SessionScript {
    let n = rng.random_range(shape.min_widgets..=shape.max_widgets);
    let mut s = SessionScript::new(scenario);
    let mut t = 0u64;
    let mut tick = |rng: &mut dyn rand::RngCore| {
        t += rng.random_range(5..400);
        t
    };
    for i in 0..n {
        let alias = format!("w{i}");
        let shot = format!("shot{}", rng.random_range(0..shape.screenshots.max(1)));
        s.push(
            tick(rng),
            Action::CreateWidget {
                widget: alias.clone(),
                screenshot: Some(shot),
                crop: Some(random_crop(rng)),
            },
        );
        s.push(
            tick(rng),
            Action::Place {
                widget: alias,
                pose: random_pose(rng),
            },
        );
        while rng.random_bool(shape.adjust_prob) {
            s.push(
                tick(rng),
                Action::AdjustLast {
                    pose: random_pose(rng),
                },
            );
        }
        if i > 0 && rng.random_bool(shape.reselect_prob) {
            let target = format!("w{}", rng.random_range(0..=i));
            s.push(
                tick(rng),
                Action::Reselect {
                    widget: target,
                    pose: random_pose(rng),
                },
            );
        }
        if rng.random_bool(shape.pose_sample_prob) {
            s.push(
                tick(rng),
                Action::PoseSample {
                    pose: random_pose(rng),
                },
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn generated_scripts_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = ScriptShape::default();
        for _ in 0..200 {
            let s = random_script(&mut rng, ScenarioKey::new("P", "e", "t").unwrap(), &shape);
            s.validate().unwrap();
            let creates = s
                .steps
                .iter()
                .filter(|st| st.action.name() == "create_widget")
                .count();
            assert!((5..=40).contains(&creates));
            for st in &s.steps {
                if let Action::Place { pose, .. }
                | Action::AdjustLast { pose }
                | Action::Reselect { pose, .. } = &st.action
                {
                    pose.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let gen = |seed| {
            random_script(
                &mut ChaCha8Rng::seed_from_u64(seed),
                ScenarioKey::new("P", "e", "t").unwrap(),
                &ScriptShape::default(),
            )
        };
        assert_eq!(gen(3), gen(3));
        assert_ne!(gen(3), gen(4));
    }
}
