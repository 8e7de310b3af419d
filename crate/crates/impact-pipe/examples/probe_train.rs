use impact_pipe::dataset::{ClassWeights, LabeledEvent, SplitRole};
use impact_pipe::kinematics::{Label, LabelValue, ProcessedWindow, Unit};
use impact_pipe::mignet::{train, Architecture, HeadKind, MiGNetModel, TrainConfig};

fn mk(value: LabelValue, level: f64, id: usize) -> LabeledEvent {
    let data = vec![vec![level; 20]; 6];
    LabeledEvent {
        event_id: format!("c{id}"),
        window: ProcessedWindow {
            data,
            trigger_col: 5,
            channel_units: [Unit::G; 6],
            normalized: true,
        },
        label: Label::synthetic(value),
        split_role: SplitRole::Train,
    }
}

fn main() {
    let events: Vec<LabeledEvent> = (0..8)
        .map(|i| {
            if i % 2 == 0 {
                mk(LabelValue::TrueImpact, 0.8, i)
            } else {
                mk(LabelValue::NonContact, -0.6, i)
            }
        })
        .collect();
    let arch = Architecture {
        conv1d: vec![(4, 5), (4, 3)],
        conv2d: vec![(4, 3)],
        head: HeadKind::Gap,
    };
    for (epochs, lr) in [(30usize, 0.01f64), (100, 0.01), (300, 0.01), (100, 0.05), (100, 0.2)]
    {
        let model = MiGNetModel::init(&arch, 20, 21).unwrap();
        let cfg = TrainConfig {
            epochs,
            batch_size: 8,
            seed: 5,
            lr,
            momentum: 0.9,
            class_weights: ClassWeights::uniform(),
        };
        let (_, trace) = train(model, &events, &cfg).unwrap();
        println!(
            "epochs={epochs:4} lr={lr:5.2} first={:.4} mid={:.4} last={:.6}",
            trace[0],
            trace[trace.len() / 2],
            trace.last().unwrap()
        );
    }
}
