//! Serialize/parse round trip over generated annotation documents.

use proptest::prelude::*;

use segprobe_core::annotation::{parse_textgrid, serialize_textgrid, AnnotationDoc, Interval, IntervalTier, Point, PointTier, Tier};

fn label() -> impl Strategy<Value = String> {
    prop_oneof![Just(String::new()), "[a-zA-Zæɑɛʃ\" ]{1,8}"]
}

/// Interval tier over [0, xmax] split at sorted cut points.
fn interval_tier(xmax: f64) -> impl Strategy<Value = Tier> {
    (prop::collection::vec(0.0..1.0f64, 0..8), prop::collection::vec(label(), 9), "[a-z]{1,6}").prop_map(move |(mut cuts, labels, name)| {
        cuts.iter_mut().for_each(|c| *c *= xmax);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut bounds = vec![0.0];
        bounds.extend(cuts.into_iter().filter(|c| *c > 0.0 && *c < xmax));
        bounds.push(xmax);
        let intervals = bounds.windows(2).zip(labels).map(|(w, l)| Interval::new(w[0], w[1], l)).collect();
        Tier::Interval(IntervalTier { name, xmin: 0.0, xmax, intervals })
    })
}

fn point_tier(xmax: f64) -> impl Strategy<Value = Tier> {
    prop::collection::vec((0.0..1.0f64, label()), 0..4).prop_map(move |mut pts| {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points = pts.into_iter().map(|(t, mark)| Point { time: t * xmax, mark }).collect();
        Tier::Point(PointTier { name: "points".into(), xmin: 0.0, xmax, points })
    })
}

fn document() -> impl Strategy<Value = AnnotationDoc> {
    (0.5..30.0f64).prop_flat_map(|xmax| {
        prop::collection::vec(prop_oneof![4 => interval_tier(xmax), 1 => point_tier(xmax)], 0..4)
            .prop_map(move |tiers| AnnotationDoc { xmin: 0.0, xmax, tiers })
    })
}

proptest! {
    #[test]
    fn round_trip(doc in document()) {
        let text = serialize_textgrid(&doc).unwrap();
        let back = parse_textgrid(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize_textgrid(&back).unwrap(), text);
    }
}
