use super::*;
use crate::wfdb::{code_to_symbol, is_beat_symbol};
use std::collections::BTreeSet;

fn beat(sample: u64, symbol: char) -> AnnotationEvent {
    AnnotationEvent::at(sample, symbol).unwrap()
}

#[test]
fn class_mapping_covers_the_annotation_alphabet() {
    use AamiClass::*;
    for s in ['N', 'L', 'R', 'e', 'j'] {
        assert_eq!(AamiClass::from_symbol(s), Some(Normal));
    }
    for s in ['A', 'a', 'J', 'S'] {
        assert_eq!(AamiClass::from_symbol(s), Some(Supraventricular));
    }
    for s in ['V', 'E', '!'] {
        assert_eq!(AamiClass::from_symbol(s), Some(Ventricular));
    }
    // fusion, paced, and unclassifiable beats stay out of the task
    for s in ['F', '/', 'f', 'Q', 'B', 'n', 'r'] {
        assert!(is_beat_symbol(s));
        assert_eq!(AamiClass::from_symbol(s), None);
    }
    // non-beat marks are never classified
    for s in ['+', '~', '|', '"', '[', ']', 'x'] {
        assert_eq!(AamiClass::from_symbol(s), None);
    }
    // every symbol in the class map is a beat symbol
    let mapped: Vec<char> = (1u8..=49)
        .filter_map(code_to_symbol)
        .filter(|&s| AamiClass::from_symbol(s).is_some())
        .collect();
    assert_eq!(mapped.len(), 12);
    assert!(mapped.iter().all(|&s| is_beat_symbol(s)));
}

#[test]
fn class_indices_round_trip() {
    for (i, c) in AamiClass::ALL.iter().enumerate() {
        assert_eq!(c.index(), i);
        assert_eq!(AamiClass::from_index(i), Some(*c));
    }
    assert_eq!(AamiClass::from_index(3), None);
    assert_eq!(
        AamiClass::ALL.map(AamiClass::letter),
        ['N', 'S', 'V']
    );
}

#[test]
fn timing_features_match_hand_computation() {
    // at 360 Hz: prev gap 142 samples, next gap 288 samples
    let beats = [0u64, 288, 430, 718];
    let f = temporal_features(&beats, 2, 360.0).unwrap();
    assert!((f.rr_prev - 142.0 / 360.0).abs() < 1e-12);
    assert!((f.rr_next - 288.0 / 360.0).abs() < 1e-12);
    assert!((f.rr_ratio - 142.0 / 288.0).abs() < 1e-12);
    // all three intervals fit the ten-second window around sample 430
    let expected_avg = (288.0 + 142.0 + 288.0) / 3.0 / 360.0;
    assert!((f.rr_avg - expected_avg).abs() < 1e-12);
}

#[test]
fn timing_average_falls_back_when_no_interval_fits() {
    // gaps of 20 s: no interval lies fully inside the ten-second window
    let fs = 360.0;
    let gap = (20.0 * fs) as u64;
    let beats = [0, gap, 2 * gap];
    let f = temporal_features(&beats, 1, fs).unwrap();
    assert!((f.rr_prev - 20.0).abs() < 1e-12);
    assert!((f.rr_avg - 20.0).abs() < 1e-12);
    assert!((f.rr_ratio - 1.0).abs() < 1e-12);
}

#[test]
fn timing_average_window_is_selective() {
    let fs = 360.0;
    // a tight cluster around the beat plus far-away stragglers
    let beats = [0u64, 3600, 3960, 4320, 4680, 36000];
    let f = temporal_features(&beats, 2, fs).unwrap();
    // only the three one-second intervals inside the cluster qualify
    assert!((f.rr_avg - 1.0).abs() < 1e-12);
}

#[test]
fn segmentation_cuts_the_documented_window() {
    let fs = 360.0;
    let params = SegmentParams::for_fs(fs);
    assert_eq!((params.pre, params.len), (90, 230));
    let samples: Vec<f64> = (0..2000).map(|i| i as f64).collect();
    let events = vec![
        beat(100, 'N'),
        beat(500, 'N'),
        beat(900, 'V'),
        beat(1300, 'N'),
        beat(1700, 'N'),
    ];
    let (beats, drops) = segment_beats("r", &samples, &events, fs, params).unwrap();
    // first and last lack a neighbor interval
    assert_eq!(beats.len(), 3);
    assert_eq!(drops, DropCounts { boundary: 0, edge: 2, excluded_class: 0 });
    let b = &beats[1];
    assert_eq!(b.r_sample, 900);
    assert_eq!(b.class, AamiClass::Ventricular);
    assert_eq!(b.window.len(), 230);
    // window starts 90 samples before the peak, identity signal shows it
    assert_eq!(b.window[0], 810.0);
    assert_eq!(b.window[229], 1039.0);
    assert_eq!(b.window[90], 900.0);
    assert!((b.temporal.rr_prev - 400.0 / 360.0).abs() < 1e-12);
}

#[test]
fn segmentation_counts_each_kind_of_drop() {
    let fs = 360.0;
    let params = SegmentParams::for_fs(fs);
    let samples: Vec<f64> = vec![0.0; 1500];
    let events = vec![
        beat(20, 'N'),   // edge (first)
        beat(80, 'N'),   // boundary: window would start before sample 0
        beat(400, 'F'),  // excluded class
        beat(800, 'N'),  // kept
        beat(1380, 'V'), // boundary: window would run past the end
        beat(1450, 'N'), // edge (last)
    ];
    let (beats, drops) = segment_beats("r", &samples, &events, fs, params).unwrap();
    assert_eq!(beats.len(), 1);
    assert_eq!(beats[0].r_sample, 800);
    assert_eq!(drops, DropCounts { boundary: 2, edge: 2, excluded_class: 1 });
    assert_eq!(drops.total(), 5);
}

#[test]
fn segmentation_ignores_non_beat_marks_for_timing() {
    let fs = 360.0;
    let params = SegmentParams::for_fs(fs);
    let samples: Vec<f64> = vec![0.0; 3000];
    let mut rhythm = AnnotationEvent::at(850, '+').unwrap();
    rhythm.aux = Some("(AFIB".into());
    let events = vec![
        beat(400, 'N'),
        beat(760, 'N'),
        rhythm,
        beat(1120, 'N'),
        beat(1480, 'N'),
    ];
    let (beats, _) = segment_beats("r", &samples, &events, fs, params).unwrap();
    assert_eq!(beats.len(), 2);
    // the rhythm mark between beats must not split the 360-sample interval
    assert!((beats[0].temporal.rr_next - 1.0).abs() < 1e-12);
    assert!((beats[1].temporal.rr_prev - 1.0).abs() < 1e-12);
}

#[test]
fn segmentation_rejects_disordered_beats() {
    let params = SegmentParams::for_fs(360.0);
    let samples: Vec<f64> = vec![0.0; 1000];
    let events = vec![beat(500, 'N'), beat(400, 'N'), beat(600, 'N')];
    assert!(segment_beats("r", &samples, &events, 360.0, params).is_err());
}

#[test]
fn record_split_is_patient_disjoint_and_complete() {
    assert_eq!(TRAIN_RECORDS.len(), 22);
    assert_eq!(EVAL_RECORDS.len(), 22);
    assert_eq!(EXCLUDED_RECORDS.len(), 4);
    let train: BTreeSet<&str> = TRAIN_RECORDS.into_iter().collect();
    let eval: BTreeSet<&str> = EVAL_RECORDS.into_iter().collect();
    let excluded: BTreeSet<&str> = EXCLUDED_RECORDS.into_iter().collect();
    assert!(train.is_disjoint(&eval));
    assert!(train.is_disjoint(&excluded));
    assert!(eval.is_disjoint(&excluded));
    assert_eq!(train.len() + eval.len() + excluded.len(), 48);

    assert_eq!(split_for_record("101"), Some(DatasetSplit::Train));
    assert_eq!(split_for_record("230"), Some(DatasetSplit::Train));
    assert_eq!(split_for_record("100"), Some(DatasetSplit::Eval));
    assert_eq!(split_for_record("111"), Some(DatasetSplit::Eval));
    assert_eq!(split_for_record("234"), Some(DatasetSplit::Eval));
    assert_eq!(split_for_record("102"), None);
    assert_eq!(split_for_record("999"), None);
}

#[test]
fn feature_stats_standardize_training_rows() {
    let rows: Vec<[f64; 4]> = (0..50)
        .map(|i| {
            let t = i as f64;
            [t, 2.0 * t + 1.0, (t * 0.37).sin(), 5.0]
        })
        .collect();
    let stats = FeatureStats::fit(&rows).unwrap();
    let standardized: Vec<[f64; 4]> = rows.iter().map(|&r| stats.apply(r)).collect();
    for col in 0..4 {
        let n = standardized.len() as f64;
        let mean: f64 = standardized.iter().map(|r| r[col]).sum::<f64>() / n;
        let var: f64 = standardized.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-10, "column {col} mean {mean}");
        if col == 3 {
            // constant column: zero-centered, unit scale guard
            assert!(var.abs() < 1e-12);
        } else {
            assert!((var - 1.0).abs() < 1e-9, "column {col} var {var}");
        }
    }
    // applying train statistics to new data must not refit
    let shifted = stats.apply([1000.0, 0.0, 0.0, 5.0]);
    assert!(shifted[0] > 10.0);
    assert!(shifted[3].abs() < 1e-12);
    assert!(FeatureStats::fit(&[]).is_err());
}
