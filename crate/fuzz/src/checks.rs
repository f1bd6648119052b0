//! Invariants checked on arbitrary input. Shared by the fuzz targets and the
//! seed replay test in the core crate.

use scalar_probe::canonical::{
    canonicalize_str, canonicalize_stream, from_scientific, scan_numbers, to_scientific,
};
use scalar_probe::embedding::EmbeddingTable;
use scalar_probe::harness::{read_pairs, read_products};
use scalar_probe::probe::TrainedProbe;
use scalar_probe::scalar::{
    build_distribution, detect_modality, Attribute, BucketScheme, ModalityParams, ScalarDataset,
};

pub fn canonicalize(data: &[u8]) {
    let mut out = Vec::new();
    let streamed = canonicalize_stream(data, &mut out);
    let Ok(text) = std::str::from_utf8(data) else {
        assert!(streamed.is_err());
        return;
    };
    let (once, stats) = canonicalize_str(text);
    assert_eq!(
        streamed.unwrap().literals_rewritten,
        stats.literals_rewritten
    );
    assert_eq!(out, once.as_bytes());
    let (twice, again) = canonicalize_str(&once);
    assert_eq!(twice, once);
    assert_eq!(again.literals_rewritten, 0);
    for lit in scan_numbers(text) {
        assert_eq!(from_scientific(&to_scientific(&lit)).unwrap(), lit.value());
    }
}

pub fn from_scientific_str(data: &[u8]) {
    if let Ok(s) = std::str::from_utf8(data) {
        _ = from_scientific(s);
    }
}

pub fn records_tsv(data: &[u8]) {
    let Ok((ds, _)) = ScalarDataset::read_tsv(data) else {
        return;
    };
    let scheme = BucketScheme::decimal();
    for attribute in Attribute::ALL {
        for (_, records) in ds.objects(attribute) {
            if let Ok((dist, _)) = build_distribution(records, &scheme) {
                let label = detect_modality(&dist, &ModalityParams::default());
                assert!((1..=6).contains(&label.n_peaks));
            }
        }
    }
}

pub fn embedding_table(data: &[u8]) {
    let Ok(table) = EmbeddingTable::read(data) else {
        return;
    };
    let mut out = Vec::new();
    table.write(&mut out).unwrap();
    assert_eq!(EmbeddingTable::read(out.as_slice()).unwrap(), table);
}

pub fn probe_json(data: &[u8]) {
    let Ok(probe) = serde_json::from_slice::<TrainedProbe>(data) else {
        return;
    };
    let text = serde_json::to_string(&probe).unwrap();
    let back: TrainedProbe = serde_json::from_str(&text).unwrap();
    assert_eq!(back, probe);
    _ = probe.predict(&vec![0.0; probe.features.input_dim()]);
}

pub fn pairs_tsv(data: &[u8]) {
    if let Ok(pairs) = read_pairs(data) {
        assert!(pairs.iter().all(|p| p.object_a != p.object_b));
    }
}

pub fn products_json(data: &[u8]) {
    for scheme in [BucketScheme::decimal(), BucketScheme::power_of_four()] {
        if let Ok(products) = read_products(data, &scheme) {
            for p in &products {
                assert!((p.distribution.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
