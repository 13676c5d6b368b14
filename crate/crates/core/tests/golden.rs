//! Byte-level format checks against committed files. Set `CARBONGRID_BLESS=1`
//! to regenerate them after an intentional format change.

mod common;

use std::path::PathBuf;

use carbongrid::case_io::{read_enriched, write_enriched};
use carbongrid::mpp::{
    explore_regions, load_table, load_table_for, read_table, write_table, LoadDomain, MppError,
};
use carbongrid::opf::CostModel;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check(name: &str, bytes: &[u8]) {
    let path = golden(name);
    if std::env::var_os("CARBONGRID_BLESS").is_some() {
        std::fs::write(&path, bytes).unwrap();
    }
    let stored = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        stored == bytes,
        "{name} differs from the committed golden file"
    );
}

fn two_bus_table() -> carbongrid::mpp::RegionTable {
    let net = common::two_bus();
    let cost = CostModel::from_network(&net.network).unwrap();
    explore_regions(
        &net,
        &cost,
        &LoadDomain::new(vec![10.0], vec![60.0]).unwrap(),
        &[20.0],
    )
    .unwrap()
}

#[test]
fn enriched_two_bus_document() {
    let net = common::two_bus();
    let text = write_enriched(&net);
    check("case2.enriched.json", text.as_bytes());
    let stored = std::fs::read_to_string(golden("case2.enriched.json")).unwrap();
    assert_eq!(read_enriched(&stored).unwrap(), net);
}

#[test]
fn enriched_fourteen_bus_document() {
    let net = common::congested14();
    check(
        "case14_congested.enriched.json",
        write_enriched(&net).as_bytes(),
    );
}

#[test]
fn two_bus_region_table() {
    let table = two_bus_table();
    check("case2.cgrt", &write_table(&table));
    let back = load_table(golden("case2.cgrt")).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.regions.len(), 2);
    assert_eq!(back.query_lmce(&[50.0]).unwrap(), &[0.3621]);
}

#[test]
fn golden_table_is_bound_to_its_network() {
    assert!(load_table_for(golden("case2.cgrt"), &common::two_bus()).is_ok());
    let other = load_table_for(golden("case2.cgrt"), &common::congested14());
    assert!(matches!(other, Err(MppError::StaleTable { .. })));
}

#[test]
fn damaged_tables_are_rejected() {
    let bytes = std::fs::read(golden("case2.cgrt")).unwrap();
    for cut in [1, 8, 33, bytes.len() / 2] {
        assert!(
            matches!(
                read_table(&bytes[..bytes.len() - cut]),
                Err(MppError::Checksum)
            ),
            "cut {cut}"
        );
    }
    for pos in [10, 60, bytes.len() / 2, bytes.len() - 1] {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x01;
        assert!(
            matches!(read_table(&bad), Err(MppError::Checksum)),
            "flip at {pos}"
        );
    }
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(read_table(&bad_magic), Err(MppError::Corrupt(_))));
}
